// veil: anonymize conversational corpora, score privacy/utility metrics,
// and serve the anonymizing chat gateway.
//
// Exit codes: 0 success, 2 configuration error, 3 endpoint error,
// 4 partial results.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "veil/benchmark.hpp"
#include "veil/gateway.hpp"
#include "veil/pipeline.hpp"
#include "veil/report.hpp"
#include "veil/rules.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEndpoint = 3;
constexpr int kExitPartial = 4;

struct CorpusArgs {
    std::string corpus;
    std::string format = "normalized_jsonl";
    std::string abcd;
    std::string abcd_map;

    void attach(CLI::App* app) {
        app->add_option("--corpus", corpus, "corpus file path");
        app->add_option("--format", format,
                        "corpus format: normalized_jsonl or abcd_raw")
            ->check(CLI::IsMember({"normalized_jsonl", "abcd_raw"}));
        app->add_option("--abcd", abcd,
                        "raw ABCD export path (implies --format abcd_raw)");
        app->add_option("--abcd-map", abcd_map,
                        "ABCD slot mapping file (see data/abcd_map.json)");
    }

    void resolve(veil::bench::BenchmarkConfig* cfg) const {
        cfg->corpus_path = corpus;
        cfg->corpus_format = veil::CorpusFormat::normalized_jsonl;
        if (!abcd.empty()) {
            cfg->corpus_path = abcd;
            cfg->corpus_format = veil::CorpusFormat::abcd_raw;
        } else if (format == "abcd_raw") {
            cfg->corpus_format = veil::CorpusFormat::abcd_raw;
        }
        cfg->abcd_mapping_path = abcd_map;
        if (cfg->corpus_path.empty())
            throw CLI::ValidationError("--corpus or --abcd is required");
    }
};

std::vector<veil::SanitizeMethod> parse_methods(
    const std::vector<std::string>& names) {
    std::vector<veil::SanitizeMethod> out;
    for (const auto& name : names) {
        auto m = veil::method_from_string(name);
        if (!m || *m == veil::SanitizeMethod::external)
            throw CLI::ValidationError("unknown method '" + name + "'");
        out.push_back(*m);
    }
    return out;
}

int report_exit_code(const std::vector<veil::metrics::MetricReport>& rows) {
    bool any_available = false, any_trouble = false;
    for (const auto& r : rows) {
        if (r.available) any_available = true;
        if (!r.available || r.partial_conversations > 0) any_trouble = true;
    }
    if (!any_available) return kExitEndpoint;
    if (any_trouble) return kExitPartial;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"on-premise PII anonymization engine and benchmark"};
    app.require_subcommand(1);

    veil::bench::BenchmarkConfig cfg;
    cfg.llm = veil::llm_endpoint_from_env();
    cfg.judge = veil::judge_endpoint_from_env();

    // --- anonymize ---------------------------------------------------------
    auto* anonymize = app.add_subcommand(
        "anonymize", "sanitize a corpus and write artifacts");
    CorpusArgs anon_corpus;
    anon_corpus.attach(anonymize);
    std::string anon_method = "rule_substitute";
    std::string anon_out = "out";
    bool anon_stamp = false;
    anonymize->add_option("--method", anon_method,
                          "llm | rule_redact | rule_substitute");
    anonymize->add_option("--out", anon_out, "output directory");
    anonymize->add_option("--seed", cfg.seed, "substitution seed");
    anonymize->add_option("--rules", cfg.rules_path, "recognizer rules JSON");
    anonymize->add_option("--threshold", cfg.threshold,
                          "detection confidence threshold");
    anonymize->add_option("--prompt", cfg.prompt_path,
                          "prompt template file");
    anonymize->add_option("--retries", cfg.retries, "LLM retry budget");
    anonymize->add_option("--workers", cfg.workers, "parallel conversations");
    anonymize->add_flag("--stamp", anon_stamp,
                        "record wall-clock timestamps in provenance");

    // --- evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand(
        "evaluate", "score an externally produced sanitized JSONL");
    CorpusArgs eval_corpus;
    eval_corpus.attach(evaluate);
    std::string eval_sanitized, eval_tables, eval_tag = "external";
    std::string eval_out;
    evaluate->add_option("--sanitized", eval_sanitized,
                         "sanitized JSONL path")->required();
    evaluate->add_option("--tables", eval_tables,
                         "directory of <id>.subtable.jsonl sidecars");
    evaluate->add_option("--method-tag", eval_tag, "row label");
    evaluate->add_option("--out", eval_out, "write report files here");
    evaluate->add_option("--seed", cfg.seed, "sampling seed");
    evaluate->add_option("--qa-subset", cfg.qa_subset, "Q&A sample size");
    evaluate->add_option("--topic-k", cfg.topic_k, "topic cluster count");
    evaluate->add_option("--lexicon", cfg.lexicon_path,
                         "sentiment lexicon file");
    evaluate->add_option("--probe-dim", cfg.probe_dim, "probe dimension");
    evaluate->add_option("--probe-lambda", cfg.probe_lambda,
                         "probe ridge strength");

    // --- benchmark ---------------------------------------------------------
    auto* benchmark = app.add_subcommand(
        "benchmark", "anonymize with each method and emit a report");
    CorpusArgs bench_corpus;
    bench_corpus.attach(benchmark);
    std::vector<std::string> bench_methods;
    benchmark->add_option("--method", bench_methods,
                          "method to run (repeatable)")
        ->required();
    benchmark->add_option("--out", cfg.out_dir, "output directory")
        ->required();
    benchmark->add_option("--seed", cfg.seed, "master seed");
    benchmark->add_option("--qa-subset", cfg.qa_subset, "Q&A sample size");
    benchmark->add_option("--topic-k", cfg.topic_k, "topic cluster count");
    benchmark->add_option("--rules", cfg.rules_path, "recognizer rules JSON");
    benchmark->add_option("--threshold", cfg.threshold,
                          "detection confidence threshold");
    benchmark->add_option("--lexicon", cfg.lexicon_path,
                          "sentiment lexicon file");
    benchmark->add_option("--probe-dim", cfg.probe_dim, "probe dimension");
    benchmark->add_option("--probe-lambda", cfg.probe_lambda,
                          "probe ridge strength");
    benchmark->add_option("--prompt", cfg.prompt_path, "prompt template file");
    benchmark->add_option("--retries", cfg.retries, "LLM retry budget");
    benchmark->add_option("--workers", cfg.workers, "parallel conversations");

    // --- serve -------------------------------------------------------------
    auto* serve = app.add_subcommand("serve", "run the anonymizing gateway");
    std::string serve_config;
    int serve_port = -1;
    serve->add_option("--config", serve_config, "gateway config JSON")
        ->required();
    serve->add_option("--port", serve_port, "override listen port");

    // --- report ------------------------------------------------------------
    auto* render = app.add_subcommand("report",
                                      "render saved reports.json");
    std::string report_in, report_format = "markdown";
    render->add_option("--in", report_in, "reports.json path")->required();
    render->add_option("--format", report_format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (anonymize->parsed()) {
            anon_corpus.resolve(&cfg);
            auto methods = parse_methods({anon_method});
            std::vector<std::string> warnings;
            auto corpus = veil::load_corpus(cfg.corpus_path,
                                            cfg.corpus_format, &warnings,
                                            cfg.abcd_mapping_path);
            for (const auto& w : warnings)
                std::cerr << "warning: " << w << '\n';

            auto rule_set = cfg.rules_path.empty()
                                ? veil::rules::default_rules()
                                : veil::rules::load_rules(cfg.rules_path);
            auto prompt = cfg.prompt_path.empty()
                              ? veil::llm::PromptTemplate::builtin()
                              : veil::llm::PromptTemplate::from_file(
                                    cfg.prompt_path);
            std::string stamp =
                anon_stamp ? veil::gateway::detail::now_iso8601() : "";

            std::vector<veil::SanitizedConversation> sanitized;
            for (const auto& conv : corpus.conversations) {
                veil::SanitizedConversation s;
                if (methods[0] == veil::SanitizeMethod::llm) {
                    if (!cfg.llm.configured()) {
                        std::cerr << "error: ANON_LLM_BASE_URL not set\n";
                        return kExitEndpoint;
                    }
                    veil::DecodingParams params;
                    params.seed = cfg.seed;
                    s = veil::llm::anonymize_llm(cfg.llm, conv, prompt,
                                                 params, cfg.retries);
                } else {
                    auto mode =
                        methods[0] == veil::SanitizeMethod::rule_redact
                            ? veil::rules::RuleMode::redact
                            : veil::rules::RuleMode::substitute;
                    s = veil::rules::anonymize_rule_based(
                        conv, rule_set, cfg.threshold, mode, cfg.seed);
                }
                s.provenance.timestamp = stamp;
                sanitized.push_back(std::move(s));
            }
            namespace fs = std::filesystem;
            fs::create_directories(fs::path(anon_out) / "tables");
            veil::save_sanitized_jsonl(
                sanitized, (fs::path(anon_out) / "sanitized.jsonl").string());
            std::size_t partial = 0;
            for (const auto& s : sanitized) {
                if (s.partial()) ++partial;
                veil::save_table(s.table,
                                 (fs::path(anon_out) / "tables" /
                                  (s.conversation_id + ".subtable.jsonl"))
                                     .string());
            }
            std::cout << "sanitized " << sanitized.size()
                      << " conversations (" << partial << " partial) -> "
                      << anon_out << '\n';
            return partial == 0 ? kExitOk : kExitPartial;
        }

        if (evaluate->parsed()) {
            eval_corpus.resolve(&cfg);
            auto result = veil::bench::evaluate_external(
                cfg, eval_tag, eval_sanitized, eval_tables);
            for (const auto& line : result.log)
                std::cerr << "note: " << line << '\n';
            std::cout << result.markdown;
            if (!eval_out.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(eval_out);
                std::ofstream csv(fs::path(eval_out) / "report.csv");
                csv << result.csv;
                veil::report::save_reports_json(
                    result.reports,
                    (fs::path(eval_out) / "reports.json").string());
            }
            return report_exit_code(result.reports);
        }

        if (benchmark->parsed()) {
            bench_corpus.resolve(&cfg);
            cfg.methods = parse_methods(bench_methods);
            auto result = veil::bench::run_benchmark(cfg);
            for (const auto& line : result.log)
                std::cerr << "note: " << line << '\n';
            std::cout << result.markdown;
            return report_exit_code(result.reports);
        }

        if (serve->parsed()) {
            auto gw_cfg = veil::gateway::load_gateway_config(serve_config);
            if (serve_port >= 0) gw_cfg.listen_port = serve_port;
            auto audit = std::make_shared<veil::gateway::AuditLog>(
                gw_cfg.audit_log_path);
            veil::gateway::GatewayServer server(gw_cfg, audit);
            std::cout << "gateway listening on " << gw_cfg.listen_host << ':'
                      << gw_cfg.listen_port << " -> "
                      << gw_cfg.upstream_base_url << '\n';
            server.run();
            return kExitOk;
        }

        if (render->parsed()) {
            auto reports = veil::report::load_reports_json(report_in);
            auto format = report_format == "csv"
                              ? veil::report::ReportFormat::csv
                              : veil::report::ReportFormat::markdown;
            std::cout << veil::report::render_report(reports, format);
            return kExitOk;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const veil::CorpusError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
