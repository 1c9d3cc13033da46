#pragma once

// Benchmark orchestration: anonymize a corpus with each selected method,
// persist sanitized JSONL plus table sidecars, and score every axis into
// one report row per method. All randomness flows from the config seed;
// with mock endpoints the produced artifacts are byte-stable across runs.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "veil/chat_client.hpp"
#include "veil/corpus.hpp"
#include "veil/metrics.hpp"
#include "veil/pipeline.hpp"
#include "veil/probe.hpp"
#include "veil/report.hpp"
#include "veil/rules.hpp"
#include "veil/sanitized.hpp"
#include "veil/sentiment.hpp"
#include "veil/topic.hpp"

namespace veil::bench {

struct BenchmarkConfig {
    std::string corpus_path;
    CorpusFormat corpus_format = CorpusFormat::normalized_jsonl;
    std::string abcd_mapping_path;
    std::vector<SanitizeMethod> methods;
    std::string out_dir;
    std::uint64_t seed = 7;
    std::size_t qa_subset = 50;
    std::size_t topic_k = 33;
    double threshold = 0.5;
    std::string rules_path;
    std::string lexicon_path;
    std::size_t probe_dim = probe::kDefaultDim;
    double probe_lambda = probe::kDefaultLambda;
    double train_fraction = 0.8;
    int retries = 3;
    std::string prompt_path;
    ChatEndpoint llm;    // anonymizer endpoint (method=llm)
    ChatEndpoint judge;  // Q&A judge endpoint
    std::size_t workers = 4;

    void validate() const {
        if (methods.empty())
            throw std::runtime_error("benchmark config selects no methods");
        if (corpus_path.empty())
            throw std::runtime_error("benchmark config has no corpus path");
    }
};

struct BenchmarkResult {
    std::vector<metrics::MetricReport> reports;
    std::vector<std::string> log;
    std::string csv;
    std::string markdown;
};

namespace detail {

// Index-ordered parallel map over conversations; outputs are deterministic
// regardless of scheduling because each conversation is independent.
template <typename Fn>
std::vector<SanitizedConversation> sanitize_all(const Corpus& corpus,
                                                std::size_t workers, Fn fn) {
    const std::size_t n = corpus.size();
    std::vector<SanitizedConversation> out(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            out[i] = fn(corpus.conversations[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            out[i] = fn(corpus.conversations[i]);
        }
    };
    std::vector<std::future<void>> futures;
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
        futures.push_back(std::async(std::launch::async, worker));
    for (auto& f : futures) f.get();
    return out;
}

inline bool endpoint_reachable(const ChatEndpoint& endpoint) {
    if (!endpoint.configured()) return false;
    DecodingParams params;
    params.max_tokens = 8;
    auto res = chat_complete(endpoint, "ping", params);
    return res.status != 0;  // any HTTP answer counts as reachable
}

inline void persist_method_artifacts(
    const std::string& out_dir, SanitizeMethod method,
    const std::vector<SanitizedConversation>& sanitized) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(out_dir) / std::string(to_string(method));
    fs::create_directories(dir / "tables");
    save_sanitized_jsonl(sanitized, (dir / "sanitized.jsonl").string());
    for (const auto& s : sanitized)
        save_table(s.table, (dir / "tables" /
                             (s.conversation_id + ".subtable.jsonl"))
                                .string());
}

}  // namespace detail

// Scores one (corpus, sanitized) pairing; shared by `benchmark` and
// `evaluate`.
inline metrics::MetricReport score_method(
    const std::string& method_tag, const Corpus& corpus,
    const std::vector<SanitizedConversation>& sanitized,
    const BenchmarkConfig& config, const metrics::Lexicon& lexicon,
    metrics::EmbeddingProvider& provider,
    const std::optional<metrics::TopicModel>& topic_model,
    const Corpus& qa_subset_corpus, const metrics::QaTemplates& qa_templates,
    const metrics::JudgeFn& judge, std::vector<std::string>* log) {
    metrics::MetricReport row;
    row.method = method_tag;
    row.counts.conversations = corpus.size();
    for (const auto& s : sanitized)
        if (s.partial()) ++row.partial_conversations;

    std::size_t terms = 0;
    row.privacy_recall = metrics::privacy_recall(corpus, sanitized, &terms);
    row.counts.pii_values = terms;
    row.sentiment_accuracy =
        metrics::sentiment_accuracy(corpus, sanitized, lexicon);

    if (topic_model) {
        auto stats = metrics::topic_distance_stats(corpus, sanitized,
                                                   *topic_model, provider);
        row.topic_mean = stats.mean;
        row.topic_std = stats.stddev;
    } else if (log) {
        log->push_back("topic metrics skipped: no topic model");
    }

    if (judge) {
        auto outcome = metrics::qa_evaluate(qa_subset_corpus, sanitized,
                                            qa_templates, judge, log);
        row.qa_accuracy = outcome.qa_accuracy;
        row.qa_true_accuracy = outcome.qa_true_accuracy;
        row.counts.qa_items = outcome.evaluated_items;
        row.qa_excluded = outcome.excluded_items;
    } else if (log) {
        log->push_back("qa metrics skipped: judge endpoint not configured");
    }

    // Trainability: train on sanitized text, label with the original
    // conversation's compound, report held-out MAE.
    auto [train, test] = split_corpus(corpus, config.train_fraction,
                                      config.seed);
    auto pairs_for = [&](const Corpus& part) {
        std::vector<probe::TrainPair> pairs;
        for (const auto& conv : part.conversations) {
            const auto& san = metrics::sanitized_for(sanitized, conv.id);
            pairs.push_back(
                {san.joined_text(),
                 metrics::sentiment_compound(conv.joined_text(), lexicon)});
        }
        return pairs;
    };
    auto train_pairs = pairs_for(train);
    auto test_pairs = pairs_for(test);
    if (train_pairs.size() >= 2 && !test_pairs.empty()) {
        auto model = probe::fit_probe(train_pairs, config.probe_dim,
                                      config.probe_lambda, config.seed);
        row.probe_mae = probe::probe_mae(model, test_pairs);
    } else if (log) {
        log->push_back("probe skipped: corpus too small to split");
    }
    return row;
}

// Scores an externally produced sanitized JSONL (any tool that emits the
// documented schema) against the corpus; table sidecars are picked up from
// `tables_dir` when present so inverse-mapped Q&A still works.
inline BenchmarkResult evaluate_external(const BenchmarkConfig& config,
                                         const std::string& method_tag,
                                         const std::string& sanitized_path,
                                         const std::string& tables_dir) {
    namespace fs = std::filesystem;
    BenchmarkResult result;
    Corpus corpus = load_corpus(config.corpus_path, config.corpus_format,
                                &result.log, config.abcd_mapping_path);
    auto sanitized = load_sanitized_jsonl(sanitized_path);
    if (!tables_dir.empty()) {
        for (auto& s : sanitized) {
            fs::path p = fs::path(tables_dir) /
                         (s.conversation_id + ".subtable.jsonl");
            if (fs::exists(p))
                s.table = load_table(p.string(), s.conversation_id);
        }
    }

    auto lexicon = config.lexicon_path.empty()
                       ? metrics::Lexicon::builtin_mini()
                       : metrics::Lexicon::from_file(config.lexicon_path);
    metrics::HashedTfidfProvider provider;
    std::vector<std::string> original_texts;
    for (const auto& conv : corpus.conversations)
        original_texts.push_back(conv.joined_text());
    provider.fit(original_texts);
    std::optional<metrics::TopicModel> topic_model;
    std::size_t k = std::min(config.topic_k, corpus.size());
    if (k >= 2)
        topic_model = metrics::fit_topic_model(original_texts, provider, k,
                                               config.seed);
    Corpus qa_subset_corpus = sample_subset(
        corpus, std::min(config.qa_subset, corpus.size()), config.seed);
    metrics::JudgeFn judge;
    if (config.judge.configured() && detail::endpoint_reachable(config.judge)) {
        DecodingParams params;
        params.seed = config.seed;
        judge = metrics::judge_from_endpoint(config.judge, params);
    }
    auto row = score_method(method_tag, corpus, sanitized, config, lexicon,
                            provider, topic_model, qa_subset_corpus,
                            metrics::QaTemplates::builtin(), judge,
                            &result.log);
    result.reports.push_back(std::move(row));
    result.csv = report::render_report(result.reports,
                                       report::ReportFormat::csv);
    result.markdown = report::render_report(result.reports,
                                            report::ReportFormat::markdown);
    return result;
}

inline BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    BenchmarkResult result;

    Corpus corpus = load_corpus(config.corpus_path, config.corpus_format,
                                &result.log, config.abcd_mapping_path);
    if (corpus.conversations.empty())
        throw std::runtime_error("benchmark corpus is empty");

    auto lexicon = config.lexicon_path.empty()
                       ? metrics::Lexicon::builtin_mini()
                       : metrics::Lexicon::from_file(config.lexicon_path);
    auto rule_set = config.rules_path.empty()
                        ? rules::default_rules()
                        : rules::load_rules(config.rules_path);
    auto prompt = config.prompt_path.empty()
                      ? llm::PromptTemplate::builtin()
                      : llm::PromptTemplate::from_file(config.prompt_path);

    metrics::HashedTfidfProvider provider;
    std::vector<std::string> original_texts;
    for (const auto& conv : corpus.conversations)
        original_texts.push_back(conv.joined_text());
    provider.fit(original_texts);

    std::optional<metrics::TopicModel> topic_model;
    std::size_t k = config.topic_k;
    if (k > corpus.size()) {
        result.log.push_back("topic K clamped from " + std::to_string(k) +
                             " to corpus size " +
                             std::to_string(corpus.size()));
        k = corpus.size();
    }
    if (k >= 2)
        topic_model = metrics::fit_topic_model(original_texts, provider, k,
                                               config.seed);

    Corpus qa_subset_corpus = sample_subset(
        corpus, std::min(config.qa_subset, corpus.size()), config.seed);

    metrics::JudgeFn judge;
    if (config.judge.configured()) {
        if (detail::endpoint_reachable(config.judge)) {
            DecodingParams params;
            params.seed = config.seed;
            judge = metrics::judge_from_endpoint(config.judge, params);
        } else {
            result.log.push_back("judge endpoint unreachable: " +
                                 config.judge.base_url);
        }
    }

    auto qa_templates = metrics::QaTemplates::builtin();

    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

    for (auto method : config.methods) {
        std::vector<SanitizedConversation> sanitized;
        if (method == SanitizeMethod::llm) {
            if (!detail::endpoint_reachable(config.llm)) {
                metrics::MetricReport row;
                row.method = std::string(to_string(method));
                row.available = false;
                row.note = "anonymizer endpoint unreachable";
                result.log.push_back("method llm skipped: endpoint "
                                     "unreachable");
                result.reports.push_back(std::move(row));
                continue;
            }
            DecodingParams params;
            params.seed = config.seed;
            sanitized = detail::sanitize_all(
                corpus, config.workers, [&](const Conversation& conv) {
                    return llm::anonymize_llm(config.llm, conv, prompt,
                                              params, config.retries);
                });
        } else if (method == SanitizeMethod::rule_redact ||
                   method == SanitizeMethod::rule_substitute) {
            auto mode = method == SanitizeMethod::rule_redact
                            ? rules::RuleMode::redact
                            : rules::RuleMode::substitute;
            sanitized = detail::sanitize_all(
                corpus, config.workers, [&](const Conversation& conv) {
                    return rules::anonymize_rule_based(
                        conv, rule_set, config.threshold, mode, config.seed);
                });
        } else {
            throw std::runtime_error(
                "benchmark cannot synthesize method 'external'; use the "
                "evaluate flow");
        }

        if (!config.out_dir.empty())
            detail::persist_method_artifacts(config.out_dir, method,
                                             sanitized);

        auto row = score_method(std::string(to_string(method)), corpus,
                                sanitized, config, lexicon, provider,
                                topic_model, qa_subset_corpus, qa_templates,
                                judge, &result.log);
        result.reports.push_back(std::move(row));
    }

    result.csv = report::render_report(result.reports,
                                       report::ReportFormat::csv);
    result.markdown = report::render_report(result.reports,
                                            report::ReportFormat::markdown);
    if (!config.out_dir.empty()) {
        std::ofstream csv(fs::path(config.out_dir) / "report.csv");
        csv << result.csv;
        std::ofstream md(fs::path(config.out_dir) / "report.md");
        md << result.markdown;
        report::save_reports_json(
            result.reports,
            (fs::path(config.out_dir) / "reports.json").string());
    }
    return result;
}

}  // namespace veil::bench
