// veil-mock: standalone deterministic chat-endpoint double sharing the
// wire format, so gateway and pipeline runs can be exercised without any
// model. Optionally records raw request bodies for egress inspection.

#include <fstream>
#include <iostream>
#include <mutex>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "veil/corpus.hpp"
#include "veil/testkit.hpp"

int main(int argc, char** argv) {
    CLI::App app{"deterministic mock chat endpoint"};
    std::string behavior_name = "identity";
    int port = 8200;
    std::string fixture_path;
    std::uint64_t seed = 7;
    std::string record_path;
    app.add_option("--behavior", behavior_name,
                   "oracle | identity | adversarial_preamble | truncator | "
                   "echo_upstream | regex_judge");
    app.add_option("--port", port, "listen port");
    app.add_option("--fixture", fixture_path,
                   "normalized JSONL fixture (oracle behaviors)");
    app.add_option("--seed", seed, "surrogate seed");
    app.add_option("--record", record_path,
                   "append raw request bodies to this file");
    CLI11_PARSE(app, argc, argv);

    auto behavior = veil::testkit::behavior_from_string(behavior_name);
    if (!behavior) {
        std::cerr << "error: unknown behavior '" << behavior_name << "'\n";
        return 2;
    }

    veil::Corpus fixture;
    bool has_fixture = false;
    if (!fixture_path.empty()) {
        try {
            fixture = veil::load_corpus(fixture_path,
                                        veil::CorpusFormat::normalized_jsonl);
            has_fixture = true;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    }

    std::mutex record_mutex;
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                            httplib::Response& res) {
        if (!record_path.empty()) {
            std::lock_guard<std::mutex> lock(record_mutex);
            std::ofstream out(record_path, std::ios::app);
            out << req.body << '\n';
        }
        auto mock = veil::testkit::mock_respond(
            *behavior, req.body, has_fixture ? &fixture : nullptr, seed);
        res.status = mock.status;
        res.set_content(mock.body, "application/json");
    });

    std::cout << "mock '" << behavior_name << "' listening on 127.0.0.1:"
              << port << '\n';
    if (!server.listen("127.0.0.1", port)) {
        std::cerr << "error: cannot bind port " << port << '\n';
        return 2;
    }
    return 0;
}
