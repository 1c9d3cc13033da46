#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "veil/pipeline.hpp"
#include "veil/testkit.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace veil;
using namespace veil::llm;

TEST_CASE("build_prompt substitutes the single placeholder", "[pipeline]") {
    auto tmpl = PromptTemplate::builtin();
    auto prompt = build_prompt(tmpl, "hi");
    CHECK(prompt.rfind("Redact and replace the words", 0) == 0);
    CHECK(prompt.size() >= 7);
    CHECK(prompt.substr(prompt.size() - 7) == "Text:hi");

    CHECK(build_prompt(tmpl, "").substr(
              build_prompt(tmpl, "").size() - 5) == "Text:");

    auto tricky = build_prompt(tmpl, "keep {original_text} literal");
    CHECK(tricky.find("Text:keep {original_text} literal") !=
          std::string::npos);
}

TEST_CASE("the shipped template file matches the built-in", "[pipeline]") {
    auto from_file =
        PromptTemplate::from_file(test::prompt_path("substitution_v1.txt"));
    auto builtin = PromptTemplate::builtin();
    CHECK(from_file.template_text == builtin.template_text);
    CHECK(from_file.content_hash == builtin.content_hash);
}

TEST_CASE("templates without exactly one placeholder are invalid",
          "[pipeline]") {
    CHECK_THROWS_AS(PromptTemplate::make("no slot here", "v"),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        PromptTemplate::make("{original_text} and {original_text}", "v"),
        std::invalid_argument);
}

TEST_CASE("validate passes identical text without PII", "[pipeline]") {
    auto rules = rules::default_rules();
    auto v = validate_candidate("nice weather today", "nice weather today",
                                {}, &rules);
    CHECK(v.status == ValidationStatus::ok);
    CHECK(v.text == "nice weather today");
}

TEST_CASE("validate strips wrapping quotes as a repair", "[pipeline]") {
    auto v = validate_candidate("hello there", "\"hello there\"");
    CHECK(v.status == ValidationStatus::repaired);
    CHECK(v.text == "hello there");
}

TEST_CASE("validate strips a chatty preamble", "[pipeline]") {
    auto v = validate_candidate("my name is John",
                                "Sure, here is the text: my name is Jake");
    CHECK(v.status == ValidationStatus::repaired);
    CHECK(v.text == "my name is Jake");
}

TEST_CASE("validate rejects a half-length candidate", "[pipeline]") {
    auto v = validate_candidate(
        "one two three four five six seven eight nine ten", "one two three");
    CHECK(v.status == ValidationStatus::reject);
    CHECK(v.reason == "length_ratio");
}

TEST_CASE("validate rejects dropped sentences", "[pipeline]") {
    auto v = validate_candidate(
        "First part. Second part. Third part. Fourth part.",
        "First bit here and there. And also more of it all here.");
    // Same token budget, but 4 sentences collapsed into 2.
    CHECK(v.status == ValidationStatus::reject);
    CHECK(v.reason == "sentence_count");
}

TEST_CASE("validate rejects a PII echo", "[pipeline]") {
    auto v = validate_candidate("id 762991 is mine", "id 762991 is mine",
                                {"762991"});
    CHECK(v.status == ValidationStatus::reject);
    CHECK(v.reason == "pii_echo");

    auto rules = rules::default_rules();
    auto detected = validate_candidate("mail me at a.b@mail.com",
                                       "mail me at a.b@mail.com", {}, &rules);
    CHECK(detected.status == ValidationStatus::reject);
    CHECK(detected.reason == "pii_echo");
}

TEST_CASE("extraction recovers the documented name pair", "[pipeline]") {
    auto entries =
        extract_substitutions("My name is John Doe", "My name is David Smith");
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].original == "John Doe");
    CHECK(entries[0].surrogate == "David Smith");
    CHECK(entries[0].category == PiiCategory::customer_name);
}

TEST_CASE("identical strings extract nothing", "[pipeline]") {
    CHECK(extract_substitutions("same text", "same text").empty());
}

TEST_CASE("two replaced runs pair positionally", "[pipeline]") {
    auto entries = extract_substitutions("id 762991 on May 3",
                                         "id 951910 on June 7");
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].original == "762991");
    CHECK(entries[0].surrogate == "951910");
    CHECK(entries[0].category == PiiCategory::account_id);
    CHECK(entries[1].original == "May 3");
    CHECK(entries[1].surrogate == "June 7");
}

TEST_CASE("one-sided runs surface as warnings, not entries", "[pipeline]") {
    std::vector<std::string> warnings;
    auto entries = extract_substitutions("keep these words intact",
                                         "keep these words fully intact",
                                         &warnings);
    CHECK(entries.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("insertion") != std::string::npos);
}

TEST_CASE("extraction matches the exhaustive alignment oracle", "[pipeline]") {
    SplitMix64 rng(2024);
    for (int round = 0; round < 60; ++round) {
        // Distinct context words, distinct replacements: the LCS and its
        // run decomposition are unique by construction.
        std::size_t n = 5 + rng.next_below(6);
        std::vector<std::string> original;
        for (std::size_t i = 0; i < n; ++i)
            original.push_back("w" + std::to_string(round) + "_" +
                               std::to_string(i));
        std::vector<std::string> sanitized = original;
        std::size_t runs = 1 + rng.next_below(2);
        std::size_t cursor = 0;
        for (std::size_t r = 0; r < runs && cursor + 1 < n; ++r) {
            cursor += rng.next_below(2);
            std::size_t len = 1 + rng.next_below(2);
            len = std::min(len, n - cursor - 1);
            for (std::size_t k = 0; k < len; ++k)
                sanitized[cursor + k] = "r" + std::to_string(round) + "_" +
                                        std::to_string(r) + "_" +
                                        std::to_string(k);
            cursor += len + 1;
        }
        auto join = [](const std::vector<std::string>& t) {
            std::string s;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (i) s.push_back(' ');
                s += t[i];
            }
            return s;
        };
        auto alignments = test::oracle::all_lcs_alignments(original, sanitized);
        REQUIRE(alignments.size() == 1);
        auto expected = test::oracle::run_pairs_of(original, sanitized,
                                                   *alignments.begin());
        auto entries =
            extract_substitutions(join(original), join(sanitized));
        REQUIRE(entries.size() == expected.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            CHECK(entries[i].original == expected[i].first);
            CHECK(entries[i].surrogate == expected[i].second);
        }
    }
}

TEST_CASE("oracle upstream sanitizes the canonical utterance", "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    Corpus tiny;
    Conversation conv;
    conv.id = "t";
    conv.utterances.push_back({0, Speaker::customer, "My name is John Doe"});
    PiiAnnotation a;
    a.category = PiiCategory::customer_name;
    a.value = "John Doe";
    a.utterance_index = 0;
    conv.annotations.push_back(a);
    tiny.conversations.push_back(conv);

    testkit::MockServer server(testkit::MockBehavior::oracle, &tiny, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    auto outcome = sanitize_utterance(endpoint, PromptTemplate::builtin(),
                                      "My name is John Doe", {}, 3);
    REQUIRE(outcome.ok);
    auto expected = generate_surrogate(PiiCategory::customer_name,
                                       "John Doe", 7);
    CHECK(outcome.text == "My name is " + expected);
}

TEST_CASE("identity upstream fails closed on PII text", "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    testkit::MockServer server(testkit::MockBehavior::identity, &fixture, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    auto rules = rules::default_rules();
    auto outcome = sanitize_utterance(
        endpoint, PromptTemplate::builtin(),
        "Hi, I am Melissa Grant and my order 7731902 never arrived.", {}, 2,
        {"Melissa Grant", "7731902"}, &rules);
    CHECK_FALSE(outcome.ok);
    CHECK(outcome.attempts == 3);  // 2 plain + 1 repair-suffix attempt
    CHECK(outcome.failure_reason.find("pii_echo") != std::string::npos);
}

TEST_CASE("adversarial preamble is repaired away", "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    testkit::MockServer server(testkit::MockBehavior::adversarial_preamble,
                               &fixture, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    auto outcome = sanitize_utterance(endpoint, PromptTemplate::builtin(),
                                      "The portal is fine today.", {}, 3);
    REQUIRE(outcome.ok);
    CHECK(outcome.text == "The portal is fine today.");
}

TEST_CASE("truncator output is rejected until fail-closed", "[pipeline]") {
    testkit::MockServer server(testkit::MockBehavior::truncator, nullptr, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    auto outcome = sanitize_utterance(
        endpoint, PromptTemplate::builtin(),
        "Unquestionably extraordinary circumstances notwithstanding, we do "
        "go on and on and on and on.",
        {}, 2);
    CHECK_FALSE(outcome.ok);
}

TEST_CASE("anonymize_llm with the oracle recovers the annotation map",
          "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    testkit::MockServer server(testkit::MockBehavior::oracle, &fixture, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    DecodingParams params;
    params.seed = 7;

    for (const auto& conv : fixture.conversations) {
        auto sanitized = anonymize_llm(endpoint, conv,
                                       PromptTemplate::builtin(), params, 3);
        CHECK(sanitized.sanitized_utterances.size() ==
              conv.utterances.size());
        CHECK_FALSE(sanitized.partial());

        std::map<std::string, std::string> expected;
        for (const auto& a : conv.annotations)
            expected[a.value] = generate_surrogate(a.category, a.value, 7);
        std::map<std::string, std::string> got;
        for (const auto& e : sanitized.table.entries())
            got[e.original] = e.surrogate;
        CHECK(got == expected);
    }
}

TEST_CASE("repeated entities keep one surrogate across utterances",
          "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    const auto* conv = fixture.find("conv-02");
    REQUIRE(conv != nullptr);
    testkit::MockServer server(testkit::MockBehavior::oracle, &fixture, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    DecodingParams params;
    params.seed = 7;
    auto sanitized = anonymize_llm(endpoint, *conv,
                                   PromptTemplate::builtin(), params, 3);
    auto surrogate = generate_surrogate(PiiCategory::customer_name,
                                        "Daniel Reyes", 7);
    CHECK(sanitized.sanitized_utterances[0].find(surrogate) !=
          std::string::npos);
    CHECK(sanitized.sanitized_utterances[3].find(surrogate) !=
          std::string::npos);
    CHECK(sanitized.sanitized_utterances[3].find("Daniel Reyes") ==
          std::string::npos);
}

TEST_CASE("empty turns pass through without an endpoint call", "[pipeline]") {
    Conversation conv;
    conv.id = "e";
    conv.utterances.push_back({0, Speaker::system, ""});
    conv.utterances.push_back({1, Speaker::customer, "   "});
    ChatEndpoint dead{"http://127.0.0.1:1", "none", "", 1};
    auto sanitized = anonymize_llm(dead, conv, PromptTemplate::builtin(), {},
                                   0);
    CHECK_FALSE(sanitized.partial());
    CHECK(sanitized.sanitized_utterances[0].empty());
    CHECK(sanitized.table.empty());
}

TEST_CASE("failed utterances never carry original text", "[pipeline]") {
    auto fixture = test::load_fixture_corpus();
    testkit::MockServer server(testkit::MockBehavior::identity, &fixture, 7);
    ChatEndpoint endpoint{server.base_url(), "mock-model", "", 10};
    const auto* conv = fixture.find("conv-08");
    REQUIRE(conv != nullptr);
    DecodingParams params;
    auto sanitized = anonymize_llm(endpoint, *conv,
                                   PromptTemplate::builtin(), params, 1);
    REQUIRE(sanitized.partial());
    for (auto idx : sanitized.failed_indices) {
        CHECK(sanitized.sanitized_utterances[idx] ==
              std::string(kFailedUtteranceMarker));
    }
}
