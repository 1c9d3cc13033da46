#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "veil/metrics.hpp"
#include "veil/rules.hpp"

#include "helpers.hpp"

using namespace veil;
using namespace veil::rules;

TEST_CASE("canonical email span is detected", "[rules]") {
    auto conv = test::make_conversation(
        "c", {"reach me at johndoe@gmail.com"});
    auto spans = detect_spans(conv, default_rules(), 0.5);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].category == PiiCategory::email);
    CHECK(spans[0].surface == "johndoe@gmail.com");
    CHECK(spans[0].confidence >= 0.9);
}

TEST_CASE("zip needs its hotword to clear the threshold", "[rules]") {
    auto with_hotword = test::make_conversation("c", {"my zip is 94110"});
    auto spans = detect_spans(with_hotword, default_rules(), 0.5);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].category == PiiCategory::zip_code);
    CHECK(spans[0].confidence == Catch::Approx(0.6));

    auto bare = test::make_conversation("c", {"the number 94110 came up"});
    CHECK(detect_spans(bare, default_rules(), 0.5).empty());
}

TEST_CASE("fixture conversation conv-04 yields the five frozen spans",
          "[rules]") {
    auto corpus = test::load_fixture_corpus();
    const auto* conv = corpus.find("conv-04");
    REQUIRE(conv != nullptr);
    auto spans = detect_spans(*conv, default_rules(), 0.5);
    REQUIRE(spans.size() == 5);

    struct Expected {
        std::size_t utterance, start, end;
        PiiCategory category;
        const char* surface;
    };
    const Expected expected[] = {
        {0, 9, 22, PiiCategory::customer_name, "Melissa Grant"},
        {0, 36, 43, PiiCategory::order_id, "7731902"},
        {2, 10, 15, PiiCategory::zip_code, "10014"},
        {2, 23, 35, PiiCategory::phone, "212-555-0143"},
        {2, 53, 74, PiiCategory::email, "melissa.g@outlook.com"},
    };
    for (std::size_t i = 0; i < 5; ++i) {
        CAPTURE(i);
        CHECK(spans[i].utterance_index == expected[i].utterance);
        CHECK(spans[i].start == expected[i].start);
        CHECK(spans[i].end == expected[i].end);
        CHECK(spans[i].category == expected[i].category);
        CHECK(spans[i].surface == expected[i].surface);
    }
}

TEST_CASE("overlaps resolve by confidence, then length, then position",
          "[rules]") {
    std::vector<RecognizerRule> rule_set;
    RecognizerRule wide{PiiCategory::account_id, RuleKind::regex,
                        R"(\d{4} \d{4})", {}, 0.6, {}, 3};
    wide.compile();
    RecognizerRule narrow{PiiCategory::order_id, RuleKind::regex,
                          R"(\d{4})", {}, 0.8, {}, 3};
    narrow.compile();
    rule_set.push_back(wide);
    rule_set.push_back(narrow);

    auto conv = test::make_conversation("c", {"codes 1234 5678 end"});
    auto spans = detect_spans(conv, rule_set, 0.5);
    // Higher-confidence narrow spans beat the wide lower-confidence one.
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].surface == "1234");
    CHECK(spans[1].surface == "5678");
    CHECK(spans[0].category == PiiCategory::order_id);
}

TEST_CASE("redact mode masks with the category placeholder", "[rules]") {
    std::vector<RecognizerRule> rule_set;
    RecognizerRule name;
    name.category = PiiCategory::customer_name;
    name.kind = RuleKind::dictionary;
    name.words = {"John"};
    name.base_confidence = 0.7;
    name.compile();
    rule_set.push_back(name);

    auto conv = test::make_conversation("c", {"I am John"});
    auto sanitized = anonymize_rule_based(conv, rule_set, 0.5,
                                          RuleMode::redact, 7);
    CHECK(sanitized.sanitized_utterances[0] == "I am [CUSTOMER_NAME]");
    CHECK(sanitized.method == SanitizeMethod::rule_redact);
}

TEST_CASE("redacted output drops every detected surface", "[rules]") {
    auto corpus = test::load_fixture_corpus();
    for (const auto& conv : corpus.conversations) {
        auto spans = detect_spans(conv, default_rules(), 0.5);
        auto sanitized = anonymize_rule_based(conv, default_rules(), 0.5,
                                              RuleMode::redact, 7);
        auto joined = sanitized.joined_text();
        for (const auto& span : spans)
            CHECK(joined.find(span.surface) == std::string::npos);
    }
}

TEST_CASE("substitute mode is deterministic under a seed", "[rules]") {
    auto corpus = test::load_fixture_corpus();
    const auto& conv = corpus.conversations[0];
    auto a = anonymize_rule_based(conv, default_rules(), 0.5,
                                  RuleMode::substitute, 11);
    auto b = anonymize_rule_based(conv, default_rules(), 0.5,
                                  RuleMode::substitute, 11);
    CHECK(a.sanitized_utterances == b.sanitized_utterances);
    REQUIRE(a.table.size() == b.table.size());
    for (std::size_t i = 0; i < a.table.size(); ++i) {
        CHECK(a.table.entries()[i].original == b.table.entries()[i].original);
        CHECK(a.table.entries()[i].surrogate ==
              b.table.entries()[i].surrogate);
    }
}

TEST_CASE("substitute mode feeds inverse mapping back to originals",
          "[rules]") {
    auto corpus = test::load_fixture_corpus();
    const auto* conv = corpus.find("conv-04");
    REQUIRE(conv != nullptr);
    auto sanitized = anonymize_rule_based(*conv, default_rules(), 0.5,
                                          RuleMode::substitute, 7);
    REQUIRE_FALSE(sanitized.table.has_inverse_collisions());
    for (std::size_t i = 0; i < conv->utterances.size(); ++i) {
        CHECK(apply_inverse(sanitized.sanitized_utterances[i],
                            sanitized.table) == conv->utterances[i].text);
    }
}

TEST_CASE("rule substitution scores the frozen 0.80 recall on the fixture",
          "[rules]") {
    auto corpus = test::load_fixture_corpus();
    std::vector<SanitizedConversation> sanitized;
    for (const auto& conv : corpus.conversations)
        sanitized.push_back(anonymize_rule_based(
            conv, default_rules(), 0.5, RuleMode::substitute, 7));
    std::size_t terms = 0;
    double recall = metrics::privacy_recall(corpus, sanitized, &terms);
    CHECK(terms == 30);
    CHECK(recall == Catch::Approx(0.80).margin(1e-12));
}

TEST_CASE("rules file loads, validates, and reports bad patterns", "[rules]") {
    namespace fs = std::filesystem;
    auto good = fs::temp_directory_path() / "veil_rules_ok.json";
    {
        std::ofstream out(good);
        out << R"([{"category":"email","kind":"regex",)"
            << R"("pattern":"[a-z]+@[a-z]+\\.com","confidence":0.8},)"
            << R"({"category":"customer_name","kind":"dictionary",)"
            << R"("words":["Ada"],"confidence":0.6},)"
            << R"({"category":"zip_code","kind":"context_boosted",)"
            << R"("pattern":"\\b\\d{5}\\b","confidence":0.4,)"
            << R"("hotwords":["zip"],"window":3}])";
    }
    auto rule_set = load_rules(good.string());
    REQUIRE(rule_set.size() == 3);
    auto conv = test::make_conversation("c", {"Ada zip 12345 a@b.com"});
    CHECK(detect_spans(conv, rule_set, 0.5).size() == 3);

    auto bad = fs::temp_directory_path() / "veil_rules_bad.json";
    {
        std::ofstream out(bad);
        out << R"([{"category":"email","kind":"regex","pattern":"(["}])";
    }
    CHECK_THROWS_AS(load_rules(bad.string()), std::invalid_argument);
}

TEST_CASE("checksum rules keep only Luhn-valid digit spans", "[rules]") {
    RecognizerRule card{PiiCategory::account_id, RuleKind::checksum,
                        R"(\b\d{16}\b)", {}, 0.9, {}, 3};
    card.compile();
    auto conv = test::make_conversation(
        "c", {"valid 4539148803436467 invalid 4539148803436468"});
    auto spans = detect_spans(conv, {card}, 0.5);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].surface == "4539148803436467");
}
