#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "veil/metrics.hpp"
#include "veil/rules.hpp"
#include "veil/testkit.hpp"

#include "helpers.hpp"

using namespace veil;
using namespace veil::metrics;

namespace {

std::vector<SanitizedConversation> identity_sanitized(const Corpus& corpus) {
    std::vector<SanitizedConversation> out;
    for (const auto& conv : corpus.conversations) {
        SanitizedConversation s;
        s.conversation_id = conv.id;
        s.method = SanitizeMethod::external;
        s.table = SubstitutionTable(conv.id);
        for (const auto& u : conv.utterances)
            s.sanitized_utterances.push_back(u.text);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SanitizedConversation> oracle_sanitized(const Corpus& corpus,
                                                    std::uint64_t seed) {
    std::vector<SanitizedConversation> out;
    for (const auto& conv : corpus.conversations) {
        SanitizedConversation s;
        s.conversation_id = conv.id;
        s.method = SanitizeMethod::external;
        s.table = SubstitutionTable(conv.id);
        for (const auto& a : conv.annotations) {
            SubstitutionEntry e;
            e.original = a.value;
            e.surrogate = generate_surrogate(a.category, a.value, seed);
            e.category = a.category;
            s.table.insert(std::move(e));
        }
        for (const auto& u : conv.utterances)
            s.sanitized_utterances.push_back(
                apply_forward(u.text, s.table));
        out.push_back(std::move(s));
    }
    return out;
}

JudgeFn regex_judge_fn() {
    return [](const std::string& prompt) -> std::optional<std::string> {
        nlohmann::json req;
        req["model"] = "judge";
        req["messages"] = nlohmann::json::array(
            {{{"role", "user"}, {"content", prompt}}});
        auto res = testkit::mock_respond(testkit::MockBehavior::regex_judge,
                                         req.dump(), nullptr, 0);
        if (res.status != 200) return std::nullopt;
        auto body = nlohmann::json::parse(res.body);
        return body["choices"][0]["message"]["content"].get<std::string>();
    };
}

}  // namespace

TEST_CASE("recall is 1.0 for oracle and 0.0 for identity", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    std::size_t terms = 0;
    CHECK(privacy_recall(corpus, oracle_sanitized(corpus, 7), &terms) == 1.0);
    CHECK(terms == 30);
    CHECK(privacy_recall(corpus, identity_sanitized(corpus)) == 0.0);
}

TEST_CASE("recall counts duplicate values once per conversation",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    std::size_t records = 0;
    for (const auto& conv : corpus.conversations)
        records += conv.annotations.size();
    std::size_t terms = 0;
    privacy_recall(corpus, identity_sanitized(corpus), &terms);
    CHECK(records == 31);
    CHECK(terms == 30);
}

TEST_CASE("the 3-of-4 conversation scores exactly 0.75", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    const auto* conv = corpus.find("conv-01");
    REQUIRE(conv != nullptr);
    REQUIRE(conv->annotations.size() == 4);

    Corpus single;
    single.conversations.push_back(*conv);
    // Remove everything except the username.
    SanitizedConversation s;
    s.conversation_id = conv->id;
    s.table = SubstitutionTable(conv->id);
    for (const auto& a : conv->annotations) {
        if (a.category == PiiCategory::username) continue;
        SubstitutionEntry e;
        e.original = a.value;
        e.surrogate = generate_surrogate(a.category, a.value, 3);
        s.table.insert(std::move(e));
    }
    for (const auto& u : conv->utterances)
        s.sanitized_utterances.push_back(apply_forward(u.text, s.table));
    CHECK(privacy_recall(single, {s}) ==
          Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("recall catches reformatted numeric values by digit sequence",
          "[metrics]") {
    Corpus corpus;
    Conversation conv;
    conv.id = "n";
    conv.utterances.push_back(
        {0, Speaker::customer, "call 415-555-0102 now"});
    PiiAnnotation a;
    a.category = PiiCategory::phone;
    a.value = "415-555-0102";
    a.utterance_index = 0;
    conv.annotations.push_back(a);
    corpus.conversations.push_back(conv);

    SanitizedConversation s;
    s.conversation_id = "n";
    s.sanitized_utterances = {"call 4155550102 now"};  // digits survive
    CHECK(privacy_recall(corpus, {s}) == 0.0);

    s.sanitized_utterances = {"call (415) 555 0102 now"};  // respaced
    CHECK(privacy_recall(corpus, {s}) == 0.0);

    s.sanitized_utterances = {"call 9915550102 now"};
    CHECK(privacy_recall(corpus, {s}) == 1.0);
}

TEST_CASE("values in failed utterances count as surviving", "[metrics]") {
    Corpus corpus;
    Conversation conv;
    conv.id = "f";
    conv.utterances.push_back({0, Speaker::customer, "I am John Doe"});
    PiiAnnotation a;
    a.category = PiiCategory::customer_name;
    a.value = "John Doe";
    a.utterance_index = 0;
    conv.annotations.push_back(a);
    corpus.conversations.push_back(conv);

    SanitizedConversation s;
    s.conversation_id = "f";
    s.sanitized_utterances = {std::string(kFailedUtteranceMarker)};
    s.failed_indices = {0};
    CHECK(privacy_recall(corpus, {s}) == 0.0);
}

TEST_CASE("recall over zero annotations is an error", "[metrics]") {
    Corpus corpus;
    Conversation conv;
    conv.id = "z";
    conv.utterances.push_back({0, Speaker::customer, "hello"});
    corpus.conversations.push_back(conv);
    CHECK_THROWS(privacy_recall(corpus, identity_sanitized(corpus)));
}

TEST_CASE("recall requires a sanitized counterpart per conversation",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    std::vector<SanitizedConversation> empty;
    CHECK_THROWS(privacy_recall(corpus, empty));
}

TEST_CASE("additional removals never decrease recall", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto partial = identity_sanitized(corpus);
    double before = privacy_recall(corpus, partial);
    // Remove all values from one conversation.
    auto oracle = oracle_sanitized(corpus, 7);
    partial[0] = oracle[0];
    double after = privacy_recall(corpus, partial);
    CHECK(after >= before);
}

TEST_CASE("sentiment accuracy is 1.0 for identity and oracle", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto lexicon = Lexicon::builtin_mini();
    CHECK(sentiment_accuracy(corpus, identity_sanitized(corpus), lexicon) ==
          1.0);
    CHECK(sentiment_accuracy(corpus, oracle_sanitized(corpus, 7), lexicon) ==
          1.0);
}

TEST_CASE("topic distance is zero for identity sanitization", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    HashedTfidfProvider provider(512);
    std::vector<std::string> texts;
    for (const auto& conv : corpus.conversations)
        texts.push_back(conv.joined_text());
    provider.fit(texts);
    auto model = fit_topic_model(texts, provider, 4, 7);
    auto stats = topic_distance_stats(corpus, identity_sanitized(corpus),
                                      model, provider);
    CHECK(stats.mean == Catch::Approx(0.0).margin(1e-12));
    CHECK(stats.stddev == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("exactly three qa items per conversation", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto judge = regex_judge_fn();
    auto templates = QaTemplates::builtin();
    for (const auto& conv : corpus.conversations) {
        auto items = build_qa_items(conv, templates, judge);
        CHECK(items.size() == 3);
    }
}

TEST_CASE("entity items carry normalized references", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    const auto* conv = corpus.find("conv-01");
    REQUIRE(conv != nullptr);
    auto items = build_qa_items(*conv, QaTemplates::builtin(),
                                regex_judge_fn());
    REQUIRE(items[0].kind == QaKind::entities);
    CHECK(items[0].entity_dependent);
    std::set<std::string> expected = {"karen mitchell", "kmitch88",
                                      "karen.mitchell@mail.com"};
    CHECK(items[0].reference_set == expected);

    const auto* no_pii = corpus.find("conv-03");
    REQUIRE(no_pii != nullptr);
    auto empty_items = build_qa_items(*no_pii, QaTemplates::builtin(),
                                      regex_judge_fn());
    CHECK_FALSE(empty_items[0].entity_dependent);
    CHECK(empty_items[0].reference_set.empty());
}

TEST_CASE("identity sanitization gives qa accuracy 1.0", "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto outcome = qa_evaluate(corpus, identity_sanitized(corpus),
                               QaTemplates::builtin(), regex_judge_fn());
    REQUIRE(outcome.qa_accuracy.has_value());
    CHECK(*outcome.qa_accuracy == 1.0);
    CHECK(outcome.excluded_items == 0);
}

TEST_CASE("oracle substitution with inverse mapping keeps qa_true at 1.0",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto outcome = qa_evaluate(corpus, oracle_sanitized(corpus, 7),
                               QaTemplates::builtin(), regex_judge_fn());
    REQUIRE(outcome.qa_accuracy.has_value());
    REQUIRE(outcome.qa_true_accuracy.has_value());
    CHECK(*outcome.qa_accuracy == 1.0);
    CHECK(*outcome.qa_true_accuracy == 1.0);
    CHECK(outcome.true_items > 0);
}

TEST_CASE("redaction loses entity answers: qa_true drops below 1.0",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    std::vector<SanitizedConversation> sanitized;
    for (const auto& conv : corpus.conversations)
        sanitized.push_back(rules::anonymize_rule_based(
            conv, rules::default_rules(), 0.5, rules::RuleMode::redact, 7));
    auto outcome = qa_evaluate(corpus, sanitized, QaTemplates::builtin(),
                               regex_judge_fn());
    REQUIRE(outcome.qa_true_accuracy.has_value());
    CHECK(*outcome.qa_true_accuracy < 1.0);
}

TEST_CASE("judge failures drop items from both sides of the ratio",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    Corpus single;
    single.conversations.push_back(corpus.conversations[0]);
    int calls = 0;
    JudgeFn flaky = [&](const std::string& prompt)
        -> std::optional<std::string> {
        ++calls;
        if (calls <= 2) return std::nullopt;  // fail item construction
        return regex_judge_fn()(prompt);
    };
    auto outcome = qa_evaluate(single, identity_sanitized(single),
                               QaTemplates::builtin(), flaky);
    CHECK(outcome.excluded_items > 0);
    if (outcome.qa_accuracy) CHECK(*outcome.qa_accuracy == 1.0);
}

TEST_CASE("qa_true denominator never exceeds the qa denominator",
          "[metrics]") {
    auto corpus = test::load_fixture_corpus();
    auto outcome = qa_evaluate(corpus, oracle_sanitized(corpus, 7),
                               QaTemplates::builtin(), regex_judge_fn());
    CHECK(outcome.true_items <= outcome.evaluated_items);
}
