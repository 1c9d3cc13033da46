#pragma once

// Conversation data model and corpus ingestion.
//
// The canonical interchange format is normalized JSONL: one conversation
// object per line with fields `id`, `intent`, `utterances`
// (array of {index, speaker, text}) and `annotations`
// (array of {category, value, utterance_index}). Raw ABCD-style exports are
// consumed through a mapping-file driven adapter so dataset schema drift is
// a config change.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "veil/rng.hpp"
#include "veil/text.hpp"

namespace veil {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class PiiCategory {
    customer_name,
    username,
    email,
    phone,
    account_id,
    order_id,
    street_address,
    zip_code,
};

inline constexpr std::array<std::pair<PiiCategory, std::string_view>, 8>
    kCategoryNames = {{
        {PiiCategory::customer_name, "customer_name"},
        {PiiCategory::username, "username"},
        {PiiCategory::email, "email"},
        {PiiCategory::phone, "phone"},
        {PiiCategory::account_id, "account_id"},
        {PiiCategory::order_id, "order_id"},
        {PiiCategory::street_address, "street_address"},
        {PiiCategory::zip_code, "zip_code"},
    }};

inline std::string_view to_string(PiiCategory c) {
    for (auto [cat, name] : kCategoryNames)
        if (cat == c) return name;
    return "unknown";
}

inline std::optional<PiiCategory> category_from_string(std::string_view s) {
    for (auto [cat, name] : kCategoryNames)
        if (name == s) return cat;
    return std::nullopt;
}

// Digit-length preservation applies to these categories.
inline bool is_numeric_category(PiiCategory c) {
    return c == PiiCategory::phone || c == PiiCategory::account_id ||
           c == PiiCategory::order_id || c == PiiCategory::zip_code;
}

enum class Speaker { agent, customer, system };

inline std::string_view to_string(Speaker s) {
    switch (s) {
        case Speaker::agent: return "agent";
        case Speaker::customer: return "customer";
        default: return "system";
    }
}

inline std::optional<Speaker> speaker_from_string(std::string_view s) {
    if (s == "agent") return Speaker::agent;
    if (s == "customer") return Speaker::customer;
    if (s == "system") return Speaker::system;
    return std::nullopt;
}

struct Utterance {
    std::size_t index = 0;
    Speaker speaker = Speaker::system;
    std::string text;
};

struct PiiAnnotation {
    PiiCategory category = PiiCategory::customer_name;
    std::string value;
    std::optional<std::size_t> utterance_index;
};

struct Conversation {
    std::string id;
    std::vector<Utterance> utterances;
    std::vector<PiiAnnotation> annotations;
    std::optional<std::string> intent;

    // Utterances joined by newline, the unit sentiment/topic metrics score.
    std::string joined_text() const {
        std::string out;
        for (std::size_t i = 0; i < utterances.size(); ++i) {
            if (i) out.push_back('\n');
            out += utterances[i].text;
        }
        return out;
    }
};

struct Corpus {
    std::vector<Conversation> conversations;
    std::string source_tag;

    std::size_t size() const { return conversations.size(); }

    const Conversation* find(std::string_view id) const {
        for (const auto& c : conversations)
            if (c.id == id) return &c;
        return nullptr;
    }
};

enum class CorpusFormat { normalized_jsonl, abcd_raw };

// ---------------------------------------------------------------------------
// Validation

// Same normalization the recall metric uses: boundary-aware, case-folded
// match, with a digit-sequence fallback for numeric categories.
inline bool annotation_value_in_text(const PiiAnnotation& a,
                                     std::string_view text) {
    auto value = strip_edge_punct(trim(a.value));
    if (value.empty()) return false;
    if (contains_bounded_ci(text, value)) return true;
    if (is_numeric_category(a.category)) {
        auto want = digits_of(value);
        if (!want.empty()) {
            for (const auto& seq : digit_sequences(text))
                if (seq == want) return true;
        }
    }
    return false;
}

inline void validate_conversation(const Conversation& conv,
                                  std::vector<std::string>* warnings) {
    if (conv.id.empty()) throw CorpusError("conversation with empty id");
    if (conv.utterances.empty())
        throw CorpusError("conversation '" + conv.id + "' has no utterances");
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
        const auto& u = conv.utterances[i];
        if (u.index != i)
            throw CorpusError("conversation '" + conv.id +
                              "': utterance indices not contiguous from 0");
        if (u.text.empty() && u.speaker != Speaker::system)
            throw CorpusError("conversation '" + conv.id +
                              "': empty text on non-system turn " +
                              std::to_string(i));
    }
    for (const auto& a : conv.annotations) {
        if (trim(a.value).empty())
            throw CorpusError("conversation '" + conv.id +
                              "': annotation with empty value");
        if (a.utterance_index && *a.utterance_index >= conv.utterances.size())
            throw CorpusError("conversation '" + conv.id +
                              "': annotation utterance_index out of range");
        std::string_view scope_text;
        std::string joined;
        if (a.utterance_index) {
            scope_text = conv.utterances[*a.utterance_index].text;
        } else {
            joined = conv.joined_text();
            scope_text = joined;
        }
        // Absent values stay in the corpus (and in recall denominators);
        // they only warn.
        if (!annotation_value_in_text(a, scope_text) && warnings) {
            warnings->push_back("conversation '" + conv.id + "': value '" +
                                a.value + "' not found in " +
                                (a.utterance_index
                                     ? "utterance " +
                                           std::to_string(*a.utterance_index)
                                     : std::string("conversation text")));
        }
    }
}

// ---------------------------------------------------------------------------
// Normalized JSONL

inline Conversation conversation_from_json(const json& j) {
    Conversation conv;
    conv.id = j.at("id").get<std::string>();
    if (j.contains("intent") && !j["intent"].is_null())
        conv.intent = j["intent"].get<std::string>();
    for (const auto& ju : j.at("utterances")) {
        Utterance u;
        u.index = ju.at("index").get<std::size_t>();
        auto spk = speaker_from_string(ju.at("speaker").get<std::string>());
        if (!spk)
            throw CorpusError("unknown speaker '" +
                              ju.at("speaker").get<std::string>() + "'");
        u.speaker = *spk;
        u.text = ju.at("text").get<std::string>();
        conv.utterances.push_back(std::move(u));
    }
    if (j.contains("annotations")) {
        for (const auto& ja : j["annotations"]) {
            PiiAnnotation a;
            auto cat =
                category_from_string(ja.at("category").get<std::string>());
            if (!cat)
                throw CorpusError("unknown category '" +
                                  ja.at("category").get<std::string>() + "'");
            a.category = *cat;
            a.value = ja.at("value").get<std::string>();
            if (ja.contains("utterance_index") &&
                !ja["utterance_index"].is_null())
                a.utterance_index = ja["utterance_index"].get<std::size_t>();
            conv.annotations.push_back(std::move(a));
        }
    }
    return conv;
}

inline ojson conversation_to_json(const Conversation& conv) {
    ojson j;
    j["id"] = conv.id;
    j["intent"] = conv.intent ? ojson(*conv.intent) : ojson(nullptr);
    j["utterances"] = ojson::array();
    for (const auto& u : conv.utterances) {
        ojson ju;
        ju["index"] = u.index;
        ju["speaker"] = std::string(to_string(u.speaker));
        ju["text"] = u.text;
        j["utterances"].push_back(std::move(ju));
    }
    j["annotations"] = ojson::array();
    for (const auto& a : conv.annotations) {
        ojson ja;
        ja["category"] = std::string(to_string(a.category));
        ja["value"] = a.value;
        ja["utterance_index"] =
            a.utterance_index ? ojson(*a.utterance_index) : ojson(nullptr);
        j["annotations"].push_back(std::move(ja));
    }
    return j;
}

inline std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& conv : corpus.conversations) {
        out += conversation_to_json(conv).dump();
        out.push_back('\n');
    }
    return out;
}

inline Corpus parse_normalized_jsonl(std::istream& in, std::string source_tag,
                                     std::vector<std::string>* warnings) {
    Corpus corpus;
    corpus.source_tag = std::move(source_tag);
    std::string line;
    std::size_t line_no = 0;
    for (; std::getline(in, line); ) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw CorpusError("line " + std::to_string(line_no) +
                              ": malformed record: " + e.what());
        }
        Conversation conv;
        try {
            conv = conversation_from_json(j);
        } catch (const json::exception& e) {
            throw CorpusError("line " + std::to_string(line_no) +
                              ": malformed record: " + e.what());
        } catch (const CorpusError& e) {
            throw CorpusError("line " + std::to_string(line_no) + ": " +
                              e.what());
        }
        if (corpus.find(conv.id))
            throw CorpusError("line " + std::to_string(line_no) +
                              ": duplicate conversation id '" + conv.id + "'");
        validate_conversation(conv, warnings);
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// ABCD adapter
//
// The mapping file declares where ids, utterances, speakers and the eight
// slot values live inside the raw export, e.g.
//   {"splits": ["train","dev","test"], "conversation_id": "convo_id",
//    "utterances": "original", "speaker_roles": {"action": "system", ...},
//    "intent": ["scenario","flow"],
//    "slots": {"email": ["scenario","personal","email"], ...}}

struct AbcdMapping {
    std::vector<std::string> splits;
    std::string id_field = "convo_id";
    std::string utterances_field = "original";
    std::vector<std::pair<std::string, Speaker>> speaker_roles;
    std::vector<std::string> intent_path;
    std::vector<std::pair<PiiCategory, std::vector<std::string>>> slots;
};

inline AbcdMapping load_abcd_mapping(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open mapping file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw CorpusError("mapping file " + path + ": " + e.what());
    }
    AbcdMapping m;
    if (j.contains("splits"))
        m.splits = j["splits"].get<std::vector<std::string>>();
    if (j.contains("conversation_id"))
        m.id_field = j["conversation_id"].get<std::string>();
    if (j.contains("utterances"))
        m.utterances_field = j["utterances"].get<std::string>();
    if (j.contains("speaker_roles")) {
        for (auto it = j["speaker_roles"].begin();
             it != j["speaker_roles"].end(); ++it) {
            auto spk = speaker_from_string(it.value().get<std::string>());
            if (!spk)
                throw CorpusError("mapping file: unknown speaker role '" +
                                  it.value().get<std::string>() + "'");
            m.speaker_roles.emplace_back(it.key(), *spk);
        }
    }
    if (j.contains("intent"))
        m.intent_path = j["intent"].get<std::vector<std::string>>();
    if (j.contains("slots")) {
        for (auto it = j["slots"].begin(); it != j["slots"].end(); ++it) {
            auto cat = category_from_string(it.key());
            if (!cat)
                throw CorpusError("mapping file: unknown category '" +
                                  it.key() + "'");
            m.slots.emplace_back(*cat,
                                 it.value().get<std::vector<std::string>>());
        }
    }
    return m;
}

inline const json* json_at_path(const json& root,
                                const std::vector<std::string>& path) {
    const json* cur = &root;
    for (const auto& key : path) {
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
    }
    return cur;
}

inline std::string json_scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer())
        return std::to_string(v.get<long long>());
    if (v.is_number_unsigned())
        return std::to_string(v.get<unsigned long long>());
    return v.dump();
}

inline Conversation abcd_conversation(const json& raw, const AbcdMapping& map,
                                      std::vector<std::string>* warnings) {
    Conversation conv;
    if (!raw.contains(map.id_field))
        throw CorpusError("ABCD record missing id field '" + map.id_field +
                          "'");
    conv.id = json_scalar_to_string(raw[map.id_field]);
    if (!map.intent_path.empty()) {
        if (const json* v = json_at_path(raw, map.intent_path);
            v && v->is_string())
            conv.intent = v->get<std::string>();
    }
    if (!raw.contains(map.utterances_field))
        throw CorpusError("ABCD record '" + conv.id +
                          "' missing utterances field '" +
                          map.utterances_field + "'");
    std::size_t idx = 0;
    for (const auto& turn : raw[map.utterances_field]) {
        if (!turn.is_array() || turn.size() < 2)
            throw CorpusError("ABCD record '" + conv.id +
                              "': turn is not a [speaker, text] pair");
        Utterance u;
        u.index = idx++;
        std::string role = turn[0].get<std::string>();
        u.speaker = Speaker::system;
        for (const auto& [name, spk] : map.speaker_roles)
            if (name == role) u.speaker = spk;
        u.text = turn[1].get<std::string>();
        conv.utterances.push_back(std::move(u));
    }
    for (const auto& [cat, path] : map.slots) {
        const json* v = json_at_path(raw, path);
        if (!v || v->is_null()) continue;
        std::string value = json_scalar_to_string(*v);
        if (trim(value).empty()) continue;
        PiiAnnotation a;
        a.category = cat;
        a.value = value;
        for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
            if (annotation_value_in_text(a, conv.utterances[i].text)) {
                a.utterance_index = i;
                break;
            }
        }
        conv.annotations.push_back(std::move(a));
    }
    validate_conversation(conv, warnings);
    return conv;
}

inline Corpus load_abcd(const std::string& path, const AbcdMapping& map,
                        std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw CorpusError(path + ": " + e.what());
    }
    Corpus corpus;
    corpus.source_tag = "abcd";
    auto ingest = [&](const json& arr) {
        for (const auto& raw : arr) {
            Conversation conv = abcd_conversation(raw, map, warnings);
            if (corpus.find(conv.id))
                throw CorpusError("duplicate conversation id '" + conv.id +
                                  "'");
            corpus.conversations.push_back(std::move(conv));
        }
    };
    if (root.is_array()) {
        ingest(root);
    } else {
        // All declared splits are ingested; missing splits are skipped.
        for (const auto& split : map.splits)
            if (root.contains(split)) ingest(root[split]);
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Loading entry points

inline Corpus load_corpus(const std::string& path, CorpusFormat format,
                          std::vector<std::string>* warnings = nullptr,
                          const std::string& mapping_path = "") {
    if (format == CorpusFormat::normalized_jsonl) {
        std::ifstream in(path);
        if (!in) throw CorpusError("cannot open corpus file: " + path);
        return parse_normalized_jsonl(in, path, warnings);
    }
    AbcdMapping map;
    if (!mapping_path.empty()) map = load_abcd_mapping(mapping_path);
    else throw CorpusError("abcd_raw format requires a mapping file");
    return load_abcd(path, map, warnings);
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CorpusError("cannot open output file: " + path);
    out << serialize_corpus(corpus);
}

// ---------------------------------------------------------------------------
// Deterministic splits and sampling

// Fisher-Yates shuffle of conversation indices under splitmix64, then the
// first ceil(train_fraction * N) shuffled indices form the train side.
// Each side keeps original load order.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                              double train_fraction,
                                              std::uint64_t seed) {
    const std::size_t n = corpus.size();
    if (n < 2)
        throw CorpusError("split_corpus requires at least 2 conversations");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw CorpusError("train_fraction must be in (0, 1)");
    auto order = shuffled_indices(n, seed);
    std::size_t n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n)));
    n_train = std::min(n_train, n);
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
    Corpus train, test;
    train.source_tag = corpus.source_tag + ":train";
    test.source_tag = corpus.source_tag + ":test";
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test)
            .conversations.push_back(corpus.conversations[i]);
    return {std::move(train), std::move(test)};
}

// Sample without replacement: first n shuffled indices, restored to load
// order. n == size yields the identical corpus.
inline Corpus sample_subset(const Corpus& corpus, std::size_t n,
                            std::uint64_t seed) {
    if (n > corpus.size())
        throw CorpusError("sample_subset: n exceeds corpus size");
    auto order = shuffled_indices(corpus.size(), seed);
    std::vector<std::size_t> picked(order.begin(),
                                    order.begin() + static_cast<long>(n));
    std::sort(picked.begin(), picked.end());
    Corpus out;
    out.source_tag = corpus.source_tag + ":subset";
    for (auto i : picked) out.conversations.push_back(corpus.conversations[i]);
    return out;
}

}  // namespace veil
