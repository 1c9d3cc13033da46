#pragma once

#include <string>

#include "veil/corpus.hpp"

namespace veil::test {

inline std::string fixture_path(const std::string& name) {
    return std::string(VEIL_FIXTURE_DIR) + "/" + name;
}

inline std::string prompt_path(const std::string& name) {
    return std::string(VEIL_PROMPT_DIR) + "/" + name;
}

inline Corpus load_fixture_corpus(std::vector<std::string>* warnings = nullptr) {
    return load_corpus(fixture_path("conversations.jsonl"),
                       CorpusFormat::normalized_jsonl, warnings);
}

inline Corpus load_contrast_corpus() {
    return load_corpus(fixture_path("contrast.jsonl"),
                       CorpusFormat::normalized_jsonl);
}

inline Conversation make_conversation(std::string id,
                                      std::vector<std::string> texts) {
    Conversation conv;
    conv.id = std::move(id);
    for (std::size_t i = 0; i < texts.size(); ++i)
        conv.utterances.push_back({i, Speaker::customer,
                                   std::move(texts[i])});
    return conv;
}

}  // namespace veil::test
