#include "chordlab/vocab.hpp"

#include "chordlab/errors.hpp"

namespace chordlab {

Vocabulary::Vocabulary() {
    add("<pad>");
    add("<unk>");
    add("<mask>");
}

Vocabulary::Vocabulary(std::span<const std::string> tokens) {
    if (tokens.size() < kReserved)
        throw Error("vocabulary must include the reserved tokens");
    for (const auto& t : tokens) add(t);
    if (tokens_.size() != tokens.size())
        throw Error("vocabulary contains duplicate tokens");
}

std::int32_t Vocabulary::add(std::string_view token) {
    auto it = index_.find(std::string(token));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<std::int32_t>(tokens_.size());
    tokens_.emplace_back(token);
    index_.emplace(tokens_.back(), id);
    return id;
}

std::int32_t Vocabulary::encode(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::decode(std::int32_t id) const {
    if (id < 0 || id >= size())
        throw IndexOutOfRange("token id " + std::to_string(id) + " out of range [0," +
                              std::to_string(size()) + ")");
    return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.find(std::string(token)) != index_.end();
}

}  // namespace chordlab
