#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace chordlab {

// Dense token <-> id bijection with three reserved entries.
class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kMask = 2;
    static constexpr int kReserved = 3;

    Vocabulary();
    explicit Vocabulary(std::span<const std::string> tokens);  // full list incl. reserved

    // Inserts if absent; returns the id either way.
    std::int32_t add(std::string_view token);

    // kUnk for out-of-vocabulary tokens.
    std::int32_t encode(std::string_view token) const;

    // Throws IndexOutOfRange.
    const std::string& decode(std::int32_t id) const;

    bool contains(std::string_view token) const;
    std::int32_t size() const { return static_cast<std::int32_t>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::int32_t> index_;
};

}  // namespace chordlab
