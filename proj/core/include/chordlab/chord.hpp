#pragma once

#include <string>
#include <string_view>

namespace chordlab {

// A Harte-style chord symbol: root(:quality)?(/bass)?, e.g. "F#:min7/b3".
// Fields are stored canonically (root uppercase, quality lowercase), so
// parse(render(x)) == x.
struct ChordLabel {
    std::string root;     // pitch letter A-G plus zero or more #/b modifiers
    std::string quality;  // "maj", "min7", "7", ... empty means bare root
    std::string bass;     // scale degree ("b3", "5") or pitch ("E", "F#"); empty if none

    bool operator==(const ChordLabel&) const = default;
};

enum class NormalizePolicy {
    full,          // keep root:quality/bass as-is
    no_inversion,  // drop the bass
    root_quality,  // drop the bass and reduce the quality to its base form
};

// Throws SyntaxError with the byte offset of the first offending character.
ChordLabel parse_chord_label(std::string_view text);

// Canonical serialization of a label.
std::string render_chord(const ChordLabel& label);

std::string normalize_chord(const ChordLabel& label, NormalizePolicy policy);

// "min7" -> "min", "maj9" -> "maj", "7" -> "maj", "sus4" stays "sus4".
std::string base_quality(std::string_view quality);

const char* to_string(NormalizePolicy policy);
NormalizePolicy normalize_policy_from_string(std::string_view name);

}  // namespace chordlab
