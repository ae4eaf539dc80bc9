#include "chordlab/chord.hpp"

#include <array>
#include <cctype>

#include "chordlab/errors.hpp"

namespace chordlab {
namespace {

bool is_pitch_letter(char c) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u >= 'A' && u <= 'G';
}

bool is_modifier(char c) { return c == '#' || c == 'b'; }

// root := letter modifier*
std::string parse_root(std::string_view text, std::size_t& pos) {
    if (pos >= text.size() || !is_pitch_letter(text[pos]))
        throw SyntaxError("expected pitch letter A-G", pos);
    std::string root(1, static_cast<char>(std::toupper(static_cast<unsigned char>(text[pos]))));
    ++pos;
    while (pos < text.size() && is_modifier(text[pos])) root += text[pos++];
    return root;
}

// quality := alpha alnum*
std::string parse_quality(std::string_view text, std::size_t& pos) {
    const std::size_t start = pos;
    while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) throw SyntaxError("expected chord quality after ':'", pos);
    std::string q(text.substr(start, pos - start));
    for (char& c : q) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return q;
}

// bass := modifier* digit+ | letter modifier*
std::string parse_bass(std::string_view text, std::size_t& pos) {
    const std::size_t start = pos;
    if (pos < text.size() && is_pitch_letter(text[pos]) && !is_modifier(text[pos])) {
        std::string b(1, static_cast<char>(std::toupper(static_cast<unsigned char>(text[pos]))));
        ++pos;
        while (pos < text.size() && is_modifier(text[pos])) b += text[pos++];
        return b;
    }
    std::string b;
    while (pos < text.size() && is_modifier(text[pos])) b += text[pos++];
    bool saw_digit = false;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        b += text[pos++];
        saw_digit = true;
    }
    if (!saw_digit) throw SyntaxError("expected scale degree or pitch after '/'", start);
    return b;
}

}  // namespace

ChordLabel parse_chord_label(std::string_view text) {
    if (text.empty()) throw SyntaxError("empty chord label", 0);
    std::size_t pos = 0;
    ChordLabel label;
    label.root = parse_root(text, pos);
    if (pos < text.size() && text[pos] == ':') {
        ++pos;
        label.quality = parse_quality(text, pos);
    }
    if (pos < text.size() && text[pos] == '/') {
        ++pos;
        label.bass = parse_bass(text, pos);
    }
    if (pos != text.size()) throw SyntaxError("unexpected trailing characters", pos);
    return label;
}

std::string render_chord(const ChordLabel& label) {
    std::string out = label.root;
    if (!label.quality.empty()) {
        out += ':';
        out += label.quality;
    }
    if (!label.bass.empty()) {
        out += '/';
        out += label.bass;
    }
    return out;
}

std::string base_quality(std::string_view quality) {
    if (quality.empty()) return "";
    static constexpr std::array<std::string_view, 7> bases = {
        "sus4", "sus2", "hdim", "maj", "min", "dim", "aug"};
    for (std::string_view b : bases)
        if (quality.substr(0, b.size()) == b) return std::string(b);
    // purely numeric/extension qualities ("7", "9", "11") sit on a major triad
    return "maj";
}

std::string normalize_chord(const ChordLabel& label, NormalizePolicy policy) {
    ChordLabel out = label;
    switch (policy) {
        case NormalizePolicy::full:
            break;
        case NormalizePolicy::no_inversion:
            out.bass.clear();
            break;
        case NormalizePolicy::root_quality:
            out.bass.clear();
            out.quality = base_quality(out.quality);
            break;
    }
    return render_chord(out);
}

const char* to_string(NormalizePolicy policy) {
    switch (policy) {
        case NormalizePolicy::full: return "full";
        case NormalizePolicy::no_inversion: return "no_inversion";
        case NormalizePolicy::root_quality: return "root_quality";
    }
    return "?";
}

NormalizePolicy normalize_policy_from_string(std::string_view name) {
    if (name == "full") return NormalizePolicy::full;
    if (name == "no_inversion") return NormalizePolicy::no_inversion;
    if (name == "root_quality") return NormalizePolicy::root_quality;
    throw Error("unknown normalization policy: " + std::string(name));
}

}  // namespace chordlab
