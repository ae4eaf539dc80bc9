#include <doctest.h>

#include "chordlab/chord.hpp"
#include "chordlab/errors.hpp"
#include "chordlab/rng.hpp"

using namespace chordlab;

TEST_SUITE_BEGIN("chord");

TEST_CASE("parses plain root and quality") {
    const ChordLabel c = parse_chord_label("C:maj");
    CHECK(c.root == "C");
    CHECK(c.quality == "maj");
    CHECK(c.bass.empty());
}

TEST_CASE("parses modifiers and bass degree") {
    const ChordLabel c = parse_chord_label("F#:min7/b3");
    CHECK(c.root == "F#");
    CHECK(c.quality == "min7");
    CHECK(c.bass == "b3");
}

TEST_CASE("parses bare root, pitch bass, multiple modifiers") {
    CHECK(parse_chord_label("C").quality.empty());
    CHECK(parse_chord_label("Ab:7/E").bass == "E");
    CHECK(parse_chord_label("C##:maj").root == "C##");
    CHECK(parse_chord_label("Bb:maj/Eb").bass == "Eb");
}

TEST_CASE("rejects invalid input with byte offsets") {
    CHECK_THROWS_AS(parse_chord_label("H:maj"), SyntaxError);
    try {
        parse_chord_label("H:maj");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 0);
    }
    try {
        parse_chord_label("C:");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 2);
    }
    try {
        parse_chord_label("C:maj/x");
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 6);
    }
    CHECK_THROWS_AS(parse_chord_label(""), SyntaxError);
    CHECK_THROWS_AS(parse_chord_label("C:maj!"), SyntaxError);
}

TEST_CASE("canonicalizes case") {
    CHECK(render_chord(parse_chord_label("c:MAJ")) == "C:maj");
    CHECK(render_chord(parse_chord_label("g#:Min7/b3")) == "G#:min7/b3");
}

TEST_CASE("render/parse round-trips random labels") {
    const char* roots[] = {"A", "B", "C", "D", "E", "F", "G"};
    const char* mods[] = {"", "#", "b", "##", "bb"};
    const char* quals[] = {"", "maj", "min", "min7", "maj7", "7", "sus4", "hdim7", "aug", "9"};
    const char* basses[] = {"", "3", "b3", "5", "#5", "E", "F#"};
    Rng rng(77);
    for (int i = 0; i < 500; ++i) {
        ChordLabel label;
        label.root = std::string(roots[rng.uniform_int(0, 6)]) + mods[rng.uniform_int(0, 4)];
        label.quality = quals[rng.uniform_int(0, 9)];
        label.bass = basses[rng.uniform_int(0, 6)];
        const std::string text = render_chord(label);
        CHECK(parse_chord_label(text) == label);
        CHECK(render_chord(parse_chord_label(text)) == text);
    }
}

TEST_CASE("normalization policies") {
    CHECK(normalize_chord(parse_chord_label("C:maj7/5"), NormalizePolicy::no_inversion) == "C:maj7");
    CHECK(normalize_chord(parse_chord_label("C:maj"), NormalizePolicy::full) == "C:maj");
    CHECK(normalize_chord(parse_chord_label("A:min7/b3"), NormalizePolicy::root_quality) == "A:min");
    CHECK(normalize_chord(parse_chord_label("C:7/5"), NormalizePolicy::root_quality) == "C:maj");
    CHECK(normalize_chord(parse_chord_label("D:sus4/5"), NormalizePolicy::root_quality) == "D:sus4");
    CHECK(normalize_chord(parse_chord_label("C"), NormalizePolicy::root_quality) == "C");
    CHECK(normalize_chord(parse_chord_label("E:hdim7"), NormalizePolicy::root_quality) == "E:hdim");
}

TEST_CASE("policy names round-trip") {
    for (auto p : {NormalizePolicy::full, NormalizePolicy::no_inversion,
                   NormalizePolicy::root_quality})
        CHECK(normalize_policy_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(normalize_policy_from_string("nope"), Error);
}

TEST_SUITE_END();
