#include "chordlab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "chordlab/errors.hpp"
#include "chordlab/rng.hpp"

namespace chordlab {
namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

bool is_comment(std::string_view line) {
    const auto p = line.find_first_not_of(" \t");
    return p != std::string_view::npos && line.substr(p, 2) == "//";
}

struct RawSong {
    std::vector<std::vector<std::string>> rows;  // one row per feature
    int first_line = 0;
};

}  // namespace

int Corpus::feature_index(std::string_view name) const {
    for (int i = 0; i < num_features(); ++i)
        if (features[static_cast<std::size_t>(i)] == name) return i;
    throw UnknownFeature("unknown feature: " + std::string(name));
}

std::int64_t Corpus::total_events() const {
    std::int64_t n = 0;
    for (const auto& song : songs)
        if (!song.empty()) n += static_cast<std::int64_t>(song[0].size());
    return n;
}

std::vector<std::vector<std::int32_t>> Corpus::feature_sequences(
    int feature, std::span<const int> song_ids) const {
    std::vector<std::vector<std::int32_t>> out;
    if (song_ids.empty()) {
        out.reserve(songs.size());
        for (const auto& song : songs) out.push_back(song[static_cast<std::size_t>(feature)]);
    } else {
        out.reserve(song_ids.size());
        for (int s : song_ids)
            out.push_back(songs[static_cast<std::size_t>(s)][static_cast<std::size_t>(feature)]);
    }
    return out;
}

Corpus parse_corpus_text(std::string_view text, CorpusFormat format, NormalizePolicy policy) {
    Corpus corpus;

    std::vector<std::string> lines;
    {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            if (end == text.size()) break;
            start = end + 1;
        }
    }

    // header
    std::size_t idx = 0;
    bool have_header = false;
    for (; idx < lines.size(); ++idx) {
        if (is_blank(lines[idx]) || is_comment(lines[idx])) continue;
        if (lines[idx].rfind("#features:", 0) == 0) {
            corpus.features = split_ws(std::string_view(lines[idx]).substr(10));
            if (corpus.features.empty())
                throw FormatError("empty #features: header", static_cast<int>(idx) + 1);
            have_header = true;
            ++idx;
        }
        break;
    }
    if (!have_header) corpus.features = {"chord"};
    corpus.vocabs.assign(corpus.features.size(), Vocabulary{});

    // song blocks
    const int nf = corpus.num_features();
    std::vector<RawSong> raw_songs;
    RawSong current;
    auto flush = [&] {
        if (!current.rows.empty()) {
            if (static_cast<int>(current.rows.size()) != nf)
                throw FormatError("song has " + std::to_string(current.rows.size()) +
                                      " feature rows, expected " + std::to_string(nf),
                                  current.first_line);
            raw_songs.push_back(std::move(current));
        }
        current = RawSong{};
    };
    for (; idx < lines.size(); ++idx) {
        const std::string& line = lines[idx];
        if (is_comment(line)) continue;
        if (is_blank(line)) {
            flush();
            continue;
        }
        if (current.rows.empty()) current.first_line = static_cast<int>(idx) + 1;
        if (static_cast<int>(current.rows.size()) == nf)
            throw FormatError("more than " + std::to_string(nf) + " feature rows in song block",
                              static_cast<int>(idx) + 1);
        current.rows.push_back(split_ws(line));
    }
    flush();

    // encode
    for (const RawSong& raw : raw_songs) {
        const std::size_t len = raw.rows[0].size();
        for (std::size_t f = 1; f < raw.rows.size(); ++f)
            if (raw.rows[f].size() != len)
                throw FormatError("feature '" + corpus.features[f] + "' row length " +
                                      std::to_string(raw.rows[f].size()) +
                                      " != " + std::to_string(len) + " of '" +
                                      corpus.features[0] + "'",
                                  raw.first_line + static_cast<int>(f));
        std::vector<std::vector<std::int32_t>> song(corpus.features.size());
        for (std::size_t f = 0; f < raw.rows.size(); ++f) {
            song[f].reserve(len);
            const bool is_chord_row = format == CorpusFormat::harte && corpus.features[f] == "chord";
            for (const std::string& tok : raw.rows[f]) {
                std::string canonical = tok;
                if (is_chord_row) {
                    try {
                        canonical = normalize_chord(parse_chord_label(tok), policy);
                    } catch (const SyntaxError& e) {
                        throw SyntaxError("line " + std::to_string(raw.first_line +
                                                                   static_cast<int>(f)) +
                                              ": bad chord token '" + tok + "': " + e.what(),
                                          e.offset);
                    }
                }
                song[f].push_back(corpus.vocabs[f].add(canonical));
            }
        }
        corpus.songs.push_back(std::move(song));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path, CorpusFormat format, NormalizePolicy policy) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus_text(buf.str(), format, policy);
}

std::string corpus_to_text(const Corpus& corpus) {
    std::ostringstream out;
    out << "#features:";
    for (const auto& f : corpus.features) out << ' ' << f;
    out << '\n';
    for (const auto& song : corpus.songs) {
        out << '\n';
        for (std::size_t f = 0; f < song.size(); ++f) {
            for (std::size_t i = 0; i < song[f].size(); ++i) {
                if (i) out << ' ';
                out << corpus.vocabs[f].decode(song[f][i]);
            }
            out << '\n';
        }
    }
    return out.str();
}

void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus file: " + path);
    out << corpus_to_text(corpus);
    if (!out) throw IoError("write failed: " + path);
}

Corpus reencode(const Corpus& corpus, const std::vector<std::string>& features,
                const std::vector<Vocabulary>& vocabs) {
    Corpus out;
    out.features = features;
    out.vocabs = vocabs;
    for (const auto& song : corpus.songs) {
        std::vector<std::vector<std::int32_t>> converted(features.size());
        for (std::size_t f = 0; f < features.size(); ++f) {
            const int src = corpus.feature_index(features[f]);
            const auto& seq = song[static_cast<std::size_t>(src)];
            converted[f].reserve(seq.size());
            for (std::int32_t id : seq)
                converted[f].push_back(
                    vocabs[f].encode(corpus.vocabs[static_cast<std::size_t>(src)].decode(id)));
        }
        out.songs.push_back(std::move(converted));
    }
    return out;
}

std::vector<Fold> split_kfold(const Corpus& corpus, int k, std::uint64_t seed) {
    const int n = corpus.num_songs();
    if (k < 2) throw InvalidK("k must be >= 2, got " + std::to_string(k));
    if (k > n)
        throw InvalidK("k=" + std::to_string(k) + " exceeds song count " + std::to_string(n));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).split("kfold");
    rng.shuffle(order);

    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (int i = 0; i < n; ++i)
        folds[static_cast<std::size_t>(i % k)].test_songs.push_back(order[static_cast<std::size_t>(i)]);
    for (auto& fold : folds) {
        std::sort(fold.test_songs.begin(), fold.test_songs.end());
        fold.train_songs.reserve(static_cast<std::size_t>(n) - fold.test_songs.size());
        for (int s = 0; s < n; ++s)
            if (!std::binary_search(fold.test_songs.begin(), fold.test_songs.end(), s))
                fold.train_songs.push_back(s);
    }
    return folds;
}

}  // namespace chordlab
