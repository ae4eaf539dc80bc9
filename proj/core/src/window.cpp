#include "chordlab/window.hpp"

#include <algorithm>
#include <numeric>

#include "chordlab/errors.hpp"

namespace chordlab {

WindowSet make_windows(const Corpus& corpus, int context_len,
                       const std::string& target_feature) {
    if (context_len < 1) throw Error("context length must be >= 1");
    const int target = corpus.feature_index(target_feature);
    const int nf = corpus.num_features();

    WindowSet ws;
    ws.context_len = context_len;
    ws.num_features = nf;
    ws.target_feature = target;

    for (int s = 0; s < corpus.num_songs(); ++s) {
        const auto& song = corpus.songs[static_cast<std::size_t>(s)];
        const auto len = static_cast<std::int64_t>(song[0].size());
        for (std::int64_t pos = 1; pos < len; ++pos) {
            // context covers positions [pos-L, pos), left-padded below zero
            for (int t = 0; t < context_len; ++t) {
                const std::int64_t src = pos - context_len + t;
                for (int f = 0; f < nf; ++f)
                    ws.contexts.push_back(
                        src < 0 ? Vocabulary::kPad
                                : song[static_cast<std::size_t>(f)][static_cast<std::size_t>(src)]);
            }
            ws.targets.push_back(song[static_cast<std::size_t>(target)][static_cast<std::size_t>(pos)]);
            ws.song_ids.push_back(s);
        }
    }
    return ws;
}

std::vector<std::int64_t> select_by_song(const WindowSet& windows, std::span<const int> songs) {
    std::vector<int> sorted(songs.begin(), songs.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::int64_t> out;
    for (std::int64_t i = 0; i < windows.size(); ++i)
        if (std::binary_search(sorted.begin(), sorted.end(), windows.song_ids[static_cast<std::size_t>(i)]))
            out.push_back(i);
    return out;
}

TokenBatch WindowSlice::gather(std::int64_t first, std::int64_t count) const {
    const int L = set->context_len;
    const int F = set->num_features;
    TokenBatch batch;
    batch.batch = static_cast<int>(count);
    batch.len = L;
    batch.feats = F;
    batch.tokens.resize(static_cast<std::size_t>(count) * L * F);
    const std::int64_t stride = static_cast<std::int64_t>(L) * F;
    for (std::int64_t i = 0; i < count; ++i) {
        const std::int64_t sample = idx[static_cast<std::size_t>(first + i)];
        std::copy_n(set->contexts.begin() + sample * stride, stride,
                    batch.tokens.begin() + i * stride);
    }
    return batch;
}

std::vector<std::int32_t> WindowSlice::gather_targets(std::int64_t first, std::int64_t count) const {
    std::vector<std::int32_t> out(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] =
            set->targets[static_cast<std::size_t>(idx[static_cast<std::size_t>(first + i)])];
    return out;
}

WindowSlice full_slice(const WindowSet& windows) {
    WindowSlice s;
    s.set = &windows;
    s.idx.resize(static_cast<std::size_t>(windows.size()));
    std::iota(s.idx.begin(), s.idx.end(), 0);
    return s;
}

WindowSlice slice_by_song(const WindowSet& windows, std::span<const int> songs) {
    WindowSlice s;
    s.set = &windows;
    s.idx = select_by_song(windows, songs);
    return s;
}

TokenBatch extract_feature(const TokenBatch& batch, int lane) {
    if (lane < 0 || lane >= batch.feats) throw IndexOutOfRange("feature lane out of range");
    TokenBatch out;
    out.batch = batch.batch;
    out.len = batch.len;
    out.feats = 1;
    out.tokens.resize(static_cast<std::size_t>(batch.batch) * batch.len);
    for (int b = 0; b < batch.batch; ++b)
        for (int t = 0; t < batch.len; ++t)
            out.tokens[static_cast<std::size_t>(b) * batch.len + t] = batch.at(b, t, lane);
    return out;
}

}  // namespace chordlab
