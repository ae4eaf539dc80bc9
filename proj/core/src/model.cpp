#include "chordlab/model.hpp"

namespace chordlab {
namespace {

constexpr ModelKind kAllKinds[] = {
    ModelKind::markov,     ModelKind::vom,
    ModelKind::lstm,       ModelKind::lstm_attn,
    ModelKind::transformer, ModelKind::gpt,
    ModelKind::multi_lstm, ModelKind::multi_lstm_attn,
    ModelKind::multi_transformer, ModelKind::multi_gpt,
};

}  // namespace

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::markov: return "markov";
        case ModelKind::vom: return "vom";
        case ModelKind::lstm: return "lstm";
        case ModelKind::lstm_attn: return "lstm-attn";
        case ModelKind::transformer: return "transformer";
        case ModelKind::gpt: return "gpt";
        case ModelKind::multi_lstm: return "multi-lstm";
        case ModelKind::multi_lstm_attn: return "multi-lstm-attn";
        case ModelKind::multi_transformer: return "multi-transformer";
        case ModelKind::multi_gpt: return "multi-gpt";
    }
    return "?";
}

std::optional<ModelKind> model_kind_from_string(std::string_view name) {
    for (ModelKind k : kAllKinds)
        if (name == to_string(k)) return k;
    return std::nullopt;
}

std::vector<std::string> all_model_kind_names() {
    std::vector<std::string> out;
    for (ModelKind k : kAllKinds) out.emplace_back(to_string(k));
    return out;
}

bool is_statistical(ModelKind kind) {
    return kind == ModelKind::markov || kind == ModelKind::vom;
}

bool is_multi_feature(ModelKind kind) {
    switch (kind) {
        case ModelKind::multi_lstm:
        case ModelKind::multi_lstm_attn:
        case ModelKind::multi_transformer:
        case ModelKind::multi_gpt: return true;
        default: return false;
    }
}

bool is_gpt_family(ModelKind kind) {
    return kind == ModelKind::gpt || kind == ModelKind::multi_gpt;
}

bool is_attention(ModelKind kind) {
    return kind == ModelKind::lstm_attn || kind == ModelKind::multi_lstm_attn;
}

template <typename T>
static std::int32_t argmax_lowest_impl(std::span<const T> row) {
    std::int32_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
        if (row[i] > row[static_cast<std::size_t>(best)]) best = static_cast<std::int32_t>(i);
    return best;
}

std::int32_t argmax_lowest(std::span<const float> row) { return argmax_lowest_impl(row); }
std::int32_t argmax_lowest(std::span<const double> row) { return argmax_lowest_impl(row); }

}  // namespace chordlab
