#pragma once

// Shared JSON helpers (internal; vendor headers stay out of public includes).

#include <json.hpp>

#include "chordlab/model.hpp"

namespace chordlab {

inline nlohmann::json hyperparams_to_json(const Hyperparams& hp) {
    return nlohmann::json{
        {"embed_dim", hp.embed_dim}, {"hidden_dim", hp.hidden_dim}, {"layers", hp.layers},
        {"heads", hp.heads},         {"context_len", hp.context_len},
        {"dropout", hp.dropout},     {"alpha", hp.alpha},           {"max_order", hp.max_order},
    };
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
    Hyperparams hp;
    hp.embed_dim = j.at("embed_dim").get<int>();
    hp.hidden_dim = j.at("hidden_dim").get<int>();
    hp.layers = j.at("layers").get<int>();
    hp.heads = j.at("heads").get<int>();
    hp.context_len = j.at("context_len").get<int>();
    hp.dropout = j.at("dropout").get<float>();
    hp.alpha = j.at("alpha").get<double>();
    hp.max_order = j.at("max_order").get<int>();
    return hp;
}

}  // namespace chordlab
