#include "chordlab/neural.hpp"

#include <cmath>
#include <limits>

#include "chordlab/checkpoint.hpp"
#include "chordlab/errors.hpp"

namespace chordlab {
namespace {

enum class Init { fan_in, one, zero };

struct ParamSpec {
    std::string name;
    Shape shape;
    Init init = Init::fan_in;
    int fan_in = 1;
};

// Parameter layout per architecture. Names are looked up by the builders, so
// this order is the single source of truth for construction, checkpoints and
// gradient collection.
std::vector<ParamSpec> layout(ModelKind kind, const Hyperparams& hp,
                              const std::vector<std::string>& features,
                              const std::vector<Vocabulary>& vocabs, int target_feature) {
    const int d = hp.embed_dim;
    const int h = hp.hidden_dim;
    const int L = hp.context_len;
    const int F = static_cast<int>(features.size());
    const int V = vocabs[static_cast<std::size_t>(target_feature)].size();

    std::vector<ParamSpec> out;
    auto fan = [&](std::string name, Shape shape, int fan_in) {
        out.push_back({std::move(name), std::move(shape), Init::fan_in, fan_in});
    };

    for (int f = 0; f < F; ++f)
        fan("embed." + features[static_cast<std::size_t>(f)],
            {vocabs[static_cast<std::size_t>(f)].size(), d}, d);

    const bool lstm_family = kind == ModelKind::lstm || kind == ModelKind::lstm_attn ||
                             kind == ModelKind::multi_lstm || kind == ModelKind::multi_lstm_attn;
    if (lstm_family) {
        for (int f = 0; f < F; ++f) {
            const std::string& feat = features[static_cast<std::size_t>(f)];
            for (int l = 0; l < hp.layers; ++l) {
                const int din = l == 0 ? d : h;
                const std::string p = "lstm." + feat + "." + std::to_string(l);
                fan(p + ".wx", {din, 4 * h}, din);
                fan(p + ".wh", {h, 4 * h}, h);
                fan(p + ".b", {4 * h}, din);
            }
        }
        if (kind == ModelKind::multi_lstm_attn) {
            fan("attn.w", {h, h}, h);
            for (int f = 0; f < F; ++f)
                fan("attn.ctx." + features[static_cast<std::size_t>(f)], {h}, h);
            fan("attn.v", {h, 1}, h);
        }
        const int head_in = kind == ModelKind::lstm_attn ? 2 * h
                            : kind == ModelKind::multi_lstm_attn ? h
                                                                 : F * h;
        fan("head.w", {head_in, V}, head_in);
        fan("head.b", {V}, head_in);
        return out;
    }

    // transformer / gpt family
    const int D = kind == ModelKind::transformer || kind == ModelKind::multi_transformer
                      ? F * d
                      : d;
    if (kind == ModelKind::multi_gpt) {
        fan("proj.w", {F * d, d}, F * d);
        fan("proj.b", {d}, F * d);
    }
    fan("pos", {L, D}, D);
    for (int l = 0; l < hp.layers; ++l) {
        const std::string p = "block." + std::to_string(l);
        for (const char* w : {"wq", "wk", "wv", "wo"}) fan(p + ".attn." + w, {D, D}, D);
        for (const char* b : {"bq", "bk", "bv", "bo"}) fan(p + ".attn." + b, {D}, D);
        out.push_back({p + ".ln1.g", {D}, Init::one, 0});
        out.push_back({p + ".ln1.b", {D}, Init::zero, 0});
        fan(p + ".ffn.w1", {D, h}, D);
        fan(p + ".ffn.b1", {h}, D);
        fan(p + ".ffn.w2", {h, D}, h);
        fan(p + ".ffn.b2", {D}, h);
        out.push_back({p + ".ln2.g", {D}, Init::one, 0});
        out.push_back({p + ".ln2.b", {D}, Init::zero, 0});
    }
    if (is_gpt_family(kind)) {
        out.push_back({"ln_f.g", {D}, Init::one, 0});
        out.push_back({"ln_f.b", {D}, Init::zero, 0});
    }
    fan("head.w", {D, V}, D);
    if (kind != ModelKind::gpt) fan("head.b", {V}, D);  // gpt head is bias-free
    return out;
}

}  // namespace

// ---- construction ----

NeuralModel::NeuralModel(ModelKind kind, Hyperparams hp, std::vector<std::string> features,
                         std::vector<Vocabulary> vocabs, int target_feature, std::uint64_t seed)
    : kind_(kind),
      hp_(hp),
      features_(std::move(features)),
      vocabs_(std::move(vocabs)),
      target_feature_(target_feature) {
    validate();
    init_params(seed);
}

NeuralModel::NeuralModel(ModelKind kind, Hyperparams hp, std::vector<std::string> features,
                         std::vector<Vocabulary> vocabs, int target_feature,
                         std::vector<NamedTensor> params)
    : kind_(kind),
      hp_(hp),
      features_(std::move(features)),
      vocabs_(std::move(vocabs)),
      target_feature_(target_feature),
      params_(std::move(params)) {
    validate();
    const auto specs = layout(kind_, hp_, features_, vocabs_, target_feature_);
    if (specs.size() != params_.size())
        throw CorruptCheckpoint("parameter count mismatch for " + std::string(to_string(kind_)));
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (params_[i].name != specs[i].name)
            throw CorruptCheckpoint("unexpected parameter '" + params_[i].name + "', wanted '" +
                                    specs[i].name + "'");
        if (params_[i].tensor.shape != specs[i].shape)
            throw CorruptCheckpoint("parameter '" + params_[i].name + "' has shape " +
                                    shape_str(params_[i].tensor.shape) + ", wanted " +
                                    shape_str(specs[i].shape));
        param_index_[params_[i].name] = static_cast<int>(i);
    }
}

void NeuralModel::validate() const {
    if (is_statistical(kind_)) throw Error("NeuralModel cannot hold a statistical kind");
    if (features_.size() != vocabs_.size()) throw Error("feature/vocab count mismatch");
    if (features_.empty()) throw Error("model needs at least one feature");
    if (!is_multi_feature(kind_) && features_.size() != 1)
        throw Error(std::string(to_string(kind_)) + " is single-feature");
    if (target_feature_ < 0 || target_feature_ >= static_cast<int>(features_.size()))
        throw Error("target feature index out of range");
    if (hp_.embed_dim < 1 || hp_.hidden_dim < 1 || hp_.layers < 1 || hp_.context_len < 1)
        throw Error("hyperparameter dimensions must be positive");
    const bool attention_stack = kind_ == ModelKind::transformer ||
                                 kind_ == ModelKind::multi_transformer || is_gpt_family(kind_);
    if (attention_stack && hp_.embed_dim % hp_.heads != 0)
        throw Error("embed_dim must be divisible by heads");
}

void NeuralModel::init_params(std::uint64_t seed) {
    Rng rng = Rng(seed).split("params");
    const auto specs = layout(kind_, hp_, features_, vocabs_, target_feature_);
    params_.clear();
    params_.reserve(specs.size());
    for (const ParamSpec& spec : specs) {
        HostTensor<float> t = HostTensor<float>::zeros(spec.shape);
        switch (spec.init) {
            case Init::fan_in: {
                const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
                for (float& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
                break;
            }
            case Init::one:
                for (float& v : t.data) v = 1.0f;
                break;
            case Init::zero:
                break;
        }
        param_index_[spec.name] = static_cast<int>(params_.size());
        params_.push_back({spec.name, std::move(t)});
    }
}

int NeuralModel::param_id(const std::string& name) const {
    auto it = param_index_.find(name);
    if (it == param_index_.end()) throw Error("unknown parameter: " + name);
    return it->second;
}

std::int64_t NeuralModel::param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
}

template <typename T>
std::vector<HostTensor<T>> NeuralModel::params_as() const {
    std::vector<HostTensor<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.tensor.template cast<T>());
    return out;
}

template <typename T>
std::vector<int> NeuralModel::param_leaves(Graph<T>& g, const std::vector<HostTensor<T>>& tensors,
                                           bool requires_grad) const {
    if (tensors.size() != params_.size()) throw ShapeMismatch("parameter tensor count mismatch");
    std::vector<int> ids;
    ids.reserve(tensors.size());
    for (const auto& t : tensors) ids.push_back(g.leaf(t, requires_grad));
    return ids;
}

// ---- builders ----

template <typename T>
struct Builder {
    Graph<T>& g;
    const NeuralModel& m;
    std::span<const int> leaves;
    const TokenBatch& batch;
    const BuildOptions& opts;
    int B, L;

    Builder(Graph<T>& graph, const NeuralModel& model, std::span<const int> leaf_ids,
            const TokenBatch& b, const BuildOptions& o)
        : g(graph), m(model), leaves(leaf_ids), batch(b), opts(o), B(b.batch), L(b.len) {}

    int P(const std::string& name) const {
        return leaves[static_cast<std::size_t>(m.param_id(name))];
    }

    int drop(int x) {
        if (!opts.training || m.hp_.dropout <= 0.0f) return x;
        return g.dropout(x, m.hp_.dropout, *opts.dropout_rng);
    }

    int embed(int f) {
        std::vector<std::int32_t> ids(static_cast<std::size_t>(B) * L);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < L; ++t)
                ids[static_cast<std::size_t>(b) * L + t] = batch.at(b, t, f);
        return g.embedding(P("embed." + m.features_[static_cast<std::size_t>(f)]), ids, {B, L});
    }

    // stacked LSTM; returns the last layer's state sequence [B,L,h]
    int lstm_tower(const std::string& feat, int x3) {
        const int h = m.hp_.hidden_dim;
        int input = x3;
        for (int l = 0; l < m.hp_.layers; ++l) {
            const int din = g.shape(input)[2];
            const std::string p = "lstm." + feat + "." + std::to_string(l);
            const int wx = P(p + ".wx"), wh = P(p + ".wh"), b = P(p + ".b");
            int h_state = g.leaf(HostTensor<T>::zeros({B, h}), false);
            int c_state = g.leaf(HostTensor<T>::zeros({B, h}), false);
            std::vector<int> states;
            states.reserve(static_cast<std::size_t>(L));
            for (int t = 0; t < L; ++t) {
                const int xt = g.reshape(g.slice(input, 1, t, 1), {B, din});
                const int gates =
                    g.add_bias(g.add(g.matmul(xt, wx), g.matmul(h_state, wh)), b);  // [B,4h]
                const int i_g = g.sigmoid(g.slice(gates, 1, 0, h));
                const int f_g = g.sigmoid(g.slice(gates, 1, h, h));
                const int g_g = g.tanh_(g.slice(gates, 1, 2 * h, h));
                const int o_g = g.sigmoid(g.slice(gates, 1, 3 * h, h));
                c_state = g.add(g.mul(f_g, c_state), g.mul(i_g, g_g));
                h_state = g.mul(o_g, g.tanh_(c_state));
                states.push_back(g.reshape(h_state, {B, 1, h}));
            }
            input = drop(g.concat(states, 1));  // [B,L,h]
        }
        return input;
    }

    int last_step(int x3) {
        const Shape& s = g.shape(x3);
        return g.reshape(g.slice(x3, 1, s[1] - 1, 1), {B, s[2]});
    }

    int mha(int x3, const std::string& prefix, bool causal) {
        const int D = g.shape(x3)[2];
        const int H = m.hp_.heads;
        const int dh = D / H;
        const int x2 = g.reshape(x3, {B * L, D});
        auto proj = [&](const char* w, const char* b) {
            return g.add_bias(g.matmul(x2, P(prefix + "." + w)), P(prefix + "." + b));
        };
        auto split_heads = [&](int x) {
            return g.reshape(g.transpose(g.reshape(x, {B, L, H, dh}), 1, 2), {B * H, L, dh});
        };
        const int q = split_heads(proj("wq", "bq"));
        const int k = split_heads(proj("wk", "bk"));
        const int v = split_heads(proj("wv", "bv"));
        int scores = g.scale(g.bmm(q, g.transpose(k, 1, 2)),
                             static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
        if (causal) {
            // upper triangle (future positions) per [L,L] tile
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(B) * H * L * L, 0);
            for (std::int64_t tile = 0; tile < static_cast<std::int64_t>(B) * H; ++tile)
                for (int r = 0; r < L; ++r)
                    for (int c = r + 1; c < L; ++c)
                        mask[static_cast<std::size_t>((tile * L + r) * L + c)] = 1;
            scores = g.mask_fill(scores, mask, -std::numeric_limits<T>::infinity());
        }
        const int att = g.softmax(scores);
        int out = g.bmm(att, v);  // [B*H, L, dh]
        out = g.reshape(g.transpose(g.reshape(out, {B, H, L, dh}), 1, 2), {B * L, D});
        out = g.add_bias(g.matmul(out, P(prefix + ".wo")), P(prefix + ".bo"));
        return g.reshape(out, {B, L, D});
    }

    int ffn(int x3, const std::string& prefix) {
        const int D = g.shape(x3)[2];
        const int x2 = g.reshape(x3, {B * L, D});
        const int inner =
            g.relu(g.add_bias(g.matmul(x2, P(prefix + ".w1")), P(prefix + ".b1")));
        const int out = g.add_bias(g.matmul(inner, P(prefix + ".w2")), P(prefix + ".b2"));
        return g.reshape(out, {B, L, D});
    }

    int encoder_block(int x3, int l) {  // post-LN
        const std::string p = "block." + std::to_string(l);
        const int a = mha(x3, p + ".attn", false);
        x3 = g.layer_norm(g.add(x3, a), P(p + ".ln1.g"), P(p + ".ln1.b"));
        const int f = ffn(x3, p + ".ffn");
        x3 = g.layer_norm(g.add(x3, f), P(p + ".ln2.g"), P(p + ".ln2.b"));
        return drop(x3);
    }

    int decoder_block(int x3, int l) {  // pre-LN, causal
        const std::string p = "block." + std::to_string(l);
        const int a = mha(g.layer_norm(x3, P(p + ".ln1.g"), P(p + ".ln1.b")), p + ".attn", true);
        x3 = g.add(x3, a);
        const int f = ffn(g.layer_norm(x3, P(p + ".ln2.g"), P(p + ".ln2.b")), p + ".ffn");
        x3 = g.add(x3, f);
        return drop(x3);
    }

    int embed_all() {  // per-feature embeddings, channel-concatenated [B,L,F*d]
        std::vector<int> embeds;
        for (int f = 0; f < static_cast<int>(m.features_.size()); ++f) embeds.push_back(embed(f));
        return embeds.size() == 1 ? embeds[0] : g.concat(embeds, 2);
    }

    int head(int x2) {
        int logits = g.matmul(x2, P("head.w"));
        if (m.param_index_.count("head.b")) logits = g.add_bias(logits, P("head.b"));
        return logits;
    }

    BuildResult<T> run() {
        BuildResult<T> out;
        const int h = m.hp_.hidden_dim;
        switch (m.kind_) {
            case ModelKind::lstm:
            case ModelKind::multi_lstm: {
                std::vector<int> lasts;
                for (int f = 0; f < static_cast<int>(m.features_.size()); ++f) {
                    const int H = lstm_tower(m.features_[static_cast<std::size_t>(f)],
                                             drop(embed(f)));
                    lasts.push_back(last_step(H));
                }
                const int cat = lasts.size() == 1 ? lasts[0] : g.concat(lasts, 1);
                out.logits = head(cat);
                break;
            }
            case ModelKind::lstm_attn: {
                const int H = lstm_tower(m.features_[0], drop(embed(0)));  // [B,L,h]
                const int h_last = last_step(H);
                const int scores =
                    g.reshape(g.bmm(H, g.reshape(h_last, {B, h, 1})), {B, L});
                const int alpha = g.softmax(scores);
                out.attention = alpha;
                const int ctx = g.reshape(g.bmm(g.reshape(alpha, {B, 1, L}), H), {B, h});
                out.logits = head(g.concat(std::vector<int>{ctx, h_last}, 1));
                break;
            }
            case ModelKind::multi_lstm_attn: {
                std::vector<int> towers, scores;
                for (int f = 0; f < static_cast<int>(m.features_.size()); ++f) {
                    const std::string& feat = m.features_[static_cast<std::size_t>(f)];
                    const int H = lstm_tower(feat, drop(embed(f)));
                    towers.push_back(H);
                    // e_{f,t} = v' tanh(W h_{f,t} + c_f)
                    const int s2 = g.tanh_(g.add_bias(
                        g.matmul(g.reshape(H, {B * L, h}), P("attn.w")), P("attn.ctx." + feat)));
                    scores.push_back(g.reshape(g.matmul(s2, P("attn.v")), {B, L}));
                }
                const int FL = static_cast<int>(m.features_.size()) * L;
                // joint softmax over the (feature, timestep) grid
                const int alpha =
                    g.softmax(scores.size() == 1 ? scores[0] : g.concat(scores, 1));
                out.attention = alpha;
                const int Hcat = towers.size() == 1 ? towers[0] : g.concat(towers, 1);
                const int ctx =
                    g.reshape(g.bmm(g.reshape(alpha, {B, 1, FL}), Hcat), {B, h});
                out.logits = head(ctx);
                break;
            }
            case ModelKind::transformer:
            case ModelKind::multi_transformer: {
                int x = embed_all();
                if (opts.positional) x = g.add_bias(x, P("pos"));
                x = drop(x);
                for (int l = 0; l < m.hp_.layers; ++l) x = encoder_block(x, l);
                out.logits = head(last_step(x));
                break;
            }
            case ModelKind::gpt:
            case ModelKind::multi_gpt: {
                int x = embed_all();
                if (m.kind_ == ModelKind::multi_gpt) {
                    const int Fd = g.shape(x)[2];
                    x = g.reshape(g.add_bias(g.matmul(g.reshape(x, {B * L, Fd}), P("proj.w")),
                                             P("proj.b")),
                                  {B, L, m.hp_.embed_dim});
                }
                if (opts.positional) x = g.add_bias(x, P("pos"));
                x = drop(x);
                for (int l = 0; l < m.hp_.layers; ++l) x = decoder_block(x, l);
                x = g.layer_norm(x, P("ln_f.g"), P("ln_f.b"));
                const int D = g.shape(x)[2];
                const int V = m.target_vocab_size();
                out.step_logits = g.reshape(head(g.reshape(x, {B * L, D})), {B, L, V});
                out.logits = g.reshape(g.slice(out.step_logits, 1, L - 1, 1), {B, V});
                break;
            }
            default:
                throw Error("statistical kind in neural build");
        }
        return out;
    }
};

template <typename T>
BuildResult<T> NeuralModel::build(Graph<T>& g, std::span<const int> leaves,
                                  const TokenBatch& batch, const BuildOptions& opts) const {
    if (batch.feats != num_features())
        throw ShapeMismatch("batch has " + std::to_string(batch.feats) + " features, model wants " +
                            std::to_string(num_features()));
    const bool fixed_len = !(kind_ == ModelKind::lstm || kind_ == ModelKind::multi_lstm ||
                             kind_ == ModelKind::lstm_attn || kind_ == ModelKind::multi_lstm_attn);
    if (fixed_len && batch.len != hp_.context_len)
        throw ShapeMismatch("batch length " + std::to_string(batch.len) +
                            " != model context length " + std::to_string(hp_.context_len));
    if (opts.training && hp_.dropout > 0 && opts.dropout_rng == nullptr)
        throw Error("training build with dropout needs an rng");
    Builder<T> builder(g, *this, leaves, batch, opts);
    return builder.run();
}

template <typename T>
int NeuralModel::build_loss(Graph<T>& g, std::span<const int> leaves, const TokenBatch& batch,
                            std::span<const std::int32_t> targets,
                            const BuildOptions& opts) const {
    BuildResult<T> r = build(g, leaves, batch, opts);
    if (kind_ == ModelKind::gpt) {
        // teacher forcing: position t predicts the token at t+1, the final
        // position predicts the window target; PAD targets are skipped
        const int B = batch.batch, L = batch.len;
        const int V = target_vocab_size();
        std::vector<std::int32_t> shifted(static_cast<std::size_t>(B) * L);
        for (int b = 0; b < B; ++b) {
            for (int t = 0; t + 1 < L; ++t)
                shifted[static_cast<std::size_t>(b) * L + t] = batch.at(b, t + 1, target_feature_);
            shifted[static_cast<std::size_t>(b) * L + L - 1] = targets[static_cast<std::size_t>(b)];
        }
        return g.cross_entropy(g.reshape(r.step_logits, {B * L, V}), shifted, Vocabulary::kPad);
    }
    return g.cross_entropy(r.logits, targets);
}

// ---- inference entry points ----

HostTensor<float> NeuralModel::predict(const TokenBatch& contexts) const {
    return predict_with(contexts, BuildOptions{});
}

HostTensor<float> NeuralModel::predict_with(const TokenBatch& contexts,
                                            const BuildOptions& opts) const {
    Graph<float> g;
    std::vector<int> leaves;
    leaves.reserve(params_.size());
    for (const auto& p : params_)
        leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), false));
    const BuildResult<float> r = build(g, leaves, contexts, opts);
    const int probs = g.softmax(r.logits);
    return HostTensor<float>({contexts.batch, target_vocab_size()}, g.value(probs));
}

HostTensor<float> NeuralModel::predict_steps(const TokenBatch& contexts) const {
    if (!is_gpt_family(kind_)) throw Error("per-position predictions are gpt-family only");
    Graph<float> g;
    std::vector<int> leaves;
    for (const auto& p : params_)
        leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), false));
    BuildOptions opts;
    const BuildResult<float> r = build(g, leaves, contexts, opts);
    const int probs = g.softmax(r.step_logits);
    return HostTensor<float>({contexts.batch, contexts.len, target_vocab_size()}, g.value(probs));
}

HostTensor<float> NeuralModel::attention_weights(const TokenBatch& contexts) const {
    if (!is_attention(kind_)) throw Error("attention weights are lstm-attn kinds only");
    Graph<float> g;
    std::vector<int> leaves;
    for (const auto& p : params_)
        leaves.push_back(g.leaf(p.tensor.shape, std::span<const float>(p.tensor.data), false));
    const BuildResult<float> r = build(g, leaves, contexts, BuildOptions{});
    HostTensor<float> out;
    out.shape = g.shape(r.attention);
    out.data = g.value(r.attention);
    return out;
}

void NeuralModel::save(const std::string& path) const { save_checkpoint(*this, path); }

// ---- explicit instantiations ----

template std::vector<HostTensor<float>> NeuralModel::params_as<float>() const;
template std::vector<HostTensor<double>> NeuralModel::params_as<double>() const;
template std::vector<int> NeuralModel::param_leaves<float>(
    Graph<float>&, const std::vector<HostTensor<float>>&, bool) const;
template std::vector<int> NeuralModel::param_leaves<double>(
    Graph<double>&, const std::vector<HostTensor<double>>&, bool) const;
template BuildResult<float> NeuralModel::build<float>(Graph<float>&, std::span<const int>,
                                                      const TokenBatch&, const BuildOptions&) const;
template BuildResult<double> NeuralModel::build<double>(Graph<double>&, std::span<const int>,
                                                        const TokenBatch&,
                                                        const BuildOptions&) const;
template int NeuralModel::build_loss<float>(Graph<float>&, std::span<const int>, const TokenBatch&,
                                            std::span<const std::int32_t>,
                                            const BuildOptions&) const;
template int NeuralModel::build_loss<double>(Graph<double>&, std::span<const int>,
                                             const TokenBatch&, std::span<const std::int32_t>,
                                             const BuildOptions&) const;

}  // namespace chordlab
