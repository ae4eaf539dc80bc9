#include "chordlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "chordlab/errors.hpp"
#include "chordlab/parallel.hpp"

namespace chordlab {
namespace {

// C = A.B (or += with kZero=false). Row-major. The k loop runs ascending for
// every output element regardless of the parallel partition, so results are
// bitwise identical for any worker count.
template <typename T, bool kZero>
void mm_kernel(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
    const std::int64_t flops = m * k * n;
    const std::int64_t grain = std::max<std::int64_t>(1, 262144 / std::max<std::int64_t>(1, k * n));
    auto body = [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            T* crow = c + i * n;
            if (kZero) std::fill(crow, crow + n, T(0));
            const T* arow = a + i * k;
            for (std::int64_t kk = 0; kk < k; ++kk) {
                const T av = arow[kk];
                const T* brow = b + kk * n;
                for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    };
    if (flops < 32768)
        body(0, m);
    else
        parallel_for(m, grain, body);
}

template <typename T>
std::vector<T> transpose2d(const T* x, std::int64_t rows, std::int64_t cols) {
    std::vector<T> out(static_cast<std::size_t>(rows * cols));
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) out[static_cast<std::size_t>(c * rows + r)] = x[r * cols + c];
    return out;
}

inline std::int64_t prod(const Shape& s, std::size_t from, std::size_t to) {
    std::int64_t p = 1;
    for (std::size_t i = from; i < to; ++i) p *= s[i];
    return p;
}

}  // namespace

template <typename T>
int Graph<T>::push(Shape shape, std::vector<T> value, bool requires_grad) {
    Node node;
    node.shape = std::move(shape);
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
void Graph<T>::set_backprop(int id, std::function<void()> fn) {
    if (nodes_[static_cast<std::size_t>(id)].requires_grad)
        nodes_[static_cast<std::size_t>(id)].backprop = std::move(fn);
}

template <typename T>
std::vector<T>& Graph<T>::ensure_grad(int id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.empty()) node.grad.assign(node.value.size(), T(0));
    return node.grad;
}

template <typename T>
std::vector<T>& Graph<T>::grad(int id) {
    return ensure_grad(id);
}

template <typename T>
int Graph<T>::leaf(HostTensor<T> value, bool requires_grad) {
    return push(value.shape, std::move(value.data), requires_grad);
}

template <typename T>
int Graph<T>::leaf(const Shape& shape, std::span<const T> data, bool requires_grad) {
    if (static_cast<std::int64_t>(data.size()) != numel(shape))
        throw ShapeMismatch("leaf data does not match shape " + shape_str(shape));
    return push(shape, std::vector<T>(data.begin(), data.end()), requires_grad);
}

template <typename T>
int Graph<T>::matmul(int a, int b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
        throw ShapeMismatch("matmul " + shape_str(sa) + " x " + shape_str(sb));
    const std::int64_t m = sa[0], k = sa[1], n = sb[1];
    std::vector<T> out(static_cast<std::size_t>(m * n));
    mm_kernel<T, true>(value(a).data(), value(b).data(), out.data(), m, k, n);

    const int id = push({sa[0], sb[1]}, std::move(out), requires_grad(a) || requires_grad(b));
    set_backprop(id, [this, a, b, id, m, k, n] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        if (requires_grad(a)) {
            const auto bt = transpose2d(value(b).data(), k, n);  // [n,k]
            mm_kernel<T, false>(g.data(), bt.data(), ensure_grad(a).data(), m, n, k);
        }
        if (requires_grad(b)) {
            const auto at = transpose2d(value(a).data(), m, k);  // [k,m]
            mm_kernel<T, false>(at.data(), g.data(), ensure_grad(b).data(), k, m, n);
        }
    });
    return id;
}

template <typename T>
int Graph<T>::bmm(int a, int b) {
    const Shape& sa = shape(a);
    const Shape& sb = shape(b);
    if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0] || sa[2] != sb[1])
        throw ShapeMismatch("bmm " + shape_str(sa) + " x " + shape_str(sb));
    const std::int64_t nb = sa[0], m = sa[1], k = sa[2], n = sb[2];
    std::vector<T> out(static_cast<std::size_t>(nb * m * n));
    {
        const T* pa = value(a).data();
        const T* pb = value(b).data();
        T* pc = out.data();
        parallel_for(nb, std::max<std::int64_t>(1, 16384 / std::max<std::int64_t>(1, m * k * n)),
                     [&](std::int64_t i0, std::int64_t i1) {
                         for (std::int64_t i = i0; i < i1; ++i)
                             mm_kernel<T, true>(pa + i * m * k, pb + i * k * n, pc + i * m * n, m, k, n);
                     });
    }
    const int id = push({sa[0], sa[1], sb[2]}, std::move(out), requires_grad(a) || requires_grad(b));
    set_backprop(id, [this, a, b, id, nb, m, k, n] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        if (requires_grad(a)) {
            std::vector<T>& ga = ensure_grad(a);
            for (std::int64_t i = 0; i < nb; ++i) {
                const auto bt = transpose2d(value(b).data() + i * k * n, k, n);
                mm_kernel<T, false>(g.data() + i * m * n, bt.data(), ga.data() + i * m * k, m, n, k);
            }
        }
        if (requires_grad(b)) {
            std::vector<T>& gb = ensure_grad(b);
            for (std::int64_t i = 0; i < nb; ++i) {
                const auto at = transpose2d(value(a).data() + i * m * k, m, k);
                mm_kernel<T, false>(at.data(), g.data() + i * m * n, gb.data() + i * k * n, k, m, n);
            }
        }
    });
    return id;
}

template <typename T>
int Graph<T>::add(int a, int b) {
    if (shape(a) != shape(b))
        throw ShapeMismatch("add " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
    const std::vector<T>& va = value(a);
    const std::vector<T>& vb = value(b);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[i];
    const int id = push(shape(a), std::move(out), requires_grad(a) || requires_grad(b));
    set_backprop(id, [this, a, b, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        for (int src : {a, b})
            if (requires_grad(src)) {
                std::vector<T>& gs = ensure_grad(src);
                for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i];
            }
    });
    return id;
}

template <typename T>
int Graph<T>::add_bias(int x, int bias) {
    const Shape& sx = shape(x);
    const Shape& sb = shape(bias);
    if (sb.size() > sx.size() ||
        !std::equal(sb.begin(), sb.end(), sx.end() - static_cast<std::ptrdiff_t>(sb.size())))
        throw ShapeMismatch("add_bias: " + shape_str(sb) + " is not a suffix of " + shape_str(sx));
    const std::vector<T>& vx = value(x);
    const std::vector<T>& vb = value(bias);
    const std::size_t nb = vb.size();
    std::vector<T> out(vx.size());
    for (std::size_t i = 0; i < vx.size(); ++i) out[i] = vx[i] + vb[i % nb];
    const int id = push(sx, std::move(out), requires_grad(x) || requires_grad(bias));
    set_backprop(id, [this, x, bias, id, nb] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        if (requires_grad(x)) {
            std::vector<T>& gx = ensure_grad(x);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (requires_grad(bias)) {
            std::vector<T>& gb = ensure_grad(bias);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % nb] += g[i];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::mul(int a, int b) {
    if (shape(a) != shape(b))
        throw ShapeMismatch("mul " + shape_str(shape(a)) + " vs " + shape_str(shape(b)));
    const std::vector<T>& va = value(a);
    const std::vector<T>& vb = value(b);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[i];
    const int id = push(shape(a), std::move(out), requires_grad(a) || requires_grad(b));
    set_backprop(id, [this, a, b, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        if (requires_grad(a)) {
            std::vector<T>& ga = ensure_grad(a);
            const std::vector<T>& vb = value(b);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
        }
        if (requires_grad(b)) {
            std::vector<T>& gb = ensure_grad(b);
            const std::vector<T>& va = value(a);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::scale(int a, T c) {
    const std::vector<T>& va = value(a);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * c;
    const int id = push(shape(a), std::move(out), requires_grad(a));
    set_backprop(id, [this, a, id, c] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& ga = ensure_grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
    return id;
}

template <typename T>
int Graph<T>::sigmoid(int a) {
    const std::vector<T>& va = value(a);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-va[i]));
    const int id = push(shape(a), std::move(out), requires_grad(a));
    set_backprop(id, [this, a, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        const std::vector<T>& y = value(id);
        std::vector<T>& ga = ensure_grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
    });
    return id;
}

template <typename T>
int Graph<T>::tanh_(int a) {
    const std::vector<T>& va = value(a);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = std::tanh(va[i]);
    const int id = push(shape(a), std::move(out), requires_grad(a));
    set_backprop(id, [this, a, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        const std::vector<T>& y = value(id);
        std::vector<T>& ga = ensure_grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
    });
    return id;
}

template <typename T>
int Graph<T>::relu(int a) {
    const std::vector<T>& va = value(a);
    std::vector<T> out(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] > T(0) ? va[i] : T(0);
    const int id = push(shape(a), std::move(out), requires_grad(a));
    set_backprop(id, [this, a, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        const std::vector<T>& vx = value(a);
        std::vector<T>& ga = ensure_grad(a);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (vx[i] > T(0)) ga[i] += g[i];
    });
    return id;
}

template <typename T>
int Graph<T>::softmax(int a) {
    const Shape& s = shape(a);
    if (s.empty()) throw ShapeMismatch("softmax needs at least one axis");
    const std::int64_t n = s.back();
    const std::int64_t rows = numel(s) / n;
    const std::vector<T>& vx = value(a);
    std::vector<T> out(vx.size());
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* x = vx.data() + r * n;
        T* y = out.data() + r * n;
        T mx = x[0];
        for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
        T sum = T(0);
        for (std::int64_t j = 0; j < n; ++j) {
            y[j] = std::exp(x[j] - mx);
            sum += y[j];
        }
        const T inv = T(1) / sum;
        for (std::int64_t j = 0; j < n; ++j) y[j] *= inv;
    }
    const int id = push(s, std::move(out), requires_grad(a));
    set_backprop(id, [this, a, id, rows, n] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        const std::vector<T>& y = value(id);
        std::vector<T>& ga = ensure_grad(a);
        for (std::int64_t r = 0; r < rows; ++r) {
            const T* gr = g.data() + r * n;
            const T* yr = y.data() + r * n;
            T dot = T(0);
            for (std::int64_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
            T* gar = ga.data() + r * n;
            for (std::int64_t j = 0; j < n; ++j) gar[j] += yr[j] * (gr[j] - dot);
        }
    });
    return id;
}

template <typename T>
int Graph<T>::embedding(int table, std::span<const std::int32_t> ids, const Shape& ids_shape) {
    const Shape& st = shape(table);
    if (st.size() != 2) throw ShapeMismatch("embedding table must be [V,d]");
    if (static_cast<std::int64_t>(ids.size()) != numel(ids_shape))
        throw ShapeMismatch("embedding ids do not match ids_shape");
    const std::int64_t v = st[0], d = st[1];
    for (std::int32_t idx : ids)
        if (idx < 0 || idx >= v)
            throw IndexOutOfRange("embedding id " + std::to_string(idx) + " out of [0," +
                                  std::to_string(v) + ")");
    Shape out_shape = ids_shape;
    out_shape.push_back(static_cast<int>(d));
    const std::vector<T>& vt = value(table);
    std::vector<T> out(ids.size() * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(vt.data() + static_cast<std::int64_t>(ids[i]) * d, d, out.data() + static_cast<std::int64_t>(i) * d);
    const int id = push(std::move(out_shape), std::move(out), requires_grad(table));
    std::vector<std::int32_t> ids_copy(ids.begin(), ids.end());
    set_backprop(id, [this, table, id, d, ids_copy = std::move(ids_copy)] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gt = ensure_grad(table);
        // repeated ids accumulate, in sample order
        for (std::size_t i = 0; i < ids_copy.size(); ++i) {
            T* row = gt.data() + static_cast<std::int64_t>(ids_copy[i]) * d;
            const T* gr = g.data() + static_cast<std::int64_t>(i) * d;
            for (std::int64_t j = 0; j < d; ++j) row[j] += gr[j];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::layer_norm(int x, int gain, int bias, T eps) {
    const Shape& s = shape(x);
    const std::int64_t n = s.back();
    const std::int64_t rows = numel(s) / n;
    if (shape(gain) != Shape{static_cast<int>(n)} || shape(bias) != Shape{static_cast<int>(n)})
        throw ShapeMismatch("layer_norm gain/bias must be [" + std::to_string(n) + "]");
    const std::vector<T>& vx = value(x);
    const std::vector<T>& vg = value(gain);
    const std::vector<T>& vb = value(bias);
    std::vector<T> out(vx.size());
    auto xhat = std::make_shared<std::vector<T>>(vx.size());
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = vx.data() + r * n;
        T mean = T(0);
        for (std::int64_t j = 0; j < n; ++j) mean += xr[j];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (std::int64_t j = 0; j < n; ++j) {
            const T dv = xr[j] - mean;
            var += dv * dv;
        }
        var /= static_cast<T>(n);
        const T istd = T(1) / std::sqrt(var + eps);
        (*inv_std)[static_cast<std::size_t>(r)] = istd;
        T* xh = xhat->data() + r * n;
        T* y = out.data() + r * n;
        for (std::int64_t j = 0; j < n; ++j) {
            xh[j] = (xr[j] - mean) * istd;
            y[j] = xh[j] * vg[static_cast<std::size_t>(j)] + vb[static_cast<std::size_t>(j)];
        }
    }
    const int id = push(s, std::move(out),
                        requires_grad(x) || requires_grad(gain) || requires_grad(bias));
    set_backprop(id, [this, x, gain, bias, id, rows, n, xhat, inv_std] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        const std::vector<T>& vg = value(gain);
        if (requires_grad(gain)) {
            std::vector<T>& gg = ensure_grad(gain);
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t j = 0; j < n; ++j)
                    gg[static_cast<std::size_t>(j)] += g[r * n + j] * (*xhat)[r * n + j];
        }
        if (requires_grad(bias)) {
            std::vector<T>& gb = ensure_grad(bias);
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t j = 0; j < n; ++j) gb[static_cast<std::size_t>(j)] += g[r * n + j];
        }
        if (requires_grad(x)) {
            std::vector<T>& gx = ensure_grad(x);
            for (std::int64_t r = 0; r < rows; ++r) {
                const T* gr = g.data() + r * n;
                const T* xh = xhat->data() + r * n;
                T mean_dxhat = T(0), mean_dxhat_xhat = T(0);
                for (std::int64_t j = 0; j < n; ++j) {
                    const T dxh = gr[j] * vg[static_cast<std::size_t>(j)];
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * xh[j];
                }
                mean_dxhat /= static_cast<T>(n);
                mean_dxhat_xhat /= static_cast<T>(n);
                const T istd = (*inv_std)[static_cast<std::size_t>(r)];
                T* gxr = gx.data() + r * n;
                for (std::int64_t j = 0; j < n; ++j) {
                    const T dxh = gr[j] * vg[static_cast<std::size_t>(j)];
                    gxr[j] += istd * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
                }
            }
        }
    });
    return id;
}

template <typename T>
int Graph<T>::cross_entropy(int logits, std::span<const std::int32_t> targets,
                            std::int32_t ignore_index) {
    const Shape& s = shape(logits);
    if (s.size() != 2) throw ShapeMismatch("cross_entropy expects [B,V] logits");
    const std::int64_t b = s[0], v = s[1];
    if (static_cast<std::int64_t>(targets.size()) != b)
        throw ShapeMismatch("cross_entropy targets size != batch");
    for (std::int32_t t : targets)
        if (t != ignore_index && (t < 0 || t >= v))
            throw IndexOutOfRange("target id " + std::to_string(t) + " out of range");

    const std::vector<T>& vx = value(logits);
    auto probs = std::make_shared<std::vector<T>>(vx.size());
    std::int64_t kept = 0;
    T loss = T(0);
    for (std::int64_t r = 0; r < b; ++r) {
        const T* x = vx.data() + r * v;
        T* p = probs->data() + r * v;
        T mx = x[0];
        for (std::int64_t j = 1; j < v; ++j) mx = std::max(mx, x[j]);
        T sum = T(0);
        for (std::int64_t j = 0; j < v; ++j) {
            p[j] = std::exp(x[j] - mx);
            sum += p[j];
        }
        const T inv = T(1) / sum;
        for (std::int64_t j = 0; j < v; ++j) p[j] *= inv;
        if (targets[static_cast<std::size_t>(r)] == ignore_index) continue;
        ++kept;
        loss += std::log(sum) + mx - x[targets[static_cast<std::size_t>(r)]];
    }
    if (kept > 0) loss /= static_cast<T>(kept);
    const int id = push({1}, {loss}, requires_grad(logits));
    std::vector<std::int32_t> tgt(targets.begin(), targets.end());
    set_backprop(id, [this, logits, id, b, v, kept, ignore_index, probs, tgt = std::move(tgt)] {
        if (kept == 0) return;
        const T g = nodes_[static_cast<std::size_t>(id)].grad[0] / static_cast<T>(kept);
        std::vector<T>& gx = ensure_grad(logits);
        for (std::int64_t r = 0; r < b; ++r) {
            if (tgt[static_cast<std::size_t>(r)] == ignore_index) continue;
            const T* p = probs->data() + r * v;
            T* gr = gx.data() + r * v;
            for (std::int64_t j = 0; j < v; ++j) gr[j] += g * p[j];
            gr[tgt[static_cast<std::size_t>(r)]] -= g;
        }
    });
    return id;
}

template <typename T>
int Graph<T>::concat(std::span<const int> xs, int axis) {
    if (xs.empty()) throw ShapeMismatch("concat of nothing");
    const Shape& first = shape(xs[0]);
    const auto nd = static_cast<int>(first.size());
    if (axis < 0 || axis >= nd) throw ShapeMismatch("concat axis out of range");
    Shape out_shape = first;
    out_shape[static_cast<std::size_t>(axis)] = 0;
    bool needs_grad = false;
    for (int x : xs) {
        const Shape& s = shape(x);
        if (static_cast<int>(s.size()) != nd) throw ShapeMismatch("concat rank mismatch");
        for (int d = 0; d < nd; ++d)
            if (d != axis && s[static_cast<std::size_t>(d)] != first[static_cast<std::size_t>(d)])
                throw ShapeMismatch("concat dim mismatch at axis " + std::to_string(d));
        out_shape[static_cast<std::size_t>(axis)] += s[static_cast<std::size_t>(axis)];
        needs_grad = needs_grad || requires_grad(x);
    }
    const std::int64_t rows = prod(first, 0, static_cast<std::size_t>(axis));
    const std::int64_t inner = prod(first, static_cast<std::size_t>(axis) + 1, first.size());
    std::vector<std::int64_t> blocks;  // per input: axis_dim * inner
    for (int x : xs) blocks.push_back(shape(x)[static_cast<std::size_t>(axis)] * inner);
    const std::int64_t out_block = out_shape[static_cast<std::size_t>(axis)] * inner;

    std::vector<T> out(static_cast<std::size_t>(rows * out_block));
    {
        std::int64_t off = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::vector<T>& vx = value(xs[i]);
            for (std::int64_t r = 0; r < rows; ++r)
                std::copy_n(vx.data() + r * blocks[i], blocks[i], out.data() + r * out_block + off);
            off += blocks[i];
        }
    }
    std::vector<int> xs_copy(xs.begin(), xs.end());
    const int id = push(std::move(out_shape), std::move(out), needs_grad);
    set_backprop(id, [this, id, rows, out_block, blocks, xs_copy = std::move(xs_copy)] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::int64_t off = 0;
        for (std::size_t i = 0; i < xs_copy.size(); ++i) {
            if (requires_grad(xs_copy[i])) {
                std::vector<T>& gx = ensure_grad(xs_copy[i]);
                for (std::int64_t r = 0; r < rows; ++r) {
                    const T* src = g.data() + r * out_block + off;
                    T* dst = gx.data() + r * blocks[i];
                    for (std::int64_t j = 0; j < blocks[i]; ++j) dst[j] += src[j];
                }
            }
            off += blocks[i];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::slice(int x, int axis, int start, int len) {
    const Shape& s = shape(x);
    const auto nd = static_cast<int>(s.size());
    if (axis < 0 || axis >= nd) throw ShapeMismatch("slice axis out of range");
    if (start < 0 || len < 0 || start + len > s[static_cast<std::size_t>(axis)])
        throw ShapeMismatch("slice bounds [" + std::to_string(start) + "," +
                            std::to_string(start + len) + ") exceed axis size " +
                            std::to_string(s[static_cast<std::size_t>(axis)]));
    Shape out_shape = s;
    out_shape[static_cast<std::size_t>(axis)] = len;
    const std::int64_t rows = prod(s, 0, static_cast<std::size_t>(axis));
    const std::int64_t inner = prod(s, static_cast<std::size_t>(axis) + 1, s.size());
    const std::int64_t in_block = s[static_cast<std::size_t>(axis)] * inner;
    const std::int64_t out_block = static_cast<std::int64_t>(len) * inner;
    const std::int64_t off = static_cast<std::int64_t>(start) * inner;

    const std::vector<T>& vx = value(x);
    std::vector<T> out(static_cast<std::size_t>(rows * out_block));
    for (std::int64_t r = 0; r < rows; ++r)
        std::copy_n(vx.data() + r * in_block + off, out_block, out.data() + r * out_block);
    const int id = push(std::move(out_shape), std::move(out), requires_grad(x));
    set_backprop(id, [this, x, id, rows, in_block, out_block, off] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gx = ensure_grad(x);
        for (std::int64_t r = 0; r < rows; ++r) {
            const T* src = g.data() + r * out_block;
            T* dst = gx.data() + r * in_block + off;
            for (std::int64_t j = 0; j < out_block; ++j) dst[j] += src[j];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::reshape(int x, Shape new_shape) {
    if (numel(new_shape) != numel(shape(x)))
        throw ShapeMismatch("reshape " + shape_str(shape(x)) + " -> " + shape_str(new_shape));
    const int id = push(std::move(new_shape), value(x), requires_grad(x));
    set_backprop(id, [this, x, id] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gx = ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return id;
}

template <typename T>
int Graph<T>::transpose(int x, int axis_a, int axis_b) {
    const Shape& s = shape(x);
    const auto nd = static_cast<int>(s.size());
    if (axis_a < 0 || axis_a >= nd || axis_b < 0 || axis_b >= nd)
        throw ShapeMismatch("transpose axes out of range");
    Shape out_shape = s;
    std::swap(out_shape[static_cast<std::size_t>(axis_a)], out_shape[static_cast<std::size_t>(axis_b)]);

    // strides of the input, permuted into output axis order
    std::vector<std::int64_t> in_strides(static_cast<std::size_t>(nd), 1);
    for (int d = nd - 2; d >= 0; --d)
        in_strides[static_cast<std::size_t>(d)] =
            in_strides[static_cast<std::size_t>(d + 1)] * s[static_cast<std::size_t>(d + 1)];
    std::vector<std::int64_t> perm_strides(in_strides);
    std::swap(perm_strides[static_cast<std::size_t>(axis_a)], perm_strides[static_cast<std::size_t>(axis_b)]);

    const std::int64_t n = numel(s);
    const std::vector<T>& vx = value(x);
    std::vector<T> out(static_cast<std::size_t>(n));
    std::vector<std::int64_t> out_strides(static_cast<std::size_t>(nd), 1);
    for (int d = nd - 2; d >= 0; --d)
        out_strides[static_cast<std::size_t>(d)] =
            out_strides[static_cast<std::size_t>(d + 1)] * out_shape[static_cast<std::size_t>(d + 1)];
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t rem = i, src = 0;
        for (int d = 0; d < nd; ++d) {
            const std::int64_t coord = rem / out_strides[static_cast<std::size_t>(d)];
            rem -= coord * out_strides[static_cast<std::size_t>(d)];
            src += coord * perm_strides[static_cast<std::size_t>(d)];
        }
        out[static_cast<std::size_t>(i)] = vx[static_cast<std::size_t>(src)];
    }
    const int id = push(std::move(out_shape), std::move(out), requires_grad(x));
    set_backprop(id, [this, x, id, nd, out_strides, perm_strides, n] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gx = ensure_grad(x);
        for (std::int64_t i = 0; i < n; ++i) {
            std::int64_t rem = i, src = 0;
            for (int d = 0; d < nd; ++d) {
                const std::int64_t coord = rem / out_strides[static_cast<std::size_t>(d)];
                rem -= coord * out_strides[static_cast<std::size_t>(d)];
                src += coord * perm_strides[static_cast<std::size_t>(d)];
            }
            gx[static_cast<std::size_t>(src)] += g[static_cast<std::size_t>(i)];
        }
    });
    return id;
}

template <typename T>
int Graph<T>::mask_fill(int x, std::span<const std::uint8_t> mask, T fill) {
    const std::vector<T>& vx = value(x);
    if (mask.size() != vx.size()) throw ShapeMismatch("mask_fill mask size != tensor size");
    std::vector<T> out(vx.size());
    for (std::size_t i = 0; i < vx.size(); ++i) out[i] = mask[i] ? fill : vx[i];
    const int id = push(shape(x), std::move(out), requires_grad(x));
    std::vector<std::uint8_t> mask_copy(mask.begin(), mask.end());
    set_backprop(id, [this, x, id, mask_copy = std::move(mask_copy)] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gx = ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!mask_copy[i]) gx[i] += g[i];
    });
    return id;
}

template <typename T>
int Graph<T>::dropout(int x, double p, Rng& rng) {
    if (p < 0 || p >= 1) throw Error("dropout rate must be in [0,1)");
    const std::vector<T>& vx = value(x);
    auto keep = std::make_shared<std::vector<T>>(vx.size());
    const T scale_kept = static_cast<T>(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < vx.size(); ++i)
        (*keep)[i] = rng.next_double() >= p ? scale_kept : T(0);
    std::vector<T> out(vx.size());
    for (std::size_t i = 0; i < vx.size(); ++i) out[i] = vx[i] * (*keep)[i];
    const int id = push(shape(x), std::move(out), requires_grad(x));
    set_backprop(id, [this, x, id, keep] {
        const std::vector<T>& g = nodes_[static_cast<std::size_t>(id)].grad;
        std::vector<T>& gx = ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*keep)[i];
    });
    return id;
}

template <typename T>
int Graph<T>::sum_all(int x) {
    const std::vector<T>& vx = value(x);
    T total = T(0);
    for (T v : vx) total += v;
    const int id = push({1}, {total}, requires_grad(x));
    set_backprop(id, [this, x, id] {
        const T g = nodes_[static_cast<std::size_t>(id)].grad[0];
        std::vector<T>& gx = ensure_grad(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
    return id;
}

template <typename T>
void Graph<T>::backward(int loss) {
    if (backward_done_) throw DoubleBackward("backward already ran on this graph");
    if (numel(shape(loss)) != 1) throw ShapeMismatch("backward needs a scalar loss");
    backward_done_ = true;
    ensure_grad(loss)[0] = T(1);
    for (int id = loss; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.backprop && !node.grad.empty()) node.backprop();
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace chordlab
