#pragma once

// Reverse-mode autodiff on dense host tensors.
//
// A Graph is a define-by-run tape: every op appends a node holding its output
// value and a closure implementing the exact adjoint. backward(loss) walks
// nodes in reverse creation order and accumulates gradients into every
// requires-grad leaf. One graph serves one forward/backward step and is then
// discarded; parameters live outside the graph as HostTensor buffers.
//
// float is the training precision; the same code instantiates at double for
// finite-difference gradient checks.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chordlab/rng.hpp"
#include "chordlab/tensor.hpp"

namespace chordlab {

template <typename T>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    int leaf(HostTensor<T> value, bool requires_grad);
    int leaf(const Shape& shape, std::span<const T> data, bool requires_grad);

    // ---- differentiable ops ----
    int matmul(int a, int b);              // [m,k] x [k,n] -> [m,n]
    int bmm(int a, int b);                 // [N,m,k] x [N,k,n] -> [N,m,n]
    int add(int a, int b);                 // same shape
    int add_bias(int x, int bias);         // bias shape is a suffix of x shape
    int mul(int a, int b);                 // elementwise, same shape
    int scale(int a, T c);
    int sigmoid(int a);
    int tanh_(int a);
    int relu(int a);
    int softmax(int a);                    // last axis, max-subtracted
    int embedding(int table, std::span<const std::int32_t> ids, const Shape& ids_shape);
    int layer_norm(int x, int gain, int bias, T eps = T(1e-5));
    // mean loss over rows; rows whose target equals ignore_index are skipped
    int cross_entropy(int logits, std::span<const std::int32_t> targets,
                      std::int32_t ignore_index = -1);
    int concat(std::span<const int> xs, int axis);
    int slice(int x, int axis, int start, int len);
    int reshape(int x, Shape shape);
    int transpose(int x, int axis_a, int axis_b);
    int mask_fill(int x, std::span<const std::uint8_t> mask, T value);
    int dropout(int x, double p, Rng& rng);
    int sum_all(int x);

    // ---- access ----
    const Shape& shape(int id) const { return nodes_[static_cast<std::size_t>(id)].shape; }
    const std::vector<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    std::vector<T>& grad(int id);
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    std::size_t num_nodes() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss)=1 and runs all adjoints in reverse order.
    // Throws DoubleBackward on a second call, ShapeMismatch if loss is not scalar.
    void backward(int loss);

private:
    struct Node {
        Shape shape;
        std::vector<T> value;
        std::vector<T> grad;
        bool requires_grad = false;
        std::function<void()> backprop;
    };

    int push(Shape shape, std::vector<T> value, bool requires_grad);
    void set_backprop(int id, std::function<void()> fn);
    std::vector<T>& ensure_grad(int id);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace chordlab
