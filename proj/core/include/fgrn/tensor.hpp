// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_TENSOR_HPP
#define FGRN_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "fgrn/error.hpp"

namespace fgrn {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

template <class Real> class GraphT;
template <class Real> class TensorT;

template <class Real>
TensorT<Real> make_op_result(GraphT<Real>* graph, Shape shape, std::vector<Real> values, bool tape_out);

namespace detail {

/// Shared tensor storage. Values are immutable while the tensor participates
/// in a recorded graph; gradients accumulate additively.
template <class Real>
struct PayloadT {
    Shape shape;
    std::vector<Real> values;
    std::vector<Real> grad;      // empty until first accumulation
    bool requires_grad = false;  // leaf parameter
    bool tape_out = false;       // produced by a recorded op

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), Real(0));
    }
};

} // namespace detail

/// Dense n-dimensional array handle. Copies share storage; ops build new
/// tensors and, when a graph is involved, record backward rules on it.
template <class Real>
class TensorT {
public:
    using Payload = detail::PayloadT<Real>;

    TensorT() = default;

    static TensorT zeros(Shape shape);
    static TensorT full(Shape shape, Real value);
    static TensorT from_values(Shape shape, std::vector<Real> values);
    static TensorT scalar(Real value) { return from_values({1}, {value}); }
    /// Leaf with requires_grad set: gradients accumulate on it.
    static TensorT param(Shape shape, std::vector<Real> values);
    static TensorT param_zeros(Shape shape);

    bool defined() const { return payload_ != nullptr; }
    const Shape& shape() const { return payload_->shape; }
    int rank() const { return static_cast<int>(payload_->shape.size()); }
    std::int64_t dim(int i) const { return payload_->shape[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return payload_->size(); }

    const std::vector<Real>& values() const { return payload_->values; }
    /// Mutable access for parameter updates. Must not be used on tensors that
    /// participate in a live recorded graph.
    std::vector<Real>& mut_values() { return payload_->values; }

    Real item() const {
        if (size() != 1) raise(ErrorCode::NotScalar, "item() on tensor of size " + std::to_string(size()));
        return payload_->values[0];
    }
    Real at(std::initializer_list<std::int64_t> idx) const;

    bool requires_grad() const { return payload_->requires_grad; }
    bool has_grad() const { return !payload_->grad.empty(); }
    const std::vector<Real>& grad() const { return payload_->grad; }
    void zero_grad() { payload_->grad.clear(); }

    /// Deep copy of the values with no graph association and no grad flag.
    TensorT detach() const;

    GraphT<Real>* graph() const { return graph_; }

    // Internal storage access used by op implementations.
    const std::shared_ptr<Payload>& payload() const { return payload_; }

private:
    std::shared_ptr<Payload> payload_;
    GraphT<Real>* graph_ = nullptr;

    friend class GraphT<Real>;
    template <class R> friend TensorT<R> make_op_result(GraphT<R>*, Shape, std::vector<R>, bool);
};

/// Append-only tape of recorded operations. Nodes are stored in execution
/// order; backward() replays them once in reverse.
template <class Real>
class GraphT {
public:
    GraphT() = default;
    GraphT(const GraphT&) = delete;
    GraphT& operator=(const GraphT&) = delete;

    /// Returns a handle on the same storage, associated with this graph, so
    /// that downstream ops record here. Used for batch inputs and for
    /// re-entering detached tensors.
    TensorT<Real> attach(const TensorT<Real>& t);

    void record(std::function<void()> backward_rule,
                std::shared_ptr<detail::PayloadT<Real>> produced);
    /// Extra produced payload for multi-output ops.
    void note_produced(std::shared_ptr<detail::PayloadT<Real>> produced);

    std::size_t node_count() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss)=1 and runs every recorded rule once, in reverse.
    /// Leaf gradients accumulate; tape-internal gradients are reset per call.
    void backward(const TensorT<Real>& loss);

private:
    struct Node {
        std::function<void()> run;
    };
    std::vector<Node> nodes_;
    std::vector<std::shared_ptr<detail::PayloadT<Real>>> produced_;
};

// ---- elementwise arithmetic (broadcasting over singleton dims) ----
template <class Real> TensorT<Real> add(const TensorT<Real>& a, const TensorT<Real>& b);
template <class Real> TensorT<Real> sub(const TensorT<Real>& a, const TensorT<Real>& b);
template <class Real> TensorT<Real> mul(const TensorT<Real>& a, const TensorT<Real>& b);
template <class Real> TensorT<Real> neg(const TensorT<Real>& a);
/// a * c for a plain constant c.
template <class Real> TensorT<Real> scale(const TensorT<Real>& a, double c);

template <class Real> TensorT<Real> exp(const TensorT<Real>& a);
template <class Real> TensorT<Real> tanh(const TensorT<Real>& a);
template <class Real> TensorT<Real> leaky_relu(const TensorT<Real>& a, double slope = 0.2);

// ---- structure ----
template <class Real> TensorT<Real> concat_channels(const std::vector<TensorT<Real>>& parts);
template <class Real> std::vector<TensorT<Real>> split_channels(const TensorT<Real>& a,
                                                                const std::vector<std::int64_t>& sizes);

// ---- reductions ----
template <class Real> TensorT<Real> sum(const TensorT<Real>& a);
template <class Real> TensorT<Real> l1_mean(const TensorT<Real>& a, const TensorT<Real>& b);

/// Cross-correlation with zero padding. input N×I×H×W, weight O×I×k×k (k odd),
/// bias O. Output spatial dims floor((H + 2 pad - k)/stride) + 1.
template <class Real>
TensorT<Real> conv2d(const TensorT<Real>& input, const TensorT<Real>& weight,
                     const TensorT<Real>& bias, int stride = 1, int pad = 0);

/// Reverse pass from a scalar, graph-connected loss.
template <class Real> void backward(const TensorT<Real>& loss);

using Tensor32 = TensorT<float>;
using Tensor64 = TensorT<double>;

} // namespace fgrn

#endif // FGRN_TENSOR_HPP
