#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nucleus/tensor.hpp"

namespace nucleus::diff {

/// Handle to a node inside a Graph.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over dense double tensors.
///
/// Nodes are appended in topological order (operands are built before the
/// ops consuming them) and evaluated eagerly. backward() walks the node list
/// in reverse, accumulating gradients into lazily allocated buffers. All
/// kernels reduce in a fixed order, so repeated runs on identical inputs are
/// bit-identical.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Leaf that participates in differentiation.
    Var input(Tensor t);
    /// Leaf excluded from differentiation (labels, fixed coefficients).
    Var constant(Tensor t);

    // -- structural ops -----------------------------------------------------

    /// Cross-correlation. input [N,C,H,W], kernel [K,C,kh,kw] -> [N,K,H',W']
    /// with H' = (H + 2*padding - kh)/stride + 1 (floor).
    Var conv2d(Var input, Var kernel, int stride = 1, int padding = 0);

    /// Exact adjoint of conv2d with the same kernel layout [K,C,kh,kw]:
    /// input [N,K,H,W] -> [N,C,(H-1)*stride+kh,(W-1)*stride+kw].
    Var transposed_conv2d(Var input, Var kernel, int stride = 2);

    /// Per-window max; gradient routes to the argmax, ties to the first
    /// position in row-major order. Spatial dims must divide by stride.
    Var maxpool2d(Var input, int window = 2, int stride = 2);

    /// Concatenate along the channel dim; all other dims must agree.
    Var concat_channels(Var a, Var b);

    /// x [N,C,H,W] + bias [C], broadcast over N,H,W.
    Var bias_add(Var x, Var bias);

    // -- elementwise ops ----------------------------------------------------

    Var relu(Var x);
    Var sigmoid(Var x);
    Var log(Var x);  // caller guarantees positivity (see clamp)
    Var one_minus(Var x);
    Var clamp(Var x, double lo, double hi);  // gradient 0 outside [lo,hi]
    Var pow(Var x, double exponent);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var scale(Var x, double s);
    Var add_scalar(Var x, double s);

    // -- reductions ----------------------------------------------------------

    Var sum(Var x);   // -> shape [1]
    Var mean(Var x);  // -> shape [1]

    // -- execution ------------------------------------------------------------

    /// Backpropagate from a scalar output (shape [1], seeded with 1).
    void backward(Var scalar_out);

    const Tensor& value(Var v) const { return nodes_[check(v)].value; }
    /// Gradient buffer; zero tensor if nothing was accumulated.
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[check(v)].requires_grad; }
    const char* kind(Var v) const { return nodes_[check(v)].kind; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated on first accumulation
        bool grad_live = false;
        bool requires_grad = false;
        const char* kind = "";
        std::vector<int> inputs;
        std::function<void(Graph&, int)> backward_fn;  // accumulate into inputs
    };

    int check(Var v) const;
    int add_node(const char* kind, Tensor value, std::vector<int> inputs,
                 std::function<void(Graph&, int)> backward_fn, bool force_no_grad = false);
    Tensor& grad_buffer(int id);
    Var unary(const char* kind, Var x, const std::function<double(double)>& f,
              const std::function<double(double, double)>& df);
    Var binary(const char* kind, Var a, Var b, const std::function<double(double, double)>& f,
               const std::function<double(double, double, double)>& dfa,
               const std::function<double(double, double, double)>& dfb);

    std::vector<Node> nodes_;
    Tensor zero_;  // returned for grads never touched

    friend struct GraphTestAccess;
};

}  // namespace nucleus::diff
