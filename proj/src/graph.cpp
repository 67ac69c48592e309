#include "nucleus/graph.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nucleus::diff {

int Graph::check(Var v) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("Graph: Var does not belong to this graph");
    return v.id;
}

int Graph::add_node(const char* kind, Tensor value, std::vector<int> inputs,
                    std::function<void(Graph&, int)> backward_fn, bool force_no_grad) {
    Node n;
    n.value = std::move(value);
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.backward_fn = std::move(backward_fn);
    if (!force_no_grad)
        for (int in : n.inputs)
            if (nodes_[in].requires_grad) n.requires_grad = true;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buffer(int id) {
    Node& n = nodes_[id];
    if (!n.grad_live) {
        n.grad = Tensor(n.value.shape());
        n.grad_live = true;
    }
    return n.grad;
}

const Tensor& Graph::grad(Var v) const {
    const Node& n = nodes_[check(v)];
    if (n.grad_live) return n.grad;
    if (zero_.shape() != n.value.shape()) const_cast<Graph*>(this)->zero_ = Tensor(n.value.shape());
    return zero_;
}

Var Graph::input(Tensor t) {
    int id = add_node("input", std::move(t), {}, nullptr);
    nodes_[id].requires_grad = true;
    return Var{id};
}

Var Graph::constant(Tensor t) { return Var{add_node("constant", std::move(t), {}, nullptr, true)}; }

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

static void conv_check(const Tensor& in, const Tensor& ker, int stride, int padding) {
    if (in.ndim() != 4 || ker.ndim() != 4)
        throw std::invalid_argument("conv2d: expected 4-d input and kernel, got input " +
                                    shape_str(in.shape()) + " kernel " + shape_str(ker.shape()));
    if (in.dim(1) != ker.dim(1))
        throw std::invalid_argument("conv2d: channel mismatch, input " + shape_str(in.shape()) +
                                    " vs kernel " + shape_str(ker.shape()));
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
    if (ker.dim(2) > in.dim(2) + 2 * padding || ker.dim(3) > in.dim(3) + 2 * padding)
        throw std::invalid_argument("conv2d: kernel " + shape_str(ker.shape()) +
                                    " larger than padded input " + shape_str(in.shape()));
}

Var Graph::conv2d(Var input, Var kernel, int stride, int padding) {
    const Tensor& in = value(input);
    const Tensor& ker = value(kernel);
    conv_check(in, ker, stride, padding);

    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int K = ker.dim(0), kh = ker.dim(2), kw = ker.dim(3);
    const int Ho = (H + 2 * padding - kh) / stride + 1;
    const int Wo = (W + 2 * padding - kw) / stride + 1;

    Tensor out(Shape{N, K, Ho, Wo});
    const double* pin = in.data();
    const double* pk = ker.data();
    double* po = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            double* op = po + (static_cast<std::size_t>(n) * K + k) * Ho * Wo;
            for (int c = 0; c < C; ++c) {
                const double* ip = pin + (static_cast<std::size_t>(n) * C + c) * H * W;
                const double* kp = pk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                for (int u = 0; u < kh; ++u) {
                    for (int v = 0; v < kw; ++v) {
                        const double kv = kp[u * kw + v];
                        if (kv == 0.0) continue;
                        for (int oy = 0; oy < Ho; ++oy) {
                            const int iy = oy * stride - padding + u;
                            if (iy < 0 || iy >= H) continue;
                            const double* irow = ip + static_cast<std::size_t>(iy) * W;
                            double* orow = op + static_cast<std::size_t>(oy) * Wo;
                            for (int ox = 0; ox < Wo; ++ox) {
                                const int ix = ox * stride - padding + v;
                                if (ix < 0 || ix >= W) continue;
                                orow[ox] += kv * irow[ix];
                            }
                        }
                    }
                }
            }
        }
    }

    int xid = input.id, kid = kernel.id;
    auto bw = [xid, kid, stride, padding, N, C, H, W, K, kh, kw, Ho, Wo](Graph& g, int self) {
        const Tensor& go = g.nodes_[self].grad;
        const double* pg = go.data();
        if (g.nodes_[xid].requires_grad) {
            const double* pk = g.nodes_[kid].value.data();
            Tensor& gin = g.grad_buffer(xid);
            double* pgi = gin.data();
#pragma omp parallel for collapse(2) schedule(static)
            for (int n = 0; n < N; ++n) {
                for (int c = 0; c < C; ++c) {
                    double* gi = pgi + (static_cast<std::size_t>(n) * C + c) * H * W;
                    for (int k = 0; k < K; ++k) {
                        const double* gp = pg + (static_cast<std::size_t>(n) * K + k) * Ho * Wo;
                        const double* kp = pk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                        for (int u = 0; u < kh; ++u) {
                            for (int v = 0; v < kw; ++v) {
                                const double kv = kp[u * kw + v];
                                if (kv == 0.0) continue;
                                for (int oy = 0; oy < Ho; ++oy) {
                                    const int iy = oy * stride - padding + u;
                                    if (iy < 0 || iy >= H) continue;
                                    double* girow = gi + static_cast<std::size_t>(iy) * W;
                                    const double* grow = gp + static_cast<std::size_t>(oy) * Wo;
                                    for (int ox = 0; ox < Wo; ++ox) {
                                        const int ix = ox * stride - padding + v;
                                        if (ix < 0 || ix >= W) continue;
                                        girow[ix] += kv * grow[ox];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if (g.nodes_[kid].requires_grad) {
            const double* pin = g.nodes_[xid].value.data();
            Tensor& gker = g.grad_buffer(kid);
            double* pgk = gker.data();
#pragma omp parallel for schedule(static)
            for (int k = 0; k < K; ++k) {
                for (int c = 0; c < C; ++c) {
                    double* gk = pgk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                    for (int u = 0; u < kh; ++u) {
                        for (int v = 0; v < kw; ++v) {
                            double acc = 0.0;
                            for (int n = 0; n < N; ++n) {
                                const double* gp = pg + (static_cast<std::size_t>(n) * K + k) * Ho * Wo;
                                const double* ip = pin + (static_cast<std::size_t>(n) * C + c) * H * W;
                                for (int oy = 0; oy < Ho; ++oy) {
                                    const int iy = oy * stride - padding + u;
                                    if (iy < 0 || iy >= H) continue;
                                    const double* irow = ip + static_cast<std::size_t>(iy) * W;
                                    const double* grow = gp + static_cast<std::size_t>(oy) * Wo;
                                    for (int ox = 0; ox < Wo; ++ox) {
                                        const int ix = ox * stride - padding + v;
                                        if (ix < 0 || ix >= W) continue;
                                        acc += grow[ox] * irow[ix];
                                    }
                                }
                            }
                            gk[u * kw + v] += acc;
                        }
                    }
                }
            }
        }
    };
    return Var{add_node("conv2d", std::move(out), {input.id, kernel.id}, bw)};
}

// ---------------------------------------------------------------------------
// transposed_conv2d
// ---------------------------------------------------------------------------

Var Graph::transposed_conv2d(Var input, Var kernel, int stride) {
    const Tensor& in = value(input);
    const Tensor& ker = value(kernel);
    if (in.ndim() != 4 || ker.ndim() != 4)
        throw std::invalid_argument("transposed_conv2d: expected 4-d input and kernel, got input " +
                                    shape_str(in.shape()) + " kernel " + shape_str(ker.shape()));
    if (in.dim(1) != ker.dim(0))
        throw std::invalid_argument("transposed_conv2d: input channels " + shape_str(in.shape()) +
                                    " must match kernel dim 0 " + shape_str(ker.shape()));
    if (stride < 1) throw std::invalid_argument("transposed_conv2d: stride must be >= 1");

    const int N = in.dim(0), K = in.dim(1), H = in.dim(2), W = in.dim(3);
    const int C = ker.dim(1), kh = ker.dim(2), kw = ker.dim(3);
    const int Ho = (H - 1) * stride + kh;
    const int Wo = (W - 1) * stride + kw;

    Tensor out(Shape{N, C, Ho, Wo});
    const double* pin = in.data();
    const double* pk = ker.data();
    double* po = out.data();

#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            double* op = po + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
            for (int k = 0; k < K; ++k) {
                const double* ip = pin + (static_cast<std::size_t>(n) * K + k) * H * W;
                const double* kp = pk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                for (int y = 0; y < H; ++y) {
                    for (int x = 0; x < W; ++x) {
                        const double iv = ip[static_cast<std::size_t>(y) * W + x];
                        if (iv == 0.0) continue;
                        double* obase = op + static_cast<std::size_t>(y * stride) * Wo + x * stride;
                        for (int u = 0; u < kh; ++u)
                            for (int v = 0; v < kw; ++v)
                                obase[static_cast<std::size_t>(u) * Wo + v] += iv * kp[u * kw + v];
                    }
                }
            }
        }
    }

    int xid = input.id, kid = kernel.id;
    auto bw = [xid, kid, stride, N, C, H, W, K, kh, kw, Ho, Wo](Graph& g, int self) {
        const Tensor& go = g.nodes_[self].grad;
        const double* pg = go.data();
        if (g.nodes_[xid].requires_grad) {
            const double* pk = g.nodes_[kid].value.data();
            Tensor& gin = g.grad_buffer(xid);
            double* pgi = gin.data();
#pragma omp parallel for collapse(2) schedule(static)
            for (int n = 0; n < N; ++n) {
                for (int k = 0; k < K; ++k) {
                    double* gi = pgi + (static_cast<std::size_t>(n) * K + k) * H * W;
                    for (int c = 0; c < C; ++c) {
                        const double* gp = pg + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
                        const double* kp = pk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                        for (int y = 0; y < H; ++y) {
                            for (int x = 0; x < W; ++x) {
                                const double* gbase =
                                    gp + static_cast<std::size_t>(y * stride) * Wo + x * stride;
                                double acc = 0.0;
                                for (int u = 0; u < kh; ++u)
                                    for (int v = 0; v < kw; ++v)
                                        acc += gbase[static_cast<std::size_t>(u) * Wo + v] * kp[u * kw + v];
                                gi[static_cast<std::size_t>(y) * W + x] += acc;
                            }
                        }
                    }
                }
            }
        }
        if (g.nodes_[kid].requires_grad) {
            const double* pin = g.nodes_[xid].value.data();
            Tensor& gker = g.grad_buffer(kid);
            double* pgk = gker.data();
#pragma omp parallel for schedule(static)
            for (int k = 0; k < K; ++k) {
                for (int c = 0; c < C; ++c) {
                    double* gk = pgk + (static_cast<std::size_t>(k) * C + c) * kh * kw;
                    for (int u = 0; u < kh; ++u) {
                        for (int v = 0; v < kw; ++v) {
                            double acc = 0.0;
                            for (int n = 0; n < N; ++n) {
                                const double* ip = pin + (static_cast<std::size_t>(n) * K + k) * H * W;
                                const double* gp = pg + (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
                                for (int y = 0; y < H; ++y)
                                    for (int x = 0; x < W; ++x)
                                        acc += ip[static_cast<std::size_t>(y) * W + x] *
                                               gp[static_cast<std::size_t>(y * stride + u) * Wo + x * stride + v];
                            }
                            gk[u * kw + v] += acc;
                        }
                    }
                }
            }
        }
    };
    return Var{add_node("transposed_conv2d", std::move(out), {input.id, kernel.id}, bw)};
}

// ---------------------------------------------------------------------------
// maxpool2d
// ---------------------------------------------------------------------------

Var Graph::maxpool2d(Var input, int window, int stride) {
    const Tensor& in = value(input);
    if (in.ndim() != 4)
        throw std::invalid_argument("maxpool2d: expected 4-d input, got " + shape_str(in.shape()));
    const int N = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    if (window > H || window > W)
        throw std::invalid_argument("maxpool2d: window " + std::to_string(window) +
                                    " exceeds spatial dims of " + shape_str(in.shape()));
    if (stride < 1 || H % stride != 0 || W % stride != 0)
        throw std::invalid_argument("maxpool2d: spatial dims of " + shape_str(in.shape()) +
                                    " must divide by stride " + std::to_string(stride));

    const int Ho = (H - window) / stride + 1;
    const int Wo = (W - window) / stride + 1;
    Tensor out(Shape{N, C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.numel());

    const double* pin = in.data();
    double* po = out.data();
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const std::size_t plane = (static_cast<std::size_t>(n) * C + c) * H * W;
            const std::size_t oplane = (static_cast<std::size_t>(n) * C + c) * Ho * Wo;
            for (int oy = 0; oy < Ho; ++oy) {
                for (int ox = 0; ox < Wo; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (int u = 0; u < window; ++u) {
                        for (int v = 0; v < window; ++v) {
                            std::size_t idx = plane + static_cast<std::size_t>(oy * stride + u) * W +
                                              (ox * stride + v);
                            if (pin[idx - plane + plane] > best) {  // strict > keeps first tie
                                best = pin[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    po[oplane + static_cast<std::size_t>(oy) * Wo + ox] = best;
                    (*argmax)[oplane + static_cast<std::size_t>(oy) * Wo + ox] = best_idx;
                }
            }
        }
    }

    int xid = input.id;
    auto bw = [xid, argmax](Graph& g, int self) {
        if (!g.nodes_[xid].requires_grad) return;
        const Tensor& go = g.nodes_[self].grad;
        Tensor& gin = g.grad_buffer(xid);
        for (std::size_t i = 0; i < go.numel(); ++i) gin[(*argmax)[i]] += go[i];
    };
    return Var{add_node("maxpool2d", std::move(out), {input.id}, bw)};
}

// ---------------------------------------------------------------------------
// concat / bias
// ---------------------------------------------------------------------------

Var Graph::concat_channels(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 4 || tb.ndim() != 4 || ta.dim(0) != tb.dim(0) || ta.dim(2) != tb.dim(2) ||
        ta.dim(3) != tb.dim(3))
        throw std::invalid_argument("concat_channels: incompatible shapes " + shape_str(ta.shape()) +
                                    " and " + shape_str(tb.shape()));
    const int N = ta.dim(0), Ca = ta.dim(1), Cb = tb.dim(1), H = ta.dim(2), W = ta.dim(3);
    Tensor out(Shape{N, Ca + Cb, H, W});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n) {
        std::copy(ta.data() + static_cast<std::size_t>(n) * Ca * plane,
                  ta.data() + static_cast<std::size_t>(n + 1) * Ca * plane,
                  out.data() + static_cast<std::size_t>(n) * (Ca + Cb) * plane);
        std::copy(tb.data() + static_cast<std::size_t>(n) * Cb * plane,
                  tb.data() + static_cast<std::size_t>(n + 1) * Cb * plane,
                  out.data() + (static_cast<std::size_t>(n) * (Ca + Cb) + Ca) * plane);
    }
    int aid = a.id, bid = b.id;
    auto bw = [aid, bid, N, Ca, Cb, plane](Graph& g, int self) {
        const Tensor& go = g.nodes_[self].grad;
        if (g.nodes_[aid].requires_grad) {
            Tensor& ga = g.grad_buffer(aid);
            for (int n = 0; n < N; ++n) {
                const double* src = go.data() + static_cast<std::size_t>(n) * (Ca + Cb) * plane;
                double* dst = ga.data() + static_cast<std::size_t>(n) * Ca * plane;
                for (std::size_t i = 0; i < Ca * plane; ++i) dst[i] += src[i];
            }
        }
        if (g.nodes_[bid].requires_grad) {
            Tensor& gb = g.grad_buffer(bid);
            for (int n = 0; n < N; ++n) {
                const double* src = go.data() + (static_cast<std::size_t>(n) * (Ca + Cb) + Ca) * plane;
                double* dst = gb.data() + static_cast<std::size_t>(n) * Cb * plane;
                for (std::size_t i = 0; i < Cb * plane; ++i) dst[i] += src[i];
            }
        }
    };
    return Var{add_node("concat_channels", std::move(out), {a.id, b.id}, bw)};
}

Var Graph::bias_add(Var x, Var bias) {
    const Tensor& tx = value(x);
    const Tensor& tb = value(bias);
    if (tx.ndim() != 4 || tb.ndim() != 1 || tb.dim(0) != tx.dim(1))
        throw std::invalid_argument("bias_add: input " + shape_str(tx.shape()) +
                                    " needs bias of shape [C], got " + shape_str(tb.shape()));
    const int N = tx.dim(0), C = tx.dim(1);
    const std::size_t plane = static_cast<std::size_t>(tx.dim(2)) * tx.dim(3);
    Tensor out(tx.shape());
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double bv = tb[c];
            const double* src = tx.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            double* dst = out.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + bv;
        }
    int xid = x.id, bid = bias.id;
    auto bw = [xid, bid, N, C, plane](Graph& g, int self) {
        const Tensor& go = g.nodes_[self].grad;
        if (g.nodes_[xid].requires_grad) {
            Tensor& gx = g.grad_buffer(xid);
            for (std::size_t i = 0; i < go.numel(); ++i) gx[i] += go[i];
        }
        if (g.nodes_[bid].requires_grad) {
            Tensor& gb = g.grad_buffer(bid);
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c) {
                    const double* src = go.data() + (static_cast<std::size_t>(n) * C + c) * plane;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) acc += src[i];
                    gb[c] += acc;
                }
        }
    };
    return Var{add_node("bias_add", std::move(out), {x.id, bias.id}, bw)};
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var Graph::unary(const char* kind, Var x, const std::function<double(double)>& f,
                 const std::function<double(double, double)>& df) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape());
    for (std::size_t i = 0; i < tx.numel(); ++i) out[i] = f(tx[i]);
    int xid = x.id;
    auto bw = [xid, df](Graph& g, int self) {
        if (!g.nodes_[xid].requires_grad) return;
        const Tensor& go = g.nodes_[self].grad;
        const Tensor& tx = g.nodes_[xid].value;
        const Tensor& ty = g.nodes_[self].value;
        Tensor& gx = g.grad_buffer(xid);
        for (std::size_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * df(tx[i], ty[i]);
    };
    return Var{add_node(kind, std::move(out), {x.id}, bw)};
}

Var Graph::binary(const char* kind, Var a, Var b, const std::function<double(double, double)>& f,
                  const std::function<double(double, double, double)>& dfa,
                  const std::function<double(double, double, double)>& dfb) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb))
        throw std::invalid_argument(std::string(kind) + ": shape mismatch " + shape_str(ta.shape()) +
                                    " vs " + shape_str(tb.shape()));
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < ta.numel(); ++i) out[i] = f(ta[i], tb[i]);
    int aid = a.id, bid = b.id;
    auto bw = [aid, bid, dfa, dfb](Graph& g, int self) {
        const Tensor& go = g.nodes_[self].grad;
        const Tensor& ta = g.nodes_[aid].value;
        const Tensor& tb = g.nodes_[bid].value;
        const Tensor& ty = g.nodes_[self].value;
        if (g.nodes_[aid].requires_grad) {
            Tensor& ga = g.grad_buffer(aid);
            for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * dfa(ta[i], tb[i], ty[i]);
        }
        if (g.nodes_[bid].requires_grad) {
            Tensor& gb = g.grad_buffer(bid);
            for (std::size_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * dfb(ta[i], tb[i], ty[i]);
        }
    };
    return Var{add_node(kind, std::move(out), {a.id, b.id}, bw)};
}

Var Graph::relu(Var x) {
    return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var Graph::sigmoid(Var x) {
    return unary("sigmoid", x,
                 [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
                 [](double, double y) { return y * (1.0 - y); });
}

Var Graph::log(Var x) {
    const Tensor& tx = value(x);
    for (std::size_t i = 0; i < tx.numel(); ++i)
        if (!(tx[i] > 0.0))
            throw std::logic_error("log: non-positive argument slipped past clamping");
    return unary("log", x, [](double v) { return std::log(v); },
                 [](double v, double) { return 1.0 / v; });
}

Var Graph::one_minus(Var x) {
    return unary("one_minus", x, [](double v) { return 1.0 - v; },
                 [](double, double) { return -1.0; });
}

Var Graph::clamp(Var x, double lo, double hi) {
    return unary("clamp", x,
                 [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
                 [lo, hi](double v, double) { return (v < lo || v > hi) ? 0.0 : 1.0; });
}

Var Graph::pow(Var x, double e) {
    return unary("pow", x, [e](double v) { return std::pow(v, e); },
                 [e](double v, double) { return e == 0.0 ? 0.0 : e * std::pow(v, e - 1.0); });
}

Var Graph::add(Var a, Var b) {
    return binary("add", a, b, [](double x, double y) { return x + y; },
                  [](double, double, double) { return 1.0; },
                  [](double, double, double) { return 1.0; });
}

Var Graph::sub(Var a, Var b) {
    return binary("sub", a, b, [](double x, double y) { return x - y; },
                  [](double, double, double) { return 1.0; },
                  [](double, double, double) { return -1.0; });
}

Var Graph::mul(Var a, Var b) {
    return binary("mul", a, b, [](double x, double y) { return x * y; },
                  [](double, double y, double) { return y; },
                  [](double x, double, double) { return x; });
}

Var Graph::div(Var a, Var b) {
    return binary("div", a, b, [](double x, double y) { return x / y; },
                  [](double, double y, double) { return 1.0 / y; },
                  [](double, double y, double z) { return -z / y; });
}

Var Graph::scale(Var x, double s) {
    return unary("scale", x, [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Var Graph::add_scalar(Var x, double s) {
    return unary("add_scalar", x, [s](double v) { return v + s; },
                 [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var Graph::sum(Var x) {
    const Tensor& tx = value(x);
    Tensor out(Shape{1});
    double acc = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) acc += tx[i];
    out[0] = acc;
    int xid = x.id;
    auto bw = [xid](Graph& g, int self) {
        if (!g.nodes_[xid].requires_grad) return;
        const double gv = g.nodes_[self].grad[0];
        Tensor& gx = g.grad_buffer(xid);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gv;
    };
    return Var{add_node("sum", std::move(out), {x.id}, bw)};
}

Var Graph::mean(Var x) {
    const Tensor& tx = value(x);
    if (tx.numel() == 0) throw std::invalid_argument("mean: empty tensor");
    const double inv = 1.0 / static_cast<double>(tx.numel());
    Tensor out(Shape{1});
    double acc = 0.0;
    for (std::size_t i = 0; i < tx.numel(); ++i) acc += tx[i];
    out[0] = acc * inv;
    int xid = x.id;
    auto bw = [xid, inv](Graph& g, int self) {
        if (!g.nodes_[xid].requires_grad) return;
        const double gv = g.nodes_[self].grad[0] * inv;
        Tensor& gx = g.grad_buffer(xid);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += gv;
    };
    return Var{add_node("mean", std::move(out), {x.id}, bw)};
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

void Graph::backward(Var scalar_out) {
    int out = check(scalar_out);
    if (nodes_[out].value.numel() != 1)
        throw std::invalid_argument("backward: output must be scalar, got " +
                                    shape_str(nodes_[out].value.shape()));
    grad_buffer(out)[0] = 1.0;
    for (int id = out; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_live || !n.requires_grad || !n.backward_fn) continue;
        n.backward_fn(*this, id);
    }
}

}  // namespace nucleus::diff
