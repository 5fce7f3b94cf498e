#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "firecast/params.hpp"
#include "firecast/tensor.hpp"

namespace firecast {

/// Raised when an op produces a non-finite value (NaN poisoning guard).
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Conv2dGeom {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

struct Deconv2dGeom {
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t output_padding = 0;
};

inline constexpr double kBceEps = 1e-7;

/// Reverse-mode tape. Nodes are appended in topological order by
/// construction; backward() sweeps them in reverse. One tape records one
/// forward computation; independent tapes share nothing and may live on
/// separate threads.
template <class T>
class Tape {
public:
    explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

    // ---- leaves -------------------------------------------------------

    int input(Tensor<T> v) {
        Node n;
        n.value = std::move(v);
        return push(std::move(n), "input");
    }

    /// Binds a store parameter as a leaf. The store must outlive the
    /// tape. Repeated calls for one name return the same node so shared
    /// weights accumulate all of their use-site gradients.
    int param(const ParamStore<T>& store, const std::string& name) {
        auto it = param_nodes_.find(name);
        if (it != param_nodes_.end()) return it->second;
        Node n;
        n.external = &store.value(name);
        n.param_name = name;
        int id = push(std::move(n), "param");
        param_nodes_.emplace(name, id);
        return id;
    }

    // ---- elementwise --------------------------------------------------

    int add(int a, int b) {
        const Tensor<T>&va = val(a), &vb = val(b);
        if (va.shape != vb.shape)
            throw std::invalid_argument("add: shape (" + va.shape_str() + ") vs (" +
                                        vb.shape_str() + ")");
        Node n;
        n.value = va;
        for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += vb[i];
        n.backprop = [a, b](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            Tensor<T>&ga = t.ensure_grad(a), &gb = t.ensure_grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        };
        return push(std::move(n), "add");
    }

    int mul(int a, int b) {
        const Tensor<T>&va = val(a), &vb = val(b);
        if (va.shape != vb.shape)
            throw std::invalid_argument("mul: shape (" + va.shape_str() + ") vs (" +
                                        vb.shape_str() + ")");
        Node n;
        n.value = va;
        for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= vb[i];
        n.backprop = [a, b](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            const Tensor<T>&va = t.val(a), &vb = t.val(b);
            Tensor<T>&ga = t.ensure_grad(a), &gb = t.ensure_grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * vb[i];
                gb[i] += g[i] * va[i];
            }
        };
        return push(std::move(n), "mul");
    }

    int scale(int a, double c) {
        Node n;
        n.value = val(a);
        for (auto& v : n.value.data) v = static_cast<T>(v * c);
        n.backprop = [a, c](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += static_cast<T>(g[i] * c);
        };
        return push(std::move(n), "scale");
    }

    int sigmoid(int a) {
        Node n;
        n.value = val(a);
        for (auto& v : n.value.data) v = T(1) / (T(1) + std::exp(-v));
        n.backprop = [a](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            const Tensor<T>& y = t.val(self);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
        };
        return push(std::move(n), "sigmoid");
    }

    int tanh_(int a) {
        Node n;
        n.value = val(a);
        for (auto& v : n.value.data) v = std::tanh(v);
        n.backprop = [a](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            const Tensor<T>& y = t.val(self);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
        };
        return push(std::move(n), "tanh");
    }

    int relu(int a) {
        Node n;
        n.value = val(a);
        for (auto& v : n.value.data) v = v > T(0) ? v : T(0);
        n.backprop = [a](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            const Tensor<T>& x = t.val(a);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x[i] > T(0)) ga[i] += g[i];
        };
        return push(std::move(n), "relu");
    }

    // ---- shape --------------------------------------------------------

    int reshape(int a, std::vector<std::size_t> shape) {
        const Tensor<T>& va = val(a);
        Node n;
        n.value = Tensor<T>(std::move(shape), va.data);
        n.backprop = [a](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        };
        return push(std::move(n), "reshape");
    }

    /// Contiguous 1-D slice [offset, offset+len) of a rank-1 tensor.
    int slice(int a, std::size_t offset, std::size_t len) {
        const Tensor<T>& va = val(a);
        if (va.rank() != 1 || offset + len > va.size())
            throw std::invalid_argument("slice: [" + std::to_string(offset) + "," +
                                        std::to_string(offset + len) + ") out of rank-1 (" +
                                        va.shape_str() + ")");
        Node n;
        n.value = Tensor<T>({len});
        for (std::size_t i = 0; i < len; ++i) n.value[i] = va[offset + i];
        n.backprop = [a, offset](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            Tensor<T>& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
        };
        return push(std::move(n), "slice");
    }

    // ---- dense --------------------------------------------------------

    /// y = W x + b with x [in], W [out,in], b [out].
    int linear(int x, int w, int b) {
        const Tensor<T>&vx = val(x), &vw = val(w), &vb = val(b);
        if (vx.rank() != 1 || vw.rank() != 2 || vb.rank() != 1 || vw.dim(1) != vx.dim(0) ||
            vw.dim(0) != vb.dim(0))
            throw std::invalid_argument("linear: expected x[in], W[out,in], b[out]; got x(" +
                                        vx.shape_str() + ") W(" + vw.shape_str() + ") b(" +
                                        vb.shape_str() + ")");
        const std::size_t out = vw.dim(0), in = vw.dim(1);
        Node n;
        n.value = Tensor<T>({out});
        for (std::size_t o = 0; o < out; ++o) {
            T acc = vb[o];
            const T* wrow = vw.data.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * vx[i];
            n.value[o] = acc;
        }
        n.backprop = [x, w, b, out, in](Tape& t, int self) {
            const Tensor<T>& g = t.node_grad(self);
            const Tensor<T>&vx = t.val(x), &vw = t.val(w);
            Tensor<T>&gx = t.ensure_grad(x), &gw = t.ensure_grad(w), &gb = t.ensure_grad(b);
            for (std::size_t o = 0; o < out; ++o) {
                const T go = g[o];
                gb[o] += go;
                const T* wrow = vw.data.data() + o * in;
                T* gwrow = gw.data.data() + o * in;
                for (std::size_t i = 0; i < in; ++i) {
                    gx[i] += go * wrow[i];
                    gwrow[i] += go * vx[i];
                }
            }
        };
        return push(std::move(n), "linear");
    }

    // ---- convolution --------------------------------------------------

    /// Cross-correlation with zero padding. x [Cin,H,W], w [Cout,Cin,k,k],
    /// b [Cout] -> [Cout,H',W'] with H' = floor((H+2p-k)/stride)+1.
    int conv2d(int x, int w, int b, Conv2dGeom geom) {
        const Tensor<T>&vx = val(x), &vw = val(w), &vb = val(b);
        if (vx.rank() != 3 || vw.rank() != 4 || vb.rank() != 1)
            throw std::invalid_argument("conv2d: expected x[C,H,W], w[Co,Ci,k,k], b[Co]; got x(" +
                                        vx.shape_str() + ") w(" + vw.shape_str() + ") b(" +
                                        vb.shape_str() + ")");
        const std::size_t ci = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
        const std::size_t co = vw.dim(0), k = vw.dim(2);
        if (vw.dim(1) != ci || vw.dim(3) != k || vb.dim(0) != co)
            throw std::invalid_argument("conv2d: kernel (" + vw.shape_str() +
                                        ") does not match input (" + vx.shape_str() + ")");
        if (geom.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
        if (k > h + 2 * geom.padding || k > wd + 2 * geom.padding)
            throw std::invalid_argument("conv2d: kernel " + std::to_string(k) +
                                        " larger than padded input (" + vx.shape_str() + ")");
        const std::size_t oh = (h + 2 * geom.padding - k) / geom.stride + 1;
        const std::size_t ow = (wd + 2 * geom.padding - k) / geom.stride + 1;

        Node n;
        n.value = Tensor<T>({co, oh, ow});
        conv_forward(vx, vw, vb, n.value, geom, ci, h, wd, co, k, oh, ow);
        n.backprop = [x, w, b, geom, ci, h, wd, co, k, oh, ow](Tape& t, int self) {
            conv_backward(t.node_grad(self), t.val(x), t.val(w), t.ensure_grad(x),
                          t.ensure_grad(w), t.ensure_grad(b), geom, ci, h, wd, co, k, oh, ow);
        };
        return push(std::move(n), "conv2d");
    }

    /// Transposed convolution. x [Cin,H,W], w [Cin,Cout,k,k], b [Cout] ->
    /// [Cout,Ho,Wo] with Ho = (H-1)*stride - 2p + k + output_padding.
    /// With a shared kernel and zero bias it is the adjoint of conv2d.
    int deconv2d(int x, int w, int b, Deconv2dGeom geom) {
        const Tensor<T>&vx = val(x), &vw = val(w), &vb = val(b);
        if (vx.rank() != 3 || vw.rank() != 4 || vb.rank() != 1)
            throw std::invalid_argument("deconv2d: expected x[C,H,W], w[Ci,Co,k,k], b[Co]; got x(" +
                                        vx.shape_str() + ") w(" + vw.shape_str() + ") b(" +
                                        vb.shape_str() + ")");
        const std::size_t ci = vx.dim(0), h = vx.dim(1), wd = vx.dim(2);
        const std::size_t co = vw.dim(1), k = vw.dim(2);
        if (vw.dim(0) != ci || vw.dim(3) != k || vb.dim(0) != co)
            throw std::invalid_argument("deconv2d: kernel (" + vw.shape_str() +
                                        ") does not match input (" + vx.shape_str() + ")");
        if (geom.stride < 1) throw std::invalid_argument("deconv2d: stride must be >= 1");
        const std::int64_t oh64 = static_cast<std::int64_t>(h - 1) * geom.stride -
                                  2 * static_cast<std::int64_t>(geom.padding) + k +
                                  geom.output_padding;
        const std::int64_t ow64 = static_cast<std::int64_t>(wd - 1) * geom.stride -
                                  2 * static_cast<std::int64_t>(geom.padding) + k +
                                  geom.output_padding;
        if (oh64 < 1 || ow64 < 1)
            throw std::invalid_argument("deconv2d: non-positive output extent for input (" +
                                        vx.shape_str() + ")");
        const std::size_t oh = static_cast<std::size_t>(oh64), ow = static_cast<std::size_t>(ow64);

        Node n;
        n.value = Tensor<T>({co, oh, ow});
        deconv_forward(vx, vw, vb, n.value, geom, ci, h, wd, co, k, oh, ow);
        n.backprop = [x, w, b, geom, ci, h, wd, co, k, oh, ow](Tape& t, int self) {
            deconv_backward(t.node_grad(self), t.val(x), t.val(w), t.ensure_grad(x),
                            t.ensure_grad(w), t.ensure_grad(b), geom, ci, h, wd, co, k, oh, ow);
        };
        return push(std::move(n), "deconv2d");
    }

    // ---- reductions / loss --------------------------------------------

    int sum(int a) {
        Node n;
        n.value = Tensor<T>({1});
        double acc = 0;
        for (const T& v : val(a).data) acc += static_cast<double>(v);
        n.value[0] = static_cast<T>(acc);
        n.backprop = [a](Tape& t, int self) {
            const T g = t.node_grad(self)[0];
            Tensor<T>& ga = t.ensure_grad(a);
            for (auto& v : ga.data) v += g;
        };
        return push(std::move(n), "sum");
    }

    /// Mean binary cross entropy with natural log. Predictions are
    /// clamped to [eps, 1-eps], eps = 1e-7; labels must be 0/1. Optional
    /// per-pixel weights multiply summands before averaging; N stays the
    /// pixel count.
    int bce_loss(int pred, const Tensor<T>& label, const Tensor<T>* weight = nullptr) {
        const Tensor<T>& vp = val(pred);
        if (vp.shape != label.shape)
            throw std::invalid_argument("bce_loss: pred (" + vp.shape_str() + ") vs label shape");
        if (weight && weight->shape != vp.shape)
            throw std::invalid_argument("bce_loss: weight shape mismatch");
        const std::size_t count = vp.size();
        const T lo = static_cast<T>(kBceEps);
        const T hi = T(1) - static_cast<T>(kBceEps);

        Node n;
        n.value = Tensor<T>({1});
        double acc = 0;
        for (std::size_t i = 0; i < count; ++i) {
            T p = vp[i];
            if (p < lo) p = lo;
            if (p > hi) p = hi;
            const double y = static_cast<double>(label[i]);
            const double wgt = weight ? static_cast<double>((*weight)[i]) : 1.0;
            acc += wgt * (y * std::log(static_cast<double>(p)) +
                          (1.0 - y) * std::log(1.0 - static_cast<double>(p)));
        }
        n.value[0] = static_cast<T>(-acc / static_cast<double>(count));

        // label/weight captured by value: they are data, not graph nodes
        Tensor<T> lab = label;
        Tensor<T> wgt = weight ? *weight : Tensor<T>();
        n.backprop = [pred, lab = std::move(lab), wgt = std::move(wgt), count, lo,
                      hi](Tape& t, int self) {
            const T g = t.node_grad(self)[0];
            const Tensor<T>& vp = t.val(pred);
            Tensor<T>& gp = t.ensure_grad(pred);
            const double inv_n = 1.0 / static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i) {
                const T p = vp[i];
                if (p < lo || p > hi) continue;  // clamped region: zero slope
                const double y = static_cast<double>(lab[i]);
                const double w = wgt.size() ? static_cast<double>(wgt[i]) : 1.0;
                const double d =
                    -w * inv_n * (y / static_cast<double>(p) - (1.0 - y) / (1.0 - static_cast<double>(p)));
                gp[i] += static_cast<T>(static_cast<double>(g) * d);
            }
        };
        return push(std::move(n), "bce_loss");
    }

    // ---- access -------------------------------------------------------

    const Tensor<T>& val(int id) const {
        const Node& n = nodes_.at(static_cast<std::size_t>(id));
        return n.external ? *n.external : n.value;
    }

    /// Runs reverse-mode accumulation from a scalar node. Gradients for
    /// nodes not reachable from the loss stay zero.
    void backward(int loss) {
        if (loss < 0 || static_cast<std::size_t>(loss) >= nodes_.size())
            throw std::logic_error("backward: no recorded forward computation for that node");
        if (val(loss).size() != 1)
            throw std::invalid_argument("backward: loss must be scalar, got (" +
                                        val(loss).shape_str() + ")");
        ensure_grad(loss)[0] = T(1);
        for (int i = loss; i >= 0; --i) {
            Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.backprop && n.grad.size() != 0) n.backprop(*this, i);
        }
        backward_done_ = true;
    }

    /// Adds this tape's parameter gradients into the store and marks
    /// them populated. Call after backward().
    void grads_into(ParamStore<T>& store) const {
        if (!backward_done_) throw std::logic_error("grads_into: backward() has not run");
        for (const auto& [name, id] : param_nodes_) {
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            Tensor<T>& g = store.grad(name);
            if (n.grad.size() == 0) continue;  // unreachable from loss: zero contribution
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        store.mark_grads_ready();
    }

    /// Gradient buffer of a node (zeros if the node was not reached).
    const Tensor<T>& grad_of(int id) {
        return ensure_grad_node(id);
    }

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // empty until touched by backward
        const Tensor<T>* external = nullptr;
        std::string param_name;
        std::function<void(Tape&, int)> backprop;
    };

    int push(Node n, const char* opname) {
        if (check_finite_ && !n.external && !n.value.all_finite())
            throw NonFiniteError(std::string(opname) + " produced a non-finite value");
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    Tensor<T>& ensure_grad(int id) {
        Node& n = nodes_.at(static_cast<std::size_t>(id));
        if (n.grad.size() == 0) n.grad = Tensor<T>(val(id).shape);
        return n.grad;
    }
    const Tensor<T>& ensure_grad_node(int id) { return ensure_grad(id); }

    const Tensor<T>& node_grad(int id) const {
        return nodes_.at(static_cast<std::size_t>(id)).grad;
    }

    static void conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                             Tensor<T>& out, Conv2dGeom geom, std::size_t ci, std::size_t h,
                             std::size_t wd, std::size_t co, std::size_t k, std::size_t oh,
                             std::size_t ow) {
        const std::int64_t pad = static_cast<std::int64_t>(geom.padding);
        const std::int64_t s = static_cast<std::int64_t>(geom.stride);
        for (std::size_t oc = 0; oc < co; ++oc) {
            T* orow = out.data.data() + oc * oh * ow;
            std::fill(orow, orow + oh * ow, b[oc]);
            for (std::size_t ic = 0; ic < ci; ++ic) {
                const T* xin = x.data.data() + ic * h * wd;
                const T* wk = w.data.data() + (oc * ci + ic) * k * k;
                for (std::size_t kh = 0; kh < k; ++kh) {
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const T wv = wk[kh * k + kw];
                        for (std::size_t r = 0; r < oh; ++r) {
                            const std::int64_t ih = static_cast<std::int64_t>(r) * s - pad + kh;
                            if (ih < 0 || ih >= static_cast<std::int64_t>(h)) continue;
                            const T* xrow = xin + ih * wd;
                            T* dst = orow + r * ow;
                            for (std::size_t c = 0; c < ow; ++c) {
                                const std::int64_t iw = static_cast<std::int64_t>(c) * s - pad + kw;
                                if (iw < 0 || iw >= static_cast<std::int64_t>(wd)) continue;
                                dst[c] += wv * xrow[iw];
                            }
                        }
                    }
                }
            }
        }
    }

    static void conv_backward(const Tensor<T>& gout, const Tensor<T>& x, const Tensor<T>& w,
                              Tensor<T>& gx, Tensor<T>& gw, Tensor<T>& gb, Conv2dGeom geom,
                              std::size_t ci, std::size_t h, std::size_t wd, std::size_t co,
                              std::size_t k, std::size_t oh, std::size_t ow) {
        const std::int64_t pad = static_cast<std::int64_t>(geom.padding);
        const std::int64_t s = static_cast<std::int64_t>(geom.stride);
        for (std::size_t oc = 0; oc < co; ++oc) {
            const T* grow = gout.data.data() + oc * oh * ow;
            T acc = T(0);
            for (std::size_t i = 0; i < oh * ow; ++i) acc += grow[i];
            gb[oc] += acc;
            for (std::size_t ic = 0; ic < ci; ++ic) {
                const T* xin = x.data.data() + ic * h * wd;
                T* gxin = gx.data.data() + ic * h * wd;
                const T* wk = w.data.data() + (oc * ci + ic) * k * k;
                T* gwk = gw.data.data() + (oc * ci + ic) * k * k;
                for (std::size_t kh = 0; kh < k; ++kh) {
                    for (std::size_t kw = 0; kw < k; ++kw) {
                        const T wv = wk[kh * k + kw];
                        T wacc = T(0);
                        for (std::size_t r = 0; r < oh; ++r) {
                            const std::int64_t ih = static_cast<std::int64_t>(r) * s - pad + kh;
                            if (ih < 0 || ih >= static_cast<std::int64_t>(h)) continue;
                            const T* xrow = xin + ih * wd;
                            T* gxrow = gxin + ih * wd;
                            const T* gr = grow + r * ow;
                            for (std::size_t c = 0; c < ow; ++c) {
                                const std::int64_t iw = static_cast<std::int64_t>(c) * s - pad + kw;
                                if (iw < 0 || iw >= static_cast<std::int64_t>(wd)) continue;
                                wacc += gr[c] * xrow[iw];
                                gxrow[iw] += gr[c] * wv;
                            }
                        }
                        gwk[kh * k + kw] += wacc;
                    }
                }
            }
        }
    }

    static void deconv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                               Tensor<T>& out, Deconv2dGeom geom, std::size_t ci, std::size_t h,
                               std::size_t wd, std::size_t co, std::size_t k, std::size_t oh,
                               std::size_t ow) {
        const std::int64_t pad = static_cast<std::int64_t>(geom.padding);
        const std::int64_t s = static_cast<std::int64_t>(geom.stride);
        for (std::size_t oc = 0; oc < co; ++oc) {
            T* orow = out.data.data() + oc * oh * ow;
            std::fill(orow, orow + oh * ow, b[oc]);
        }
        for (std::size_t ic = 0; ic < ci; ++ic) {
            const T* xin = x.data.data() + ic * h * wd;
            for (std::size_t oc = 0; oc < co; ++oc) {
                T* oimg = out.data.data() + oc * oh * ow;
                const T* wk = w.data.data() + (ic * co + oc) * k * k;
                for (std::size_t r = 0; r < h; ++r) {
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const std::int64_t orow_i = static_cast<std::int64_t>(r) * s - pad + kh;
                        if (orow_i < 0 || orow_i >= static_cast<std::int64_t>(oh)) continue;
                        T* dst = oimg + orow_i * ow;
                        const T* xrow = xin + r * wd;
                        for (std::size_t c = 0; c < wd; ++c) {
                            const T xv = xrow[c];
                            const std::int64_t base = static_cast<std::int64_t>(c) * s - pad;
                            for (std::size_t kw = 0; kw < k; ++kw) {
                                const std::int64_t ocol = base + kw;
                                if (ocol < 0 || ocol >= static_cast<std::int64_t>(ow)) continue;
                                dst[ocol] += xv * wk[kh * k + kw];
                            }
                        }
                    }
                }
            }
        }
    }

    static void deconv_backward(const Tensor<T>& gout, const Tensor<T>& x, const Tensor<T>& w,
                                Tensor<T>& gx, Tensor<T>& gw, Tensor<T>& gb, Deconv2dGeom geom,
                                std::size_t ci, std::size_t h, std::size_t wd, std::size_t co,
                                std::size_t k, std::size_t oh, std::size_t ow) {
        const std::int64_t pad = static_cast<std::int64_t>(geom.padding);
        const std::int64_t s = static_cast<std::int64_t>(geom.stride);
        for (std::size_t oc = 0; oc < co; ++oc) {
            const T* grow = gout.data.data() + oc * oh * ow;
            T acc = T(0);
            for (std::size_t i = 0; i < oh * ow; ++i) acc += grow[i];
            gb[oc] += acc;
        }
        for (std::size_t ic = 0; ic < ci; ++ic) {
            const T* xin = x.data.data() + ic * h * wd;
            T* gxin = gx.data.data() + ic * h * wd;
            for (std::size_t oc = 0; oc < co; ++oc) {
                const T* gimg = gout.data.data() + oc * oh * ow;
                const T* wk = w.data.data() + (ic * co + oc) * k * k;
                T* gwk = gw.data.data() + (ic * co + oc) * k * k;
                for (std::size_t r = 0; r < h; ++r) {
                    const T* xrow = xin + r * wd;
                    T* gxrow = gxin + r * wd;
                    for (std::size_t kh = 0; kh < k; ++kh) {
                        const std::int64_t orow_i = static_cast<std::int64_t>(r) * s - pad + kh;
                        if (orow_i < 0 || orow_i >= static_cast<std::int64_t>(oh)) continue;
                        const T* gdst = gimg + orow_i * ow;
                        for (std::size_t c = 0; c < wd; ++c) {
                            const std::int64_t base = static_cast<std::int64_t>(c) * s - pad;
                            for (std::size_t kw = 0; kw < k; ++kw) {
                                const std::int64_t ocol = base + kw;
                                if (ocol < 0 || ocol >= static_cast<std::int64_t>(ow)) continue;
                                const T g = gdst[ocol];
                                gwk[kh * k + kw] += g * xrow[c];
                                gxrow[c] += g * wk[kh * k + kw];
                            }
                        }
                    }
                }
            }
        }
    }

    std::vector<Node> nodes_;
    std::unordered_map<std::string, int> param_nodes_;
    bool check_finite_;
    bool backward_done_ = false;
};

/// Standard gated LSTM cell built from tape primitives. Gate packing in
/// the [4h] pre-activation vector is i, f, g, o. Returns (h, c).
template <class T>
std::pair<int, int> lstm_cell(Tape<T>& tape, int x, int h_prev, int c_prev, int w_ih, int w_hh,
                              int b_ih, int b_hh) {
    const std::size_t hidden = tape.val(h_prev).size();
    if (tape.val(w_ih).dim(0) != 4 * hidden || tape.val(c_prev).size() != hidden)
        throw std::invalid_argument("lstm_cell: hidden-size mismatch (W_ih rows " +
                                    std::to_string(tape.val(w_ih).dim(0)) + ", h " +
                                    std::to_string(hidden) + ")");
    int gates = tape.add(tape.linear(x, w_ih, b_ih), tape.linear(h_prev, w_hh, b_hh));
    int i_g = tape.sigmoid(tape.slice(gates, 0, hidden));
    int f_g = tape.sigmoid(tape.slice(gates, hidden, hidden));
    int g_g = tape.tanh_(tape.slice(gates, 2 * hidden, hidden));
    int o_g = tape.sigmoid(tape.slice(gates, 3 * hidden, hidden));
    int c = tape.add(tape.mul(f_g, c_prev), tape.mul(i_g, g_g));
    int h = tape.mul(o_g, tape.tanh_(c));
    return {h, c};
}

}  // namespace firecast
