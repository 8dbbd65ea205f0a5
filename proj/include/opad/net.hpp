#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "opad/rng.hpp"
#include "opad/serialize.hpp"

namespace opad {

enum class Act : std::uint32_t { ReLU = 0, Identity = 1 };

struct LayerSpec {
    int in = 0;
    int out = 0;
    Act act = Act::ReLU;
};

// Small fully-connected network on flat double vectors. Everything the rest
// of the code needs from a DL framework lives here: forward, reverse-mode
// gradients (checked against finite differences in the tests), SGD with
// momentum, and exact flatten/load for checkpoints.
class DenseNet {
public:
    DenseNet() = default;

    DenseNet(std::vector<LayerSpec> spec, Rng& rng) : spec_(std::move(spec)) {
        if (spec_.empty()) throw ConfigError("DenseNet needs at least one layer");
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            const auto& s = spec_[l];
            if (s.in < 1 || s.out < 1) throw ConfigError("DenseNet: bad layer shape");
            if (l > 0 && spec_[l - 1].out != s.in)
                throw ConfigError("DenseNet: layer dimensions do not chain");
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
            Vec w(static_cast<std::size_t>(s.in) * static_cast<std::size_t>(s.out));
            for (double& x : w) x = rng.uniform_real(-bound, bound);
            W_.push_back(std::move(w));
            b_.emplace_back(static_cast<std::size_t>(s.out), 0.0);
            vW_.emplace_back(W_.back().size(), 0.0);
            vb_.emplace_back(b_.back().size(), 0.0);
        }
    }

    const std::vector<LayerSpec>& spec() const { return spec_; }
    int input_dim() const { return spec_.front().in; }
    int output_dim() const { return spec_.back().out; }

    std::size_t n_params() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < spec_.size(); ++l) n += W_[l].size() + b_[l].size();
        return n;
    }

    Vec forward(const Vec& x) const {
        Vec cur = x;
        for (std::size_t l = 0; l < spec_.size(); ++l) cur = layer_forward(l, cur);
        return cur;
    }

    // Activations recorded during a forward pass, consumed by backward().
    struct Tape {
        std::vector<Vec> inputs;  // input vector of each layer
        std::vector<Vec> pre;     // pre-activation of each layer
    };

    Vec forward(const Vec& x, Tape& tape) const {
        tape.inputs.clear();
        tape.pre.clear();
        Vec cur = x;
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            tape.inputs.push_back(cur);
            Vec z = affine(l, cur);
            tape.pre.push_back(z);
            cur = activate(spec_[l].act, std::move(z));
        }
        return cur;
    }

    // Backpropagates dLoss/dOutput; accumulates parameter gradients into
    // `grads` (flat, laid out exactly as flatten()) and returns dLoss/dInput.
    Vec backward(const Tape& tape, const Vec& dout, Vec& grads) const {
        if (grads.size() != n_params()) throw IntegrityError("DenseNet: bad grad buffer");
        Vec delta = dout;
        std::size_t offset = n_params();
        for (std::size_t l = spec_.size(); l-- > 0;) {
            const int in = spec_[l].in, out = spec_[l].out;
            const Vec& x = tape.inputs[l];
            const Vec& z = tape.pre[l];
            if (spec_[l].act == Act::ReLU)
                for (int o = 0; o < out; ++o)
                    if (z[static_cast<std::size_t>(o)] <= 0.0)
                        delta[static_cast<std::size_t>(o)] = 0.0;
            offset -= static_cast<std::size_t>(out);
            double* gb = grads.data() + offset;
            offset -= static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
            double* gw = grads.data() + offset;

            Vec dx(static_cast<std::size_t>(in), 0.0);
            const double* w = W_[l].data();
            for (int o = 0; o < out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                gb[o] += d;
                const double* wrow = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
                double* gwrow = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
                for (int i = 0; i < in; ++i) {
                    gwrow[i] += d * x[static_cast<std::size_t>(i)];
                    dx[static_cast<std::size_t>(i)] += d * wrow[i];
                }
            }
            delta = std::move(dx);
        }
        return delta;
    }

    Vec zero_grads() const { return Vec(n_params(), 0.0); }

    Vec flatten() const {
        Vec flat;
        flat.reserve(n_params());
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            flat.insert(flat.end(), W_[l].begin(), W_[l].end());
            flat.insert(flat.end(), b_[l].begin(), b_[l].end());
        }
        return flat;
    }

    void load(const Vec& flat) {
        if (flat.size() != n_params()) throw IntegrityError("DenseNet: bad parameter count");
        std::size_t pos = 0;
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + W_[l].size()),
                      W_[l].begin());
            pos += W_[l].size();
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + b_[l].size()),
                      b_[l].begin());
            pos += b_[l].size();
        }
    }

    // v ← μ·v + g;  w ← w − lr·v
    void sgd_momentum(const Vec& grads, double lr, double momentum) {
        if (grads.size() != n_params()) throw IntegrityError("DenseNet: bad grad buffer");
        std::size_t pos = 0;
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            for (std::size_t i = 0; i < W_[l].size(); ++i, ++pos) {
                vW_[l][i] = momentum * vW_[l][i] + grads[pos];
                W_[l][i] -= lr * vW_[l][i];
            }
            for (std::size_t i = 0; i < b_[l].size(); ++i, ++pos) {
                vb_[l][i] = momentum * vb_[l][i] + grads[pos];
                b_[l][i] -= lr * vb_[l][i];
            }
        }
    }

    void reset_momentum() {
        for (auto& v : vW_) std::fill(v.begin(), v.end(), 0.0);
        for (auto& v : vb_) std::fill(v.begin(), v.end(), 0.0);
    }

    // Zeroing the output layer makes the initial scores exactly neutral
    // (uniform softmax / zero Q) without touching the hidden layers.
    void zero_last_layer() {
        std::fill(W_.back().begin(), W_.back().end(), 0.0);
        std::fill(b_.back().begin(), b_.back().end(), 0.0);
    }

    void write(BinWriter& w) const {
        w.u64(spec_.size());
        for (const auto& s : spec_) {
            w.u32(static_cast<std::uint32_t>(s.in));
            w.u32(static_cast<std::uint32_t>(s.out));
            w.u32(static_cast<std::uint32_t>(s.act));
        }
        w.vec(flatten());
        Vec mom;
        for (std::size_t l = 0; l < spec_.size(); ++l) {
            mom.insert(mom.end(), vW_[l].begin(), vW_[l].end());
            mom.insert(mom.end(), vb_[l].begin(), vb_[l].end());
        }
        w.vec(mom);
    }

    static DenseNet read(BinReader& r) {
        DenseNet net;
        net.spec_.resize(r.u64());
        for (auto& s : net.spec_) {
            s.in = static_cast<int>(r.u32());
            s.out = static_cast<int>(r.u32());
            s.act = static_cast<Act>(r.u32());
        }
        for (const auto& s : net.spec_) {
            net.W_.emplace_back(static_cast<std::size_t>(s.in) * static_cast<std::size_t>(s.out));
            net.b_.emplace_back(static_cast<std::size_t>(s.out));
            net.vW_.emplace_back(net.W_.back().size());
            net.vb_.emplace_back(net.b_.back().size());
        }
        net.load(r.vec());
        Vec mom = r.vec();
        if (mom.size() != net.n_params()) throw IoError("DenseNet: bad momentum block");
        std::size_t pos = 0;
        for (std::size_t l = 0; l < net.spec_.size(); ++l) {
            std::copy(mom.begin() + static_cast<std::ptrdiff_t>(pos),
                      mom.begin() + static_cast<std::ptrdiff_t>(pos + net.vW_[l].size()),
                      net.vW_[l].begin());
            pos += net.vW_[l].size();
            std::copy(mom.begin() + static_cast<std::ptrdiff_t>(pos),
                      mom.begin() + static_cast<std::ptrdiff_t>(pos + net.vb_[l].size()),
                      net.vb_[l].begin());
            pos += net.vb_[l].size();
        }
        return net;
    }

private:
    Vec affine(std::size_t l, const Vec& x) const {
        const int in = spec_[l].in, out = spec_[l].out;
        if (static_cast<int>(x.size()) != in)
            throw IntegrityError("DenseNet: input dimension mismatch");
        Vec z(b_[l]);
        const double* w = W_[l].data();
        for (int o = 0; o < out; ++o) {
            const double* wrow = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
            double acc = 0.0;
            for (int i = 0; i < in; ++i) acc += wrow[i] * x[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] += acc;
        }
        return z;
    }

    static Vec activate(Act act, Vec z) {
        if (act == Act::ReLU)
            for (double& x : z) x = x > 0.0 ? x : 0.0;
        return z;
    }

    Vec layer_forward(std::size_t l, const Vec& x) const {
        return activate(spec_[l].act, affine(l, x));
    }

    std::vector<LayerSpec> spec_;
    std::vector<Vec> W_, b_;
    std::vector<Vec> vW_, vb_;
};

inline Vec softmax(Vec z) {
    double mx = z.empty() ? 0.0 : z[0];
    for (double x : z) mx = std::max(mx, x);
    double total = 0.0;
    for (double& x : z) {
        x = std::exp(x - mx);
        total += x;
    }
    for (double& x : z) x /= total;
    return z;
}

// Cross-entropy of softmax(logits) against a hard label. Writes
// d loss / d logits (= softmax − one-hot) and returns the loss.
inline double softmax_xent(const Vec& logits, int label, Vec& dlogits) {
    dlogits = softmax(logits);
    const double p = dlogits[static_cast<std::size_t>(label)];
    dlogits[static_cast<std::size_t>(label)] -= 1.0;
    return -std::log(std::max(p, 1e-300));
}

}  // namespace opad
