#include "gdcnn/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gdcnn/rng.hpp"

namespace gdcnn {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(input.rank() == 3, "conv2d_forward: input rank " + std::to_string(input.rank()) +
                                   " != 3 (want [C,H,W])");
    require(weights.rank() == 4, "conv2d_forward: weight rank " +
                                     std::to_string(weights.rank()) + " != 4 (want [O,C,kh,kw])");
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    require(weights.dim(1) == c_in, "conv2d_forward: weight in-channels " +
                                        std::to_string(weights.dim(1)) + " != input channels " +
                                        std::to_string(c_in));
    require(h >= kh, "conv2d_forward: input height " + std::to_string(h) + " < kernel height " +
                         std::to_string(kh));
    require(w >= kw, "conv2d_forward: input width " + std::to_string(w) + " < kernel width " +
                         std::to_string(kw));
    require(bias.rank() == 1 && bias.dim(0) == c_out,
            "conv2d_forward: bias shape " + bias.shape_str() + " != [" + std::to_string(c_out) + "]");

    const int oh = h - kh + 1, ow = w - kw + 1;
    Tensor out({c_out, oh, ow});
    float* o = out.data();
    const float* in = input.data();
    const float* wt = weights.data();

    for (int co = 0; co < c_out; ++co) {
        float* oplane = o + static_cast<std::size_t>(co) * oh * ow;
        const float b = bias[static_cast<std::size_t>(co)];
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) oplane[i] = b;
        for (int ci = 0; ci < c_in; ++ci) {
            const float* iplane = in + static_cast<std::size_t>(ci) * h * w;
            const float* wk = wt + (static_cast<std::size_t>(co) * c_in + ci) * kh * kw;
            for (int dy = 0; dy < kh; ++dy) {
                for (int dx = 0; dx < kw; ++dx) {
                    const float wv = wk[dy * kw + dx];
                    for (int y = 0; y < oh; ++y) {
                        const float* irow = iplane + static_cast<std::size_t>(y + dy) * w + dx;
                        float* orow = oplane + static_cast<std::size_t>(y) * ow;
                        for (int x = 0; x < ow; ++x) {
                            orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const int oh = h - kh + 1, ow = w - kw + 1;
    require(weights.dim(1) == c_in, "conv2d_backward: weight in-channels " +
                                        std::to_string(weights.dim(1)) + " != input channels " +
                                        std::to_string(c_in));
    require(grad_out.rank() == 3 && grad_out.dim(0) == c_out && grad_out.dim(1) == oh &&
                grad_out.dim(2) == ow,
            "conv2d_backward: grad_out shape " + grad_out.shape_str() + " != [" +
                std::to_string(c_out) + "x" + std::to_string(oh) + "x" + std::to_string(ow) + "]");

    ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({c_out})};

    const float* in = input.data();
    const float* wt = weights.data();
    const float* go = grad_out.data();

    for (int co = 0; co < c_out; ++co) {
        const float* gplane = go + static_cast<std::size_t>(co) * oh * ow;
        // bias: plain sum over the output plane
        double bsum = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) bsum += gplane[i];
        g.bias[static_cast<std::size_t>(co)] = static_cast<float>(bsum);

        for (int ci = 0; ci < c_in; ++ci) {
            const float* iplane = in + static_cast<std::size_t>(ci) * h * w;
            float* giplane = g.input.data() + static_cast<std::size_t>(ci) * h * w;
            const float* wk = wt + (static_cast<std::size_t>(co) * c_in + ci) * kh * kw;
            float* gwk = g.weights.data() + (static_cast<std::size_t>(co) * c_in + ci) * kh * kw;
            for (int dy = 0; dy < kh; ++dy) {
                for (int dx = 0; dx < kw; ++dx) {
                    const float wv = wk[dy * kw + dx];
                    double wsum = 0.0;
                    for (int y = 0; y < oh; ++y) {
                        const float* grow = gplane + static_cast<std::size_t>(y) * ow;
                        const float* irow = iplane + static_cast<std::size_t>(y + dy) * w + dx;
                        float* girow = giplane + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int x = 0; x < ow; ++x) {
                            girow[x] += wv * grow[x];
                            wsum += static_cast<double>(grow[x]) * irow[x];
                        }
                    }
                    gwk[dy * kw + dx] = static_cast<float>(wsum);
                }
            }
        }
    }
    return g;
}

PoolResult maxpool2d_forward(const Tensor& input) {
    require(input.rank() == 3, "maxpool2d_forward: input rank " + std::to_string(input.rank()) +
                                   " != 3 (want [C,H,W])");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    require(h >= 2, "maxpool2d_forward: input height " + std::to_string(h) + " < 2");
    require(w >= 2, "maxpool2d_forward: input width " + std::to_string(w) + " < 2");
    const int oh = h / 2, ow = w / 2;

    PoolResult r{Tensor({c, oh, ow}), {}};
    r.argmax.resize(static_cast<std::size_t>(c) * oh * ow);
    const float* in = input.data();

    std::size_t oi = 0;
    for (int ch = 0; ch < c; ++ch) {
        const std::size_t base = static_cast<std::size_t>(ch) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++oi) {
                const std::size_t p00 = base + static_cast<std::size_t>(2 * y) * w + 2 * x;
                // strict > keeps the first winner in row-major scan order
                std::size_t best = p00;
                float bv = in[p00];
                if (in[p00 + 1] > bv) { best = p00 + 1; bv = in[p00 + 1]; }
                if (in[p00 + w] > bv) { best = p00 + w; bv = in[p00 + w]; }
                if (in[p00 + w + 1] > bv) { best = p00 + w + 1; bv = in[p00 + w + 1]; }
                r.output[oi] = bv;
                r.argmax[oi] = static_cast<std::int32_t>(best);
            }
        }
    }
    return r;
}

Tensor maxpool2d_backward(const std::vector<std::int32_t>& argmax, const Tensor& grad_out,
                          const std::vector<int>& input_shape) {
    require(input_shape.size() == 3, "maxpool2d_backward: input shape must be rank 3");
    require(argmax.size() == grad_out.size(),
            "maxpool2d_backward: argmax count " + std::to_string(argmax.size()) +
                " != grad_out count " + std::to_string(grad_out.size()));
    Tensor grad_in(input_shape);
    const std::size_t n = grad_in.size();
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        const auto idx = static_cast<std::size_t>(argmax[i]);
        if (argmax[i] < 0 || idx >= n) {
            throw std::runtime_error("maxpool2d_backward: argmax index " +
                                     std::to_string(argmax[i]) + " out of range (corrupted state)");
        }
        grad_in[idx] += grad_out[i];
    }
    return grad_in;
}

Tensor relu(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0f ? input[i] : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    require(input.shape() == grad_out.shape(), "relu_backward: input shape " + input.shape_str() +
                                                   " != grad shape " + grad_out.shape_str());
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0f ? grad_out[i] : 0.0f;
    return out;
}

float sigmoid(float x) {
    // branch on sign so exp never overflows
    if (x >= 0.0f) {
        return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
    }
    const double e = std::exp(static_cast<double>(x));
    return static_cast<float>(e / (1.0 + e));
}

Tensor sigmoid(const Tensor& input) {
    Tensor out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = sigmoid(input[i]);
    return out;
}

Tensor softmax(const Tensor& logits) {
    require(logits.rank() == 1 && logits.dim(0) >= 1,
            "softmax: want rank-1 tensor with at least one class, got " + logits.shape_str());
    const std::size_t n = logits.size();
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    std::vector<double> e(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(static_cast<double>(logits[i]) - mx);
        sum += e[i];
    }
    Tensor out(logits.shape());
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(e[i] / sum);
    return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(input.rank() == 1, "dense_forward: input rank " + std::to_string(input.rank()) + " != 1");
    require(weights.rank() == 2, "dense_forward: weight rank " + std::to_string(weights.rank()) +
                                     " != 2 (want [N_out,N_in])");
    const int n_in = input.dim(0), n_out = weights.dim(0);
    require(weights.dim(1) == n_in, "dense_forward: weight in-dim " + std::to_string(weights.dim(1)) +
                                        " != input dim " + std::to_string(n_in));
    require(bias.rank() == 1 && bias.dim(0) == n_out,
            "dense_forward: bias shape " + bias.shape_str() + " != [" + std::to_string(n_out) + "]");

    Tensor out({n_out});
    const float* x = input.data();
    for (int o = 0; o < n_out; ++o) {
        const float* row = weights.data() + static_cast<std::size_t>(o) * n_in;
        double acc = bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < n_in; ++i) acc += static_cast<double>(row[i]) * x[i];
        out[static_cast<std::size_t>(o)] = static_cast<float>(acc);
    }
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
    const int n_in = input.dim(0), n_out = weights.dim(0);
    require(weights.dim(1) == n_in, "dense_backward: weight in-dim " + std::to_string(weights.dim(1)) +
                                        " != input dim " + std::to_string(n_in));
    require(grad_out.rank() == 1 && grad_out.dim(0) == n_out,
            "dense_backward: grad_out shape " + grad_out.shape_str() + " != [" +
                std::to_string(n_out) + "]");

    DenseGrads g{Tensor({n_in}), Tensor(weights.shape()), grad_out};
    const float* x = input.data();
    const float* go = grad_out.data();
    for (int o = 0; o < n_out; ++o) {
        const float* row = weights.data() + static_cast<std::size_t>(o) * n_in;
        float* grow = g.weights.data() + static_cast<std::size_t>(o) * n_in;
        const float gv = go[o];
        for (int i = 0; i < n_in; ++i) {
            grow[i] = gv * x[i];
            g.input[static_cast<std::size_t>(i)] += gv * row[i];
        }
    }
    return g;
}

DropoutResult dropout_forward(const Tensor& input, float rate, std::uint64_t seed) {
    require(rate >= 0.0f && rate < 1.0f,
            "dropout_forward: rate " + std::to_string(rate) + " outside [0,1)");
    DropoutResult r{Tensor(input.shape()), Tensor(input.shape())};
    if (rate == 0.0f) {
        r.output = input;
        r.mask.fill(1.0f);
        return r;
    }
    const float scale = 1.0f / (1.0f - rate);
    Rng rng(seed);
    for (std::size_t i = 0; i < input.size(); ++i) {
        const bool keep = rng.uniform() >= static_cast<double>(rate);
        r.mask[i] = keep ? scale : 0.0f;
        r.output[i] = input[i] * r.mask[i];
    }
    return r;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& grad_out) {
    require(mask.shape() == grad_out.shape(), "dropout_backward: mask shape " + mask.shape_str() +
                                                  " != grad shape " + grad_out.shape_str());
    Tensor out(mask.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] * grad_out[i];
    return out;
}

Tensor gap(const Tensor& featuremaps) {
    require(featuremaps.rank() == 3, "gap: input rank " + std::to_string(featuremaps.rank()) +
                                         " != 3 (want [K,H,W])");
    const int k = featuremaps.dim(0);
    const std::size_t plane = static_cast<std::size_t>(featuremaps.dim(1)) * featuremaps.dim(2);
    Tensor out({k});
    for (int i = 0; i < k; ++i) {
        const float* p = featuremaps.data() + static_cast<std::size_t>(i) * plane;
        double s = 0.0;
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
        out[static_cast<std::size_t>(i)] = static_cast<float>(s);
    }
    return out;
}

Tensor gap_backward(const Tensor& grad_out, int height, int width) {
    require(grad_out.rank() == 1, "gap_backward: grad rank != 1");
    const int k = grad_out.dim(0);
    Tensor out({k, height, width});
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (int i = 0; i < k; ++i) {
        float* p = out.data() + static_cast<std::size_t>(i) * plane;
        const float g = grad_out[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < plane; ++j) p[j] = g;
    }
    return out;
}

}  // namespace gdcnn
