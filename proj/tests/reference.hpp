#pragma once

// Test-only reference implementations, independent of the library kernels.
// Everything here runs in double precision with the most literal loop
// nests possible; finite-difference checks differentiate these functions
// so float rounding in the library never pollutes the numeric gradient.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "gdcnn/model.hpp"
#include "gdcnn/rng.hpp"
#include "gdcnn/tensor.hpp"

namespace ref {

struct Grid3 {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;

    Grid3() = default;
    Grid3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_) {}
    double& at(int i, int y, int x) {
        return v[(static_cast<std::size_t>(i) * h + y) * w + x];
    }
    double at(int i, int y, int x) const {
        return v[(static_cast<std::size_t>(i) * h + y) * w + x];
    }
};

inline Grid3 to_grid(const gdcnn::Tensor& t) {
    Grid3 g(t.dim(0), t.dim(1), t.dim(2));
    for (std::size_t i = 0; i < t.size(); ++i) g.v[i] = t[i];
    return g;
}

inline std::vector<double> to_vec(const gdcnn::Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.size());
}

// six nested loops, straight from the definition
inline Grid3 conv2d(const Grid3& in, const std::vector<double>& w, const std::vector<double>& b,
                    int c_out, int kh, int kw) {
    const int oh = in.h - kh + 1, ow = in.w - kw + 1;
    Grid3 out(c_out, oh, ow);
    for (int o = 0; o < c_out; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = b[static_cast<std::size_t>(o)];
                for (int ci = 0; ci < in.c; ++ci) {
                    for (int dy = 0; dy < kh; ++dy) {
                        for (int dx = 0; dx < kw; ++dx) {
                            acc += in.at(ci, y + dy, x + dx) *
                                   w[((static_cast<std::size_t>(o) * in.c + ci) * kh + dy) * kw + dx];
                        }
                    }
                }
                out.at(o, y, x) = acc;
            }
        }
    }
    return out;
}

inline Grid3 maxpool(const Grid3& in) {
    Grid3 out(in.c, in.h / 2, in.w / 2);
    for (int ci = 0; ci < in.c; ++ci) {
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                double best = in.at(ci, 2 * y, 2 * x);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        best = std::max(best, in.at(ci, 2 * y + dy, 2 * x + dx));
                    }
                }
                out.at(ci, y, x) = best;
            }
        }
    }
    return out;
}

inline Grid3 relu(const Grid3& in) {
    Grid3 out = in;
    for (auto& x : out.v) x = x > 0 ? x : 0;
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::vector<double> softmax(const std::vector<double>& s) {
    const double mx = *std::max_element(s.begin(), s.end());
    std::vector<double> out(s.size());
    double sum = 0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += (out[i] = std::exp(s[i] - mx));
    for (auto& x : out) x /= sum;
    return out;
}

inline std::vector<double> dense(const std::vector<double>& x, const std::vector<double>& w,
                                 const std::vector<double>& b, int n_out) {
    const std::size_t n_in = x.size();
    std::vector<double> out(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
        double acc = b[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < n_in; ++i) acc += w[static_cast<std::size_t>(o) * n_in + i] * x[i];
        out[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

inline std::vector<double> gap(const Grid3& in) {
    std::vector<double> out(static_cast<std::size_t>(in.c), 0.0);
    for (int ci = 0; ci < in.c; ++ci) {
        for (int y = 0; y < in.h; ++y) {
            for (int x = 0; x < in.w; ++x) out[static_cast<std::size_t>(ci)] += in.at(ci, y, x);
        }
    }
    return out;
}

inline double bce(double p, int y) {
    const double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

// Full-model loss in double precision, mirroring the library wiring but
// built only from the reference pieces above. Dropout masks come in as
// explicit multipliers so train-mode graphs stay differentiable here.
// The pattern hash lets finite-difference sweeps detect and skip
// parameters whose perturbation crossed a ReLU kink or a pooling tie.
struct ForwardProbe {
    double loss = 0.0;
    // FNV-style hash over every ReLU sign and pool argmax; two evaluations
    // with different hashes crossed a kink or a tie between them.
    std::uint64_t pattern_hash = 1469598103934665603ULL;

    void mix(std::uint64_t v) { pattern_hash = (pattern_hash ^ v) * 1099511628211ULL; }
};

inline ForwardProbe model_loss(const gdcnn::Parameters& params, const gdcnn::ModelConfig& config,
                               const gdcnn::Tensor& image, int label,
                               const std::vector<double>& head_mask) {
    ForwardProbe probe;
    Grid3 x = to_grid(image);

    for (int s = 0; s < 4; ++s) {
        const auto si = static_cast<std::size_t>(s);
        const gdcnn::Tensor& wt = params[2 * si];
        const Grid3 pre = conv2d(x, to_vec(wt), to_vec(params[2 * si + 1]), wt.dim(0), wt.dim(2),
                                 wt.dim(3));
        for (double v : pre.v) probe.mix(v > 0 ? 1 : 0);
        const Grid3 post = relu(pre);
        const bool pooled = s < 3 || config.head == gdcnn::Head::dense;
        if (pooled) {
            // record each window's winner (first max in scan order)
            for (int ci = 0; ci < post.c; ++ci) {
                for (int y = 0; y + 1 < post.h; y += 2) {
                    for (int xx = 0; xx + 1 < post.w; xx += 2) {
                        const std::array<double, 4> vals{post.at(ci, y, xx), post.at(ci, y, xx + 1),
                                                         post.at(ci, y + 1, xx),
                                                         post.at(ci, y + 1, xx + 1)};
                        int best = 0;
                        for (int k = 1; k < 4; ++k) {
                            if (vals[static_cast<std::size_t>(k)] > vals[static_cast<std::size_t>(best)]) best = k;
                        }
                        probe.mix(static_cast<std::uint64_t>(best) + 2);
                    }
                }
            }
            x = maxpool(post);
        } else {
            x = post;
        }
    }

    std::vector<double> feat;
    if (config.head == gdcnn::Head::gap) {
        feat = gap(x);
    } else {
        feat = x.v;
    }
    for (std::size_t i = 0; i < feat.size(); ++i) feat[i] *= head_mask[i];

    if (config.head == gdcnn::Head::gap) {
        const gdcnn::Tensor& w = params[8];
        const std::vector<double> logits =
            dense(feat, to_vec(w), std::vector<double>(2, 0.0), 2);
        const std::vector<double> probs = softmax(logits);
        probe.loss = -std::log(std::clamp(probs[static_cast<std::size_t>(label)], 1e-7, 1.0 - 1e-7));
    } else {
        const std::vector<double> h_pre =
            dense(feat, to_vec(params[8]), to_vec(params[9]), params[8].dim(0));
        for (double v : h_pre) probe.mix(v > 0 ? 1 : 0);
        std::vector<double> h = h_pre;
        for (auto& v : h) v = v > 0 ? v : 0;
        const std::vector<double> z = dense(h, to_vec(params[10]), to_vec(params[11]), 1);
        probe.loss = bce(sigmoid(z[0]), label);
    }
    return probe;
}

// random helpers for the oracle suites
inline gdcnn::Tensor random_tensor(std::vector<int> shape, gdcnn::Rng& rng, double lo = -1.0,
                                   double hi = 1.0) {
    gdcnn::Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

inline bool rel_close(double analytic, double numeric, double tol, double abs_floor = 1e-9) {
    return std::abs(analytic - numeric) <= tol * std::max(std::abs(analytic), std::abs(numeric)) + abs_floor;
}

}  // namespace ref
