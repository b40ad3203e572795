#include "gdcnn/cam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gdcnn/pgm.hpp"

namespace gdcnn {

Tensor compute_cam(const Tensor& featuremaps, std::span<const float> class_weights) {
    if (featuremaps.rank() != 3) {
        throw std::invalid_argument("compute_cam: featuremaps must be [K,H,W], got " +
                                    featuremaps.shape_str());
    }
    const int k = featuremaps.dim(0), h = featuremaps.dim(1), w = featuremaps.dim(2);
    if (static_cast<int>(class_weights.size()) != k) {
        throw std::invalid_argument("compute_cam: " + std::to_string(class_weights.size()) +
                                    " weights for " + std::to_string(k) + " featuremaps");
    }
    Tensor out({h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < k; ++i) {
        const float* p = featuremaps.data() + static_cast<std::size_t>(i) * plane;
        const float wv = class_weights[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < plane; ++j) out[j] += wv * p[j];
    }
    return out;
}

std::pair<double, double> cam_score_identity(const Tensor& featuremaps,
                                             std::span<const float> class_weights) {
    const int k = featuremaps.dim(0);
    const std::size_t plane =
        static_cast<std::size_t>(featuremaps.dim(1)) * featuremaps.dim(2);

    // Route 1: pool each map, then weight.
    double score = 0.0;
    for (int i = 0; i < k; ++i) {
        const float* p = featuremaps.data() + static_cast<std::size_t>(i) * plane;
        double s = 0.0;
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
        score += static_cast<double>(class_weights[static_cast<std::size_t>(i)]) * s;
    }

    // Route 2: weight pointwise, then sum the map.
    const Tensor m = compute_cam(featuremaps, class_weights);
    double map_sum = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) map_sum += m[j];

    return {score, map_sum};
}

bool cam_identity_ok(double score, double map_sum) {
    return std::abs(map_sum - score) <= 1e-4 * std::abs(score) + 1e-6;
}

Tensor upsample_bilinear(const Tensor& raw, int out_h, int out_w) {
    if (raw.rank() != 2) {
        throw std::invalid_argument("upsample_bilinear: want rank-2 map, got " + raw.shape_str());
    }
    const int h = raw.dim(0), w = raw.dim(1);
    Tensor out({out_h, out_w});
    const double sy = out_h > 1 ? static_cast<double>(h - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(w - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * raw.at(y0, x0) + wx * raw.at(y0, x1);
            const double bot = (1.0 - wx) * raw.at(y1, x0) + wx * raw.at(y1, x1);
            out.at(y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

Tensor upsample_nearest(const Tensor& raw, int out_h, int out_w) {
    if (raw.rank() != 2) {
        throw std::invalid_argument("upsample_nearest: want rank-2 map, got " + raw.shape_str());
    }
    const int h = raw.dim(0), w = raw.dim(1);
    Tensor out({out_h, out_w});
    const double sy = out_h > 1 ? static_cast<double>(h - 1) / (out_h - 1) : 0.0;
    const double sx = out_w > 1 ? static_cast<double>(w - 1) / (out_w - 1) : 0.0;
    for (int y = 0; y < out_h; ++y) {
        const int y0 = std::min(static_cast<int>(std::lround(y * sy)), h - 1);
        for (int x = 0; x < out_w; ++x) {
            const int x0 = std::min(static_cast<int>(std::lround(x * sx)), w - 1);
            out.at(y, x) = raw.at(y0, x0);
        }
    }
    return out;
}

Heatmap normalize_heatmap(const Tensor& raw) {
    if (raw.rank() != 2) {
        throw std::invalid_argument("normalize_heatmap: want rank-2 map, got " + raw.shape_str());
    }
    Heatmap hm;
    hm.height = raw.dim(0);
    hm.width = raw.dim(1);
    hm.values.assign(raw.size(), 0.0f);

    float mn = raw[0], mx = raw[0];
    for (std::size_t i = 1; i < raw.size(); ++i) {
        mn = std::min(mn, raw[i]);
        mx = std::max(mx, raw[i]);
    }
    if (mx == mn) return hm;  // constant map: no attention anywhere
    const float range = mx - mn;
    for (std::size_t i = 0; i < raw.size(); ++i) hm.values[i] = (raw[i] - mn) / range;
    return hm;
}

void render_overlay(const Tensor& image, const Heatmap& heatmap,
                    const std::string& side_by_side_path, const std::string& overlay_path) {
    if (image.rank() != 3 || image.dim(0) != 1) {
        throw std::invalid_argument("render_overlay: image must be [1,H,W], got " +
                                    image.shape_str());
    }
    const int h = image.dim(1), w = image.dim(2);
    if (heatmap.height != h || heatmap.width != w) {
        throw std::invalid_argument("render_overlay: heatmap " + std::to_string(heatmap.width) +
                                    "x" + std::to_string(heatmap.height) + " does not match image " +
                                    std::to_string(w) + "x" + std::to_string(h));
    }

    Tensor panel({h, 2 * w});
    Tensor blend({h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float img = image.at(0, y, x);
            const float heat = heatmap.at(y, x);
            panel.at(y, x) = img;
            panel.at(y, w + x) = heat;
            blend.at(y, x) = 0.5f * img + 0.5f * heat;
        }
    }
    write_pgm(panel, side_by_side_path);
    write_pgm(blend, overlay_path);
}

}  // namespace gdcnn
