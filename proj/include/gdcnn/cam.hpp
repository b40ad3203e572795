#pragma once

#include <span>
#include <string>
#include <utility>

#include "gdcnn/tensor.hpp"

namespace gdcnn {

/// Normalized spatial attention map. After normalize_heatmap the values
/// span exactly [0,1], except for constant inputs which map to all zeros.
struct Heatmap {
    int width = 0;
    int height = 0;
    std::vector<float> values;  // row-major, height*width

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Weighted featuremap combination: out(y,x) = sum_k weights[k] * maps[k,y,x].
/// May contain negatives; callers normalize afterwards.
Tensor compute_cam(const Tensor& featuremaps, std::span<const float> class_weights);

/// Returns (class score via pooled route, spatial sum of the activation map).
/// The two routes are algebraically identical; the pair lets callers check
/// the identity on live data.
std::pair<double, double> cam_score_identity(const Tensor& featuremaps,
                                             std::span<const float> class_weights);

bool cam_identity_ok(double score, double map_sum);

/// Corner-aligned bilinear resampling of a rank-2 map.
Tensor upsample_bilinear(const Tensor& raw, int out_h, int out_w);

/// Nearest-neighbour variant, kept for debugging comparisons.
Tensor upsample_nearest(const Tensor& raw, int out_h, int out_w);

/// (v - min)/(max - min); constant maps normalize to all zeros.
Heatmap normalize_heatmap(const Tensor& raw);

/// Writes two P5 graymaps: a side-by-side (original | heatmap) panel and a
/// 50/50 blended overlay. The image must be [1,H,W] with the heatmap's size.
void render_overlay(const Tensor& image, const Heatmap& heatmap,
                    const std::string& side_by_side_path, const std::string& overlay_path);

}  // namespace gdcnn
