#pragma once

#include <cstdint>
#include <vector>

#include "gdcnn/tensor.hpp"

namespace gdcnn {

// Forward/backward numeric kernels. All of them are pure functions of
// their inputs (dropout takes its seed explicitly); convolution is valid
// padding, stride 1; pooling is 2x2 stride 2 with floor semantics.

/// input [C,H,W] * weights [O,C,kh,kw] + bias [O] -> [O,H-kh+1,W-kw+1]
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

/// Analytic gradients of conv2d_forward w.r.t. all three arguments.
ConvGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

struct PoolResult {
    Tensor output;
    /// Flat index into the pool input of each window's winner; ties go to
    /// the first position in row-major scan order.
    std::vector<std::int32_t> argmax;
};

/// 2x2 max pooling, stride 2; a trailing odd row/column is dropped.
PoolResult maxpool2d_forward(const Tensor& input);

/// Routes grad_out back to the recorded argmax positions.
Tensor maxpool2d_backward(const std::vector<std::int32_t>& argmax, const Tensor& grad_out,
                          const std::vector<int>& input_shape);

Tensor relu(const Tensor& input);
/// Gradient is 0 at input == 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

float sigmoid(float x);
Tensor sigmoid(const Tensor& input);

/// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

/// out = W*x + b with weights [N_out,N_in].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

struct DropoutResult {
    Tensor output;
    /// Per-element multiplier: 0 where dropped, 1/(1-rate) where kept.
    Tensor mask;
};

/// Inverted dropout; `rate` is the drop probability. rate 0 is the identity.
/// Evaluation-mode forward passes skip this op entirely.
DropoutResult dropout_forward(const Tensor& input, float rate, std::uint64_t seed);

Tensor dropout_backward(const Tensor& mask, const Tensor& grad_out);

/// Global pooling by summation: out[k] = sum_{x,y} featuremaps[k,y,x].
Tensor gap(const Tensor& featuremaps);

/// Broadcasts grad_out[k] over the k-th featuremap.
Tensor gap_backward(const Tensor& grad_out, int height, int width);

}  // namespace gdcnn
