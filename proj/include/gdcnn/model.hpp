#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdcnn/analysis.hpp"
#include "gdcnn/data.hpp"
#include "gdcnn/kernels.hpp"
#include "gdcnn/tensor.hpp"

namespace gdcnn {

enum class Head : std::uint8_t { dense = 0, gap = 1 };

/// Four conv stages (3x3 valid, ReLU, 2x2 maxpool) followed by either the
/// dense classifier or the pooled linear head. The gap head attaches to
/// the fourth conv output and skips the fourth pool so the class weights
/// act directly on spatial featuremaps.
struct ModelConfig {
    int input_h = 137;
    int input_w = 137;
    int input_c = 1;
    std::array<int, 4> conv_filters{32, 64, 128, 128};
    Head head = Head::gap;
    int dense_hidden = 512;
    float dropout_rate = 0.8f;
    int num_classes = 2;

    void validate() const;
};

/// Spatial dimensions at every stage, derived from the config.
struct SizeTrace {
    std::array<std::pair<int, int>, 4> conv_out;  // post-conv (pre-pool) H,W
    std::array<std::pair<int, int>, 4> pool_out;  // post-pool H,W (stage 4 unused by gap head)
    int flat = 0;                                 // dense head: pool4 element count
    int featuremaps = 0;                          // gap head: K = conv_filters[3]
};

SizeTrace size_trace(const ModelConfig& config);

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Learnable weights in a fixed canonical order (conv1..conv4 weight/bias,
/// then the head). The gap head is a bias-free [num_classes, K] matrix.
struct Parameters {
    std::vector<NamedTensor> items;

    Tensor& operator[](std::size_t i) { return items[i].tensor; }
    const Tensor& operator[](std::size_t i) const { return items[i].tensor; }
    std::size_t count() const { return items.size(); }

    const Tensor& by_name(const std::string& name) const;
};

/// He-uniform weights (limit sqrt(6/fan_in)), zero biases; deterministic
/// under the seed.
Parameters init_params(const ModelConfig& config, std::uint64_t seed);

/// Zero tensors shaped like `params` (gradient accumulators).
Parameters zeros_like(const Parameters& params);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long t = 0;
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

AdamState init_adam(const Parameters& params, float learning_rate);

/// Bias-corrected Adam update, applied in place; t increments once per call.
void adam_step(Parameters& params, const Parameters& grads, AdamState& state);

enum class Mode { train, eval };

struct Prediction {
    Head head = Head::gap;
    float prob1 = 0.0f;             // dense head: sigmoid probability of class 1
    std::array<float, 2> logits{};  // gap head: S_c
    std::array<float, 2> probs{};   // gap head: softmax P_c
    int predicted = 0;
};

/// Activations retained from a forward pass, for backward and for CAM.
/// conv_post[3] holds the fourth conv's post-ReLU featuremaps f_k.
struct ForwardTrace {
    std::array<Tensor, 4> conv_in;
    std::array<Tensor, 4> conv_pre;
    std::array<Tensor, 4> conv_post;
    std::array<std::vector<std::int32_t>, 4> pool_argmax;
    std::array<Tensor, 4> pool_out;

    Tensor head_in;       // dense: flattened pool4; gap: pooled vector F
    Tensor dropout_mask;  // identity mask in eval mode / rate 0
    Tensor head_dropped;  // head_in after dropout
    Tensor fc1_pre, fc1_post, fc2_pre;  // dense head only

    Prediction prediction;
    Mode mode = Mode::eval;
};

/// Runs the network. Dropout is active only in train mode and draws from
/// `dropout_seed`. Pass `trace` to retain activations. Throws if the image
/// shape or pixel range is off, or if any layer produces a non-finite
/// value (the message names the layer).
Prediction forward(const Parameters& params, const ModelConfig& config, const Tensor& image,
                   Mode mode, std::uint64_t dropout_seed = 0, ForwardTrace* trace = nullptr);

/// Binary cross entropy; p is clamped to [1e-7, 1-1e-7].
double loss_bce(double p, int label);
/// d(loss)/dp on the clamped probability.
double loss_bce_grad(double p, int label);

/// -ln P_label with the same clamping.
double loss_ce(const Tensor& probs, int label);
std::vector<double> loss_ce_grad(const Tensor& probs, int label);

/// Loss of a traced prediction (BCE for the dense head, CE for gap).
double loss_from_prediction(const Prediction& pred, int label);

/// Gradients of the loss w.r.t. every parameter, chained through the
/// recorded trace (including its dropout mask).
Parameters backward(const Parameters& params, const ModelConfig& config,
                    const ForwardTrace& trace, int label);

struct TrainOptions {
    int batch_size = 50;
    int epochs = 40;
    float learning_rate = 1e-3f;
    std::uint64_t seed = 1;
    float noise_sigma = 0.0f;  // >0 applies per-sample Gaussian noise each epoch
    bool log_epochs = false;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    std::optional<double> val_loss;
    std::optional<double> val_acc;
};

struct TrainResult {
    Parameters params;
    std::vector<EpochStats> history;
};

/// Shuffled mini-batch training with mean-over-batch gradients and Adam.
/// Fully deterministic under the seed (init, shuffle, dropout and noise
/// are all derived from it). Aborts with epoch/batch context if the loss
/// goes non-finite.
TrainResult train(const ModelConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options);

struct PredictionRecord {
    std::string id;
    int label = 0;
    int predicted = 0;
    float score = 0.0f;  // dense: p(class 1); gap: P of the predicted class
};

struct EvalResult {
    std::array<ConfusionCounts, 2> per_class;  // index = class treated as positive
    std::vector<PredictionRecord> predictions;
};

/// Eval-mode pass over a dataset; threshold 0.5 for the dense head,
/// argmax for the gap head.
EvalResult evaluate(const Parameters& params, const ModelConfig& config,
                    const std::vector<Sample>& dataset);

/// Binary checkpoint ("GDCN" magic, version 1). Round-trips bit-exactly.
void save_checkpoint(const Parameters& params, const ModelConfig& config,
                     const std::string& path);

struct Checkpoint {
    Parameters params;
    ModelConfig config;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace gdcnn
