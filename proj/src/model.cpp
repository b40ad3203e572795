#include "gdcnn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "gdcnn/rng.hpp"

namespace gdcnn {

namespace {

constexpr double kProbClamp = 1e-7;

// seed stream tags: purpose in the high 32 bits, epoch in the low ones
std::uint64_t stream_tag(std::uint64_t purpose, std::uint64_t epoch) {
    return (purpose << 32) | (epoch & 0xffffffffULL);
}
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kDropoutStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

void check_finite(const Tensor& t, const char* layer) {
    if (!t.all_finite()) {
        throw std::runtime_error(std::string("forward: non-finite activation in layer ") + layer);
    }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

void ModelConfig::validate() const {
    if (input_c != 1) throw std::invalid_argument("config: input channels must be 1");
    if (num_classes != 2) throw std::invalid_argument("config: num_classes is fixed at 2");
    for (int f : conv_filters) {
        if (f < 1) throw std::invalid_argument("config: conv filter counts must be positive");
    }
    if (dense_hidden < 1) throw std::invalid_argument("config: dense_hidden must be positive");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f)) {
        throw std::invalid_argument("config: dropout_rate must be in [0,1)");
    }
    size_trace(*this);  // throws when the spatial trace collapses
}

SizeTrace size_trace(const ModelConfig& config) {
    SizeTrace t;
    int h = config.input_h, w = config.input_w;
    for (int s = 0; s < 4; ++s) {
        if (h < 3 || w < 3) {
            throw std::invalid_argument("config: input " + std::to_string(config.input_h) + "x" +
                                        std::to_string(config.input_w) + " leaves conv stage " +
                                        std::to_string(s + 1) + " with only " + std::to_string(h) +
                                        "x" + std::to_string(w));
        }
        h -= 2;
        w -= 2;
        t.conv_out[static_cast<std::size_t>(s)] = {h, w};
        const bool pooled = s < 3 || config.head == Head::dense;
        if (pooled) {
            if (h < 2 || w < 2) {
                throw std::invalid_argument("config: pool stage " + std::to_string(s + 1) +
                                            " input " + std::to_string(h) + "x" + std::to_string(w) +
                                            " is smaller than the 2x2 window");
            }
            h /= 2;
            w /= 2;
        }
        t.pool_out[static_cast<std::size_t>(s)] = {h, w};
    }
    t.flat = config.conv_filters[3] * h * w;
    t.featuremaps = config.conv_filters[3];
    return t;
}

const Tensor& Parameters::by_name(const std::string& name) const {
    for (const auto& item : items) {
        if (item.name == name) return item.tensor;
    }
    throw std::invalid_argument("parameters: no tensor named " + name);
}

namespace {

void fill_he_uniform(Tensor& t, int fan_in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<float>(rng.uniform(-limit, limit));
    }
}

}  // namespace

Parameters init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const SizeTrace trace = size_trace(config);
    Rng rng(seed);
    Parameters p;

    int c_in = config.input_c;
    for (int s = 0; s < 4; ++s) {
        const int c_out = config.conv_filters[static_cast<std::size_t>(s)];
        NamedTensor w{"conv" + std::to_string(s + 1) + ".weight", Tensor({c_out, c_in, 3, 3})};
        fill_he_uniform(w.tensor, c_in * 9, rng);
        p.items.push_back(std::move(w));
        p.items.push_back({"conv" + std::to_string(s + 1) + ".bias", Tensor({c_out})});
        c_in = c_out;
    }

    if (config.head == Head::dense) {
        NamedTensor w1{"fc1.weight", Tensor({config.dense_hidden, trace.flat})};
        fill_he_uniform(w1.tensor, trace.flat, rng);
        p.items.push_back(std::move(w1));
        p.items.push_back({"fc1.bias", Tensor({config.dense_hidden})});
        NamedTensor w2{"fc2.weight", Tensor({1, config.dense_hidden})};
        fill_he_uniform(w2.tensor, config.dense_hidden, rng);
        p.items.push_back(std::move(w2));
        p.items.push_back({"fc2.bias", Tensor({1})});
    } else {
        // bias-free class weights so the score is exactly the weighted pool
        NamedTensor w{"head.weight", Tensor({config.num_classes, trace.featuremaps})};
        fill_he_uniform(w.tensor, trace.featuremaps, rng);
        p.items.push_back(std::move(w));
    }
    return p;
}

Parameters zeros_like(const Parameters& params) {
    Parameters z;
    z.items.reserve(params.items.size());
    for (const auto& item : params.items) {
        z.items.push_back({item.name, Tensor(item.tensor.shape())});
    }
    return z;
}

AdamState init_adam(const Parameters& params, float learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    s.m.reserve(params.count());
    s.v.reserve(params.count());
    for (const auto& item : params.items) {
        s.m.emplace_back(item.tensor.shape());
        s.v.emplace_back(item.tensor.shape());
    }
    return s;
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state) {
    if (grads.count() != params.count() || state.m.size() != params.count()) {
        throw std::invalid_argument("adam_step: parameter/gradient/state layout mismatch");
    }
    state.t += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    const double lr = state.learning_rate, eps = state.epsilon;

    for (std::size_t i = 0; i < params.count(); ++i) {
        Tensor& theta = params[i];
        const Tensor& g = grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (g.shape() != theta.shape()) {
            throw std::invalid_argument("adam_step: gradient shape " + g.shape_str() +
                                        " != parameter shape " + theta.shape_str() + " for " +
                                        params.items[i].name);
        }
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double gj = g[j];
            const double mj = b1 * m[j] + (1.0 - b1) * gj;
            const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            const double mhat = mj / corr1;
            const double vhat = vj / corr2;
            theta[j] = static_cast<float>(theta[j] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

Prediction forward(const Parameters& params, const ModelConfig& config, const Tensor& image,
                   Mode mode, std::uint64_t dropout_seed, ForwardTrace* trace) {
    const std::vector<int> want{config.input_c, config.input_h, config.input_w};
    if (image.shape() != want) {
        throw std::invalid_argument("forward: image shape " + image.shape_str() + " != expected " +
                                    shape_to_string(want));
    }
    for (std::size_t i = 0; i < image.size(); ++i) {
        if (!(image[i] >= -1e-6f && image[i] <= 1.0f + 1e-6f)) {
            throw std::invalid_argument("forward: image pixel " + std::to_string(image[i]) +
                                        " outside [0,1]");
        }
    }

    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    tr = ForwardTrace{};
    tr.mode = mode;

    Tensor x = image;
    for (int s = 0; s < 4; ++s) {
        const auto si = static_cast<std::size_t>(s);
        const Tensor& w = params[2 * si];
        const Tensor& b = params[2 * si + 1];
        tr.conv_in[si] = x;
        tr.conv_pre[si] = conv2d_forward(x, w, b);
        check_finite(tr.conv_pre[si], ("conv" + std::to_string(s + 1)).c_str());
        tr.conv_post[si] = relu(tr.conv_pre[si]);
        const bool pooled = s < 3 || config.head == Head::dense;
        if (pooled) {
            PoolResult pr = maxpool2d_forward(tr.conv_post[si]);
            tr.pool_argmax[si] = std::move(pr.argmax);
            tr.pool_out[si] = std::move(pr.output);
            x = tr.pool_out[si];
        } else {
            x = tr.conv_post[si];
        }
    }

    Prediction pred;
    pred.head = config.head;

    if (config.head == Head::gap) {
        tr.head_in = gap(tr.conv_post[3]);
        check_finite(tr.head_in, "gap");
    } else {
        tr.head_in = tr.pool_out[3];
        tr.head_in.reshape({static_cast<int>(tr.head_in.size())});
    }

    if (mode == Mode::train && config.dropout_rate > 0.0f) {
        DropoutResult dr = dropout_forward(tr.head_in, config.dropout_rate, dropout_seed);
        tr.dropout_mask = std::move(dr.mask);
        tr.head_dropped = std::move(dr.output);
    } else {
        tr.dropout_mask = Tensor::full(tr.head_in.shape(), 1.0f);
        tr.head_dropped = tr.head_in;
    }

    if (config.head == Head::gap) {
        const Tensor& w = params[8];
        const Tensor zero_bias({config.num_classes});
        Tensor logits = dense_forward(tr.head_dropped, w, zero_bias);
        check_finite(logits, "head");
        Tensor probs = softmax(logits);
        pred.logits = {logits[0], logits[1]};
        pred.probs = {probs[0], probs[1]};
        pred.predicted = probs[1] > probs[0] ? 1 : 0;
        tr.fc2_pre = std::move(logits);
    } else {
        tr.fc1_pre = dense_forward(tr.head_dropped, params[8], params[9]);
        check_finite(tr.fc1_pre, "fc1");
        tr.fc1_post = relu(tr.fc1_pre);
        tr.fc2_pre = dense_forward(tr.fc1_post, params[10], params[11]);
        check_finite(tr.fc2_pre, "fc2");
        const float p = sigmoid(tr.fc2_pre[0]);
        pred.prob1 = p;
        pred.probs = {1.0f - p, p};
        pred.predicted = p >= 0.5f ? 1 : 0;
    }

    tr.prediction = pred;
    return pred;
}

double loss_bce(double p, int label) {
    const double q = clamp_prob(p);
    return label == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double loss_bce_grad(double p, int label) {
    const double q = clamp_prob(p);
    return label == 1 ? -1.0 / q : 1.0 / (1.0 - q);
}

double loss_ce(const Tensor& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size())) {
        throw std::invalid_argument("loss_ce: label " + std::to_string(label) + " out of range");
    }
    return -std::log(clamp_prob(probs[static_cast<std::size_t>(label)]));
}

std::vector<double> loss_ce_grad(const Tensor& probs, int label) {
    std::vector<double> g(probs.size(), 0.0);
    g[static_cast<std::size_t>(label)] =
        -1.0 / clamp_prob(probs[static_cast<std::size_t>(label)]);
    return g;
}

double loss_from_prediction(const Prediction& pred, int label) {
    if (pred.head == Head::dense) return loss_bce(pred.prob1, label);
    return loss_ce(Tensor({2}, {pred.probs[0], pred.probs[1]}), label);
}

Parameters backward(const Parameters& params, const ModelConfig& config,
                    const ForwardTrace& trace, int label) {
    if (trace.mode != Mode::train) {
        throw std::invalid_argument("backward: trace must come from a train-mode forward");
    }
    if (trace.conv_pre[0].empty()) {
        throw std::invalid_argument("backward: trace has no recorded activations");
    }
    if (label != 0 && label != 1) {
        throw std::invalid_argument("backward: label must be 0 or 1");
    }

    Parameters grads = zeros_like(params);
    Tensor grad_spatial;  // gradient flowing into the fourth conv's post-ReLU output

    if (config.head == Head::gap) {
        // fused softmax+CE gradient: dL/dS = P - onehot
        Tensor dS({config.num_classes});
        dS[0] = trace.prediction.probs[0] - (label == 0 ? 1.0f : 0.0f);
        dS[1] = trace.prediction.probs[1] - (label == 1 ? 1.0f : 0.0f);
        DenseGrads hg = dense_backward(trace.head_dropped, params[8], dS);
        grads[8] = std::move(hg.weights);
        Tensor dF = dropout_backward(trace.dropout_mask, hg.input);
        const auto [h4, w4] = size_trace(config).conv_out[3];
        grad_spatial = gap_backward(dF, h4, w4);
    } else {
        // fused sigmoid+BCE gradient: dL/dz = p - y
        Tensor dz({1});
        dz[0] = trace.prediction.prob1 - static_cast<float>(label);
        DenseGrads g2 = dense_backward(trace.fc1_post, params[10], dz);
        grads[10] = std::move(g2.weights);
        grads[11] = std::move(g2.bias);
        Tensor dh = relu_backward(trace.fc1_pre, g2.input);
        DenseGrads g1 = dense_backward(trace.head_dropped, params[8], dh);
        grads[8] = std::move(g1.weights);
        grads[9] = std::move(g1.bias);
        Tensor dflat = dropout_backward(trace.dropout_mask, g1.input);
        Tensor dpool = std::move(dflat);
        dpool.reshape(trace.pool_out[3].shape());
        grad_spatial =
            maxpool2d_backward(trace.pool_argmax[3], dpool, trace.conv_post[3].shape());
    }

    for (int s = 3; s >= 0; --s) {
        const auto si = static_cast<std::size_t>(s);
        Tensor dpre = relu_backward(trace.conv_pre[si], grad_spatial);
        ConvGrads cg = conv2d_backward(trace.conv_in[si], params[2 * si], dpre);
        grads[2 * si] = std::move(cg.weights);
        grads[2 * si + 1] = std::move(cg.bias);
        if (s == 0) break;
        grad_spatial = maxpool2d_backward(trace.pool_argmax[si - 1], cg.input,
                                          trace.conv_post[si - 1].shape());
    }
    return grads;
}

namespace {

struct EvalPassStats {
    double loss = 0.0;
    double acc = 0.0;
};

EvalPassStats eval_pass(const Parameters& params, const ModelConfig& config,
                        const std::vector<Sample>& set) {
    EvalPassStats s;
    for (const Sample& sample : set) {
        const Prediction pred = forward(params, config, sample.image, Mode::eval);
        s.loss += loss_from_prediction(pred, sample.label);
        if (pred.predicted == sample.label) s.acc += 1.0;
    }
    s.loss /= static_cast<double>(set.size());
    s.acc /= static_cast<double>(set.size());
    return s;
}

}  // namespace

TrainResult train(const ModelConfig& config, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& options) {
    config.validate();
    if (train_set.empty()) throw std::invalid_argument("train: empty training set");
    if (options.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (options.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    for (const Sample& s : train_set) {
        if (s.label != 0 && s.label != 1) {
            throw std::invalid_argument("train: sample " + s.id + " has label " +
                                        std::to_string(s.label) + " (want 0 or 1)");
        }
    }

    TrainResult result;
    result.params = init_params(config, options.seed);
    AdamState adam = init_adam(result.params, options.learning_rate);

    const std::size_t n = train_set.size();
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const auto ei = static_cast<std::uint64_t>(epoch);
        const auto batches =
            epoch_batches(n, options.batch_size, derive_seed(options.seed, stream_tag(kShuffleStream, ei)));

        double loss_sum = 0.0;
        std::size_t correct = 0;
        int batch_index = 0;
        for (const auto& batch : batches) {
            Parameters grads = zeros_like(result.params);
            for (std::size_t idx : batch) {
                const Sample& sample = train_set[idx];
                Tensor image = sample.image;
                if (options.noise_sigma > 0.0f) {
                    image = add_gaussian_noise(
                        image, NoiseSpec{options.noise_sigma,
                                         derive_seed(options.seed, stream_tag(kNoiseStream, ei), idx)});
                }
                ForwardTrace trace;
                const Prediction pred =
                    forward(result.params, config, image, Mode::train,
                            derive_seed(options.seed, stream_tag(kDropoutStream, ei), idx), &trace);
                const double loss = loss_from_prediction(pred, sample.label);
                if (!std::isfinite(loss)) {
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch + 1) + " batch " +
                                             std::to_string(batch_index + 1) + " (sample " +
                                             sample.id + ")");
                }
                loss_sum += loss;
                if (pred.predicted == sample.label) ++correct;

                Parameters g = backward(result.params, config, trace, sample.label);
                for (std::size_t i = 0; i < grads.count(); ++i) {
                    for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] += g[i][j];
                }
            }
            const float inv = 1.0f / static_cast<float>(batch.size());
            for (std::size_t i = 0; i < grads.count(); ++i) {
                for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] *= inv;
            }
            adam_step(result.params, grads, adam);
            ++batch_index;
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(n);
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
        if (!val_set.empty()) {
            const EvalPassStats v = eval_pass(result.params, config, val_set);
            stats.val_loss = v.loss;
            stats.val_acc = v.acc;
        }
        result.history.push_back(stats);

        if (options.log_epochs) {
            std::cout << "epoch " << (epoch + 1) << "/" << options.epochs << " train_loss "
                      << stats.train_loss << " train_acc " << stats.train_acc;
            if (stats.val_loss) {
                std::cout << " val_loss " << *stats.val_loss << " val_acc " << *stats.val_acc;
            }
            std::cout << "\n";
        }
    }
    return result;
}

EvalResult evaluate(const Parameters& params, const ModelConfig& config,
                    const std::vector<Sample>& dataset) {
    EvalResult r;
    r.predictions.reserve(dataset.size());
    for (const Sample& sample : dataset) {
        const Prediction pred = forward(params, config, sample.image, Mode::eval);
        PredictionRecord rec;
        rec.id = sample.id;
        rec.label = sample.label;
        rec.predicted = pred.predicted;
        rec.score = config.head == Head::dense ? pred.prob1
                                               : pred.probs[static_cast<std::size_t>(pred.predicted)];
        r.predictions.push_back(std::move(rec));

        for (int cls = 0; cls < 2; ++cls) {
            ConfusionCounts& c = r.per_class[static_cast<std::size_t>(cls)];
            const bool actual = sample.label == cls;
            const bool said = pred.predicted == cls;
            if (actual && said) c.tp += 1;
            else if (!actual && said) c.fp += 1;
            else if (actual && !said) c.fn += 1;
            else c.tn += 1;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// checkpoint format: "GDCN" magic, version byte 1, config block (u32 fields
// in declaration order, head as u8, dropout as raw f32 bits), per-tensor
// records (u16 name length, name, u8 rank, u32 dims, f32 data) in canonical
// parameter order, "ENDGDCNN" sentinel. Everything little-endian.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'G', 'D', 'C', 'N'};
constexpr char kSentinel[8] = {'E', 'N', 'D', 'G', 'D', 'C', 'N', 'N'};
constexpr std::uint8_t kVersion = 1;

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u16(std::ostream& out, std::uint16_t v) {
    out.put(static_cast<char>(v & 0xff));
    out.put(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::ostream& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint8_t get_u8(std::istream& in, const std::string& what) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("checkpoint truncated while reading " + what);
    return static_cast<std::uint8_t>(c);
}

std::uint16_t get_u16(std::istream& in, const std::string& what) {
    const std::uint16_t lo = get_u8(in, what);
    const std::uint16_t hi = get_u8(in, what);
    return static_cast<std::uint16_t>(lo | (hi << 8));
}

std::uint32_t get_u32(std::istream& in, const std::string& what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(get_u8(in, what)) << (8 * i);
    return v;
}

float get_f32(std::istream& in, const std::string& what) {
    return std::bit_cast<float>(get_u32(in, what));
}

}  // namespace

void save_checkpoint(const Parameters& params, const ModelConfig& config,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path);

    out.write(kMagic, 4);
    put_u8(out, kVersion);

    put_u32(out, static_cast<std::uint32_t>(config.input_h));
    put_u32(out, static_cast<std::uint32_t>(config.input_w));
    put_u32(out, static_cast<std::uint32_t>(config.input_c));
    for (int f : config.conv_filters) put_u32(out, static_cast<std::uint32_t>(f));
    put_u8(out, static_cast<std::uint8_t>(config.head));
    put_u32(out, static_cast<std::uint32_t>(config.dense_hidden));
    put_f32(out, config.dropout_rate);
    put_u32(out, static_cast<std::uint32_t>(config.num_classes));

    for (const auto& item : params.items) {
        put_u16(out, static_cast<std::uint16_t>(item.name.size()));
        out.write(item.name.data(), static_cast<std::streamsize>(item.name.size()));
        put_u8(out, static_cast<std::uint8_t>(item.tensor.rank()));
        for (int d : item.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < item.tensor.size(); ++i) put_f32(out, item.tensor[i]);
    }
    out.write(kSentinel, 8);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path + " (not a GDCN file)");
    }
    const std::uint8_t version = get_u8(in, "version");
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }

    Checkpoint ck;
    ck.config.input_h = static_cast<int>(get_u32(in, "input_h"));
    ck.config.input_w = static_cast<int>(get_u32(in, "input_w"));
    ck.config.input_c = static_cast<int>(get_u32(in, "input_c"));
    for (auto& f : ck.config.conv_filters) f = static_cast<int>(get_u32(in, "conv_filters"));
    const std::uint8_t head = get_u8(in, "head");
    if (head > 1) throw std::runtime_error("checkpoint: bad head enum " + std::to_string(head));
    ck.config.head = static_cast<Head>(head);
    ck.config.dense_hidden = static_cast<int>(get_u32(in, "dense_hidden"));
    ck.config.dropout_rate = get_f32(in, "dropout_rate");
    ck.config.num_classes = static_cast<int>(get_u32(in, "num_classes"));
    ck.config.validate();

    // expected layout is fully determined by the config
    const Parameters expected = init_params(ck.config, 0);
    ck.params.items.reserve(expected.count());
    for (const auto& want : expected.items) {
        const std::uint16_t name_len = get_u16(in, "tensor name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != name_len) throw std::runtime_error("checkpoint truncated in tensor name");
        if (name != want.name) {
            throw std::runtime_error("checkpoint: tensor '" + name + "' where '" + want.name +
                                     "' was expected");
        }
        const std::uint8_t rank = get_u8(in, "tensor rank");
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(get_u32(in, "tensor dim"));
        if (dims != want.tensor.shape()) {
            throw std::runtime_error("checkpoint: tensor " + name + " shape " +
                                     shape_to_string(dims) + " disagrees with config (want " +
                                     want.tensor.shape_str() + ")");
        }
        Tensor t(dims);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_f32(in, "tensor data");
        ck.params.items.push_back({name, std::move(t)});
    }

    char tail[8];
    in.read(tail, 8);
    if (in.gcount() != 8 || std::memcmp(tail, kSentinel, 8) != 0) {
        throw std::runtime_error("checkpoint: missing end sentinel in " + path);
    }
    return ck;
}

}  // namespace gdcnn
