#include "gdcnn/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <span>

#include "gdcnn/cam.hpp"

namespace fs = std::filesystem;

namespace gdcnn {

namespace {

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw UsageError(what + " path is required");
    if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
}

std::string ensure_out_dir(const std::string& out) {
    if (out.empty()) throw UsageError("output directory is required");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + out);
    return out;
}

DatasetManifest load_manifest_checked(const std::string& path) {
    require_file(path, "manifest");
    return load_manifest(path);
}

Checkpoint load_checkpoint_checked(const std::string& path) {
    require_file(path, "checkpoint");
    return load_checkpoint(path);
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const bool with_val = !history.empty() && history.front().val_loss.has_value();
    out << (with_val ? "epoch,train_loss,train_acc,val_loss,val_acc\n"
                     : "epoch,train_loss,train_acc\n");
    for (std::size_t e = 0; e < history.size(); ++e) {
        out << (e + 1) << "," << round3(history[e].train_loss) << ","
            << round3(history[e].train_acc);
        if (with_val) {
            out << "," << round3(*history[e].val_loss) << "," << round3(*history[e].val_acc);
        }
        out << "\n";
    }
}

struct CamImage {
    std::string id;
    Tensor image;
    int label = 0;
    int rendered_class = 0;
    Prediction pred;
    Heatmap heatmap;
    CamImageLog log;
};

// forward + CAM for one sample against a gap-head checkpoint
CamImage cam_for_sample(const Checkpoint& ck, const Sample& sample, const RunConfig& cfg) {
    CamImage out;
    out.id = sample.id;
    out.image = sample.image;
    out.label = sample.label;

    ForwardTrace trace;
    out.pred = forward(ck.params, ck.config, sample.image, Mode::eval, 0, &trace);

    int cls = out.pred.predicted;
    if (cfg.cam_class == "0") cls = 0;
    else if (cfg.cam_class == "1") cls = 1;
    out.rendered_class = cls;

    const Tensor& head = ck.params[8];  // [num_classes, K]
    const std::span<const float> weights(head.data() + static_cast<std::size_t>(cls) * head.dim(1),
                                         static_cast<std::size_t>(head.dim(1)));

    const Tensor& fmaps = trace.conv_post[3];
    const auto [score, map_sum] = cam_score_identity(fmaps, weights);
    out.log = {sample.id, out.pred.predicted, cls, score, map_sum,
               cam_identity_ok(score, map_sum)};

    const Tensor raw = compute_cam(fmaps, weights);
    const Tensor up = cfg.upsample == "nearest"
                          ? upsample_nearest(raw, ck.config.input_h, ck.config.input_w)
                          : upsample_bilinear(raw, ck.config.input_h, ck.config.input_w);
    out.heatmap = normalize_heatmap(up);
    return out;
}

void require_gap_head(const Checkpoint& ck) {
    if (ck.config.head != Head::gap) {
        throw UsageError("CAM requires a gap-head checkpoint (this one uses the dense head)");
    }
}

}  // namespace

SynthResult run_synth(int n_per_class, std::uint64_t seed, const std::string& out_dir) {
    if (n_per_class < 1) throw UsageError("synth: --n must be >= 1");
    if (out_dir.empty()) throw UsageError("synth: output directory is required");
    return generate_synthetic_dataset(n_per_class, seed, out_dir);
}

TrainOutputs run_train(const RunConfig& cfg) {
    cfg.validate();
    const DatasetManifest manifest = load_manifest_checked(cfg.manifest);
    if (manifest.size() == 0) throw UsageError("train: manifest " + cfg.manifest + " is empty");
    const std::string out = ensure_out_dir(cfg.out);

    const SplitResult parts = split(manifest, cfg.fractions(), cfg.seed);
    if (parts.train.size() == 0) {
        throw UsageError("train: the training split is empty (check the split fractions)");
    }

    TrainOutputs outputs;
    outputs.train_manifest = (fs::path(out) / "train.csv").string();
    outputs.val_manifest = (fs::path(out) / "val.csv").string();
    outputs.test_manifest = (fs::path(out) / "test.csv").string();
    save_manifest(parts.train, outputs.train_manifest);
    save_manifest(parts.val, outputs.val_manifest);
    save_manifest(parts.test, outputs.test_manifest);

    const std::vector<Sample> train_set = load_dataset(parts.train);
    const std::vector<Sample> val_set = load_dataset(parts.val);

    TrainOptions opt;
    opt.batch_size = cfg.batch_size;
    opt.epochs = cfg.epochs;
    opt.learning_rate = cfg.lr;
    opt.seed = cfg.seed;
    opt.noise_sigma = cfg.noise_sigma;
    opt.log_epochs = true;

    outputs.result = train(cfg.model_config(), train_set, val_set, opt);

    outputs.checkpoint_path = (fs::path(out) / "model.gdcnn").string();
    save_checkpoint(outputs.result.params, cfg.model_config(), outputs.checkpoint_path);
    outputs.history_path = (fs::path(out) / "history.csv").string();
    write_history_csv(outputs.result.history, outputs.history_path);
    return outputs;
}

EvalOutputs run_eval(const RunConfig& cfg) {
    const Checkpoint ck = load_checkpoint_checked(cfg.checkpoint);
    const DatasetManifest manifest = load_manifest_checked(cfg.manifest);
    const std::vector<Sample> dataset = load_dataset(manifest);
    if (dataset.empty()) throw UsageError("eval: manifest " + cfg.manifest + " is empty");

    const EvalResult r = evaluate(ck.params, ck.config, dataset);

    EvalOutputs out;
    out.counts = r.per_class;
    out.dataset_size = dataset.size();
    out.report = report_table({{"Male", r.per_class[0]}, {"Female", r.per_class[1]}});
    const std::string dir = ensure_out_dir(cfg.out);
    out.report_path = (fs::path(dir) / "metrics.csv").string();
    std::ofstream f(out.report_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out.report_path);
    f << out.report;
    return out;
}

CamOutputs run_cam(const RunConfig& cfg) {
    const Checkpoint ck = load_checkpoint_checked(cfg.checkpoint);
    require_gap_head(ck);
    const DatasetManifest manifest = load_manifest_checked(cfg.manifest);
    const std::string out = ensure_out_dir(cfg.out);

    CamOutputs outputs;
    for (const auto& row : manifest.rows) {
        Sample sample;
        sample.id = row.id;
        sample.label = row.label;
        sample.image = resize_to_input(load_image(manifest.resolve(row)));

        CamImage ci = cam_for_sample(ck, sample, cfg);
        const std::string cam_path = (fs::path(out) / (row.id + "_cam.pgm")).string();
        const std::string overlay_path = (fs::path(out) / (row.id + "_overlay.pgm")).string();
        render_overlay(ci.image, ci.heatmap, cam_path, overlay_path);
        outputs.files.push_back(cam_path);
        outputs.files.push_back(overlay_path);
        outputs.all_identities_ok = outputs.all_identities_ok && ci.log.identity_ok;
        outputs.log.push_back(std::move(ci.log));
    }
    return outputs;
}

AttentionOutputs run_attention(const RunConfig& cfg) {
    const Checkpoint ck = load_checkpoint_checked(cfg.checkpoint);
    require_gap_head(ck);
    const DatasetManifest manifest = load_manifest_checked(cfg.manifest);
    if (manifest.size() == 0) {
        throw UsageError("attention: manifest " + cfg.manifest + " is empty");
    }
    const RegionBands bands = cfg.region_bands();

    AttentionOutputs outputs;
    for (const auto& row : manifest.rows) {
        Sample sample;
        sample.id = row.id;
        sample.label = row.label;
        sample.image = resize_to_input(load_image(manifest.resolve(row)));
        const CamImage ci = cam_for_sample(ck, sample, cfg);
        if (!ci.log.identity_ok) {
            throw std::runtime_error("attention: activation-map identity failed for " + row.id);
        }
        outputs.attended.push_back(attention_regions(ci.heatmap, bands));
    }
    outputs.histogram = aggregate_attention_sets(outputs.attended);

    const std::string dir = ensure_out_dir(cfg.out);
    outputs.report_path = (fs::path(dir) / "attention.csv").string();
    std::ofstream f(outputs.report_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + outputs.report_path);
    f << attention_report(outputs.histogram);
    return outputs;
}

}  // namespace gdcnn
