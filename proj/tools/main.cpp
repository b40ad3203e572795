// gdcnn command line: synthesize data, train, evaluate, render activation
// maps, and aggregate attention regions. Every command is deterministic
// under a fixed seed and config.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <CLI11.hpp>
#include <iostream>

#include "gdcnn/pipeline.hpp"

using namespace gdcnn;

namespace {

struct FlagSet {
    CLI::App* cmd = nullptr;
    std::string config_path;
    // raw values; validation happens in RunConfig::apply_kv
    std::string seed, out, manifest, checkpoint;
    std::string head, filters, dense_hidden, dropout, lr, batch_size, epochs, noise_sigma, split;
    std::string tau, rho, bands, upsample, cam_class;
    bool mirror = false;
};

void add_common(FlagSet& f) {
    f.cmd->add_option("--config", f.config_path, "flat key = value config file");
    f.cmd->add_option("--seed", f.seed, "RNG seed (u64)");
    f.cmd->add_option("--out", f.out, "output directory");
}

void add_model_flags(FlagSet& f) {
    f.cmd->add_option("--head", f.head, "classifier head: gap or dense");
    f.cmd->add_option("--filters", f.filters, "conv filter counts, e.g. 32,64,128,128");
    f.cmd->add_option("--dense-hidden", f.dense_hidden, "dense head hidden width");
    f.cmd->add_option("--dropout", f.dropout, "dropout rate in [0,1)");
}

// defaults -> config file -> explicit flags
RunConfig build_config(const FlagSet& f) {
    RunConfig cfg;
    if (!f.config_path.empty()) cfg.apply_file(f.config_path);
    const auto maybe = [&](const char* flag, const char* key, const std::string& value) {
        if (f.cmd->count(flag) > 0) cfg.apply_kv(key, value);
    };
    maybe("--seed", "seed", f.seed);
    maybe("--out", "out", f.out);
    if (f.cmd->get_option_no_throw("--manifest")) maybe("--manifest", "manifest", f.manifest);
    if (f.cmd->get_option_no_throw("--checkpoint")) maybe("--checkpoint", "checkpoint", f.checkpoint);
    if (f.cmd->get_option_no_throw("--head")) {
        maybe("--head", "head", f.head);
        maybe("--filters", "conv_filters", f.filters);
        maybe("--dense-hidden", "dense_hidden", f.dense_hidden);
        maybe("--dropout", "dropout_rate", f.dropout);
    }
    if (f.cmd->get_option_no_throw("--lr")) {
        maybe("--lr", "lr", f.lr);
        maybe("--batch-size", "batch_size", f.batch_size);
        maybe("--epochs", "epochs", f.epochs);
        maybe("--noise-sigma", "noise_sigma", f.noise_sigma);
        maybe("--split", "split", f.split);
    }
    if (f.cmd->get_option_no_throw("--tau")) {
        maybe("--tau", "tau", f.tau);
        maybe("--rho", "rho", f.rho);
        maybe("--bands", "bands", f.bands);
        if (f.cmd->count("--mirror") > 0) cfg.apply_kv("mirror_hand", "true");
    }
    if (f.cmd->get_option_no_throw("--upsample")) maybe("--upsample", "upsample", f.upsample);
    if (f.cmd->get_option_no_throw("--class")) maybe("--class", "cam_class", f.cam_class);
    return cfg;
}

int cmd_synth(const FlagSet& f, int n) {
    const RunConfig cfg = build_config(f);
    const SynthResult r = run_synth(n, cfg.seed, cfg.out);
    std::cout << "wrote " << 2 * r.per_class << " images (" << r.per_class << " male / "
              << r.per_class << " female)\n";
    std::cout << "manifest: " << r.manifest_path << "\n";
    return 0;
}

int cmd_train(const FlagSet& f) {
    const RunConfig cfg = build_config(f);
    const TrainOutputs r = run_train(cfg);
    std::cout << "checkpoint: " << r.checkpoint_path << "\n";
    std::cout << "history: " << r.history_path << "\n";
    std::cout << "splits: " << r.train_manifest << " " << r.val_manifest << " "
              << r.test_manifest << "\n";
    return 0;
}

int cmd_eval(const FlagSet& f) {
    const RunConfig cfg = build_config(f);
    const EvalOutputs r = run_eval(cfg);
    std::cout << r.report;
    std::cout << "report: " << r.report_path << "\n";
    return 0;
}

int cmd_cam(const FlagSet& f) {
    const RunConfig cfg = build_config(f);
    const CamOutputs r = run_cam(cfg);
    for (const auto& log : r.log) {
        std::cout << log.id << " predicted=" << log.predicted << " class=" << log.rendered_class
                  << " score=" << log.score << " map_sum=" << log.map_sum << " identity="
                  << (log.identity_ok ? "ok" : "FAIL") << "\n";
    }
    std::cout << "wrote " << r.files.size() << " files\n";
    if (!r.all_identities_ok) {
        std::cerr << "error: activation-map identity failed on at least one image\n";
        return 1;
    }
    return 0;
}

int cmd_attention(const FlagSet& f) {
    const RunConfig cfg = build_config(f);
    const AttentionOutputs r = run_attention(cfg);
    std::cout << attention_report(r.histogram);
    std::cout << "report: " << r.report_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-class hand-radiograph CNN: training, evaluation and attention maps"};
    app.require_subcommand(1);

    FlagSet synth_flags, train_flags, eval_flags, cam_flags, att_flags;
    int synth_n = 0;

    synth_flags.cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_flags.cmd->add_option("--n", synth_n, "images per class")->required();
    add_common(synth_flags);

    train_flags.cmd = app.add_subcommand("train", "train a model from a manifest");
    add_common(train_flags);
    train_flags.cmd->add_option("--manifest", train_flags.manifest, "dataset manifest csv");
    add_model_flags(train_flags);
    train_flags.cmd->add_option("--lr", train_flags.lr, "Adam learning rate");
    train_flags.cmd->add_option("--batch-size", train_flags.batch_size, "mini-batch size");
    train_flags.cmd->add_option("--epochs", train_flags.epochs, "training epochs");
    train_flags.cmd->add_option("--noise-sigma", train_flags.noise_sigma,
                                "train-time Gaussian noise sigma (0 disables)");
    train_flags.cmd->add_option("--split", train_flags.split, "train,val,test fractions");

    eval_flags.cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    add_common(eval_flags);
    eval_flags.cmd->add_option("--checkpoint", eval_flags.checkpoint, "model checkpoint");
    eval_flags.cmd->add_option("--manifest", eval_flags.manifest, "dataset manifest csv");

    cam_flags.cmd = app.add_subcommand("cam", "render activation-map overlays per image");
    add_common(cam_flags);
    cam_flags.cmd->add_option("--checkpoint", cam_flags.checkpoint, "gap-head checkpoint");
    cam_flags.cmd->add_option("--manifest", cam_flags.manifest, "dataset manifest csv");
    cam_flags.cmd->add_option("--class", cam_flags.cam_class, "map class: auto, 0 or 1");
    cam_flags.cmd->add_option("--upsample", cam_flags.upsample, "bilinear or nearest");

    att_flags.cmd = app.add_subcommand("attention", "aggregate attended regions over a test set");
    add_common(att_flags);
    att_flags.cmd->add_option("--checkpoint", att_flags.checkpoint, "gap-head checkpoint");
    att_flags.cmd->add_option("--manifest", att_flags.manifest, "dataset manifest csv");
    att_flags.cmd->add_option("--tau", att_flags.tau, "attention threshold in (0,1)");
    att_flags.cmd->add_option("--rho", att_flags.rho, "minimum region overlap fraction");
    att_flags.cmd->add_option("--bands", att_flags.bands, "band boundaries, e.g. 0.45,0.65,0.82");
    att_flags.cmd->add_flag("--mirror", att_flags.mirror, "swap radius and ulna");
    att_flags.cmd->add_option("--upsample", att_flags.upsample, "bilinear or nearest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth_flags.cmd->parsed()) return cmd_synth(synth_flags, synth_n);
        if (train_flags.cmd->parsed()) return cmd_train(train_flags);
        if (eval_flags.cmd->parsed()) return cmd_eval(eval_flags);
        if (cam_flags.cmd->parsed()) return cmd_cam(cam_flags);
        if (att_flags.cmd->parsed()) return cmd_attention(att_flags);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
