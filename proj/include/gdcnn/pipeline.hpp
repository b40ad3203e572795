#pragma once

#include <set>
#include <string>
#include <vector>

#include "gdcnn/analysis.hpp"
#include "gdcnn/config.hpp"
#include "gdcnn/data.hpp"
#include "gdcnn/model.hpp"

namespace gdcnn {

// High-level pipeline entry points shared by the CLI and the Python
// bindings. Inputs are checked upfront; UsageError means the caller
// passed something unusable, everything else is a runtime failure.

/// Generates cfg.synth-style data: n per class into cfg.out.
SynthResult run_synth(int n_per_class, std::uint64_t seed, const std::string& out_dir);

struct TrainOutputs {
    std::string checkpoint_path;
    std::string history_path;
    std::string train_manifest;
    std::string val_manifest;
    std::string test_manifest;
    TrainResult result;
};

/// Loads cfg.manifest, splits it, trains, and writes the checkpoint,
/// history.csv and the three split manifests under cfg.out.
TrainOutputs run_train(const RunConfig& cfg);

struct EvalOutputs {
    std::array<ConfusionCounts, 2> counts;  // Male (class 0), Female (class 1)
    std::string report;                     // rendered table
    std::string report_path;
    std::size_t dataset_size = 0;
};

/// Evaluates cfg.checkpoint on cfg.manifest; writes metrics.csv to cfg.out.
EvalOutputs run_eval(const RunConfig& cfg);

struct CamImageLog {
    std::string id;
    int predicted = 0;
    int rendered_class = 0;
    double score = 0.0;    // class score via the pooled route
    double map_sum = 0.0;  // spatial sum of the activation map
    bool identity_ok = false;
};

struct CamOutputs {
    std::vector<std::string> files;
    std::vector<CamImageLog> log;
    bool all_identities_ok = true;
};

/// Renders `<id>_cam.pgm` and `<id>_overlay.pgm` per image into cfg.out,
/// verifying the score/map-sum identity for every map. Gap head only.
CamOutputs run_cam(const RunConfig& cfg);

struct AttentionOutputs {
    AttentionHistogram histogram;
    std::vector<std::set<Region>> attended;  // per image, manifest order
    std::string report_path;
};

/// Aggregates per-image attended regions over cfg.manifest and writes
/// attention.csv to cfg.out. Gap head only; the manifest must be non-empty.
AttentionOutputs run_attention(const RunConfig& cfg);

}  // namespace gdcnn
