#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "gdcnn/analysis.hpp"
#include "gdcnn/data.hpp"
#include "gdcnn/model.hpp"

namespace gdcnn {

/// Input/configuration problems that map to the CLI usage exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every tunable of the pipeline, populated from defaults, then an optional
/// flat `key = value` config file, then command-line flags.
struct RunConfig {
    // model
    std::string head = "gap";  // gap | dense
    std::array<int, 4> conv_filters{32, 64, 128, 128};
    int dense_hidden = 512;
    float dropout_rate = 0.8f;

    // training
    float lr = 1e-3f;
    int batch_size = 50;
    int epochs = 40;
    float noise_sigma = 0.05f;
    std::array<double, 3> split_fractions{0.7, 0.15, 0.15};

    // attention analysis
    float tau = 0.5f;
    float rho = 0.02f;
    std::array<float, 3> bands{0.45f, 0.65f, 0.82f};
    bool mirror_hand = false;
    std::string upsample = "bilinear";  // bilinear | nearest

    // run plumbing
    std::uint64_t seed = 1;
    std::string manifest;
    std::string out = "out";
    std::string checkpoint;
    std::string cam_class = "auto";  // auto | 0 | 1

    /// Parses a flat key=value file ('#' comments, blank lines allowed).
    /// Unknown keys and unparsable values raise UsageError with the line.
    void apply_file(const std::string& path);

    /// One key=value assignment; shared by the file parser.
    void apply_kv(const std::string& key, const std::string& value);

    ModelConfig model_config() const;
    SplitFractions fractions() const;
    RegionBands region_bands() const;

    void validate() const;
};

}  // namespace gdcnn
