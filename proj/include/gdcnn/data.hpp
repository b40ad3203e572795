#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdcnn/tensor.hpp"

namespace gdcnn {

inline constexpr int kInputSize = 137;

struct ManifestRow {
    std::string id;
    std::string path;   // as written in the file; resolved against base_dir
    int label = 0;      // 0 = male, 1 = female
};

/// Parsed `id,path,label` manifest. Relative image paths resolve against
/// the directory the manifest was loaded from.
struct DatasetManifest {
    std::vector<ManifestRow> rows;
    std::string base_dir;

    std::size_t size() const { return rows.size(); }
    std::string resolve(const ManifestRow& row) const;
};

struct Sample {
    std::string id;
    Tensor image;  // [1,137,137], values in [0,1]
    int label = 0;
};

struct NoiseSpec {
    float sigma = 0.05f;  // on the [0,1] pixel scale
    std::uint64_t seed = 0;
};

/// Reads and validates a manifest; duplicate ids, bad labels and malformed
/// rows are rejected with the offending line number or id.
DatasetManifest load_manifest(const std::string& path);

void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// P5 graymap -> [H,W] grid in [0,1].
Tensor load_image(const std::string& path);

/// Bilinear resampling to the model input size; a 137x137 grid passes
/// through untouched. Returns [1,137,137].
Tensor resize_to_input(const Tensor& grid);

/// out = clamp(in + N(0, sigma^2), 0, 1), elementwise, seed-deterministic.
/// sigma 0 is a bit-exact identity.
Tensor add_gaussian_noise(const Tensor& image, const NoiseSpec& spec);

struct SplitFractions {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;
};

struct SplitResult {
    DatasetManifest train;
    DatasetManifest val;
    DatasetManifest test;
};

/// Per-class stratified shuffle split. Deterministic under seed; the three
/// parts are disjoint and cover the input exactly.
SplitResult split(const DatasetManifest& manifest, const SplitFractions& fractions,
                  std::uint64_t seed);

/// Shuffled index batches for one epoch; the final short batch is kept.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, int batch_size,
                                                    std::uint64_t seed);

/// Loads every manifest row into memory (resizing to the input shape).
std::vector<Sample> load_dataset(const DatasetManifest& manifest);

struct SynthResult {
    std::string manifest_path;
    int per_class = 0;
};

/// Writes 2*n_per_class stylized hand graymaps plus a manifest into
/// out_dir. Class 0 carries a thick fused wrist blob, class 1 thin blobs
/// with gaps, so the classes are separable by bottom-band mass alone.
SynthResult generate_synthetic_dataset(int n_per_class, std::uint64_t seed,
                                       const std::string& out_dir);

}  // namespace gdcnn
