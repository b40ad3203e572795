#pragma once

#include <array>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gdcnn/cam.hpp"

namespace gdcnn {

/// Per-class prediction tallies; one instance per class treated as positive.
struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    long long total() const { return tp + fp + fn + tn; }
};

/// Fractions in [0,1]; a field is empty when its denominator was zero
/// (reported as "undef", never silently coerced to 0 or 1).
struct MetricsReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

/// accuracy, precision, recall and harmonic F1 from one counts row.
/// Throws on an all-zero row.
MetricsReport metrics(const ConfusionCounts& counts);

/// The P/(R+P) variant some writeups print for F1. Kept only so its
/// disagreement with the harmonic form can be demonstrated; reports
/// never use it.
double f1_precision_over_sum(double precision, double recall);

enum class Region { phalanges, metacarpals, carpals, radius, ulna };

const char* region_name(Region r);

/// Fractional vertical bands over the input image. The forearm band is
/// split at x=0.5 into radius (left) and ulna (right); `mirrored` swaps
/// the two for flipped hands.
struct RegionBands {
    float phalanges_end = 0.45f;
    float metacarpals_end = 0.65f;
    float carpals_end = 0.82f;
    float tau = 0.5f;   // attention threshold on normalized heatmap values
    float rho = 0.02f;  // minimum attended fraction of a region's area
    bool mirrored = false;

    void validate() const;
};

/// Binarizes the heatmap at tau and returns every region whose overlap
/// with the attended pixels reaches rho of the region's area.
std::set<Region> attention_regions(const Heatmap& heatmap, const RegionBands& bands);

/// Counts over a test set: per region, plus the fixed combination groups
/// (an image counts toward a combination when it attends every member).
struct AttentionHistogram {
    int images = 0;
    std::array<int, 5> region_counts{};  // indexed by Region
    int carpals_radius = 0;
    int ulna_carpals_radius = 0;
    int ulna_carpals_radius_metacarpals = 0;
    int all_regions = 0;
};

AttentionHistogram aggregate_attention(std::span<const Heatmap> heatmaps,
                                       const RegionBands& bands);

AttentionHistogram aggregate_attention_sets(const std::vector<std::set<Region>>& attended);

/// `region,count` rows in fixed order: the five regions then the groups.
std::string attention_report(const AttentionHistogram& hist);

/// Comma-separated table `class,tp,fp,fn,tn,accuracy,precision,recall,f1`
/// with 3-decimal half-away-from-zero rounding; undefined cells print
/// "undef". Row order follows the input.
std::string report_table(const std::vector<std::pair<std::string, ConfusionCounts>>& rows);

/// Half-away-from-zero rounding to 3 decimals, as fixed-point text.
std::string round3(double v);

}  // namespace gdcnn
