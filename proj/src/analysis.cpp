#include "gdcnn/analysis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gdcnn {

MetricsReport metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0) {
        throw std::invalid_argument("metrics: negative count");
    }
    if (c.total() == 0) {
        throw std::invalid_argument("metrics: all counts are zero");
    }
    MetricsReport r;
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0) {
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    }
    return r;
}

double f1_precision_over_sum(double precision, double recall) {
    return precision / (recall + precision);
}

const char* region_name(Region r) {
    switch (r) {
        case Region::phalanges: return "phalanges";
        case Region::metacarpals: return "metacarpals";
        case Region::carpals: return "carpals";
        case Region::radius: return "radius";
        case Region::ulna: return "ulna";
    }
    return "?";
}

void RegionBands::validate() const {
    if (!(0.0f < phalanges_end && phalanges_end < metacarpals_end &&
          metacarpals_end < carpals_end && carpals_end < 1.0f)) {
        throw std::invalid_argument("region bands must satisfy 0 < phalanges < metacarpals < carpals < 1");
    }
    if (!(tau > 0.0f && tau < 1.0f)) throw std::invalid_argument("tau must be in (0,1)");
    if (!(rho > 0.0f && rho < 1.0f)) throw std::invalid_argument("rho must be in (0,1)");
}

namespace {

// Region of a pixel by its center fraction.
Region pixel_region(int y, int x, int h, int w, const RegionBands& b) {
    const float fy = (static_cast<float>(y) + 0.5f) / static_cast<float>(h);
    if (fy < b.phalanges_end) return Region::phalanges;
    if (fy < b.metacarpals_end) return Region::metacarpals;
    if (fy < b.carpals_end) return Region::carpals;
    const float fx = (static_cast<float>(x) + 0.5f) / static_cast<float>(w);
    const bool left = fx < 0.5f;
    return (left != b.mirrored) ? Region::radius : Region::ulna;
}

}  // namespace

std::set<Region> attention_regions(const Heatmap& hm, const RegionBands& bands) {
    bands.validate();
    if (hm.width <= 0 || hm.height <= 0) {
        throw std::invalid_argument("attention_regions: empty heatmap");
    }
    std::array<long long, 5> area{};
    std::array<long long, 5> hit{};
    for (int y = 0; y < hm.height; ++y) {
        for (int x = 0; x < hm.width; ++x) {
            const auto r = static_cast<std::size_t>(pixel_region(y, x, hm.height, hm.width, bands));
            area[r] += 1;
            if (hm.at(y, x) >= bands.tau) hit[r] += 1;
        }
    }
    std::set<Region> attended;
    for (std::size_t i = 0; i < 5; ++i) {
        if (area[i] > 0 &&
            static_cast<double>(hit[i]) >= static_cast<double>(bands.rho) * static_cast<double>(area[i])) {
            attended.insert(static_cast<Region>(i));
        }
    }
    return attended;
}

AttentionHistogram aggregate_attention_sets(const std::vector<std::set<Region>>& attended) {
    if (attended.empty()) {
        throw std::invalid_argument("aggregate_attention: no heatmaps");
    }
    AttentionHistogram h;
    h.images = static_cast<int>(attended.size());
    const auto has = [](const std::set<Region>& s, Region r) { return s.count(r) > 0; };
    for (const auto& s : attended) {
        for (Region r : s) h.region_counts[static_cast<std::size_t>(r)] += 1;
        const bool c = has(s, Region::carpals), ra = has(s, Region::radius),
                   u = has(s, Region::ulna), m = has(s, Region::metacarpals),
                   p = has(s, Region::phalanges);
        if (c && ra) h.carpals_radius += 1;
        if (u && c && ra) h.ulna_carpals_radius += 1;
        if (u && c && ra && m) h.ulna_carpals_radius_metacarpals += 1;
        if (u && c && ra && m && p) h.all_regions += 1;
    }
    return h;
}

AttentionHistogram aggregate_attention(std::span<const Heatmap> heatmaps,
                                       const RegionBands& bands) {
    std::vector<std::set<Region>> sets;
    sets.reserve(heatmaps.size());
    for (const auto& hm : heatmaps) sets.push_back(attention_regions(hm, bands));
    return aggregate_attention_sets(sets);
}

std::string attention_report(const AttentionHistogram& h) {
    std::ostringstream os;
    os << "region,count\n";
    for (std::size_t i = 0; i < 5; ++i) {
        os << region_name(static_cast<Region>(i)) << "," << h.region_counts[i] << "\n";
    }
    os << "carpals+radius," << h.carpals_radius << "\n";
    os << "ulna+carpals+radius," << h.ulna_carpals_radius << "\n";
    os << "ulna+carpals+radius+metacarpals," << h.ulna_carpals_radius_metacarpals << "\n";
    os << "all," << h.all_regions << "\n";
    return os.str();
}

std::string round3(double v) {
    const long long scaled = std::llround(v * 1000.0);  // llround = half away from zero
    const bool neg = scaled < 0;
    const long long a = neg ? -scaled : scaled;
    std::ostringstream os;
    if (neg) os << "-";
    os << a / 1000 << ".";
    const long long frac = a % 1000;
    os << (frac / 100) << (frac / 10 % 10) << (frac % 10);
    return os.str();
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? round3(*v) : "undef"; }

}  // namespace

std::string report_table(const std::vector<std::pair<std::string, ConfusionCounts>>& rows) {
    if (rows.empty()) throw std::invalid_argument("report_table: no rows");
    std::ostringstream os;
    os << "class,tp,fp,fn,tn,accuracy,precision,recall,f1\n";
    for (const auto& [name, counts] : rows) {
        if (name.empty()) throw std::invalid_argument("report_table: empty class name");
        const MetricsReport m = metrics(counts);
        os << name << "," << counts.tp << "," << counts.fp << "," << counts.fn << "," << counts.tn
           << "," << cell(m.accuracy) << "," << cell(m.precision) << "," << cell(m.recall) << ","
           << cell(m.f1) << "\n";
    }
    return os.str();
}

}  // namespace gdcnn
