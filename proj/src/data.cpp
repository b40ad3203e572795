#include "gdcnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "gdcnn/cam.hpp"
#include "gdcnn/pgm.hpp"
#include "gdcnn/rng.hpp"

namespace fs = std::filesystem;

namespace gdcnn {

std::string DatasetManifest::resolve(const ManifestRow& row) const {
    fs::path p(row.path);
    if (p.is_absolute() || base_dir.empty()) return row.path;
    return (fs::path(base_dir) / p).string();
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);

    DatasetManifest m;
    m.base_dir = fs::path(path).parent_path().string();

    std::string line;
    int line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "id,path,label") {
                throw std::runtime_error("manifest: bad header at line 1 of " + path +
                                         " (want 'id,path,label')");
            }
            continue;
        }
        if (line.empty()) continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 3) {
            throw std::runtime_error("manifest: line " + std::to_string(line_no) + " has " +
                                     std::to_string(fields.size()) + " fields (want 3)");
        }
        ManifestRow row;
        row.id = fields[0];
        row.path = fields[1];
        if (row.id.empty()) {
            throw std::runtime_error("manifest: empty id at line " + std::to_string(line_no));
        }
        if (row.path.empty()) {
            throw std::runtime_error("manifest: empty path at line " + std::to_string(line_no));
        }
        if (fields[2] == "0") row.label = 0;
        else if (fields[2] == "1") row.label = 1;
        else {
            throw std::runtime_error("manifest: bad label '" + fields[2] + "' at line " +
                                     std::to_string(line_no) + " (want 0 or 1)");
        }
        if (!seen.insert(row.id).second) {
            throw std::runtime_error("manifest: duplicate id '" + row.id + "' at line " +
                                     std::to_string(line_no));
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("manifest: cannot write " + path);
    out << "id,path,label\n";
    for (const auto& row : manifest.rows) {
        out << row.id << "," << row.path << "," << row.label << "\n";
    }
    if (!out) throw std::runtime_error("manifest: write failed for " + path);
}

Tensor load_image(const std::string& path) { return read_pgm(path); }

Tensor resize_to_input(const Tensor& grid) {
    if (grid.rank() != 2) {
        throw std::invalid_argument("resize_to_input: want a rank-2 grid, got " + grid.shape_str());
    }
    Tensor out;
    if (grid.dim(0) == kInputSize && grid.dim(1) == kInputSize) {
        out = grid;
    } else {
        out = upsample_bilinear(grid, kInputSize, kInputSize);
    }
    out.reshape({1, kInputSize, kInputSize});
    return out;
}

Tensor add_gaussian_noise(const Tensor& image, const NoiseSpec& spec) {
    if (spec.sigma < 0.0f) throw std::invalid_argument("noise: sigma must be >= 0");
    if (spec.sigma == 0.0f) return image;
    Tensor out(image.shape());
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = image[i] + static_cast<float>(spec.sigma * rng.normal());
        out[i] = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    }
    return out;
}

SplitResult split(const DatasetManifest& manifest, const SplitFractions& fractions,
                  std::uint64_t seed) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("split: fractions sum to " + std::to_string(sum) +
                                    " (want 1)");
    }
    if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0) {
        throw std::invalid_argument("split: fractions must be non-negative");
    }

    // assignment per row: 0 train, 1 val, 2 test
    std::vector<int> part(manifest.rows.size(), 0);
    for (int label = 0; label < 2; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
            if (manifest.rows[i].label == label) idx.push_back(i);
        }
        Rng rng(derive_seed(seed, 0x5317, static_cast<std::uint64_t>(label)));
        rng.shuffle(idx);

        const double n = static_cast<double>(idx.size());
        const std::array<double, 3> want{fractions.train * n, fractions.val * n,
                                         fractions.test * n};
        std::array<std::size_t, 3> take{static_cast<std::size_t>(want[0]),
                                        static_cast<std::size_t>(want[1]),
                                        static_cast<std::size_t>(want[2])};
        std::size_t assigned = take[0] + take[1] + take[2];
        // hand out the rounding leftovers by largest fractional part,
        // ties resolved in train/val/test order
        while (assigned < idx.size()) {
            int best = 0;
            double best_frac = -1.0;
            for (int k = 0; k < 3; ++k) {
                const double frac = want[static_cast<std::size_t>(k)] -
                                    static_cast<double>(take[static_cast<std::size_t>(k)]);
                if (frac > best_frac + 1e-12) {
                    best_frac = frac;
                    best = k;
                }
            }
            take[static_cast<std::size_t>(best)] += 1;
            ++assigned;
        }

        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            for (std::size_t j = 0; j < take[static_cast<std::size_t>(k)]; ++j, ++pos) {
                part[idx[pos]] = k;
            }
        }
    }

    SplitResult r;
    r.train.base_dir = r.val.base_dir = r.test.base_dir = manifest.base_dir;
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
        if (part[i] == 0) r.train.rows.push_back(manifest.rows[i]);
        else if (part[i] == 1) r.val.rows.push_back(manifest.rows[i]);
        else r.test.rows.push_back(manifest.rows[i]);
    }
    return r;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, int batch_size,
                                                    std::uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(count, start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<Sample> load_dataset(const DatasetManifest& manifest) {
    std::vector<Sample> out;
    out.reserve(manifest.rows.size());
    for (const auto& row : manifest.rows) {
        Sample s;
        s.id = row.id;
        s.label = row.label;
        s.image = resize_to_input(load_image(manifest.resolve(row)));
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic generator: a stylized left-hand silhouette on a dark field.
// Everything above the wrist is drawn from class-independent distributions;
// only the carpal block differs (class 0: one thick fused blob, class 1:
// small blobs with gaps), so the class signal lives in the bottom band.
// ---------------------------------------------------------------------------

namespace {

struct Canvas {
    int size;
    std::vector<float> px;

    explicit Canvas(int s) : size(s), px(static_cast<std::size_t>(s) * s, 0.0f) {}

    float& at(int y, int x) { return px[static_cast<std::size_t>(y) * size + x]; }
};

// Soft-edged capsule between two points (fractional coords), max-blended.
void draw_capsule(Canvas& c, double x0, double y0, double x1, double y1, double half_width,
                  double amp) {
    const double s = c.size;
    const double ax = x0 * s, ay = y0 * s, bx = x1 * s, by = y1 * s;
    const double hw = half_width * s;
    const double soft = 1.2;  // edge falloff in pixels

    const int ymin = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - hw - soft)));
    const int ymax = std::min(c.size - 1, static_cast<int>(std::ceil(std::max(ay, by) + hw + soft)));
    const int xmin = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - hw - soft)));
    const int xmax = std::min(c.size - 1, static_cast<int>(std::ceil(std::max(ax, bx) + hw + soft)));

    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    for (int y = ymin; y <= ymax; ++y) {
        for (int x = xmin; x <= xmax; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double cx = ax + t * dx, cy = ay + t * dy;
            const double d = std::hypot(px - cx, py - cy);
            const double cover = std::clamp((hw - d) / soft + 1.0, 0.0, 1.0);
            if (cover > 0) {
                const float v = static_cast<float>(amp * cover);
                c.at(y, x) = std::max(c.at(y, x), v);
            }
        }
    }
}

// Soft-edged axis-aligned ellipse, max-blended.
void draw_ellipse(Canvas& c, double cx, double cy, double rx, double ry, double amp) {
    const double s = c.size;
    const double ex = cx * s, ey = cy * s, erx = rx * s, ery = ry * s;
    const double soft = 1.2;

    const int ymin = std::max(0, static_cast<int>(std::floor(ey - ery - soft)));
    const int ymax = std::min(c.size - 1, static_cast<int>(std::ceil(ey + ery + soft)));
    const int xmin = std::max(0, static_cast<int>(std::floor(ex - erx - soft)));
    const int xmax = std::min(c.size - 1, static_cast<int>(std::ceil(ex + erx + soft)));

    for (int y = ymin; y <= ymax; ++y) {
        for (int x = xmin; x <= xmax; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double q = std::hypot((px - ex) / erx, (py - ey) / ery);
            // distance to the boundary, roughly in pixels
            const double d = (q - 1.0) * std::min(erx, ery);
            const double cover = std::clamp(-d / soft + 1.0, 0.0, 1.0);
            if (cover > 0) {
                const float v = static_cast<float>(amp * cover);
                c.at(y, x) = std::max(c.at(y, x), v);
            }
        }
    }
}

Tensor render_hand(int label, Rng& rng) {
    Canvas c(kInputSize);

    const auto jit = [&](double scale) { return rng.uniform(-scale, scale); };

    // fingers (phalanges band), varying lengths
    const double finger_x[4] = {0.26, 0.40, 0.54, 0.68};
    const double finger_top[4] = {0.10, 0.05, 0.07, 0.14};
    for (int i = 0; i < 4; ++i) {
        const double x = finger_x[i] + jit(0.012);
        draw_capsule(c, x, finger_top[i] + jit(0.02), x + jit(0.008), 0.42 + jit(0.01),
                     0.020 + jit(0.003), 0.55 + jit(0.05));
    }
    // thumb
    draw_capsule(c, 0.84 + jit(0.01), 0.28 + jit(0.02), 0.74 + jit(0.01), 0.45 + jit(0.01),
                 0.022 + jit(0.003), 0.50 + jit(0.05));

    // metacarpals: rods converging toward the wrist
    for (int i = 0; i < 4; ++i) {
        const double x = finger_x[i] + jit(0.01);
        const double xw = 0.47 + 0.5 * (x - 0.47);
        draw_capsule(c, x, 0.455 + jit(0.004), xw, 0.635 + jit(0.004), 0.017 + jit(0.002),
                     0.50 + jit(0.05));
    }
    draw_capsule(c, 0.72 + jit(0.01), 0.47, 0.60 + jit(0.01), 0.62, 0.016, 0.45 + jit(0.04));

    // forearm: radius on the left half, ulna on the right
    draw_capsule(c, 0.40 + jit(0.008), 0.835, 0.40 + jit(0.012), 0.99, 0.034 + jit(0.003),
                 0.62 + jit(0.04));
    draw_capsule(c, 0.58 + jit(0.008), 0.835, 0.58 + jit(0.012), 0.99, 0.030 + jit(0.003),
                 0.60 + jit(0.04));

    // carpal block: the only class-dependent structure
    if (label == 0) {
        // one thick fused blob
        draw_ellipse(c, 0.49 + jit(0.008), 0.735 + jit(0.006), 0.18 + jit(0.008),
                     0.075 + jit(0.004), 0.82 + jit(0.03));
    } else {
        // small separated blobs with visible gaps
        const double positions[4][2] = {{0.36, 0.705}, {0.48, 0.695}, {0.60, 0.71}, {0.47, 0.775}};
        for (const auto& p : positions) {
            draw_ellipse(c, p[0] + jit(0.008), p[1] + jit(0.006), 0.032 + jit(0.004),
                         0.026 + jit(0.003), 0.70 + jit(0.03));
        }
    }

    // film grain over a faint base level
    Tensor img({kInputSize, kInputSize});
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = 0.02 + c.px[i] + 0.012 * rng.normal();
        img[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return img;
}

}  // namespace

SynthResult generate_synthetic_dataset(int n_per_class, std::uint64_t seed,
                                       const std::string& out_dir) {
    if (n_per_class < 1) throw std::invalid_argument("synth: n_per_class must be >= 1");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("synth: cannot create directory " + out_dir);

    DatasetManifest manifest;
    manifest.base_dir = out_dir;
    char id[16];
    for (int label = 0; label < 2; ++label) {
        for (int i = 0; i < n_per_class; ++i) {
            std::snprintf(id, sizeof(id), "%c%04d", label == 0 ? 'm' : 'f', i);
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label), static_cast<std::uint64_t>(i)));
            const Tensor img = render_hand(label, rng);
            const std::string name = std::string(id) + ".pgm";
            write_pgm(img, (fs::path(out_dir) / name).string());
            manifest.rows.push_back({id, name, label});
        }
    }

    const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    save_manifest(manifest, manifest_path);
    return {manifest_path, n_per_class};
}

}  // namespace gdcnn
