#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "gdcnn/data.hpp"
#include "gdcnn/pgm.hpp"
#include "gdcnn/rng.hpp"

using namespace gdcnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gdcnn_data_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// mean intensity of the carpal band rows [0.65, 0.82)
double band_mean(const Tensor& img) {
    const int h = img.dim(1), w = img.dim(2);
    const int y0 = static_cast<int>(0.65 * h), y1 = static_cast<int>(0.82 * h);
    double sum = 0;
    for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < w; ++x) sum += img.at(0, y, x);
    }
    return sum / ((y1 - y0) * static_cast<double>(w));
}

}  // namespace

TEST_CASE("manifest parsing") {
    const fs::path dir = scratch_dir("manifest");

    SUBCASE("header-only file is an empty manifest") {
        write_text(dir / "m.csv", "id,path,label\n");
        const DatasetManifest m = load_manifest((dir / "m.csv").string());
        CHECK(m.size() == 0);
    }

    SUBCASE("rows parse and resolve against the manifest directory") {
        write_text(dir / "m.csv", "id,path,label\na,img/a.pgm,0\nb,img/b.pgm,1\n");
        const DatasetManifest m = load_manifest((dir / "m.csv").string());
        REQUIRE(m.size() == 2);
        CHECK(m.rows[0].id == "a");
        CHECK(m.rows[1].label == 1);
        CHECK(m.resolve(m.rows[0]) == (dir / "img/a.pgm").string());
    }

    SUBCASE("missing file names the path") {
        CHECK_THROWS_WITH_AS(load_manifest((dir / "nope.csv").string()),
                             doctest::Contains("nope.csv"), std::runtime_error);
    }

    SUBCASE("bad header rejected") {
        write_text(dir / "m.csv", "id;path;label\n");
        CHECK_THROWS_AS(load_manifest((dir / "m.csv").string()), std::runtime_error);
    }

    SUBCASE("malformed row reports the line number") {
        write_text(dir / "m.csv", "id,path,label\na,one.pgm,0\nbroken-row\n");
        CHECK_THROWS_WITH_AS(load_manifest((dir / "m.csv").string()), doctest::Contains("line 3"),
                             std::runtime_error);
    }

    SUBCASE("bad label value rejected") {
        write_text(dir / "m.csv", "id,path,label\na,one.pgm,2\n");
        CHECK_THROWS_WITH_AS(load_manifest((dir / "m.csv").string()), doctest::Contains("label"),
                             std::runtime_error);
    }

    SUBCASE("duplicate id names the id") {
        write_text(dir / "m.csv", "id,path,label\nx,one.pgm,0\nx,two.pgm,1\n");
        CHECK_THROWS_WITH_AS(load_manifest((dir / "m.csv").string()), doctest::Contains("'x'"),
                             std::runtime_error);
    }
}

TEST_CASE("pgm loading") {
    const fs::path dir = scratch_dir("pgm");

    SUBCASE("all-black and max-value pixels") {
        write_pgm(Tensor({4, 4}), (dir / "black.pgm").string());
        const Tensor black = load_image((dir / "black.pgm").string());
        for (std::size_t i = 0; i < black.size(); ++i) CHECK(black[i] == 0.0f);

        write_pgm(Tensor::full({4, 4}, 1.0f), (dir / "white.pgm").string());
        const Tensor white = load_image((dir / "white.pgm").string());
        for (std::size_t i = 0; i < white.size(); ++i) CHECK(white[i] == 1.0f);
    }

    SUBCASE("bad magic rejected") {
        write_text(dir / "bad.pgm", "P2\n2 2\n255\n0 0 0 0\n");
        CHECK_THROWS_WITH_AS(load_image((dir / "bad.pgm").string()), doctest::Contains("magic"),
                             std::runtime_error);
    }

    SUBCASE("truncated payload rejected") {
        write_text(dir / "short.pgm", std::string("P5\n4 4\n255\n") + "abc");
        CHECK_THROWS_WITH_AS(load_image((dir / "short.pgm").string()),
                             doctest::Contains("truncated"), std::runtime_error);
    }

    SUBCASE("write-read round trip within one step") {
        Rng rng(3);
        Tensor grid({9, 13});
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<float>(rng.uniform());
        write_pgm(grid, (dir / "rt.pgm").string());
        const Tensor back = load_image((dir / "rt.pgm").string());
        REQUIRE(back.shape() == grid.shape());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(std::abs(back[i] - grid[i]) <= 1.0f / 255.0f);
        }
    }
}

TEST_CASE("resize_to_input") {
    SUBCASE("137x137 passes through identically") {
        Rng rng(4);
        Tensor grid({137, 137});
        for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<float>(rng.uniform());
        const Tensor out = resize_to_input(grid);
        REQUIRE(out.shape() == std::vector<int>{1, 137, 137});
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(out[i] == grid[i]);
    }

    SUBCASE("constant image of any size stays constant") {
        const Tensor out = resize_to_input(Tensor::full({50, 300}, 0.4f));
        REQUIRE(out.shape() == std::vector<int>{1, 137, 137});
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.4f));
    }

    SUBCASE("downsampling a checkerboard roughly preserves the mean") {
        Tensor grid({274, 274});
        for (int y = 0; y < 274; ++y) {
            for (int x = 0; x < 274; ++x) grid.at(y, x) = static_cast<float>((x + y) % 2);
        }
        double in_mean = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) in_mean += grid[i];
        in_mean /= static_cast<double>(grid.size());

        const Tensor out = resize_to_input(grid);
        double out_mean = 0;
        for (std::size_t i = 0; i < out.size(); ++i) out_mean += out[i];
        out_mean /= static_cast<double>(out.size());
        CHECK(std::abs(out_mean - in_mean) <= 0.02);
    }
}

TEST_CASE("gaussian noise") {
    Rng rng(5);
    Tensor img({1, 137, 137});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = 0.5f;

    SUBCASE("sigma 0 is a bit-exact identity") {
        Rng r2(6);
        Tensor noisy_src({1, 137, 137});
        for (std::size_t i = 0; i < noisy_src.size(); ++i) {
            noisy_src[i] = static_cast<float>(r2.uniform());
        }
        const Tensor out = add_gaussian_noise(noisy_src, {0.0f, 99});
        for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == noisy_src[i]);
    }

    SUBCASE("fixed seed reproduces") {
        const Tensor a = add_gaussian_noise(img, {0.05f, 42});
        const Tensor b = add_gaussian_noise(img, {0.05f, 42});
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    SUBCASE("sample std on a mid-gray image is close to sigma") {
        const Tensor out = add_gaussian_noise(img, {0.05f, 7});
        double mean = 0;
        for (std::size_t i = 0; i < out.size(); ++i) mean += out[i] - 0.5;
        mean /= static_cast<double>(out.size());
        double var = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            var += (out[i] - 0.5 - mean) * (out[i] - 0.5 - mean);
        }
        var /= static_cast<double>(out.size());
        CHECK(std::abs(std::sqrt(var) - 0.05) <= 0.003);

        float mn = 1.0f, mx = 0.0f;
        for (std::size_t i = 0; i < out.size(); ++i) {
            mn = std::min(mn, out[i]);
            mx = std::max(mx, out[i]);
        }
        CHECK(mn >= 0.0f);
        CHECK(mx <= 1.0f);
    }
}

namespace {

DatasetManifest balanced_manifest(int per_class) {
    DatasetManifest m;
    for (int label = 0; label < 2; ++label) {
        for (int i = 0; i < per_class; ++i) {
            const std::string id = (label == 0 ? "m" : "f") + std::to_string(i);
            m.rows.push_back({id, id + ".pgm", label});
        }
    }
    return m;
}

}  // namespace

TEST_CASE("split") {
    SUBCASE("everything in train under (1,0,0)") {
        const DatasetManifest m = balanced_manifest(10);
        const SplitResult r = split(m, {1.0, 0.0, 0.0}, 5);
        CHECK(r.train.size() == 20);
        CHECK(r.val.size() == 0);
        CHECK(r.test.size() == 0);
    }

    SUBCASE("3000 per class with a 0.5 test fraction puts 1500 of each class in test") {
        const DatasetManifest m = balanced_manifest(3000);
        const SplitResult r = split(m, {0.5, 0.0, 0.5}, 9);
        CHECK(r.test.size() == 3000);
        int male = 0, female = 0;
        for (const auto& row : r.test.rows) (row.label == 0 ? male : female) += 1;
        CHECK(male == 1500);
        CHECK(female == 1500);
    }

    SUBCASE("fraction sum must be 1") {
        const DatasetManifest m = balanced_manifest(4);
        CHECK_THROWS_AS(split(m, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
    }

    SUBCASE("splits are disjoint, exhaustive and deterministic over 50 seeds") {
        const DatasetManifest m = balanced_manifest(37);  // odd size exercises rounding
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const SplitResult a = split(m, {0.6, 0.2, 0.2}, seed);
            const SplitResult b = split(m, {0.6, 0.2, 0.2}, seed);

            std::set<std::string> ids;
            for (const auto* part : {&a.train, &a.val, &a.test}) {
                for (const auto& row : part->rows) {
                    CHECK(ids.insert(row.id).second);  // no overlaps
                }
            }
            CHECK(ids.size() == m.size());  // exhaustive

            // deterministic under the seed
            REQUIRE(a.train.size() == b.train.size());
            for (std::size_t i = 0; i < a.train.size(); ++i) {
                CHECK(a.train.rows[i].id == b.train.rows[i].id);
            }

            // stratified: class counts differ by at most rounding
            for (const auto* part : {&a.train, &a.val, &a.test}) {
                int male = 0, female = 0;
                for (const auto& row : part->rows) (row.label == 0 ? male : female) += 1;
                CHECK(std::abs(male - female) <= 1);
            }
        }
    }
}

TEST_CASE("epoch batches") {
    SUBCASE("7 samples in batches of 3 give 3,3,1") {
        const auto batches = epoch_batches(7, 3, 11);
        REQUIRE(batches.size() == 3);
        CHECK(batches[0].size() == 3);
        CHECK(batches[1].size() == 3);
        CHECK(batches[2].size() == 1);
    }

    SUBCASE("same seed gives the same order") {
        const auto a = epoch_batches(20, 6, 3);
        const auto b = epoch_batches(20, 6, 3);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == b[i]);
        }
    }

    SUBCASE("every sample appears exactly once per epoch") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto batches = epoch_batches(53, 8, seed);
            std::map<std::size_t, int> seen;
            for (const auto& b : batches) {
                for (std::size_t idx : b) seen[idx] += 1;
            }
            CHECK(seen.size() == 53);
            for (const auto& [idx, n] : seen) {
                CHECK(idx < 53);
                CHECK(n == 1);
            }
        }
    }
}

TEST_CASE("synthetic generator") {
    const fs::path dir = scratch_dir("synth");

    SUBCASE("n=1 yields two images and a two-row manifest") {
        const SynthResult r = generate_synthetic_dataset(1, 3, (dir / "one").string());
        const DatasetManifest m = load_manifest(r.manifest_path);
        CHECK(m.size() == 2);
        const auto samples = load_dataset(m);
        REQUIRE(samples.size() == 2);
        for (const auto& s : samples) {
            CHECK(s.image.shape() == std::vector<int>{1, 137, 137});
        }
    }

    SUBCASE("n_per_class must be positive") {
        CHECK_THROWS_AS(generate_synthetic_dataset(0, 1, (dir / "zero").string()),
                        std::invalid_argument);
    }

    SUBCASE("bottom-band mass separates the classes") {
        const SynthResult r = generate_synthetic_dataset(20, 7, (dir / "sep").string());
        const auto samples = load_dataset(load_manifest(r.manifest_path));
        double male_min = 1e9, male_mean = 0, female_max = -1e9, female_mean = 0;
        for (const auto& s : samples) {
            const double m = band_mean(s.image);
            if (s.label == 0) {
                male_min = std::min(male_min, m);
                male_mean += m / 20.0;
            } else {
                female_max = std::max(female_max, m);
                female_mean += m / 20.0;
            }
        }
        CHECK(male_mean - female_mean >= 0.1);
        // a threshold classifier on the band mean is exact on this data
        CHECK(male_min > female_max);
    }

    SUBCASE("same seed regenerates byte-identical files") {
        const SynthResult a = generate_synthetic_dataset(3, 99, (dir / "rep_a").string());
        const SynthResult b = generate_synthetic_dataset(3, 99, (dir / "rep_b").string());
        const DatasetManifest ma = load_manifest(a.manifest_path);
        const DatasetManifest mb = load_manifest(b.manifest_path);
        REQUIRE(ma.size() == mb.size());
        for (std::size_t i = 0; i < ma.size(); ++i) {
            CHECK(read_bytes(ma.resolve(ma.rows[i])) == read_bytes(mb.resolve(mb.rows[i])));
        }
    }
}
