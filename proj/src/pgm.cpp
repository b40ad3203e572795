#include "gdcnn/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace gdcnn {

namespace {

// Reads the next header token, skipping whitespace and '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') {
                tok.push_back(static_cast<char>(in.get()));
            }
            return tok;
        }
    }
    return tok;
}

int parse_dim(const std::string& tok, const std::string& what, const std::string& path) {
    try {
        const int v = std::stoi(tok);
        if (v <= 0) throw std::out_of_range("non-positive");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("pgm: bad " + what + " '" + tok + "' in " + path);
    }
}

}  // namespace

Tensor read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);

    if (next_token(in) != "P5") throw std::runtime_error("pgm: bad magic in " + path + " (want P5)");
    const int w = parse_dim(next_token(in), "width", path);
    const int h = parse_dim(next_token(in), "height", path);
    const int maxval = parse_dim(next_token(in), "maxval", path);
    if (maxval > 255) throw std::runtime_error("pgm: maxval " + std::to_string(maxval) + " > 255 in " + path);
    in.get();  // the single whitespace byte before the payload

    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw std::runtime_error("pgm: truncated payload in " + path + " (want " +
                                 std::to_string(bytes.size()) + " bytes)");
    }

    Tensor grid({h, w});
    const float inv = 1.0f / static_cast<float>(maxval);
    for (std::size_t i = 0; i < bytes.size(); ++i) grid[i] = static_cast<float>(bytes[i]) * inv;
    return grid;
}

void write_pgm(const Tensor& grid, const std::string& path) {
    if (grid.rank() != 2) {
        throw std::invalid_argument("pgm: want a rank-2 grid, got " + grid.shape_str());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);

    const int h = grid.dim(0), w = grid.dim(1);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> bytes(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        float v = grid[i];
        v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
        bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace gdcnn
