#include "gdcnn/config.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace gdcnn {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const int x = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw UsageError("config: bad integer '" + v + "' for key " + key);
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw UsageError("config: bad number '" + v + "' for key " + key);
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: bad boolean '" + v + "' for key " + key);
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw UsageError("config: bad seed '" + v + "' for key " + key);
    }
}

}  // namespace

void RunConfig::apply_kv(const std::string& key, const std::string& value) {
    if (key == "head") {
        if (value != "gap" && value != "dense") {
            throw UsageError("config: head must be 'gap' or 'dense', got '" + value + "'");
        }
        head = value;
    } else if (key == "conv_filters") {
        const auto parts = split_list(value);
        if (parts.size() != 4) throw UsageError("config: conv_filters needs 4 values");
        for (std::size_t i = 0; i < 4; ++i) conv_filters[i] = parse_int(parts[i], key);
    } else if (key == "dense_hidden") {
        dense_hidden = parse_int(value, key);
    } else if (key == "dropout_rate") {
        dropout_rate = static_cast<float>(parse_double(value, key));
    } else if (key == "lr") {
        lr = static_cast<float>(parse_double(value, key));
    } else if (key == "batch_size") {
        batch_size = parse_int(value, key);
    } else if (key == "epochs") {
        epochs = parse_int(value, key);
    } else if (key == "noise_sigma") {
        noise_sigma = static_cast<float>(parse_double(value, key));
    } else if (key == "split") {
        const auto parts = split_list(value);
        if (parts.size() != 3) throw UsageError("config: split needs train,val,test fractions");
        for (std::size_t i = 0; i < 3; ++i) split_fractions[i] = parse_double(parts[i], key);
    } else if (key == "tau") {
        tau = static_cast<float>(parse_double(value, key));
    } else if (key == "rho") {
        rho = static_cast<float>(parse_double(value, key));
    } else if (key == "bands") {
        const auto parts = split_list(value);
        if (parts.size() != 3) throw UsageError("config: bands needs 3 boundary fractions");
        for (std::size_t i = 0; i < 3; ++i) bands[i] = static_cast<float>(parse_double(parts[i], key));
    } else if (key == "mirror_hand") {
        mirror_hand = parse_bool(value, key);
    } else if (key == "upsample") {
        if (value != "bilinear" && value != "nearest") {
            throw UsageError("config: upsample must be 'bilinear' or 'nearest'");
        }
        upsample = value;
    } else if (key == "seed") {
        seed = parse_u64(value, key);
    } else if (key == "manifest") {
        manifest = value;
    } else if (key == "out") {
        out = value;
    } else if (key == "checkpoint") {
        checkpoint = value;
    } else if (key == "cam_class") {
        if (value != "auto" && value != "0" && value != "1") {
            throw UsageError("config: cam_class must be auto, 0 or 1");
        }
        cam_class = value;
    } else {
        throw UsageError("config: unknown key '" + key + "'");
    }
}

void RunConfig::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config: line " + std::to_string(line_no) + " of " + path +
                             " is not a key = value pair");
        }
        try {
            apply_kv(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const UsageError& e) {
            throw UsageError(std::string(e.what()) + " (line " + std::to_string(line_no) + " of " +
                             path + ")");
        }
    }
}

ModelConfig RunConfig::model_config() const {
    ModelConfig c;
    c.conv_filters = conv_filters;
    c.head = head == "gap" ? Head::gap : Head::dense;
    c.dense_hidden = dense_hidden;
    c.dropout_rate = dropout_rate;
    return c;
}

SplitFractions RunConfig::fractions() const {
    return {split_fractions[0], split_fractions[1], split_fractions[2]};
}

RegionBands RunConfig::region_bands() const {
    RegionBands b;
    b.phalanges_end = bands[0];
    b.metacarpals_end = bands[1];
    b.carpals_end = bands[2];
    b.tau = tau;
    b.rho = rho;
    b.mirrored = mirror_hand;
    return b;
}

void RunConfig::validate() const {
    try {
        model_config().validate();
        region_bands().validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
    if (epochs < 1) throw UsageError("config: epochs must be >= 1");
    if (!(lr > 0.0f)) throw UsageError("config: lr must be positive");
    if (noise_sigma < 0.0f) throw UsageError("config: noise_sigma must be >= 0");
}

}  // namespace gdcnn
