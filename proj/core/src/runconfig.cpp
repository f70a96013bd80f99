#include "gsim/runconfig.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

namespace gsim {

namespace {

// Every knob the tool understands, with its default. Keeping the vocabulary
// closed catches config typos instead of silently ignoring them.
const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"data.num_classes", "200"},
        {"data.samples_per_class_x", "8"},
        {"data.samples_per_class_y", "8"},
        {"data.latent_dim", "6"},
        {"data.input_dim_x", "32"},
        {"data.input_dim_y", "32"},
        {"data.noise_sigma", "0.1"},
        {"data.noise_boost", "3"},
        {"data.noisy_class_fraction", "0.15"},
        {"data.scale", "1000"},
        {"data.nonlinear", "true"},
        {"data.seed", "1"},
        {"data.holdout_classes", "10"},
        {"train.learning_rate", "0.0013"},
        {"train.reg_w", "0.0001"},
        {"train.reg_phi", "0.0001"},
        {"train.iterations", "14000"},
        {"train.seed", "1"},
        {"train.variant", "generalized"},
        {"train.f", "-1.9"},
        {"batch.k_hat", "40"},
        {"batch.o1", "3"},
        {"batch.o2", "3"},
        {"batch.pairs_per_anchor", "8"},
        {"batch.positive_fraction", "0.5"},
        {"net.branch_hidden", "24"},
        {"net.shared_hidden", "16"},
        {"net.feature_dim", "16"},
        {"net.normalize", "true"},
        {"eval.splits", "10"},
        {"eval.seed", "99"},
        {"grad.step", "1e-05"},
        {"grad.seed", "7"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* kind) {
    T parsed{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, parsed);
    if (ec != std::errc{} || ptr != end) {
        throw ValidationError("config key " + key + ": '" + value + "' is not " + kind);
    }
    return parsed;
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig cfg;
    cfg.values_ = default_values();
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    RunConfig cfg = defaults();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw IoError("'" + path + "' line " + std::to_string(lineno) +
                          ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw IoError("'" + path + "' line " + std::to_string(lineno) +
                          ": expected 'key = value'");
        }
        if (!default_values().count(key)) {
            throw ValidationError("'" + path + "' line " + std::to_string(lineno) +
                                  ": unknown config key '" + key + "'");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!default_values().count(key)) {
        throw ValidationError("unknown config key '" + key + "'");
    }
    if (values_.empty()) values_ = default_values();
    values_[key] = value;
}

void RunConfig::set_expr(const std::string& key_eq_value) {
    const std::size_t eq = key_eq_value.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override must look like key=value, got '" + key_eq_value + "'");
    }
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

std::string RunConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
    return it->second;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string value = get_string(key);
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ValidationError("config key " + key + ": '" + value +
                          "' is not a boolean (true/false)");
}

int RunConfig::get_int(const std::string& key) const {
    return parse_number<int>(key, get_string(key), "an integer");
}

double RunConfig::get_double(const std::string& key) const {
    return parse_number<double>(key, get_string(key), "a number");
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
    return parse_number<std::uint64_t>(key, get_string(key), "a seed (non-negative integer)");
}

SynthSpec RunConfig::synth_spec() const {
    SynthSpec spec;
    spec.num_classes = get_int("data.num_classes");
    spec.samples_per_class_x = get_int("data.samples_per_class_x");
    spec.samples_per_class_y = get_int("data.samples_per_class_y");
    spec.latent_dim = get_int("data.latent_dim");
    spec.input_dim_x = get_int("data.input_dim_x");
    spec.input_dim_y = get_int("data.input_dim_y");
    spec.noise_sigma = get_double("data.noise_sigma");
    spec.noise_boost = get_double("data.noise_boost");
    spec.noisy_class_fraction = get_double("data.noisy_class_fraction");
    spec.scale = get_double("data.scale");
    spec.nonlinear = get_bool("data.nonlinear");
    spec.seed = get_seed("data.seed");
    spec.validate();
    return spec;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.learning_rate = get_double("train.learning_rate");
    cfg.reg_w = get_double("train.reg_w");
    cfg.reg_phi = get_double("train.reg_phi");
    cfg.iterations = get_int("train.iterations");
    cfg.seed = get_seed("train.seed");
    cfg.variant = parse_variant(get_string("train.variant"));
    cfg.f = get_double("train.f");
    cfg.scheme.k_hat = get_int("batch.k_hat");
    cfg.scheme.o1 = get_int("batch.o1");
    cfg.scheme.o2 = get_int("batch.o2");
    cfg.scheme.pairs_per_anchor = get_int("batch.pairs_per_anchor");
    cfg.scheme.positive_fraction = get_double("batch.positive_fraction");
    cfg.validate();
    return cfg;
}

NetShape RunConfig::net_shape(int input_dim_x, int input_dim_y) const {
    const int branch_hidden = get_int("net.branch_hidden");
    const int shared_hidden = get_int("net.shared_hidden");
    const int feature_dim = get_int("net.feature_dim");
    if (branch_hidden <= 0) throw ValidationError("config key net.branch_hidden must be positive");
    if (shared_hidden <= 0) throw ValidationError("config key net.shared_hidden must be positive");
    if (feature_dim <= 0) throw ValidationError("config key net.feature_dim must be positive");
    if (input_dim_x <= 0 || input_dim_y <= 0) {
        throw ValidationError("net input dimensions must be positive");
    }
    NetShape shape;
    shape.branch_x = {{input_dim_x, branch_hidden, Activation::Relu}};
    shape.branch_y = {{input_dim_y, branch_hidden, Activation::Relu}};
    shape.shared = {{branch_hidden, shared_hidden, Activation::Relu},
                    {shared_hidden, feature_dim, Activation::Identity}};
    shape.normalize_output = get_bool("net.normalize");
    shape.validate();
    return shape;
}

}  // namespace gsim
