#include "gsim/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gsim/rng.hpp"

namespace gsim {

namespace {

// 17 significant digits round-trip an IEEE double exactly, which is what
// makes saves byte-reproducible and reloads lossless.
std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos > start) tokens.push_back(line.substr(start, pos - start));
    }
    return tokens;
}

double parse_double(const std::string& token, const std::string& context) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw IoError(context + ": '" + token + "' is not a number");
    }
    return value;
}

int parse_int(const std::string& token, const std::string& context) {
    int value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw IoError(context + ": '" + token + "' is not an integer");
    }
    return value;
}

std::string line_context(const std::string& path, int lineno) {
    return "'" + path + "' line " + std::to_string(lineno);
}

void write_or_throw(std::ofstream& out, const std::string& path) {
    if (!out) throw IoError("failed writing to '" + path + "'");
}

// ---- model blocks ----------------------------------------------------------

void write_block(std::ofstream& out, const std::string& name, const Matrix& m) {
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ' ';
            out << format_value(m(i, j));
        }
        out << '\n';
    }
}

Matrix row_matrix(const Vector& v) {
    Matrix m(1, v.size());
    m.row(0) = v.transpose();
    return m;
}

Matrix scalar_matrix(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

// The format stores no activation tags; layers are reconstructed by the
// convention "every hidden layer ReLU, final shared layer identity", so a
// net that deviates from it cannot be persisted faithfully.
void require_conventional_activations(const FeatureNet& net) {
    auto check_hidden = [](const std::vector<Layer>& layers, std::size_t until,
                           const std::string& part) {
        for (std::size_t i = 0; i < until; ++i) {
            if (layers[i].activation != Activation::Relu) {
                throw ValidationError("cannot save model: " + part + " layer " +
                                      std::to_string(i) +
                                      " is not ReLU, and the file format stores activations by "
                                      "convention (hidden ReLU, final shared layer identity)");
            }
        }
    };
    check_hidden(net.branch_x, net.branch_x.size(), "branch_x");
    check_hidden(net.branch_y, net.branch_y.size(), "branch_y");
    check_hidden(net.shared, net.shared.size() - 1, "shared");
    if (net.shared.back().activation != Activation::Identity) {
        throw ValidationError("cannot save model: the final shared layer must use the identity "
                              "activation (the file format stores activations by convention)");
    }
}

}  // namespace

// ---- Dataset helpers -------------------------------------------------------

std::vector<int> Dataset::class_ids() const {
    std::set<int> ids;
    for (const Sample& s : samples) ids.insert(s.class_id);
    return {ids.begin(), ids.end()};
}

std::vector<int> Dataset::members(int class_id, Domain domain) const {
    std::vector<int> out;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].class_id == class_id && samples[k].domain == domain) {
            out.push_back(static_cast<int>(k));
        }
    }
    return out;
}

Dataset Dataset::filter_classes(const std::vector<int>& keep) const {
    const std::set<int> wanted(keep.begin(), keep.end());
    Dataset out;
    out.dim_x = dim_x;
    out.dim_y = dim_y;
    for (const Sample& s : samples) {
        if (wanted.count(s.class_id)) {
            Sample copy = s;
            copy.id = static_cast<int>(out.samples.size());
            out.samples.push_back(std::move(copy));
        }
    }
    return out;
}

// ---- synthetic generation --------------------------------------------------

void SynthSpec::validate() const {
    if (num_classes <= 0) throw ValidationError("num_classes must be positive");
    if (samples_per_class_x <= 0) throw ValidationError("samples_per_class_x must be positive");
    if (samples_per_class_y <= 0) throw ValidationError("samples_per_class_y must be positive");
    if (latent_dim <= 0) throw ValidationError("latent_dim must be positive");
    if (input_dim_x <= 0) throw ValidationError("input_dim_x must be positive");
    if (input_dim_y <= 0) throw ValidationError("input_dim_y must be positive");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw ValidationError("noise_sigma must be finite and >= 0");
    }
    if (!(noise_boost >= 0.0) || !std::isfinite(noise_boost)) {
        throw ValidationError("noise_boost must be finite and >= 0");
    }
    if (!(noisy_class_fraction >= 0.0 && noisy_class_fraction <= 1.0)) {
        throw ValidationError("noisy_class_fraction must lie in [0, 1]");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ValidationError("scale must be finite and > 0");
    }
}

bool SynthSpec::class_is_noisy(int class_id) const {
    const double f = noisy_class_fraction;
    return std::floor((class_id + 1) * f) > std::floor(class_id * f);
}

Dataset generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // Map scale keeps pre-tanh activations O(1); the shifts give each domain
    // a genuine affine offset so translation-sensitive structure matters.
    const double map_std = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
    const double shift_std = 0.5;

    auto draw_map = [&](int rows) {
        Matrix m(rows, spec.latent_dim);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < spec.latent_dim; ++j) m(i, j) = rng.normal(0.0, map_std);
        }
        return m;
    };
    auto draw_shift = [&](int rows) {
        Vector v(rows);
        for (int i = 0; i < rows; ++i) v(i) = rng.normal(0.0, shift_std);
        return v;
    };

    const Matrix u_x = draw_map(spec.input_dim_x);
    const Vector shift_x = draw_shift(spec.input_dim_x);
    const Matrix u_y = draw_map(spec.input_dim_y);
    const Vector shift_y = draw_shift(spec.input_dim_y);

    Dataset out;
    out.dim_x = spec.input_dim_x;
    out.dim_y = spec.input_dim_y;
    out.samples.reserve(static_cast<std::size_t>(spec.num_classes) *
                        static_cast<std::size_t>(spec.samples_per_class_x +
                                                 spec.samples_per_class_y));

    Vector latent(spec.latent_dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        Vector center(spec.latent_dim);
        for (int j = 0; j < spec.latent_dim; ++j) center(j) = rng.normal();
        const double sigma =
            spec.noise_sigma * (spec.class_is_noisy(c) ? spec.noise_boost : 1.0);

        auto emit = [&](Domain domain, const Matrix& u, const Vector& shift, int count) {
            for (int s = 0; s < count; ++s) {
                for (int j = 0; j < spec.latent_dim; ++j) {
                    latent(j) = center(j) + sigma * rng.normal();
                }
                Vector raw = u * latent + shift;
                if (spec.nonlinear) raw = raw.array().tanh();
                raw *= spec.scale;
                out.samples.push_back(
                    {static_cast<int>(out.samples.size()), domain, c, std::move(raw)});
            }
        };
        emit(Domain::X, u_x, shift_x, spec.samples_per_class_x);
        emit(Domain::Y, u_y, shift_y, spec.samples_per_class_y);
    }
    return out;
}

// ---- dataset file format ---------------------------------------------------

void save_dataset(const Dataset& dataset, const std::string& path) {
    if (dataset.dim_x <= 0 || dataset.dim_y <= 0) {
        throw ValidationError("dataset dimensions must be positive to save");
    }
    for (std::size_t k = 0; k < dataset.samples.size(); ++k) {
        const Sample& s = dataset.samples[k];
        const int want = dataset.input_dim(s.domain);
        if (s.raw.size() != want) {
            throw ValidationError("sample " + std::to_string(k) + " has " +
                                  std::to_string(s.raw.size()) + " values but domain " +
                                  domain_name(s.domain) + " expects " + std::to_string(want));
        }
        require_finite(s.raw, "sample " + std::to_string(k));
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "GSIM-DATA 1 " << dataset.dim_x << ' ' << dataset.dim_y << '\n';
    for (const Sample& s : dataset.samples) {
        out << domain_name(s.domain) << ' ' << s.class_id;
        for (Eigen::Index j = 0; j < s.raw.size(); ++j) out << ' ' << format_value(s.raw(j));
        out << '\n';
    }
    out.flush();
    write_or_throw(out, path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw IoError("missing header in '" + path + "'");
    ++lineno;
    const std::vector<std::string> header = split_tokens(line);
    if (header.empty() || header[0] != "GSIM-DATA") {
        throw IoError(line_context(path, lineno) + ": missing GSIM-DATA header");
    }
    if (header.size() != 4) {
        throw IoError(line_context(path, lineno) +
                      ": header must be 'GSIM-DATA <version> <dim_x> <dim_y>'");
    }
    if (header[1] != "1") {
        throw IoError(line_context(path, lineno) + ": unsupported dataset version '" + header[1] +
                      "'");
    }
    Dataset out;
    out.dim_x = parse_int(header[2], line_context(path, lineno));
    out.dim_y = parse_int(header[3], line_context(path, lineno));
    if (out.dim_x <= 0 || out.dim_y <= 0) {
        throw IoError(line_context(path, lineno) + ": dimensions must be positive");
    }

    while (std::getline(in, line)) {
        ++lineno;
        const std::vector<std::string> tokens = split_tokens(line);
        if (tokens.empty()) continue;  // ignore blank lines
        const std::string ctx = line_context(path, lineno);
        Domain domain;
        if (tokens[0] == "X") {
            domain = Domain::X;
        } else if (tokens[0] == "Y") {
            domain = Domain::Y;
        } else {
            throw IoError(ctx + ": domain must be X or Y, got '" + tokens[0] + "'");
        }
        if (tokens.size() < 2) throw IoError(ctx + ": missing class id");
        const int class_id = parse_int(tokens[1], ctx);
        const int want = domain == Domain::X ? out.dim_x : out.dim_y;
        if (static_cast<int>(tokens.size()) - 2 != want) {
            throw IoError(ctx + ": expected " + std::to_string(want) + " values for domain " +
                          domain_name(domain) + ", found " +
                          std::to_string(tokens.size() - 2));
        }
        Vector raw(want);
        for (int j = 0; j < want; ++j) {
            raw(j) = parse_double(tokens[static_cast<std::size_t>(j) + 2], ctx);
            if (!std::isfinite(raw(j))) throw IoError(ctx + ": value is not finite");
        }
        out.samples.push_back(
            {static_cast<int>(out.samples.size()), domain, class_id, std::move(raw)});
    }
    return out;
}

// ---- model file format -----------------------------------------------------

void save_model(const ModelState& state, const std::string& path) {
    state.validate();
    require_conventional_activations(state.net);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "GSIM-MODEL 1\n";
    auto write_layers = [&](const std::vector<Layer>& layers, const std::string& part) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            write_block(out, part + ".w" + std::to_string(i), layers[i].w);
            write_block(out, part + ".b" + std::to_string(i), row_matrix(layers[i].b));
        }
    };
    write_layers(state.net.branch_x, "branch_x");
    write_layers(state.net.branch_y, "branch_y");
    write_layers(state.net.shared, "shared");
    write_block(out, "net.normalize", scalar_matrix(state.net.normalize_output ? 1.0 : 0.0));
    write_block(out, "phi.l_a", state.phi.l_a);
    write_block(out, "phi.l_b", state.phi.l_b);
    write_block(out, "phi.l_cx", state.phi.l_cx);
    write_block(out, "phi.l_cy", state.phi.l_cy);
    write_block(out, "phi.d", row_matrix(state.phi.d));
    write_block(out, "phi.e", row_matrix(state.phi.e));
    write_block(out, "phi.f", scalar_matrix(state.phi.f));
    out.flush();
    write_or_throw(out, path);
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");

    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw IoError("missing header in '" + path + "'");
    ++lineno;
    const std::vector<std::string> header = split_tokens(line);
    if (header.empty() || header[0] != "GSIM-MODEL") {
        throw IoError(line_context(path, lineno) + ": missing GSIM-MODEL header");
    }
    if (header.size() != 2) {
        throw IoError(line_context(path, lineno) + ": header must be 'GSIM-MODEL <version>'");
    }
    if (header[1] != "1") {
        throw IoError(line_context(path, lineno) + ": unsupported model version '" + header[1] +
                      "'");
    }

    std::map<std::string, Matrix> blocks;
    while (std::getline(in, line)) {
        ++lineno;
        const std::vector<std::string> tokens = split_tokens(line);
        if (tokens.empty()) continue;
        const std::string ctx = line_context(path, lineno);
        if (tokens.size() != 3) {
            throw IoError(ctx + ": expected a block header '<name> <rows> <cols>'");
        }
        const std::string& name = tokens[0];
        const int rows = parse_int(tokens[1], ctx);
        const int cols = parse_int(tokens[2], ctx);
        if (rows <= 0 || cols <= 0) throw IoError(ctx + ": block dimensions must be positive");
        if (blocks.count(name)) throw IoError(ctx + ": duplicate block '" + name + "'");
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            if (!std::getline(in, line)) {
                throw IoError("'" + path + "': unexpected end of file inside block '" + name +
                              "'");
            }
            ++lineno;
            const std::vector<std::string> values = split_tokens(line);
            const std::string row_ctx = line_context(path, lineno);
            if (static_cast<int>(values.size()) != cols) {
                throw IoError(row_ctx + ": block '" + name + "' row has " +
                              std::to_string(values.size()) + " values, expected " +
                              std::to_string(cols));
            }
            for (int j = 0; j < cols; ++j) {
                m(i, j) = parse_double(values[static_cast<std::size_t>(j)], row_ctx);
            }
        }
        blocks.emplace(name, std::move(m));
    }

    auto take = [&](const std::string& name) {
        auto it = blocks.find(name);
        if (it == blocks.end()) throw IoError("'" + path + "': missing block '" + name + "'");
        Matrix m = std::move(it->second);
        blocks.erase(it);
        return m;
    };
    auto take_vector = [&](const std::string& name) {
        Matrix m = take(name);
        if (m.rows() != 1) {
            throw IoError("'" + path + "': block '" + name + "' must have one row");
        }
        return Vector(m.row(0).transpose());
    };
    auto take_scalar = [&](const std::string& name) {
        Matrix m = take(name);
        if (m.rows() != 1 || m.cols() != 1) {
            throw IoError("'" + path + "': block '" + name + "' must be 1x1");
        }
        return m(0, 0);
    };
    auto take_layers = [&](const std::string& part, bool is_shared) {
        std::vector<Layer> layers;
        for (int k = 0;; ++k) {
            const std::string wname = part + ".w" + std::to_string(k);
            if (!blocks.count(wname)) break;
            Layer layer;
            layer.w = take(wname);
            layer.b = take_vector(part + ".b" + std::to_string(k));
            layers.push_back(std::move(layer));
        }
        if (layers.empty()) {
            throw IoError("'" + path + "': missing block '" + part + ".w0'");
        }
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const bool last_shared = is_shared && k + 1 == layers.size();
            layers[k].activation = last_shared ? Activation::Identity : Activation::Relu;
        }
        return layers;
    };

    ModelState state;
    state.net.branch_x = take_layers("branch_x", false);
    state.net.branch_y = take_layers("branch_y", false);
    state.net.shared = take_layers("shared", true);
    const double normalize = take_scalar("net.normalize");
    if (normalize != 0.0 && normalize != 1.0) {
        throw IoError("'" + path + "': net.normalize must be 0 or 1");
    }
    state.net.normalize_output = normalize == 1.0;
    state.phi.l_a = take("phi.l_a");
    state.phi.l_b = take("phi.l_b");
    state.phi.l_cx = take("phi.l_cx");
    state.phi.l_cy = take("phi.l_cy");
    state.phi.d = take_vector("phi.d");
    state.phi.e = take_vector("phi.e");
    state.phi.f = take_scalar("phi.f");

    if (!blocks.empty()) {
        throw IoError("'" + path + "': unknown block '" + blocks.begin()->first + "'");
    }
    try {
        state.validate();
    } catch (const ValidationError& err) {
        throw IoError("model file '" + path + "' is inconsistent: " + err.what());
    }
    return state;
}

Vector load_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vector file '" + path + "'");
    std::vector<double> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (const std::string& token : split_tokens(line)) {
            values.push_back(parse_double(token, line_context(path, lineno)));
        }
    }
    if (values.empty()) throw IoError("vector file '" + path + "' contains no values");
    Vector out(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = values[i];
    }
    return out;
}

}  // namespace gsim
