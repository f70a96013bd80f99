#include "gsim/featnet.hpp"

#include <string>

#include "gsim/rng.hpp"

namespace gsim {

namespace {

constexpr double kNormGuard = 1e-12;

void validate_chain(const std::vector<LayerSpec>& specs, const std::string& what) {
    if (specs.empty()) throw ValidationError(what + " has no layers");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].in_dim <= 0 || specs[i].out_dim <= 0) {
            throw ValidationError(what + " layer " + std::to_string(i) +
                                  " has non-positive dimensions");
        }
        if (i > 0 && specs[i].in_dim != specs[i - 1].out_dim) {
            throw ValidationError(what + " layer " + std::to_string(i) + " expects input " +
                                  std::to_string(specs[i].in_dim) + " but previous layer outputs " +
                                  std::to_string(specs[i - 1].out_dim));
        }
    }
}

void validate_layers(const std::vector<Layer>& layers, const std::string& what) {
    if (layers.empty()) throw ValidationError(what + " has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.w.rows() <= 0 || l.w.cols() <= 0) {
            throw ValidationError(what + " layer " + std::to_string(i) + " has empty weights");
        }
        if (l.b.size() != l.w.rows()) {
            throw ValidationError(what + " layer " + std::to_string(i) + " bias length " +
                                  std::to_string(l.b.size()) + " does not match output width " +
                                  std::to_string(l.w.rows()));
        }
        require_finite(l.w, what + " layer " + std::to_string(i) + " weights");
        require_finite(l.b, what + " layer " + std::to_string(i) + " bias");
        if (i > 0 && l.in_dim() != layers[i - 1].out_dim()) {
            throw ValidationError(what + " layer " + std::to_string(i) + " expects input " +
                                  std::to_string(l.in_dim()) + " but previous layer outputs " +
                                  std::to_string(layers[i - 1].out_dim()));
        }
    }
}

Vector apply_activation(const Vector& pre, Activation act) {
    if (act == Activation::Identity) return pre;
    return pre.cwiseMax(0.0);
}

// d(post)/d(pre) applied to an incoming cotangent.
Vector activation_backward(const Vector& pre, Activation act, const Vector& grad_post) {
    if (act == Activation::Identity) return grad_post;
    Vector g = grad_post;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
        if (pre(i) <= 0.0) g(i) = 0.0;
    }
    return g;
}

Layer init_layer(const LayerSpec& spec, double stddev, Rng& rng) {
    Layer l;
    l.activation = spec.activation;
    l.w.resize(spec.out_dim, spec.in_dim);
    for (int i = 0; i < spec.out_dim; ++i) {
        for (int j = 0; j < spec.in_dim; ++j) {
            l.w(i, j) = rng.normal(0.0, stddev);
        }
    }
    l.b = Vector::Zero(spec.out_dim);
    return l;
}

}  // namespace

void NetShape::validate() const {
    validate_chain(branch_x, "branch_x");
    validate_chain(branch_y, "branch_y");
    validate_chain(shared, "shared");
    if (branch_x.back().out_dim != shared.front().in_dim) {
        throw ValidationError("branch_x output width " +
                              std::to_string(branch_x.back().out_dim) +
                              " does not match shared trunk input " +
                              std::to_string(shared.front().in_dim));
    }
    if (branch_y.back().out_dim != shared.front().in_dim) {
        throw ValidationError("branch_y output width " +
                              std::to_string(branch_y.back().out_dim) +
                              " does not match shared trunk input " +
                              std::to_string(shared.front().in_dim));
    }
}

NetShape default_shape(int input_dim_x, int input_dim_y) {
    if (input_dim_x <= 0 || input_dim_y <= 0) {
        throw ValidationError("input dimensions must be positive");
    }
    NetShape shape;
    shape.branch_x = {{input_dim_x, 24, Activation::Relu}};
    shape.branch_y = {{input_dim_y, 24, Activation::Relu}};
    shape.shared = {{24, 16, Activation::Relu}, {16, 16, Activation::Identity}};
    shape.normalize_output = true;
    return shape;
}

int FeatureNet::input_dim(Domain domain) const {
    const auto& branch = domain == Domain::X ? branch_x : branch_y;
    if (branch.empty()) throw ValidationError("feature net branch has no layers");
    return branch.front().in_dim();
}

int FeatureNet::output_dim() const {
    if (shared.empty()) throw ValidationError("feature net trunk has no layers");
    return shared.back().out_dim();
}

void FeatureNet::validate() const {
    validate_layers(branch_x, "branch_x");
    validate_layers(branch_y, "branch_y");
    validate_layers(shared, "shared");
    if (branch_x.back().out_dim() != shared.front().in_dim()) {
        throw ValidationError("branch_x output width does not match shared trunk input");
    }
    if (branch_y.back().out_dim() != shared.front().in_dim()) {
        throw ValidationError("branch_y output width does not match shared trunk input");
    }
}

NetGradients NetGradients::zeros_like(const FeatureNet& net) {
    NetGradients g;
    auto zeros_for = [](const std::vector<Layer>& layers) {
        std::vector<LayerGrad> out;
        out.reserve(layers.size());
        for (const Layer& l : layers) {
            out.push_back({Matrix::Zero(l.w.rows(), l.w.cols()), Vector::Zero(l.b.size())});
        }
        return out;
    };
    g.branch_x = zeros_for(net.branch_x);
    g.branch_y = zeros_for(net.branch_y);
    g.shared = zeros_for(net.shared);
    return g;
}

void NetGradients::scale(double s) {
    for (auto* part : {&branch_x, &branch_y, &shared}) {
        for (LayerGrad& g : *part) {
            g.w *= s;
            g.b *= s;
        }
    }
}

FeatureNet init_weights(const NetShape& shape, std::uint64_t seed) {
    shape.validate();
    Rng rng(seed);
    FeatureNet net;
    net.normalize_output = shape.normalize_output;
    for (const LayerSpec& spec : shape.branch_x) net.branch_x.push_back(init_layer(spec, 0.01, rng));
    for (const LayerSpec& spec : shape.branch_y) net.branch_y.push_back(init_layer(spec, 0.01, rng));
    for (std::size_t i = 0; i < shape.shared.size(); ++i) {
        const bool last = i + 1 == shape.shared.size();
        net.shared.push_back(init_layer(shape.shared[i], last ? 0.001 : 0.01, rng));
    }
    return net;
}

Vector forward(const FeatureNet& net, const Vector& raw, Domain domain, ForwardTape* tape) {
    const auto& branch = domain == Domain::X ? net.branch_x : net.branch_y;
    if (branch.empty() || net.shared.empty()) {
        throw ValidationError("feature net is missing layers");
    }
    require_length(raw, branch.front().in_dim(), "raw input");
    require_finite(raw, "raw input");

    if (tape) {
        tape->domain = domain;
        tape->input = raw;
        tape->branch_pre.clear();
        tape->branch_post.clear();
        tape->shared_pre.clear();
        tape->shared_post.clear();
    }

    Vector h = raw;
    for (const Layer& l : branch) {
        Vector pre = l.w * h + l.b;
        h = apply_activation(pre, l.activation);
        if (tape) {
            tape->branch_pre.push_back(std::move(pre));
            tape->branch_post.push_back(h);
        }
    }
    for (const Layer& l : net.shared) {
        Vector pre = l.w * h + l.b;
        h = apply_activation(pre, l.activation);
        if (tape) {
            tape->shared_pre.push_back(std::move(pre));
            tape->shared_post.push_back(h);
        }
    }

    bool normalized = false;
    Vector out = h;
    if (net.normalize_output) {
        const double norm = h.norm();
        if (norm > kNormGuard) {
            out = h / norm;
            normalized = true;
        }
    }
    if (tape) {
        tape->pre_norm = h;
        tape->normalized = normalized;
        tape->feature = out;
    }
    return out;
}

Vector backward_accumulate(const FeatureNet& net, const ForwardTape& tape,
                           const Vector& grad_feature, NetGradients& grads) {
    const auto& branch = tape.domain == Domain::X ? net.branch_x : net.branch_y;
    auto& branch_grads = tape.domain == Domain::X ? grads.branch_x : grads.branch_y;
    if (tape.branch_pre.size() != branch.size() || tape.shared_pre.size() != net.shared.size()) {
        throw ValidationError("forward tape does not match net layout");
    }
    require_length(grad_feature, net.output_dim(), "grad_feature");

    // Normalization Jacobian: y = x/||x||, so J'u = (u - (u.y) y)/||x||.
    Vector g;
    if (tape.normalized) {
        const double norm = tape.pre_norm.norm();
        g = (grad_feature - grad_feature.dot(tape.feature) * tape.feature) / norm;
    } else {
        g = grad_feature;
    }

    // Shared trunk, last layer first.
    for (int i = static_cast<int>(net.shared.size()) - 1; i >= 0; --i) {
        const Layer& l = net.shared[i];
        const Vector g_pre = activation_backward(tape.shared_pre[i], l.activation, g);
        const Vector& in = i > 0 ? tape.shared_post[i - 1] : tape.branch_post.back();
        grads.shared[i].w.noalias() += g_pre * in.transpose();
        grads.shared[i].b += g_pre;
        g = l.w.transpose() * g_pre;
    }
    // Domain branch.
    for (int i = static_cast<int>(branch.size()) - 1; i >= 0; --i) {
        const Layer& l = branch[i];
        const Vector g_pre = activation_backward(tape.branch_pre[i], l.activation, g);
        const Vector& in = i > 0 ? tape.branch_post[i - 1] : tape.input;
        branch_grads[i].w.noalias() += g_pre * in.transpose();
        branch_grads[i].b += g_pre;
        g = l.w.transpose() * g_pre;
    }
    return g;
}

NetGradients backward(const FeatureNet& net, const ForwardTape& tape, const Vector& grad_feature,
                      Vector* grad_input) {
    NetGradients grads = NetGradients::zeros_like(net);
    Vector gi = backward_accumulate(net, tape, grad_feature, grads);
    if (grad_input) *grad_input = std::move(gi);
    return grads;
}

double weight_squared_norm(const FeatureNet& net) {
    double total = 0.0;
    for (const auto* part : {&net.branch_x, &net.branch_y, &net.shared}) {
        for (const Layer& l : *part) {
            total += l.w.squaredNorm() + l.b.squaredNorm();
        }
    }
    return total;
}

}  // namespace gsim
