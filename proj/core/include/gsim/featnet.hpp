#pragma once

// Small feed-forward feature extractor with one branch per input domain and a
// shared trunk.  Both branches map their raw inputs into a common hidden
// width; the trunk maps that hidden representation to the feature space the
// similarity measure scores in.  The final output is optionally L2-normalized.

#include <vector>

#include "gsim/linalg.hpp"

namespace gsim {

enum class Activation { Relu, Identity };

struct LayerSpec {
    int in_dim = 0;
    int out_dim = 0;
    Activation activation = Activation::Relu;
};

struct Layer {
    Matrix w;  // out_dim x in_dim
    Vector b;  // out_dim
    Activation activation = Activation::Relu;

    int in_dim() const { return static_cast<int>(w.cols()); }
    int out_dim() const { return static_cast<int>(w.rows()); }
};

// Architecture description.  The branch output width must match the trunk
// input width for both branches, and consecutive layers must chain.
struct NetShape {
    std::vector<LayerSpec> branch_x;
    std::vector<LayerSpec> branch_y;
    std::vector<LayerSpec> shared;
    bool normalize_output = true;

    void validate() const;
};

// Default desk-scale architecture: per-domain 32 -> 24 ReLU branch, shared
// 24 -> 16 ReLU followed by a 16 -> 16 identity output layer, normalized.
NetShape default_shape(int input_dim_x, int input_dim_y);

struct FeatureNet {
    std::vector<Layer> branch_x;
    std::vector<Layer> branch_y;
    std::vector<Layer> shared;
    bool normalize_output = true;

    int input_dim(Domain domain) const;
    int output_dim() const;
    void validate() const;
};

// Everything the backward pass needs from a forward pass: inputs and the
// pre-activation of every layer along the path actually taken.
struct ForwardTape {
    Domain domain = Domain::X;
    Vector input;
    std::vector<Vector> branch_pre;   // pre-activation per branch layer
    std::vector<Vector> branch_post;  // post-activation per branch layer
    std::vector<Vector> shared_pre;
    std::vector<Vector> shared_post;
    Vector pre_norm;  // trunk output before normalization
    bool normalized = false;
    Vector feature;  // final output
};

struct LayerGrad {
    Matrix w;
    Vector b;
};

struct NetGradients {
    std::vector<LayerGrad> branch_x;
    std::vector<LayerGrad> branch_y;
    std::vector<LayerGrad> shared;

    static NetGradients zeros_like(const FeatureNet& net);
    void scale(double s);
};

// Gaussian init: hidden layers get std 0.01, the final shared layer 0.001,
// all biases zero.  Draw order is fixed (branch_x, branch_y, shared; each
// layer row-major) so a seed pins every weight.
FeatureNet init_weights(const NetShape& shape, std::uint64_t seed);

// Run one raw input through its domain branch and the shared trunk.  When
// `tape` is non-null it is filled for a later backward().  Normalization is
// skipped (output passed through unchanged) when the pre-norm output has
// norm <= 1e-12, and the tape records that.
Vector forward(const FeatureNet& net, const Vector& raw, Domain domain, ForwardTape* tape = nullptr);

// Accumulate d(loss)/d(weights) into `grads` given d(loss)/d(feature), and
// return d(loss)/d(input).  The tape must come from a forward() through the
// same net.  ReLU uses subgradient 0 at 0.
Vector backward_accumulate(const FeatureNet& net, const ForwardTape& tape,
                           const Vector& grad_feature, NetGradients& grads);

// Convenience wrapper producing fresh gradients for a single sample.
NetGradients backward(const FeatureNet& net, const ForwardTape& tape, const Vector& grad_feature,
                      Vector* grad_input = nullptr);

// Sum of squares of all weights and biases in the net.
double weight_squared_norm(const FeatureNet& net);

}  // namespace gsim
