#pragma once

// Hinge-loss training of the similarity measure and the feature extractor:
// batch pair generation, the production sample-based gradient path, a
// pair-based reference gradient, SGD updates, the training loop, and a
// finite-difference harness for verifying the analytic gradients.

#include <cstdint>
#include <string>
#include <vector>

#include "gsim/data.hpp"
#include "gsim/featnet.hpp"
#include "gsim/simcore.hpp"

namespace gsim {

// Which parts of the measure are trained.  The two degenerate variants keep
// the same parameter layout but freeze or tie blocks:
//  - AffineEuclidean: d = e = 0 fixed, l_cx tied to l_a and l_cy tied to l_b
//    (so the cross term is exactly -l_a' l_b and the score reduces to
//    ||l_a fx - l_b fy||^2 + f).
//  - AffineCosine: l_a = l_b = 0 fixed; only the cross and shift terms learn.
enum class SimilarityVariant { Generalized, AffineEuclidean, AffineCosine };

std::string variant_name(SimilarityVariant variant);
SimilarityVariant parse_variant(const std::string& name);

// One labeled cross-domain pair: indices into a sample list.  ell is -1 for
// a same-class pair and +1 otherwise (lower scores mean more similar, so the
// margin constraints are score < -1 for ell = -1 and score > 1 for ell = +1).
struct PairLabel {
    int i = 0;    // index of the X-domain sample
    int j = 0;    // index of the Y-domain sample
    int ell = 1;  // -1 same class, +1 different class
};

// Mini-batch construction: pick k_hat classes, from each take o1 X-samples
// and o2 Y-samples, then emit pairs_per_anchor pairs per selected X-sample
// with the stated fraction of positives.  Duplicate pairs are permitted.
struct BatchScheme {
    int k_hat = 40;
    int o1 = 3;
    int o2 = 3;
    int pairs_per_anchor = 8;
    double positive_fraction = 0.5;

    void validate() const;
    int pairs_per_batch() const { return k_hat * o1 * pairs_per_anchor; }
};

struct TrainConfig {
    double learning_rate = 0.0013;
    double reg_w = 1e-4;    // weight on the squared norm of all net parameters
    double reg_phi = 1e-4;  // weight on the squared norm of the similarity factors
    int iterations = 14000;
    std::uint64_t seed = 1;
    BatchScheme scheme;
    SimilarityVariant variant = SimilarityVariant::Generalized;
    double f = kDefaultOffset;  // fixed score offset, never trained

    void validate() const;
};

// Everything that trains: the feature net and the similarity factors.
struct ModelState {
    FeatureNet net;
    SimilarityComponents phi;

    void validate() const;
};

// Gradients for the similarity factors (f is fixed and has no slot).
struct SimGradients {
    Matrix l_a, l_b, l_cx, l_cy;
    Vector d, e;

    static SimGradients zero(int r);
};

struct Gradients {
    NetGradients net;
    SimGradients phi;

    static Gradients zeros_like(const ModelState& state);
};

// Per-sample cotangents on the projected components, one entry per distinct
// sample index referenced by the batch (ascending index order).  Samples
// whose every pair satisfies its margin get zero vectors.
struct SampleCotangents {
    std::vector<int> sample_indices;
    std::vector<Vector> cotangents;  // each of length 2r+1
};

double hinge_loss(double score, int ell);

// Sum of hinge losses over the pairs plus reg_w * ||W||^2 + reg_phi * ||Phi||^2
// (f excluded from the regularizer; biases included in ||W||^2).
double objective(const ModelState& state, const std::vector<PairLabel>& pairs,
                 const std::vector<Sample>& samples, const TrainConfig& cfg);

std::vector<PairLabel> generate_batch(const Dataset& dataset, const BatchScheme& scheme,
                                      std::uint64_t seed);

// Cotangent of the unregularized batch loss with respect to each distinct
// sample's projected components.  A pair contributes only while its hinge is
// active (ell * score < 1, strictly); each sample's projection is computed
// once however many pairs reference it.
SampleCotangents sample_activation_gradients(const ModelState& state,
                                             const std::vector<PairLabel>& pairs,
                                             const std::vector<Sample>& samples);

// Production gradient path: forward every distinct sample once, accumulate
// the per-sample cotangents, then chain them through the similarity factors
// and the feature net.  Returns the gradient of the unregularized batch loss;
// mean_loss (when non-null) receives the mean hinge loss over the pairs.
Gradients sample_gradient(const ModelState& state, const std::vector<PairLabel>& pairs,
                          const std::vector<Sample>& samples, double* mean_loss = nullptr);

// Reference implementation for testing: iterate pairs and backpropagate each
// active pair independently.  Slower than sample_gradient but independent of
// the per-sample bookkeeping; the two must agree to high precision.
Gradients pair_gradient_oracle(const ModelState& state, const std::vector<PairLabel>& pairs,
                               const std::vector<Sample>& samples, double* mean_loss = nullptr);

// Analytic gradient of the full objective: sample_gradient plus the
// regularizer terms 2 * reg * parameter.  This is exactly what
// finite_diff_check compares against the central differences of objective().
Gradients objective_gradient(const ModelState& state, const std::vector<PairLabel>& pairs,
                             const std::vector<Sample>& samples, const TrainConfig& cfg);

// One gradient-descent update: every trainable parameter moves by
// -learning_rate * (loss gradient + 2 * reg * parameter); f is untouched.
// Degenerate variants keep their frozen blocks at zero and their tied blocks
// bit-identical.
void sgd_step(ModelState& state, const Gradients& grads, const TrainConfig& cfg);

struct TrainResult {
    ModelState state;
    std::vector<double> loss_trace;  // mean batch hinge loss per iteration, pre-update
};

// Fresh trainable state: net from init_weights; each similarity factor
// matrix starts as an independent scaled rotation (zero is a stationary
// point of the factor parameterization, and near-zero starts collapse the
// factors onto a common rank-1 direction), the shift vectors at zero, f
// taken from cfg.  Degenerate variants zero their frozen blocks and copy
// their tied blocks.
ModelState init_state(const NetShape& net_shape, const TrainConfig& cfg);

// Mini-batch SGD for cfg.iterations rounds.  Deterministic for a fixed
// config; aborts with a diagnostic if the loss stops being finite.
TrainResult train(const Dataset& dataset, const NetShape& net_shape, const TrainConfig& cfg);

// Drop pairs whose hinge margin lies within 10*step of the kink, where a
// central difference would straddle the non-differentiable point.
std::vector<PairLabel> exclude_kink_pairs(const ModelState& state,
                                          const std::vector<PairLabel>& pairs,
                                          const std::vector<Sample>& samples, double step);

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    std::string argmax_param;  // e.g. "shared.w1[3,7]" or "phi.d[2]"
    double analytic_at_max = 0.0;
    double numeric_at_max = 0.0;
    int parameters_checked = 0;
};

// Central-difference gradient of the full objective versus the analytic
// gradient, compared per parameter with error |a - n| / max(1, |a|, |n|)
// (the floor keeps round-off noise on near-zero gradients from masquerading
// as relative error).  Callers should pre-filter pairs with
// exclude_kink_pairs.  When analytic_override is given it replaces the
// computed analytic gradient (negative-control hook for the CLI).
FiniteDiffReport finite_diff_check(const ModelState& state, const std::vector<PairLabel>& pairs,
                                   const std::vector<Sample>& samples, double step,
                                   const TrainConfig& cfg,
                                   const Gradients* analytic_override = nullptr);

}  // namespace gsim
