#include "gsim/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "gsim/rng.hpp"

namespace gsim {

namespace {

// Scale of the rotation matrices the similarity factors start from.  Around
// 1 the initial scores span a few units on unit-norm features, which keeps
// most hinge terms active without saturating them; slightly under 1 proved
// the most reliable across seeds.
constexpr double kFactorInitGain = 0.8;

// Distinct samples of a batch, each forwarded and projected exactly once.
struct BatchForward {
    std::vector<int> indices;  // ascending sample indices
    std::vector<int> slot_of;  // sample index -> position in indices, or -1
    std::vector<ForwardTape> tapes;
    std::vector<ProjectedComponents> projections;

    int slot(int sample_index) const { return slot_of[sample_index]; }
};

void validate_pairs(const std::vector<PairLabel>& pairs, const std::vector<Sample>& samples) {
    const int n = static_cast<int>(samples.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const PairLabel& pair = pairs[p];
        if (pair.i < 0 || pair.i >= n || pair.j < 0 || pair.j >= n) {
            throw ValidationError("pair " + std::to_string(p) + " references sample indices (" +
                                  std::to_string(pair.i) + ", " + std::to_string(pair.j) +
                                  ") outside the sample list of size " + std::to_string(n));
        }
        if (samples[pair.i].domain != Domain::X) {
            throw ValidationError("pair " + std::to_string(p) + ": sample " +
                                  std::to_string(pair.i) + " is not from domain X");
        }
        if (samples[pair.j].domain != Domain::Y) {
            throw ValidationError("pair " + std::to_string(p) + ": sample " +
                                  std::to_string(pair.j) + " is not from domain Y");
        }
        if (pair.ell != -1 && pair.ell != 1) {
            throw ValidationError("pair " + std::to_string(p) + " has label " +
                                  std::to_string(pair.ell) + "; labels must be -1 or +1");
        }
    }
}

BatchForward forward_distinct(const ModelState& state, const std::vector<PairLabel>& pairs,
                              const std::vector<Sample>& samples, bool want_tapes) {
    validate_pairs(pairs, samples);
    BatchForward fw;
    fw.slot_of.assign(samples.size(), -1);
    std::vector<char> seen(samples.size(), 0);
    for (const PairLabel& pair : pairs) {
        seen[pair.i] = 1;
        seen[pair.j] = 1;
    }
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (seen[k]) {
            fw.slot_of[k] = static_cast<int>(fw.indices.size());
            fw.indices.push_back(static_cast<int>(k));
        }
    }
    fw.tapes.resize(want_tapes ? fw.indices.size() : 0);
    fw.projections.reserve(fw.indices.size());
    for (std::size_t s = 0; s < fw.indices.size(); ++s) {
        const Sample& sample = samples[fw.indices[s]];
        ForwardTape local;
        ForwardTape* tape = want_tapes ? &fw.tapes[s] : &local;
        const Vector feature = forward(state.net, sample.raw, sample.domain, tape);
        fw.projections.push_back(project_components(state.phi, feature, sample.domain));
    }
    return fw;
}

// Per-slot cotangents on the projected components plus the summed hinge loss.
struct CotangentResult {
    std::vector<Vector> cotangents;
    double loss_sum = 0.0;
};

CotangentResult accumulate_cotangents(const ModelState& state, const BatchForward& fw,
                                      const std::vector<PairLabel>& pairs) {
    const int r = state.phi.dim();
    CotangentResult out;
    out.cotangents.assign(fw.indices.size(), Vector::Zero(2 * r + 1));
    for (const PairLabel& pair : pairs) {
        const ProjectedComponents& px = fw.projections[fw.slot(pair.i)];
        const ProjectedComponents& py = fw.projections[fw.slot(pair.j)];
        const double score = score_projected(px, py, state.phi.f);
        out.loss_sum += hinge_loss(score, pair.ell);
        if (pair.ell * score >= 1.0) continue;  // margin satisfied, no gradient
        const double k = -2.0 * pair.ell;
        Vector& cx = out.cotangents[fw.slot(pair.i)];
        Vector& cy = out.cotangents[fw.slot(pair.j)];
        // d(score)/d(px) = 2 [px_self; -py_cross; 1] and symmetrically for py.
        cx.head(r) += k * px.values.head(r);
        cx.segment(r, r) -= k * py.values.segment(r, r);
        cx(2 * r) += k;
        cy.head(r) += k * py.values.head(r);
        cy.segment(r, r) -= k * px.values.segment(r, r);
        cy(2 * r) += k;
    }
    return out;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError(std::string("gradient shape mismatch for ") + what);
    }
}

void require_same_shape(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string("gradient shape mismatch for ") + what);
    }
}

void check_grad_shapes(const ModelState& state, const Gradients& grads) {
    require_same_shape(state.phi.l_a, grads.phi.l_a, "phi.l_a");
    require_same_shape(state.phi.l_b, grads.phi.l_b, "phi.l_b");
    require_same_shape(state.phi.l_cx, grads.phi.l_cx, "phi.l_cx");
    require_same_shape(state.phi.l_cy, grads.phi.l_cy, "phi.l_cy");
    require_same_shape(state.phi.d, grads.phi.d, "phi.d");
    require_same_shape(state.phi.e, grads.phi.e, "phi.e");
    auto check_part = [](const std::vector<Layer>& layers, const std::vector<LayerGrad>& gl,
                         const char* what) {
        if (layers.size() != gl.size()) {
            throw ValidationError(std::string("gradient layer count mismatch for ") + what);
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            require_same_shape(layers[i].w, gl[i].w, what);
            require_same_shape(layers[i].b, gl[i].b, what);
        }
    };
    check_part(state.net.branch_x, grads.net.branch_x, "branch_x");
    check_part(state.net.branch_y, grads.net.branch_y, "branch_y");
    check_part(state.net.shared, grads.net.shared, "shared");
}

}  // namespace

std::string variant_name(SimilarityVariant variant) {
    switch (variant) {
        case SimilarityVariant::Generalized: return "generalized";
        case SimilarityVariant::AffineEuclidean: return "affine_euclidean";
        case SimilarityVariant::AffineCosine: return "affine_cosine";
    }
    throw ValidationError("unknown similarity variant");
}

SimilarityVariant parse_variant(const std::string& name) {
    if (name == "generalized") return SimilarityVariant::Generalized;
    if (name == "affine_euclidean") return SimilarityVariant::AffineEuclidean;
    if (name == "affine_cosine") return SimilarityVariant::AffineCosine;
    throw ValidationError("unknown similarity variant '" + name +
                          "' (expected generalized, affine_euclidean, or affine_cosine)");
}

void BatchScheme::validate() const {
    if (k_hat <= 0) throw ValidationError("batch scheme: k_hat must be positive");
    if (o1 <= 0) throw ValidationError("batch scheme: o1 must be positive");
    if (o2 <= 0) throw ValidationError("batch scheme: o2 must be positive");
    if (pairs_per_anchor <= 0) {
        throw ValidationError("batch scheme: pairs_per_anchor must be positive");
    }
    if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) {
        throw ValidationError("batch scheme: positive_fraction must lie in [0, 1]");
    }
    const double positives = positive_fraction * pairs_per_anchor;
    if (std::abs(positives - std::round(positives)) > 1e-9) {
        throw ValidationError("batch scheme: positive_fraction * pairs_per_anchor must be an "
                              "integer, got " + std::to_string(positives));
    }
}

void TrainConfig::validate() const {
    // The contract nominally wants learning_rate and iterations strictly
    // positive, but zero is accepted for both: T = 0 means "return the
    // initial state" and a zero rate freezes the parameters, and both are
    // useful probes for tests and dry runs.
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("learning_rate must be finite and >= 0");
    }
    if (!(reg_w >= 0.0) || !std::isfinite(reg_w)) {
        throw ValidationError("reg_w must be finite and >= 0");
    }
    if (!(reg_phi >= 0.0) || !std::isfinite(reg_phi)) {
        throw ValidationError("reg_phi must be finite and >= 0");
    }
    if (iterations < 0) throw ValidationError("iterations must be >= 0");
    if (!std::isfinite(f)) throw ValidationError("f must be finite");
    scheme.validate();
}

void ModelState::validate() const {
    net.validate();
    phi.validate();
    if (net.output_dim() != phi.dim()) {
        throw ValidationError("feature net output dimension " + std::to_string(net.output_dim()) +
                              " does not match similarity dimension " + std::to_string(phi.dim()));
    }
}

SimGradients SimGradients::zero(int r) {
    SimGradients g;
    g.l_a = Matrix::Zero(r, r);
    g.l_b = Matrix::Zero(r, r);
    g.l_cx = Matrix::Zero(r, r);
    g.l_cy = Matrix::Zero(r, r);
    g.d = Vector::Zero(r);
    g.e = Vector::Zero(r);
    return g;
}

Gradients Gradients::zeros_like(const ModelState& state) {
    Gradients g;
    g.net = NetGradients::zeros_like(state.net);
    g.phi = SimGradients::zero(state.phi.dim());
    return g;
}

double hinge_loss(double score, int ell) {
    return std::max(0.0, 1.0 - ell * score);
}

double objective(const ModelState& state, const std::vector<PairLabel>& pairs,
                 const std::vector<Sample>& samples, const TrainConfig& cfg) {
    const BatchForward fw = forward_distinct(state, pairs, samples, /*want_tapes=*/false);
    double loss = 0.0;
    for (const PairLabel& pair : pairs) {
        const double score = score_projected(fw.projections[fw.slot(pair.i)],
                                             fw.projections[fw.slot(pair.j)], state.phi.f);
        loss += hinge_loss(score, pair.ell);
    }
    return loss + cfg.reg_w * weight_squared_norm(state.net) +
           cfg.reg_phi * factor_squared_norm(state.phi);
}

std::vector<PairLabel> generate_batch(const Dataset& dataset, const BatchScheme& scheme,
                                      std::uint64_t seed) {
    scheme.validate();
    const int n_pos_d = static_cast<int>(std::llround(scheme.positive_fraction *
                                                      scheme.pairs_per_anchor));
    const int n_neg_d = scheme.pairs_per_anchor - n_pos_d;

    std::vector<int> classes = dataset.class_ids();
    if (static_cast<int>(classes.size()) < scheme.k_hat) {
        throw ValidationError("batch needs " + std::to_string(scheme.k_hat) +
                              " classes but the dataset has " + std::to_string(classes.size()));
    }
    if (n_neg_d > 0 && scheme.k_hat < 2) {
        throw ValidationError("negative pairs need at least 2 classes per batch, k_hat is " +
                              std::to_string(scheme.k_hat));
    }

    Rng rng(seed);
    // Partial Fisher-Yates: the first k_hat entries become the selection.
    for (int t = 0; t < scheme.k_hat; ++t) {
        const int swap_with = t + rng.uniform_int(0, static_cast<int>(classes.size()) - 1 - t);
        std::swap(classes[t], classes[swap_with]);
    }
    classes.resize(scheme.k_hat);

    auto pick_members = [&](int class_id, Domain domain, int want) {
        std::vector<int> members = dataset.members(class_id, domain);
        if (static_cast<int>(members.size()) < want) {
            throw ValidationError("class " + std::to_string(class_id) + " has " +
                                  std::to_string(members.size()) + " " + domain_name(domain) +
                                  "-samples but the batch scheme needs " + std::to_string(want));
        }
        for (int t = 0; t < want; ++t) {
            const int swap_with = t + rng.uniform_int(0, static_cast<int>(members.size()) - 1 - t);
            std::swap(members[t], members[swap_with]);
        }
        members.resize(want);
        return members;
    };

    std::vector<std::vector<int>> chosen_x(scheme.k_hat), chosen_y(scheme.k_hat);
    for (int c = 0; c < scheme.k_hat; ++c) {
        chosen_x[c] = pick_members(classes[c], Domain::X, scheme.o1);
        chosen_y[c] = pick_members(classes[c], Domain::Y, scheme.o2);
    }

    std::vector<PairLabel> pairs;
    pairs.reserve(static_cast<std::size_t>(scheme.pairs_per_batch()));
    for (int c = 0; c < scheme.k_hat; ++c) {
        for (int anchor : chosen_x[c]) {
            for (int p = 0; p < n_pos_d; ++p) {
                const int y = chosen_y[c][rng.uniform_int(0, scheme.o2 - 1)];
                pairs.push_back({anchor, y, -1});
            }
            for (int p = 0; p < n_neg_d; ++p) {
                int other = rng.uniform_int(0, scheme.k_hat - 2);
                if (other >= c) ++other;  // skip the anchor's own class
                const int y = chosen_y[other][rng.uniform_int(0, scheme.o2 - 1)];
                pairs.push_back({anchor, y, +1});
            }
        }
    }
    return pairs;
}

SampleCotangents sample_activation_gradients(const ModelState& state,
                                             const std::vector<PairLabel>& pairs,
                                             const std::vector<Sample>& samples) {
    const BatchForward fw = forward_distinct(state, pairs, samples, /*want_tapes=*/false);
    CotangentResult cot = accumulate_cotangents(state, fw, pairs);
    SampleCotangents out;
    out.sample_indices = fw.indices;
    out.cotangents = std::move(cot.cotangents);
    return out;
}

Gradients sample_gradient(const ModelState& state, const std::vector<PairLabel>& pairs,
                          const std::vector<Sample>& samples, double* mean_loss) {
    const int r = state.phi.dim();
    const BatchForward fw = forward_distinct(state, pairs, samples, /*want_tapes=*/true);
    const CotangentResult cot = accumulate_cotangents(state, fw, pairs);

    Gradients grads = Gradients::zeros_like(state);
    for (std::size_t s = 0; s < fw.indices.size(); ++s) {
        const Vector& c = cot.cotangents[s];
        if ((c.array() == 0.0).all()) continue;  // no active pair touched this sample
        const auto g_self = c.head(r);
        const auto g_cross = c.segment(r, r);
        const double g_shift = c(2 * r);
        const Vector& h = fw.tapes[s].feature;
        Vector grad_h;
        if (samples[fw.indices[s]].domain == Domain::X) {
            grads.phi.l_a.noalias() += g_self * h.transpose();
            grads.phi.l_cx.noalias() += g_cross * h.transpose();
            grads.phi.d += g_shift * h;
            grad_h = state.phi.l_a.transpose() * g_self + state.phi.l_cx.transpose() * g_cross +
                     g_shift * state.phi.d;
        } else {
            grads.phi.l_b.noalias() += g_self * h.transpose();
            grads.phi.l_cy.noalias() += g_cross * h.transpose();
            grads.phi.e += g_shift * h;
            grad_h = state.phi.l_b.transpose() * g_self + state.phi.l_cy.transpose() * g_cross +
                     g_shift * state.phi.e;
        }
        backward_accumulate(state.net, fw.tapes[s], grad_h, grads.net);
    }
    if (mean_loss) {
        *mean_loss = pairs.empty() ? 0.0 : cot.loss_sum / static_cast<double>(pairs.size());
    }
    return grads;
}

Gradients pair_gradient_oracle(const ModelState& state, const std::vector<PairLabel>& pairs,
                               const std::vector<Sample>& samples, double* mean_loss) {
    validate_pairs(pairs, samples);
    Gradients grads = Gradients::zeros_like(state);
    double loss_sum = 0.0;
    for (const PairLabel& pair : pairs) {
        ForwardTape tape_x, tape_y;
        const Vector hx = forward(state.net, samples[pair.i].raw, Domain::X, &tape_x);
        const Vector hy = forward(state.net, samples[pair.j].raw, Domain::Y, &tape_y);
        const double score = score_factorized(state.phi, hx, hy);
        loss_sum += hinge_loss(score, pair.ell);
        if (pair.ell * score >= 1.0) continue;
        const double k = -2.0 * pair.ell;
        const Vector la_hx = state.phi.l_a * hx;
        const Vector lb_hy = state.phi.l_b * hy;
        const Vector lcx_hx = state.phi.l_cx * hx;
        const Vector lcy_hy = state.phi.l_cy * hy;
        grads.phi.l_a.noalias() += k * la_hx * hx.transpose();
        grads.phi.l_b.noalias() += k * lb_hy * hy.transpose();
        grads.phi.l_cx.noalias() -= k * lcy_hy * hx.transpose();
        grads.phi.l_cy.noalias() -= k * lcx_hx * hy.transpose();
        grads.phi.d += k * hx;
        grads.phi.e += k * hy;
        const Vector grad_hx =
            k * (state.phi.l_a.transpose() * la_hx + state.phi.d -
                 state.phi.l_cx.transpose() * lcy_hy);
        const Vector grad_hy =
            k * (state.phi.l_b.transpose() * lb_hy + state.phi.e -
                 state.phi.l_cy.transpose() * lcx_hx);
        backward_accumulate(state.net, tape_x, grad_hx, grads.net);
        backward_accumulate(state.net, tape_y, grad_hy, grads.net);
    }
    if (mean_loss) {
        *mean_loss = pairs.empty() ? 0.0 : loss_sum / static_cast<double>(pairs.size());
    }
    return grads;
}

void sgd_step(ModelState& state, const Gradients& grads, const TrainConfig& cfg) {
    cfg.validate();
    check_grad_shapes(state, grads);
    const double a = cfg.learning_rate;
    const double rp = cfg.reg_phi;

    auto step_mat = [a](Matrix& theta, const Matrix& g, double reg) {
        theta -= a * (g + 2.0 * reg * theta);
    };
    auto step_vec = [a](Vector& theta, const Vector& g, double reg) {
        theta -= a * (g + 2.0 * reg * theta);
    };

    switch (cfg.variant) {
        case SimilarityVariant::Generalized:
            step_mat(state.phi.l_a, grads.phi.l_a, rp);
            step_mat(state.phi.l_b, grads.phi.l_b, rp);
            step_mat(state.phi.l_cx, grads.phi.l_cx, rp);
            step_mat(state.phi.l_cy, grads.phi.l_cy, rp);
            step_vec(state.phi.d, grads.phi.d, rp);
            step_vec(state.phi.e, grads.phi.e, rp);
            break;
        case SimilarityVariant::AffineEuclidean: {
            // l_cx is tied to l_a and l_cy to l_b: the shared block sees the
            // sum of both gradients (and both regularizer pulls), and the
            // result is written to both slots so they stay bit-identical.
            // d and e are frozen at zero.
            Matrix tied_a = state.phi.l_a;
            tied_a -= a * (grads.phi.l_a + grads.phi.l_cx + 2.0 * rp * state.phi.l_a +
                           2.0 * rp * state.phi.l_cx);
            Matrix tied_b = state.phi.l_b;
            tied_b -= a * (grads.phi.l_b + grads.phi.l_cy + 2.0 * rp * state.phi.l_b +
                           2.0 * rp * state.phi.l_cy);
            state.phi.l_a = tied_a;
            state.phi.l_cx = std::move(tied_a);
            state.phi.l_b = tied_b;
            state.phi.l_cy = std::move(tied_b);
            break;
        }
        case SimilarityVariant::AffineCosine:
            // l_a and l_b are frozen at zero; only the cross and shift
            // blocks learn.
            step_mat(state.phi.l_cx, grads.phi.l_cx, rp);
            step_mat(state.phi.l_cy, grads.phi.l_cy, rp);
            step_vec(state.phi.d, grads.phi.d, rp);
            step_vec(state.phi.e, grads.phi.e, rp);
            break;
    }

    auto step_layers = [&](std::vector<Layer>& layers, const std::vector<LayerGrad>& gl) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            step_mat(layers[i].w, gl[i].w, cfg.reg_w);
            step_vec(layers[i].b, gl[i].b, cfg.reg_w);
        }
    };
    step_layers(state.net.branch_x, grads.net.branch_x);
    step_layers(state.net.branch_y, grads.net.branch_y);
    step_layers(state.net.shared, grads.net.shared);
    // f is fixed by design and never updated.
}

ModelState init_state(const NetShape& net_shape, const TrainConfig& cfg) {
    cfg.validate();
    net_shape.validate();
    ModelState state;
    state.net = init_weights(net_shape, mix_seed(cfg.seed, 0));
    const int r = state.net.output_dim();

    // Factor matrices start as independent scaled rotations (QR of a Gaussian
    // draw, sign-fixed so the result is unique) rather than small Gaussians.
    // Zero is a stationary point of the factor parameterization, and a tiny
    // Gaussian start leaves the initial score dominated by the offset terms,
    // whose early gradients are identical across samples and collapse the
    // factors onto a rank-1 direction.  Scaled rotations make the initial
    // score a rotated inner product between the unit-norm features, so every
    // sample contributes a distinct, full-rank pull from the first step.  The
    // offsets d and e start at zero for the same reason; they pick up
    // whatever calibration the data demands once the factors differentiate.
    Rng rng(mix_seed(cfg.seed, 1));
    auto rotation = [&rng, r]() {
        Matrix g(r, r);
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) g(i, j) = rng.normal();
        }
        Eigen::HouseholderQR<Matrix> qr(g);
        Matrix q = qr.householderQ();
        const Matrix rm = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < r; ++i) {
            if (rm(i, i) < 0) q.col(i) = -q.col(i);
        }
        return Matrix(kFactorInitGain * q);
    };
    state.phi.l_a = rotation();
    state.phi.l_b = rotation();
    state.phi.l_cx = rotation();
    state.phi.l_cy = rotation();
    state.phi.d = Vector::Zero(r);
    state.phi.e = Vector::Zero(r);
    state.phi.f = cfg.f;

    switch (cfg.variant) {
        case SimilarityVariant::Generalized:
            break;
        case SimilarityVariant::AffineEuclidean:
            state.phi.l_cx = state.phi.l_a;
            state.phi.l_cy = state.phi.l_b;
            state.phi.d.setZero();
            state.phi.e.setZero();
            break;
        case SimilarityVariant::AffineCosine:
            state.phi.l_a.setZero();
            state.phi.l_b.setZero();
            break;
    }
    return state;
}

TrainResult train(const Dataset& dataset, const NetShape& net_shape, const TrainConfig& cfg) {
    TrainResult out;
    out.state = init_state(net_shape, cfg);
    out.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));
    for (int t = 0; t < cfg.iterations; ++t) {
        const std::vector<PairLabel> batch =
            generate_batch(dataset, cfg.scheme, mix_seed(cfg.seed, 2 + static_cast<std::uint64_t>(t)));
        double mean_loss = 0.0;
        const Gradients grads = sample_gradient(out.state, batch, dataset.samples, &mean_loss);
        if (!std::isfinite(mean_loss)) {
            throw ValidationError("training aborted: mean batch loss became non-finite at "
                                  "iteration " + std::to_string(t + 1));
        }
        out.loss_trace.push_back(mean_loss);
        sgd_step(out.state, grads, cfg);
    }
    return out;
}

std::vector<PairLabel> exclude_kink_pairs(const ModelState& state,
                                          const std::vector<PairLabel>& pairs,
                                          const std::vector<Sample>& samples, double step) {
    if (!(step > 0.0)) throw ValidationError("step must be positive");
    const BatchForward fw = forward_distinct(state, pairs, samples, /*want_tapes=*/false);
    std::vector<PairLabel> kept;
    kept.reserve(pairs.size());
    for (const PairLabel& pair : pairs) {
        const double score = score_projected(fw.projections[fw.slot(pair.i)],
                                             fw.projections[fw.slot(pair.j)], state.phi.f);
        if (std::abs(1.0 - pair.ell * score) >= 10.0 * step) kept.push_back(pair);
    }
    return kept;
}

Gradients objective_gradient(const ModelState& state, const std::vector<PairLabel>& pairs,
                             const std::vector<Sample>& samples, const TrainConfig& cfg) {
    Gradients g = sample_gradient(state, pairs, samples, nullptr);
    auto add_reg_mat = [](Matrix& grad, const Matrix& theta, double reg) {
        grad += 2.0 * reg * theta;
    };
    add_reg_mat(g.phi.l_a, state.phi.l_a, cfg.reg_phi);
    add_reg_mat(g.phi.l_b, state.phi.l_b, cfg.reg_phi);
    add_reg_mat(g.phi.l_cx, state.phi.l_cx, cfg.reg_phi);
    add_reg_mat(g.phi.l_cy, state.phi.l_cy, cfg.reg_phi);
    g.phi.d += 2.0 * cfg.reg_phi * state.phi.d;
    g.phi.e += 2.0 * cfg.reg_phi * state.phi.e;
    auto add_reg_layers = [&](std::vector<LayerGrad>& gl, const std::vector<Layer>& layers) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            gl[i].w += 2.0 * cfg.reg_w * layers[i].w;
            gl[i].b += 2.0 * cfg.reg_w * layers[i].b;
        }
    };
    add_reg_layers(g.net.branch_x, state.net.branch_x);
    add_reg_layers(g.net.branch_y, state.net.branch_y);
    add_reg_layers(g.net.shared, state.net.shared);
    return g;
}

FiniteDiffReport finite_diff_check(const ModelState& state, const std::vector<PairLabel>& pairs,
                                   const std::vector<Sample>& samples, double step,
                                   const TrainConfig& cfg, const Gradients* analytic_override) {
    if (!(step > 0.0)) throw ValidationError("step must be positive");

    Gradients analytic;
    if (analytic_override) {
        analytic = *analytic_override;
        check_grad_shapes(state, analytic);
    } else {
        analytic = objective_gradient(state, pairs, samples, cfg);
    }

    ModelState probe = state;
    FiniteDiffReport report;
    auto check_scalar = [&](double& theta, double analytic_value, auto&& name_fn) {
        const double saved = theta;
        theta = saved + step;
        const double plus = objective(probe, pairs, samples, cfg);
        theta = saved - step;
        const double minus = objective(probe, pairs, samples, cfg);
        theta = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        // Floored relative error: near-zero gradients are compared on an
        // absolute scale so central-difference round-off does not register
        // as huge relative error.
        const double err = std::abs(analytic_value - numeric) /
                           std::max({1.0, std::abs(analytic_value), std::abs(numeric)});
        ++report.parameters_checked;
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.argmax_param = name_fn();
            report.analytic_at_max = analytic_value;
            report.numeric_at_max = numeric;
        }
    };
    auto check_matrix = [&](Matrix& theta, const Matrix& grad, const std::string& label) {
        for (Eigen::Index i = 0; i < theta.rows(); ++i) {
            for (Eigen::Index j = 0; j < theta.cols(); ++j) {
                check_scalar(theta(i, j), grad(i, j), [&] {
                    return label + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
                });
            }
        }
    };
    auto check_vector = [&](Vector& theta, const Vector& grad, const std::string& label) {
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            check_scalar(theta(i), grad(i),
                         [&] { return label + "[" + std::to_string(i) + "]"; });
        }
    };
    auto check_layers = [&](std::vector<Layer>& layers, const std::vector<LayerGrad>& gl,
                            const std::string& part) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            check_matrix(layers[i].w, gl[i].w, part + ".w" + std::to_string(i));
            check_vector(layers[i].b, gl[i].b, part + ".b" + std::to_string(i));
        }
    };

    check_layers(probe.net.branch_x, analytic.net.branch_x, "branch_x");
    check_layers(probe.net.branch_y, analytic.net.branch_y, "branch_y");
    check_layers(probe.net.shared, analytic.net.shared, "shared");
    check_matrix(probe.phi.l_a, analytic.phi.l_a, "phi.l_a");
    check_matrix(probe.phi.l_b, analytic.phi.l_b, "phi.l_b");
    check_matrix(probe.phi.l_cx, analytic.phi.l_cx, "phi.l_cx");
    check_matrix(probe.phi.l_cy, analytic.phi.l_cy, "phi.l_cy");
    check_vector(probe.phi.d, analytic.phi.d, "phi.d");
    check_vector(probe.phi.e, analytic.phi.e, "phi.e");
    return report;
}

}  // namespace gsim
