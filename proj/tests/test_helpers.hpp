#pragma once

// Shared generators and reference implementations for the test suites.  The
// reference paths here are deliberately naive -- explicit loops over the full
// (2r+1)x(2r+1) quadratic form, plain selection scans instead of sorts -- so
// they share no code with the library routines they are checking against.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gsim/dataio.hpp"
#include "gsim/rng.hpp"
#include "gsim/simcore.hpp"
#include "gsim/trainer.hpp"

namespace gsim::test {

inline Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    }
    return m;
}

inline Vector random_vector(Rng& rng, int n, double scale = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

inline SimilarityComponents random_components(Rng& rng, int r, double f = -1.9,
                                              double scale = 1.0) {
    SimilarityComponents phi;
    phi.l_a = random_matrix(rng, r, r, scale);
    phi.l_b = random_matrix(rng, r, r, scale);
    phi.l_cx = random_matrix(rng, r, r, scale);
    phi.l_cy = random_matrix(rng, r, r, scale);
    phi.d = random_vector(rng, r, scale);
    phi.e = random_vector(rng, r, scale);
    phi.f = f;
    return phi;
}

inline AffineFusionSpec random_fusion(Rng& rng, int r) {
    AffineFusionSpec spec;
    spec.mu = std::abs(rng.normal());
    spec.lambda = std::abs(rng.normal());
    spec.l_a_m = random_matrix(rng, r, r);
    spec.a_m = random_vector(rng, r);
    spec.l_b_m = random_matrix(rng, r, r);
    spec.b_m = random_vector(rng, r);
    spec.l_a_c = random_matrix(rng, r, r);
    spec.a_c = random_vector(rng, r);
    spec.l_b_c = random_matrix(rng, r, r);
    spec.b_c = random_vector(rng, r);
    return spec;
}

// Symmetric PSD matrix G'G with modest entries.
inline Matrix random_psd(Rng& rng, int r, double scale = 0.5) {
    const Matrix g = random_matrix(rng, r, r, scale);
    return Matrix(g.transpose() * g);
}

// Reference score: assemble the full (2r+1)x(2r+1) matrix over z = [x; y; 1]
// entry by entry and evaluate z'Mz with scalar loops.
inline double big_quadratic(const BlockMatrix& m, const Vector& x, const Vector& y) {
    const int r = m.dim();
    const int n = 2 * r + 1;
    std::vector<std::vector<double>> big(static_cast<std::size_t>(n),
                                         std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            big[i][j] = m.a(i, j);
            big[i][r + j] = m.c(i, j);
            big[r + i][j] = m.c(j, i);
            big[r + i][r + j] = m.b(i, j);
        }
        big[i][2 * r] = m.d(i);
        big[2 * r][i] = m.d(i);
        big[r + i][2 * r] = m.e(i);
        big[2 * r][r + i] = m.e(i);
    }
    big[2 * r][2 * r] = m.f;

    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < r; ++i) {
        z[static_cast<std::size_t>(i)] = x(i);
        z[static_cast<std::size_t>(r + i)] = y(i);
    }
    z[static_cast<std::size_t>(2 * r)] = 1.0;

    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            acc += z[static_cast<std::size_t>(i)] * big[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                   z[static_cast<std::size_t>(j)];
        }
    }
    return acc;
}

// A dataset of random raw vectors with no structure beyond its labels --
// enough for batch generation and gradient checks.
inline Dataset random_dataset(Rng& rng, int num_classes, int nx, int ny, int dim_x, int dim_y) {
    Dataset ds;
    ds.dim_x = dim_x;
    ds.dim_y = dim_y;
    int id = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int k = 0; k < nx; ++k) {
            Sample s;
            s.id = id++;
            s.domain = Domain::X;
            s.class_id = c;
            s.raw = random_vector(rng, dim_x);
            ds.samples.push_back(std::move(s));
        }
        for (int k = 0; k < ny; ++k) {
            Sample s;
            s.id = id++;
            s.domain = Domain::Y;
            s.class_id = c;
            s.raw = random_vector(rng, dim_y);
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

// A model with O(1) activations everywhere: the production init's tiny
// final-layer weights leave the pre-normalization output nearly zero, which
// is exactly where finite differences fight the normalization's curvature.
inline ModelState random_state(const NetShape& shape, double f, Rng& rng) {
    shape.validate();
    ModelState state;
    state.net.normalize_output = shape.normalize_output;
    auto build = [&](const std::vector<LayerSpec>& specs, std::vector<Layer>& out) {
        for (const LayerSpec& spec : specs) {
            Layer layer;
            layer.activation = spec.activation;
            layer.w = random_matrix(rng, spec.out_dim, spec.in_dim, 0.3);
            layer.b = random_vector(rng, spec.out_dim, 0.1);
            out.push_back(std::move(layer));
        }
    };
    build(shape.branch_x, state.net.branch_x);
    build(shape.branch_y, state.net.branch_y);
    build(shape.shared, state.net.shared);
    const int r = state.net.output_dim();
    state.phi = random_components(rng, r, f, 0.3);
    return state;
}

// Small two-hidden-layer shape for gradient and training tests.
inline NetShape tiny_shape(int in_x, int in_y, int hidden, int r, bool normalize = true) {
    NetShape shape;
    shape.branch_x = {{in_x, hidden, Activation::Relu}};
    shape.branch_y = {{in_y, hidden, Activation::Relu}};
    shape.shared = {{hidden, r, Activation::Relu}, {r, r, Activation::Identity}};
    shape.normalize_output = normalize;
    return shape;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

// Largest |a - n| / max(1, |a|, |n|) over every gradient slot, the same
// error measure finite_diff_check reports.
inline double max_grad_rel_error(const Gradients& ga, const Gradients& gb) {
    double worst = 0.0;
    auto scan = [&worst](const Matrix& a, const Matrix& b) {
        for (int i = 0; i < a.rows(); ++i) {
            for (int j = 0; j < a.cols(); ++j) {
                const double err = std::abs(a(i, j) - b(i, j)) /
                                   std::max({1.0, std::abs(a(i, j)), std::abs(b(i, j))});
                worst = std::max(worst, err);
            }
        }
    };
    auto scan_vec = [&worst](const Vector& a, const Vector& b) {
        for (int i = 0; i < a.size(); ++i) {
            const double err = std::abs(a(i) - b(i)) /
                               std::max({1.0, std::abs(a(i)), std::abs(b(i))});
            worst = std::max(worst, err);
        }
    };
    for (std::size_t l = 0; l < ga.net.branch_x.size(); ++l) {
        scan(ga.net.branch_x[l].w, gb.net.branch_x[l].w);
        scan_vec(ga.net.branch_x[l].b, gb.net.branch_x[l].b);
    }
    for (std::size_t l = 0; l < ga.net.branch_y.size(); ++l) {
        scan(ga.net.branch_y[l].w, gb.net.branch_y[l].w);
        scan_vec(ga.net.branch_y[l].b, gb.net.branch_y[l].b);
    }
    for (std::size_t l = 0; l < ga.net.shared.size(); ++l) {
        scan(ga.net.shared[l].w, gb.net.shared[l].w);
        scan_vec(ga.net.shared[l].b, gb.net.shared[l].b);
    }
    scan(ga.phi.l_a, gb.phi.l_a);
    scan(ga.phi.l_b, gb.phi.l_b);
    scan(ga.phi.l_cx, gb.phi.l_cx);
    scan(ga.phi.l_cy, gb.phi.l_cy);
    scan_vec(ga.phi.d, gb.phi.d);
    scan_vec(ga.phi.e, gb.phi.e);
    return worst;
}

}  // namespace gsim::test
