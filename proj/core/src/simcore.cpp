#include "gsim/simcore.hpp"

#include <Eigen/Eigenvalues>

namespace gsim {

namespace {

constexpr double kPsdTolerance = 1e-10;

void require_square(const Matrix& m, int r, const std::string& what) {
    require_shape(m, r, r, what);
}

void require_symmetric_psd(const Matrix& m, const std::string& what) {
    if (m.rows() != m.cols()) {
        throw ValidationError(what + " is not square: " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    require_finite(m, what);
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kPsdTolerance * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        throw ValidationError(what + " is not symmetric (max asymmetry " + std::to_string(asym) +
                              ")");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -kPsdTolerance) {
        throw ValidationError(what + " is not positive semi-definite (min eigenvalue " +
                              std::to_string(min_eig) + ")");
    }
}

}  // namespace

SimilarityComponents SimilarityComponents::zero(int r, double f) {
    if (r <= 0) throw ValidationError("SimilarityComponents dimension must be positive");
    SimilarityComponents phi;
    phi.l_a = Matrix::Zero(r, r);
    phi.l_b = Matrix::Zero(r, r);
    phi.l_cx = Matrix::Zero(r, r);
    phi.l_cy = Matrix::Zero(r, r);
    phi.d = Vector::Zero(r);
    phi.e = Vector::Zero(r);
    phi.f = f;
    return phi;
}

void SimilarityComponents::validate() const {
    const int r = dim();
    if (r <= 0) throw ValidationError("SimilarityComponents dimension must be positive");
    require_square(l_a, r, "l_a");
    require_square(l_b, r, "l_b");
    require_square(l_cx, r, "l_cx");
    require_square(l_cy, r, "l_cy");
    require_length(d, r, "d");
    require_length(e, r, "e");
    require_finite(l_a, "l_a");
    require_finite(l_b, "l_b");
    require_finite(l_cx, "l_cx");
    require_finite(l_cy, "l_cy");
    require_finite(d, "d");
    require_finite(e, "e");
    if (!std::isfinite(f)) throw ValidationError("f is not finite");
}

void BlockMatrix::validate() const {
    const int r = dim();
    if (r <= 0) throw ValidationError("BlockMatrix dimension must be positive");
    require_symmetric_psd(a, "a");
    require_symmetric_psd(b, "b");
    require_square(c, r, "c");
    require_finite(c, "c");
    require_length(d, r, "d");
    require_length(e, r, "e");
    require_finite(d, "d");
    require_finite(e, "e");
    if (!std::isfinite(f)) throw ValidationError("f is not finite");
}

void AffineFusionSpec::validate() const {
    const int r = dim();
    if (r <= 0) throw ValidationError("AffineFusionSpec dimension must be positive");
    if (!(mu >= 0.0)) throw ValidationError("mu must be >= 0");
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    require_square(l_a_m, r, "l_a_m");
    require_square(l_b_m, r, "l_b_m");
    require_square(l_a_c, r, "l_a_c");
    require_square(l_b_c, r, "l_b_c");
    require_length(a_m, r, "a_m");
    require_length(b_m, r, "b_m");
    require_length(a_c, r, "a_c");
    require_length(b_c, r, "b_c");
}

double score_factorized(const SimilarityComponents& phi, const Vector& fx, const Vector& fy) {
    const int r = phi.dim();
    require_length(fx, r, "fx");
    require_length(fy, r, "fy");
    const double self_x = (phi.l_a * fx).squaredNorm();
    const double self_y = (phi.l_b * fy).squaredNorm();
    const double cross = (phi.l_cx * fx).dot(phi.l_cy * fy);
    return self_x + self_y + 2.0 * phi.d.dot(fx) - 2.0 * cross + 2.0 * phi.e.dot(fy) + phi.f;
}

BlockMatrix assemble_block(const SimilarityComponents& phi) {
    phi.validate();
    BlockMatrix m;
    m.a = phi.l_a.transpose() * phi.l_a;
    m.b = phi.l_b.transpose() * phi.l_b;
    m.c = -(phi.l_cx.transpose() * phi.l_cy);
    m.d = phi.d;
    m.e = phi.e;
    m.f = phi.f;
    return m;
}

double score_block(const BlockMatrix& m, const Vector& x, const Vector& y) {
    const int r = m.dim();
    require_length(x, r, "x");
    require_length(y, r, "y");
    return x.dot(m.a * x) + y.dot(m.b * y) + 2.0 * x.dot(m.c * y) + 2.0 * m.d.dot(x) +
           2.0 * m.e.dot(y) + m.f;
}

double affine_mahalanobis(const AffineFusionSpec& spec, const Vector& x, const Vector& y) {
    const int r = spec.dim();
    require_length(x, r, "x");
    require_length(y, r, "y");
    return ((spec.l_a_m * x + spec.a_m) - (spec.l_b_m * y + spec.b_m)).squaredNorm();
}

double affine_cosine(const AffineFusionSpec& spec, const Vector& x, const Vector& y) {
    const int r = spec.dim();
    require_length(x, r, "x");
    require_length(y, r, "y");
    return (spec.l_a_c * x + spec.a_c).dot(spec.l_b_c * y + spec.b_c);
}

BlockMatrix compose_from_affine(const AffineFusionSpec& spec) {
    spec.validate();
    const double mu = spec.mu;
    const double lm = spec.lambda;
    const Vector diff = spec.a_m - spec.b_m;
    BlockMatrix m;
    m.a = mu * (spec.l_a_m.transpose() * spec.l_a_m);
    m.b = mu * (spec.l_b_m.transpose() * spec.l_b_m);
    m.c = -mu * (spec.l_a_m.transpose() * spec.l_b_m) -
          0.5 * lm * (spec.l_a_c.transpose() * spec.l_b_c);
    m.d = mu * (spec.l_a_m.transpose() * diff) - 0.5 * lm * (spec.l_a_c.transpose() * spec.b_c);
    m.e = mu * (spec.l_b_m.transpose() * (-diff)) -
          0.5 * lm * (spec.l_b_c.transpose() * spec.a_c);
    m.f = mu * diff.squaredNorm() - lm * spec.a_c.dot(spec.b_c);
    return m;
}

BlockMatrix make_ladf(const Matrix& a, const Matrix& c, const Vector& d, double f) {
    require_symmetric_psd(a, "a");
    const int r = static_cast<int>(a.rows());
    require_square(c, r, "c");
    require_length(d, r, "d");
    BlockMatrix m;
    m.a = a;
    m.b = a;
    m.c = c;
    // The decision function's linear term is d'(x+y); the block expansion
    // contributes 2d'x + 2e'y, so both slots hold half of d.
    m.d = 0.5 * d;
    m.e = 0.5 * d;
    m.f = f;
    return m;
}

BlockMatrix make_joint_bayesian(const Matrix& a, const Matrix& g) {
    require_symmetric_psd(a, "a");
    const int r = static_cast<int>(a.rows());
    require_square(g, r, "g");
    BlockMatrix m;
    m.a = a;
    m.b = a;
    m.c = -g;
    m.d = Vector::Zero(r);
    m.e = Vector::Zero(r);
    m.f = 0.0;
    return m;
}

ProjectedComponents project_components(const SimilarityComponents& phi, const Vector& feature,
                                       Domain domain) {
    const int r = phi.dim();
    require_length(feature, r, "feature");
    ProjectedComponents p;
    p.values.resize(2 * r + 1);
    if (domain == Domain::X) {
        p.values.head(r) = phi.l_a * feature;
        p.values.segment(r, r) = phi.l_cx * feature;
        p.values(2 * r) = phi.d.dot(feature);
    } else {
        p.values.head(r) = phi.l_b * feature;
        p.values.segment(r, r) = phi.l_cy * feature;
        p.values(2 * r) = phi.e.dot(feature);
    }
    return p;
}

double factor_squared_norm(const SimilarityComponents& phi) {
    return phi.l_a.squaredNorm() + phi.l_b.squaredNorm() + phi.l_cx.squaredNorm() +
           phi.l_cy.squaredNorm() + phi.d.squaredNorm() + phi.e.squaredNorm();
}

double score_projected(const ProjectedComponents& px, const ProjectedComponents& py, double f) {
    if (px.values.size() != py.values.size()) {
        throw ValidationError("projected components disagree: px has length " +
                              std::to_string(px.values.size()) + ", py has length " +
                              std::to_string(py.values.size()));
    }
    if (px.values.size() < 3 || px.values.size() % 2 == 0) {
        throw ValidationError("projected components must have odd length 2r+1 >= 3");
    }
    const int r = px.dim();
    const double self_x = px.values.head(r).squaredNorm();
    const double self_y = py.values.head(r).squaredNorm();
    const double cross = px.values.segment(r, r).dot(py.values.segment(r, r));
    return self_x + self_y + 2.0 * px.values(2 * r) - 2.0 * cross + 2.0 * py.values(2 * r) + f;
}

}  // namespace gsim
