#pragma once

#include "gsim/linalg.hpp"

namespace gsim {

/// Offset term of the similarity measure. Held fixed during training; the
/// value only affects how fast learning converges, not matching quality.
inline constexpr double kDefaultOffset = -1.9;

/// Factorized parameter set (L_A, L_B, L_Cx, L_Cy, d, e, f) of the
/// generalized similarity measure
///
///   S(x, y) = ||L_A x||^2 + ||L_B y||^2 + 2 d'x
///           - 2 (L_Cx x)'(L_Cy y) + 2 e'y + f.
///
/// The factorization keeps the assembled self-correlation blocks positive
/// semi-definite with no projection step, so all four matrices are
/// unconstrained during optimization. Lower scores mean more similar.
struct SimilarityComponents {
    Matrix l_a;    // r x r, x-domain self term
    Matrix l_b;    // r x r, y-domain self term
    Matrix l_cx;   // r x r, x side of the cross term
    Matrix l_cy;   // r x r, y side of the cross term
    Vector d;      // r, x-domain affine term
    Vector e;      // r, y-domain affine term
    double f = kDefaultOffset;  // fixed offset, not trained

    int dim() const { return static_cast<int>(l_a.rows()); }

    /// All-zero components of dimension r (score is identically `f`).
    static SimilarityComponents zero(int r, double f = kDefaultOffset);

    /// Throws ValidationError unless all blocks are r x r / length r and finite.
    void validate() const;
};

/// The assembled (A, B, C, d, e, f) quadratic form over [x; y; 1]:
///
///   S(x, y) = [x' y' 1] [ A  C  d ] [x]
///                       [ C' B  e ] [y]
///                       [ d' e' f ] [1]
///
/// A and B are symmetric positive semi-definite; C is unconstrained.
struct BlockMatrix {
    Matrix a;
    Matrix b;
    Matrix c;
    Vector d;
    Vector e;
    double f = 0.0;

    int dim() const { return static_cast<int>(a.rows()); }

    /// Checks shapes, finiteness, symmetry and PSD of a and b
    /// (eigenvalues >= -1e-10). Throws ValidationError on violation.
    void validate() const;
};

/// Weighted fusion of an affine Mahalanobis distance and an affine Cosine
/// similarity:  S = mu * D_M - lambda * S_I  with mu, lambda >= 0.
///
/// (l_a_m, a_m) and (l_b_m, b_m) are the Mahalanobis affine maps for the
/// two domains; (l_a_c, a_c) and (l_b_c, b_c) the Cosine ones.
struct AffineFusionSpec {
    double mu = 1.0;
    double lambda = 1.0;
    Matrix l_a_m;
    Vector a_m;
    Matrix l_b_m;
    Vector b_m;
    Matrix l_a_c;
    Vector a_c;
    Matrix l_b_c;
    Vector b_c;

    int dim() const { return static_cast<int>(l_a_m.rows()); }

    void validate() const;
};

/// Per-sample similarity components, laid out as
///
///   [ L * feature (r) | L_C * feature (r) | shift . feature (1) ]
///
/// where (L, L_C, shift) is (l_a, l_cx, d) for domain X and
/// (l_b, l_cy, e) for domain Y. Caching this vector per gallery sample
/// makes matching a handful of dot products.
struct ProjectedComponents {
    Vector values;  // length 2r + 1

    int dim() const { return static_cast<int>((values.size() - 1) / 2); }

    /// The three slices.
    auto self_part() const { return values.head(dim()); }
    auto cross_part() const { return values.segment(dim(), dim()); }
    double shift_part() const { return values(values.size() - 1); }
};

/// Factorized-form score. Asymmetric: swapping fx and fy generally changes
/// the value because the components are domain-specific.
double score_factorized(const SimilarityComponents& phi, const Vector& fx, const Vector& fy);

/// Assembles the block form: a = l_a'l_a, b = l_b'l_b, c = -l_cx'l_cy,
/// with d, e, f copied. a and b are PSD by construction.
BlockMatrix assemble_block(const SimilarityComponents& phi);

/// Block-form score: x'Ax + y'By + 2x'Cy + 2d'x + 2e'y + f.
double score_block(const BlockMatrix& m, const Vector& x, const Vector& y);

/// Affine Mahalanobis distance ||(L_A x + a) - (L_B y + b)||^2. Always >= 0.
double affine_mahalanobis(const AffineFusionSpec& spec, const Vector& x, const Vector& y);

/// Affine Cosine similarity (L_A x + a)'(L_B y + b) (the Cosine pair of maps).
double affine_cosine(const AffineFusionSpec& spec, const Vector& x, const Vector& y);

/// Forward composition of the fusion: returns the BlockMatrix whose score
/// equals mu * affine_mahalanobis - lambda * affine_cosine for all x, y.
/// Throws ValidationError when mu or lambda is negative.
BlockMatrix compose_from_affine(const AffineFusionSpec& spec);

/// Locally-adaptive decision function F(x,y) = x'Ax + y'Ay + 2x'Cy
/// + d'(x+y) + f as a BlockMatrix (b = a, shared linear term). The block
/// vector slots store d/2 so that score_block reproduces the single-d'(x+y)
/// linear term exactly. Requires a symmetric PSD.
BlockMatrix make_ladf(const Matrix& a, const Matrix& c, const Vector& d, double f);

/// Joint Bayesian decision function J(x,y) = x'Ax + y'Ay - 2x'Gy as a
/// BlockMatrix (b = a, c = -g, no affine terms). Requires a symmetric PSD.
BlockMatrix make_joint_bayesian(const Matrix& a, const Matrix& g);

/// Projects one feature vector onto its per-sample similarity components.
ProjectedComponents project_components(const SimilarityComponents& phi, const Vector& feature,
                                       Domain domain);

/// Score from two cached projections:
///   |px_self|^2 + |py_self|^2 - 2 px_cross . py_cross
///   + 2 px_shift + 2 py_shift + f.
/// Equals score_factorized on the originating features.
double score_projected(const ProjectedComponents& px, const ProjectedComponents& py, double f);

/// Sum of squares of every trainable entry (the four factor matrices and the
/// two shift vectors); the fixed offset f is excluded. This is the quantity
/// the trainer regularizes.
double factor_squared_norm(const SimilarityComponents& phi);

}  // namespace gsim
