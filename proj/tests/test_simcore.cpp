#include "doctest.h"

#include <cmath>

#include "gsim/simcore.hpp"
#include "test_helpers.hpp"

using namespace gsim;
using namespace gsim::test;

TEST_SUITE("simcore") {

TEST_CASE("zero components score their offset") {
    const SimilarityComponents none = SimilarityComponents::zero(4, 0.0);
    Rng rng(11);
    const Vector fx = random_vector(rng, 4);
    Vector fy(4);
    fy << 0.5, -2.0, 3.0, 0.0;
    CHECK(score_factorized(none, fx, fy) == 0.0);

    const SimilarityComponents shifted = SimilarityComponents::zero(4);
    CHECK(score_factorized(shifted, fx, fy) == kDefaultOffset);
}

TEST_CASE("identity blocks, hand expansion") {
    // L_A = L_B = L_Cx = L_Cy = I, d = e = 0, f = 0, fx = e1, fy = 0:
    // S = |fx|^2 + 0 - 0 = 1.
    SimilarityComponents phi = SimilarityComponents::zero(2, 0.0);
    phi.l_a = Matrix::Identity(2, 2);
    phi.l_b = Matrix::Identity(2, 2);
    phi.l_cx = Matrix::Identity(2, 2);
    phi.l_cy = Matrix::Identity(2, 2);
    Vector fx(2), fy(2);
    fx << 1.0, 0.0;
    fy << 0.0, 0.0;
    CHECK(score_factorized(phi, fx, fy) == 1.0);

    // Same setup with fy = e2: cross term is fx . fy = 0, so
    // S = 1 + 1 - 0 = 2; with fy = fx it is 1 + 1 - 2 = 0.
    fy << 0.0, 1.0;
    CHECK(score_factorized(phi, fx, fy) == 2.0);
    CHECK(score_factorized(phi, fx, fx) == 0.0);
}

TEST_CASE("factorized equals the full quadratic form") {
    Rng rng(201);
    for (int r : {1, 4, 16}) {
        for (int trial = 0; trial < 60; ++trial) {
            const SimilarityComponents phi = random_components(rng, r, rng.normal());
            const Vector fx = random_vector(rng, r);
            const Vector fy = random_vector(rng, r);
            const double fact = score_factorized(phi, fx, fy);
            const BlockMatrix block = assemble_block(phi);
            CHECK(std::abs(fact - big_quadratic(block, fx, fy)) <= 1e-10);
            CHECK(std::abs(fact - score_block(block, fx, fy)) <= 1e-10);
        }
    }
}

TEST_CASE("assemble_block computes the documented products") {
    Rng rng(202);
    const int r = 5;
    const SimilarityComponents phi = random_components(rng, r);
    const BlockMatrix m = assemble_block(phi);

    // Entrywise scalar-loop references for A = L_A'L_A and C = -L_Cx'L_Cy.
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            double a_ij = 0.0, b_ij = 0.0, c_ij = 0.0;
            for (int k = 0; k < r; ++k) {
                a_ij += phi.l_a(k, i) * phi.l_a(k, j);
                b_ij += phi.l_b(k, i) * phi.l_b(k, j);
                c_ij -= phi.l_cx(k, i) * phi.l_cy(k, j);
            }
            CHECK(std::abs(m.a(i, j) - a_ij) <= 1e-12);
            CHECK(std::abs(m.b(i, j) - b_ij) <= 1e-12);
            CHECK(std::abs(m.c(i, j) - c_ij) <= 1e-12);
        }
    }
    CHECK(max_abs_diff(m.d, phi.d) == 0.0);
    CHECK(max_abs_diff(m.e, phi.e) == 0.0);
    CHECK(m.f == phi.f);

    SimilarityComponents eye = SimilarityComponents::zero(3, 0.0);
    eye.l_a = Matrix::Identity(3, 3);
    CHECK(max_abs_diff(assemble_block(eye).a, Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("assembled self blocks are positive semi-definite") {
    Rng rng(203);
    for (int trial = 0; trial < 100; ++trial) {
        const int r = 1 + trial % 8;
        const BlockMatrix m = assemble_block(random_components(rng, r));
        for (int k = 0; k < 20; ++k) {
            const Vector x = random_vector(rng, r);
            CHECK(x.dot(m.a * x) >= -1e-10);
            CHECK(x.dot(m.b * x) >= -1e-10);
        }
        m.validate();  // also exercises the eigenvalue-based check
    }
}

TEST_CASE("block form reduces to Mahalanobis and bilinear") {
    Rng rng(204);
    for (int trial = 0; trial < 100; ++trial) {
        const int r = 1 + trial % 6;
        const Vector x = random_vector(rng, r);
        const Vector y = random_vector(rng, r);

        // a = b = M, c = -M: the form collapses to (x-y)'M(x-y).
        BlockMatrix maha;
        maha.a = random_psd(rng, r);
        maha.b = maha.a;
        maha.c = -maha.a;
        maha.d = Vector::Zero(r);
        maha.e = Vector::Zero(r);
        maha.f = 0.0;
        const Vector diff = x - y;
        CHECK(std::abs(score_block(maha, x, y) - diff.dot(maha.a * diff)) <= 1e-12);

        // a = b = 0, c = M/2: the form collapses to x'My (M need not be
        // symmetric here).
        BlockMatrix bilinear;
        const Matrix m = random_matrix(rng, r, r);
        bilinear.a = Matrix::Zero(r, r);
        bilinear.b = Matrix::Zero(r, r);
        bilinear.c = 0.5 * m;
        bilinear.d = Vector::Zero(r);
        bilinear.e = Vector::Zero(r);
        bilinear.f = 0.0;
        CHECK(std::abs(score_block(bilinear, x, y) - x.dot(m * y)) <= 1e-12);
    }
}

TEST_CASE("affine Mahalanobis distance") {
    Rng rng(205);
    const int r = 4;

    AffineFusionSpec spec = random_fusion(rng, r);
    spec.l_a_m = Matrix::Identity(r, r);
    spec.l_b_m = Matrix::Identity(r, r);
    spec.a_m = Vector::Zero(r);
    spec.b_m = Vector::Zero(r);
    Vector x = Vector::Zero(r), y = Vector::Zero(r);
    x(0) = 1.0;
    CHECK(affine_mahalanobis(spec, x, y) == 1.0);

    // Identical maps see identical inputs as distance zero.
    spec = random_fusion(rng, r);
    spec.l_b_m = spec.l_a_m;
    spec.b_m = spec.a_m;
    const Vector z = random_vector(rng, r);
    CHECK(affine_mahalanobis(spec, z, z) <= 1e-24);

    for (int trial = 0; trial < 50; ++trial) {
        const AffineFusionSpec s = random_fusion(rng, r);
        const Vector u = random_vector(rng, r);
        const Vector v = random_vector(rng, r);
        const double dist = affine_mahalanobis(s, u, v);
        CHECK(dist >= 0.0);
        // Scalar-loop reference.
        double acc = 0.0;
        for (int i = 0; i < r; ++i) {
            double lhs = s.a_m(i) - s.b_m(i);
            for (int j = 0; j < r; ++j) lhs += s.l_a_m(i, j) * u(j) - s.l_b_m(i, j) * v(j);
            acc += lhs * lhs;
        }
        CHECK(std::abs(dist - acc) <= 1e-12);
    }
}

TEST_CASE("affine Cosine similarity") {
    Rng rng(206);
    const int r = 4;

    AffineFusionSpec spec = random_fusion(rng, r);
    spec.l_a_c = Matrix::Identity(r, r);
    spec.l_b_c = Matrix::Identity(r, r);
    spec.a_c = Vector::Zero(r);
    spec.b_c = Vector::Zero(r);
    Vector x = Vector::Zero(r), y = Vector::Zero(r);
    x(0) = 1.0;
    y(0) = 1.0;
    CHECK(affine_cosine(spec, x, y) == 1.0);

    // Zero inputs leave only the offsets' inner product.
    spec = random_fusion(rng, r);
    const Vector zero = Vector::Zero(r);
    CHECK(std::abs(affine_cosine(spec, zero, zero) - spec.a_c.dot(spec.b_c)) <= 1e-12);
}

TEST_CASE("fusion composes into one block form") {
    Rng rng(207);

    // mu = 1, lambda = 0, identity Mahalanobis maps: pure squared Euclidean.
    const int r = 3;
    AffineFusionSpec plain = random_fusion(rng, r);
    plain.mu = 1.0;
    plain.lambda = 0.0;
    plain.l_a_m = Matrix::Identity(r, r);
    plain.l_b_m = Matrix::Identity(r, r);
    plain.a_m = Vector::Zero(r);
    plain.b_m = Vector::Zero(r);
    const BlockMatrix euclid = compose_from_affine(plain);
    CHECK(max_abs_diff(euclid.a, Matrix::Identity(r, r)) <= 1e-15);
    CHECK(max_abs_diff(euclid.b, Matrix::Identity(r, r)) <= 1e-15);
    CHECK(max_abs_diff(euclid.c, Matrix(-Matrix::Identity(r, r))) <= 1e-15);
    CHECK(euclid.d.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(euclid.e.cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(euclid.f == 0.0);

    // mu = 0, lambda = 1, identity Cosine maps: score is -x'y.
    AffineFusionSpec inner = random_fusion(rng, r);
    inner.mu = 0.0;
    inner.lambda = 1.0;
    inner.l_a_c = Matrix::Identity(r, r);
    inner.l_b_c = Matrix::Identity(r, r);
    inner.a_c = Vector::Zero(r);
    inner.b_c = Vector::Zero(r);
    const BlockMatrix negdot = compose_from_affine(inner);
    CHECK(max_abs_diff(negdot.c, Matrix(-0.5 * Matrix::Identity(r, r))) <= 1e-15);
    const Vector x = random_vector(rng, r);
    const Vector y = random_vector(rng, r);
    CHECK(std::abs(score_block(negdot, x, y) + x.dot(y)) <= 1e-12);

    // Random specs: the composed form equals the two-term evaluation.
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 8;
        const AffineFusionSpec spec = random_fusion(rng, n);
        const BlockMatrix composed = compose_from_affine(spec);
        composed.validate();  // a, b stay PSD for mu >= 0
        for (int k = 0; k < 20; ++k) {
            const Vector u = random_vector(rng, n);
            const Vector v = random_vector(rng, n);
            const double expected = spec.mu * affine_mahalanobis(spec, u, v) -
                                    spec.lambda * affine_cosine(spec, u, v);
            CHECK(std::abs(score_block(composed, u, v) - expected) <= 1e-10);
        }
    }

    AffineFusionSpec bad = random_fusion(rng, 3);
    bad.mu = -0.25;
    CHECK_THROWS_AS(compose_from_affine(bad), ValidationError);
    bad.mu = 1.0;
    bad.lambda = -1e-9;
    CHECK_THROWS_AS(compose_from_affine(bad), ValidationError);
}

TEST_CASE("locally-adaptive decision function construction") {
    Rng rng(208);
    const int r = 3;

    Vector x(r), y(r);
    x << 1.0, 0.0, 0.0;
    y << 0.0, 1.0, 0.0;
    const BlockMatrix eye = make_ladf(Matrix::Identity(r, r), Matrix::Zero(r, r),
                                      Vector::Zero(r), 0.0);
    CHECK(score_block(eye, x, y) == 2.0);

    const BlockMatrix constant = make_ladf(Matrix::Zero(r, r), Matrix::Zero(r, r),
                                           Vector::Zero(r), 3.0);
    CHECK(score_block(constant, x, y) == 3.0);

    // Nonzero d: the block stores d/2 in each linear slot so the score's
    // 2d'x + 2e'y expansion reproduces the single d'(x+y) term.
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = random_psd(rng, r);
        const Matrix c = random_matrix(rng, r, r);
        const Vector d = random_vector(rng, r);
        const double f = rng.normal();
        const BlockMatrix m = make_ladf(a, c, d, f);
        const Vector u = random_vector(rng, r);
        const Vector v = random_vector(rng, r);
        const double direct =
            u.dot(a * u) + v.dot(a * v) + 2.0 * u.dot(c * v) + d.dot(u + v) + f;
        CHECK(std::abs(score_block(m, u, v) - direct) <= 1e-12);
    }

    Matrix negdef = -Matrix::Identity(r, r);
    CHECK_THROWS_AS(make_ladf(negdef, Matrix::Zero(r, r), Vector::Zero(r), 0.0),
                    ValidationError);
    Matrix lopsided = Matrix::Identity(r, r);
    lopsided(0, 1) = 0.5;  // asymmetric
    CHECK_THROWS_AS(make_ladf(lopsided, Matrix::Zero(r, r), Vector::Zero(r), 0.0),
                    ValidationError);
}

TEST_CASE("joint Bayesian construction") {
    Rng rng(209);
    const int r = 4;

    const Vector x = random_vector(rng, r);
    const Vector y = random_vector(rng, r);
    const BlockMatrix euclid = make_joint_bayesian(Matrix::Identity(r, r), Matrix::Identity(r, r));
    CHECK(std::abs(score_block(euclid, x, y) - (x - y).squaredNorm()) <= 1e-12);

    const BlockMatrix split = make_joint_bayesian(Matrix::Identity(r, r), Matrix::Zero(r, r));
    CHECK(std::abs(score_block(split, x, y) - (x.squaredNorm() + y.squaredNorm())) <= 1e-12);

    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = random_psd(rng, r);
        const Matrix g = random_matrix(rng, r, r);
        const BlockMatrix m = make_joint_bayesian(a, g);
        const Vector u = random_vector(rng, r);
        const Vector v = random_vector(rng, r);
        const double direct = u.dot(a * u) + v.dot(a * v) - 2.0 * u.dot(g * v);
        CHECK(std::abs(score_block(m, u, v) - direct) <= 1e-12);
    }

    CHECK_THROWS_AS(make_joint_bayesian(Matrix(-Matrix::Identity(r, r)), Matrix::Zero(r, r)),
                    ValidationError);
}

TEST_CASE("per-sample projections") {
    const int r = 3;
    const SimilarityComponents none = SimilarityComponents::zero(r, 0.0);
    Vector feature(r);
    feature << 1.0, 2.0, 3.0;
    const ProjectedComponents zero_proj = project_components(none, feature, Domain::X);
    CHECK(zero_proj.values.size() == 2 * r + 1);
    CHECK(zero_proj.values.cwiseAbs().maxCoeff() == 0.0);

    SimilarityComponents eye = SimilarityComponents::zero(r, 0.0);
    eye.l_a = Matrix::Identity(r, r);
    eye.l_b = Matrix::Identity(r, r);
    eye.l_cx = Matrix::Identity(r, r);
    eye.l_cy = Matrix::Identity(r, r);
    eye.d = Vector::Ones(r);
    Vector e1 = Vector::Zero(r);
    e1(0) = 1.0;
    const ProjectedComponents p = project_components(eye, e1, Domain::X);
    CHECK(max_abs_diff(Vector(p.self_part()), e1) == 0.0);
    CHECK(max_abs_diff(Vector(p.cross_part()), e1) == 0.0);
    CHECK(p.shift_part() == 1.0);

    // The Y side uses (l_b, l_cy, e).
    SimilarityComponents lop = SimilarityComponents::zero(r, 0.0);
    lop.l_b = 2.0 * Matrix::Identity(r, r);
    lop.e = Vector::Ones(r) * 0.5;
    const ProjectedComponents q = project_components(lop, e1, Domain::Y);
    CHECK(q.self_part()(0) == 2.0);
    CHECK(q.shift_part() == 0.5);
}

TEST_CASE("projected score equals the factorized score exactly") {
    Rng rng(210);
    for (int trial = 0; trial < 200; ++trial) {
        const int r = 1 + trial % 16;
        const SimilarityComponents phi = random_components(rng, r, rng.normal());
        const Vector fx = random_vector(rng, r);
        const Vector fy = random_vector(rng, r);
        const ProjectedComponents px = project_components(phi, fx, Domain::X);
        const ProjectedComponents py = project_components(phi, fy, Domain::Y);
        // Same products, same summation order: the two paths agree to the bit.
        CHECK(score_projected(px, py, phi.f) == score_factorized(phi, fx, fy));
    }

    ProjectedComponents both_zero;
    both_zero.values = Vector::Zero(7);
    CHECK(score_projected(both_zero, both_zero, -1.9) == -1.9);

    ProjectedComponents ex;
    ex.values = Vector::Zero(3);
    ex.values(0) = 1.0;
    CHECK(score_projected(ex, ex, 0.0) == 2.0);
}

TEST_CASE("the measure is asymmetric by construction") {
    Rng rng(211);
    SimilarityComponents phi = random_components(rng, 3, 0.0);
    phi.l_b = 2.0 * phi.l_a;  // any l_a != l_b witnesses
    const Vector x = random_vector(rng, 3);
    const Vector y = random_vector(rng, 3);
    CHECK(score_factorized(phi, x, y) != score_factorized(phi, y, x));
}

TEST_CASE("validation rejects malformed components") {
    SimilarityComponents phi = SimilarityComponents::zero(3);
    phi.l_cx = Matrix::Zero(2, 3);  // wrong shape
    CHECK_THROWS_AS(phi.validate(), ValidationError);

    SimilarityComponents nan_phi = SimilarityComponents::zero(3);
    nan_phi.d(1) = std::nan("");
    CHECK_THROWS_AS(nan_phi.validate(), ValidationError);

    const SimilarityComponents ok = SimilarityComponents::zero(2, 0.0);
    Vector fx(2), fy(3);
    fx.setZero();
    fy.setZero();
    CHECK_THROWS_AS(score_factorized(ok, fx, fy), ValidationError);

    BlockMatrix asym;
    asym.a = Matrix::Identity(2, 2);
    asym.a(0, 1) = 0.3;  // not symmetric
    asym.b = Matrix::Identity(2, 2);
    asym.c = Matrix::Zero(2, 2);
    asym.d = Vector::Zero(2);
    asym.e = Vector::Zero(2);
    CHECK_THROWS_AS(asym.validate(), ValidationError);
}

TEST_CASE("factor squared norm excludes the offset") {
    SimilarityComponents phi = SimilarityComponents::zero(2, -1.9);
    phi.l_a(0, 0) = 3.0;
    phi.d(1) = 2.0;
    CHECK(factor_squared_norm(phi) == 13.0);  // 9 + 4, f ignored

    Rng rng(212);
    const SimilarityComponents random_phi = random_components(rng, 4, 123.0);
    double manual = 0.0;
    for (const Matrix* m : {&random_phi.l_a, &random_phi.l_b, &random_phi.l_cx, &random_phi.l_cy}) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) manual += (*m)(i, j) * (*m)(i, j);
        }
    }
    for (int i = 0; i < 4; ++i) manual += random_phi.d(i) * random_phi.d(i) + random_phi.e(i) * random_phi.e(i);
    CHECK(std::abs(factor_squared_norm(random_phi) - manual) <= 1e-12);
}

}  // TEST_SUITE("simcore")
