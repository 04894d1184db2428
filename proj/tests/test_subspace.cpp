#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "expfit/subspace.hpp"
#include "helpers.hpp"

using namespace expfit;
using test::rel_err;

TEST_CASE("build_subspace single constant point", "[subspace]") {
    CVec mu(1);
    mu[0] = Complex(0, 0);
    const CVec data = CVec::Ones(16);
    const SubspaceState s = build_subspace(mu, 16, data);
    REQUIRE(s.rank == 1);
    CHECK(rel_err(s.projected_data[0], 4.0) < 1e-12);
}

TEST_CASE("projection is a contraction", "[subspace]") {
    test::Gen gen(11);
    CVec mu(2);
    mu[0] = Complex(-0.05, 0.3);
    mu[1] = Complex(-0.2, -1.0);
    const CVec data = gen.cvec(64);
    const SubspaceState s = build_subspace(mu, 64, data);
    CHECK(s.projected_data.norm() <= data.norm() * (1 + 1e-12));
}

TEST_CASE("orthonormality via dense QR oracle", "[subspace]") {
    CVec mu(2);
    mu[0] = Complex(-0.008, 0.0014);
    mu[1] = Complex(-0.008, -0.0014);
    const Index n = 1000;
    const SubspaceState s = build_subspace(mu, n, CVec::Zero(n));
    REQUIRE(s.rank == 2);
    const CMat w = dense_basis(s);
    CHECK((w.adjoint() * w - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    // range matches the dense QR of V(mu): sin of the largest angle is the
    // residual of projecting W onto range Q (acos of singular values cannot
    // resolve angles this small)
    const CMat v = test::dense_vandermonde(mu, n);
    Eigen::HouseholderQR<CMat> qr(v);
    const CMat q = qr.householderQ() * CMat::Identity(n, 2);
    const double sin_phi = (w - q * (q.adjoint() * w)).norm();
    CHECK(sin_phi < 1e-10);
}

TEST_CASE("duplicate points rejected", "[subspace]") {
    CVec mu(2);
    mu[0] = Complex(-0.1, 0.2);
    mu[1] = Complex(-0.1, 0.2 + 2 * pi);  // same e^mu
    CHECK_THROWS_AS(build_subspace(mu, 32, CVec::Zero(32)),
                    std::invalid_argument);
}

TEST_CASE("projected model", "[subspace]") {
    test::Gen gen(12);
    const Index n = 512;
    CVec mu(4), omega(2), a(2);
    mu[0] = Complex(-0.03, 0.1);
    mu[1] = Complex(-0.03, 0.5);
    mu[2] = Complex(-0.4, 0.1);
    mu[3] = Complex(-0.4, 0.5);
    omega[0] = Complex(-0.1, 0.22);
    omega[1] = Complex(-0.2, 0.4);
    a[0] = Complex(1.2, -0.3);
    a[1] = Complex(0.1, 2.0);

    const CVec data = gen.cvec(n);
    const SubspaceState s = build_subspace(mu, n, data);

    SECTION("zero amplitudes give zero") {
        CHECK(projected_model(s, omega, CVec::Zero(2)).norm() == 0.0);
    }
    SECTION("matches dense W* V(omega) a") {
        const CVec got = projected_model(s, omega, a);
        const CVec want = dense_basis(s).adjoint() *
                          (test::dense_vandermonde(omega, n) * a);
        CHECK((got - want).norm() < 1e-10 * want.norm());
    }
    SECTION("interpolation when omega subset of mu") {
        CVec om2(2), a2(2);
        om2[0] = mu[1];
        om2[1] = mu[2];
        a2[0] = Complex(0.7, 0.1);
        a2[1] = Complex(-0.2, 0.5);
        const CVec f = test::dense_vandermonde(om2, n) * a2;
        const CVec pm = projected_model(s, om2, a2);
        // || P_W f || = || f ||  when f lies inside the subspace
        CHECK(rel_err(pm.norm(), f.norm()) < 1e-10);
    }
}

TEST_CASE("projected jacobian", "[subspace]") {
    test::Gen gen(13);
    const Index n = 512;
    CVec mu(4), omega(2), a(2);
    mu[0] = Complex(-0.05, -0.2);
    mu[1] = Complex(-0.05, 0.6);
    mu[2] = Complex(-0.5, -0.2);
    mu[3] = Complex(-0.5, 0.6);
    omega[0] = Complex(-0.12, 0.0);
    omega[1] = Complex(-0.3, 0.35);
    a[0] = Complex(0.4, 1.0);
    a[1] = Complex(-1.1, 0.2);
    const SubspaceState s = build_subspace(mu, n, gen.cvec(n));

    SECTION("zero amplitudes annihilate the derivative block") {
        const CMat j = projected_jacobian(s, omega, CVec::Zero(2));
        CHECK(j.leftCols(2).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("matches dense oracle") {
        const CMat got = projected_jacobian(s, omega, a);
        const CMat w = dense_basis(s);
        CMat want(s.rank, 4);
        want.leftCols(2) = w.adjoint() *
                           (test::dense_vandermonde_deriv(omega, n) * a.asDiagonal());
        want.rightCols(2) = w.adjoint() * test::dense_vandermonde(omega, n);
        CHECK((got - want).cwiseAbs().maxCoeff() <
              1e-10 * want.cwiseAbs().maxCoeff());
    }
    SECTION("central finite differences") {
        const double h = 1e-6;
        for (Index k = 0; k < 2; ++k) {
            CVec op = omega, om = omega;
            op[k] += h;
            om[k] -= h;
            const CVec fd = (projected_model(s, op, a) - projected_model(s, om, a)) /
                            (2 * h);
            const CVec col = projected_jacobian(s, omega, a).col(k);
            CHECK((fd - col).norm() < 1e-6 * col.norm());
        }
    }
}

TEST_CASE("subspace angles basic cases", "[subspace]") {
    test::Gen gen(14);
    const CMat a = gen.orthonormal(20, 4);
    SECTION("identical subspaces") {
        const RVec phi = subspace_angles(a, a);
        CHECK(phi.maxCoeff() < 1e-7);
    }
    SECTION("orthogonal complements") {
        CMat id = CMat::Identity(4, 4);
        const RVec phi = subspace_angles(id.leftCols(2), id.rightCols(2));
        CHECK((phi.array() - pi / 2).abs().maxCoeff() < 1e-12);
    }
    SECTION("rejects non-orthonormal input") {
        CHECK_THROWS_AS(subspace_angles(2.0 * a, a), std::invalid_argument);
    }
}

TEST_CASE("subspace angles projector oracle", "[subspace]") {
    // eigenvalues of P_A P_B P_A are cos^2 of the canonical angles
    test::Gen gen(15);
    const Index n = 100;
    const CMat a = gen.orthonormal(n, 6);
    const CMat b = gen.orthonormal(n, 3);
    const RVec phi = subspace_angles(a, b);
    REQUIRE(phi.size() == 3);

    const CMat pa = a * a.adjoint();
    const CMat pb = b * b.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es(pa * pb * pa);
    const RVec ev = es.eigenvalues();  // ascending
    for (Index k = 0; k < 3; ++k) {
        const double c2 = std::cos(phi[k]) * std::cos(phi[k]);
        // largest eigenvalues pair with the smallest angles
        CHECK(std::abs(ev[n - 1 - k] - c2) < 1e-8);
    }
}

TEST_CASE("efficiency trivial cases", "[subspace]") {
    test::Gen gen(16);
    const Index n = 40;
    const CMat j = gen.cmat(n, 3);
    Eigen::HouseholderQR<CMat> qr(j);
    const CMat qj = qr.householderQ() * CMat::Identity(n, 3);

    SECTION("containment gives one") {
        CMat w(n, 5);
        w.leftCols(3) = qj;
        // extend to a 5-dim subspace containing range J
        CMat ext = gen.cmat(n, 2);
        ext -= qj * (qj.adjoint() * ext);
        Eigen::HouseholderQR<CMat> qr2(ext.eval());
        w.rightCols(2) = qr2.householderQ() * CMat::Identity(n, 2);
        CHECK(efficiency(w, j) == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("orthogonal subspace gives zero") {
        CMat g = gen.cmat(n, 4);
        g -= qj * (qj.adjoint() * g);
        Eigen::HouseholderQR<CMat> qr2(g.eval());
        const CMat w = qr2.householderQ() * CMat::Identity(n, 4);
        CHECK(efficiency(w, j) < 1e-18);
    }
    SECTION("rank-deficient J rejected") {
        CMat jd(n, 3);
        jd.col(0) = j.col(0);
        jd.col(1) = j.col(1);
        jd.col(2) = j.col(0) * 2.0;
        CHECK_THROWS_AS(efficiency(gen.orthonormal(n, 4), jd),
                        std::invalid_argument);
    }
}

TEST_CASE("figure-one efficiencies", "[subspace][paper]") {
    const Index n = 1000;
    CVec mu(2), omega(1);
    mu[0] = Complex(-0.008, 0.0014);
    mu[1] = Complex(-0.008, -0.0014);
    omega[0] = Complex(-0.01, 0.0);

    SECTION("projected subspace: 95.7 percent") {
        const double eta = efficiency_at(mu, omega, n);
        CHECK(eta == Catch::Approx(0.957).margin(0.005));
    }
    SECTION("every tenth row: 1.19 percent") {
        CMat sel = CMat::Zero(n, 100);
        for (Index k = 0; k < 100; ++k) sel(10 * k, k) = 1.0;
        CMat j(n, 2);
        j.col(0) = test::dense_vandermonde_deriv(omega, n);
        j.col(1) = test::dense_vandermonde(omega, n);
        CHECK(efficiency(sel, j) == Catch::Approx(0.0119).margin(0.002));
    }
}

TEST_CASE("gram-route efficiency matches dense route", "[subspace]") {
    test::Gen gen(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 200 + static_cast<Index>(gen.uniform(0, 800));
        CVec mu(4), omega(1);
        const double re = gen.uniform(-1.5, -0.05);
        const double im = gen.uniform(-2.0, 2.0);
        const double w = gen.uniform(0.3, 1.0);
        mu[0] = Complex(re * (1 + w), im);
        mu[1] = Complex(re * (1 + w), im + 0.5);
        mu[2] = Complex(re, im);
        mu[3] = Complex(re, im + 0.5);
        omega[0] = Complex(re * (1 + 0.5 * w), im + 0.25);
        const double dense = efficiency_at(mu, omega, n);
        const double gram = detail::efficiency_via_grams(mu, omega, n);
        CHECK(std::abs(dense - gram) < 1e-8);
    }
}

TEST_CASE("amplitude independence of jacobian angles", "[subspace]") {
    test::Gen gen(18);
    const Index n = 300;
    CVec omega(2);
    omega[0] = Complex(-0.1, 0.4);
    omega[1] = Complex(-0.35, -0.9);
    CVec mu(3);
    mu[0] = Complex(-0.09, 0.35);
    mu[1] = Complex(-0.3, -0.85);
    mu[2] = Complex(-0.6, 0.0);
    const SubspaceState s = build_subspace(mu, n, CVec::Zero(n));
    const CMat w = dense_basis(s);

    // angles between W and range [V' diag(a), V] for random nonzero a equal
    // those with a = ones
    CMat jbase(n, 4);
    jbase.leftCols(2) = test::dense_vandermonde_deriv(omega, n);
    jbase.rightCols(2) = test::dense_vandermonde(omega, n);
    Eigen::HouseholderQR<CMat> qr0(jbase);
    const RVec phi_ref =
        subspace_angles(w, qr0.householderQ() * CMat::Identity(n, 4));

    for (int trial = 0; trial < 5; ++trial) {
        CVec a = gen.cvec(2);
        a[0] += Complex(1.0, 0);  // keep away from zero
        CMat j(n, 4);
        j.leftCols(2) = test::dense_vandermonde_deriv(omega, n) * a.asDiagonal();
        j.rightCols(2) = test::dense_vandermonde(omega, n);
        Eigen::HouseholderQR<CMat> qr(j);
        const RVec phi =
            subspace_angles(w, qr.householderQ() * CMat::Identity(n, 4));
        CHECK((phi - phi_ref).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("efficiency property suite", "[subspace][theorems]") {
    test::Gen gen(19);

    SECTION("identity: eta equals product of cos^2 angles") {
        for (int trial = 0; trial < 100; ++trial) {
            const Index n = 20 + static_cast<Index>(gen.uniform(0, 180));
            const Index q = 1 + static_cast<Index>(gen.uniform(0, 3.99));
            const Index m = q + static_cast<Index>(gen.uniform(0, 5));
            const CMat w = gen.orthonormal(n, m);
            const CMat j = gen.cmat(n, q);
            Eigen::HouseholderQR<CMat> qr(j);
            const CMat qj = qr.householderQ() * CMat::Identity(n, q);
            const RVec phi = subspace_angles(w, qj);
            double prod = 1.0;
            for (Index k = 0; k < phi.size(); ++k)
                prod *= std::cos(phi[k]) * std::cos(phi[k]);
            CHECK(std::abs(efficiency(w, j) - prod) < 1e-9);
        }
    }
    SECTION("monotonicity in nested subspaces") {
        for (int trial = 0; trial < 100; ++trial) {
            const Index n = 20 + static_cast<Index>(gen.uniform(0, 180));
            const Index q = 1 + static_cast<Index>(gen.uniform(0, 2.99));
            const Index m1 = q + static_cast<Index>(gen.uniform(0, 4));
            const Index m2 = m1 + 1 + static_cast<Index>(gen.uniform(0, 4));
            const CMat w2 = gen.orthonormal(n, m2);
            const CMat w1 = w2.leftCols(m1);
            const CMat j = gen.cmat(n, q);
            CHECK(efficiency(w1, j) <= efficiency(w2, j) + 1e-10);
        }
    }
    SECTION("union upper bound") {
        for (int trial = 0; trial < 100; ++trial) {
            const Index n = 30 + static_cast<Index>(gen.uniform(0, 170));
            const Index q1 = 1 + static_cast<Index>(gen.uniform(0, 1.99));
            const Index q2 = 1 + static_cast<Index>(gen.uniform(0, 1.99));
            const CMat j1 = gen.cmat(n, q1);
            const CMat j2 = gen.cmat(n, q2);
            CMat ju(n, q1 + q2);
            ju.leftCols(q1) = j1;
            ju.rightCols(q2) = j2;
            const Index m = q1 + q2 + static_cast<Index>(gen.uniform(0, 4));
            const CMat w = gen.orthonormal(n, m);
            const double eu = efficiency(w, ju);
            CHECK(eu <= efficiency(w, j1) + 1e-10);
            CHECK(eu <= efficiency(w, j2) + 1e-10);
        }
    }
    SECTION("nearby lower bound holds when W contains J2") {
        // the sound special case: J2 inside W reduces the claim to
        // monotonicity
        for (int trial = 0; trial < 100; ++trial) {
            const Index n = 30 + static_cast<Index>(gen.uniform(0, 170));
            const Index q = 1 + static_cast<Index>(gen.uniform(0, 2.99));
            const Index m = q + 1 + static_cast<Index>(gen.uniform(0, 4));
            const CMat w = gen.orthonormal(n, m);
            const CMat j2 = w.leftCols(q) * gen.cmat(q, q);
            const CMat j1 = j2 + 0.1 * gen.cmat(n, q);
            Eigen::HouseholderQR<CMat> qr(j2.eval());
            const CMat q2 = qr.householderQ() * CMat::Identity(n, q);
            const double lhs = efficiency(w, j2) * efficiency(q2, j1);
            CHECK(lhs <= efficiency(w, j1) + 1e-10);
        }
    }
}

TEST_CASE("nearby lower bound fails in general", "[subspace][theorems]") {
    // The claimed inequality eta(W,J2) eta(J1,J2) <= eta(W,J1) for
    // equal-dimension J1, J2 is not a theorem: when J2 aligns with W much
    // better than the nearby J1 does, the left side exceeds the right by an
    // unbounded factor.  Pinning the counterexample here separates the
    // mathematical gap from an implementation bug; the partition's 95%
    // guarantee is audited directly and does not rest on this bound.
    const double t1 = 0.001, t2 = 0.01;
    CMat w = CMat::Zero(2, 1);
    w(0, 0) = 1.0;
    CMat j1(2, 1), j2(2, 1);
    j1(0, 0) = std::sin(t1);
    j1(1, 0) = std::cos(t1);
    j2(0, 0) = std::sin(t2);
    j2(1, 0) = std::cos(t2);
    const CMat q2 = j2 / j2.norm();
    const double lhs = efficiency(w, j2) * efficiency(q2, j1);
    const double rhs = efficiency(w, j1);
    CHECK(lhs > 50.0 * rhs);
    // analytic values: sin^2(t2) cos^2(t1 - t2) vs sin^2(t1)
    CHECK(lhs == Catch::Approx(std::pow(std::sin(t2) * std::cos(t1 - t2), 2))
                     .epsilon(1e-10));
    CHECK(rhs == Catch::Approx(std::pow(std::sin(t1), 2)).epsilon(1e-10));
}

TEST_CASE("delta rule and box-corner guarantees", "[subspace][paper]") {
    // interpolation points at 0.8 Re(w) +- i max(-0.52 Re(w), 1.39/n)
    // around the frequency's imaginary part keep efficiency >= 95%
    test::Gen gen(20);
    const Index n = 256;
    for (int trial = 0; trial < 25; ++trial) {
        const double re = gen.uniform(-5.0, -1e-3);
        const double im = gen.uniform(-pi, pi);
        const double off = std::max(-0.52 * re, 1.39 / static_cast<double>(n));
        CVec mu(2), omega(1);
        mu[0] = Complex(0.8 * re, im + off);
        mu[1] = Complex(0.8 * re, im - off);
        omega[0] = Complex(re, im);
        CHECK(efficiency_at(mu, omega, n) >= 0.95 - 1e-3);
    }
}
