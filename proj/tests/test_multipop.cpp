#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qifc/meanfield.hpp"
#include "qifc/multipop.hpp"

using namespace qifc;

namespace {

MultiPopParams one_pop(double delta = 1.0, double J = 15.0, double tau = 0.02,
                       double eta = -15.1) {
    MultiPopParams mp;
    mp.p = 1;
    mp.delta = {delta};
    mp.gamma_tilde = {0.0};
    mp.eta_bar = {eta};
    mp.tau_s = {tau};
    mp.J_tilde = {J};
    mp.forced = 0;
    mp.forcing.A = 2.0;
    mp.forcing.eps = 0.05;
    mp.forcing.eta_bar = eta;
    return mp;
}

MultiPopParams two_pop_diagonal() {
    MultiPopParams mp;
    mp.p = 2;
    mp.delta = {1.0, 0.7};
    mp.gamma_tilde = {0.0, 0.0};
    mp.eta_bar = {-15.1, -8.0};
    mp.tau_s = {0.02, 0.03};
    mp.J_tilde = {15.0, 0.0, 0.0, 12.0};
    mp.forced = 0;
    mp.forcing.A = 2.0;
    mp.forcing.eps = 0.05;
    mp.forcing.eta_bar = -15.1;
    return mp;
}

}  // namespace

TEST_CASE("p = 1 multipop equals the single-population RHS exactly") {
    const MultiPopParams mp = one_pop();
    GeneralMfParams p;
    p.delta = 1.0;
    p.J = 15.0;
    p.tau_s = 0.02;
    p.eta_bar = -15.1;
    ForcingParams f = mp.forcing;

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> rd(0.01, 3.0), vd(-5.0, -0.1),
        sd(0.0, 3.0), Kd(-20.0, 0.0), Qd(-3.0, 3.0);
    for (Convention conv : {Convention::pi2, Convention::printed}) {
        for (int trial = 0; trial < 200; ++trial) {
            const double y[5] = {rd(gen), vd(gen), sd(gen), Kd(gen), Qd(gen)};
            double da[5], db[5];
            mpr_rhs(y, da, p, f, conv);
            multipop_rhs(y, db, mp, conv);
            for (int i = 0; i < 5; ++i) CHECK(da[i] == db[i]);  // bitwise
        }
    }
}

TEST_CASE("dimension mismatches are rejected") {
    const MultiPopParams mp = two_pop_diagonal();
    const double y[5] = {0.1, -1.0, 0.1, -15.0, 0.0};  // wrong: needs 8
    double dy[5];
    CHECK_THROWS_AS(multipop_rhs(y, dy, mp, Convention::pi2),
                    std::invalid_argument);
}

TEST_CASE("decoupled second population stays at its equilibrium") {
    const MultiPopParams mp = two_pop_diagonal();
    // population 2 equilibrium: r = -delta/(2 pi v), psi(v) = -eta_bar_2
    PsiParams pp2;
    pp2.delta = mp.delta[1];
    pp2.j_psi = mp.J_tilde[3];
    pp2.gamma_tilde = 0.0;
    pp2.rate_sq_coeff = std::numbers::pi * std::numbers::pi;
    const auto geo2 = find_folds(pp2);
    const double v2 = geo2.sheet_point(mp.eta_bar[1], Sheet::lower);
    const double r2 = manifold_rate(pp2, v2);

    double y[8] = {0.5, -2.0, 0.4, r2, v2, r2, mp.eta_bar[0], 1.0};
    double dy[8];
    multipop_rhs(y, dy, mp, Convention::pi2);
    CHECK(std::abs(dy[3]) < 1e-10);
    CHECK(std::abs(dy[4]) < 1e-10);
    CHECK(std::abs(dy[5]) < 1e-10);
    // population 1 is away from equilibrium and must evolve
    CHECK(std::abs(dy[1]) > 1e-3);
}

TEST_CASE("manifold solve: p = 1 roots coincide with psi inversion") {
    const MultiPopParams mp = one_pop();
    const MultiPopManifold mf(mp, Convention::pi2);
    const double K = -15.1;
    const auto roots = multipop_manifold_solve(mf, K);
    REQUIRE(!roots.roots.empty());

    const PsiParams pp = PsiParams::mpr(1.0, 15.0, Convention::pi2);
    const auto geo = find_folds(pp);
    // at K = -15.1 only the lower sheet exists
    const double v_expected = geo.sheet_point(K, Sheet::lower);
    bool found = false;
    for (const auto& rt : roots.roots) {
        double resid[1];
        mf.constraints(rt, K, resid);
        CHECK(std::abs(resid[0]) <= 1e-10);
        if (std::abs(rt[0] - v_expected) < 1e-8) found = true;
    }
    CHECK(found);
}

TEST_CASE("manifold solve: bistable K returns all three branches via deflation") {
    const MultiPopParams mp = one_pop();
    const MultiPopManifold mf(mp, Convention::pi2);
    const PsiParams pp = PsiParams::mpr(1.0, 15.0, Convention::pi2);
    const auto geo = find_folds(pp);
    const double K = geo.eta_zero;  // inside the bistable window
    const auto roots = multipop_manifold_solve(mf, K);
    CHECK(roots.roots.size() == 3);
}

TEST_CASE("manifold solve: diagonal two-population roots are products") {
    const MultiPopParams mp = two_pop_diagonal();
    const MultiPopManifold mf(mp, Convention::pi2);
    const double K = -15.1;
    const auto roots = multipop_manifold_solve(mf, K);
    REQUIRE(!roots.roots.empty());

    // single-population branches
    PsiParams pp1 = PsiParams::mpr(mp.delta[0], mp.J_tilde[0], Convention::pi2);
    PsiParams pp2 = PsiParams::mpr(mp.delta[1], mp.J_tilde[3], Convention::pi2);
    const auto geo1 = find_folds(pp1);
    const auto geo2 = find_folds(pp2);

    for (const auto& rt : roots.roots) {
        double resid[2];
        mf.constraints(rt, K, resid);
        CHECK(std::abs(resid[0]) <= 1e-10);
        CHECK(std::abs(resid[1]) <= 1e-10);
        // each coordinate solves its own decoupled constraint
        CHECK(std::abs(psi(pp1, rt[0]) + K) < 1e-8);
        CHECK(std::abs(psi(pp2, rt[1]) + mp.eta_bar[1]) < 1e-8);
    }
    // product structure: (lower-sheet of pop 1) x (up to 3 branches of pop 2)
    int pop2_branches = 0;
    for (Sheet sh : {Sheet::lower, Sheet::repelling, Sheet::upper})
        if (geo2.sheet_exists_at(mp.eta_bar[1], sh)) ++pop2_branches;
    (void)geo1;
    CHECK(static_cast<int>(roots.roots.size()) >= pop2_branches);
}

TEST_CASE("p = 1 DRS flow matches the single-population DRS") {
    const MultiPopParams mp = one_pop();
    const MultiPopManifold mf(mp, Convention::pi2);
    const PsiParams pp = PsiParams::mpr(1.0, 15.0, Convention::pi2);
    for (double v : {-3.0, -1.0, -0.5}) {
        for (double Q : {-1.0, 0.3, 2.0}) {
            MultiPopDrsState st;
            st.v = {v};
            st.Q = Q;
            const auto d = multipop_drs_flow(mf, st);
            double dv, dQ;
            drs_flow(pp, mp.eta_bar[0], v, Q, dv, dQ);
            CHECK(d.dvk == doctest::Approx(dv).epsilon(1e-12));
            CHECK(d.dQ == doctest::Approx(dQ).epsilon(1e-12));
        }
    }
}

TEST_CASE("DRS integration keeps the slaved constraints tight") {
    const MultiPopParams mp = two_pop_diagonal();
    const MultiPopManifold mf(mp, Convention::pi2);
    // start on the joint branch at K = eta_bar_1
    const auto roots = multipop_manifold_solve(mf, mp.eta_bar[0]);
    REQUIRE(!roots.roots.empty());
    MultiPopDrsState st;
    st.v = roots.roots[0];
    st.Q = 0.5;
    const auto path = integrate_multipop_drs(mf, st, 1.0, 1e-3);
    REQUIRE(path.size() > 100);
    for (std::size_t k = 0; k < path.size(); k += 50) {
        const double drift = std::abs(mf.Psi(1, path[k].v));
        CHECK(drift <= 1e-6);
    }
}

TEST_CASE("decoupled folded-singularity classification matches single population") {
    const MultiPopParams mp = two_pop_diagonal();
    const MultiPopManifold mf(mp, Convention::pi2);
    const PsiParams pp1 = PsiParams::mpr(mp.delta[0], mp.J_tilde[0], Convention::pi2);
    const auto geo1 = find_folds(pp1);
    REQUIRE(geo1.has_folds());

    // slave population 2 onto its lower branch, scan v_1 across both folds
    PsiParams pp2 = PsiParams::mpr(mp.delta[1], mp.J_tilde[3], Convention::pi2);
    const auto geo2 = find_folds(pp2);
    const double v2 = geo2.sheet_point(mp.eta_bar[1], Sheet::lower);
    std::vector<double> seed = {geo1.fold_minus().v - 0.5, v2};

    const auto folded = multipop_folded_singularities(
        mf, seed, geo1.fold_minus().v - 0.6, geo1.fold_plus().v + 0.15, 4000);
    REQUIRE(folded.size() == 2);
    for (const auto& fsng : folded) {
        // match against the single-population classification at the same fold
        const Fold* target = nullptr;
        if (std::abs(fsng.v[0] - geo1.fold_minus().v) < 1e-6)
            target = &geo1.fold_minus();
        else if (std::abs(fsng.v[0] - geo1.fold_plus().v) < 1e-6)
            target = &geo1.fold_plus();
        REQUIRE(target != nullptr);
        const auto single =
            classify_folded_singularity(pp1, *target, mp.eta_bar[0]);
        CHECK(fsng.cls == single.cls);
        CHECK(fsng.sigma ==
              doctest::Approx(single.sigma)
                  .epsilon(1e-4 * std::max(1.0, std::abs(single.sigma))));
    }
}
