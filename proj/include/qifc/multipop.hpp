#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qifc/manifold.hpp"
#include "qifc/params.hpp"

namespace qifc {

// Constraint functions of the p-population critical manifold,
//   Psi_i(v) = v_i^2 - c r_i^2 + eta_bar_i [i != k] + sum_j Jt_ij r_j(v_j),
//   r_j(v) = -(delta_j/pi) / (2 v + gamma_tilde_j),
// with the forced population's background center carried by K, so that
// p = 1 collapses onto the single-population psi.
class MultiPopManifold {
  public:
    MultiPopManifold(MultiPopParams params, Convention conv);

    const MultiPopParams& params() const { return params_; }
    int p() const { return params_.p; }
    int forced() const { return params_.forced; }

    double rate(int i, double v) const;
    double drate(int i, double v) const;

    double Psi(int i, std::span<const double> v) const;
    double dPsi(int i, int j, std::span<const double> v) const;  // d Psi_i / d v_j

    // residuals of Psi_i + K delta_ik
    void constraints(std::span<const double> v, double K,
                     std::span<double> out) const;

  private:
    MultiPopParams params_;
    double c_;
};

struct NewtonFailure {
    std::vector<double> guess;
    int iterations = 0;
    double residual = 0.0;
    std::string message;
};

struct MultiPopRoots {
    std::vector<std::vector<double>> roots;    // each satisfies the constraints
    std::vector<NewtonFailure> failures;       // per-guess reports
};

// Damped Newton with deflation against already-found roots. Guesses may be
// empty, in which case seeds come from the per-population decoupled branches.
MultiPopRoots multipop_manifold_solve(
    const MultiPopManifold& mf, double K,
    const std::vector<std::vector<double>>& guesses = {},
    double tol = 1e-10, int max_iter = 100);

struct MultiPopDrsState {
    std::vector<double> v;  // all p voltages; constraints hold for i != k
    double Q = 0.0;
};

struct MultiPopDrsDerivative {
    double dvk = 0.0;
    double dQ = 0.0;
    std::vector<double> dv_slaved;  // ordered over i != k
};

// Desingularized reduced flow with the unforced populations slaved through
// the implicit-function linear solve. Throws when the slaving system is
// singular (a fold of the slaving map).
MultiPopDrsDerivative multipop_drs_flow(const MultiPopManifold& mf,
                                        const MultiPopDrsState& st);

// RK4 on the DRS with a Newton projection of the slaved constraints after
// every step.
std::vector<MultiPopDrsState> integrate_multipop_drs(const MultiPopManifold& mf,
                                                     MultiPopDrsState start,
                                                     double arclength, double step);

struct MultiPopFoldedSingularity {
    std::vector<double> v;
    double sigma = 0.0;
    SingularityClass cls = SingularityClass::Degenerate;
};

// Along the constraint branch through `branch_seed` (continuation in v_k over
// [vk_lo, vk_hi]), locate zeros of dPsi_k/dv_k and classify them by the sign
// of sigma = -(dh/dv_k along the branch) * (eta_bar_k + Psi_k).
std::vector<MultiPopFoldedSingularity> multipop_folded_singularities(
    const MultiPopManifold& mf, const std::vector<double>& branch_seed,
    double vk_lo, double vk_hi, int scan_points = 2000, double tol = 1e-10);

}  // namespace qifc
