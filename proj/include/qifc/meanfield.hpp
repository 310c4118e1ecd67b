#pragma once

#include <span>
#include <vector>

#include "qifc/integrate.hpp"
#include "qifc/manifold.hpp"
#include "qifc/params.hpp"

namespace qifc {

// State layout for single-population systems: (r, v, s, K, Q).
// For p populations: (r_1, v_1, s_1, ..., r_p, v_p, s_p, K, Q).
inline constexpr std::size_t kIdxR = 0, kIdxV = 1, kIdxS = 2, kIdxK = 3, kIdxQ = 4;

struct MeanFieldState {
    double r = 0.0, v = 0.0, s = 0.0, K = 0.0, Q = 0.0;
};

// r' = delta/pi + 2 r v + gamma_tilde s
// v' = v^2 - c r^2 + j_tilde s + K          (c per convention)
// s' = (-s + r)/tau_s
// K' = eps Q,  Q' = -eps (K - eta_bar)
void mpr_rhs(std::span<const double> y, std::span<double> dy,
             const GeneralMfParams& p, const ForcingParams& f, Convention conv);

// Sparse heuristic:
// r' = delta/pi + 2 r v + J delta_gamma s / pi
// v' = v^2 + sqrt(M) (K + J s) - (pi r)^2
// s' = (-s + r)/tau_s
void sparse_heuristic_rhs(std::span<const double> y, std::span<double> dy,
                          const SparseParams& p);

// Population i follows the generalized equations with coupling
// sum_j Jt_ij s_j; the background center of the forced population rides in K,
// the others keep constant eta_bar_i. p = 1 reproduces mpr_rhs exactly.
void multipop_rhs(std::span<const double> y, std::span<double> dy,
                  const MultiPopParams& p, Convention conv);

OdeRhs make_mpr_rhs(const GeneralMfParams& p, const ForcingParams& f, Convention conv);
OdeRhs make_sparse_heuristic_rhs(const SparseParams& p);
OdeRhs make_multipop_rhs(const MultiPopParams& p, Convention conv);

// Per-step guard: firing rates must stay strictly positive.
StepValidator rate_positivity_validator(std::vector<std::size_t> rate_indices);

// Initial state on an attracting sheet at K = eta_bar (s = r, Q = A).
MeanFieldState sheet_initial_state(const ManifoldGeometry& geo, const ForcingParams& f,
                                   Sheet sheet);

double default_mf_dt(double tau_s, double eps);

// Standard forced-run protocol: start on `sheet` at K = eta_bar, integrate
// `transient_periods + eval_periods` forcing periods, return the full
// trajectory plus the index of the first post-transient sample.
struct MfRun {
    Trajectory traj;
    std::size_t eval_start = 0;  // row index where the evaluation window begins
    double eval_t0 = 0.0;
    double eval_t1 = 0.0;
};

MfRun run_forced_meanfield(const OdeRhs& rhs, const ManifoldGeometry& geo,
                           const ForcingParams& f, Sheet start_sheet,
                           const IntegrateOptions& opts, double out_dt,
                           int transient_periods = 1, int eval_periods = 1);

}  // namespace qifc
