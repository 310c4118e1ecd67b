#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qifc/params.hpp"

namespace qifc {

// Critical-manifold family shared by all single-population variants.
//
// On the frozen-drive equilibrium set, rate and gate are slaved to voltage,
//     r(v) = s(v) = -(delta/pi) / (2 v + gamma_tilde),
// and the drive is K = -psi(v) with
//     psi(v) = quad_scale * (v^2 - rate_sq_coeff * r(v)^2) + j_psi * r(v).
//
//   plain / generalized:  quad_scale = 1, j_psi = J~,
//                         rate_sq_coeff = pi^2 (default) or pi (printed form)
//   sparse heuristic:     quad_scale = 1/sqrt(M), j_psi = J,
//                         gamma_tilde = J*delta_gamma/pi, rate_sq_coeff = pi^2
struct PsiParams {
    double delta = 1.0;
    double j_psi = 0.0;
    double gamma_tilde = 0.0;
    double rate_sq_coeff = 0.0;  // set by factories
    double quad_scale = 1.0;

    static PsiParams mpr(double delta, double j_tilde, Convention conv);
    static PsiParams generalized(const GeneralMfParams& p, Convention conv);
    static PsiParams sparse_heuristic(const SparseParams& p);

    // r > 0 requires v < v_pole(); the manifold lives left of the pole.
    double v_pole() const { return -0.5 * gamma_tilde; }
};

double manifold_rate(const PsiParams& pp, double v);   // r(v)
double psi(const PsiParams& pp, double v);             // v != pole, v != 0 handled by caller windows
double dpsi(const PsiParams& pp, double v);
double d2psi(const PsiParams& pp, double v);

enum class Sheet { lower, repelling, upper };
enum class FoldSide { Fminus, Fplus };

inline std::string to_string(Sheet s) {
    switch (s) {
        case Sheet::lower: return "lower";
        case Sheet::repelling: return "repelling";
        default: return "upper";
    }
}
inline std::string to_string(FoldSide f) { return f == FoldSide::Fminus ? "F-" : "F+"; }

struct Fold {
    double v = 0.0;       // fold voltage, psi'(v) = 0
    double K = 0.0;       // -psi(v)
    FoldSide side = FoldSide::Fminus;
};

struct VWindow {
    double lo = -50.0;
    double hi = -1e-4;
};

struct ManifoldGeometry {
    PsiParams psi_params;
    VWindow window;
    std::vector<Fold> folds;  // 0 or 2, ascending in v: [F-, F+]
    // populated when two folds exist
    double eta_plus = 0.0;    // K at F+
    double eta_minus = 0.0;   // K at F-
    double eta_zero = 0.0;    // midpoint

    bool has_folds() const { return folds.size() == 2; }
    const Fold& fold_minus() const { return folds.at(0); }
    const Fold& fold_plus() const { return folds.at(1); }

    Sheet sheet_of(double v) const;
    // v on the requested sheet with K = -psi(v); throws if no such point.
    double sheet_point(double K, Sheet sheet) const;
    bool sheet_exists_at(double K, Sheet sheet) const;
};

// Locates folds by a sign-change scan of psi' (parametrized by rate so that
// structure crowding near the pole is resolved) plus bisection refinement.
// Throws on an odd sign-change count, reporting the scan trace size.
ManifoldGeometry find_folds(const PsiParams& pp, VWindow window = {},
                            int scan_points = 10000);

enum class SingularityClass { FoldedSaddle, FoldedCentre, Degenerate };

inline std::string to_string(SingularityClass c) {
    switch (c) {
        case SingularityClass::FoldedSaddle: return "FoldedSaddle";
        case SingularityClass::FoldedCentre: return "FoldedCentre";
        default: return "Degenerate";
    }
}

struct FoldedSingularity {
    double v = 0.0;
    FoldSide side = FoldSide::Fminus;
    double sigma = 0.0;  // -psi''(v*) (eta_bar + psi(v*))
    SingularityClass cls = SingularityClass::Degenerate;
    // eigenvalues +/- sqrt(sigma): real pair (saddle) or imaginary pair (centre)
    std::array<double, 2> eig_real{0.0, 0.0};
    std::array<double, 2> eig_imag{0.0, 0.0};
};

FoldedSingularity classify_folded_singularity(const PsiParams& pp, const Fold& fold,
                                              double eta_bar, double tol = 1e-10);

// Desingularized reduced flow: v' = Q, Q' = -psi'(v) (eta_bar + psi(v)).
void drs_flow(const PsiParams& pp, double eta_bar, double v, double Q,
              double& dv, double& dQ);

struct CanardPoint {
    double v, K, Q;
};

struct SingularCanards {
    std::vector<CanardPoint> true_canard;  // attracting -> repelling separatrix
    std::vector<CanardPoint> faux_canard;
};

// Separatrices of the DRS saddle at (v*, 0), lifted to (v, K, Q) via
// K = -psi(v). Throws if the singularity is not a saddle.
SingularCanards singular_canards(const PsiParams& pp, const FoldedSingularity& fs,
                                 double eta_bar, double arclength,
                                 double step = 1e-3);

enum class ScenarioCase { I, II, III, IV };

inline std::string to_string(ScenarioCase c) {
    switch (c) {
        case ScenarioCase::I: return "I";
        case ScenarioCase::II: return "II";
        case ScenarioCase::III: return "III";
        default: return "IV";
    }
}

struct ScenarioResult {
    ScenarioCase scenario = ScenarioCase::I;
    // set when eta_bar sits on a boundary within tolerance
    std::optional<std::string> boundary;
};

// Partition by eta_bar relative to (eta_plus, eta_zero, eta_minus).
// Throws if the geometry has no folds ("no excitable structure").
ScenarioResult scenario_classify(double eta_bar, const ManifoldGeometry& geo,
                                 double tol = 1e-10);

// Frozen-K fast-subsystem stability at a manifold point (analytic 3x3
// Jacobian of the (r, v, s) subsystem, Routh-Hurwitz test).
struct SheetStability {
    bool attracting = false;
    std::array<double, 3> char_poly{0, 0, 0};  // lambda^3 + c2 l^2 + c1 l + c0
};
SheetStability fast_subsystem_stability(const PsiParams& pp, double tau_s, double v);

struct ManifoldSample {
    double v, r, s, K;
    Sheet sheet;
};
std::vector<ManifoldSample> sample_manifold(const ManifoldGeometry& geo, int n_points);

}  // namespace qifc
