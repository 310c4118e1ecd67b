#include "qifc/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qifc {

namespace {
constexpr double kPi = std::numbers::pi;
}

PsiParams PsiParams::mpr(double delta, double j_tilde, Convention conv) {
    PsiParams pp;
    pp.delta = delta;
    pp.j_psi = j_tilde;
    pp.gamma_tilde = 0.0;
    pp.rate_sq_coeff = conv == Convention::pi2 ? kPi * kPi : kPi;
    pp.quad_scale = 1.0;
    return pp;
}

PsiParams PsiParams::generalized(const GeneralMfParams& p, Convention conv) {
    PsiParams pp;
    pp.delta = p.delta;
    pp.j_psi = p.j_tilde();
    pp.gamma_tilde = p.gamma_tilde();
    pp.rate_sq_coeff = conv == Convention::pi2 ? kPi * kPi : kPi;
    pp.quad_scale = 1.0;
    return pp;
}

PsiParams PsiParams::sparse_heuristic(const SparseParams& p) {
    PsiParams pp;
    pp.delta = p.delta;
    pp.j_psi = p.J;
    pp.gamma_tilde = p.J * p.delta_gamma / kPi;
    pp.rate_sq_coeff = kPi * kPi;
    pp.quad_scale = 1.0 / std::sqrt(static_cast<double>(p.M));
    return pp;
}

double manifold_rate(const PsiParams& pp, double v) {
    return -(pp.delta / kPi) / (2.0 * v + pp.gamma_tilde);
}

double psi(const PsiParams& pp, double v) {
    if (v == 0.0 && pp.gamma_tilde == 0.0)
        throw std::domain_error("psi is singular at v = 0");
    const double r = manifold_rate(pp, v);
    return pp.quad_scale * (v * v - pp.rate_sq_coeff * r * r) + pp.j_psi * r;
}

double dpsi(const PsiParams& pp, double v) {
    const double r = manifold_rate(pp, v);
    const double dr = 2.0 * kPi * r * r / pp.delta;  // dr/dv = 2 (delta/pi) / u^2
    return pp.quad_scale * (2.0 * v - 2.0 * pp.rate_sq_coeff * r * dr) + pp.j_psi * dr;
}

double d2psi(const PsiParams& pp, double v) {
    const double u = 2.0 * v + pp.gamma_tilde;
    const double a = pp.delta / kPi;
    const double r = -a / u;
    const double dr = 2.0 * a / (u * u);
    const double d2r = -8.0 * a / (u * u * u);
    return pp.quad_scale * (2.0 - 2.0 * pp.rate_sq_coeff * (dr * dr + r * d2r)) +
           pp.j_psi * d2r;
}

Sheet ManifoldGeometry::sheet_of(double v) const {
    if (!has_folds()) return Sheet::lower;
    if (v <= folds[0].v) return Sheet::lower;
    if (v >= folds[1].v) return Sheet::upper;
    return Sheet::repelling;
}

bool ManifoldGeometry::sheet_exists_at(double K, Sheet sheet) const {
    if (!has_folds()) return sheet == Sheet::lower;
    switch (sheet) {
        case Sheet::lower: return K <= eta_minus;
        case Sheet::upper: return K >= eta_plus;
        default: return K >= eta_plus && K <= eta_minus;
    }
}

double ManifoldGeometry::sheet_point(double K, Sheet sheet) const {
    // psi is monotone on each sheet; bisect psi(v) + K = 0 there.
    double lo, hi;
    const double upper_edge = std::min(psi_params.v_pole(), window.hi) - 1e-12;
    if (!has_folds()) {
        lo = window.lo;
        hi = upper_edge;
    } else if (sheet == Sheet::lower) {
        lo = window.lo;
        hi = folds[0].v;
    } else if (sheet == Sheet::repelling) {
        lo = folds[0].v;
        hi = folds[1].v;
    } else {
        lo = folds[1].v;
        hi = upper_edge;
    }
    auto f = [&](double v) { return psi(psi_params, v) + K; };
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0)
        throw std::runtime_error("sheet " + to_string(sheet) + " has no point at K=" +
                                 std::to_string(K));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0 || (hi - lo) < 1e-15 * std::max(1.0, std::abs(mid))) return mid;
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

ManifoldGeometry find_folds(const PsiParams& pp, VWindow window, int scan_points) {
    if (window.hi >= 0.0)
        throw std::invalid_argument("fold search window must satisfy hi < 0");
    if (window.lo >= window.hi)
        throw std::invalid_argument("fold search window must satisfy lo < hi");

    ManifoldGeometry geo;
    geo.psi_params = pp;
    geo.window = window;

    // Scan on a geometric rate grid: v(r) = (-gamma_tilde - (delta/pi)/r)/2
    // maps r in (0, inf) onto v in (-inf, v_pole), resolving fold pairs that
    // crowd against the pole (small-delta regimes).
    const double upper_edge = std::min(pp.v_pole(), window.hi);
    if (upper_edge <= window.lo)
        throw std::invalid_argument("fold search window lies beyond the manifold pole");
    const double r_lo = manifold_rate(pp, window.lo);
    const double eps_edge = 1e-9 * std::max(1.0, std::abs(upper_edge));
    const double r_hi = manifold_rate(pp, upper_edge - eps_edge);
    if (!(r_lo > 0.0) || !(r_hi > r_lo))
        throw std::invalid_argument("degenerate fold search window");

    const double log_lo = std::log(r_lo), log_hi = std::log(r_hi);
    auto v_of_idx = [&](int k) {
        const double lr = log_lo + (log_hi - log_lo) * k / (scan_points - 1);
        const double r = std::exp(lr);
        return (-pp.gamma_tilde - (pp.delta / kPi) / r) * 0.5;
    };

    std::vector<double> roots;
    double v_prev = v_of_idx(0);
    double f_prev = dpsi(pp, v_prev);
    for (int k = 1; k < scan_points; ++k) {
        const double v_cur = v_of_idx(k);
        const double f_cur = dpsi(pp, v_cur);
        if (f_prev == 0.0) roots.push_back(v_prev);
        else if ((f_prev < 0) != (f_cur < 0)) {
            double lo = v_prev, hi = v_cur, flo = f_prev;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = dpsi(pp, mid);
                if (fm == 0.0) { lo = hi = mid; break; }
                if ((fm < 0) == (flo < 0)) { lo = mid; flo = fm; }
                else hi = mid;
                if ((hi - lo) < 1e-14 * std::max(1.0, std::abs(mid))) break;
            }
            roots.push_back(0.5 * (lo + hi));
        }
        v_prev = v_cur;
        f_prev = f_cur;
    }

    if (roots.size() % 2 != 0)
        throw std::runtime_error(
            "fold scan found an odd number of sign changes (" +
            std::to_string(roots.size()) + " over " + std::to_string(scan_points) +
            " points); enlarge the search window");

    std::sort(roots.begin(), roots.end());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        Fold f;
        f.v = roots[i];
        f.K = -psi(pp, f.v);
        geo.folds.push_back(f);
    }
    if (geo.folds.size() == 2) {
        geo.folds[0].side = FoldSide::Fminus;  // smaller v: ends the lower sheet
        geo.folds[1].side = FoldSide::Fplus;   // larger v: ends the upper sheet
        geo.eta_minus = geo.folds[0].K;
        geo.eta_plus = geo.folds[1].K;
        geo.eta_zero = 0.5 * (geo.eta_plus + geo.eta_minus);
    }
    return geo;
}

FoldedSingularity classify_folded_singularity(const PsiParams& pp, const Fold& fold,
                                              double eta_bar, double tol) {
    FoldedSingularity fs;
    fs.v = fold.v;
    fs.side = fold.side;
    const double curv = d2psi(pp, fold.v);
    fs.sigma = -curv * (eta_bar + psi(pp, fold.v));
    const double scale = std::max(1.0, std::abs(curv));
    if (std::abs(fs.sigma) <= tol * scale) {
        fs.cls = SingularityClass::Degenerate;
    } else if (fs.sigma > 0) {
        fs.cls = SingularityClass::FoldedSaddle;
        const double lam = std::sqrt(fs.sigma);
        fs.eig_real = {lam, -lam};
    } else {
        fs.cls = SingularityClass::FoldedCentre;
        const double om = std::sqrt(-fs.sigma);
        fs.eig_imag = {om, -om};
    }
    return fs;
}

void drs_flow(const PsiParams& pp, double eta_bar, double v, double Q,
              double& dv, double& dQ) {
    dv = Q;
    dQ = -dpsi(pp, v) * (eta_bar + psi(pp, v));
}

namespace {

std::vector<CanardPoint> trace_separatrix(const PsiParams& pp, double eta_bar,
                                          double v0, double Q0, double arclength,
                                          double step, bool backward) {
    std::vector<CanardPoint> pts;
    double v = v0, Q = Q0, s = 0.0;
    const double sgn = backward ? -1.0 : 1.0;
    const double v_stop_hi = std::min(pp.v_pole() - 1e-9, -1e-9);
    pts.push_back({v, -psi(pp, v), Q});
    while (s < arclength) {
        // arclength-normalized RK4 in (v, Q)
        auto f = [&](double vv, double qq, double& dv, double& dq) {
            drs_flow(pp, eta_bar, vv, qq, dv, dq);
            const double norm = std::hypot(dv, dq);
            if (norm < 1e-300) { dv = 0; dq = 0; return; }
            dv = sgn * dv / norm;
            dq = sgn * dq / norm;
        };
        double k1v, k1q, k2v, k2q, k3v, k3q, k4v, k4q;
        f(v, Q, k1v, k1q);
        f(v + 0.5 * step * k1v, Q + 0.5 * step * k1q, k2v, k2q);
        f(v + 0.5 * step * k2v, Q + 0.5 * step * k2q, k3v, k3q);
        f(v + step * k3v, Q + step * k3q, k4v, k4q);
        v += step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        Q += step / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
        s += step;
        if (!(v < v_stop_hi) || !std::isfinite(v) || !std::isfinite(Q)) break;
        pts.push_back({v, -psi(pp, v), Q});
    }
    return pts;
}

std::vector<CanardPoint> join_halves(std::vector<CanardPoint> a,
                                     const std::vector<CanardPoint>& b) {
    std::reverse(a.begin(), a.end());
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

SingularCanards singular_canards(const PsiParams& pp, const FoldedSingularity& fs,
                                 double eta_bar, double arclength, double step) {
    if (fs.cls != SingularityClass::FoldedSaddle)
        throw std::invalid_argument("singular canards require a folded saddle");
    const double lam = std::sqrt(fs.sigma);
    const double delta0 = 1e-6 * std::max(1.0, std::abs(fs.v));

    // eigenvectors of [[0,1],[sigma,0]]: (1, +/-lambda)
    auto displace = [&](double sign_dir, double lambda) {
        const double norm = std::hypot(1.0, lambda);
        return std::pair<double, double>{fs.v + sign_dir * delta0 / norm,
                                         sign_dir * delta0 * lambda / norm};
    };

    SingularCanards out;
    {
        // stable separatrix (lambda < 0): integrate backward in DRS time;
        // in the reduced flow this is the orbit crossing the fold
        // from the attracting onto the repelling sheet (the true canard).
        auto [va, Qa] = displace(+1.0, -lam);
        auto [vb, Qb] = displace(-1.0, -lam);
        out.true_canard =
            join_halves(trace_separatrix(pp, eta_bar, va, Qa, arclength, step, true),
                        trace_separatrix(pp, eta_bar, vb, Qb, arclength, step, true));
    }
    {
        auto [va, Qa] = displace(+1.0, lam);
        auto [vb, Qb] = displace(-1.0, lam);
        out.faux_canard =
            join_halves(trace_separatrix(pp, eta_bar, va, Qa, arclength, step, false),
                        trace_separatrix(pp, eta_bar, vb, Qb, arclength, step, false));
    }
    return out;
}

ScenarioResult scenarios_impl(double eta_bar, const ManifoldGeometry& geo, double tol) {
    ScenarioResult res;
    const double ep = geo.eta_plus, e0 = geo.eta_zero, em = geo.eta_minus;
    const double scale = std::max(1.0, std::abs(em - ep));
    auto near = [&](double a, double b) { return std::abs(a - b) <= tol * scale; };
    if (near(eta_bar, ep)) res.boundary = "eta_plus (I/II)";
    else if (near(eta_bar, e0)) res.boundary = "eta_zero (II/III)";
    else if (near(eta_bar, em)) res.boundary = "eta_minus (III/IV)";
    if (eta_bar < ep) res.scenario = ScenarioCase::I;
    else if (eta_bar < e0) res.scenario = ScenarioCase::II;
    else if (eta_bar < em) res.scenario = ScenarioCase::III;
    else res.scenario = ScenarioCase::IV;
    return res;
}

ScenarioResult scenario_classify(double eta_bar, const ManifoldGeometry& geo,
                                 double tol) {
    if (!geo.has_folds())
        throw std::runtime_error("no excitable structure: geometry has no folds");
    return scenarios_impl(eta_bar, geo, tol);
}

SheetStability fast_subsystem_stability(const PsiParams& pp, double tau_s, double v) {
    // fast subsystem about a manifold point:
    //   r' = delta/pi + 2 r v + gamma_tilde * s
    //   v' = quad_scale_inv handling is immaterial for sign tests in the
    //        plain variants; the sparse variant scales the (K, s) input by
    //        sqrt(M), which is 1/quad_scale.
    //   s' = (-s + r)/tau_s
    // with r = s = manifold_rate(v). The Jacobian rows follow directly.
    const double r = manifold_rate(pp, v);
    const double c = pp.rate_sq_coeff;
    const double in_scale = 1.0 / pp.quad_scale;  // sqrt(M) for the sparse family
    const double a11 = 2.0 * v, a12 = 2.0 * r, a13 = pp.gamma_tilde;
    const double a21 = -2.0 * c * r, a22 = 2.0 * v, a23 = in_scale * pp.j_psi;
    const double a31 = 1.0 / tau_s, a32 = 0.0, a33 = -1.0 / tau_s;

    // char poly: lambda^3 + c2 lambda^2 + c1 lambda + c0
    const double tr = a11 + a22 + a33;
    const double m11 = a22 * a33 - a23 * a32;
    const double m22 = a11 * a33 - a13 * a31;
    const double m33 = a11 * a22 - a12 * a21;
    const double det = a11 * m11 - a12 * (a21 * a33 - a23 * a31) +
                       a13 * (a21 * a32 - a22 * a31);
    const double c2 = -tr;
    const double c1 = m11 + m22 + m33;
    const double c0 = -det;

    SheetStability st;
    st.char_poly = {c2, c1, c0};
    // Routh-Hurwitz for a cubic: all roots in the left half-plane iff
    // c2 > 0, c0 > 0 and c2*c1 > c0.
    st.attracting = (c2 > 0.0) && (c0 > 0.0) && (c2 * c1 > c0);
    return st;
}

std::vector<ManifoldSample> sample_manifold(const ManifoldGeometry& geo, int n_points) {
    std::vector<ManifoldSample> out;
    const PsiParams& pp = geo.psi_params;
    const double upper_edge = std::min(pp.v_pole(), geo.window.hi);
    const double r_lo = manifold_rate(pp, geo.window.lo);
    const double r_hi = manifold_rate(pp, upper_edge - 1e-9 * std::max(1.0, std::abs(upper_edge)));
    const double log_lo = std::log(r_lo), log_hi = std::log(r_hi);
    out.reserve(static_cast<std::size_t>(n_points));
    for (int k = 0; k < n_points; ++k) {
        const double lr = log_lo + (log_hi - log_lo) * k / (n_points - 1);
        const double r_grid = std::exp(lr);
        const double v = (-pp.gamma_tilde - (pp.delta / kPi) / r_grid) * 0.5;
        // re-derive the rate from the rounded v so the sample is consistent
        // with psi to rounding accuracy even against the pole
        const double r = manifold_rate(pp, v);
        out.push_back({v, r, r, -psi(pp, v), geo.sheet_of(v)});
    }
    return out;
}

}  // namespace qifc
