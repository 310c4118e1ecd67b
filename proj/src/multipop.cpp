#include "qifc/multipop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qifc {

namespace {

constexpr double kPi = std::numbers::pi;

// dense Gaussian elimination with partial pivoting; n stays small
bool solve_linear(std::vector<double> a, std::vector<double> b,
                  std::vector<double>& x, int n, double pivot_tol = 1e-13) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (std::abs(a[piv * n + col]) < pivot_tol) return false;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return true;
}

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

MultiPopManifold::MultiPopManifold(MultiPopParams params, Convention conv)
    : params_(std::move(params)),
      c_(conv == Convention::pi2 ? kPi * kPi : kPi) {
    params_.validate();
}

double MultiPopManifold::rate(int i, double v) const {
    return -(params_.delta[i] / kPi) / (2.0 * v + params_.gamma_tilde[i]);
}

double MultiPopManifold::drate(int i, double v) const {
    const double u = 2.0 * v + params_.gamma_tilde[i];
    return 2.0 * (params_.delta[i] / kPi) / (u * u);
}

double MultiPopManifold::Psi(int i, std::span<const double> v) const {
    const int np = params_.p;
    const double ri = rate(i, v[i]);
    double acc = v[i] * v[i] - c_ * ri * ri;
    if (i != params_.forced) acc += params_.eta_bar[i];
    for (int j = 0; j < np; ++j)
        acc += params_.J_tilde[i * np + j] * rate(j, v[j]);
    return acc;
}

double MultiPopManifold::dPsi(int i, int j, std::span<const double> v) const {
    const int np = params_.p;
    double acc = params_.J_tilde[i * np + j] * drate(j, v[j]);
    if (i == j) {
        const double ri = rate(i, v[i]);
        acc += 2.0 * v[i] - 2.0 * c_ * ri * drate(i, v[i]);
    }
    return acc;
}

void MultiPopManifold::constraints(std::span<const double> v, double K,
                                   std::span<double> out) const {
    for (int i = 0; i < params_.p; ++i)
        out[i] = Psi(i, v) + (i == params_.forced ? K : 0.0);
}

namespace {

// deflation factor prod_k (1/|v - root_k|^2 + 1) and its gradient / value
double deflation_value(const std::vector<std::vector<double>>& roots,
                       std::span<const double> v, std::vector<double>* grad) {
    double M = 1.0;
    if (grad) grad->assign(v.size(), 0.0);
    for (const auto& rt : roots) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - rt[i];
            d2 += d * d;
        }
        d2 = std::max(d2, 1e-300);
        const double term = 1.0 / d2 + 1.0;
        if (grad) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double d = v[i] - rt[i];
                // d/dv_i of (1/d2): -2 d / d2^2; accumulate log-derivative
                (*grad)[i] += (-2.0 * d / (d2 * d2)) / term;
            }
        }
        M *= term;
    }
    if (grad)
        for (auto& g : *grad) g *= M;  // grad of product via log-derivative
    return M;
}

}  // namespace

MultiPopRoots multipop_manifold_solve(const MultiPopManifold& mf, double K,
                                      const std::vector<std::vector<double>>& guesses,
                                      double tol, int max_iter) {
    const int n = mf.p();
    MultiPopRoots out;

    std::vector<std::vector<double>> seeds = guesses;
    if (seeds.empty()) {
        // decoupled per-population branches as a seed lattice
        std::vector<std::vector<double>> per_pop(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            PsiParams pp;
            pp.delta = mf.params().delta[i];
            pp.gamma_tilde = mf.params().gamma_tilde[i];
            pp.j_psi = mf.params().J_tilde[i * n + i];
            pp.rate_sq_coeff = kPi * kPi;
            pp.quad_scale = 1.0;
            const double offset =
                (i == mf.forced()) ? K : mf.params().eta_bar[i];
            ManifoldGeometry geo;
            try {
                geo = find_folds(pp);
            } catch (const std::exception&) {
                per_pop[i].push_back(-1.0);
                continue;
            }
            for (Sheet sh : {Sheet::lower, Sheet::repelling, Sheet::upper}) {
                try {
                    per_pop[i].push_back(geo.sheet_point(offset, sh));
                } catch (const std::exception&) {
                }
            }
            if (per_pop[i].empty()) per_pop[i].push_back(-1.0);
        }
        // Cartesian product
        std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
        while (true) {
            std::vector<double> seed(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) seed[i] = per_pop[i][idx[i]];
            seeds.push_back(std::move(seed));
            int carry = 0;
            while (carry < n) {
                if (++idx[carry] < per_pop[carry].size()) break;
                idx[carry] = 0;
                ++carry;
            }
            if (carry == n) break;
        }
    }

    std::vector<double> F(static_cast<std::size_t>(n)), x, step, grad;
    for (const auto& seed : seeds) {
        std::vector<double> v = seed;
        bool converged = false;
        int it = 0;
        double resid = 0.0;
        std::string message;
        for (; it < max_iter; ++it) {
            mf.constraints(v, K, F);
            const double M = deflation_value(out.roots, v, &grad);
            resid = norm2(F);
            if (resid <= tol) {
                converged = true;
                break;
            }
            // deflated Jacobian: M*J + (grad M) F^T
            std::vector<double> J(static_cast<std::size_t>(n * n));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    J[i * n + j] = M * mf.dPsi(i, j, v) + grad[j] * F[i];
            std::vector<double> rhs(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) rhs[i] = -M * F[i];
            if (!solve_linear(J, rhs, step, n)) {
                message = "singular Jacobian";
                break;
            }
            // backtracking on the deflated residual
            double alpha = 1.0;
            const double base = M * resid;
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                std::vector<double> trial = v;
                for (int i = 0; i < n; ++i) trial[i] += alpha * step[i];
                mf.constraints(trial, K, F);
                const double Mt = deflation_value(out.roots, trial, nullptr);
                if (Mt * norm2(F) < (1.0 - 1e-4 * alpha) * base) {
                    v = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                message = "line search stalled";
                break;
            }
        }
        if (converged) {
            // deduplicate
            bool dup = false;
            for (const auto& rt : out.roots) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d = std::max(d, std::abs(rt[i] - v[i]));
                if (d < 1e-8) dup = true;
            }
            if (!dup) out.roots.push_back(v);
        } else {
            NewtonFailure nf;
            nf.guess = seed;
            nf.iterations = it;
            nf.residual = resid;
            nf.message = message.empty() ? "no convergence within iteration budget"
                                         : message;
            out.failures.push_back(std::move(nf));
        }
    }
    return out;
}

MultiPopDrsDerivative multipop_drs_flow(const MultiPopManifold& mf,
                                        const MultiPopDrsState& st) {
    const int n = mf.p();
    const int k = mf.forced();
    MultiPopDrsDerivative d;
    d.dvk = st.Q;
    const double psik = mf.Psi(k, st.v);
    d.dQ = -mf.dPsi(k, k, st.v) * (mf.params().eta_bar[k] + psik);

    if (n > 1) {
        const int m = n - 1;
        std::vector<double> A(static_cast<std::size_t>(m * m)),
            b(static_cast<std::size_t>(m)), w;
        int ri = 0;
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            int cj = 0;
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                A[ri * m + cj] = mf.dPsi(i, j, st.v);
                ++cj;
            }
            b[ri] = -mf.dPsi(i, k, st.v);
            ++ri;
        }
        if (!solve_linear(A, b, w, m))
            throw std::runtime_error(
                "slaving system is singular (fold of the slaving map)");
        d.dv_slaved.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) d.dv_slaved[i] = w[i] * st.Q;
    }
    return d;
}

namespace {

// Newton-correct the slaved coordinates (v_k held fixed).
bool project_slaved(const MultiPopManifold& mf, std::vector<double>& v,
                    double tol = 1e-12, int iters = 20) {
    const int n = mf.p();
    const int k = mf.forced();
    if (n == 1) return true;
    const int m = n - 1;
    std::vector<double> F(static_cast<std::size_t>(m)),
        A(static_cast<std::size_t>(m * m)), dx;
    for (int it = 0; it < iters; ++it) {
        int ri = 0;
        double resid = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            F[ri] = mf.Psi(i, v);
            resid = std::max(resid, std::abs(F[ri]));
            ++ri;
        }
        if (resid <= tol) return true;
        ri = 0;
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            int cj = 0;
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                A[ri * m + cj] = mf.dPsi(i, j, v);
                ++cj;
            }
            F[ri] = -F[ri];
            ++ri;
        }
        if (!solve_linear(A, F, dx, m)) return false;
        int ci = 0;
        for (int j = 0; j < n; ++j) {
            if (j == k) continue;
            v[j] += dx[ci++];
        }
    }
    return false;
}

}  // namespace

std::vector<MultiPopDrsState> integrate_multipop_drs(const MultiPopManifold& mf,
                                                     MultiPopDrsState start,
                                                     double arclength, double step) {
    std::vector<MultiPopDrsState> path;
    const int k = mf.forced();
    MultiPopDrsState st = std::move(start);
    if (!project_slaved(mf, st.v))
        throw std::runtime_error("initial state does not satisfy the constraints");
    path.push_back(st);
    double s = 0.0;
    while (s < arclength) {
        // RK4 on (v_k, Q), arclength-normalized; slaved coords ride along
        auto deriv = [&](const MultiPopDrsState& x) {
            MultiPopDrsDerivative d = multipop_drs_flow(mf, x);
            const double nrm = std::hypot(d.dvk, d.dQ);
            if (nrm < 1e-300) return d;
            d.dvk /= nrm;
            d.dQ /= nrm;
            for (auto& dv : d.dv_slaved) dv /= nrm;
            return d;
        };
        auto advance = [&](const MultiPopDrsState& x, const MultiPopDrsDerivative& d,
                           double h) {
            MultiPopDrsState y = x;
            y.v[k] += h * d.dvk;
            y.Q += h * d.dQ;
            int ci = 0;
            for (int j = 0; j < mf.p(); ++j) {
                if (j == k) continue;
                y.v[j] += h * d.dv_slaved[ci++];
            }
            return y;
        };
        const auto d1 = deriv(st);
        const auto d2 = deriv(advance(st, d1, 0.5 * step));
        const auto d3 = deriv(advance(st, d2, 0.5 * step));
        const auto d4 = deriv(advance(st, d3, step));
        MultiPopDrsState nxt = st;
        nxt.v[k] += step / 6.0 * (d1.dvk + 2 * d2.dvk + 2 * d3.dvk + d4.dvk);
        nxt.Q += step / 6.0 * (d1.dQ + 2 * d2.dQ + 2 * d3.dQ + d4.dQ);
        int ci = 0;
        for (int j = 0; j < mf.p(); ++j) {
            if (j == k) continue;
            nxt.v[j] += step / 6.0 *
                        (d1.dv_slaved[ci] + 2 * d2.dv_slaved[ci] +
                         2 * d3.dv_slaved[ci] + d4.dv_slaved[ci]);
            ++ci;
        }
        if (!project_slaved(mf, nxt.v)) break;
        st = nxt;
        path.push_back(st);
        s += step;
    }
    return path;
}

std::vector<MultiPopFoldedSingularity> multipop_folded_singularities(
    const MultiPopManifold& mf, const std::vector<double>& branch_seed,
    double vk_lo, double vk_hi, int scan_points, double tol) {
    const int k = mf.forced();
    std::vector<MultiPopFoldedSingularity> out;

    // continuation of the slaved branch over a v_k grid
    std::vector<double> v = branch_seed;
    auto h_at = [&](double vk, std::vector<double>& vv) -> std::optional<double> {
        vv[k] = vk;
        if (!project_slaved(mf, vv)) return std::nullopt;
        return mf.dPsi(k, k, vv);
    };

    double v_prev = vk_lo;
    auto h_prev = h_at(v_prev, v);
    std::vector<double> v_carry = v;
    for (int i = 1; i < scan_points; ++i) {
        const double vk = vk_lo + (vk_hi - vk_lo) * i / (scan_points - 1);
        auto h_cur = h_at(vk, v_carry);
        if (h_prev && h_cur && (*h_prev < 0) != (*h_cur < 0)) {
            double lo = v_prev, hi = vk, flo = *h_prev;
            std::vector<double> vb = v_carry;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                auto fm = h_at(mid, vb);
                if (!fm) break;
                if ((*fm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = *fm;
                } else {
                    hi = mid;
                }
                if (hi - lo < 1e-13 * std::max(1.0, std::abs(mid))) break;
            }
            const double vstar = 0.5 * (lo + hi);
            std::vector<double> vs = vb;
            if (h_at(vstar, vs)) {
                // sigma from the branch derivative of h by central differences
                const double dh = 1e-6 * std::max(1.0, std::abs(vstar));
                std::vector<double> va = vs, vc = vs;
                auto ha = h_at(vstar - dh, va);
                auto hc = h_at(vstar + dh, vc);
                if (ha && hc) {
                    const double dhdv = (*hc - *ha) / (2.0 * dh);
                    const double sigma =
                        -dhdv * (mf.params().eta_bar[k] + mf.Psi(k, vs));
                    MultiPopFoldedSingularity fs;
                    fs.v = vs;
                    fs.sigma = sigma;
                    fs.cls = std::abs(sigma) <= tol ? SingularityClass::Degenerate
                             : sigma > 0           ? SingularityClass::FoldedSaddle
                                                   : SingularityClass::FoldedCentre;
                    out.push_back(std::move(fs));
                }
            }
        }
        v_prev = vk;
        h_prev = h_cur;
    }
    return out;
}

}  // namespace qifc
