#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "qifc/params.hpp"
#include "qifc/rng.hpp"

namespace qifc {

struct ForcingState {
    double K;
    double Q;
};

// Exact solution of K' = eps Q, Q' = -eps (K - eta_bar) with
// K(0) = eta_bar, Q(0) = A.
inline ForcingState forcing_state(double t, const ForcingParams& fp) {
    return {fp.eta_bar + fp.A * std::sin(fp.eps * t), fp.A * std::cos(fp.eps * t)};
}

inline double ForcingParams_period(const ForcingParams& fp) {
    return 2.0 * std::numbers::pi / fp.eps;
}

struct GeneralizedCoefficients {
    double gamma_tilde;
    double j_tilde;
};

inline GeneralizedCoefficients generalized_coefficients(double Gamma, double g,
                                                        double J, double a) {
    if (a <= 0) throw std::domain_error("spike asymmetry a must be > 0");
    return {Gamma / std::numbers::pi - g, J + g * std::log(a)};
}

// n iid draws from Cauchy(center, hwhm). Heavy tails are not truncated.
inline std::vector<double> sample_cauchy_iid(double center, double hwhm, long n,
                                             StreamRng& rng) {
    if (hwhm < 0) throw std::invalid_argument("hwhm must be >= 0");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& x : out)
        x = center + hwhm * std::tan(std::numbers::pi * (rng.uniform01() - 0.5));
    return out;
}

// The n equiprobable quantiles of Cauchy(center, hwhm), ascending. Two calls
// with identical arguments return identical lists.
inline std::vector<double> sample_cauchy_quantile(double center, double hwhm, long n) {
    if (hwhm < 0) throw std::invalid_argument("hwhm must be >= 0");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long i = 1; i <= n; ++i) {
        const double u = 0.5 * std::numbers::pi * static_cast<double>(2 * i - n - 1) /
                         static_cast<double>(n + 1);
        out[static_cast<std::size_t>(i - 1)] = center + hwhm * std::tan(u);
    }
    return out;
}

inline std::vector<double> sample_cauchy(double center, double hwhm, long n,
                                         EtaMode mode, StreamRng& rng) {
    return mode == EtaMode::quantile ? sample_cauchy_quantile(center, hwhm, n)
                                     : sample_cauchy_iid(center, hwhm, n, rng);
}

}  // namespace qifc
