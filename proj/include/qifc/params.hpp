#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qifc {

enum class Convention { pi2, printed };        // rate term: -pi^2 r^2 vs -pi r^2
enum class JumpConvention { meanfield, literal };
enum class EtaMode { quantile, iid };

inline std::string to_string(Convention c) { return c == Convention::pi2 ? "pi2" : "printed"; }
inline std::string to_string(JumpConvention j) { return j == JumpConvention::meanfield ? "meanfield" : "literal"; }
inline std::string to_string(EtaMode m) { return m == EtaMode::quantile ? "quantile" : "iid"; }

// Slow sinusoidal drive K(t) = eta_bar + A sin(eps t), Q(t) = A cos(eps t).
struct ForcingParams {
    double A = 0.0;        // amplitude
    double eps = 0.05;     // slow frequency
    double eta_bar = 0.0;  // oscillation center

    double period() const;
    void validate() const {
        if (A < 0) throw std::invalid_argument("forcing.A must be >= 0");
        if (eps <= 0) throw std::invalid_argument("forcing.eps must be > 0");
    }
};

struct QifParams {
    long N = 1;
    double J = 0.0;        // synaptic strength
    double tau_s = 0.1;    // synaptic time constant
    double eta_bar = 0.0;  // center of the background-current distribution
    double delta = 0.0;    // HWHM of the background-current distribution
    double V_t = 100.0;    // firing threshold
    double V_r = -100.0;   // reset value
    std::uint64_t seed = 1;

    void validate() const {
        if (N < 1) throw std::invalid_argument("N must be >= 1");
        if (tau_s <= 0) throw std::invalid_argument("tau_s must be > 0");
        if (delta < 0) throw std::invalid_argument("delta must be >= 0");
        if (V_t <= 0) throw std::invalid_argument("V_t must be > 0");
        if (V_r >= V_t) throw std::invalid_argument("V_r must be < V_t");
    }
};

// Mean-field family with coupling heterogeneity (Gamma), electrical coupling
// (g) and spike asymmetry (a). Gamma = g = 0, a = 1 recovers the plain model.
struct GeneralMfParams {
    double delta = 1.0;
    double J = 0.0;
    double tau_s = 0.1;
    double eta_bar = 0.0;
    double Gamma = 0.0;
    double g = 0.0;
    double a = 1.0;

    double gamma_tilde() const;  // Gamma/pi - g
    double j_tilde() const;      // J + g ln a

    void validate() const {
        if (delta < 0) throw std::invalid_argument("delta must be >= 0");
        if (tau_s <= 0) throw std::invalid_argument("tau_s must be > 0");
        if (a <= 0) throw std::invalid_argument("a must be > 0");
    }
};

struct MultiPopParams {
    int p = 1;
    std::vector<double> delta;        // per population
    std::vector<double> gamma_tilde;  // per population
    std::vector<double> eta_bar;      // per population
    std::vector<double> tau_s;        // per population
    std::vector<double> J_tilde;      // p x p, row-major: J_tilde[i*p+j]
    int forced = 0;                   // index k of the forced population (0-based)
    ForcingParams forcing;

    void validate() const {
        if (p < 1) throw std::invalid_argument("p must be >= 1");
        auto check = [&](const std::vector<double>& v, const char* name) {
            if (static_cast<int>(v.size()) != p)
                throw std::invalid_argument(std::string(name) + " must have p entries");
        };
        check(delta, "delta");
        check(gamma_tilde, "gamma_tilde");
        check(eta_bar, "eta_bar");
        check(tau_s, "tau_s");
        if (static_cast<int>(J_tilde.size()) != p * p)
            throw std::invalid_argument("J_tilde must be a p x p matrix");
        if (forced < 0 || forced >= p)
            throw std::invalid_argument("forced population index out of range");
        for (double d : delta)
            if (d <= 0) throw std::invalid_argument("all delta_i must be > 0");
        for (double t : tau_s)
            if (t <= 0) throw std::invalid_argument("all tau_s_i must be > 0");
        forcing.validate();
    }
};

// Sparse network. eta_bar, delta and forcing.A are quoted at mean-field
// scale; the network applies the sqrt(M) scalings internally (currents
// centered at eta_bar*sqrt(M) with HWHM delta*sqrt(M), drive amplitude
// A*sqrt(M), coupling J/(N sqrt(M))).
struct SparseParams {
    long N = 1000;
    long M = 100;            // expected in-degree
    double delta_gamma = 0.3;  // degree-distribution HWHM scale
    double J = 1.0;
    double tau_s = 0.015;
    double eta_bar = -0.5;
    double delta = 1e-4;
    std::uint64_t seed = 1;
    ForcingParams forcing;

    void validate() const {
        if (N < 1) throw std::invalid_argument("N must be >= 1");
        if (M < 1 || M > N) throw std::invalid_argument("M must satisfy 1 <= M <= N");
        if (delta_gamma < 0) throw std::invalid_argument("delta_gamma must be >= 0");
        if (tau_s <= 0) throw std::invalid_argument("tau_s must be > 0");
        if (delta < 0) throw std::invalid_argument("delta must be >= 0");
        forcing.validate();
    }
};

}  // namespace qifc
