#include "qifc/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "qifc/sampling.hpp"

namespace qifc {

namespace {
constexpr double kPi = std::numbers::pi;
}

void Connectivity::build_out_lists(long n) {
    out.assign(static_cast<std::size_t>(n), {});
    for (std::size_t i = 0; i < pre.size(); ++i)
        for (std::int32_t j : pre[i]) out[static_cast<std::size_t>(j)].push_back(
            static_cast<std::int32_t>(i));
}

Connectivity build_sparse_connectivity(const SparseParams& sp,
                                       const SparseBuildOptions& opts) {
    sp.validate();
    const long N = sp.N, M = sp.M;
    const double hwhm = sp.delta_gamma * std::sqrt(static_cast<double>(M));
    StreamRng rng(sp.seed, "connectivity");

    Connectivity conn;
    conn.sparse_scaling = true;
    conn.pre.resize(static_cast<std::size_t>(N));
    conn.degree.resize(static_cast<std::size_t>(N));

    auto draw_candidate = [&]() {
        return static_cast<double>(M) +
               hwhm * std::tan(kPi * (rng.uniform01() - 0.5));
    };

    std::vector<std::int32_t> perm(static_cast<std::size_t>(N));
    std::iota(perm.begin(), perm.end(), 0);

    for (long i = 0; i < N; ++i) {
        long gamma;
        if (opts.literal_zero_degree) {
            const double k = draw_candidate();
            gamma = (k >= 0.0 && k <= 2.0 * static_cast<double>(M))
                        ? static_cast<long>(std::floor(k))
                        : 0;
        } else {
            double k;
            do {
                k = draw_candidate();
            } while (!(k >= 0.0 && k <= 2.0 * static_cast<double>(M)));
            gamma = static_cast<long>(std::floor(k));
        }
        gamma = std::min(gamma, opts.allow_self_connections ? N : N - 1);

        // partial Fisher-Yates over the reusable identity permutation
        auto& row = conn.pre[static_cast<std::size_t>(i)];
        row.resize(static_cast<std::size_t>(gamma));
        long avail = N;
        long taken = 0;
        for (long t = 0; t < gamma; ++t) {
            const long span = avail - t;
            long j = t + static_cast<long>(rng.uniform_below(
                             static_cast<std::uint64_t>(span)));
            if (!opts.allow_self_connections && perm[static_cast<std::size_t>(j)] ==
                                                    static_cast<std::int32_t>(i)) {
                // swap the forbidden entry to the end of the active range once
                std::swap(perm[static_cast<std::size_t>(j)],
                          perm[static_cast<std::size_t>(avail - 1)]);
                --avail;
                const long span2 = avail - t;
                j = t + static_cast<long>(rng.uniform_below(
                            static_cast<std::uint64_t>(span2)));
            }
            std::swap(perm[static_cast<std::size_t>(t)],
                      perm[static_cast<std::size_t>(j)]);
            row[static_cast<std::size_t>(t)] = perm[static_cast<std::size_t>(t)];
            ++taken;
        }
        conn.degree[static_cast<std::size_t>(i)] =
            static_cast<std::int32_t>(taken);
        // restore the identity permutation
        std::iota(perm.begin(), perm.end(), 0);
    }
    conn.build_out_lists(N);
    return conn;
}

DenseNetwork build_dense(const QifParams& params, const ForcingParams& forcing,
                         EtaMode eta_mode, JumpConvention jump) {
    params.validate();
    forcing.validate();
    DenseNetwork net;
    net.params = params;
    net.forcing = forcing;
    net.eta_mode = eta_mode;
    net.jump = jump;
    StreamRng rng(params.seed, "currents");
    net.eta = sample_cauchy(params.eta_bar, params.delta, params.N, eta_mode, rng);
    return net;
}

double SparseNetwork::coupling_weight() const {
    return params.J / (static_cast<double>(params.N) *
                       std::sqrt(static_cast<double>(params.M)));
}

double SparseNetwork::drive_amplitude() const {
    return params.forcing.A * std::sqrt(static_cast<double>(params.M));
}

SparseNetwork build_sparse(const SparseParams& params, JumpConvention jump,
                           EtaMode eta_mode, const SparseBuildOptions& opts) {
    params.validate();
    SparseNetwork net;
    net.params = params;
    net.jump = jump;
    net.eta_mode = eta_mode;
    const double sqrtM = std::sqrt(static_cast<double>(params.M));
    StreamRng rng(params.seed, "currents");
    net.eta = sample_cauchy(params.eta_bar * sqrtM, params.delta * sqrtM, params.N,
                            eta_mode, rng);
    net.conn = build_sparse_connectivity(params, opts);
    return net;
}

RasterSummary rate_estimate(const std::vector<SpikeEvent>& spike_log, double bin_dt,
                            long N, TimeWindow window) {
    if (bin_dt <= 0) throw std::invalid_argument("bin_dt must be > 0");
    RasterSummary rs;
    rs.bin_dt = bin_dt;
    rs.t0 = window.t0;
    rs.N = N;
    const long nbins =
        std::max(1L, static_cast<long>(std::ceil(window.length() / bin_dt)));
    rs.counts.assign(static_cast<std::size_t>(nbins), 0);
    for (const auto& ev : spike_log) {
        if (!window.contains(ev.t)) continue;
        long b = static_cast<long>((ev.t - window.t0) / bin_dt);
        b = std::clamp(b, 0L, nbins - 1);
        rs.counts[static_cast<std::size_t>(b)]++;
    }
    rs.rate.resize(rs.counts.size());
    for (std::size_t i = 0; i < rs.counts.size(); ++i)
        rs.rate[i] = static_cast<double>(rs.counts[i]) /
                     (static_cast<double>(N) * bin_dt);
    return rs;
}

NetworkSim::NetworkSim(DenseNetwork net) : dense_(std::move(net)) {
    N_ = dense_->params.N;
    V_t_ = dense_->params.V_t;
    V_r_ = dense_->params.V_r;
    tau_s_ = dense_->params.tau_s;
    drive_amp_ = dense_->forcing.A;
    state_.v.assign(static_cast<std::size_t>(N_), 0.0);
    state_.s.assign(static_cast<std::size_t>(N_), 0.0);
    v_pre_.resize(static_cast<std::size_t>(N_));
}

NetworkSim::NetworkSim(SparseNetwork net) : sparse_(std::move(net)) {
    N_ = sparse_->params.N;
    V_t_ = 100.0;
    V_r_ = -100.0;
    tau_s_ = sparse_->params.tau_s;
    drive_amp_ = sparse_->drive_amplitude();
    w_unit_ = sparse_->coupling_weight();
    state_.v.assign(static_cast<std::size_t>(N_), 0.0);
    state_.s.assign(static_cast<std::size_t>(N_), 0.0);
    coupling_.assign(static_cast<std::size_t>(N_), 0.0);
    v_pre_.resize(static_cast<std::size_t>(N_));
}

void NetworkSim::set_refractory_hold(bool on) {
    refractory_hold_ = on;
    if (on)
        hold_until_.assign(static_cast<std::size_t>(N_),
                           -std::numeric_limits<double>::infinity());
}

double NetworkSim::drive(double t) const {
    const ForcingParams& f = dense_ ? dense_->forcing : sparse_->params.forcing;
    return drive_scale_ * drive_amp_ * std::sin(f.eps * t);
}

double NetworkSim::gate_sum() const {
    return pairwise_sum(state_.s);
}

void NetworkSim::step(double dt, NetIntegrator method) {
    const double t = state_.t;
    const long N = N_;
    double* v = state_.v.data();
    double* s = state_.s.data();
    double* vp_ = v_pre_.data();
    const double* eta = dense_ ? dense_->eta.data() : sparse_->eta.data();

    const double x = dt / tau_s_;
    const double decay =
        method == NetIntegrator::euler ? 1.0 - x : 1.0 - x + 0.5 * x * x;

    if (dense_) {
        const double coupling_gain = dense_->params.J / static_cast<double>(N);
        const double common1 = drive(t) + coupling_gain * gate_sum_;
        if (method == NetIntegrator::euler) {
            for (long i = 0; i < N; ++i) {
                const double vi = v[i];
                vp_[i] = vi;
                v[i] = vi + dt * (vi * vi + eta[i] + common1);
                s[i] *= decay;
            }
        } else {
            const double common2 =
                drive(t + dt) + coupling_gain * (gate_sum_ * decay);
            for (long i = 0; i < N; ++i) {
                const double vi = v[i];
                vp_[i] = vi;
                const double f1 = vi * vi + eta[i] + common1;
                const double vp = vi + dt * f1;
                const double f2 = vp * vp + eta[i] + common2;
                v[i] = vi + 0.5 * dt * (f1 + f2);
                s[i] *= decay;
            }
        }
    } else {
        double* c = coupling_.data();
        const double i1 = drive(t);
        if (method == NetIntegrator::euler) {
            for (long i = 0; i < N; ++i) {
                const double vi = v[i];
                vp_[i] = vi;
                v[i] = vi + dt * (vi * vi + eta[i] + i1 + c[i]);
                s[i] *= decay;
                c[i] *= decay;
            }
        } else {
            const double i2 = drive(t + dt);
            for (long i = 0; i < N; ++i) {
                const double vi = v[i];
                vp_[i] = vi;
                const double f1 = vi * vi + eta[i] + i1 + c[i];
                const double vp = vi + dt * f1;
                const double f2 = vp * vp + eta[i] + i2 + c[i] * decay;
                v[i] = vi + 0.5 * dt * (f1 + f2);
                s[i] *= decay;
                c[i] *= decay;
            }
        }
    }
    gate_sum_ *= decay;

    if (refractory_hold_) {
        for (long i = 0; i < N; ++i)
            if (t < hold_until_[static_cast<std::size_t>(i)]) {
                v[i] = V_r_;
                vp_[i] = V_r_;
            }
    }

    apply_resets_and_jumps(dt, v_pre_);
    state_.t = t + dt;
}

void NetworkSim::apply_resets_and_jumps(double dt, const std::vector<double>& v_pre) {
    const double t = state_.t;
    const long N = N_;
    double* v = state_.v.data();
    double* s = state_.s.data();

    crossers_.clear();
    for (long i = 0; i < N; ++i) {
        if (!(v[i] < V_t_)) {
            if (!std::isfinite(v[i]))
                throw IntegrationError("nonfinite membrane potential", t, i);
            crossers_.push_back(static_cast<std::int32_t>(i));
        }
    }
    if (crossers_.empty()) return;

    for (std::int32_t i : crossers_) {
        const double vp = v_pre[static_cast<std::size_t>(i)];
        const double vn = v[i];
        double frac = (V_t_ - vp) / (vn - vp);
        if (!std::isfinite(frac)) frac = 1.0;
        frac = std::clamp(frac, 0.0, 1.0);
        const double t_cross = t + frac * dt;
        if (log_spikes_enabled_) state_.spike_log.push_back({t_cross, i});
        state_.spike_count++;
        v[i] = V_r_;
        if (refractory_hold_)
            hold_until_[static_cast<std::size_t>(i)] = t_cross + 2.0 / V_t_;
    }

    if (dense_) {
        const double jump = static_cast<double>(crossers_.size()) *
                            dense_->kappa() / static_cast<double>(N);
        for (long j = 0; j < N; ++j) s[j] += jump;
        gate_sum_ += jump * static_cast<double>(N);
    } else {
        const double kappa = sparse_->kappa();
        const double cj = w_unit_ * kappa;
        for (std::int32_t i : crossers_) {
            s[i] += kappa;
            for (std::int32_t tgt : sparse_->conn.out[static_cast<std::size_t>(i)])
                coupling_[static_cast<std::size_t>(tgt)] += cj;
        }
        gate_sum_ += kappa * static_cast<double>(crossers_.size());
    }
}

NetRunResult NetworkSim::integrate(double t1, double dt, NetIntegrator method,
                                   const RasterSpec& spec) {
    if (dt <= 0) throw std::invalid_argument("dt must be > 0");
    if (dt > tau_s_ / 10.0 && !spec.allow_coarse_dt)
        throw std::invalid_argument(
            "dt does not resolve tau_s (need dt <= tau_s/10); pass "
            "allow_coarse_dt to override");

    NetRunResult out;
    const double t0 = state_.t;
    if (t1 <= t0) return out;
    sync_coupling_from_gates();

    const long nsteps = std::max(1L, std::lround((t1 - t0) / dt));
    const double h = (t1 - t0) / static_cast<double>(nsteps);
    const long record_every = std::max(1L, std::lround(spec.record_dt / h));
    const std::size_t expected_rows =
        static_cast<std::size_t>(nsteps / record_every) + 2;
    if (expected_rows > spec.max_rows)
        throw std::runtime_error(
            "recording would produce " + std::to_string(expected_rows) +
            " rows (cap " + std::to_string(spec.max_rows) +
            "); increase record_dt or reduce the span");

    log_spikes_enabled_ = spec.keep_spike_log;

    long spikes_at_last_record = state_.spike_count;
    auto record_row = [&](double interval) {
        const long Nn = N_;
        double sum = 0.0, sum_w = 0.0;
        for (long i = 0; i < Nn; ++i) {
            const double vi = state_.v[static_cast<std::size_t>(i)];
            if (!std::isfinite(vi))
                throw IntegrationError("nonfinite membrane potential", state_.t, i);
            sum += vi;
            sum_w += std::clamp(vi, V_r_, V_t_);
        }
        out.traj.t.push_back(state_.t);
        out.traj.v_mean.push_back(sum / static_cast<double>(Nn));
        out.traj.v_mean_w.push_back(sum_w / static_cast<double>(Nn));
        out.traj.s_mean.push_back(gate_sum() / static_cast<double>(Nn));
        const long ds = state_.spike_count - spikes_at_last_record;
        out.traj.rate.push_back(interval > 0
                                    ? static_cast<double>(ds) /
                                          (static_cast<double>(Nn) * interval)
                                    : 0.0);
        spikes_at_last_record = state_.spike_count;
    };

    record_row(0.0);
    const std::size_t log_mark = state_.spike_log.size();
    for (long k = 0; k < nsteps; ++k) {
        step(h, method);
        if ((k + 1) % record_every == 0 || k + 1 == nsteps)
            record_row(h * static_cast<double>(record_every));
    }

    std::vector<SpikeEvent> window_log(state_.spike_log.begin() +
                                           static_cast<long>(log_mark),
                                       state_.spike_log.end());
    out.raster = rate_estimate(window_log, spec.bin_dt, N_, {t0, t1});
    return out;
}

void NetworkSim::spin_up(double duration, double dt, NetIntegrator method) {
    const double saved_scale = drive_scale_;
    drive_scale_ = 0.0;
    const long nsteps = std::max(1L, std::lround(duration / dt));
    for (long k = 0; k < nsteps; ++k) step(duration / nsteps, method);
    drive_scale_ = saved_scale;
    reset_time_and_log();
}

void NetworkSim::sync_coupling_from_gates() {
    gate_sum_ = pairwise_sum(state_.s);
    if (!sparse_) return;
    for (long i = 0; i < N_; ++i) {
        double acc = 0.0;
        for (std::int32_t j : sparse_->conn.pre[static_cast<std::size_t>(i)])
            acc += state_.s[static_cast<std::size_t>(j)];
        coupling_[static_cast<std::size_t>(i)] = w_unit_ * acc;
    }
}

void init_on_down_state(NetworkSim& sim, double mf_rate) {
    auto& st = sim.state();
    const long N = sim.N();
    const bool sparse = sim.is_sparse();
    const double J_drive =
        sparse ? sim.sparse().params.J * std::sqrt(static_cast<double>(
                     sim.sparse().params.M))
               : sim.dense().params.J;
    const double gate0 =
        sparse ? mf_rate * static_cast<double>(N) : mf_rate;  // own-gate scale
    for (long i = 0; i < N; ++i) {
        const double eta_i =
            sparse ? sim.sparse().eta[static_cast<std::size_t>(i)]
                   : sim.dense().eta[static_cast<std::size_t>(i)];
        const double input = eta_i + J_drive * mf_rate;
        st.v[static_cast<std::size_t>(i)] = input < 0 ? -std::sqrt(-input) : 0.0;
        st.s[static_cast<std::size_t>(i)] = gate0;
    }
    sim.sync_coupling_from_gates();
    sim.reset_time_and_log();
}

std::vector<double> moving_average(const std::vector<double>& x,
                                   const std::vector<double>& t, double window) {
    std::vector<double> out(x.size());
    if (x.empty()) return out;
    std::size_t lo = 0, hi = 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (hi < x.size() && t[hi] <= t[i] + 0.5 * window) acc += x[hi++];
        while (lo < hi && t[lo] < t[i] - 0.5 * window) acc -= x[lo++];
        out[i] = acc / static_cast<double>(hi - lo);
    }
    return out;
}

}  // namespace qifc
