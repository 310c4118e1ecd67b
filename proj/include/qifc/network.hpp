#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qifc/params.hpp"
#include "qifc/rng.hpp"
#include "qifc/util.hpp"

namespace qifc {

enum class NetIntegrator { euler, heun };

struct SpikeEvent {
    double t;
    std::int32_t neuron;
};

struct NetworkState {
    double t = 0.0;
    std::vector<double> v;
    std::vector<double> s;
    std::vector<SpikeEvent> spike_log;
    long spike_count = 0;  // total, even when the log is disabled
};

// Binary sparse connectivity, row i = presynaptic sources of neuron i.
struct Connectivity {
    std::vector<std::vector<std::int32_t>> pre;
    std::vector<std::int32_t> degree;           // gamma_i == pre[i].size()
    std::vector<std::vector<std::int32_t>> out; // column lists: targets of j
    bool sparse_scaling = true;                 // J/(N sqrt(M)) vs dense 1/N

    void build_out_lists(long n);
};

struct SparseBuildOptions {
    // candidate degrees outside [0, 2M] are redrawn by default; the literal
    // alternative maps them to degree zero
    bool literal_zero_degree = false;
    bool allow_self_connections = true;
};

Connectivity build_sparse_connectivity(const SparseParams& sp,
                                       const SparseBuildOptions& opts = {});

struct DenseNetwork {
    QifParams params;
    ForcingParams forcing;
    EtaMode eta_mode = EtaMode::quantile;
    JumpConvention jump = JumpConvention::meanfield;
    std::vector<double> eta;

    // per-spike increment applied to every gate is kappa()/N
    double kappa() const {
        return jump == JumpConvention::meanfield ? 1.0 / params.tau_s : 1.0;
    }
};

DenseNetwork build_dense(const QifParams& params, const ForcingParams& forcing,
                         EtaMode eta_mode,
                         JumpConvention jump = JumpConvention::meanfield);

struct SparseNetwork {
    SparseParams params;
    JumpConvention jump = JumpConvention::meanfield;
    EtaMode eta_mode = EtaMode::iid;
    std::vector<double> eta;  // sqrt(M)-scaled currents
    Connectivity conn;

    // own-gate jump per spike; the meanfield-consistent value carries the
    // factor N that the J/(N sqrt(M)) coupling normalization divides out
    double kappa() const {
        return jump == JumpConvention::meanfield
                   ? static_cast<double>(params.N) / params.tau_s
                   : 1.0;
    }
    double coupling_weight() const;   // J/(N sqrt(M))
    double drive_amplitude() const;   // A sqrt(M)
};

SparseNetwork build_sparse(const SparseParams& params,
                           JumpConvention jump = JumpConvention::meanfield,
                           EtaMode eta_mode = EtaMode::iid,
                           const SparseBuildOptions& opts = {});

struct NetTrajectory {
    std::vector<double> t;
    std::vector<double> v_mean;
    std::vector<double> v_mean_w;  // winsorized to [V_r, V_t]
    std::vector<double> s_mean;
    std::vector<double> rate;      // spikes/(N * record interval)
};

struct RasterSummary {
    double bin_dt = 0.15;
    double t0 = 0.0;
    long N = 0;
    std::vector<long> counts;
    std::vector<double> rate;  // counts/(N*bin_dt)
};

RasterSummary rate_estimate(const std::vector<SpikeEvent>& spike_log, double bin_dt,
                            long N, TimeWindow window);

struct RasterSpec {
    double record_dt = 0.05;          // trajectory sampling interval
    double bin_dt = 0.15;             // rate-histogram bin width
    bool keep_spike_log = true;
    std::size_t max_rows = 2'000'000;
    bool allow_coarse_dt = false;     // override of the dt <= tau_s/10 guard
};

struct NetRunResult {
    NetTrajectory traj;
    RasterSummary raster;
};

// Unified stepper over dense and sparse systems. Owns the state plus the
// preallocated workspace; a simulation owns its state exclusively.
class NetworkSim {
  public:
    explicit NetworkSim(DenseNetwork net);
    explicit NetworkSim(SparseNetwork net);

    NetworkState& state() { return state_; }
    const NetworkState& state() const { return state_; }
    long N() const { return N_; }
    bool is_sparse() const { return sparse_.has_value(); }
    const DenseNetwork& dense() const { return *dense_; }
    const SparseNetwork& sparse() const { return *sparse_; }

    // multiplies I(t); 0 freezes the drive for spin-up
    void set_drive_scale(double scale) { drive_scale_ = scale; }

    // optional post-reset hold emulating the infinite-threshold transit time
    void set_refractory_hold(bool on);

    void reset_time_and_log() {
        state_.t = 0.0;
        state_.spike_log.clear();
        state_.spike_count = 0;
    }

    void step(double dt, NetIntegrator method);

    NetRunResult integrate(double t1, double dt, NetIntegrator method,
                           const RasterSpec& spec);

    // relax with frozen drive, then rewind the clock and clear the log
    void spin_up(double duration, double dt, NetIntegrator method);

    double gate_sum() const;

    // Recompute the incremental caches (gate sum, sparse coupling) after
    // editing gates directly. integrate() syncs once on entry; callers
    // driving step() by hand after a manual gate edit must sync themselves.
    void sync_coupling_from_gates();

  private:
    void apply_resets_and_jumps(double dt, const std::vector<double>& v_pre);
    double drive(double t) const;

    std::optional<DenseNetwork> dense_;
    std::optional<SparseNetwork> sparse_;
    NetworkState state_;
    long N_ = 0;
    double V_t_ = 100.0, V_r_ = -100.0, tau_s_ = 0.1;
    double drive_scale_ = 1.0;
    double drive_amp_ = 0.0;

    // sparse incremental coupling: c_[i] = w_unit * sum_{j in pre(i)} s_j
    std::vector<double> coupling_;
    double w_unit_ = 0.0;
    // incrementally maintained sum of gates, drives the dense coupling term
    double gate_sum_ = 0.0;

    std::vector<double> v_pre_;
    std::vector<std::int32_t> crossers_;
    std::vector<double> hold_until_;
    bool refractory_hold_ = false;
    bool log_spikes_enabled_ = true;
};

// s_i = mf_rate for every gate, v_i at the per-neuron rest point (or 0 when
// none exists); spin_up afterwards settles the microscopic down state.
void init_on_down_state(NetworkSim& sim, double mf_rate);

std::vector<double> moving_average(const std::vector<double>& x,
                                   const std::vector<double>& t, double window);

}  // namespace qifc
