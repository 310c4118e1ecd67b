#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qifc/integrate.hpp"
#include "qifc/manifold.hpp"
#include "qifc/network.hpp"
#include "qifc/sweep.hpp"

namespace qifc {

// Every data file starts with "# config <hash>" so outputs can be traced to
// the producing configuration; all values are written with 17 significant
// digits.
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
              const std::vector<std::string>& columns);
    ~CsvWriter();

    void row(std::span<const double> values);
    void row_mixed(const std::vector<std::string>& values);

  private:
    struct Impl;
    Impl* impl_;
};

void write_spike_csv(const std::filesystem::path& path, const std::string& hash,
                     const std::vector<SpikeEvent>& spikes);

void write_net_trajectory_csv(const std::filesystem::path& path,
                              const std::string& hash, const NetTrajectory& traj);

// columns t,r,v,s,K,Q with _i suffixes for p > 1
void write_mf_trajectory_csv(const std::filesystem::path& path,
                             const std::string& hash, const Trajectory& traj,
                             int populations = 1);

void write_branch_csv(const std::filesystem::path& path, const std::string& hash,
                      const SweepBranch& branch);

void write_manifold_csv(const std::filesystem::path& path, const std::string& hash,
                        const std::vector<ManifoldSample>& samples);

void write_rate_hist_csv(const std::filesystem::path& path, const std::string& hash,
                         const RasterSummary& raster);

void write_canard_csv(const std::filesystem::path& path, const std::string& hash,
                      const SingularCanards& canards);

// minimal reader used by figure bundling and tests: skips '#' comments,
// returns header + numeric rows
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string config_hash;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace qifc
