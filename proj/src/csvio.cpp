#include "qifc/csvio.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qifc/util.hpp"

namespace qifc {

struct CsvWriter::Impl {
    std::ofstream out;
    std::size_t ncols = 0;
    std::filesystem::path path;
};

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
                     const std::vector<std::string>& columns)
    : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    impl_->ncols = columns.size();
    impl_->path = path;
    impl_->out << "# config " << config_hash << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        impl_->out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() {
    impl_->out.flush();
    delete impl_;
}

void CsvWriter::row(std::span<const double> values) {
    if (values.size() != impl_->ncols)
        throw std::invalid_argument("row width mismatch in " + impl_->path.string());
    for (std::size_t i = 0; i < values.size(); ++i)
        impl_->out << fmt17(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row_mixed(const std::vector<std::string>& values) {
    if (values.size() != impl_->ncols)
        throw std::invalid_argument("row width mismatch in " + impl_->path.string());
    for (std::size_t i = 0; i < values.size(); ++i)
        impl_->out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

void write_spike_csv(const std::filesystem::path& path, const std::string& hash,
                     const std::vector<SpikeEvent>& spikes) {
    CsvWriter w(path, hash, {"t", "neuron"});
    for (const auto& ev : spikes)
        w.row_mixed({fmt17(ev.t), std::to_string(ev.neuron)});
}

void write_net_trajectory_csv(const std::filesystem::path& path,
                              const std::string& hash, const NetTrajectory& traj) {
    CsvWriter w(path, hash, {"t", "v_mean", "v_mean_winsorized", "s_mean", "rate"});
    for (std::size_t i = 0; i < traj.t.size(); ++i)
        w.row(std::array{traj.t[i], traj.v_mean[i], traj.v_mean_w[i],
                         traj.s_mean[i], traj.rate[i]});
}

void write_mf_trajectory_csv(const std::filesystem::path& path,
                             const std::string& hash, const Trajectory& traj,
                             int populations) {
    std::vector<std::string> cols{"t"};
    if (populations <= 1) {
        cols.insert(cols.end(), {"r", "v", "s", "K", "Q"});
    } else {
        for (int i = 1; i <= populations; ++i) {
            cols.push_back("r_" + std::to_string(i));
            cols.push_back("v_" + std::to_string(i));
            cols.push_back("s_" + std::to_string(i));
        }
        cols.push_back("K");
        cols.push_back("Q");
    }
    CsvWriter w(path, hash, cols);
    std::vector<double> row(cols.size());
    for (std::size_t i = 0; i < traj.rows(); ++i) {
        row[0] = traj.t[i];
        auto r = traj.row(i);
        std::copy(r.begin(), r.end(), row.begin() + 1);
        w.row(row);
    }
}

void write_branch_csv(const std::filesystem::path& path, const std::string& hash,
                      const SweepBranch& branch) {
    CsvWriter w(path, hash, {"A", "measure", "fate", "canard_time"});
    for (const auto& s : branch.samples)
        w.row_mixed({fmt17(s.A), fmt17(s.measure), s.fate.label(),
                     fmt17(s.fate.canard_time)});
}

void write_manifold_csv(const std::filesystem::path& path, const std::string& hash,
                        const std::vector<ManifoldSample>& samples) {
    CsvWriter w(path, hash, {"v", "r", "s", "K", "sheet"});
    for (const auto& m : samples)
        w.row_mixed({fmt17(m.v), fmt17(m.r), fmt17(m.s), fmt17(m.K),
                     to_string(m.sheet)});
}

void write_rate_hist_csv(const std::filesystem::path& path, const std::string& hash,
                         const RasterSummary& raster) {
    CsvWriter w(path, hash, {"t_bin_start", "count", "rate"});
    for (std::size_t i = 0; i < raster.counts.size(); ++i)
        w.row_mixed({fmt17(raster.t0 + raster.bin_dt * static_cast<double>(i)),
                     std::to_string(raster.counts[i]), fmt17(raster.rate[i])});
}

void write_canard_csv(const std::filesystem::path& path, const std::string& hash,
                      const SingularCanards& canards) {
    CsvWriter w(path, hash, {"branch", "v", "K", "Q"});
    for (const auto& p : canards.true_canard)
        w.row_mixed({"true", fmt17(p.v), fmt17(p.K), fmt17(p.Q)});
    for (const auto& p : canards.faux_canard)
        w.row_mixed({"faux", fmt17(p.v), fmt17(p.K), fmt17(p.Q)});
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# config ";
            if (line.rfind(tag, 0) == 0) table.config_hash = line.substr(tag.size());
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_header) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace qifc
