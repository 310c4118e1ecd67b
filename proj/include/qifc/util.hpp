#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qifc {

// Deterministic fixed-shape pairwise reduction. The reduction tree depends
// only on the length of the input, never on worker count or data values.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double acc = 0.0;
        for (double v : x) acc += v;
        return acc;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

// All numeric text output goes through this: 17 significant digits.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct TimeWindow {
    double t0 = 0.0;
    double t1 = 0.0;
    double length() const { return t1 - t0; }
    bool contains(double t) const { return t >= t0 && t <= t1; }
};

// Raised when an integration produces a nonfinite state. Carries the time
// and the offending component index for diagnostics.
class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(const std::string& what, double t, long index)
        : std::runtime_error(what + " at t=" + fmt17(t) +
                             ", component " + std::to_string(index)),
          time(t), component(index) {}
    double time;
    long component;
};

}  // namespace qifc
