#include "bhsse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace bhsse {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// iterative radix-2 Cooley-Tukey, in place, n a power of two
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace

PsdEstimate welch_psd(const std::vector<double>& signal, double dt, std::size_t segment_length,
                      double overlap, const std::string& window) {
  if (dt <= 0.0) throw std::invalid_argument("welch_psd: dt must be > 0");
  if (!is_power_of_two(segment_length)) {
    throw std::invalid_argument("welch_psd: segment_length must be a power of two");
  }
  if (segment_length > signal.size()) {
    throw std::invalid_argument("welch_psd: segment longer than signal");
  }
  if (overlap < 0.0 || overlap >= 1.0) throw std::invalid_argument("welch_psd: overlap in [0,1)");

  const std::size_t nseg = segment_length;
  const std::size_t hop =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(nseg * (1.0 - overlap))));
  const std::size_t n_segments = (signal.size() - nseg) / hop + 1;
  if (n_segments < 2) throw std::invalid_argument("welch_psd: need at least 2 segments");

  std::vector<double> win(nseg, 1.0);
  if (window == "hann") {
    for (std::size_t i = 0; i < nseg; ++i) {
      win[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / (nseg - 1));
    }
  } else if (window != "rect") {
    throw std::invalid_argument("welch_psd: unknown window '" + window + "'");
  }
  double win_power = 0.0;
  for (double w : win) win_power += w * w;

  const std::size_t n_bins = nseg / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::vector<std::complex<double>> buf(nseg);
  for (std::size_t s = 0; s < n_segments; ++s) {
    const double* x = signal.data() + s * hop;
    for (std::size_t i = 0; i < nseg; ++i) buf[i] = std::complex<double>(x[i] * win[i], 0.0);
    fft_radix2(buf);
    for (std::size_t b = 0; b < n_bins; ++b) acc[b] += std::norm(buf[b]);
  }

  // density normalization: Pxx = dt |X|^2 / sum(w^2), one-sided doubling
  // except at DC and Nyquist
  PsdEstimate est;
  est.segment_length = nseg;
  est.overlap = overlap;
  est.window = window;
  est.frequency.resize(n_bins);
  est.psd.resize(n_bins);
  double scale = dt / (win_power * static_cast<double>(n_segments));
  for (std::size_t b = 0; b < n_bins; ++b) {
    est.frequency[b] = static_cast<double>(b) / (static_cast<double>(nseg) * dt);
    double v = acc[b] * scale;
    if (b != 0 && b != n_bins - 1) v *= 2.0;
    est.psd[b] = v;
  }
  return est;
}

JumpReport detect_jumps(const std::vector<double>& trace, const std::vector<double>& times,
                        const std::vector<double>& eigenvalue_grid, int dwell_min,
                        double hysteresis) {
  if (trace.empty()) throw std::invalid_argument("detect_jumps: empty trace");
  if (eigenvalue_grid.empty()) throw std::invalid_argument("detect_jumps: empty eigenvalue grid");
  if (!times.empty() && times.size() != trace.size()) {
    throw std::invalid_argument("detect_jumps: times/trace size mismatch");
  }
  if (dwell_min < 1) throw std::invalid_argument("detect_jumps: dwell_min must be >= 1");

  std::vector<double> grid = eigenvalue_grid;
  std::sort(grid.begin(), grid.end());
  if (hysteresis < 0.0) {
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < grid.size(); ++i) {
      min_gap = std::min(min_gap, grid[i] - grid[i - 1]);
    }
    hysteresis = grid.size() > 1 ? 0.5 * min_gap : 0.0;
  }

  auto nearest = [&](double x) {
    std::size_t best = 0;
    double bd = std::abs(x - grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      double d = std::abs(x - grid[i]);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return static_cast<int>(best);
  };
  auto time_at = [&](std::size_t i) {
    return times.empty() ? static_cast<double>(i) : times[i];
  };

  JumpReport report;
  int current = nearest(trace[0]);
  double entered = time_at(0);
  std::size_t i = 1;
  while (i < trace.size()) {
    int cand = nearest(trace[i]);
    bool clears = cand != current &&
                  std::abs(trace[i] - grid[cand]) + hysteresis <= std::abs(trace[i] - grid[current]);
    if (!clears) {
      ++i;
      continue;
    }
    // candidate switch: must persist for dwell_min samples with the margin
    std::size_t run = 0;
    while (i + run < trace.size() && run < static_cast<std::size_t>(dwell_min)) {
      int c2 = nearest(trace[i + run]);
      if (c2 != cand || std::abs(trace[i + run] - grid[cand]) + hysteresis >
                            std::abs(trace[i + run] - grid[current])) {
        break;
      }
      ++run;
    }
    if (run >= static_cast<std::size_t>(dwell_min)) {
      report.jump_times.push_back(time_at(i));
      report.from_label.push_back(current);
      report.to_label.push_back(cand);
      report.residence.push_back(time_at(i) - entered);
      current = cand;
      entered = time_at(i);
      i += run;
    } else {
      i += std::max<std::size_t>(1, run);
    }
  }
  return report;
}

EnsembleStatistics ensemble_statistics(const std::vector<TrajectoryRecord>& records) {
  if (records.empty()) throw std::invalid_argument("ensemble_statistics: no records");
  const auto& t0 = records.front().times;
  for (const auto& r : records) {
    if (r.times.size() != t0.size()) {
      throw std::invalid_argument("ensemble_statistics: time grid mismatch");
    }
    for (std::size_t i = 0; i < t0.size(); ++i) {
      if (r.times[i] != t0[i]) {
        throw std::invalid_argument("ensemble_statistics: time grid mismatch");
      }
    }
  }
  const std::size_t n = records.size();
  EnsembleStatistics out;
  out.t = t0;
  out.mean.resize(t0.size());
  out.variance.resize(t0.size());
  out.std_error.resize(t0.size());

  std::vector<double> vals(n);
  for (std::size_t i = 0; i < t0.size(); ++i) {
    for (std::size_t r = 0; r < n; ++r) vals[r] = records[r].expectation[i];
    // sorted compensated summation: permutation-invariant to the bit
    std::sort(vals.begin(), vals.end());
    double sum = 0.0, comp = 0.0;
    for (double v : vals) {
      double y = v - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
    double mean = sum / static_cast<double>(n);
    double var = 0.0;
    if (n > 1) {
      double s2 = 0.0, c2 = 0.0;
      for (double v : vals) {
        double d = (v - mean) * (v - mean);
        double y = d - c2;
        double t = s2 + y;
        c2 = (t - s2) - y;
        s2 = t;
      }
      var = s2 / static_cast<double>(n - 1);
    }
    out.mean[i] = mean;
    out.variance[i] = var;
    out.std_error[i] = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

}  // namespace bhsse
