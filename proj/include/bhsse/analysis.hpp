#pragma once

#include <string>
#include <vector>

#include "bhsse/sse.hpp"

namespace bhsse {

struct PsdEstimate {
  std::vector<double> frequency;  // ascending, 0 .. Nyquist
  std::vector<double> psd;        // one-sided density
  std::size_t segment_length = 0;
  double overlap = 0.5;
  std::string window = "hann";
};

// Welch averaged periodogram, Hann window, one-sided, normalized so that
// sum(psd) * df equals the variance of a zero-mean stationary input.
// segment_length must be a power of two.
PsdEstimate welch_psd(const std::vector<double>& signal, double dt, std::size_t segment_length,
                      double overlap = 0.5, const std::string& window = "hann");

struct JumpReport {
  std::vector<double> jump_times;
  std::vector<int> from_label;  // indices into the eigenvalue grid
  std::vector<int> to_label;
  std::vector<double> residence;  // dwell time before each jump
  std::size_t n_jumps() const { return jump_times.size(); }
};

// Assigns each sample to the nearest eigenvalue bin; a jump is a change of
// bin that persists for >= dwell_min samples and clears the hysteresis band.
// hysteresis < 0 selects the default of half the minimal eigenvalue gap.
JumpReport detect_jumps(const std::vector<double>& trace, const std::vector<double>& times,
                        const std::vector<double>& eigenvalue_grid, int dwell_min = 10,
                        double hysteresis = -1.0);

struct EnsembleStatistics {
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> variance;   // Bessel-corrected
  std::vector<double> std_error;  // sqrt(variance/n)
};

// Per-time moments of the expectation traces across records. Summation is
// performed in sorted order so the result is independent of record order.
EnsembleStatistics ensemble_statistics(const std::vector<TrajectoryRecord>& records);

}  // namespace bhsse
