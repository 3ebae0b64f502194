#pragma once

#include <stdexcept>
#include <vector>

#include "bhsse/operators.hpp"

namespace bhsse {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual(residual) {}
  double residual;
};

struct EigenResult {
  double energy = 0.0;
  StateVector state;
  double residual = 0.0;  // ||(H - E) psi||
  double gap = 0.0;       // E_1 - E_0 when available, else 0
};

struct GroundStateOptions {
  int dense_threshold = 512;  // dims below this use the dense solver
  int lanczos_block = 80;     // Krylov dimension per restart
  int max_restarts = 60;
  double tol = 1e-10;  // residual tolerance relative to the spectral scale
  std::uint64_t seed = 0x5eed;
};

// Lowest eigenpair of a Hermitian operator. Lanczos with full
// reorthogonalization above the dense threshold, LAPACK-style dense solve
// below it.
EigenResult ground_state(const SparseOperator& H, const GroundStateOptions& opts = {});

struct SweepRow {
  double u_over_j;
  double order_parameter;  // |<psi0| M_coh |psi0>| / N
  double energy;
  double residual;
};

// Ground-state sweep of |<M_coh>|/N over a U/J grid at fixed J = 1.
std::vector<SweepRow> order_parameter_sweep(const BoseHubbardParams& params_template,
                                            const std::vector<double>& u_over_j_grid,
                                            const MeasurementSpec& spec,
                                            const GroundStateOptions& opts = {});

}  // namespace bhsse
