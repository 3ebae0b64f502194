#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bhsse/operators.hpp"

namespace bhsse {

class NumericalBlowupError : public std::runtime_error {
 public:
  NumericalBlowupError(const std::string& msg, std::size_t step)
      : std::runtime_error(msg), step(step) {}
  std::size_t step;
};

enum class Scheme { kEulerMaruyama, kHeun };

struct SimConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  double gamma = 0.0;
  Scheme scheme = Scheme::kEulerMaruyama;
  bool normalize_every_step = true;
  std::uint64_t seed = 0;
  int snapshot_stride = 0;  // 0: keep only the final state
  bool corrections = false;
  double burn_in = 0.0;  // transient window excluded from analysis
};

struct TrajectoryRecord {
  std::vector<double> times;        // t_k at which expectation[k] was taken
  std::vector<double> dW;           // Wiener increment used in step k
  std::vector<double> signal;       // I(t_k) = 2 gamma <M0> + sqrt(gamma) dW/dt
  std::vector<double> expectation;  // <M0> on the normalized pre-step state
  std::uint64_t seed = 0;
  std::vector<std::pair<double, StateVector>> snapshots;
  StateVector final_state;
  double final_time = 0.0;
};

// i.i.d. N(0, dt) increments, reproducible from the seed.
std::vector<double> wiener_increments(std::uint64_t seed, std::size_t n_steps, double dt);

// One update of the linear SSE
//   d|psi> = [-i H - (gamma/2) M0^2 + I(t) M0] dt |psi>,
//   I(t) dt = 2 gamma <M0> dt + sqrt(gamma) dW,
// with <M0> evaluated on the normalized pre-step state (Ito convention),
// followed by normalization when requested.
StateVector sse_step(const StateVector& psi, const SparseOperator& H_eff,
                     const SparseOperator& M0, double gamma, double dt, double dW,
                     Scheme scheme = Scheme::kEulerMaruyama, bool normalize = true);

TrajectoryRecord integrate_trajectory(const StateVector& psi0, const SparseOperator& H_eff,
                                      const SparseOperator& M0, const SimConfig& cfg);

using DensityMatrix = Eigen::MatrixXcd;

// Throws unless rho is Hermitian (1e-10), unit trace (1e-8) and positive
// semidefinite up to -1e-8.
void validate_density_matrix(const DensityMatrix& rho);

// One classical RK4 step of  drho/dt = -i[H, rho] - (gamma/2)[M0, [M0, rho]].
// The double-commutator rate gamma/2 reproduces the trajectory average of the
// SSE above. Throws if the trace drifts by more than 1e-10.
DensityMatrix lindblad_step(const DensityMatrix& rho, const SparseOperator& H,
                            const SparseOperator& M0, double gamma, double dt);

// Mean projector over a set of normalized states.
DensityMatrix ensemble_average(const std::vector<StateVector>& states);

// rho(t) trajectory from per-trajectory snapshots sharing one grid.
std::vector<std::pair<double, DensityMatrix>> ensemble_average(
    const std::vector<TrajectoryRecord>& records);

}  // namespace bhsse
