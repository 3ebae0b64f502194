#include "bhsse/sse.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bhsse/rng.hpp"

namespace bhsse {

std::vector<double> wiener_increments(std::uint64_t seed, std::size_t n_steps, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("wiener_increments: dt must be > 0");
  Rng rng(seed);
  std::vector<double> dw(n_steps);
  double s = std::sqrt(dt);
  for (auto& x : dw) x = s * rng.normal();
  return dw;
}

namespace {

// drift of the linear SSE evaluated with a frozen signal increment:
// [-iH - (gamma/2) M0^2] psi dt + (I dt) M0 psi, with I dt = 2 gamma e dt + sqrt(gamma) dW
void sse_increment(const StateVector& psi, const SparseOperator& H, const SparseOperator& M0,
                   double gamma, double dt, double i_dt, StateVector& out, StateVector& scratch) {
  H.apply(psi, out);
  out *= Complex(0.0, -dt);
  M0.apply(psi, scratch);
  out += i_dt * scratch;
  StateVector m2(psi.size());
  M0.apply(scratch, m2);
  out -= (0.5 * gamma * dt) * m2;
}

}  // namespace

StateVector sse_step(const StateVector& psi, const SparseOperator& H_eff,
                     const SparseOperator& M0, double gamma, double dt, double dW, Scheme scheme,
                     bool normalize) {
  if (psi.size() != H_eff.dim() || psi.size() != M0.dim()) {
    throw DimensionError("sse_step: dimension mismatch");
  }
  double e = real_expectation(M0, psi);
  double i_dt = 2.0 * gamma * e * dt + std::sqrt(gamma) * dW;

  StateVector incr(psi.size()), scratch(psi.size());
  sse_increment(psi, H_eff, M0, gamma, dt, i_dt, incr, scratch);
  StateVector out = psi + incr;

  if (scheme == Scheme::kHeun) {
    // predictor-corrector on the drift; the noise coefficient stays at the
    // pre-step point (Ito)
    StateVector incr2(psi.size());
    sse_increment(out, H_eff, M0, gamma, dt, i_dt, incr2, scratch);
    out = psi + 0.5 * (incr + incr2);
  }

  double n2 = out.squaredNorm();
  if (!std::isfinite(n2) || n2 == 0.0) {
    throw NumericalBlowupError("sse_step: state norm is not finite", 0);
  }
  if (normalize) out /= std::sqrt(n2);
  return out;
}

TrajectoryRecord integrate_trajectory(const StateVector& psi0, const SparseOperator& H_eff,
                                      const SparseOperator& M0, const SimConfig& cfg) {
  if (cfg.dt <= 0.0 || cfg.t_final < cfg.dt) {
    throw std::invalid_argument("integrate_trajectory: need dt > 0 and t_final >= dt");
  }
  if (cfg.gamma < 0.0) throw std::invalid_argument("integrate_trajectory: gamma must be >= 0");
  if (std::abs(psi0.norm() - 1.0) > 1e-8) {
    throw std::invalid_argument("integrate_trajectory: psi0 must be normalized");
  }

  const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.t_final / cfg.dt));
  TrajectoryRecord rec;
  rec.seed = cfg.seed;
  rec.times.reserve(n_steps);
  rec.dW.reserve(n_steps);
  rec.signal.reserve(n_steps);
  rec.expectation.reserve(n_steps);

  Rng rng(cfg.seed);
  const double sqrt_dt = std::sqrt(cfg.dt);
  const double sqrt_gamma = std::sqrt(cfg.gamma);
  StateVector psi = psi0;

  if (cfg.snapshot_stride > 0) rec.snapshots.emplace_back(0.0, psi);

  for (std::size_t k = 0; k < n_steps; ++k) {
    double t = k * cfg.dt;
    double dW = sqrt_dt * rng.normal();
    double e = real_expectation(M0, psi);
    double I = 2.0 * cfg.gamma * e + sqrt_gamma * dW / cfg.dt;

    rec.times.push_back(t);
    rec.dW.push_back(dW);
    rec.signal.push_back(I);
    rec.expectation.push_back(e);

    try {
      psi = sse_step(psi, H_eff, M0, cfg.gamma, cfg.dt, dW, cfg.scheme, cfg.normalize_every_step);
    } catch (const NumericalBlowupError&) {
      throw NumericalBlowupError("integrate_trajectory: blowup at t=" + std::to_string(t) +
                                     " (step " + std::to_string(k) + ")",
                                 k);
    }
    if (cfg.snapshot_stride > 0 && (k + 1) % cfg.snapshot_stride == 0) {
      rec.snapshots.emplace_back((k + 1) * cfg.dt, psi);
    }
  }
  rec.final_state = psi;
  rec.final_time = n_steps * cfg.dt;
  return rec;
}

void validate_density_matrix(const DensityMatrix& rho) {
  if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix: not square");
  double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) {
    throw std::invalid_argument("density matrix: hermiticity deviation " + std::to_string(herm));
  }
  double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > 1e-8) {
    throw std::invalid_argument("density matrix: trace " + std::to_string(tr));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues()(0) < -1e-8) {
    throw std::invalid_argument("density matrix: negative eigenvalue " +
                                std::to_string(es.eigenvalues()(0)));
  }
}

namespace {

DensityMatrix lindblad_rhs(const DensityMatrix& rho, const Eigen::MatrixXcd& H,
                           const Eigen::MatrixXcd& M, double gamma) {
  Eigen::MatrixXcd comm = H * rho - rho * H;
  Eigen::MatrixXcd mm = M * rho - rho * M;
  Eigen::MatrixXcd dd = M * mm - mm * M;
  return Complex(0.0, -1.0) * comm - (0.5 * gamma) * dd;
}

}  // namespace

DensityMatrix lindblad_step(const DensityMatrix& rho, const SparseOperator& H,
                            const SparseOperator& M0, double gamma, double dt) {
  if (rho.rows() != H.dim() || rho.rows() != M0.dim()) {
    throw DimensionError("lindblad_step: dimension mismatch");
  }
  Eigen::MatrixXcd Hd = H.to_dense();
  Eigen::MatrixXcd Md = M0.to_dense();
  DensityMatrix k1 = lindblad_rhs(rho, Hd, Md, gamma);
  DensityMatrix k2 = lindblad_rhs(rho + 0.5 * dt * k1, Hd, Md, gamma);
  DensityMatrix k3 = lindblad_rhs(rho + 0.5 * dt * k2, Hd, Md, gamma);
  DensityMatrix k4 = lindblad_rhs(rho + dt * k3, Hd, Md, gamma);
  DensityMatrix out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  double drift = std::abs(out.trace().real() - rho.trace().real()) +
                 std::abs(out.trace().imag() - rho.trace().imag());
  if (drift > 1e-10) {
    throw std::runtime_error("lindblad_step: trace drift " + std::to_string(drift));
  }
  return out;
}

DensityMatrix ensemble_average(const std::vector<StateVector>& states) {
  if (states.empty()) throw std::invalid_argument("ensemble_average: no states");
  const auto dim = states.front().size();
  DensityMatrix rho = DensityMatrix::Zero(dim, dim);
  for (const auto& psi : states) {
    if (psi.size() != dim) throw DimensionError("ensemble_average: dimension mismatch");
    rho.noalias() += psi * psi.adjoint();
  }
  rho /= static_cast<double>(states.size());
  return rho;
}

std::vector<std::pair<double, DensityMatrix>> ensemble_average(
    const std::vector<TrajectoryRecord>& records) {
  if (records.empty()) throw std::invalid_argument("ensemble_average: no records");
  const auto& first = records.front();
  std::size_t n_snap = first.snapshots.size();
  for (const auto& r : records) {
    if (r.snapshots.size() != n_snap) {
      throw std::invalid_argument("ensemble_average: snapshot grid mismatch");
    }
    for (std::size_t i = 0; i < n_snap; ++i) {
      if (r.snapshots[i].first != first.snapshots[i].first) {
        throw std::invalid_argument("ensemble_average: snapshot time mismatch");
      }
    }
  }
  std::vector<std::pair<double, DensityMatrix>> out;
  out.reserve(n_snap);
  for (std::size_t i = 0; i < n_snap; ++i) {
    std::vector<StateVector> slice;
    slice.reserve(records.size());
    for (const auto& r : records) slice.push_back(r.snapshots[i].second);
    out.emplace_back(first.snapshots[i].first, ensemble_average(slice));
  }
  return out;
}

}  // namespace bhsse
