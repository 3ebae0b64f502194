#include "bhsse/groundstate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bhsse/rng.hpp"

namespace bhsse {

namespace {

EigenResult dense_ground_state(const SparseOperator& H) {
  Eigen::MatrixXcd m = H.to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("ground_state: dense eigensolver failed", -1.0);
  }
  EigenResult r;
  r.energy = solver.eigenvalues()(0);
  r.state = solver.eigenvectors().col(0);
  r.residual = (m * r.state - r.energy * r.state).norm();
  r.gap = H.dim() > 1 ? solver.eigenvalues()(1) - solver.eigenvalues()(0) : 0.0;
  return r;
}

StateVector random_unit_vector(int dim, std::uint64_t seed) {
  Rng rng(seed);
  StateVector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = Complex(rng.normal(), rng.normal());
  v.normalize();
  return v;
}

}  // namespace

EigenResult ground_state(const SparseOperator& H, const GroundStateOptions& opts) {
  if (H.dim() < 1) throw std::invalid_argument("ground_state: empty operator");
  if (!H.hermitian()) {
    double dev = H.hermiticity_deviation();
    if (dev > 1e-12 * std::max(H.max_abs(), 1e-300)) {
      throw std::invalid_argument("ground_state: operator is not Hermitian");
    }
  }
  const int dim = H.dim();
  if (dim <= opts.dense_threshold) return dense_ground_state(H);

  const int m = std::min(opts.lanczos_block, dim);
  StateVector x = random_unit_vector(dim, opts.seed);
  double scale = std::max(1.0, H.max_abs());
  double theta = 0.0;
  double res = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    // Lanczos with full reorthogonalization against all stored vectors
    std::vector<StateVector> V;
    V.reserve(m);
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    StateVector v = x;
    StateVector w(dim);
    double beta_prev = 0.0;
    int built = 0;
    for (int j = 0; j < m; ++j) {
      V.push_back(v);
      ++built;
      H.apply(v, w);
      double alpha = std::real(v.dot(w));
      T(j, j) = alpha;
      w -= alpha * v;
      if (j > 0) w -= beta_prev * V[j - 1];
      for (const auto& q : V) w -= q.dot(w) * q;  // full reorthogonalization
      double beta = w.norm();
      if (j + 1 < m) {
        if (beta < 1e-14 * scale) break;  // invariant subspace reached
        T(j, j + 1) = beta;
        T(j + 1, j) = beta;
        v = w / beta;
        beta_prev = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tsolver(T.topLeftCorner(built, built));
    Eigen::VectorXd y = tsolver.eigenvectors().col(0);
    theta = tsolver.eigenvalues()(0);
    x = StateVector::Zero(dim);
    for (int j = 0; j < built; ++j) x += y(j) * V[j];
    x.normalize();

    H.apply(x, w);
    res = (w - theta * x).norm();
    scale = std::max(scale, std::abs(theta));
    if (res <= opts.tol * scale) {
      EigenResult r;
      r.energy = theta;
      r.state = x;
      r.residual = res;
      r.gap = built > 1 ? tsolver.eigenvalues()(1) - theta : 0.0;
      return r;
    }
  }
  throw ConvergenceError("ground_state: Lanczos did not converge after " +
                             std::to_string(opts.max_restarts) +
                             " restarts (residual " + std::to_string(res) + ")",
                         res);
}

std::vector<SweepRow> order_parameter_sweep(const BoseHubbardParams& params_template,
                                            const std::vector<double>& u_over_j_grid,
                                            const MeasurementSpec& spec,
                                            const GroundStateOptions& opts) {
  if (u_over_j_grid.empty()) {
    throw std::invalid_argument("order_parameter_sweep: empty U/J grid");
  }
  for (double u : u_over_j_grid) {
    if (!(u > 0.0)) throw std::invalid_argument("order_parameter_sweep: U/J values must be > 0");
  }

  FockBasis basis(params_template.L, params_template.N);
  MeasurementSpec coh = spec;
  coh.kind = MeasurementSpec::Kind::kCoherence;
  SparseOperator Mcoh = build_measurement_operator(coh, basis, params_template.boundary);

  std::vector<SweepRow> rows;
  rows.reserve(u_over_j_grid.size());
  for (double u : u_over_j_grid) {
    BoseHubbardParams p = params_template;
    p.J = 1.0;  // energy scale convention: J = 1, vary U
    p.U = u;
    SparseOperator H = build_bose_hubbard(p, basis);
    EigenResult gs;
    try {
      gs = ground_state(H, opts);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("order_parameter_sweep: failure at U/J=" + std::to_string(u) + ": " +
                                 e.what(),
                             e.residual);
    }
    double op = std::abs(expectation(Mcoh, gs.state)) / params_template.N;
    rows.push_back({u, op, gs.energy, gs.residual});
  }
  return rows;
}

}  // namespace bhsse
