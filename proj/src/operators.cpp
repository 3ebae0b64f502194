#include "bhsse/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace bhsse {

namespace {

void check_hermitian_matrix(const Eigen::MatrixXcd& m, const char* what) {
  double scale = m.cwiseAbs().maxCoeff();
  double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian (deviation " +
                                std::to_string(dev) + ")");
  }
}

}  // namespace

SparseOperator SparseOperator::from_triplets(int dim, std::vector<Triplet> entries,
                                             bool hermitian) {
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= dim || t.col < 0 || t.col >= dim) {
      throw DimensionError("SparseOperator: entry (" + std::to_string(t.row) + "," +
                           std::to_string(t.col) + ") outside dim " + std::to_string(dim));
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseOperator op;
  op.dim_ = dim;
  op.hermitian_ = hermitian;
  op.row_ptr_.assign(dim + 1, 0);
  op.col_.reserve(entries.size());
  op.val_.reserve(entries.size());
  std::size_t i = 0;
  for (int r = 0; r < dim; ++r) {
    while (i < entries.size() && entries[i].row == r) {
      Complex v = entries[i].value;
      int c = entries[i].col;
      ++i;
      while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
        v += entries[i].value;  // merge duplicates
        ++i;
      }
      if (v != Complex(0.0, 0.0)) {
        op.col_.push_back(c);
        op.val_.push_back(v);
      }
    }
    op.row_ptr_[r + 1] = static_cast<int>(op.col_.size());
  }

  if (hermitian) {
    double scale = op.max_abs();
    double dev = op.hermiticity_deviation();
    if (dev > 1e-12 * std::max(scale, 1e-300)) {
      throw std::invalid_argument("SparseOperator: hermitian flag set but deviation " +
                                  std::to_string(dev) + " exceeds 1e-12 * max|A|");
    }
  }
  return op;
}

SparseOperator SparseOperator::identity(int dim) {
  std::vector<Triplet> t;
  t.reserve(dim);
  for (int i = 0; i < dim; ++i) t.push_back({i, i, Complex(1.0, 0.0)});
  return from_triplets(dim, std::move(t), true);
}

SparseOperator SparseOperator::from_dense(const Eigen::MatrixXcd& m, bool hermitian) {
  if (m.rows() != m.cols()) throw DimensionError("from_dense: matrix not square");
  std::vector<Triplet> t;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c) != Complex(0.0, 0.0)) t.push_back({r, c, m(r, c)});
    }
  }
  return from_triplets(static_cast<int>(m.rows()), std::move(t), hermitian);
}

void SparseOperator::apply(const StateVector& v, StateVector& out) const {
  if (v.size() != dim_) {
    throw DimensionError("apply: vector size " + std::to_string(v.size()) + " != dim " +
                         std::to_string(dim_));
  }
  out.resize(dim_);
  for (int r = 0; r < dim_; ++r) {
    Complex acc(0.0, 0.0);
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * v[col_[k]];
    out[r] = acc;
  }
}

StateVector SparseOperator::apply(const StateVector& v) const {
  StateVector out;
  apply(v, out);
  return out;
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) m(r, col_[k]) += val_[k];
  }
  return m;
}

std::vector<Triplet> SparseOperator::triplets() const {
  std::vector<Triplet> out;
  out.reserve(val_.size());
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) out.push_back({r, col_[k], val_[k]});
  }
  return out;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (const auto& v : val_) m = std::max(m, std::abs(v));
  return m;
}

double SparseOperator::hermiticity_deviation() const {
  std::map<std::pair<int, int>, Complex> upper;
  double dev = 0.0;
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      int c = col_[k];
      if (r == c) {
        dev = std::max(dev, std::abs(val_[k] - std::conj(val_[k])));
      } else if (r < c) {
        upper[{r, c}] += val_[k];
      } else {
        upper[{c, r}] -= std::conj(val_[k]);
      }
    }
  }
  for (const auto& [rc, v] : upper) dev = std::max(dev, std::abs(v));
  return dev;
}

SparseOperator SparseOperator::scaled(Complex c) const {
  auto t = triplets();
  for (auto& e : t) e.value *= c;
  bool herm = hermitian_ && c.imag() == 0.0;
  return from_triplets(dim_, std::move(t), herm);
}

SparseOperator SparseOperator::matmul(const SparseOperator& b) const {
  if (dim_ != b.dim_) throw DimensionError("matmul: dimension mismatch");
  std::vector<Triplet> out;
  std::vector<Complex> acc(dim_, Complex(0.0, 0.0));
  std::vector<int> touched;
  for (int r = 0; r < dim_; ++r) {
    touched.clear();
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      Complex arv = val_[k];
      int m = col_[k];
      for (int j = b.row_ptr_[m]; j < b.row_ptr_[m + 1]; ++j) {
        int c = b.col_[j];
        if (acc[c] == Complex(0.0, 0.0)) touched.push_back(c);
        acc[c] += arv * b.val_[j];
      }
    }
    for (int c : touched) {
      if (acc[c] != Complex(0.0, 0.0)) out.push_back({r, c, acc[c]});
      acc[c] = Complex(0.0, 0.0);
    }
  }
  return from_triplets(dim_, std::move(out), false);
}

SparseOperator SparseOperator::sum(
    const std::vector<std::pair<Complex, const SparseOperator*>>& terms, bool hermitian) {
  if (terms.empty()) throw std::invalid_argument("SparseOperator::sum: no terms");
  int dim = terms.front().second->dim();
  std::vector<Triplet> out;
  for (const auto& [c, op] : terms) {
    if (op->dim() != dim) throw DimensionError("sum: dimension mismatch");
    for (auto& t : op->triplets()) out.push_back({t.row, t.col, c * t.value});
  }
  return from_triplets(dim, std::move(out), hermitian);
}

Complex expectation(const SparseOperator& op, const StateVector& psi) {
  return psi.dot(op.apply(psi));
}

double real_expectation(const SparseOperator& op, const StateVector& psi) {
  return expectation(op, psi).real();
}

namespace {

// b^dag_i b_j acting on every basis state; appends amp * sqrt(n_j (n_i+1))
// matrix elements scaled by `scale`.
void add_bilinear(std::vector<Triplet>& out, const FockBasis& basis, int i, int j, Complex scale) {
  const std::size_t dim = basis.size();
  for (std::size_t a = 0; a < dim; ++a) {
    const FockState& s = basis.state(a);
    if (i == j) {
      if (s[i] > 0) out.push_back({static_cast<int>(a), static_cast<int>(a), scale * double(s[i])});
      continue;
    }
    if (s[j] == 0) continue;
    FockState t = s;
    t[j] -= 1;
    t[i] += 1;
    double amp = std::sqrt(double(s[j]) * double(s[i] + 1));
    std::size_t b = basis.index(t);
    out.push_back({static_cast<int>(b), static_cast<int>(a), scale * amp});
  }
}

std::vector<std::pair<int, int>> bonds_for(int L, Boundary boundary) {
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < L; ++i) bonds.emplace_back(i, i + 1);
  if (boundary == Boundary::kPeriodic && L > 2) bonds.emplace_back(L - 1, 0);
  return bonds;
}

}  // namespace

SparseOperator build_bose_hubbard(const BoseHubbardParams& params, const FockBasis& basis) {
  if (basis.sites() != params.L || basis.particles() != params.N) {
    throw std::invalid_argument("build_bose_hubbard: basis (L=" + std::to_string(basis.sites()) +
                                ",N=" + std::to_string(basis.particles()) +
                                ") does not match params (L=" + std::to_string(params.L) +
                                ",N=" + std::to_string(params.N) + ")");
  }
  if (!params.epsilon.empty() && static_cast<int>(params.epsilon.size()) != params.L) {
    throw std::invalid_argument("build_bose_hubbard: epsilon length != L");
  }
  if (!std::isfinite(params.J) || !std::isfinite(params.U)) {
    throw std::invalid_argument("build_bose_hubbard: J, U must be finite");
  }

  std::vector<Triplet> t;
  const std::size_t dim = basis.size();
  t.reserve(dim * (params.L + 1));

  for (std::size_t a = 0; a < dim; ++a) {
    const FockState& s = basis.state(a);
    double diag = 0.0;
    for (int i = 0; i < params.L; ++i) {
      double eps = params.epsilon.empty() ? 0.0 : params.epsilon[i];
      diag += eps * s[i] + 0.5 * params.U * double(s[i]) * double(s[i] - 1);
    }
    if (diag != 0.0) t.push_back({static_cast<int>(a), static_cast<int>(a), Complex(diag, 0.0)});
  }

  for (auto [i, j] : bonds_for(params.L, params.boundary)) {
    add_bilinear(t, basis, i, j, Complex(-params.J, 0.0));
    add_bilinear(t, basis, j, i, Complex(-params.J, 0.0));
  }

  return SparseOperator::from_triplets(static_cast<int>(dim), std::move(t), true);
}

SparseOperator build_measurement_operator(const MeasurementSpec& spec, const FockBasis& basis,
                                          Boundary boundary) {
  const int L = basis.sites();
  std::vector<Triplet> t;
  switch (spec.kind) {
    case MeasurementSpec::Kind::kCoherence:
      // m_coh sum_j b^dag_j b_{j+1} + h.c., bonds match lattice boundary
      for (auto [i, j] : bonds_for(L, boundary)) {
        add_bilinear(t, basis, i, j, Complex(spec.m_coh, 0.0));
        add_bilinear(t, basis, j, i, Complex(spec.m_coh, 0.0));
      }
      break;
    case MeasurementSpec::Kind::kPopulation:
      // m_pop sum over even sites; sites counted 1..L, so 0-based 1,3,...
      for (int i = 1; i < L; i += 2) {
        add_bilinear(t, basis, i, i, Complex(spec.m_pop, 0.0));
      }
      break;
    case MeasurementSpec::Kind::kCustom: {
      if (!spec.custom_matrix.has_value()) {
        throw std::invalid_argument("build_measurement_operator: custom kind requires matrix");
      }
      const Eigen::MatrixXcd& m = *spec.custom_matrix;
      if (m.rows() != L || m.cols() != L) {
        throw std::invalid_argument("build_measurement_operator: custom matrix must be LxL");
      }
      check_hermitian_matrix(m, "build_measurement_operator");
      for (int j = 0; j < L; ++j) {
        for (int k = 0; k < L; ++k) {
          if (m(j, k) != Complex(0.0, 0.0)) add_bilinear(t, basis, j, k, m(j, k));
        }
      }
      break;
    }
  }
  return SparseOperator::from_triplets(static_cast<int>(basis.size()), std::move(t), true);
}

Eigen::MatrixXcd coupling_matrix(const CouplingIntegrandSpec& spec, double g, double Delta,
                                 int L) {
  if (Delta == 0.0) throw std::invalid_argument("coupling_matrix: Delta must be nonzero");
  if (spec.wannier_width <= 0.0) throw std::invalid_argument("coupling_matrix: width must be > 0");
  if (spec.quadrature_points < 64) {
    throw std::invalid_argument("coupling_matrix: quadrature_points must be >= 64");
  }
  if (!spec.mode_function) throw std::invalid_argument("coupling_matrix: mode_function not set");

  const double w = spec.wannier_width;
  const double a = spec.lattice_constant;
  const double norm = std::pow(M_PI * w * w, -0.25);  // L2-normalized Gaussian orbital
  auto orbital = [&](int j, double x) {
    double u = x - a * j;
    return norm * std::exp(-u * u / (2.0 * w * w));
  };

  // composite Simpson over the support of all orbitals
  const double lo = -8.0 * w;
  const double hi = a * (L - 1) + 8.0 * w;
  int n = spec.quadrature_points;
  if (n % 2 == 1) ++n;
  const double h = (hi - lo) / n;

  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(L, L);
  for (int j = 0; j < L; ++j) {
    for (int k = j; k < L; ++k) {
      double acc = 0.0;
      for (int i = 0; i <= n; ++i) {
        double x = lo + h * i;
        double f = spec.mode_function(x);
        double v = f * f * orbital(j, x) * orbital(k, x);
        double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        acc += wgt * v;
      }
      double val = (g * g / Delta) * acc * h / 3.0;
      M(j, k) = val;
      M(k, j) = val;
    }
  }
  return M;
}

DerivedParams map_physical_params(const MicroscopicParams& p) {
  if (p.kappa <= 0.0) throw std::invalid_argument("map_physical_params: kappa must be > 0");
  if (p.dt_micro <= 0.0) throw std::invalid_argument("map_physical_params: dt must be > 0");
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;
  if (a2b2 <= 0.0) throw std::invalid_argument("map_physical_params: alpha^2 + beta^2 must be > 0");

  DerivedParams d;
  double ratio = p.omega_L / p.kappa;
  d.alpha0_magnitude =
      std::abs(p.A0) * std::sqrt(2.0 / (p.kappa * p.dt_micro)) * std::sqrt(1.0 + ratio * ratio);
  d.phi = std::arg(p.A0 * Complex(1.0, -ratio));
  d.K = 1.0 / (8.0 * p.dt_micro * a2b2);
  d.gamma_equivalent = 32.0 * d.K;
  d.Mr_scale = -2.0 * d.alpha0_magnitude * p.beta * p.dt_micro;
  return d;
}

SparseOperator build_effective_hamiltonian(const SparseOperator& H_atm, const SparseOperator& Mr,
                                           const MicroscopicParams& p, bool include_corrections) {
  if (H_atm.dim() != Mr.dim()) {
    throw DimensionError("build_effective_hamiltonian: dimension mismatch");
  }
  if (!include_corrections) return H_atm;

  if (p.alpha0 == 0.0) {
    throw std::invalid_argument("build_effective_hamiltonian: alpha0 = 0, Mr scaling undefined");
  }
  if (p.beta <= 0.0 || p.dt_micro <= 0.0 || p.kappa <= 0.0) {
    throw std::invalid_argument("build_effective_hamiltonian: beta, dt, kappa must be > 0");
  }
  double linear = -p.alpha / (p.beta * p.dt_micro);
  double quad = std::norm(p.A0) * p.omega_L /
                (4.0 * p.alpha0 * p.alpha0 * p.beta * p.beta * p.kappa * p.kappa * p.dt_micro *
                 p.dt_micro);
  SparseOperator Mr2 = Mr.matmul(Mr);
  return SparseOperator::sum(
      {{Complex(1.0, 0.0), &H_atm}, {Complex(linear, 0.0), &Mr}, {Complex(quad, 0.0), &Mr2}},
      true);
}

}  // namespace bhsse
