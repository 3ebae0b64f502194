#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bhsse/fock.hpp"

namespace bhsse {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;

struct Triplet {
  int row;
  int col;
  Complex value;
};

class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sparse complex matrix in CSR form with an optional Hermitian contract:
// construction with hermitian=true verifies max|A - A^dag| <= 1e-12 max|A|.
// Immutable after construction.
class SparseOperator {
 public:
  SparseOperator() = default;

  static SparseOperator from_triplets(int dim, std::vector<Triplet> entries, bool hermitian);
  static SparseOperator identity(int dim);
  static SparseOperator from_dense(const Eigen::MatrixXcd& m, bool hermitian);

  int dim() const { return dim_; }
  bool hermitian() const { return hermitian_; }
  std::size_t nonzeros() const { return val_.size(); }

  void apply(const StateVector& v, StateVector& out) const;
  StateVector apply(const StateVector& v) const;

  Eigen::MatrixXcd to_dense() const;
  std::vector<Triplet> triplets() const;

  double max_abs() const;
  double hermiticity_deviation() const;  // max entry of |A - A^dag|

  SparseOperator scaled(Complex c) const;
  SparseOperator matmul(const SparseOperator& b) const;
  static SparseOperator sum(const std::vector<std::pair<Complex, const SparseOperator*>>& terms,
                            bool hermitian);

 private:
  int dim_ = 0;
  bool hermitian_ = false;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<Complex> val_;
};

// <psi| op |psi> (no normalization applied)
Complex expectation(const SparseOperator& op, const StateVector& psi);
double real_expectation(const SparseOperator& op, const StateVector& psi);

enum class Boundary { kOpen, kPeriodic };

struct BoseHubbardParams {
  double J = 1.0;
  double U = 0.0;
  std::vector<double> epsilon;  // per-site offsets; empty means all zero
  int L = 1;
  int N = 0;
  Boundary boundary = Boundary::kOpen;
};

struct MeasurementSpec {
  enum class Kind { kCoherence, kPopulation, kCustom };
  Kind kind = Kind::kCoherence;
  double m_coh = 1.0;
  double m_pop = 1.0;
  std::optional<Eigen::MatrixXcd> custom_matrix;  // L x L Hermitian coupling M_jk
  double gamma = 0.0;                             // measurement strength
};

// Parameters of the microscopic homodyne layer. alpha, beta, alpha0 are the
// real coherent amplitudes (probe, local oscillator, coupling); A0 is the
// intra-cavity amplitude; sigma is the quadrature width of the P-route.
struct MicroscopicParams {
  double alpha = 0.0;
  double beta = 1.0;
  double alpha0 = 0.0;
  double phi = 0.0;
  double dt_micro = 1e-3;
  Complex A0{0.0, 0.0};
  double kappa = 1.0;   // half of the cavity decay rate 2*kappa
  double omega_L = 0.0;
  double g = 0.0;
  double Delta = 1.0;
  double sigma = 0.70710678118654752440;
};

// alpha0 e^{i phi} = A0 sqrt(2/(kappa dt)) (1 - i omega_L/kappa)
// K = 1/(8 dt (alpha^2 + beta^2)),  Mr = -2 alpha0 beta dt M,  gamma = 32 K
struct DerivedParams {
  double alpha0_magnitude;
  double phi;
  double K;
  double gamma_equivalent;
  double Mr_scale;
};

DerivedParams map_physical_params(const MicroscopicParams& p);

struct CouplingIntegrandSpec {
  std::function<double(double)> mode_function;  // f_a(x, omega_L), real amplitude
  double wannier_width = 0.1;
  double lattice_constant = 1.0;
  int quadrature_points = 256;
};

SparseOperator build_bose_hubbard(const BoseHubbardParams& params, const FockBasis& basis);

SparseOperator build_measurement_operator(const MeasurementSpec& spec, const FockBasis& basis,
                                          Boundary boundary = Boundary::kOpen);

// M_jk = (g^2/Delta) * integral |f_a|^2 w_j w_k dx over Gaussian orbitals
Eigen::MatrixXcd coupling_matrix(const CouplingIntegrandSpec& spec, double g, double Delta, int L);

// H_atm - (alpha/(beta dt)) Mr + (|A0|^2 omega_L / (4 alpha0^2 beta^2 kappa^2 dt^2)) Mr^2
SparseOperator build_effective_hamiltonian(const SparseOperator& H_atm, const SparseOperator& Mr,
                                           const MicroscopicParams& p, bool include_corrections);

}  // namespace bhsse
