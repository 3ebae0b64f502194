#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bhsse/operators.hpp"
#include "bhsse/rng.hpp"

namespace bhsse {

class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

class PostSelectionError : public std::runtime_error {
 public:
  explicit PostSelectionError(const std::string& msg) : std::runtime_error(msg) {}
};

class GridSpanError : public std::runtime_error {
 public:
  explicit GridSpanError(const std::string& msg) : std::runtime_error(msg) {}
};

// Eigenvalues m of the monitored observable and the weights |C_m|^2 of the
// atomic state expanded in its eigenbasis.
struct SpectralWeights {
  std::vector<double> eigenvalues;
  std::vector<double> weights;

  double mean() const;
  void validate() const;  // weights >= 0 and sum to 1 within 1e-12
};

// Distribution of the detected photon-number difference k on a contiguous
// integer window [k_min, k_min + prob.size()).
struct PhotocountDistribution {
  long long k_min = 0;
  std::vector<double> prob;

  double total() const;
  double pmf(long long k) const;
  double mean() const;
  double variance() const;
};

// 50:50 beam splitter on two coherent amplitudes:
// (a, b) -> ((a + i b)/sqrt(2), (a - i b)/sqrt(2))
std::pair<Complex, Complex> beam_splitter(Complex a_out, Complex b_lo);

// Beam-splitter output amplitudes for eigenvalue m:
// alpha' = (alpha + i(beta - alpha0 m dt))/sqrt(2),
// beta'  = (alpha - i(beta + alpha0 m dt))/sqrt(2)
std::pair<Complex, Complex> splitter_amplitudes(double m, const MicroscopicParams& p);

// Exact photocount-difference statistics: for each eigenvalue, the law of
// the difference of two independent Poisson counts with means |alpha'_m|^2
// and |beta'_m|^2, mixed with the spectral weights. Truncation of the
// photon-number sum is certified by a Chernoff tail bound below 1e-10.
PhotocountDistribution exact_pk(const SpectralWeights& w, const MicroscopicParams& p,
                                long long k_lo, long long k_hi);

// Per-eigenvalue likelihoods L_m(k) = sum_p Poi(p+k;|alpha'_m|^2) Poi(p;|beta'_m|^2).
std::vector<double> exact_likelihoods(const std::vector<double>& eigenvalues,
                                      const MicroscopicParams& p, long long k);

// Single-Gaussian surrogate: mean -2 alpha0 beta <M> dt, variance alpha^2+beta^2.
PhotocountDistribution gaussian_pk(const SpectralWeights& w, const MicroscopicParams& p,
                                   long long k_lo, long long k_hi);

// Per-eigenvalue Gaussian mixture (the uncollapsed form); its distance to
// gaussian_pk quantifies the |C_m|^2 ~ delta approximation.
PhotocountDistribution gaussian_pk_mixture(const SpectralWeights& w, const MicroscopicParams& p,
                                           long long k_lo, long long k_hi);

double total_variation(const PhotocountDistribution& a, const PhotocountDistribution& b);

// Inverse-CDF sampler over a tabulated photocount distribution.
class PhotocountSampler {
 public:
  explicit PhotocountSampler(const PhotocountDistribution& dist);
  long long sample(Rng& rng) const;

 private:
  long long k_min_;
  std::vector<double> cdf_;
};

struct SampledK {
  long long k;
  double dW;
};

// Draw k and map it to the Wiener increment
// dW = sqrt(dt) (k + 2 alpha0 beta <M> dt)/sqrt(alpha^2+beta^2).
SampledK sample_k(const PhotocountSampler& sampler, double mean_M, const MicroscopicParams& p,
                  Rng& rng);
double k_to_dW(long long k, double mean_M, const MicroscopicParams& p);

// Conditioned state after one weak measurement with outcome k:
// psi -> N e^{-i H_meas dt} exp[-(k + 2 alpha0 beta M dt)^2/(4(alpha^2+beta^2))] psi
// where H_meas = 2 alpha0 alpha M + (|A0|^2 omega_L/kappa^2) M^2 collects the
// measurement-induced phases (the bare atomic Hamiltonian is applied by the
// caller). Coefficients are given in the M eigenbasis.
Eigen::VectorXcd kraus_update_in_eigenbasis(const Eigen::VectorXcd& coeffs,
                                            const std::vector<double>& eigenvalues, long long k,
                                            const MicroscopicParams& p,
                                            bool measurement_phases = true);

StateVector kraus_update(const StateVector& psi, const SparseOperator& M0, long long k,
                         const MicroscopicParams& p, bool measurement_phases = true);

// Brute-force conditioned state from the exact coherent-state overlaps:
// C'_m = C_m e^{-i alpha0 alpha m dt} e^{-i (|A0|^2 omega_L/kappa^2) m^2 dt}
//        * sum_p <p+k|alpha'_m><p|beta'_m>, normalized. Ground truth for
// kraus_update; the photon-number sum carries the same tail certificate as
// exact_pk.
Eigen::VectorXcd exact_conditioned_state(const Eigen::VectorXcd& coeffs,
                                         const std::vector<double>& eigenvalues, long long k,
                                         const MicroscopicParams& p);

// Uniform outcome grid covering [m_min - span*sigma, m_max + span*sigma]
// with sigma = 1/sqrt(8 K dt), spacing step*sigma.
std::vector<double> povm_default_grid(const std::vector<double>& eigenvalues, double K, double dt,
                                      double span_sigmas = 10.0, double step_sigmas = 0.25);

// max_m |sum_grid w_i M^dag(a_i) M(a_i) - 1| for the Gaussian Kraus family
// M(a) = (4 K dt/pi)^{1/4} exp(-2 K dt (M0 - a)^2), trapezoid quadrature.
// The checked variant requires the grid to extend >= 8 sigma past the
// extreme eigenvalues.
double povm_completeness(const SparseOperator& M0, double K, double dt,
                         const std::vector<double>& grid);
double povm_completeness_unchecked(const std::vector<double>& eigenvalues, double K, double dt,
                                   const std::vector<double>& grid);

struct ThetaReport {
  Complex exact;
  Complex approx;
  double abs_error;
  double rel_error;
};

// theta from the four-arctangent form vs the small-dt approximation
// -2i atan(alpha alpha0 (n-m) dt/(alpha^2+beta^2)). The absolute gap closes
// at O(dt^3); relative to |theta| ~ dt it closes at O(dt^2).
ThetaReport theta_exact(double m, double n, const MicroscopicParams& p);

struct AppendixPkOracle {
  double poisson_sum;   // exact Poisson-product summation
  double gaussian_sum;  // discrete sum of the Gaussian surrogate terms
  double closed_form;
  double rel_error_poisson;   // |closed - poisson_sum|/poisson_sum
  double rel_error_gaussian;  // |closed - gaussian_sum|/gaussian_sum
};

AppendixPkOracle appendix_pk_oracle(double mu_alpha, double mu_beta, long long k);

struct AppendixDmOracle {
  Complex poisson_sum;
  Complex gaussian_sum;
  Complex closed_form;
  double rel_error_poisson;
  double rel_error_gaussian;
};

AppendixDmOracle appendix_dm_oracle(double mu_alpha_m, double mu_alpha_n, double mu_beta_m,
                                    double mu_beta_n, long long k, Complex theta);

struct PQuadratureResult {
  std::vector<double> component_means;  // p_m0 = -sqrt(2) alpha0 m dt / sigma
  std::vector<double> weights;
  double component_sigma;  // 1/(sqrt(2) sigma)
  double collapsed_mean;   // p_m0 evaluated at <M>
  double tv_distance;      // mixture vs collapsed Gaussian
};

PQuadratureResult p_quadrature_distribution(const SpectralWeights& w,
                                            const MicroscopicParams& p);

// Sample the P quadrature from the exact mixture and map to the Wiener
// increment dW = sigma sqrt(2 dt) (P - collapsed_mean).
double sample_p(const PQuadratureResult& q, Rng& rng);
double p_to_dW(double P, const PQuadratureResult& q, const MicroscopicParams& p);

}  // namespace bhsse
