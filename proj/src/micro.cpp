#include "bhsse/micro.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bhsse {

namespace {

constexpr double kTailTolerance = 1e-10;

double log_poisson(long long n, double mu) {
  if (n < 0) return -std::numeric_limits<double>::infinity();
  if (mu <= 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return n * std::log(mu) - mu - std::lgamma(static_cast<double>(n) + 1.0);
}

// Chernoff bound on the Poisson tail beyond a: exp(-mu h(a/mu)) with
// h(x) = x ln x - x + 1, valid on both sides of the mean.
double poisson_tail_bound(double mu, double a) {
  if (mu <= 0.0) return 0.0;
  if (a <= 0.0) return 1.0;
  double x = a / mu;
  double h = x * std::log(x) - x + 1.0;
  return std::exp(-mu * h);
}

struct Window {
  long long lo;
  long long hi;
};

Window certified_window(double mu) {
  double halfwidth = 8.0 * std::sqrt(mu) + 10.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    long long lo = std::max<long long>(0, static_cast<long long>(std::floor(mu - halfwidth)));
    long long hi = static_cast<long long>(std::ceil(mu + halfwidth));
    double tail = poisson_tail_bound(mu, static_cast<double>(hi));
    if (lo > 0) tail += poisson_tail_bound(mu, static_cast<double>(lo));
    if (tail < kTailTolerance) return {lo, hi};
    halfwidth *= 1.5;
  }
  throw TruncationError("certified_window: cannot certify Poisson tail below 1e-10 for mu=" +
                        std::to_string(mu));
}

void check_homodyne_params(const MicroscopicParams& p, const char* what) {
  if (p.beta <= 0.0) throw std::invalid_argument(std::string(what) + ": beta must be > 0");
  if (p.dt_micro <= 0.0) throw std::invalid_argument(std::string(what) + ": dt must be > 0");
}

}  // namespace

double SpectralWeights::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) m += weights[i] * eigenvalues[i];
  return m;
}

void SpectralWeights::validate() const {
  if (eigenvalues.size() != weights.size() || eigenvalues.empty()) {
    throw std::invalid_argument("SpectralWeights: eigenvalues/weights size mismatch");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("SpectralWeights: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("SpectralWeights: weights sum to " + std::to_string(sum));
  }
  for (double m : eigenvalues) {
    if (!std::isfinite(m)) throw std::invalid_argument("SpectralWeights: non-finite eigenvalue");
  }
}

double PhotocountDistribution::total() const {
  return std::accumulate(prob.begin(), prob.end(), 0.0);
}

double PhotocountDistribution::pmf(long long k) const {
  long long i = k - k_min;
  if (i < 0 || i >= static_cast<long long>(prob.size())) return 0.0;
  return prob[static_cast<std::size_t>(i)];
}

double PhotocountDistribution::mean() const {
  double t = total();
  double m = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) m += (k_min + static_cast<long long>(i)) * prob[i];
  return m / t;
}

double PhotocountDistribution::variance() const {
  double mu = mean();
  double t = total();
  double v = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    double d = (k_min + static_cast<long long>(i)) - mu;
    v += d * d * prob[i];
  }
  return v / t;
}

std::pair<Complex, Complex> beam_splitter(Complex a_out, Complex b_lo) {
  const double inv_sqrt2 = 0.70710678118654752440;
  return {(a_out + Complex(0.0, 1.0) * b_lo) * inv_sqrt2,
          (a_out - Complex(0.0, 1.0) * b_lo) * inv_sqrt2};
}

std::pair<Complex, Complex> splitter_amplitudes(double m, const MicroscopicParams& p) {
  double shift = p.alpha0 * m * p.dt_micro;
  return beam_splitter(Complex(p.alpha, -shift), Complex(p.beta, 0.0));
}

std::vector<double> exact_likelihoods(const std::vector<double>& eigenvalues,
                                      const MicroscopicParams& p, long long k) {
  check_homodyne_params(p, "exact_likelihoods");
  std::vector<double> like(eigenvalues.size(), 0.0);
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    auto [ap, bp] = splitter_amplitudes(eigenvalues[i], p);
    double mu_a = std::norm(ap);
    double mu_b = std::norm(bp);
    Window wb = certified_window(mu_b);
    Window wa = certified_window(mu_a);
    long long lo = std::max({wb.lo, wa.lo - k, -k, 0LL});
    long long hi = std::min(wb.hi, wa.hi - k);
    double acc = 0.0;
    for (long long q = lo; q <= hi; ++q) {
      acc += std::exp(log_poisson(q + k, mu_a) + log_poisson(q, mu_b));
    }
    like[i] = acc;
  }
  return like;
}

PhotocountDistribution exact_pk(const SpectralWeights& w, const MicroscopicParams& p,
                                long long k_lo, long long k_hi) {
  w.validate();
  check_homodyne_params(p, "exact_pk");
  if (k_hi < k_lo) throw std::invalid_argument("exact_pk: empty k range");

  // the k window must cover >= 8 sigma around every component mean
  double sigma_k = std::sqrt(p.alpha * p.alpha + p.beta * p.beta);
  double mean_lo = std::numeric_limits<double>::infinity();
  double mean_hi = -mean_lo;
  for (double m : w.eigenvalues) {
    double mean_m = -2.0 * p.alpha0 * p.beta * m * p.dt_micro;
    mean_lo = std::min(mean_lo, mean_m);
    mean_hi = std::max(mean_hi, mean_m);
  }
  if (static_cast<double>(k_lo) > mean_lo - 8.0 * sigma_k ||
      static_cast<double>(k_hi) < mean_hi + 8.0 * sigma_k) {
    throw TruncationError("exact_pk: k window does not cover 8 sigma around the count means");
  }

  PhotocountDistribution dist;
  dist.k_min = k_lo;
  dist.prob.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);

  for (std::size_t i = 0; i < w.eigenvalues.size(); ++i) {
    auto [ap, bp] = splitter_amplitudes(w.eigenvalues[i], p);
    double mu_a = std::norm(ap);
    double mu_b = std::norm(bp);
    Window wb = certified_window(mu_b);
    Window wa = certified_window(mu_a);
    // tabulate both Poisson factors once per eigenvalue
    std::vector<double> pb(static_cast<std::size_t>(wb.hi - wb.lo + 1));
    for (long long q = wb.lo; q <= wb.hi; ++q) {
      pb[static_cast<std::size_t>(q - wb.lo)] = std::exp(log_poisson(q, mu_b));
    }
    std::vector<double> pa(static_cast<std::size_t>(wa.hi - wa.lo + 1));
    for (long long q = wa.lo; q <= wa.hi; ++q) {
      pa[static_cast<std::size_t>(q - wa.lo)] = std::exp(log_poisson(q, mu_a));
    }
    for (long long k = k_lo; k <= k_hi; ++k) {
      long long lo = std::max({wb.lo, wa.lo - k, -k, 0LL});
      long long hi = std::min(wb.hi, wa.hi - k);
      double acc = 0.0;
      for (long long q = lo; q <= hi; ++q) {
        acc += pb[static_cast<std::size_t>(q - wb.lo)] *
               pa[static_cast<std::size_t>(q + k - wa.lo)];
      }
      dist.prob[static_cast<std::size_t>(k - k_lo)] += w.weights[i] * acc;
    }
  }
  return dist;
}

namespace {

PhotocountDistribution gaussian_window(const std::vector<double>& means,
                                       const std::vector<double>& weights, double variance,
                                       long long k_lo, long long k_hi) {
  PhotocountDistribution dist;
  dist.k_min = k_lo;
  dist.prob.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
  double norm = 1.0 / std::sqrt(2.0 * M_PI * variance);
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (long long k = k_lo; k <= k_hi; ++k) {
      double d = static_cast<double>(k) - means[i];
      dist.prob[static_cast<std::size_t>(k - k_lo)] +=
          weights[i] * norm * std::exp(-d * d / (2.0 * variance));
    }
  }
  return dist;
}

}  // namespace

PhotocountDistribution gaussian_pk(const SpectralWeights& w, const MicroscopicParams& p,
                                   long long k_lo, long long k_hi) {
  w.validate();
  check_homodyne_params(p, "gaussian_pk");
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;
  if (a2b2 <= 0.0) throw std::invalid_argument("gaussian_pk: alpha^2 + beta^2 must be > 0");
  double mean = -2.0 * p.alpha0 * p.beta * w.mean() * p.dt_micro;
  return gaussian_window({mean}, {1.0}, a2b2, k_lo, k_hi);
}

PhotocountDistribution gaussian_pk_mixture(const SpectralWeights& w, const MicroscopicParams& p,
                                           long long k_lo, long long k_hi) {
  w.validate();
  check_homodyne_params(p, "gaussian_pk_mixture");
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;
  std::vector<double> means(w.eigenvalues.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i] = -2.0 * p.alpha0 * p.beta * w.eigenvalues[i] * p.dt_micro;
  }
  return gaussian_window(means, w.weights, a2b2, k_lo, k_hi);
}

double total_variation(const PhotocountDistribution& a, const PhotocountDistribution& b) {
  long long lo = std::min(a.k_min, b.k_min);
  long long hi = std::max(a.k_min + static_cast<long long>(a.prob.size()),
                          b.k_min + static_cast<long long>(b.prob.size())) -
                 1;
  double acc = 0.0;
  for (long long k = lo; k <= hi; ++k) acc += std::abs(a.pmf(k) - b.pmf(k));
  return 0.5 * acc;
}

PhotocountSampler::PhotocountSampler(const PhotocountDistribution& dist) : k_min_(dist.k_min) {
  cdf_.resize(dist.prob.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.prob.size(); ++i) {
    acc += dist.prob[i];
    cdf_[i] = acc;
  }
  if (acc <= 0.0) throw std::invalid_argument("PhotocountSampler: distribution has zero mass");
  for (auto& c : cdf_) c /= acc;
}

long long PhotocountSampler::sample(Rng& rng) const {
  double u = rng.uniform();
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return k_min_ + static_cast<long long>(it - cdf_.begin());
}

double k_to_dW(long long k, double mean_M, const MicroscopicParams& p) {
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;
  double shifted = static_cast<double>(k) + 2.0 * p.alpha0 * p.beta * mean_M * p.dt_micro;
  return std::sqrt(p.dt_micro) * shifted / std::sqrt(a2b2);
}

SampledK sample_k(const PhotocountSampler& sampler, double mean_M, const MicroscopicParams& p,
                  Rng& rng) {
  long long k = sampler.sample(rng);
  return {k, k_to_dW(k, mean_M, p)};
}

Eigen::VectorXcd kraus_update_in_eigenbasis(const Eigen::VectorXcd& coeffs,
                                            const std::vector<double>& eigenvalues, long long k,
                                            const MicroscopicParams& p, bool measurement_phases) {
  if (coeffs.size() != static_cast<Eigen::Index>(eigenvalues.size())) {
    throw DimensionError("kraus_update: coefficient/eigenvalue size mismatch");
  }
  check_homodyne_params(p, "kraus_update");
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;

  // log Gaussian factors -(k + 2 alpha0 beta m dt)^2 / (4 (alpha^2+beta^2))
  std::vector<double> le(eigenvalues.size());
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    double shifted = static_cast<double>(k) +
                     2.0 * p.alpha0 * p.beta * eigenvalues[i] * p.dt_micro;
    le[i] = -shifted * shifted / (4.0 * a2b2);
    if (std::abs(coeffs[static_cast<Eigen::Index>(i)]) > 0.0) lmax = std::max(lmax, le[i]);
  }
  if (lmax < -745.0) {
    throw PostSelectionError("kraus_update: outcome k=" + std::to_string(k) +
                             " has vanishing posterior norm");
  }

  double c_omega = std::norm(p.A0) * p.omega_L / (p.kappa * p.kappa);
  Eigen::VectorXcd out(coeffs.size());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    double m = eigenvalues[i];
    Complex v = coeffs[static_cast<Eigen::Index>(i)] * std::exp(le[i] - lmax);
    if (measurement_phases) {
      double phase = (2.0 * p.alpha0 * p.alpha * m + c_omega * m * m) * p.dt_micro;
      v *= std::exp(Complex(0.0, -phase));
    }
    out[static_cast<Eigen::Index>(i)] = v;
  }
  double n = out.norm();
  if (n == 0.0 || !std::isfinite(n)) {
    throw PostSelectionError("kraus_update: conditioned state has zero norm");
  }
  return out / n;
}

StateVector kraus_update(const StateVector& psi, const SparseOperator& M0, long long k,
                         const MicroscopicParams& p, bool measurement_phases) {
  if (psi.size() != M0.dim()) throw DimensionError("kraus_update: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M0.to_dense());
  std::vector<double> eigs(es.eigenvalues().data(), es.eigenvalues().data() + M0.dim());
  Eigen::VectorXcd coeffs = es.eigenvectors().adjoint() * psi;
  Eigen::VectorXcd cond = kraus_update_in_eigenbasis(coeffs, eigs, k, p, measurement_phases);
  return es.eigenvectors() * cond;
}

Eigen::VectorXcd exact_conditioned_state(const Eigen::VectorXcd& coeffs,
                                         const std::vector<double>& eigenvalues, long long k,
                                         const MicroscopicParams& p) {
  if (coeffs.size() != static_cast<Eigen::Index>(eigenvalues.size())) {
    throw DimensionError("exact_conditioned_state: size mismatch");
  }
  if (eigenvalues.size() > 32) {
    throw std::invalid_argument("exact_conditioned_state: more than 32 eigenvalues");
  }
  check_homodyne_params(p, "exact_conditioned_state");

  const std::size_t n = eigenvalues.size();
  std::vector<double> lscale(n, -std::numeric_limits<double>::infinity());
  std::vector<Complex> ssum(n, Complex(0.0, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    auto [ap, bp] = splitter_amplitudes(eigenvalues[i], p);
    double mu_a = std::norm(ap);
    double mu_b = std::norm(bp);
    double arg_a = std::arg(ap);
    double arg_b = std::arg(bp);
    Window wb = certified_window(mu_b);
    Window wa = certified_window(mu_a);
    long long lo = std::max({wb.lo, wa.lo - k, -k, 0LL});
    long long hi = std::min(wb.hi, wa.hi - k);
    if (lo > hi) continue;  // likelihood below the certified tail
    // log |<p+k|alpha'><p|beta'>| = (log Poi(p+k;mu_a) + log Poi(p;mu_b))/2
    double lmax = -std::numeric_limits<double>::infinity();
    std::vector<double> lmag(static_cast<std::size_t>(hi - lo + 1));
    for (long long q = lo; q <= hi; ++q) {
      double l = 0.5 * (log_poisson(q + k, mu_a) + log_poisson(q, mu_b));
      lmag[static_cast<std::size_t>(q - lo)] = l;
      lmax = std::max(lmax, l);
    }
    if (!std::isfinite(lmax)) continue;
    Complex acc(0.0, 0.0);
    for (long long q = lo; q <= hi; ++q) {
      double phase = static_cast<double>(q + k) * arg_a + static_cast<double>(q) * arg_b;
      acc += std::exp(lmag[static_cast<std::size_t>(q - lo)] - lmax) *
             std::exp(Complex(0.0, phase));
    }
    lscale[i] = lmax;
    ssum[i] = acc;
  }

  double lmax_all = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(coeffs[static_cast<Eigen::Index>(i)]) > 0.0) {
      lmax_all = std::max(lmax_all, lscale[i]);
    }
  }
  if (!std::isfinite(lmax_all)) {
    throw PostSelectionError("exact_conditioned_state: outcome k has vanishing posterior norm");
  }

  double c_omega = std::norm(p.A0) * p.omega_L / (p.kappa * p.kappa);
  Eigen::VectorXcd out(coeffs.size());
  for (std::size_t i = 0; i < n; ++i) {
    double m = eigenvalues[i];
    double phase = (p.alpha0 * p.alpha * m + c_omega * m * m) * p.dt_micro;
    Complex v = coeffs[static_cast<Eigen::Index>(i)] * std::exp(Complex(0.0, -phase)) *
                std::exp(lscale[i] - lmax_all) * ssum[i];
    out[static_cast<Eigen::Index>(i)] = v;
  }
  double norm = out.norm();
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw PostSelectionError("exact_conditioned_state: conditioned state has zero norm");
  }
  return out / norm;
}

std::vector<double> povm_default_grid(const std::vector<double>& eigenvalues, double K, double dt,
                                      double span_sigmas, double step_sigmas) {
  if (eigenvalues.empty()) throw std::invalid_argument("povm_default_grid: no eigenvalues");
  if (K <= 0.0 || dt <= 0.0) throw std::invalid_argument("povm_default_grid: K, dt must be > 0");
  double sigma = 1.0 / std::sqrt(8.0 * K * dt);
  auto [mn, mx] = std::minmax_element(eigenvalues.begin(), eigenvalues.end());
  double lo = *mn - span_sigmas * sigma;
  double hi = *mx + span_sigmas * sigma;
  double h = step_sigmas * sigma;
  std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + h * static_cast<double>(i);
  return grid;
}

double povm_completeness_unchecked(const std::vector<double>& eigenvalues, double K, double dt,
                                   const std::vector<double>& grid) {
  if (grid.size() < 2) throw GridSpanError("povm_completeness: grid needs >= 2 points");
  double norm = std::sqrt(4.0 * K * dt / M_PI);
  double dev = 0.0;
  for (double m : eigenvalues) {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double h;
      if (i == 0) {
        h = 0.5 * (grid[1] - grid[0]);
      } else if (i + 1 == grid.size()) {
        h = 0.5 * (grid[i] - grid[i - 1]);
      } else {
        h = 0.5 * (grid[i + 1] - grid[i - 1]);
      }
      double d = m - grid[i];
      acc += h * norm * std::exp(-4.0 * K * dt * d * d);
    }
    dev = std::max(dev, std::abs(acc - 1.0));
  }
  return dev;
}

double povm_completeness(const SparseOperator& M0, double K, double dt,
                         const std::vector<double>& grid) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M0.to_dense());
  std::vector<double> eigs(es.eigenvalues().data(), es.eigenvalues().data() + M0.dim());
  double sigma = 1.0 / std::sqrt(8.0 * K * dt);
  auto [mn, mx] = std::minmax_element(eigs.begin(), eigs.end());
  if (grid.empty() || grid.front() > *mn - 8.0 * sigma || grid.back() < *mx + 8.0 * sigma) {
    throw GridSpanError("povm_completeness: grid must span 8 sigma beyond extreme eigenvalues");
  }
  return povm_completeness_unchecked(eigs, K, dt, grid);
}

ThetaReport theta_exact(double m, double n, const MicroscopicParams& p) {
  if (p.alpha < 0.0 || p.beta <= 0.0) {
    throw std::domain_error("theta_exact: needs alpha >= 0 and beta > 0");
  }
  double sm = p.alpha0 * m * p.dt_micro;
  double sn = p.alpha0 * n * p.dt_micro;
  if (p.alpha == 0.0 && (p.beta - std::abs(sm) <= 0.0 || p.beta - std::abs(sn) <= 0.0)) {
    throw std::domain_error("theta_exact: argument leaves the principal branch");
  }
  auto f = [&](double s) {
    return p.alpha == 0.0 ? (p.beta + s > 0.0 ? M_PI / 2.0 : -M_PI / 2.0)
                          : std::atan((p.beta + s) / p.alpha);
  };
  double i_theta = -f(sm) + f(sn) + f(-sm) - f(-sn);
  ThetaReport r;
  r.exact = Complex(0.0, -i_theta);  // theta = -i * (sum of four arctangents)
  double a2b2 = p.alpha * p.alpha + p.beta * p.beta;
  r.approx = Complex(0.0, -2.0 * std::atan(p.alpha * p.alpha0 * (n - m) * p.dt_micro / a2b2));
  r.abs_error = std::abs(r.exact - r.approx);
  double scale = std::abs(r.exact);
  r.rel_error = scale > 0.0 ? r.abs_error / scale : (r.abs_error > 0.0 ? 1.0 : 0.0);
  return r;
}

AppendixPkOracle appendix_pk_oracle(double mu_alpha, double mu_beta, long long k) {
  if (mu_alpha < 25.0 || mu_beta < 25.0) {
    throw std::invalid_argument("appendix_pk_oracle: needs |alpha'|^2, |beta'|^2 >= 25");
  }
  // the Gaussian surrogate terms have width sqrt(mu); 16 sqrt(mu) covers their
  // tails far below the comparison tolerance
  double half = 16.0 * std::sqrt(std::max(mu_alpha, mu_beta)) + 20.0;
  long long lo = std::max(
      {static_cast<long long>(std::floor(std::min(mu_beta, mu_alpha - k) - half)), -k, 0LL});
  long long hi = static_cast<long long>(std::ceil(std::max(mu_beta, mu_alpha - k) + half));

  double poisson = 0.0;
  double gauss = 0.0;
  double norm = 1.0 / (2.0 * M_PI * std::sqrt(mu_alpha * mu_beta));
  for (long long q = lo; q <= hi; ++q) {
    poisson += std::exp(log_poisson(q + k, mu_alpha) + log_poisson(q, mu_beta));
    double da = static_cast<double>(q + k) - mu_alpha;
    double db = static_cast<double>(q) - mu_beta;
    gauss += norm * std::exp(-da * da / (2.0 * mu_alpha) - db * db / (2.0 * mu_beta));
  }
  double s = mu_alpha + mu_beta;
  double dk = static_cast<double>(k) + mu_beta - mu_alpha;
  double closed = std::exp(-dk * dk / (2.0 * s)) / std::sqrt(2.0 * M_PI * s);

  AppendixPkOracle r;
  r.poisson_sum = poisson;
  r.gaussian_sum = gauss;
  r.closed_form = closed;
  r.rel_error_poisson = std::abs(closed - poisson) / std::abs(poisson);
  r.rel_error_gaussian = std::abs(closed - gauss) / std::abs(gauss);
  return r;
}

AppendixDmOracle appendix_dm_oracle(double mu_alpha_m, double mu_alpha_n, double mu_beta_m,
                                    double mu_beta_n, long long k, Complex theta) {
  for (double mu : {mu_alpha_m, mu_alpha_n, mu_beta_m, mu_beta_n}) {
    if (mu < 25.0) throw std::invalid_argument("appendix_dm_oracle: needs amplitudes >= 25");
  }
  double mu_ref = std::max({mu_alpha_m, mu_alpha_n, mu_beta_m, mu_beta_n});
  double mu_lo = std::min({mu_beta_m, mu_beta_n, mu_alpha_m - k, mu_alpha_n - k});
  // quarter-exponent Gaussians have width sqrt(2 mu); keep 16 sqrt(mu) margin
  double half = 16.0 * std::sqrt(mu_ref) + 20.0;
  long long lo = std::max({static_cast<long long>(std::floor(mu_lo - half)), -k, 0LL});
  long long hi = static_cast<long long>(std::ceil(mu_ref + half));

  Complex poisson(0.0, 0.0);
  Complex gauss(0.0, 0.0);
  for (long long q = lo; q <= hi; ++q) {
    double pd = static_cast<double>(q);
    double pk = static_cast<double>(q + k);
    double g = -(pd - mu_beta_m) * (pd - mu_beta_m) / (4.0 * mu_beta_m) -
               (pd - mu_beta_n) * (pd - mu_beta_n) / (4.0 * mu_beta_n) -
               (pk - mu_alpha_m) * (pk - mu_alpha_m) / (4.0 * mu_alpha_m) -
               (pk - mu_alpha_n) * (pk - mu_alpha_n) / (4.0 * mu_alpha_n);
    Complex tilt = std::exp(-pd * theta);
    gauss += std::exp(g) * tilt;
    double lp = 0.5 * (log_poisson(q, mu_beta_m) + log_poisson(q, mu_beta_n) +
                       log_poisson(q + k, mu_alpha_m) + log_poisson(q + k, mu_alpha_n));
    poisson += std::exp(lp) * tilt;
  }
  poisson *= 2.0 * M_PI *
             std::pow(mu_alpha_m * mu_alpha_n * mu_beta_m * mu_beta_n, 0.25);

  // closed form sqrt(pi/Q20) exp(-Q1) with the completed-square coefficients
  double D = mu_alpha_m * mu_alpha_n * (mu_beta_m + mu_beta_n) +
             mu_beta_m * mu_beta_n * (mu_alpha_m + mu_alpha_n);
  double q20 = 0.25 * (1.0 / mu_beta_m + 1.0 / mu_beta_n + 1.0 / mu_alpha_m + 1.0 / mu_alpha_n);
  Complex bracket = 2.0 * mu_alpha_m * mu_alpha_n * (theta - 2.0) +
                    (mu_alpha_m + mu_alpha_n) * static_cast<double>(k);
  Complex q1 = 0.25 * (Complex(mu_beta_m + mu_beta_n + mu_alpha_m + mu_alpha_n -
                                   4.0 * static_cast<double>(k) +
                                   double(k) * double(k) / mu_alpha_m +
                                   double(k) * double(k) / mu_alpha_n,
                               0.0) -
                       mu_beta_m * mu_beta_n * bracket * bracket /
                           (mu_alpha_m * mu_alpha_n * D));
  Complex closed = std::sqrt(M_PI / q20) * std::exp(-q1);

  AppendixDmOracle r;
  r.poisson_sum = poisson;
  r.gaussian_sum = gauss;
  r.closed_form = closed;
  r.rel_error_poisson = std::abs(closed - poisson) / std::abs(poisson);
  r.rel_error_gaussian = std::abs(closed - gauss) / std::abs(gauss);
  return r;
}

PQuadratureResult p_quadrature_distribution(const SpectralWeights& w,
                                            const MicroscopicParams& p) {
  w.validate();
  if (p.sigma <= 0.0) throw std::invalid_argument("p_quadrature_distribution: sigma must be > 0");
  if (p.dt_micro <= 0.0) throw std::invalid_argument("p_quadrature_distribution: dt must be > 0");

  PQuadratureResult q;
  q.weights = w.weights;
  q.component_means.resize(w.eigenvalues.size());
  double c = -std::sqrt(2.0) * p.alpha0 * p.dt_micro / p.sigma;
  for (std::size_t i = 0; i < w.eigenvalues.size(); ++i) {
    q.component_means[i] = c * w.eigenvalues[i];
  }
  q.component_sigma = 1.0 / (std::sqrt(2.0) * p.sigma);
  q.collapsed_mean = c * w.mean();

  // total variation by trapezoid quadrature over the mixture support
  auto [mn, mx] = std::minmax_element(q.component_means.begin(), q.component_means.end());
  double lo = std::min(*mn, q.collapsed_mean) - 10.0 * q.component_sigma;
  double hi = std::max(*mx, q.collapsed_mean) + 10.0 * q.component_sigma;
  const int npts = 8001;
  double h = (hi - lo) / (npts - 1);
  double s2 = 2.0 * q.component_sigma * q.component_sigma;
  double nrm = 1.0 / std::sqrt(M_PI * s2);
  double acc = 0.0;
  for (int i = 0; i < npts; ++i) {
    double x = lo + h * i;
    double mix = 0.0;
    for (std::size_t j = 0; j < q.component_means.size(); ++j) {
      double d = x - q.component_means[j];
      mix += q.weights[j] * nrm * std::exp(-d * d / s2);
    }
    double dc = x - q.collapsed_mean;
    double col = nrm * std::exp(-dc * dc / s2);
    double wgt = (i == 0 || i + 1 == npts) ? 0.5 : 1.0;
    acc += wgt * std::abs(mix - col);
  }
  q.tv_distance = 0.5 * acc * h;
  return q;
}

double sample_p(const PQuadratureResult& q, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = q.component_means.size() - 1;
  for (std::size_t i = 0; i < q.weights.size(); ++i) {
    acc += q.weights[i];
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  return q.component_means[pick] + q.component_sigma * rng.normal();
}

double p_to_dW(double P, const PQuadratureResult& q, const MicroscopicParams& p) {
  return p.sigma * std::sqrt(2.0 * p.dt_micro) * (P - q.collapsed_mean);
}

}  // namespace bhsse
