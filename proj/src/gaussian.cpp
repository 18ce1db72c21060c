#include "handtrack/gaussian.hpp"

#include <cmath>
#include <numbers>

namespace handtrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The product of two isotropic Gaussians integrates per dimension to
// sqrt(2 pi a b / (a + b)) exp(-dx^2 / (2 (a + b))), with a, b the variances.
// The operands are combined with commutative operations only, so swapping
// p and q reproduces the result bit for bit.
inline double overlap_kernel(double dist_sq, double var_p, double var_q, double weights,
                             int dims) {
  const double var_sum = var_p + var_q;
  const double base = kTwoPi * (var_p * var_q) / var_sum;
  const double amplitude = dims == 2 ? base : base * std::sqrt(base);
  return weights * amplitude * std::exp(-dist_sq / (2.0 * var_sum));
}

template <class G>
double similarity_impl(const Mixture<G>& a, const Mixture<G>& b, const OverlapOptions& options,
                       int dims) {
  double total = 0.0;
  for (const G& p : a) {
    const double var_p = p.sigma * p.sigma;
    for (const G& q : b) {
      const double dist_sq = (p.mu - q.mu).squaredNorm();
      if (options.prune && beyond_prune_radius(dist_sq, p.sigma, q.sigma)) continue;
      total += overlap_kernel(dist_sq, var_p, q.sigma * q.sigma, p.weight * q.weight, dims);
    }
  }
  return total;
}

template <class G>
double self_similarity_impl(const Mixture<G>& a, const OverlapOptions& options, int dims) {
  double diagonal = 0.0;
  double off_diagonal = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const G& p = a[i];
    const double var_p = p.sigma * p.sigma;
    diagonal += overlap_kernel(0.0, var_p, var_p, p.weight * p.weight, dims);
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const G& q = a[j];
      const double dist_sq = (p.mu - q.mu).squaredNorm();
      if (options.prune && beyond_prune_radius(dist_sq, p.sigma, q.sigma)) continue;
      off_diagonal += overlap_kernel(dist_sq, var_p, q.sigma * q.sigma, p.weight * q.weight, dims);
    }
  }
  return diagonal + 2.0 * off_diagonal;
}

}  // namespace

double gaussian_overlap(const Gaussian2D& p, const Gaussian2D& q) {
  return overlap_kernel((p.mu - q.mu).squaredNorm(), p.sigma * p.sigma, q.sigma * q.sigma,
                        p.weight * q.weight, 2);
}

double gaussian_overlap(const Gaussian3D& p, const Gaussian3D& q) {
  return overlap_kernel((p.mu - q.mu).squaredNorm(), p.sigma * p.sigma, q.sigma * q.sigma,
                        p.weight * q.weight, 3);
}

double mixture_similarity(const Mixture<Gaussian2D>& a, const Mixture<Gaussian2D>& b,
                          const OverlapOptions& options) {
  return similarity_impl(a, b, options, 2);
}

double mixture_similarity(const Mixture<Gaussian3D>& a, const Mixture<Gaussian3D>& b,
                          const OverlapOptions& options) {
  return similarity_impl(a, b, options, 3);
}

double self_similarity(const Mixture<Gaussian2D>& a, const OverlapOptions& options) {
  return self_similarity_impl(a, options, 2);
}

double self_similarity(const Mixture<Gaussian3D>& a, const OverlapOptions& options) {
  return self_similarity_impl(a, options, 3);
}

}  // namespace handtrack
