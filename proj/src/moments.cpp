#include "exoforest/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace exoforest {

namespace {

constexpr int kMaxBinomialN = 60;
constexpr int kMaxMultinomialN = 25;

void check_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

double log_weight_term(int k, double p) {
  if (p == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return k * std::log(p);
}

// Exact E[f(N0,N1,N2)] for (N0,N1,N2,rest) ~ Multinomial(n; p0,p1,p2,q).
double exact_multinomial_functional(int n, double p0, double p1, double p2,
                                    const std::function<double(int, int, int)>& f) {
  if (n > kMaxMultinomialN)
    throw std::invalid_argument("exact_multinomial_functional: n too large for enumeration");
  const double q = 1.0 - p0 - p1 - p2;
  if (q < -1e-12) throw std::invalid_argument("exact_multinomial_functional: probabilities exceed 1");
  const double qc = std::max(q, 0.0);
  double total = 0.0;
  for (int k0 = 0; k0 <= n; ++k0)
    for (int k1 = 0; k0 + k1 <= n; ++k1)
      for (int k2 = 0; k0 + k1 + k2 <= n; ++k2) {
        const int kr = n - k0 - k1 - k2;
        const double lw = std::lgamma(n + 1.0) - std::lgamma(k0 + 1.0) -
                          std::lgamma(k1 + 1.0) - std::lgamma(k2 + 1.0) -
                          std::lgamma(kr + 1.0) + log_weight_term(k0, p0) +
                          log_weight_term(k1, p1) + log_weight_term(k2, p2) +
                          log_weight_term(kr, qc);
        if (std::isinf(lw)) continue;
        total += std::exp(lw) * f(k0, k1, k2);
      }
  return total;
}

}  // namespace

double exact_binomial_functional(int n, double p, const std::function<double(int)>& f) {
  if (n < 0 || n > kMaxBinomialN)
    throw std::invalid_argument("exact_binomial_functional: need 0 <= n <= 60");
  check_prob(p, "exact_binomial_functional: p");
  if (p == 0.0) return f(0);
  if (p == 1.0) return f(n);
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double lw = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                      std::lgamma(n - k + 1.0) + k * std::log(p) +
                      (n - k) * std::log(1.0 - p);
    total += std::exp(lw) * f(k);
  }
  return total;
}

MomentExpansion keylem1_approx(int n, double p) {
  if (n < 1) throw std::invalid_argument("keylem1_approx: n must be positive");
  check_prob(p, "keylem1_approx: p");
  if (p <= 0.0) throw std::invalid_argument("keylem1_approx: p must be positive");
  MomentExpansion m;
  m.leading = 1.0 / (n * p);
  const double denom = 1.0 + (n - 1) * p;
  m.bound_shape = (1.0 + 1.0 / (n * p)) / (denom * denom);
  if (n <= kMaxBinomialN)
    m.exact = exact_binomial_functional(n, p, [](int k) { return k >= 1 ? 1.0 / k : 0.0; });
  return m;
}

MomentExpansion inverse_power_expansion(int n, double p, double a, int r) {
  if (n < 0) throw std::invalid_argument("inverse_power_expansion: n must be nonnegative");
  check_prob(p, "inverse_power_expansion: p");
  if (a < 1.0) throw std::invalid_argument("inverse_power_expansion: a must be >= 1");
  if (r < 1) throw std::invalid_argument("inverse_power_expansion: r must be >= 1");
  MomentExpansion m;
  const double base = a + n * p;
  m.leading = std::pow(base, -r);
  m.second_order = r * (r + 1.0) * n * p * (1.0 - p) / (2.0 * std::pow(base, r + 2));
  m.bound_shape = std::pow(base, -(r + 1.5));
  if (n <= kMaxBinomialN)
    m.exact = exact_binomial_functional(n, p, [a, r](int k) { return std::pow(a + k, -r); });
  return m;
}

std::pair<MomentExpansion, MomentExpansion> keylem2_terms(int n, double p, double p2,
                                                          double p0, double alpha,
                                                          double beta, double gamma_) {
  if (n < 1) throw std::invalid_argument("keylem2_terms: n must be positive");
  check_prob(p, "keylem2_terms: p");
  check_prob(p2, "keylem2_terms: p2");
  check_prob(p0, "keylem2_terms: p0");
  if (p0 <= 0.0 || p0 > std::min(p, p2) + 1e-12)
    throw std::invalid_argument("keylem2_terms: need 0 < p0 <= min(p, p2)");
  if (p + p2 - p0 > 1.0 + 1e-12)
    throw std::invalid_argument("keylem2_terms: need p + p2 - p0 <= 1");

  const double pa = p - p0;   // probability of P \ P'
  const double pb = p2 - p0;  // probability of P' \ P

  MomentExpansion part1;
  part1.leading = p0 / (n * p * p2);
  part1.bound_shape =
      part1.leading * (1.0 / (1.0 + (n - 1) * p) + 1.0 / (1.0 + (n - 1) * p2));

  MomentExpansion part2;
  part2.leading = (alpha * p0 / p + beta * pa / p) * (alpha * p0 / p2 + gamma_ * pb / p2);
  part2.second_order =
      (alpha - beta) * (alpha - gamma_) * (pa * pb / (p * p2)) * (p0 / (n * p * p2));
  const double amax = std::max({std::abs(alpha), std::abs(beta), std::abs(gamma_)});
  part2.bound_shape =
      amax * amax *
      (part1.bound_shape + std::pow(1.0 + (n - 1) * p, -1.5) +
       std::pow(1.0 + (n - 1) * p2, -1.5) + std::pow(1.0 - p, n) + std::pow(1.0 - p2, n));

  if (n <= kMaxMultinomialN) {
    part1.exact = exact_multinomial_functional(
        n, p0, pa, pb, [](int k0, int k1, int k2) {
          const int nn = k0 + k1;
          const int nn2 = k0 + k2;
          return (nn >= 1 && nn2 >= 1) ? static_cast<double>(k0) / (static_cast<double>(nn) * nn2)
                                       : 0.0;
        });
    part2.exact = exact_multinomial_functional(
        n, p0, pa, pb, [alpha, beta, gamma_](int k0, int k1, int k2) {
          const int nn = k0 + k1;
          const int nn2 = k0 + k2;
          const double left = nn >= 1 ? (alpha * k0 + beta * k1) / nn : 0.0;
          const double right = nn2 >= 1 ? (alpha * k0 + gamma_ * k2) / nn2 : 0.0;
          return left * right;
        });
  }
  return {part1, part2};
}

MomentExpansion product_inverse_expansions(ProductKind kind, const ProductParams& params) {
  const int n = params.n;
  if (n < 0) throw std::invalid_argument("product_inverse_expansions: n must be nonnegative");
  if (params.a < 1.0 || params.b < 1.0)
    throw std::invalid_argument("product_inverse_expansions: need a, b >= 1");

  MomentExpansion m;
  switch (kind) {
    case ProductKind::SameVar: {
      check_prob(params.p1, "product_inverse_expansions: p1");
      if (params.r < 1 || params.s < 1)
        throw std::invalid_argument("product_inverse_expansions: need r, s >= 1");
      const double p = params.p1;
      const double u = params.a + n * p;
      const double v = params.b + n * p;
      const int r = params.r;
      const int s = params.s;
      m.leading = std::pow(u, -r) * std::pow(v, -s);
      const double npq = n * p * (1.0 - p);
      m.second_order = r * (r + 1.0) * npq / (2.0 * std::pow(u, r + 2) * std::pow(v, s)) +
                       s * (s + 1.0) * npq / (2.0 * std::pow(u, r) * std::pow(v, s + 2)) +
                       r * s * npq / (std::pow(u, r + 1) * std::pow(v, s + 1));
      m.bound_shape = std::pow(u, -(r + 1.5)) * std::pow(v, -s) +
                      std::pow(u, -r) * std::pow(v, -(s + 1.5)) +
                      std::pow(u, -(r + 1.0)) * std::pow(v, -(s + 0.5)) +
                      std::pow(u, -(r + 0.5)) * std::pow(v, -(s + 1.0));
      if (n <= kMaxBinomialN) {
        const double a = params.a;
        const double b = params.b;
        m.exact = exact_binomial_functional(
            n, p, [a, b, r, s](int k) { return std::pow(a + k, -r) * std::pow(b + k, -s); });
      }
      break;
    }
    case ProductKind::Disjoint: {
      check_prob(params.p1, "product_inverse_expansions: p1");
      check_prob(params.p2, "product_inverse_expansions: p2");
      if (params.p1 <= 0.0 || params.p2 <= 0.0 || params.p1 + params.p2 > 1.0 + 1e-12)
        throw std::invalid_argument(
            "product_inverse_expansions: disjoint cells need p1, p2 > 0, p1 + p2 <= 1");
      const double u = params.a + n * params.p1;
      const double v = params.b + n * params.p2;
      m.leading = 1.0 / (u * v);
      m.second_order = n * params.p1 * (1.0 - params.p1) / (u * u * u * v) +
                       n * params.p2 * (1.0 - params.p2) / (u * v * v * v) -
                       n * params.p1 * params.p2 / (u * u * v * v);
      m.bound_shape = std::pow(u, -2.5) / v + std::pow(v, -2.5) / u +
                      std::pow(u, -2.0) * std::pow(v, -1.5) +
                      std::pow(u, -1.5) * std::pow(v, -2.0);
      if (n <= kMaxMultinomialN) {
        const double a = params.a;
        const double b = params.b;
        m.exact = exact_multinomial_functional(
            n, params.p1, params.p2, 0.0,
            [a, b](int k1, int k2, int) { return 1.0 / ((a + k1) * (b + k2)); });
      }
      break;
    }
    case ProductKind::Overlapping: {
      check_prob(params.p1, "product_inverse_expansions: p1");
      check_prob(params.p2, "product_inverse_expansions: p2");
      check_prob(params.p0, "product_inverse_expansions: p0");
      if (params.p0 <= 0.0 || params.p0 > std::min(params.p1, params.p2) + 1e-12 ||
          params.p1 + params.p2 - params.p0 > 1.0 + 1e-12)
        throw std::invalid_argument(
            "product_inverse_expansions: overlapping cells need 0 < p0 <= min(p, p'), "
            "p + p' - p0 <= 1");
      const double p = params.p1;
      const double pp = params.p2;
      const double u = params.a + n * p;
      const double v = params.a + n * pp;
      m.leading = 1.0 / (u * v);
      m.second_order = m.leading * ((1.0 - p) / u + (1.0 - pp) / v +
                                    (1.0 - p) * (1.0 - pp) / (u * v)) -
                       n * (params.p0 - p * pp) / (u * u * v * v);
      m.bound_shape = std::pow(u, -2.5) / v + std::pow(v, -2.5) / u +
                      std::pow(u, -2.0) * std::pow(v, -1.5) +
                      std::pow(u, -1.5) * std::pow(v, -2.0);
      if (n <= kMaxMultinomialN) {
        const double a = params.a;
        m.exact = exact_multinomial_functional(
            n, params.p0, p - params.p0, pp - params.p0, [a](int k0, int k1, int k2) {
              return 1.0 / ((a + k0 + k1) * (a + k0 + k2));
            });
      }
      break;
    }
  }
  return m;
}

}  // namespace exoforest
