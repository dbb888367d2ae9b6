#pragma once

#include <functional>
#include <optional>
#include <utility>

namespace exoforest {

// Inverse-moment expansion of a binomial/multinomial functional: the leading
// term, the displayed higher-order correction (0 when none is stated), the
// remainder envelope with implicit constant 1, and the exact value when the
// count is small enough to enumerate.
struct MomentExpansion {
  double leading = 0.0;
  double second_order = 0.0;
  double bound_shape = 0.0;
  std::optional<double> exact;
};

// Exact E[f(N)] for N ~ Binomial(n, p), via log-space binomial weights.
// Requires n <= 60 and f(0) defined.
double exact_binomial_functional(int n, double p, const std::function<double(int)>& f);

// Expansion of E[1{N>=1}/N] around 1/(np).
MomentExpansion keylem1_approx(int n, double p);

// Expansion of E[1/(a+N)^r] around 1/(a+np), with the stated second-order
// correction r(r+1)np(1-p)/(2(a+np)^{r+2}).
MomentExpansion inverse_power_expansion(int n, double p, double a, int r);

// Overlapping-cell count ratios. With N = N0 + N1, N' = N0 + N2 for
// multinomial counts of P0 = P cap P', P1 = P \ P', P2 = P' \ P:
//   part1: E[N0/(N N')] around p0/(n p p2);
//   part2: E[(alpha N0/N + beta N1/N)(alpha N0/N' + gamma N2/N')] around the
//          population ratio product plus its stated 1/n correction.
// Ratios with zero denominators are taken as 0. Exact values are filled by
// full multinomial enumeration when n <= 25.
std::pair<MomentExpansion, MomentExpansion> keylem2_terms(int n, double p, double p2,
                                                          double p0, double alpha,
                                                          double beta, double gamma_);

enum class ProductKind {
  SameVar,     // E[1/((a+N)^r (b+N)^s)], one binomial count
  Disjoint,    // E[1/((a+N1)(b+N2))], disjoint cells
  Overlapping  // E[1/((a+N)(a+N'))], overlapping cells
};

struct ProductParams {
  int n = 0;
  double a = 1.0;
  double b = 1.0;  // Overlapping uses a for both factors
  double p1 = 0.0; // SameVar/Overlapping: p; Disjoint: P(A1)
  double p2 = 0.0; // Overlapping: p'; Disjoint: P(A2)
  double p0 = 0.0; // Overlapping only: P(A1 cap A2)
  int r = 1;       // SameVar only
  int s = 1;       // SameVar only
};

MomentExpansion product_inverse_expansions(ProductKind kind, const ProductParams& params);

}  // namespace exoforest
