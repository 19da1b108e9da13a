#pragma once

namespace ftk {

// Regularized lower incomplete gamma function P(a, x).
double gamma_p(double a, double x);

// Chi-square CDF with df degrees of freedom.
double chi_square_cdf(double x, double df);

// Inverse chi-square CDF; used for Mahalanobis gating thresholds.
double chi_square_quantile(double p, double df);

}  // namespace ftk
