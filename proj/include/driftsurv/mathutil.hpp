#pragma once
// Scalar special functions shared by the likelihoods and tests: normal
// cdf/pdf with numerically safe log tails, stable logistic helpers, and a
// regularized incomplete gamma used for chi-square upper tails.

namespace driftsurv {

double norm_pdf(double z);
double log_norm_pdf(double z);
double norm_cdf(double z);
// Upper tail 1 - Phi(z); log version stays finite far into the tail.
double norm_sf(double z);
double log_norm_sf(double z);

double sigmoid(double x);
// log(1 + e^x) without overflow.
double log1pexp(double x);

// Regularized incomplete gamma P(a,x) and Q(a,x) = 1 - P(a,x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

}  // namespace driftsurv
