#pragma once
// Parametric accelerated failure time regression: Weibull, log-normal and
// log-logistic families fitted by right-censored maximum likelihood (BFGS
// with backtracking line search), ridge on the interaction block only.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "driftsurv/cox.hpp"  // ConvergenceReport
#include "driftsurv/schema.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

enum class AFTFamily { weibull, lognormal, loglogistic };

const char* aft_family_name(AFTFamily family);
AFTFamily aft_family_from_name(const std::string& name);

// Closed forms; mu is the linear predictor, sigma the scale (Weibull and
// log-logistic: shape k = 1/sigma, scale lambda = exp(mu)).
double aft_survival(AFTFamily family, double mu, double sigma, double t);
double aft_hazard(AFTFamily family, double mu, double sigma, double t);
double aft_median_time(AFTFamily family, double mu, double sigma);

// Likelihood core. The design matrix carries an explicit intercept in
// column 0; `penalized` marks interaction columns (never the intercept).
struct AFTDesign {
    Eigen::MatrixXd z;
    Eigen::VectorXd time;  // strictly positive
    std::vector<bool> event;
    std::vector<bool> penalized;
};

double censored_log_likelihood(AFTFamily family, const Eigen::VectorXd& theta, double log_sigma,
                               const AFTDesign& design, double ridge);
// Gradient in (theta, log_sigma); the last component is d/d log_sigma.
Eigen::VectorXd censored_ll_gradient(AFTFamily family, const Eigen::VectorXd& theta,
                                     double log_sigma, const AFTDesign& design, double ridge);

struct AFTOptions {
    int max_iterations = 200;
    double gradient_tol = 1e-8;
};

struct AFTFit {
    FeatureSchema schema;
    AFTFamily family = AFTFamily::weibull;
    std::vector<std::string> names;  // "intercept" followed by schema columns
    Eigen::VectorXd theta;
    double log_sigma = 0.0;
    double ridge = 0.0;
    double log_likelihood = 0.0;  // unpenalized, at the optimum
    ConvergenceReport convergence;

    double sigma() const;
    double coefficient(const std::string& name) const;
    double mu(const std::vector<double>& covariates) const;  // schema-width input
};

// Fits on conversation-level summaries of `pool`, one row per conversation,
// event times taken from derive_event_outcome.
AFTFit fit_aft(const Dataset& data, const std::vector<int>& pool, const FeatureSchema& schema,
               AFTFamily family, double ridge, const AFTOptions& opts = {});

// Core fit on a prepared design; used directly by tests and synthetic-recovery
// checks (times need not be integers there).
AFTFit fit_aft_design(const AFTDesign& design, const FeatureSchema& schema, AFTFamily family,
                      double ridge, const AFTOptions& opts = {});

SurvivalCurve aft_survival_curve(const AFTFit& fit, const std::vector<double>& covariates);
double aft_median(const AFTFit& fit, const std::vector<double>& covariates);
double acceleration_factor(const AFTFit& fit, const std::string& covariate);

}  // namespace driftsurv
