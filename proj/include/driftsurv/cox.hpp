#pragma once
// Cox proportional hazards on counting-process rows with Breslow ties,
// ridge on the interaction block only, Breslow baseline hazard,
// conversation-clustered sandwich errors and Schoenfeld PH diagnostics.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftsurv/schema.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    double gradient_max_norm = 0.0;
    std::string message;
    std::vector<std::string> dropped_columns;  // constants removed before fitting
};

struct CoxOptions {
    int max_iterations = 100;
    double gradient_tol = 1e-8;
};

struct CoxFit {
    FeatureSchema schema;
    std::vector<std::string> names;     // schema column order
    Eigen::VectorXd beta;               // full width; dropped columns stay 0
    double ridge = 0.0;                 // applied to the interaction block only
    CumulativeHazardCurve baseline;     // Breslow estimate on the turn grid
    Eigen::MatrixXd robust_covariance;  // full width; zero rows/cols when dropped
    ConvergenceReport convergence;

    double coefficient(const std::string& name) const;
    double linear_predictor(const std::vector<double>& covariates) const;
    // Interaction coefficients grouped by model level: level -> (channel, gamma).
    std::map<std::string, std::vector<std::pair<std::string, double>>> interaction_coefficients()
        const;
};

CoxFit fit_cox(const std::vector<SurvivalSample>& samples, const FeatureSchema& schema,
               double ridge, const CoxOptions& opts = {});

// Breslow-tie partial log-likelihood at an arbitrary coefficient vector
// (full schema width), without the penalty.
double cox_partial_log_likelihood(const Eigen::VectorXd& beta,
                                  const std::vector<SurvivalSample>& samples);
double cox_penalized_log_likelihood(const Eigen::VectorXd& beta,
                                    const std::vector<SurvivalSample>& samples,
                                    const std::vector<bool>& penalized, double ridge);
Eigen::VectorXd cox_penalized_gradient(const Eigen::VectorXd& beta,
                                       const std::vector<SurvivalSample>& samples,
                                       const std::vector<bool>& penalized, double ridge);

CumulativeHazardCurve breslow_baseline(const Eigen::VectorXd& beta,
                                       const std::vector<SurvivalSample>& samples, int horizon);

// Survival from turn-specific linear predictors. turn_covariates holds rows
// for turns 1..m; turns beyond m carry the last observed covariates forward.
SurvivalCurve cox_survival_curve(const CoxFit& fit,
                                 const std::vector<std::vector<double>>& turn_covariates);

double hazard_ratio(const CoxFit& fit, const std::string& covariate);

// Sandwich standard errors clustered at the conversation level.
std::vector<double> cluster_robust_se(const CoxFit& fit,
                                      const std::vector<SurvivalSample>& samples);

struct SchoenfeldEntry {
    std::string name;
    double correlation = 0.0;  // scaled residual vs turn index
    double p_value = 1.0;
};

struct SchoenfeldGroup {
    std::string name;
    double p_value = 1.0;  // Bonferroni-adjusted minimum over members
};

struct SchoenfeldResult {
    std::vector<SchoenfeldEntry> covariates;
    std::vector<SchoenfeldGroup> groups;
    int n_event_times = 0;
};

// Grambsch-Therneau score test of proportional hazards against a linear
// time interaction, identity time transform on the turn index.
SchoenfeldResult schoenfeld_test(const CoxFit& fit, const std::vector<SurvivalSample>& samples);

}  // namespace driftsurv
