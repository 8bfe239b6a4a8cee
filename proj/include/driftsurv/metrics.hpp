#pragma once
// Discrimination and calibration metrics: Harrell's C-index, IPCW Brier
// scores (Graf weights), the integrated Brier score over the turn grid, and
// quantile-based risk stratification with log-rank comparison.

#include <string>
#include <vector>

#include "driftsurv/nonparam.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

// Higher risk score must mean earlier expected failure. Comparable pairs:
// (i event with T_i < T_j), or (T_i = T_j, delta_i = 1, delta_j = 0);
// tied scores earn half credit.
double c_index(const std::vector<double>& risk_scores, const std::vector<EventOutcome>& outcomes);

// IPCW Brier at turn t. Failed-by-t subjects weigh 1/G(T-), survivors 1/G(t),
// censored-by-t subjects contribute nothing; G is the Kaplan-Meier of the
// censoring distribution. Subjects whose weight hits G = 0 are excluded.
double brier_at(int t, const std::vector<SurvivalCurve>& curves,
                const std::vector<EventOutcome>& outcomes);

// Unweighted mean of brier_at over t = 1..H.
double integrated_brier(const std::vector<SurvivalCurve>& curves,
                        const std::vector<EventOutcome>& outcomes);

struct EvaluationReport {
    double c_index = 0.0;
    std::vector<double> brier_by_round;
    double ibs = 0.0;
    int n_conversations = 0;
    int n_events = 0;
};

struct RiskGroup {
    std::string label;
    std::vector<int> members;  // positions into the input vectors
    SurvivalCurve km;
    MedianSurvival median;
};

struct RiskStratification {
    std::vector<RiskGroup> groups;  // ordered low -> high risk
    LogRankResult high_vs_low;
    double hazard_ratio = 1.0;  // univariate Cox on the high-vs-low indicator
};

// Partitions subjects by quantiles of the stratifier (default tertiles).
RiskStratification stratify_by_risk(const std::vector<double>& stratifier,
                                    const std::vector<EventOutcome>& outcomes, int horizon,
                                    const std::vector<double>& quantiles = {1.0 / 3.0, 2.0 / 3.0});

}  // namespace driftsurv
