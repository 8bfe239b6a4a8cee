#pragma once
// Nonparametric estimators on the discrete turn grid: Kaplan-Meier,
// Nelson-Aalen, the two-sample log-rank test and median survival time.
// Tie convention: events are processed before censorings, so subjects
// censored at t still count in the risk set at t.

#include <string>
#include <vector>

#include "driftsurv/types.hpp"

namespace driftsurv {

SurvivalCurve kaplan_meier(const std::vector<EventOutcome>& outcomes, int horizon);
CumulativeHazardCurve nelson_aalen(const std::vector<EventOutcome>& outcomes, int horizon);

struct LogRankResult {
    double statistic = 0.0;  // chi-square, 1 df
    double p_value = 1.0;
};

LogRankResult log_rank_test(const std::vector<EventOutcome>& group_a,
                            const std::vector<EventOutcome>& group_b);

struct MedianSurvival {
    double value = 0.0;
    bool beyond_horizon = false;  // S stays above 0.5 on the whole grid

    std::string str() const;  // "4.2" or "8+"
};

// Smallest t with S(t) <= 0.5, linearly interpolated between grid points.
MedianSurvival median_survival_time(const SurvivalCurve& curve);

std::string curve_to_csv(const SurvivalCurve& curve);
std::string curve_to_csv(const CumulativeHazardCurve& curve);

}  // namespace driftsurv
