#pragma once
// Turn-wise conditional failure probability monitor. At each evaluated turn
// the conversation prefix is re-aggregated, the model emits a survival
// curve, and an alert fires when 1 - S(t+tau)/S(t) exceeds the threshold.
// Includes the F1-tuned threshold search and the drift-threshold baseline.

#include <string>
#include <vector>

#include "driftsurv/pipeline.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

struct MonitorConfig {
    int tau = 2;                    // rolling horizon, clipped at H
    double alert_threshold = 0.5;   // in (0,1) for CFP; drift scale for the baseline
};

// 1 - S(t+tau)/S(t), with t+tau clipped to the grid horizon.
double conditional_failure_probability(const SurvivalCurve& curve, int t, int tau);

struct TurnRisk {
    int turn = 0;
    double risk = 0.0;
    bool alerted = false;
};

struct ConversationTrace {
    std::string conversation_id;
    bool failing = false;
    int event_time = 0;
    std::vector<TurnRisk> turns;  // failing: turns 1..T-1; censored: all observed
    int first_alert_turn = 0;     // 0 = never alerted
    int alert_count = 0;
};

struct GroupSummary {
    int n = 0;
    double pct_alerted = 0.0;            // share with at least one alert
    double alerts_per_conversation = 0.0;
    double mean_first_alert_round = 0.0;  // over alerted conversations; NaN if none
    double mean_failure_round = 0.0;      // failing group only; NaN otherwise
    double mean_lead_time = 0.0;          // T - first alert, correctly warned only
    double median_lead_time = 0.0;
};

struct MonitorReport {
    std::vector<ConversationTrace> traces;
    GroupSummary all;
    GroupSummary failing;
    GroupSummary censored;
};

MonitorReport run_monitor(const Dataset& data, const std::vector<int>& subset,
                          const FittedModel& model, const MonitorConfig& config);

// Baseline: alert whenever prompt-to-prompt drift exceeds the threshold.
MonitorReport drift_baseline_monitor(const Dataset& data, const std::vector<int>& subset,
                                     double drift_threshold);

// Conversation-level F1 over the candidate grid; ties go to the larger
// threshold. A true positive is a failing conversation with at least one
// pre-failure alert, a false positive a censored conversation with any alert.
double tune_threshold(const Dataset& data, const std::vector<int>& subset,
                      const FittedModel& model, int tau, const std::vector<double>& grid);
double tune_drift_threshold(const Dataset& data, const std::vector<int>& subset,
                            const std::vector<double>& grid);

std::vector<double> default_threshold_grid();        // 0.01 .. 0.99
std::vector<double> default_drift_threshold_grid();  // 99 points in (0, 2)

// Table-4-style text rendering of AFT/baseline group summaries.
std::string format_monitor_table(const std::vector<std::pair<std::string, const MonitorReport*>>&
                                     methods);

}  // namespace driftsurv
