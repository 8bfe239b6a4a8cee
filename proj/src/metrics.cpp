#include "driftsurv/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "driftsurv/cox.hpp"
#include "driftsurv/error.hpp"

namespace driftsurv {

double c_index(const std::vector<double>& risk_scores, const std::vector<EventOutcome>& outcomes) {
    if (risk_scores.size() != outcomes.size()) {
        fail(errc::invalid_input, "c_index: scores and outcomes must align");
    }
    const auto n = outcomes.size();
    double concordant = 0.0;
    long comparable = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!outcomes[i].event_observed) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool usable =
                outcomes[i].event_time < outcomes[j].event_time ||
                (outcomes[i].event_time == outcomes[j].event_time && !outcomes[j].event_observed);
            if (!usable) continue;
            ++comparable;
            if (risk_scores[i] > risk_scores[j]) {
                concordant += 1.0;
            } else if (risk_scores[i] == risk_scores[j]) {
                concordant += 0.5;
            }
        }
    }
    if (comparable == 0) fail(errc::invalid_input, "c_index: no comparable pairs");
    return concordant / static_cast<double>(comparable);
}

namespace {

// Kaplan-Meier of the censoring distribution (roles of event and censoring
// swapped, same risk-set convention as the main estimator).
std::vector<double> censoring_km(const std::vector<EventOutcome>& outcomes, int horizon) {
    std::vector<int> censorings(static_cast<std::size_t>(horizon) + 1, 0);
    std::vector<int> leaving(static_cast<std::size_t>(horizon) + 1, 0);
    for (const auto& o : outcomes) {
        const int t = std::min(o.event_time, horizon);
        if (!o.event_observed) ++censorings[static_cast<std::size_t>(t)];
        ++leaving[static_cast<std::size_t>(t)];
    }
    std::vector<double> g(static_cast<std::size_t>(horizon) + 1, 1.0);
    int at_risk = static_cast<int>(outcomes.size());
    double s = 1.0;
    for (int t = 1; t <= horizon; ++t) {
        if (at_risk > 0 && censorings[static_cast<std::size_t>(t)] > 0) {
            s *= 1.0 - static_cast<double>(censorings[static_cast<std::size_t>(t)]) / at_risk;
        }
        at_risk -= leaving[static_cast<std::size_t>(t)];
        g[static_cast<std::size_t>(t)] = s;
    }
    return g;
}

int common_horizon(const std::vector<SurvivalCurve>& curves) {
    if (curves.empty()) fail(errc::invalid_input, "brier: no curves");
    const int h = curves.front().horizon();
    for (const auto& c : curves) {
        if (c.horizon() != h) fail(errc::invalid_input, "brier: curves on different grids");
    }
    return h;
}

}  // namespace

double brier_at(int t, const std::vector<SurvivalCurve>& curves,
                const std::vector<EventOutcome>& outcomes) {
    const int h = common_horizon(curves);
    if (curves.size() != outcomes.size()) {
        fail(errc::invalid_input, "brier: curves and outcomes must align");
    }
    if (t < 1 || t > h) fail(errc::invalid_input, "brier: t outside 1..H");

    const auto g = censoring_km(outcomes, h);
    double total = 0.0;
    long included = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const double s = curves[i].at(t);
        if (o.event_observed && o.event_time <= t) {
            const double w = g[static_cast<std::size_t>(o.event_time - 1)];  // G(T-)
            if (w <= 0.0) continue;  // excluded: censoring weight degenerate
            total += s * s / w;
            ++included;
        } else if (o.event_time > t) {
            const double w = g[static_cast<std::size_t>(t)];
            if (w <= 0.0) continue;
            total += (1.0 - s) * (1.0 - s) / w;
            ++included;
        } else {
            ++included;  // censored by t: contributes 0
        }
    }
    if (included == 0) fail(errc::invalid_input, "brier: every subject excluded by zero weights");
    return total / static_cast<double>(included);
}

double integrated_brier(const std::vector<SurvivalCurve>& curves,
                        const std::vector<EventOutcome>& outcomes) {
    const int h = common_horizon(curves);
    double sum = 0.0;
    for (int t = 1; t <= h; ++t) sum += brier_at(t, curves, outcomes);
    return sum / h;
}

namespace {

double quantile_value(std::vector<double> sorted, double q) {
    // Linear interpolation between order statistics (type-7 convention).
    const auto n = sorted.size();
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Univariate Cox on the high-vs-low indicator, built from per-turn rows.
double stratum_hazard_ratio(const std::vector<EventOutcome>& outcomes,
                            const std::vector<int>& low, const std::vector<int>& high) {
    std::vector<SurvivalSample> rows;
    auto add = [&](const std::vector<int>& members, double indicator) {
        for (int m : members) {
            const auto& o = outcomes[static_cast<std::size_t>(m)];
            for (int t = 1; t <= o.event_time; ++t) {
                SurvivalSample row;
                row.conversation_id = "conv" + std::to_string(m);
                row.interval_start = t - 1;
                row.interval_stop = t;
                row.covariates = {indicator};
                row.event_in_interval = o.event_observed && t == o.event_time;
                rows.push_back(std::move(row));
            }
        }
    };
    add(low, 0.0);
    add(high, 1.0);

    FeatureSchema schema;
    schema.kind = SchemaKind::summary;
    schema.continuous_names = {"high_risk"};
    schema.continuous_mean = {0.0};
    schema.continuous_sd = {1.0};
    int horizon = 0;
    for (const auto& r : rows) horizon = std::max(horizon, r.interval_stop);
    schema.horizon = horizon;
    const CoxFit fit = fit_cox(rows, schema, 0.0);
    return std::exp(fit.beta(0));
}

}  // namespace

RiskStratification stratify_by_risk(const std::vector<double>& stratifier,
                                    const std::vector<EventOutcome>& outcomes, int horizon,
                                    const std::vector<double>& quantiles) {
    if (stratifier.size() != outcomes.size() || stratifier.empty()) {
        fail(errc::invalid_input, "stratify_by_risk: stratifier and outcomes must align");
    }
    if (quantiles.empty()) fail(errc::invalid_input, "stratify_by_risk: no quantiles");
    for (double q : quantiles) {
        if (!(q > 0.0 && q < 1.0)) fail(errc::invalid_input, "stratify_by_risk: quantiles must lie in (0,1)");
    }
    const auto [lo, hi] = std::minmax_element(stratifier.begin(), stratifier.end());
    if (*hi - *lo < 1e-15) {
        fail(errc::invalid_input, "stratify_by_risk: stratifier is constant");
    }

    std::vector<double> sorted_q(quantiles);
    std::sort(sorted_q.begin(), sorted_q.end());
    std::vector<double> sorted_values(stratifier);
    std::sort(sorted_values.begin(), sorted_values.end());
    std::vector<double> cuts;
    cuts.reserve(sorted_q.size());
    for (double q : sorted_q) cuts.push_back(quantile_value(sorted_values, q));

    const std::size_t n_groups = cuts.size() + 1;
    static const char* kTertiles[] = {"low", "medium", "high"};
    RiskStratification result;
    result.groups.resize(n_groups);
    for (std::size_t gi = 0; gi < n_groups; ++gi) {
        result.groups[gi].label =
            n_groups == 3 ? kTertiles[gi] : "q" + std::to_string(gi + 1);
    }
    for (std::size_t i = 0; i < stratifier.size(); ++i) {
        std::size_t gi = 0;
        while (gi < cuts.size() && stratifier[i] > cuts[gi]) ++gi;
        result.groups[gi].members.push_back(static_cast<int>(i));
    }

    std::vector<EventOutcome> low_outcomes, high_outcomes;
    for (std::size_t gi = 0; gi < n_groups; ++gi) {
        auto& group = result.groups[gi];
        std::vector<EventOutcome> group_outcomes;
        group_outcomes.reserve(group.members.size());
        for (int m : group.members) group_outcomes.push_back(outcomes[static_cast<std::size_t>(m)]);
        if (!group_outcomes.empty()) {
            group.km = kaplan_meier(group_outcomes, horizon);
            group.median = median_survival_time(group.km);
        }
        if (gi == 0) low_outcomes = group_outcomes;
        if (gi + 1 == n_groups) high_outcomes = group_outcomes;
    }
    if (low_outcomes.empty() || high_outcomes.empty()) {
        fail(errc::invalid_input, "stratify_by_risk: empty extreme group");
    }
    result.high_vs_low = log_rank_test(high_outcomes, low_outcomes);
    result.hazard_ratio = stratum_hazard_ratio(
        outcomes, result.groups.front().members, result.groups.back().members);
    return result;
}

}  // namespace driftsurv
