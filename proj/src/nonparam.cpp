#include "driftsurv/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "driftsurv/error.hpp"
#include "driftsurv/mathutil.hpp"

namespace driftsurv {

namespace {

struct TimeCounts {
    int events = 0;
    int censored = 0;
};

// Counts per time point plus the running risk-set size n_t = #{T_i >= t}.
std::map<int, TimeCounts> tally(const std::vector<EventOutcome>& outcomes) {
    std::map<int, TimeCounts> counts;
    for (const auto& o : outcomes) {
        if (o.event_time < 1) fail(errc::invalid_input, "event time must be >= 1");
        auto& c = counts[o.event_time];
        if (o.event_observed) {
            ++c.events;
        } else {
            ++c.censored;
        }
    }
    return counts;
}

}  // namespace

SurvivalCurve kaplan_meier(const std::vector<EventOutcome>& outcomes, int horizon) {
    if (outcomes.empty()) fail(errc::invalid_input, "kaplan_meier: empty input");
    const auto counts = tally(outcomes);

    SurvivalCurve curve;
    curve.survival.assign(static_cast<std::size_t>(horizon) + 1, 1.0);
    int at_risk = static_cast<int>(outcomes.size());
    double s = 1.0;
    for (int t = 1; t <= horizon; ++t) {
        const auto it = counts.find(t);
        if (it != counts.end()) {
            if (at_risk > 0 && it->second.events > 0) {
                s *= 1.0 - static_cast<double>(it->second.events) / at_risk;
            }
            at_risk -= it->second.events + it->second.censored;
        }
        curve.survival[static_cast<std::size_t>(t)] = s;
    }
    curve.validate();
    return curve;
}

CumulativeHazardCurve nelson_aalen(const std::vector<EventOutcome>& outcomes, int horizon) {
    if (outcomes.empty()) fail(errc::invalid_input, "nelson_aalen: empty input");
    const auto counts = tally(outcomes);

    CumulativeHazardCurve curve;
    curve.chf.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
    int at_risk = static_cast<int>(outcomes.size());
    double h = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        const auto it = counts.find(t);
        if (it != counts.end()) {
            if (at_risk > 0 && it->second.events > 0) {
                h += static_cast<double>(it->second.events) / at_risk;
            }
            at_risk -= it->second.events + it->second.censored;
        }
        curve.chf[static_cast<std::size_t>(t)] = h;
    }
    curve.validate();
    return curve;
}

LogRankResult log_rank_test(const std::vector<EventOutcome>& group_a,
                            const std::vector<EventOutcome>& group_b) {
    if (group_a.empty() || group_b.empty()) {
        fail(errc::invalid_input, "log_rank_test: both groups must be non-empty");
    }
    const auto counts_a = tally(group_a);
    const auto counts_b = tally(group_b);

    std::map<int, std::pair<TimeCounts, TimeCounts>> merged;
    for (const auto& [t, c] : counts_a) merged[t].first = c;
    for (const auto& [t, c] : counts_b) merged[t].second = c;

    int risk_a = static_cast<int>(group_a.size());
    int risk_b = static_cast<int>(group_b.size());
    double observed_minus_expected = 0.0;
    double variance = 0.0;
    for (const auto& [t, cab] : merged) {
        const auto& [ca, cb] = cab;
        const int n = risk_a + risk_b;
        const int d = ca.events + cb.events;
        if (n > 0 && d > 0) {
            const double share_a = static_cast<double>(risk_a) / n;
            observed_minus_expected += ca.events - d * share_a;
            if (n > 1) {
                variance += d * share_a * (1.0 - share_a) *
                            (static_cast<double>(n - d) / (n - 1));
            }
        }
        risk_a -= ca.events + ca.censored;
        risk_b -= cb.events + cb.censored;
    }

    LogRankResult result;
    if (variance <= 0.0) {
        return result;  // no usable event times: statistic 0, p = 1
    }
    result.statistic = observed_minus_expected * observed_minus_expected / variance;
    result.p_value = chi_square_sf(result.statistic, 1.0);
    return result;
}

std::string MedianSurvival::str() const {
    char buf[32];
    if (beyond_horizon) {
        std::snprintf(buf, sizeof(buf), "%g+", value);
    } else {
        std::snprintf(buf, sizeof(buf), "%g", value);
    }
    return buf;
}

MedianSurvival median_survival_time(const SurvivalCurve& curve) {
    curve.validate();
    const int h = curve.horizon();
    for (int t = 1; t <= h; ++t) {
        const double s = curve.at(t);
        if (s <= 0.5) {
            const double prev = curve.at(t - 1);
            // prev > 0.5 >= s here; interpolate the 0.5 crossing.
            const double frac = (prev - 0.5) / (prev - s);
            return {static_cast<double>(t - 1) + frac, false};
        }
    }
    return {static_cast<double>(h), true};
}

namespace {

std::string grid_csv(const std::vector<double>& values) {
    std::ostringstream out;
    out << "t,value\n";
    char buf[40];
    for (std::size_t t = 0; t < values.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", t, values[t]);
        out << buf;
    }
    return out.str();
}

}  // namespace

std::string curve_to_csv(const SurvivalCurve& curve) { return grid_csv(curve.survival); }

std::string curve_to_csv(const CumulativeHazardCurve& curve) { return grid_csv(curve.chf); }

}  // namespace driftsurv
