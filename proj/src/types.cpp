#include "driftsurv/types.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "driftsurv/error.hpp"

namespace driftsurv {

namespace {
constexpr double kCurveTol = 1e-9;
}

double SurvivalCurve::at(int t) const {
    if (t < 0 || t > horizon()) {
        fail(errc::invalid_input, "survival curve evaluated outside grid: t=" + std::to_string(t));
    }
    return survival[static_cast<std::size_t>(t)];
}

void SurvivalCurve::validate() const {
    if (survival.empty() || std::fabs(survival.front() - 1.0) > kCurveTol) {
        fail(errc::numeric, "survival curve must start at S(0) = 1");
    }
    for (std::size_t i = 0; i < survival.size(); ++i) {
        const double s = survival[i];
        if (!std::isfinite(s) || s < -kCurveTol || s > 1.0 + kCurveTol) {
            fail(errc::numeric, "survival value outside [0,1] at t=" + std::to_string(i));
        }
        if (i > 0 && s > survival[i - 1] + kCurveTol) {
            fail(errc::numeric, "survival curve increases at t=" + std::to_string(i));
        }
    }
}

double CumulativeHazardCurve::at(int t) const {
    if (t < 0 || t > horizon()) {
        fail(errc::invalid_input, "hazard curve evaluated outside grid: t=" + std::to_string(t));
    }
    return chf[static_cast<std::size_t>(t)];
}

SurvivalCurve CumulativeHazardCurve::to_survival() const {
    SurvivalCurve out;
    out.survival.reserve(chf.size());
    for (double h : chf) out.survival.push_back(std::exp(-h));
    return out;
}

void CumulativeHazardCurve::validate() const {
    if (chf.empty() || std::fabs(chf.front()) > kCurveTol) {
        fail(errc::numeric, "cumulative hazard must start at 0");
    }
    for (std::size_t i = 1; i < chf.size(); ++i) {
        if (!std::isfinite(chf[i]) || chf[i] < chf[i - 1] - kCurveTol) {
            fail(errc::numeric, "cumulative hazard decreases at t=" + std::to_string(i));
        }
    }
}

std::vector<int> all_indices(const Dataset& data) {
    std::vector<int> idx(data.conversations.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace driftsurv
