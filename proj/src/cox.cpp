#include "driftsurv/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftsurv/error.hpp"
#include "driftsurv/mathutil.hpp"

namespace driftsurv {

namespace {

// Rows regrouped by interval stop time. With unit intervals each row belongs
// to exactly one risk set, so the partial likelihood decomposes over times.
struct CoxDesign {
    Eigen::MatrixXd x;             // rows x kept columns
    std::vector<bool> event;
    std::vector<int> cluster;      // conversation index per row
    int n_clusters = 0;
    int horizon = 0;
    int n_events = 0;
    std::vector<std::vector<int>> rows_at;  // index t = 1..horizon
    std::vector<int> kept;                  // kept column indices in schema order
    std::vector<bool> penalized;            // per kept column
    Eigen::VectorXd ridge_vec;              // ridge on penalized kept columns
};

int max_stop(const std::vector<SurvivalSample>& samples) {
    int h = 0;
    for (const auto& s : samples) h = std::max(h, s.interval_stop);
    return h;
}

CoxDesign build_design(const std::vector<SurvivalSample>& samples, int width,
                       const std::vector<bool>& penalized_full, double ridge,
                       bool drop_constants, std::vector<std::string>* dropped_names,
                       const std::vector<std::string>& names) {
    if (samples.empty()) fail(errc::invalid_input, "cox: no samples");
    const auto n = static_cast<int>(samples.size());

    for (const auto& s : samples) {
        if (static_cast<int>(s.covariates.size()) != width) {
            fail(errc::schema, "cox: covariate width mismatch for conversation '" +
                                   s.conversation_id + "'");
        }
        if (s.interval_stop != s.interval_start + 1 || s.interval_stop < 1) {
            fail(errc::invalid_input, "cox: rows must cover unit intervals (t-1, t]");
        }
    }

    CoxDesign d;
    d.horizon = max_stop(samples);

    // Constant columns carry no information for the partial likelihood and
    // break the Newton step; drop them up front.
    d.kept.reserve(static_cast<std::size_t>(width));
    for (int j = 0; j < width; ++j) {
        const double first = samples.front().covariates[static_cast<std::size_t>(j)];
        bool constant = true;
        for (const auto& s : samples) {
            if (std::fabs(s.covariates[static_cast<std::size_t>(j)] - first) > 1e-12) {
                constant = false;
                break;
            }
        }
        if (constant && drop_constants) {
            if (dropped_names) dropped_names->push_back(names[static_cast<std::size_t>(j)]);
        } else {
            d.kept.push_back(j);
        }
    }

    const auto p = static_cast<int>(d.kept.size());
    d.x.resize(n, p);
    d.event.resize(static_cast<std::size_t>(n));
    d.cluster.resize(static_cast<std::size_t>(n));
    d.rows_at.assign(static_cast<std::size_t>(d.horizon) + 1, {});
    d.penalized.resize(static_cast<std::size_t>(p));
    d.ridge_vec = Eigen::VectorXd::Zero(p);

    std::map<std::string, int> cluster_ids;
    for (int i = 0; i < n; ++i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        for (int j = 0; j < p; ++j) {
            d.x(i, j) = s.covariates[static_cast<std::size_t>(d.kept[static_cast<std::size_t>(j)])];
        }
        d.event[static_cast<std::size_t>(i)] = s.event_in_interval;
        d.n_events += s.event_in_interval ? 1 : 0;
        const auto [it, inserted] =
            cluster_ids.emplace(s.conversation_id, static_cast<int>(cluster_ids.size()));
        d.cluster[static_cast<std::size_t>(i)] = it->second;
        d.rows_at[static_cast<std::size_t>(s.interval_stop)].push_back(i);
    }
    d.n_clusters = static_cast<int>(cluster_ids.size());

    for (int j = 0; j < p; ++j) {
        d.penalized[static_cast<std::size_t>(j)] =
            penalized_full[static_cast<std::size_t>(d.kept[static_cast<std::size_t>(j)])];
        if (d.penalized[static_cast<std::size_t>(j)]) d.ridge_vec(j) = ridge;
    }
    return d;
}

struct Objective {
    double loglik = 0.0;          // penalized
    Eigen::VectorXd gradient;     // penalized
    Eigen::MatrixXd information;  // penalized (negative Hessian)
};

// One pass over the risk sets; gradient/information are optional.
Objective evaluate(const CoxDesign& d, const Eigen::VectorXd& beta, bool want_derivatives) {
    const auto p = static_cast<int>(d.x.cols());
    Objective out;
    out.loglik = 0.0;
    if (want_derivatives) {
        out.gradient = Eigen::VectorXd::Zero(p);
        out.information = Eigen::MatrixXd::Zero(p, p);
    }

    const Eigen::VectorXd eta = d.x * beta;
    Eigen::VectorXd xbar(p);
    Eigen::MatrixXd second(p, p);
    for (int t = 1; t <= d.horizon; ++t) {
        const auto& rows = d.rows_at[static_cast<std::size_t>(t)];
        if (rows.empty()) continue;
        int events = 0;
        for (int r : rows) events += d.event[static_cast<std::size_t>(r)] ? 1 : 0;
        if (events == 0) continue;

        double eta_max = -std::numeric_limits<double>::infinity();
        for (int r : rows) eta_max = std::max(eta_max, eta(r));
        double denom = 0.0;
        if (want_derivatives) {
            xbar.setZero();
            second.setZero();
        }
        for (int r : rows) {
            const double w = std::exp(eta(r) - eta_max);
            denom += w;
            if (want_derivatives) {
                xbar.noalias() += w * d.x.row(r).transpose();
                second.noalias() += w * d.x.row(r).transpose() * d.x.row(r);
            }
        }
        for (int r : rows) {
            if (d.event[static_cast<std::size_t>(r)]) {
                out.loglik += eta(r);
                if (want_derivatives) out.gradient += d.x.row(r).transpose();
            }
        }
        out.loglik -= events * (std::log(denom) + eta_max);
        if (want_derivatives) {
            xbar /= denom;
            second /= denom;
            out.gradient.noalias() -= events * xbar;
            out.information.noalias() += events * (second - xbar * xbar.transpose());
        }
    }

    // Ridge on the interaction block.
    out.loglik -= 0.5 * (d.ridge_vec.array() * beta.array().square()).sum();
    if (want_derivatives) {
        out.gradient -= d.ridge_vec.cwiseProduct(beta);
        out.information += d.ridge_vec.asDiagonal();
    }
    return out;
}

double penalized_loglik(const CoxDesign& d, const Eigen::VectorXd& beta) {
    return evaluate(d, beta, false).loglik;
}

// Per-conversation summed score residuals at beta (mean-centered form).
Eigen::MatrixXd cluster_scores(const CoxDesign& d, const Eigen::VectorXd& beta) {
    const auto p = static_cast<int>(d.x.cols());
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(d.n_clusters, p);
    const Eigen::VectorXd eta = d.x * beta;
    Eigen::VectorXd xbar(p);
    for (int t = 1; t <= d.horizon; ++t) {
        const auto& rows = d.rows_at[static_cast<std::size_t>(t)];
        if (rows.empty()) continue;
        int events = 0;
        for (int r : rows) events += d.event[static_cast<std::size_t>(r)] ? 1 : 0;
        if (events == 0) continue;

        double eta_max = -std::numeric_limits<double>::infinity();
        for (int r : rows) eta_max = std::max(eta_max, eta(r));
        double denom = 0.0;
        xbar.setZero();
        for (int r : rows) {
            const double w = std::exp(eta(r) - eta_max);
            denom += w;
            xbar.noalias() += w * d.x.row(r).transpose();
        }
        xbar /= denom;
        for (int r : rows) {
            const double w = std::exp(eta(r) - eta_max) / denom;
            const double mult = (d.event[static_cast<std::size_t>(r)] ? 1.0 : 0.0) - events * w;
            scores.row(d.cluster[static_cast<std::size_t>(r)]) +=
                mult * (d.x.row(r) - xbar.transpose());
        }
    }
    return scores;
}

Eigen::MatrixXd solve_information(const Eigen::MatrixXd& info) {
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
        fail(errc::singular, "singular Hessian in Cox fit; add ridge regularization");
    }
    return llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
}

constexpr double kDivergenceBound = 40.0;

}  // namespace

CoxFit fit_cox(const std::vector<SurvivalSample>& samples, const FeatureSchema& schema,
               double ridge, const CoxOptions& opts) {
    if (ridge < 0.0) fail(errc::invalid_input, "cox: ridge must be >= 0");
    const auto names = schema.column_names();
    CoxFit fit;
    fit.schema = schema;
    fit.names = names;
    fit.ridge = ridge;

    CoxDesign d = build_design(samples, schema.size(), schema.penalized_mask(), ridge, true,
                               &fit.convergence.dropped_columns, names);
    if (d.n_events == 0) fail(errc::no_events, "cox: no events in the data");

    const auto p = static_cast<int>(d.x.cols());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double objective = penalized_loglik(d, beta);

    Eigen::MatrixXd information(p, p);
    bool halted = false;
    int iter = 0;
    for (; iter < opts.max_iterations && !halted; ++iter) {
        Objective eval_point = evaluate(d, beta, true);
        information = eval_point.information;
        fit.convergence.gradient_max_norm = p > 0 ? eval_point.gradient.cwiseAbs().maxCoeff() : 0.0;
        if (fit.convergence.gradient_max_norm < opts.gradient_tol) {
            fit.convergence.converged = true;
            break;
        }

        const Eigen::LLT<Eigen::MatrixXd> llt(information);
        if (llt.info() != Eigen::Success) {
            fail(errc::singular, "singular Hessian in Cox fit; add ridge regularization");
        }
        const Eigen::VectorXd direction = llt.solve(eval_point.gradient);
        if (!direction.allFinite()) {
            fail(errc::singular, "singular Hessian in Cox fit; add ridge regularization");
        }

        // Step halving keeps the penalized objective non-decreasing.
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40; ++h) {
            const Eigen::VectorXd candidate = beta + step * direction;
            const double cand_obj = penalized_loglik(d, candidate);
            if (std::isfinite(cand_obj) && cand_obj >= objective) {
                beta = candidate;
                objective = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            fit.convergence.message = "step halving failed to improve the objective";
            halted = true;
            break;
        }

        int worst = 0;
        if (p > 0 && beta.cwiseAbs().maxCoeff(&worst) > kDivergenceBound) {
            fit.convergence.message =
                "monotone likelihood suspected: coefficient '" +
                names[static_cast<std::size_t>(d.kept[static_cast<std::size_t>(worst)])] +
                "' diverges; add ridge";
            halted = true;
            break;
        }
    }
    fit.convergence.iterations = iter;
    if (!fit.convergence.converged && fit.convergence.message.empty()) {
        fit.convergence.message = "maximum iterations reached";
    }

    // Final derivatives at the solution for the report and the sandwich.
    const Objective final_eval = evaluate(d, beta, true);
    information = final_eval.information;
    fit.convergence.gradient_max_norm =
        p > 0 ? final_eval.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (p > 0 && fit.convergence.gradient_max_norm < opts.gradient_tol) {
        fit.convergence.converged = true;
    }

    fit.beta = Eigen::VectorXd::Zero(schema.size());
    for (int j = 0; j < p; ++j) fit.beta(d.kept[static_cast<std::size_t>(j)]) = beta(j);

    fit.baseline = breslow_baseline(fit.beta, samples, std::max(schema.horizon, d.horizon));

    fit.robust_covariance = Eigen::MatrixXd::Zero(schema.size(), schema.size());
    if (d.n_clusters >= 2 && p > 0) {
        const Eigen::MatrixXd inv_info = solve_information(information);
        const Eigen::MatrixXd scores = cluster_scores(d, beta);
        const Eigen::MatrixXd meat = scores.transpose() * scores;
        const Eigen::MatrixXd sandwich = inv_info * meat * inv_info;
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                fit.robust_covariance(d.kept[static_cast<std::size_t>(a)],
                                      d.kept[static_cast<std::size_t>(b)]) = sandwich(a, b);
            }
        }
    }
    return fit;
}

double cox_partial_log_likelihood(const Eigen::VectorXd& beta,
                                  const std::vector<SurvivalSample>& samples) {
    const std::vector<bool> none(static_cast<std::size_t>(beta.size()), false);
    return cox_penalized_log_likelihood(beta, samples, none, 0.0);
}

double cox_penalized_log_likelihood(const Eigen::VectorXd& beta,
                                    const std::vector<SurvivalSample>& samples,
                                    const std::vector<bool>& penalized, double ridge) {
    std::vector<std::string> names(static_cast<std::size_t>(beta.size()));
    CoxDesign d = build_design(samples, static_cast<int>(beta.size()), penalized, ridge, false,
                               nullptr, names);
    return penalized_loglik(d, beta);
}

Eigen::VectorXd cox_penalized_gradient(const Eigen::VectorXd& beta,
                                       const std::vector<SurvivalSample>& samples,
                                       const std::vector<bool>& penalized, double ridge) {
    std::vector<std::string> names(static_cast<std::size_t>(beta.size()));
    CoxDesign d = build_design(samples, static_cast<int>(beta.size()), penalized, ridge, false,
                               nullptr, names);
    return evaluate(d, beta, true).gradient;
}

CumulativeHazardCurve breslow_baseline(const Eigen::VectorXd& beta,
                                       const std::vector<SurvivalSample>& samples, int horizon) {
    CumulativeHazardCurve curve;
    curve.chf.assign(static_cast<std::size_t>(horizon) + 1, 0.0);

    std::vector<double> denom(static_cast<std::size_t>(horizon) + 1, 0.0);
    std::vector<int> events(static_cast<std::size_t>(horizon) + 1, 0);
    for (const auto& s : samples) {
        if (static_cast<int>(s.covariates.size()) != beta.size()) {
            fail(errc::schema, "breslow_baseline: covariate width mismatch");
        }
        if (s.interval_stop < 1 || s.interval_stop > horizon) {
            fail(errc::invalid_input, "breslow_baseline: interval stop outside grid");
        }
        double eta = 0.0;
        for (int j = 0; j < beta.size(); ++j) eta += beta(j) * s.covariates[static_cast<std::size_t>(j)];
        denom[static_cast<std::size_t>(s.interval_stop)] += std::exp(eta);
        events[static_cast<std::size_t>(s.interval_stop)] += s.event_in_interval ? 1 : 0;
    }
    double cum = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        if (events[static_cast<std::size_t>(t)] > 0 && denom[static_cast<std::size_t>(t)] > 0.0) {
            cum += events[static_cast<std::size_t>(t)] / denom[static_cast<std::size_t>(t)];
        }
        curve.chf[static_cast<std::size_t>(t)] = cum;
    }
    curve.validate();
    return curve;
}

double CoxFit::coefficient(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail(errc::invalid_input, "unknown covariate '" + name + "'");
    return beta(static_cast<Eigen::Index>(it - names.begin()));
}

double CoxFit::linear_predictor(const std::vector<double>& covariates) const {
    if (static_cast<int>(covariates.size()) != beta.size()) {
        fail(errc::schema, "linear_predictor: covariate width mismatch");
    }
    double eta = 0.0;
    for (int j = 0; j < beta.size(); ++j) eta += beta(j) * covariates[static_cast<std::size_t>(j)];
    return eta;
}

std::map<std::string, std::vector<std::pair<std::string, double>>>
CoxFit::interaction_coefficients() const {
    std::map<std::string, std::vector<std::pair<std::string, double>>> grouped;
    if (schema.interactions == InteractionScheme::none) return grouped;
    int col = schema.n_continuous() + schema.n_onehot();
    const int first = schema.interactions == InteractionScheme::all_models ? 0 : 1;
    for (int ch : schema.interaction_channels()) {
        const std::string& channel = schema.continuous_names[static_cast<std::size_t>(ch)];
        for (int c = first; c < static_cast<int>(schema.model.levels.size()); ++c, ++col) {
            grouped[schema.model.levels[static_cast<std::size_t>(c)]].emplace_back(channel,
                                                                                   beta(col));
        }
    }
    return grouped;
}

SurvivalCurve cox_survival_curve(const CoxFit& fit,
                                 const std::vector<std::vector<double>>& turn_covariates) {
    if (turn_covariates.empty()) {
        fail(errc::invalid_input, "cox_survival_curve: at least one turn of covariates required");
    }
    const int h = fit.baseline.horizon();
    SurvivalCurve curve;
    curve.survival.assign(static_cast<std::size_t>(h) + 1, 1.0);
    double s = 1.0;
    for (int t = 1; t <= h; ++t) {
        const auto idx = static_cast<std::size_t>(
            std::min(t, static_cast<int>(turn_covariates.size())) - 1);
        const double eta = fit.linear_predictor(turn_covariates[idx]);
        const double increment = fit.baseline.at(t) - fit.baseline.at(t - 1);
        s *= std::exp(-increment * std::exp(eta));
        curve.survival[static_cast<std::size_t>(t)] = s;
    }
    curve.validate();
    return curve;
}

double hazard_ratio(const CoxFit& fit, const std::string& covariate) {
    return std::exp(fit.coefficient(covariate));
}

std::vector<double> cluster_robust_se(const CoxFit& fit,
                                      const std::vector<SurvivalSample>& samples) {
    CoxDesign d = build_design(samples, fit.schema.size(), fit.schema.penalized_mask(), fit.ridge,
                               true, nullptr, fit.names);
    if (d.n_clusters < 2) {
        fail(errc::invalid_input, "cluster_robust_se: need at least two conversations");
    }
    Eigen::VectorXd beta(d.kept.size());
    for (std::size_t j = 0; j < d.kept.size(); ++j) beta(static_cast<Eigen::Index>(j)) = fit.beta(d.kept[j]);

    const Eigen::MatrixXd info = evaluate(d, beta, true).information;
    const Eigen::MatrixXd inv_info = solve_information(info);
    const Eigen::MatrixXd scores = cluster_scores(d, beta);
    const Eigen::MatrixXd sandwich = inv_info * scores.transpose() * scores * inv_info;

    std::vector<double> se(static_cast<std::size_t>(fit.schema.size()), 0.0);
    for (std::size_t j = 0; j < d.kept.size(); ++j) {
        se[static_cast<std::size_t>(d.kept[j])] =
            std::sqrt(std::max(0.0, sandwich(static_cast<Eigen::Index>(j),
                                             static_cast<Eigen::Index>(j))));
    }
    return se;
}

SchoenfeldResult schoenfeld_test(const CoxFit& fit, const std::vector<SurvivalSample>& samples) {
    CoxDesign d = build_design(samples, fit.schema.size(), fit.schema.penalized_mask(), fit.ridge,
                               true, nullptr, fit.names);
    const auto p = static_cast<int>(d.x.cols());
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta(j) = fit.beta(d.kept[static_cast<std::size_t>(j)]);

    // Residuals r_k = x_k - xbar(t_k) for every event, with the shared
    // Breslow risk-set mean at tied times.
    std::vector<Eigen::VectorXd> residuals;
    std::vector<double> times;
    const Eigen::VectorXd eta = d.x * beta;
    int distinct_event_times = 0;
    for (int t = 1; t <= d.horizon; ++t) {
        const auto& rows = d.rows_at[static_cast<std::size_t>(t)];
        if (rows.empty()) continue;
        int events = 0;
        for (int r : rows) events += d.event[static_cast<std::size_t>(r)] ? 1 : 0;
        if (events == 0) continue;
        ++distinct_event_times;

        double eta_max = -std::numeric_limits<double>::infinity();
        for (int r : rows) eta_max = std::max(eta_max, eta(r));
        double denom = 0.0;
        Eigen::VectorXd xbar = Eigen::VectorXd::Zero(p);
        for (int r : rows) {
            const double w = std::exp(eta(r) - eta_max);
            denom += w;
            xbar.noalias() += w * d.x.row(r).transpose();
        }
        xbar /= denom;
        for (int r : rows) {
            if (!d.event[static_cast<std::size_t>(r)]) continue;
            residuals.push_back(d.x.row(r).transpose() - xbar);
            times.push_back(static_cast<double>(t));
        }
    }
    if (distinct_event_times < 3) {
        fail(errc::invalid_input, "schoenfeld_test: needs at least 3 distinct event times");
    }

    const auto n_events = static_cast<int>(residuals.size());
    const double t_mean =
        std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(n_events);
    double t_ss = 0.0;
    for (double t : times) t_ss += (t - t_mean) * (t - t_mean);

    const Eigen::MatrixXd info = evaluate(d, beta, true).information;
    const Eigen::MatrixXd v = solve_information(info);

    Eigen::VectorXd u = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < n_events; ++k) {
        u += (times[static_cast<std::size_t>(k)] - t_mean) * residuals[static_cast<std::size_t>(k)];
    }
    const Eigen::VectorXd uv = v * u;

    // Correlation between the turn index and the scaled residual components.
    Eigen::VectorXd scaled_mean = Eigen::VectorXd::Zero(p);
    std::vector<Eigen::VectorXd> scaled;
    scaled.reserve(residuals.size());
    for (const auto& r : residuals) {
        scaled.push_back(v * r * static_cast<double>(n_events));
        scaled_mean += scaled.back();
    }
    scaled_mean /= static_cast<double>(n_events);

    SchoenfeldResult result;
    result.n_event_times = distinct_event_times;
    result.covariates.assign(fit.names.size(), {});
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        result.covariates[j].name = fit.names[j];
    }
    for (int j = 0; j < p; ++j) {
        auto& entry = result.covariates[static_cast<std::size_t>(d.kept[static_cast<std::size_t>(j)])];
        const double vjj = v(j, j);
        if (vjj <= 0.0 || t_ss <= 0.0) continue;
        const double chisq = static_cast<double>(n_events) * uv(j) * uv(j) / (vjj * t_ss);
        entry.p_value = chi_square_sf(chisq, 1.0);

        double cov = 0.0, var_s = 0.0;
        for (int k = 0; k < n_events; ++k) {
            const double dt = times[static_cast<std::size_t>(k)] - t_mean;
            const double ds = scaled[static_cast<std::size_t>(k)](j) - scaled_mean(j);
            cov += dt * ds;
            var_s += ds * ds;
        }
        if (var_s > 0.0 && t_ss > 0.0) entry.correlation = cov / std::sqrt(var_s * t_ss);
    }

    // Group aggregation: Bonferroni-adjusted minimum p per covariate family.
    const auto& schema = fit.schema;
    std::vector<std::pair<std::string, std::pair<int, int>>> spans;  // name -> [begin, end)
    int pos = 0;
    for (int c = 0; c < schema.n_continuous(); ++c, ++pos) {
        spans.push_back({schema.continuous_names[static_cast<std::size_t>(c)], {pos, pos + 1}});
    }
    for (const OneHotGroup* g : {&schema.subject, &schema.difficulty, &schema.model}) {
        if (g->columns() > 0) {
            spans.push_back({g->field, {pos, pos + g->columns()}});
        }
        pos += g->columns();
    }
    if (schema.n_interaction() > 0) {
        spans.push_back({"model_interactions", {pos, pos + schema.n_interaction()}});
    }
    for (const auto& [name, span] : spans) {
        SchoenfeldGroup group;
        group.name = name;
        const int members = span.second - span.first;
        double min_adjusted = 1.0;
        for (int j = span.first; j < span.second; ++j) {
            min_adjusted = std::min(
                min_adjusted, std::min(1.0, result.covariates[static_cast<std::size_t>(j)].p_value *
                                                members));
        }
        group.p_value = min_adjusted;
        result.groups.push_back(std::move(group));
    }
    return result;
}

}  // namespace driftsurv
