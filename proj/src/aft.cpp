#include "driftsurv/aft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftsurv/dataset.hpp"
#include "driftsurv/error.hpp"
#include "driftsurv/mathutil.hpp"

namespace driftsurv {

const char* aft_family_name(AFTFamily family) {
    switch (family) {
        case AFTFamily::weibull: return "weibull";
        case AFTFamily::lognormal: return "lognormal";
        case AFTFamily::loglogistic: return "loglogistic";
    }
    return "weibull";
}

AFTFamily aft_family_from_name(const std::string& name) {
    if (name == "weibull") return AFTFamily::weibull;
    if (name == "lognormal" || name == "log-normal") return AFTFamily::lognormal;
    if (name == "loglogistic" || name == "log-logistic") return AFTFamily::loglogistic;
    fail(errc::parse, "unknown AFT family '" + name + "'");
}

namespace {

void check_positive_time(double t) {
    if (!(t > 0.0)) fail(errc::invalid_input, "AFT functions require t > 0");
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0)) fail(errc::invalid_input, "AFT scale sigma must be positive");
}

double standardized_log_time(double mu, double sigma, double t) {
    return (std::log(t) - mu) / sigma;
}

// d log f / dz and d log S / dz per family; everything else follows by the
// chain rule through z = (log t - mu) / sigma.
double dlogf_dz(AFTFamily family, double z) {
    switch (family) {
        case AFTFamily::weibull: return 1.0 - std::exp(z);
        case AFTFamily::lognormal: return -z;
        case AFTFamily::loglogistic: return 1.0 - 2.0 * sigmoid(z);
    }
    return 0.0;
}

double dlogS_dz(AFTFamily family, double z) {
    switch (family) {
        case AFTFamily::weibull: return -std::exp(z);
        case AFTFamily::lognormal: return -std::exp(log_norm_pdf(z) - log_norm_sf(z));
        case AFTFamily::loglogistic: return -sigmoid(z);
    }
    return 0.0;
}

double log_density(AFTFamily family, double z, double sigma, double t) {
    const double base = -std::log(sigma * t);
    switch (family) {
        case AFTFamily::weibull: return base + z - std::exp(z);
        case AFTFamily::lognormal: return base + log_norm_pdf(z);
        case AFTFamily::loglogistic: return base + z - 2.0 * log1pexp(z);
    }
    return base;
}

double log_survival(AFTFamily family, double z) {
    switch (family) {
        case AFTFamily::weibull: return -std::exp(z);
        case AFTFamily::lognormal: return log_norm_sf(z);
        case AFTFamily::loglogistic: return -log1pexp(z);
    }
    return 0.0;
}

}  // namespace

double aft_survival(AFTFamily family, double mu, double sigma, double t) {
    check_positive_time(t);
    check_sigma(sigma);
    return std::exp(log_survival(family, standardized_log_time(mu, sigma, t)));
}

double aft_hazard(AFTFamily family, double mu, double sigma, double t) {
    check_positive_time(t);
    check_sigma(sigma);
    const double z = standardized_log_time(mu, sigma, t);
    switch (family) {
        case AFTFamily::weibull:
            // (k/lambda)(t/lambda)^{k-1} in (z, sigma) form.
            return std::exp(z) / (sigma * t);
        case AFTFamily::lognormal: {
            const double log_s = log_norm_sf(z);
            if (!std::isfinite(log_s) || std::exp(log_s) <= 0.0) {
                fail(errc::numeric,
                     "log-normal survival underflows at t=" + std::to_string(t));
            }
            return std::exp(log_norm_pdf(z) - log_s) / (sigma * t);
        }
        case AFTFamily::loglogistic:
            return std::exp(z) * sigmoid(-z) / (sigma * t);
    }
    return 0.0;
}

double aft_median_time(AFTFamily family, double mu, double sigma) {
    check_sigma(sigma);
    switch (family) {
        case AFTFamily::weibull: return std::exp(mu) * std::pow(0.6931471805599453, sigma);
        case AFTFamily::lognormal: return std::exp(mu);
        case AFTFamily::loglogistic: return std::exp(mu);
    }
    return std::exp(mu);
}

double censored_log_likelihood(AFTFamily family, const Eigen::VectorXd& theta, double log_sigma,
                               const AFTDesign& design, double ridge) {
    const double sigma = std::exp(log_sigma);
    check_sigma(sigma);
    const Eigen::VectorXd mu = design.z * theta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < design.time.size(); ++i) {
        const double t = design.time(i);
        check_positive_time(t);
        const double z = (std::log(t) - mu(i)) / sigma;
        ll += design.event[static_cast<std::size_t>(i)] ? log_density(family, z, sigma, t)
                                                        : log_survival(family, z);
    }
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        if (design.penalized[static_cast<std::size_t>(j)]) ll -= 0.5 * ridge * theta(j) * theta(j);
    }
    return ll;
}

Eigen::VectorXd censored_ll_gradient(AFTFamily family, const Eigen::VectorXd& theta,
                                     double log_sigma, const AFTDesign& design, double ridge) {
    const double sigma = std::exp(log_sigma);
    check_sigma(sigma);
    const Eigen::VectorXd mu = design.z * theta;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size() + 1);
    for (Eigen::Index i = 0; i < design.time.size(); ++i) {
        const double t = design.time(i);
        const double z = (std::log(t) - mu(i)) / sigma;
        const bool event = design.event[static_cast<std::size_t>(i)];
        const double dz = event ? dlogf_dz(family, z) : dlogS_dz(family, z);
        grad.head(theta.size()).noalias() += dz * (-1.0 / sigma) * design.z.row(i).transpose();
        grad(theta.size()) += (event ? -1.0 : 0.0) + dz * (-z);
    }
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        if (design.penalized[static_cast<std::size_t>(j)]) grad(j) -= ridge * theta(j);
    }
    return grad;
}

double AFTFit::sigma() const { return std::exp(log_sigma); }

double AFTFit::coefficient(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail(errc::invalid_input, "unknown covariate '" + name + "'");
    return theta(static_cast<Eigen::Index>(it - names.begin()));
}

double AFTFit::mu(const std::vector<double>& covariates) const {
    if (static_cast<Eigen::Index>(covariates.size()) + 1 != theta.size()) {
        fail(errc::schema, "AFT mu: covariate width mismatch");
    }
    double value = theta(0);
    for (std::size_t j = 0; j < covariates.size(); ++j) {
        value += theta(static_cast<Eigen::Index>(j) + 1) * covariates[j];
    }
    return value;
}

namespace {

struct PreparedDesign {
    AFTDesign reduced;              // constant non-intercept columns removed
    std::vector<int> kept;          // indices into the full design (incl. intercept)
    std::vector<std::string> dropped;
};

PreparedDesign drop_constant_columns(const AFTDesign& design,
                                     const std::vector<std::string>& names) {
    PreparedDesign out;
    const Eigen::Index p = design.z.cols();
    for (Eigen::Index j = 0; j < p; ++j) {
        bool constant = true;
        if (j > 0) {  // never drop the intercept
            const double first = design.z(0, j);
            for (Eigen::Index i = 1; i < design.z.rows() && constant; ++i) {
                if (std::fabs(design.z(i, j) - first) > 1e-12) constant = false;
            }
        } else {
            constant = false;
        }
        if (constant) {
            out.dropped.push_back(names[static_cast<std::size_t>(j)]);
        } else {
            out.kept.push_back(static_cast<int>(j));
        }
    }
    out.reduced.z.resize(design.z.rows(), static_cast<Eigen::Index>(out.kept.size()));
    for (std::size_t j = 0; j < out.kept.size(); ++j) {
        out.reduced.z.col(static_cast<Eigen::Index>(j)) = design.z.col(out.kept[j]);
    }
    out.reduced.time = design.time;
    out.reduced.event = design.event;
    for (int j : out.kept) {
        out.reduced.penalized.push_back(design.penalized[static_cast<std::size_t>(j)]);
    }
    return out;
}

// Dense BFGS on -(penalized log-likelihood) over (theta, log_sigma).
struct BFGSResult {
    Eigen::VectorXd x;
    ConvergenceReport report;
    double objective = 0.0;
};

template <typename F, typename G>
BFGSResult bfgs_minimize(Eigen::VectorXd x, F value, G gradient, int max_iterations,
                         double gradient_tol) {
    const Eigen::Index m = x.size();
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(m, m);
    double f = value(x);
    Eigen::VectorXd g = gradient(x);

    BFGSResult result;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        result.report.gradient_max_norm = g.cwiseAbs().maxCoeff();
        if (result.report.gradient_max_norm < gradient_tol) {
            result.report.converged = true;
            break;
        }
        Eigen::VectorXd direction = -(h_inv * g);
        double slope = g.dot(direction);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            direction = -g;
            slope = g.dot(direction);
        }

        // Backtracking Armijo line search; non-finite trial values are
        // treated as +inf and rejected.
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = f;
        for (int h = 0; h < 60; ++h) {
            x_new = x + step * direction;
            f_new = value(x_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.report.message = "line search failed";
            break;
        }

        const Eigen::VectorXd g_new = gradient(x_new);
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12) {
            const Eigen::VectorXd hy = h_inv * y;
            const double yhy = y.dot(hy);
            h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                     (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    result.report.iterations = iter;
    result.report.gradient_max_norm = g.cwiseAbs().maxCoeff();
    if (result.report.gradient_max_norm < gradient_tol) result.report.converged = true;
    if (!result.report.converged && result.report.message.empty()) {
        result.report.message = "maximum iterations reached";
    }
    result.x = x;
    result.objective = f;
    return result;
}

}  // namespace

AFTFit fit_aft_design(const AFTDesign& design, const FeatureSchema& schema, AFTFamily family,
                      double ridge, const AFTOptions& opts) {
    if (ridge < 0.0) fail(errc::invalid_input, "aft: ridge must be >= 0");
    if (design.z.rows() == 0) fail(errc::invalid_input, "aft: empty design");
    if (design.z.rows() != design.time.size() ||
        design.event.size() != static_cast<std::size_t>(design.z.rows()) ||
        design.penalized.size() != static_cast<std::size_t>(design.z.cols())) {
        fail(errc::invalid_input, "aft: inconsistent design dimensions");
    }

    int n_events = 0;
    double log_time_sum = 0.0;
    for (Eigen::Index i = 0; i < design.time.size(); ++i) {
        if (!(design.time(i) > 0.0)) fail(errc::invalid_input, "aft: event times must be positive");
        n_events += design.event[static_cast<std::size_t>(i)] ? 1 : 0;
        log_time_sum += std::log(design.time(i));
    }
    if (n_events == 0) {
        fail(errc::no_events, "aft: all conversations censored, scale is unidentified");
    }

    AFTFit fit;
    fit.schema = schema;
    fit.family = family;
    fit.ridge = ridge;
    fit.names.push_back("intercept");
    for (const auto& name : schema.column_names()) fit.names.push_back(name);
    if (static_cast<std::size_t>(design.z.cols()) != fit.names.size()) {
        fail(errc::schema, "aft: design width does not match schema");
    }

    const PreparedDesign prep = drop_constant_columns(design, fit.names);
    fit.convergence.dropped_columns = prep.dropped;
    const Eigen::Index p = prep.reduced.z.cols();

    // Parameters: [theta_reduced, log_sigma]. Intercept starts at the log of
    // the mean observed time, everything else at zero.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p + 1);
    x0(0) = std::log(design.time.mean());

    const auto value = [&](const Eigen::VectorXd& x) {
        if (std::fabs(x(p)) > 12.0) return std::numeric_limits<double>::infinity();
        return -censored_log_likelihood(family, x.head(p), x(p), prep.reduced, ridge);
    };
    const auto grad = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -censored_ll_gradient(family, x.head(p), x(p), prep.reduced, ridge);
    };

    BFGSResult solved = bfgs_minimize(x0, value, grad, opts.max_iterations, opts.gradient_tol);
    solved.report.dropped_columns = prep.dropped;
    fit.convergence = solved.report;

    fit.theta = Eigen::VectorXd::Zero(design.z.cols());
    for (std::size_t j = 0; j < prep.kept.size(); ++j) {
        fit.theta(prep.kept[j]) = solved.x(static_cast<Eigen::Index>(j));
    }
    fit.log_sigma = solved.x(p);
    fit.log_likelihood =
        censored_log_likelihood(family, solved.x.head(p), fit.log_sigma, prep.reduced, 0.0);
    return fit;
}

AFTFit fit_aft(const Dataset& data, const std::vector<int>& pool, const FeatureSchema& schema,
               AFTFamily family, double ridge, const AFTOptions& opts) {
    if (schema.kind != SchemaKind::summary) {
        fail(errc::schema, "fit_aft expects a summary schema");
    }
    if (pool.empty()) fail(errc::invalid_input, "fit_aft: empty pool");

    const auto n = static_cast<Eigen::Index>(pool.size());
    AFTDesign design;
    design.z.resize(n, schema.size() + 1);
    design.time.resize(n);
    design.event.resize(static_cast<std::size_t>(n));
    design.penalized.push_back(false);  // intercept
    for (bool p : schema.penalized_mask()) design.penalized.push_back(p);

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& conv = data.conversations[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])];
        const EventOutcome outcome = derive_event_outcome(conv);
        const auto row = schema.covariates_for_summary(conv, conv.observed_turns());
        design.z(i, 0) = 1.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            design.z(i, static_cast<Eigen::Index>(j) + 1) = row[j];
        }
        design.time(i) = static_cast<double>(outcome.event_time);
        design.event[static_cast<std::size_t>(i)] = outcome.event_observed;
    }
    return fit_aft_design(design, schema, family, ridge, opts);
}

SurvivalCurve aft_survival_curve(const AFTFit& fit, const std::vector<double>& covariates) {
    const double mu = fit.mu(covariates);
    const double sigma = fit.sigma();
    const int h = fit.schema.horizon;
    SurvivalCurve curve;
    curve.survival.assign(static_cast<std::size_t>(h) + 1, 1.0);
    for (int t = 1; t <= h; ++t) {
        curve.survival[static_cast<std::size_t>(t)] = aft_survival(fit.family, mu, sigma, t);
    }
    curve.validate();
    return curve;
}

double aft_median(const AFTFit& fit, const std::vector<double>& covariates) {
    return aft_median_time(fit.family, fit.mu(covariates), fit.sigma());
}

double acceleration_factor(const AFTFit& fit, const std::string& covariate) {
    return std::exp(fit.coefficient(covariate));
}

}  // namespace driftsurv
