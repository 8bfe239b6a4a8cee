#include "driftsurv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "driftsurv/error.hpp"
#include "driftsurv/rng.hpp"

namespace driftsurv {

const char* model_family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::cox: return "cox";
        case ModelFamily::aft_weibull: return "weibull";
        case ModelFamily::aft_lognormal: return "lognormal";
        case ModelFamily::aft_loglogistic: return "loglogistic";
        case ModelFamily::rsf: return "rsf";
    }
    return "cox";
}

ModelFamily model_family_from_name(const std::string& name) {
    if (name == "cox") return ModelFamily::cox;
    if (name == "weibull") return ModelFamily::aft_weibull;
    if (name == "lognormal" || name == "log-normal") return ModelFamily::aft_lognormal;
    if (name == "loglogistic" || name == "log-logistic") return ModelFamily::aft_loglogistic;
    if (name == "rsf") return ModelFamily::rsf;
    fail(errc::parse, "unknown model family '" + name + "'");
}

std::string ModelConfig::describe() const {
    std::string out = model_family_name(family);
    out += interactions ? "+int" : "";
    out += " ridge=";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", ridge);
    out += buf;
    if (family == ModelFamily::rsf) {
        std::snprintf(buf, sizeof(buf), " trees=%d depth=%d mtry=%d", rsf.n_trees, rsf.max_depth,
                      rsf.mtry);
        out += buf;
    }
    return out;
}

const FeatureSchema& FittedModel::schema() const {
    return std::visit([](const auto& fit) -> const FeatureSchema& { return fit.schema; }, impl);
}

SurvivalCurve FittedModel::survival_curve(const ConversationRecord& conv, int upto_t) const {
    if (const auto* cox = std::get_if<CoxFit>(&impl)) {
        std::vector<std::vector<double>> history;
        history.reserve(static_cast<std::size_t>(upto_t));
        for (int t = 1; t <= upto_t; ++t) {
            history.push_back(cox->schema.covariates_for_turn(conv, t));
        }
        return cox_survival_curve(*cox, history);
    }
    if (const auto* aft = std::get_if<AFTFit>(&impl)) {
        return aft_survival_curve(*aft, aft->schema.covariates_for_summary(conv, upto_t));
    }
    const auto& forest = std::get<ForestFit>(impl);
    return rsf_predict_chf(forest, forest.schema.covariates_for_summary(conv, upto_t))
        .to_survival();
}

SurvivalCurve FittedModel::survival_curve(const ConversationRecord& conv) const {
    return survival_curve(conv, conv.observed_turns());
}

double FittedModel::risk_score(const ConversationRecord& conv) const {
    if (const auto* cox = std::get_if<CoxFit>(&impl)) {
        // Final-turn linear predictor.
        return cox->linear_predictor(
            cox->schema.covariates_for_turn(conv, conv.observed_turns()));
    }
    if (const auto* aft = std::get_if<AFTFit>(&impl)) {
        return -aft->mu(aft->schema.covariates_for_summary(conv, conv.observed_turns()));
    }
    const auto& forest = std::get<ForestFit>(impl);
    const auto chf =
        rsf_predict_chf(forest, forest.schema.covariates_for_summary(conv, conv.observed_turns()));
    double mortality = 0.0;
    for (double v : chf.chf) mortality += v;
    return mortality;
}

FittedModel fit_model(const Dataset& data, const std::vector<int>& pool,
                      const ModelConfig& config, std::uint64_t seed) {
    if (pool.empty()) fail(errc::invalid_input, "fit_model: empty training pool");
    const InteractionScheme scheme =
        config.interactions ? InteractionScheme::non_reference_models : InteractionScheme::none;

    FittedModel model;
    model.config = config;
    switch (config.family) {
        case ModelFamily::cox: {
            const FeatureSchema schema = fit_schema(data, pool, SchemaKind::per_turn, scheme);
            const auto samples = expand_dataset(data, pool, schema);
            model.impl = fit_cox(samples, schema, config.ridge);
            break;
        }
        case ModelFamily::aft_weibull:
        case ModelFamily::aft_lognormal:
        case ModelFamily::aft_loglogistic: {
            const FeatureSchema schema = fit_schema(data, pool, SchemaKind::summary, scheme);
            const AFTFamily family = config.family == ModelFamily::aft_weibull
                                         ? AFTFamily::weibull
                                         : (config.family == ModelFamily::aft_lognormal
                                                ? AFTFamily::lognormal
                                                : AFTFamily::loglogistic);
            model.impl = fit_aft(data, pool, schema, family, config.ridge);
            break;
        }
        case ModelFamily::rsf: {
            const FeatureSchema schema = fit_schema(data, pool, SchemaKind::summary, scheme);
            Eigen::MatrixXd z(pool.size(), schema.size());
            std::vector<EventOutcome> outcomes;
            outcomes.reserve(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i) {
                const auto& conv = data.conversations[static_cast<std::size_t>(pool[i])];
                const auto row = schema.covariates_for_summary(conv, conv.observed_turns());
                for (std::size_t j = 0; j < row.size(); ++j) {
                    z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
                }
                outcomes.push_back(derive_event_outcome(conv));
            }
            model.impl = fit_rsf(z, outcomes, schema, config.rsf, seed, data.horizon);
            break;
        }
    }
    return model;
}

EvaluationReport evaluate_model(const FittedModel& model, const Dataset& data,
                                const std::vector<int>& subset) {
    if (subset.empty()) fail(errc::invalid_input, "evaluate_model: empty subset");
    std::vector<SurvivalCurve> curves;
    std::vector<double> risks;
    curves.reserve(subset.size());
    risks.reserve(subset.size());
    const auto outcomes = derive_outcomes(data, subset);
    for (int idx : subset) {
        const auto& conv = data.conversations[static_cast<std::size_t>(idx)];
        curves.push_back(model.survival_curve(conv));
        risks.push_back(model.risk_score(conv));
    }

    EvaluationReport report;
    report.n_conversations = static_cast<int>(subset.size());
    for (const auto& o : outcomes) report.n_events += o.event_observed ? 1 : 0;
    report.c_index = c_index(risks, outcomes);
    const int h = curves.front().horizon();
    report.brier_by_round.reserve(static_cast<std::size_t>(h));
    double sum = 0.0;
    for (int t = 1; t <= h; ++t) {
        report.brier_by_round.push_back(brier_at(t, curves, outcomes));
        sum += report.brier_by_round.back();
    }
    report.ibs = sum / h;
    return report;
}

std::vector<ModelConfig> default_grid(ModelFamily family, bool interactions) {
    // Search grids: ridge {0, 1e-4, 1e-3, 1e-2} without interactions and
    // {1e-4, 1e-3, 1e-2, 1e-1} with them; RSF searches trees, depth and mtry.
    std::vector<ModelConfig> grid;
    const std::vector<double> ridge_off = {0.0, 1e-4, 1e-3, 1e-2};
    const std::vector<double> ridge_on = {1e-4, 1e-3, 1e-2, 1e-1};
    if (family == ModelFamily::rsf) {
        for (int trees : {200, 500, 1000}) {
            for (int depth : {4, 6, 8, -1}) {
                for (int mtry_kind : {0, 1, 2}) {  // resolved against p at fit time
                    ModelConfig c;
                    c.family = family;
                    c.interactions = interactions;
                    c.rsf.n_trees = trees;
                    c.rsf.max_depth = depth;
                    c.rsf.mtry = -(mtry_kind + 1);  // sentinel; see resolve_mtry
                    grid.push_back(c);
                }
            }
        }
        return grid;
    }
    for (double r : interactions ? ridge_on : ridge_off) {
        ModelConfig c;
        c.family = family;
        c.interactions = interactions;
        c.ridge = r;
        grid.push_back(c);
    }
    return grid;
}

std::vector<ModelConfig> default_grid_for(const std::string& family_group, bool interactions) {
    if (family_group == "aft") {
        std::vector<ModelConfig> grid;
        for (ModelFamily f :
             {ModelFamily::aft_weibull, ModelFamily::aft_lognormal, ModelFamily::aft_loglogistic}) {
            const auto part = default_grid(f, interactions);
            grid.insert(grid.end(), part.begin(), part.end());
        }
        return grid;
    }
    return default_grid(model_family_from_name(family_group), interactions);
}

namespace {

// RSF mtry grid entries are sentinels relative to p: -1 -> floor(sqrt(p)),
// -2 -> floor(p/3), -3 -> floor(p/2).
ModelConfig resolve_mtry(ModelConfig config, const Dataset& data, const std::vector<int>& pool) {
    if (config.family != ModelFamily::rsf || config.rsf.mtry >= 0) return config;
    const InteractionScheme scheme =
        config.interactions ? InteractionScheme::non_reference_models : InteractionScheme::none;
    const FeatureSchema schema = fit_schema(data, pool, SchemaKind::summary, scheme);
    const int p = schema.size();
    int mtry = p;
    switch (config.rsf.mtry) {
        case -1: mtry = static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))); break;
        case -2: mtry = p / 3; break;
        case -3: mtry = p / 2; break;
        default: break;
    }
    config.rsf.mtry = std::clamp(mtry, 1, p);
    return config;
}

}  // namespace

CVResult cross_validate(const Dataset& data, const std::vector<int>& pool,
                        const std::vector<ModelConfig>& grid, int k, std::uint64_t seed) {
    if (grid.empty()) fail(errc::invalid_input, "cross_validate: empty grid");
    const auto folds = kfold_conversations(data, pool, k, seed);

    std::vector<std::vector<int>> train_parts(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const std::set<int> holdout(folds[f].begin(), folds[f].end());
        for (int idx : pool) {
            if (!holdout.count(idx)) train_parts[f].push_back(idx);
        }
    }

    CVResult result;
    result.table.reserve(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        CVRow row;
        row.config = resolve_mtry(grid[c], data, pool);
        double ibs_sum = 0.0, cindex_sum = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto fold_outcomes = derive_outcomes(data, folds[f]);
            const auto train_outcomes = derive_outcomes(data, train_parts[f]);
            const auto has_events = [](const std::vector<EventOutcome>& v) {
                return std::any_of(v.begin(), v.end(),
                                   [](const EventOutcome& o) { return o.event_observed; });
            };
            if (!has_events(fold_outcomes) || !has_events(train_outcomes)) {
                ++row.folds_skipped;
                continue;
            }
            const FittedModel model =
                fit_model(data, train_parts[f], row.config, derive_seed(seed, f));
            const EvaluationReport report = evaluate_model(model, data, folds[f]);
            ibs_sum += report.ibs;
            cindex_sum += report.c_index;
            ++row.folds_used;
        }
        if (row.folds_used > 0) {
            row.mean_ibs = ibs_sum / row.folds_used;
            row.mean_c_index = cindex_sum / row.folds_used;
        }
        result.table.push_back(std::move(row));
    }

    constexpr double kTieTol = 1e-12;
    for (std::size_t c = 0; c < result.table.size(); ++c) {
        const auto& row = result.table[c];
        if (row.folds_used == 0) continue;
        if (result.selected < 0) {
            result.selected = static_cast<int>(c);
            continue;
        }
        const auto& best = result.table[static_cast<std::size_t>(result.selected)];
        if (row.mean_ibs < best.mean_ibs - kTieTol) {
            result.selected = static_cast<int>(c);
        } else if (std::fabs(row.mean_ibs - best.mean_ibs) <= kTieTol &&
                   row.mean_c_index > best.mean_c_index + kTieTol) {
            result.selected = static_cast<int>(c);
        }
    }
    if (result.selected < 0) {
        fail(errc::no_events, "cross_validate: every fold was skipped for lack of events");
    }
    return result;
}

}  // namespace driftsurv
