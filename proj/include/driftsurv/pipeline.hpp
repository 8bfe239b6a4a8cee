#pragma once
// Model families behind one surface: fit on a conversation pool, emit
// survival curves for full histories or prefixes, score risk, evaluate on a
// held-out subset, and run the cross-validated grid search.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "driftsurv/aft.hpp"
#include "driftsurv/cox.hpp"
#include "driftsurv/dataset.hpp"
#include "driftsurv/metrics.hpp"
#include "driftsurv/rsf.hpp"

namespace driftsurv {

enum class ModelFamily { cox, aft_weibull, aft_lognormal, aft_loglogistic, rsf };

const char* model_family_name(ModelFamily family);
ModelFamily model_family_from_name(const std::string& name);

struct ModelConfig {
    ModelFamily family = ModelFamily::aft_weibull;
    bool interactions = false;
    double ridge = 0.0;
    RSFParams rsf;

    std::string describe() const;
};

struct FittedModel {
    ModelConfig config;
    std::variant<CoxFit, AFTFit, ForestFit> impl;

    const FeatureSchema& schema() const;
    // Survival curve from the history up to turn `upto_t` (prefix
    // re-aggregation for AFT/RSF, carry-forward covariates for Cox).
    SurvivalCurve survival_curve(const ConversationRecord& conv, int upto_t) const;
    SurvivalCurve survival_curve(const ConversationRecord& conv) const;  // full history
    // Higher score = earlier expected failure.
    double risk_score(const ConversationRecord& conv) const;
};

FittedModel fit_model(const Dataset& data, const std::vector<int>& pool, const ModelConfig& config,
                      std::uint64_t seed);

EvaluationReport evaluate_model(const FittedModel& model, const Dataset& data,
                                const std::vector<int>& subset);

// Hyperparameter grids mirroring the defaults the toolkit searches.
std::vector<ModelConfig> default_grid(ModelFamily family, bool interactions);
// The user-facing family groups: "cox", "aft" (all three families), "rsf",
// or a single AFT family name.
std::vector<ModelConfig> default_grid_for(const std::string& family_group, bool interactions);

struct CVRow {
    ModelConfig config;
    double mean_ibs = 0.0;
    double mean_c_index = 0.0;
    int folds_used = 0;
    int folds_skipped = 0;
};

struct CVResult {
    std::vector<CVRow> table;
    int selected = -1;
};

// K-fold CV over conversations; selects minimum mean IBS, ties broken by
// maximum C-index, then first-in-grid order. Validation folds without events
// are skipped with a warning count.
CVResult cross_validate(const Dataset& data, const std::vector<int>& pool,
                        const std::vector<ModelConfig>& grid, int k, std::uint64_t seed);

}  // namespace driftsurv
