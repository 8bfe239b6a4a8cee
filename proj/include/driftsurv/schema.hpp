#pragma once
// Covariate schema: fixes column order, one-hot encodings with a dropped
// reference level, training-pool standardization statistics, and optional
// drift x model interaction columns. Fitted once on the training pool and
// then applied verbatim everywhere, including at prediction time.

#include <string>
#include <vector>

#include "driftsurv/types.hpp"

namespace driftsurv {

enum class SchemaKind {
    per_turn,  // time-varying rows for the Cox model
    summary,   // conversation-level aggregates for AFT / RSF
};

enum class InteractionScheme {
    none,
    non_reference_models,  // 3 drift channels x (levels - 1) model columns
    all_models,            // 3 drift channels x all model levels
};

struct OneHotGroup {
    std::string field;                // "subject" | "difficulty" | "model"
    std::vector<std::string> levels;  // sorted; front() is the dropped reference

    int columns() const { return std::max<int>(0, static_cast<int>(levels.size()) - 1); }
};

struct FeatureSchema {
    SchemaKind kind = SchemaKind::per_turn;
    InteractionScheme interactions = InteractionScheme::none;
    int horizon = kDefaultHorizon;
    int embedding_dim = 0;

    // Continuous block, fixed per kind; mean/sd computed on the training pool.
    // Constant columns keep sd = 1 so standardization is a no-op.
    std::vector<std::string> continuous_names;
    std::vector<double> continuous_mean;
    std::vector<double> continuous_sd;

    OneHotGroup subject;
    OneHotGroup difficulty;
    OneHotGroup model;

    int n_continuous() const { return static_cast<int>(continuous_names.size()); }
    int n_onehot() const { return subject.columns() + difficulty.columns() + model.columns(); }
    int n_interaction() const;
    int size() const { return n_continuous() + n_onehot() + n_interaction(); }

    std::vector<std::string> column_names() const;
    // True on the interaction block; the ridge penalty applies there only.
    std::vector<bool> penalized_mask() const;

    // Indices (into the continuous block) of the drift channels that spawn
    // interaction columns.
    std::vector<int> interaction_channels() const;

    std::vector<double> covariates_for_turn(const ConversationRecord& conv, int t) const;
    std::vector<double> covariates_for_summary(const ConversationRecord& conv, int upto_t) const;
};

FeatureSchema fit_schema(const Dataset& data, const std::vector<int>& pool, SchemaKind kind,
                         InteractionScheme interactions);

const char* schema_kind_name(SchemaKind kind);
SchemaKind schema_kind_from_name(const std::string& name);
const char* interaction_scheme_name(InteractionScheme scheme);
InteractionScheme interaction_scheme_from_name(const std::string& name);

}  // namespace driftsurv
