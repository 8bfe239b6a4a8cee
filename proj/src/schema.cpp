#include "driftsurv/schema.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "driftsurv/drift.hpp"
#include "driftsurv/error.hpp"

namespace driftsurv {

namespace {

const std::vector<std::string> kTurnContinuous = {"drift_p2p", "drift_c2p", "drift_cum",
                                                  "prompt_length"};
const std::vector<std::string> kSummaryContinuous = {"p2p_mean", "c2p_mean", "cum_mean",
                                                     "cum_final", "length_mean"};

int onehot_index(const OneHotGroup& group, const std::string& level) {
    const auto it = std::find(group.levels.begin(), group.levels.end(), level);
    if (it == group.levels.end()) {
        fail(errc::schema, "unknown " + group.field + " level '" + level + "'");
    }
    return static_cast<int>(it - group.levels.begin());
}

void append_onehot(std::vector<double>& out, const OneHotGroup& group, const std::string& level) {
    const int idx = onehot_index(group, level);
    for (int c = 1; c < static_cast<int>(group.levels.size()); ++c) {
        out.push_back(c == idx ? 1.0 : 0.0);
    }
}

}  // namespace

int FeatureSchema::n_interaction() const {
    if (interactions == InteractionScheme::none) return 0;
    const int model_cols = interactions == InteractionScheme::all_models
                               ? static_cast<int>(model.levels.size())
                               : model.columns();
    return static_cast<int>(interaction_channels().size()) * model_cols;
}

std::vector<int> FeatureSchema::interaction_channels() const {
    // One channel per drift signal: p2p, c2p and the cumulative channel
    // (final cumulative value in the summary schema).
    if (kind == SchemaKind::per_turn) return {0, 1, 2};
    return {0, 1, 3};
}

std::vector<std::string> FeatureSchema::column_names() const {
    std::vector<std::string> names = continuous_names;
    for (const OneHotGroup* g : {&subject, &difficulty, &model}) {
        for (int c = 1; c < static_cast<int>(g->levels.size()); ++c) {
            names.push_back(g->field + "=" + g->levels[static_cast<std::size_t>(c)]);
        }
    }
    if (interactions != InteractionScheme::none) {
        const int first = interactions == InteractionScheme::all_models ? 0 : 1;
        for (int ch : interaction_channels()) {
            for (int c = first; c < static_cast<int>(model.levels.size()); ++c) {
                names.push_back(continuous_names[static_cast<std::size_t>(ch)] + ":model=" +
                                model.levels[static_cast<std::size_t>(c)]);
            }
        }
    }
    return names;
}

std::vector<bool> FeatureSchema::penalized_mask() const {
    std::vector<bool> mask(static_cast<std::size_t>(size()), false);
    for (int i = n_continuous() + n_onehot(); i < size(); ++i) {
        mask[static_cast<std::size_t>(i)] = true;
    }
    return mask;
}

namespace {

// Shared tail of both apply paths: standardize the continuous block, then
// append one-hots and interaction columns.
std::vector<double> assemble(const FeatureSchema& schema, std::vector<double> continuous,
                             const ConversationRecord& conv) {
    for (std::size_t i = 0; i < continuous.size(); ++i) {
        continuous[i] = (continuous[i] - schema.continuous_mean[i]) / schema.continuous_sd[i];
    }
    std::vector<double> out = continuous;
    out.reserve(static_cast<std::size_t>(schema.size()));
    append_onehot(out, schema.subject, conv.subject_cluster);
    append_onehot(out, schema.difficulty, conv.difficulty);
    append_onehot(out, schema.model, conv.model_id);

    if (schema.interactions != InteractionScheme::none) {
        const int midx = onehot_index(schema.model, conv.model_id);
        const int first = schema.interactions == InteractionScheme::all_models ? 0 : 1;
        for (int ch : schema.interaction_channels()) {
            for (int c = first; c < static_cast<int>(schema.model.levels.size()); ++c) {
                out.push_back(c == midx ? continuous[static_cast<std::size_t>(ch)] : 0.0);
            }
        }
    }
    return out;
}

void check_embedding_dim(const FeatureSchema& schema, const ConversationRecord& conv) {
    for (const auto& turn : conv.turns) {
        if (static_cast<int>(turn.prompt_embedding.size()) != schema.embedding_dim ||
            static_cast<int>(turn.context_embedding.size()) != schema.embedding_dim) {
            fail(errc::schema, "embedding dimension mismatch in conversation '" +
                                   conv.conversation_id + "' (schema expects " +
                                   std::to_string(schema.embedding_dim) + ")");
        }
    }
}

}  // namespace

std::vector<double> FeatureSchema::covariates_for_turn(const ConversationRecord& conv,
                                                       int t) const {
    if (kind != SchemaKind::per_turn) {
        fail(errc::schema, "per-turn covariates requested from a summary schema");
    }
    check_embedding_dim(*this, conv);
    const DriftTriple d = drift_at(conv, t);
    const double len = conv.turns[static_cast<std::size_t>(t - 1)].prompt_length;
    return assemble(*this, {d.p2p, d.c2p, d.cumulative, len}, conv);
}

std::vector<double> FeatureSchema::covariates_for_summary(const ConversationRecord& conv,
                                                          int upto_t) const {
    if (kind != SchemaKind::summary) {
        fail(errc::schema, "summary covariates requested from a per-turn schema");
    }
    check_embedding_dim(*this, conv);
    const ConversationSummary s = summarize_conversation(conv, upto_t);
    return assemble(*this, {s.p2p_mean, s.c2p_mean, s.cum_mean, s.cum_final, s.length_mean}, conv);
}

FeatureSchema fit_schema(const Dataset& data, const std::vector<int>& pool, SchemaKind kind,
                         InteractionScheme interactions) {
    if (pool.empty()) fail(errc::invalid_input, "fit_schema: empty training pool");

    FeatureSchema schema;
    schema.kind = kind;
    schema.interactions = interactions;
    schema.horizon = data.horizon;
    schema.embedding_dim = data.embedding_dim;
    schema.continuous_names = (kind == SchemaKind::per_turn) ? kTurnContinuous : kSummaryContinuous;

    std::set<std::string> subjects, difficulties, models;
    for (int idx : pool) {
        const auto& conv = data.conversations[static_cast<std::size_t>(idx)];
        subjects.insert(conv.subject_cluster);
        difficulties.insert(conv.difficulty);
        models.insert(conv.model_id);
    }
    schema.subject = {"subject", {subjects.begin(), subjects.end()}};
    schema.difficulty = {"difficulty", {difficulties.begin(), difficulties.end()}};
    schema.model = {"model", {models.begin(), models.end()}};

    // Standardization statistics over training-pool rows.
    const std::size_t p = schema.continuous_names.size();
    std::vector<double> sum(p, 0.0), sumsq(p, 0.0);
    std::size_t n = 0;
    auto accumulate = [&](const std::vector<double>& row) {
        for (std::size_t i = 0; i < p; ++i) {
            sum[i] += row[i];
            sumsq[i] += row[i] * row[i];
        }
        ++n;
    };
    for (int idx : pool) {
        const auto& conv = data.conversations[static_cast<std::size_t>(idx)];
        if (conv.turns.empty()) {
            fail(errc::invalid_input,
                 "fit_schema: conversation '" + conv.conversation_id + "' has no turns");
        }
        if (kind == SchemaKind::per_turn) {
            const auto series = drift_series(conv);
            for (int t = 1; t <= conv.observed_turns(); ++t) {
                const auto& d = series[static_cast<std::size_t>(t - 1)];
                const double len = conv.turns[static_cast<std::size_t>(t - 1)].prompt_length;
                accumulate({d.p2p, d.c2p, d.cumulative, len});
            }
        } else {
            const ConversationSummary s = summarize_conversation(conv, conv.observed_turns());
            accumulate({s.p2p_mean, s.c2p_mean, s.cum_mean, s.cum_final, s.length_mean});
        }
    }

    schema.continuous_mean.resize(p);
    schema.continuous_sd.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        const double mean = sum[i] / static_cast<double>(n);
        double var = sumsq[i] / static_cast<double>(n) - mean * mean;
        var = std::max(var, 0.0);
        const double sd = std::sqrt(var);
        schema.continuous_mean[i] = mean;
        schema.continuous_sd[i] = sd > 1e-12 ? sd : 1.0;  // constant column: no-op
    }
    return schema;
}

const char* schema_kind_name(SchemaKind kind) {
    return kind == SchemaKind::per_turn ? "per_turn" : "summary";
}

SchemaKind schema_kind_from_name(const std::string& name) {
    if (name == "per_turn") return SchemaKind::per_turn;
    if (name == "summary") return SchemaKind::summary;
    fail(errc::parse, "unknown schema kind '" + name + "'");
}

const char* interaction_scheme_name(InteractionScheme scheme) {
    switch (scheme) {
        case InteractionScheme::none: return "none";
        case InteractionScheme::non_reference_models: return "non_reference_models";
        case InteractionScheme::all_models: return "all_models";
    }
    return "none";
}

InteractionScheme interaction_scheme_from_name(const std::string& name) {
    if (name == "none") return InteractionScheme::none;
    if (name == "non_reference_models") return InteractionScheme::non_reference_models;
    if (name == "all_models") return InteractionScheme::all_models;
    fail(errc::parse, "unknown interaction scheme '" + name + "'");
}

}  // namespace driftsurv
