#pragma once
// Semantic drift covariates: cosine distance between embeddings, the three
// per-turn drift channels, and conversation-level summaries consumed by the
// AFT / RSF models and the monitor's prefix re-aggregation.

#include <span>
#include <vector>

#include "driftsurv/types.hpp"

namespace driftsurv {

// 1 - a.b / (|a||b|), clamped to [0,2]. Zero-norm input is rejected.
double cosine_distance(std::span<const double> a, std::span<const double> b);

struct DriftTriple {
    double p2p = 0.0;         // in [0,2]; 0 at turn 1
    double c2p = 0.0;         // in [0,2]; 0 at turn 1 (no prior context)
    double cumulative = 0.0;  // running sum of p2p; non-decreasing
};

double p2p_drift(const ConversationRecord& conv, int t);
double c2p_drift(const ConversationRecord& conv, int t);
double cumulative_drift(const ConversationRecord& conv, int t);
DriftTriple drift_at(const ConversationRecord& conv, int t);

// All observed turns in one pass (index 0 = turn 1).
std::vector<DriftTriple> drift_series(const ConversationRecord& conv);

// Prefix aggregation over turns 1..upto_t. Drift means skip turn 1 since it
// carries no drift information; with upto_t = 1 they equal the turn-1 values
// (all zero). Length is averaged over every turn.
struct ConversationSummary {
    double p2p_mean = 0.0;
    double c2p_mean = 0.0;
    double cum_mean = 0.0;
    double cum_final = 0.0;
    double length_mean = 0.0;
};

ConversationSummary summarize_conversation(const ConversationRecord& conv, int upto_t);

}  // namespace driftsurv
