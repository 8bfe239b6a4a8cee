#pragma once
// Core domain types: conversation turn logs, right-censored outcomes,
// counting-process rows, and the integer-grid survival / cumulative-hazard
// curves every model emits.

#include <string>
#include <vector>

namespace driftsurv {

inline constexpr int kDefaultHorizon = 8;

struct TurnRecord {
    int turn_index = 0;  // 1-based within the conversation
    std::vector<double> prompt_embedding;
    std::vector<double> context_embedding;
    int prompt_length = 0;  // token count
    bool consistent = true;
};

struct ConversationRecord {
    std::string conversation_id;
    std::string model_id;
    std::string subject_cluster;
    std::string difficulty;
    std::vector<TurnRecord> turns;  // sorted by turn_index, contiguous from 1
    int horizon = kDefaultHorizon;

    int observed_turns() const { return static_cast<int>(turns.size()); }
};

// (T, delta): first inconsistent turn, or censoring at the last observed turn.
struct EventOutcome {
    int event_time = 0;
    bool event_observed = false;
};

// One row of the counting process: interval (t-1, t] with the covariates in
// force at turn t. The event flag is set on at most one row per conversation.
struct SurvivalSample {
    std::string conversation_id;
    int interval_start = 0;
    int interval_stop = 0;
    std::vector<double> covariates;
    bool event_in_interval = false;
};

// Step function S(t) on the grid t = 0..H. S(0) = 1, non-increasing, in [0,1].
struct SurvivalCurve {
    std::vector<double> survival;

    int horizon() const { return static_cast<int>(survival.size()) - 1; }
    double at(int t) const;
    void validate() const;
};

// Cumulative hazard on the same grid. chf(0) = 0, non-decreasing.
struct CumulativeHazardCurve {
    std::vector<double> chf;

    int horizon() const { return static_cast<int>(chf.size()) - 1; }
    double at(int t) const;
    SurvivalCurve to_survival() const;
    void validate() const;
};

struct IngestStats {
    int conversations_kept = 0;
    int rejected_initial_incorrect = 0;
    int post_event_turns_dropped = 0;
};

struct Dataset {
    std::vector<ConversationRecord> conversations;
    int horizon = kDefaultHorizon;
    int embedding_dim = 0;
    IngestStats ingest;

    int size() const { return static_cast<int>(conversations.size()); }
};

std::vector<int> all_indices(const Dataset& data);

}  // namespace driftsurv
