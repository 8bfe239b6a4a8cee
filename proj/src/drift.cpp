#include "driftsurv/drift.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "driftsurv/error.hpp"

namespace driftsurv {

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(errc::invalid_input, "cosine_distance: dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        fail(errc::invalid_input, "cosine_distance: zero-norm vector");
    }
    const double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(d, 0.0, 2.0);
}

namespace {

void check_turn_range(const ConversationRecord& conv, int t) {
    if (t < 1 || t > conv.observed_turns()) {
        fail(errc::invalid_input,
             "turn index " + std::to_string(t) + " outside observed range of conversation '" +
                 conv.conversation_id + "'");
    }
}

}  // namespace

double p2p_drift(const ConversationRecord& conv, int t) {
    check_turn_range(conv, t);
    if (t == 1) return 0.0;
    const auto& prev = conv.turns[static_cast<std::size_t>(t - 2)];
    const auto& cur = conv.turns[static_cast<std::size_t>(t - 1)];
    return cosine_distance(prev.prompt_embedding, cur.prompt_embedding);
}

double c2p_drift(const ConversationRecord& conv, int t) {
    check_turn_range(conv, t);
    if (t == 1) return 0.0;
    const auto& prev = conv.turns[static_cast<std::size_t>(t - 2)];
    const auto& cur = conv.turns[static_cast<std::size_t>(t - 1)];
    return cosine_distance(prev.context_embedding, cur.prompt_embedding);
}

double cumulative_drift(const ConversationRecord& conv, int t) {
    check_turn_range(conv, t);
    double cum = 0.0;
    for (int s = 2; s <= t; ++s) cum += p2p_drift(conv, s);
    return cum;
}

DriftTriple drift_at(const ConversationRecord& conv, int t) {
    check_turn_range(conv, t);
    DriftTriple d;
    d.p2p = p2p_drift(conv, t);
    d.c2p = c2p_drift(conv, t);
    d.cumulative = cumulative_drift(conv, t);
    return d;
}

std::vector<DriftTriple> drift_series(const ConversationRecord& conv) {
    const int n = conv.observed_turns();
    std::vector<DriftTriple> out;
    out.reserve(static_cast<std::size_t>(n));
    double cum = 0.0;
    for (int t = 1; t <= n; ++t) {
        DriftTriple d;
        d.p2p = p2p_drift(conv, t);
        d.c2p = c2p_drift(conv, t);
        cum += d.p2p;
        d.cumulative = cum;
        out.push_back(d);
    }
    return out;
}

ConversationSummary summarize_conversation(const ConversationRecord& conv, int upto_t) {
    if (upto_t < 1) {
        fail(errc::invalid_input, "summarize_conversation: upto_t must be >= 1");
    }
    check_turn_range(conv, upto_t);

    ConversationSummary s;
    double cum = 0.0, cum_sum = 0.0, p2p_sum = 0.0, c2p_sum = 0.0, len_sum = 0.0;
    for (int t = 1; t <= upto_t; ++t) {
        const double p = p2p_drift(conv, t);
        cum += p;
        if (t >= 2) {
            p2p_sum += p;
            c2p_sum += c2p_drift(conv, t);
            cum_sum += cum;
        }
        len_sum += conv.turns[static_cast<std::size_t>(t - 1)].prompt_length;
    }
    const int drift_turns = upto_t - 1;
    if (drift_turns > 0) {
        s.p2p_mean = p2p_sum / drift_turns;
        s.c2p_mean = c2p_sum / drift_turns;
        s.cum_mean = cum_sum / drift_turns;
    }
    s.cum_final = cum;
    s.length_mean = len_sum / upto_t;
    return s;
}

}  // namespace driftsurv
