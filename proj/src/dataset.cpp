#include "driftsurv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftsurv/error.hpp"
#include "driftsurv/rng.hpp"

namespace driftsurv {

using nlohmann::json;

const std::string& SubjectClusterMap::resolve(const std::string& raw) const {
    const auto it = raw_to_cluster.find(raw);
    return it == raw_to_cluster.end() ? raw : it->second;
}

SubjectClusterMap default_subject_clusters() {
    // 39 benchmark subjects grouped into 7 thematic clusters. Shipped as the
    // default configuration; override with a JSON file for other corpora.
    SubjectClusterMap m;
    const std::pair<const char*, const char*> entries[] = {
        {"mathematics", "STEM"},
        {"statistics", "STEM"},
        {"abstract algebra", "STEM"},
        {"physics", "STEM"},
        {"conceptual physics", "STEM"},
        {"astronomy", "STEM"},
        {"chemistry", "STEM"},
        {"computer science", "STEM"},
        {"computer_security", "STEM"},
        {"machine learning", "STEM"},
        {"electrical engineering", "STEM"},
        {"medicine", "Medical Health"},
        {"clinical knowledge", "Medical Health"},
        {"medical genetics", "Medical Health"},
        {"biology", "Medical Health"},
        {"anatomy", "Medical Health"},
        {"virology", "Medical Health"},
        {"nutrition", "Medical Health"},
        {"human sexuality", "Medical Health"},
        {"psychology", "Social Sciences"},
        {"sociology", "Social Sciences"},
        {"moral scenarios", "Social Sciences"},
        {"global facts", "Social Sciences"},
        {"philosophy", "Humanities"},
        {"formal logic", "Humanities"},
        {"world religions", "Humanities"},
        {"world history", "Humanities"},
        {"us history", "Humanities"},
        {"prehistory", "Humanities"},
        {"microeconomics", "Business_Economics"},
        {"econometrics", "Business_Economics"},
        {"accounting", "Business_Economics"},
        {"marketing", "Business_Economics"},
        {"management", "Business_Economics"},
        {"law", "Law Legal"},
        {"jurisprudence", "Law Legal"},
        {"international law", "Law Legal"},
        {"truthful_qa", "General Knowledge"},
        {"common sense", "General Knowledge"},
    };
    for (const auto& [raw, cluster] : entries) m.raw_to_cluster.emplace(raw, cluster);
    return m;
}

SubjectClusterMap load_subject_clusters(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::data_not_found, "cluster config not found: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail(errc::parse, "cluster config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) fail(errc::parse, "cluster config must be a JSON object");
    SubjectClusterMap m;
    for (const auto& [key, value] : doc.items()) {
        if (!value.is_string()) fail(errc::parse, "cluster value for '" + key + "' must be a string");
        m.raw_to_cluster.emplace(key, value.get<std::string>());
    }
    return m;
}

namespace {

std::vector<double> parse_embedding(const json& arr, const std::string& conv_id,
                                    const char* field) {
    if (!arr.is_array() || arr.empty()) {
        fail(errc::parse, "conversation '" + conv_id + "': " + field + " must be a non-empty array");
    }
    std::vector<double> out;
    out.reserve(arr.size());
    double norm = 0.0;
    for (const auto& v : arr) {
        if (!v.is_number()) {
            fail(errc::parse, "conversation '" + conv_id + "': non-numeric value in " + field);
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            fail(errc::invalid_input, "conversation '" + conv_id + "': non-finite value in " + field);
        }
        norm += x * x;
        out.push_back(x);
    }
    if (norm <= 0.0) {
        fail(errc::invalid_input, "conversation '" + conv_id + "': zero-norm " + field);
    }
    return out;
}

// Parses one JSONL line into a record. Returns false when the conversation
// is rejected because its initial answer was incorrect.
bool parse_conversation(const json& doc, const IngestOptions& opts, ConversationRecord& conv,
                        int& dropped_turns) {
    for (const char* field : {"conversation_id", "model_id", "subject_cluster", "difficulty"}) {
        if (!doc.contains(field) || !doc.at(field).is_string()) {
            fail(errc::parse, std::string("missing or non-string field '") + field + "'");
        }
    }
    conv.conversation_id = doc.at("conversation_id").get<std::string>();
    conv.model_id = doc.at("model_id").get<std::string>();
    conv.subject_cluster = opts.clusters.resolve(doc.at("subject_cluster").get<std::string>());
    conv.difficulty = doc.at("difficulty").get<std::string>();
    conv.horizon = opts.horizon;

    // Conversations whose initial answer is already wrong carry no
    // time-to-inconsistency information and are dropped with a counted warning.
    if (doc.contains("initial_correct") && doc.at("initial_correct").is_boolean() &&
        !doc.at("initial_correct").get<bool>()) {
        return false;
    }

    if (doc.contains("horizon") && doc.at("horizon").is_number_integer() &&
        doc.at("horizon").get<int>() != opts.horizon) {
        fail(errc::invalid_input, "conversation '" + conv.conversation_id +
                                      "' declares horizon " +
                                      std::to_string(doc.at("horizon").get<int>()) +
                                      ", dataset horizon is " + std::to_string(opts.horizon));
    }

    if (!doc.contains("turns") || !doc.at("turns").is_array() || doc.at("turns").empty()) {
        fail(errc::invalid_input, "conversation '" + conv.conversation_id + "': empty turn sequence");
    }

    for (const auto& t : doc.at("turns")) {
        TurnRecord turn;
        if (!t.contains("turn_index") || !t.at("turn_index").is_number_integer()) {
            fail(errc::parse, "conversation '" + conv.conversation_id + "': turn without turn_index");
        }
        turn.turn_index = t.at("turn_index").get<int>();
        turn.prompt_embedding =
            parse_embedding(t.at("prompt_embedding"), conv.conversation_id, "prompt_embedding");
        turn.context_embedding =
            parse_embedding(t.at("context_embedding"), conv.conversation_id, "context_embedding");
        if (!t.contains("prompt_length") || !t.at("prompt_length").is_number_integer() ||
            t.at("prompt_length").get<int>() < 0) {
            fail(errc::parse,
                 "conversation '" + conv.conversation_id + "': prompt_length must be a non-negative integer");
        }
        turn.prompt_length = t.at("prompt_length").get<int>();
        if (!t.contains("consistent") || !t.at("consistent").is_boolean()) {
            fail(errc::parse, "conversation '" + conv.conversation_id + "': consistent must be boolean");
        }
        turn.consistent = t.at("consistent").get<bool>();
        conv.turns.push_back(std::move(turn));
    }

    std::sort(conv.turns.begin(), conv.turns.end(),
              [](const TurnRecord& a, const TurnRecord& b) { return a.turn_index < b.turn_index; });
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        if (conv.turns[i].turn_index != static_cast<int>(i) + 1) {
            fail(errc::invalid_input, "conversation '" + conv.conversation_id +
                                          "': turn indices must be contiguous from 1");
        }
    }

    // The event is the first inconsistent turn; anything recorded after it is
    // post-event and dropped.
    for (std::size_t i = 0; i < conv.turns.size(); ++i) {
        if (!conv.turns[i].consistent) {
            dropped_turns += static_cast<int>(conv.turns.size() - i - 1);
            conv.turns.resize(i + 1);
            break;
        }
    }

    if (conv.observed_turns() > opts.horizon) {
        fail(errc::invalid_input, "conversation '" + conv.conversation_id + "' has " +
                                      std::to_string(conv.observed_turns()) +
                                      " turns, beyond horizon " + std::to_string(opts.horizon));
    }
    return true;
}

}  // namespace

Dataset parse_jsonl(std::istream& in, const IngestOptions& opts) {
    if (opts.horizon < 1) fail(errc::invalid_input, "horizon must be >= 1");
    Dataset data;
    data.horizon = opts.horizon;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            fail(errc::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        ConversationRecord conv;
        int dropped = 0;
        if (!parse_conversation(doc, opts, conv, dropped)) {
            ++data.ingest.rejected_initial_incorrect;
            continue;
        }
        data.ingest.post_event_turns_dropped += dropped;

        const int d = static_cast<int>(conv.turns.front().prompt_embedding.size());
        for (const auto& turn : conv.turns) {
            if (static_cast<int>(turn.prompt_embedding.size()) != d ||
                static_cast<int>(turn.context_embedding.size()) != d) {
                fail(errc::invalid_input, "conversation '" + conv.conversation_id +
                                              "': embedding dimensions differ across turns");
            }
        }
        if (data.embedding_dim == 0) {
            data.embedding_dim = d;
        } else if (d != data.embedding_dim) {
            fail(errc::invalid_input, "conversation '" + conv.conversation_id +
                                          "': embedding dimension " + std::to_string(d) +
                                          " differs from dataset dimension " +
                                          std::to_string(data.embedding_dim));
        }
        data.conversations.push_back(std::move(conv));
        ++data.ingest.conversations_kept;
    }
    return data;
}

Dataset load_jsonl(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) fail(errc::data_not_found, "data file not found: " + path);
    return parse_jsonl(in, opts);
}

void write_jsonl(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(errc::invalid_input, "cannot open for writing: " + path);
    for (const auto& conv : data.conversations) {
        json turns = json::array();
        for (const auto& t : conv.turns) {
            turns.push_back({{"turn_index", t.turn_index},
                             {"prompt_embedding", t.prompt_embedding},
                             {"context_embedding", t.context_embedding},
                             {"prompt_length", t.prompt_length},
                             {"consistent", t.consistent}});
        }
        const json doc = {{"conversation_id", conv.conversation_id},
                          {"model_id", conv.model_id},
                          {"subject_cluster", conv.subject_cluster},
                          {"difficulty", conv.difficulty},
                          {"horizon", conv.horizon},
                          {"turns", turns}};
        out << doc.dump() << '\n';
    }
}

EventOutcome derive_event_outcome(const ConversationRecord& conv) {
    if (conv.turns.empty()) {
        fail(errc::invalid_input,
             "conversation '" + conv.conversation_id + "': empty turn sequence");
    }
    for (const auto& turn : conv.turns) {
        if (!turn.consistent) return {turn.turn_index, true};
    }
    // No failure observed: censored at the last observed turn (= H for
    // complete conversations).
    return {conv.observed_turns(), false};
}

std::vector<EventOutcome> derive_outcomes(const Dataset& data, const std::vector<int>& subset) {
    std::vector<EventOutcome> out;
    out.reserve(subset.size());
    for (int idx : subset) {
        out.push_back(derive_event_outcome(data.conversations[static_cast<std::size_t>(idx)]));
    }
    return out;
}

std::vector<SurvivalSample> expand_counting_process(const ConversationRecord& conv,
                                                    const FeatureSchema& schema) {
    const EventOutcome outcome = derive_event_outcome(conv);
    std::vector<SurvivalSample> rows;
    rows.reserve(static_cast<std::size_t>(outcome.event_time));
    for (int t = 1; t <= outcome.event_time; ++t) {
        SurvivalSample row;
        row.conversation_id = conv.conversation_id;
        row.interval_start = t - 1;
        row.interval_stop = t;
        row.covariates = schema.covariates_for_turn(conv, t);
        row.event_in_interval = outcome.event_observed && t == outcome.event_time;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SurvivalSample> expand_dataset(const Dataset& data, const std::vector<int>& subset,
                                           const FeatureSchema& schema) {
    std::vector<SurvivalSample> rows;
    for (int idx : subset) {
        auto conv_rows =
            expand_counting_process(data.conversations[static_cast<std::size_t>(idx)], schema);
        rows.insert(rows.end(), std::make_move_iterator(conv_rows.begin()),
                    std::make_move_iterator(conv_rows.end()));
    }
    return rows;
}

namespace {

using Cell = std::pair<std::string, std::string>;  // (model_id, subject_cluster)

std::map<Cell, std::vector<int>> group_cells(const Dataset& data, const std::vector<int>& pool) {
    std::map<Cell, std::vector<int>> cells;
    for (int idx : pool) {
        const auto& conv = data.conversations[static_cast<std::size_t>(idx)];
        cells[{conv.model_id, conv.subject_cluster}].push_back(idx);
    }
    // Sort members by id (index as tiebreak) so the split depends on the set
    // of conversations, not their file order.
    for (auto& [cell, members] : cells) {
        std::sort(members.begin(), members.end(), [&](int a, int b) {
            const auto& ca = data.conversations[static_cast<std::size_t>(a)];
            const auto& cb = data.conversations[static_cast<std::size_t>(b)];
            return std::tie(ca.conversation_id, a) < std::tie(cb.conversation_id, b);
        });
    }
    return cells;
}

std::uint64_t cell_stream(const Cell& cell) {
    return fnv1a(cell.first) ^ splitmix64(fnv1a(cell.second));
}

}  // namespace

StratifiedSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        fail(errc::invalid_input, "test_fraction must lie in (0,1)");
    }
    if (data.conversations.empty()) fail(errc::invalid_input, "stratified_split: empty dataset");

    StratifiedSplit split;
    auto cells = group_cells(data, all_indices(data));
    for (auto& [cell, members] : cells) {
        if (members.size() < 2) {
            split.degenerate_cells.push_back(
                {cell.first, cell.second, static_cast<int>(members.size())});
            split.train.insert(split.train.end(), members.begin(), members.end());
            continue;
        }
        auto rng = make_rng(seed, cell_stream(cell));
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < members.size(); ++i) {
            (i < n_test ? split.test : split.train).push_back(members[i]);
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<std::vector<int>> kfold_conversations(const Dataset& data,
                                                  const std::vector<int>& pool, int k,
                                                  std::uint64_t seed) {
    if (k < 2) fail(errc::invalid_input, "kfold: k must be >= 2");
    if (static_cast<std::size_t>(k) > pool.size()) {
        fail(errc::invalid_input, "kfold: k exceeds the number of conversations");
    }

    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    auto cells = group_cells(data, pool);
    // Deal members to folds cyclically across cells: fold sizes differ by at
    // most one globally and within each cell.
    int cursor = 0;
    for (auto& [cell, members] : cells) {
        auto rng = make_rng(seed, cell_stream(cell) ^ 0x6b666f6cULL);
        std::shuffle(members.begin(), members.end(), rng);
        for (int m : members) {
            folds[static_cast<std::size_t>(cursor % k)].push_back(m);
            ++cursor;
        }
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

void save_split(const StratifiedSplit& split, const Dataset& data, const std::string& path) {
    json doc;
    auto ids = [&](const std::vector<int>& idx) {
        json arr = json::array();
        for (int i : idx) arr.push_back(data.conversations[static_cast<std::size_t>(i)].conversation_id);
        return arr;
    };
    doc["train"] = ids(split.train);
    doc["test"] = ids(split.test);
    std::ofstream out(path);
    if (!out) fail(errc::invalid_input, "cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
}

StratifiedSplit load_split(const Dataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::data_not_found, "split file not found: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail(errc::parse, "split file '" + path + "': " + e.what());
    }
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < data.conversations.size(); ++i) {
        if (!by_id.emplace(data.conversations[i].conversation_id, static_cast<int>(i)).second) {
            fail(errc::invalid_input, "duplicate conversation_id '" +
                                          data.conversations[i].conversation_id +
                                          "' prevents split loading");
        }
    }
    auto resolve = [&](const json& arr, std::vector<int>& out) {
        for (const auto& id : arr) {
            const auto it = by_id.find(id.get<std::string>());
            if (it == by_id.end()) {
                fail(errc::invalid_input,
                     "split references unknown conversation '" + id.get<std::string>() + "'");
            }
            out.push_back(it->second);
        }
        std::sort(out.begin(), out.end());
    };
    StratifiedSplit split;
    resolve(doc.at("train"), split.train);
    resolve(doc.at("test"), split.test);
    return split;
}

}  // namespace driftsurv
