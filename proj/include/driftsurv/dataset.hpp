#pragma once
// Ingestion of line-delimited JSON turn logs, event/censoring derivation,
// counting-process expansion, and stratified splitting / k-fold machinery.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "driftsurv/schema.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

// Raw subject name -> thematic cluster. Names without an entry pass through
// unchanged (they may already be cluster names).
struct SubjectClusterMap {
    std::map<std::string, std::string> raw_to_cluster;

    const std::string& resolve(const std::string& raw) const;
};

SubjectClusterMap default_subject_clusters();
SubjectClusterMap load_subject_clusters(const std::string& path);

struct IngestOptions {
    int horizon = kDefaultHorizon;
    SubjectClusterMap clusters;
};

Dataset load_jsonl(const std::string& path, const IngestOptions& opts = {});
Dataset parse_jsonl(std::istream& in, const IngestOptions& opts = {});
void write_jsonl(const Dataset& data, const std::string& path);

EventOutcome derive_event_outcome(const ConversationRecord& conv);
std::vector<EventOutcome> derive_outcomes(const Dataset& data, const std::vector<int>& subset);

std::vector<SurvivalSample> expand_counting_process(const ConversationRecord& conv,
                                                    const FeatureSchema& schema);
std::vector<SurvivalSample> expand_dataset(const Dataset& data, const std::vector<int>& subset,
                                           const FeatureSchema& schema);

struct CellWarning {
    std::string model_id;
    std::string subject_cluster;
    int size = 0;
};

struct StratifiedSplit {
    std::vector<int> train;
    std::vector<int> test;
    std::vector<CellWarning> degenerate_cells;  // cells of size < 2, assigned to train
};

// Conversation-level split, stratified by (model_id, subject_cluster).
// Within every cell the test share deviates from test_fraction by at most
// one conversation. Pure function of (data, test_fraction, seed).
StratifiedSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed);

// Partition of `pool` into k folds stratified by the same cells; fold sizes
// differ by at most one.
std::vector<std::vector<int>> kfold_conversations(const Dataset& data,
                                                  const std::vector<int>& pool, int k,
                                                  std::uint64_t seed);

void save_split(const StratifiedSplit& split, const Dataset& data, const std::string& path);
StratifiedSplit load_split(const Dataset& data, const std::string& path);

}  // namespace driftsurv
