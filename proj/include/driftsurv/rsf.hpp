#pragma once
// Random survival forest: bootstrap ensemble of binary trees split by the
// two-sample log-rank statistic, Nelson-Aalen curves in the leaves, forest
// prediction by averaging cumulative hazards. Deterministic given the seed
// (per-tree derived seed streams).

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "driftsurv/schema.hpp"
#include "driftsurv/types.hpp"

namespace driftsurv {

struct RSFParams {
    int n_trees = 500;
    int max_depth = 8;   // 0 = root only, -1 = unlimited
    int mtry = 0;        // 0 = floor(sqrt(p))
    int min_leaf_events = 5;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> chf;  // leaf only: Nelson-Aalen on the grid 0..H

    bool leaf() const { return feature < 0; }
};

struct SurvivalTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestFit {
    FeatureSchema schema;
    RSFParams params;
    std::uint64_t seed = 0;
    int horizon = kDefaultHorizon;
    std::vector<SurvivalTree> trees;
    std::vector<std::vector<int>> oob;  // per tree: sorted out-of-bag row indices
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double statistic = 0.0;
};

// Best log-rank split over candidate features, thresholds at midpoints of
// distinct sorted values. Splits leaving fewer than min_leaf_events events
// on either side are not considered; absence is signaled by nullopt.
std::optional<SplitChoice> best_logrank_split(const Eigen::MatrixXd& z,
                                              const std::vector<EventOutcome>& outcomes,
                                              const std::vector<int>& rows,
                                              const std::vector<int>& candidates,
                                              int min_leaf_events, int horizon);

ForestFit fit_rsf(const Eigen::MatrixXd& z, const std::vector<EventOutcome>& outcomes,
                  const FeatureSchema& schema, RSFParams params, std::uint64_t seed, int horizon);

CumulativeHazardCurve rsf_predict_chf(const ForestFit& forest, const std::vector<double>& z);

// Out-of-bag ensemble mortality (sum of the averaged chf over the grid);
// NaN for rows that were in-bag in every tree.
std::vector<double> rsf_oob_mortality(const ForestFit& forest, const Eigen::MatrixXd& z);

}  // namespace driftsurv
