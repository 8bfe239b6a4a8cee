#include "driftsurv/rsf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftsurv/error.hpp"
#include "driftsurv/rng.hpp"

namespace driftsurv {

namespace {

// Per-time counts for a set of rows on the grid 1..H.
struct GridCounts {
    std::vector<int> at_risk;  // n_t = #{T_i >= t}
    std::vector<int> events;   // d_t

    explicit GridCounts(int horizon)
        : at_risk(static_cast<std::size_t>(horizon) + 1, 0),
          events(static_cast<std::size_t>(horizon) + 1, 0) {}

    void add(const EventOutcome& o) {
        for (int t = 1; t <= o.event_time; ++t) ++at_risk[static_cast<std::size_t>(t)];
        if (o.event_observed) ++events[static_cast<std::size_t>(o.event_time)];
    }

    void remove_into(const EventOutcome& o, GridCounts& other) {
        for (int t = 1; t <= o.event_time; ++t) {
            --at_risk[static_cast<std::size_t>(t)];
            ++other.at_risk[static_cast<std::size_t>(t)];
        }
        if (o.event_observed) {
            --events[static_cast<std::size_t>(o.event_time)];
            ++other.events[static_cast<std::size_t>(o.event_time)];
        }
    }
};

// Two-sample log-rank chi-square from left-group vs total counts.
double logrank_statistic(const GridCounts& left, const GridCounts& total, int horizon) {
    double ome = 0.0;
    double var = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        const int n = total.at_risk[static_cast<std::size_t>(t)];
        const int d = total.events[static_cast<std::size_t>(t)];
        if (n <= 0 || d == 0) continue;
        const double share = static_cast<double>(left.at_risk[static_cast<std::size_t>(t)]) / n;
        ome += left.events[static_cast<std::size_t>(t)] - d * share;
        if (n > 1) {
            var += d * share * (1.0 - share) * (static_cast<double>(n - d) / (n - 1));
        }
    }
    if (var <= 0.0) return 0.0;
    return ome * ome / var;
}

std::vector<double> nelson_aalen_counts(const GridCounts& counts, int horizon) {
    std::vector<double> chf(static_cast<std::size_t>(horizon) + 1, 0.0);
    double h = 0.0;
    for (int t = 1; t <= horizon; ++t) {
        const int n = counts.at_risk[static_cast<std::size_t>(t)];
        const int d = counts.events[static_cast<std::size_t>(t)];
        if (n > 0 && d > 0) h += static_cast<double>(d) / n;
        chf[static_cast<std::size_t>(t)] = h;
    }
    return chf;
}

}  // namespace

std::optional<SplitChoice> best_logrank_split(const Eigen::MatrixXd& z,
                                              const std::vector<EventOutcome>& outcomes,
                                              const std::vector<int>& rows,
                                              const std::vector<int>& candidates,
                                              int min_leaf_events, int horizon) {
    GridCounts total(horizon);
    int node_events = 0;
    for (int r : rows) {
        total.add(outcomes[static_cast<std::size_t>(r)]);
        node_events += outcomes[static_cast<std::size_t>(r)].event_observed ? 1 : 0;
    }
    if (node_events < 2 * min_leaf_events) return std::nullopt;

    std::optional<SplitChoice> best;
    std::vector<int> order(rows);
    for (int feature : candidates) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = z(a, feature);
            const double vb = z(b, feature);
            return va != vb ? va < vb : a < b;
        });

        GridCounts left(horizon);
        GridCounts right = total;
        int left_events = 0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const int r = order[i];
            right.remove_into(outcomes[static_cast<std::size_t>(r)], left);
            left_events += outcomes[static_cast<std::size_t>(r)].event_observed ? 1 : 0;

            const double v = z(r, feature);
            const double v_next = z(order[i + 1], feature);
            if (v_next <= v) continue;  // only split between distinct values
            if (left_events < min_leaf_events || node_events - left_events < min_leaf_events) {
                continue;
            }
            const double stat = logrank_statistic(left, total, horizon);
            if (!best || stat > best->statistic) {
                best = SplitChoice{feature, 0.5 * (v + v_next), stat};
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const Eigen::MatrixXd& z;
    const std::vector<EventOutcome>& outcomes;
    const RSFParams& params;
    int horizon;
    std::mt19937_64& rng;
    int mtry;
    SurvivalTree tree;

    int build(std::vector<int> rows, int depth) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool depth_ok = params.max_depth < 0 || depth < params.max_depth;
        std::optional<SplitChoice> split;
        if (depth_ok && rows.size() >= 2) {
            split = best_logrank_split(z, outcomes, rows, sample_candidates(),
                                       params.min_leaf_events, horizon);
        }
        if (!split) {
            GridCounts counts(horizon);
            for (int r : rows) counts.add(outcomes[static_cast<std::size_t>(r)]);
            tree.nodes[static_cast<std::size_t>(node_id)].chf = nelson_aalen_counts(counts, horizon);
            return node_id;
        }

        std::vector<int> left_rows, right_rows;
        for (int r : rows) {
            (z(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(node_id)].feature = split->feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = split->threshold;
        const int left_id = build(std::move(left_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = left_id;
        const int right_id = build(std::move(right_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].right = right_id;
        return node_id;
    }

    std::vector<int> sample_candidates() {
        const int p = static_cast<int>(z.cols());
        std::vector<int> all(static_cast<std::size_t>(p));
        std::iota(all.begin(), all.end(), 0);
        if (mtry >= p) return all;
        // Partial Fisher-Yates; candidates kept in draw order.
        std::vector<int> chosen;
        chosen.reserve(static_cast<std::size_t>(mtry));
        for (int i = 0; i < mtry; ++i) {
            std::uniform_int_distribution<int> pick(i, p - 1);
            const int j = pick(rng);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
            chosen.push_back(all[static_cast<std::size_t>(i)]);
        }
        return chosen;
    }
};

}  // namespace

ForestFit fit_rsf(const Eigen::MatrixXd& z, const std::vector<EventOutcome>& outcomes,
                  const FeatureSchema& schema, RSFParams params, std::uint64_t seed, int horizon) {
    const auto n = static_cast<int>(z.rows());
    if (n == 0 || outcomes.size() != static_cast<std::size_t>(n)) {
        fail(errc::invalid_input, "rsf: design and outcomes must align and be non-empty");
    }
    if (params.n_trees < 1) fail(errc::invalid_input, "rsf: n_trees must be >= 1");
    int events = 0;
    for (const auto& o : outcomes) events += o.event_observed ? 1 : 0;
    if (events == 0) fail(errc::no_events, "rsf: no events in the data");

    const int p = static_cast<int>(z.cols());
    if (params.mtry == 0) {
        params.mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p)))));
    }
    if (params.mtry < 1 || params.mtry > p) {
        fail(errc::invalid_input, "rsf: mtry must lie in [1, p]");
    }

    ForestFit forest;
    forest.schema = schema;
    forest.params = params;
    forest.seed = seed;
    forest.horizon = horizon;
    forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
    forest.oob.reserve(static_cast<std::size_t>(params.n_trees));

    for (int tree_idx = 0; tree_idx < params.n_trees; ++tree_idx) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(tree_idx));
        std::vector<int> bag(static_cast<std::size_t>(n));
        std::vector<bool> in_bag(static_cast<std::size_t>(n), false);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int i = 0; i < n; ++i) {
            bag[static_cast<std::size_t>(i)] = pick(rng);
            in_bag[static_cast<std::size_t>(bag[static_cast<std::size_t>(i)])] = true;
        }

        TreeBuilder builder{z, outcomes, params, horizon, rng, params.mtry, {}};
        builder.build(std::move(bag), 0);
        forest.trees.push_back(std::move(builder.tree));

        std::vector<int> oob;
        for (int i = 0; i < n; ++i) {
            if (!in_bag[static_cast<std::size_t>(i)]) oob.push_back(i);
        }
        forest.oob.push_back(std::move(oob));
    }
    return forest;
}

namespace {

const std::vector<double>& tree_leaf_chf(const SurvivalTree& tree, const std::vector<double>& z) {
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].leaf()) {
        const auto& n = tree.nodes[static_cast<std::size_t>(node)];
        node = z[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].chf;
}

}  // namespace

CumulativeHazardCurve rsf_predict_chf(const ForestFit& forest, const std::vector<double>& z) {
    if (static_cast<int>(z.size()) != forest.schema.size()) {
        fail(errc::schema, "rsf_predict_chf: covariate width mismatch");
    }
    CumulativeHazardCurve curve;
    curve.chf.assign(static_cast<std::size_t>(forest.horizon) + 1, 0.0);
    for (const auto& tree : forest.trees) {
        const auto& leaf = tree_leaf_chf(tree, z);
        for (std::size_t t = 0; t < curve.chf.size(); ++t) curve.chf[t] += leaf[t];
    }
    for (auto& v : curve.chf) v /= static_cast<double>(forest.trees.size());
    curve.validate();
    return curve;
}

std::vector<double> rsf_oob_mortality(const ForestFit& forest, const Eigen::MatrixXd& z) {
    const auto n = static_cast<std::size_t>(z.rows());
    std::vector<double> mortality(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<double>> sums(n);
    std::vector<int> counts(n, 0);

    for (std::size_t tree_idx = 0; tree_idx < forest.trees.size(); ++tree_idx) {
        for (int row : forest.oob[tree_idx]) {
            std::vector<double> x(static_cast<std::size_t>(z.cols()));
            for (Eigen::Index j = 0; j < z.cols(); ++j) x[static_cast<std::size_t>(j)] = z(row, j);
            const auto& leaf = tree_leaf_chf(forest.trees[tree_idx], x);
            auto& acc = sums[static_cast<std::size_t>(row)];
            if (acc.empty()) acc.assign(leaf.size(), 0.0);
            for (std::size_t t = 0; t < leaf.size(); ++t) acc[t] += leaf[t];
            ++counts[static_cast<std::size_t>(row)];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        double total = 0.0;
        for (double v : sums[i]) total += v / counts[i];
        mortality[i] = total;
    }
    return mortality;
}

}  // namespace driftsurv
