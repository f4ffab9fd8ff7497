#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "garpp/errors.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

enum class Rule {
    average,
    median,
    krum,         // multi-krum with m = 1
    multi_krum,
    multi_bulyan,
    noop_copy,    // returns the first gradient; benchmark baseline only
};

inline std::string_view rule_name(Rule r) {
    switch (r) {
        case Rule::average: return "average";
        case Rule::median: return "median";
        case Rule::krum: return "krum";
        case Rule::multi_krum: return "multi-krum";
        case Rule::multi_bulyan: return "multi-bulyan";
        case Rule::noop_copy: return "noop";
    }
    return "?";
}

inline constexpr const char* kValidRuleNames = "average, median, krum, multi-krum, multi-bulyan, noop";

inline std::optional<Rule> parse_rule(std::string_view name) {
    if (name == "average") return Rule::average;
    if (name == "median") return Rule::median;
    if (name == "krum") return Rule::krum;
    if (name == "multi-krum") return Rule::multi_krum;
    if (name == "multi-bulyan") return Rule::multi_bulyan;
    if (name == "noop") return Rule::noop_copy;
    return std::nullopt;
}

/// Largest declared Byzantine count a rule admits with n workers.
/// average tolerates none in practice; n - 1 is the nominal bound (the rule
/// stays well defined, it just offers no resilience).
inline int max_f(int n, Rule rule) {
    if (n < 3) throw precondition_error("max_f: n must be >= 3, got " + std::to_string(n));
    switch (rule) {
        case Rule::krum:
        case Rule::multi_krum: return (n - 3) / 2;
        case Rule::multi_bulyan: return (n - 3) / 4;
        case Rule::median: return (n + 1) / 2 - 1;
        case Rule::average: return n - 1;
        case Rule::noop_copy:
            throw precondition_error("max_f: noop is a benchmark baseline, not an aggregation contract");
    }
    throw precondition_error("max_f: unknown rule");
}

/// The contract numbers shared by the rules: worker count n, declared
/// Byzantine bound f, multi-krum width m, and the multi-bulyan loop and
/// averaging widths theta = n - 2f - 2, beta = theta - 2f.
struct GarParams {
    int n = 0;
    int f = 0;
    int m = 0;
    int theta = 0;
    int beta = 0;
};

/// Validates n >= 2f + 3 and 1 <= m <= n - f - 2; m == 0 selects the
/// default width n - f - 2.
inline GarParams make_multi_krum_params(int n, int f, int m = 0) {
    if (f < 0) throw precondition_error("multi-krum: f must be >= 0");
    if (n < 2 * f + 3) {
        throw precondition_error("multi-krum requires n >= 2f+3 (got n = " + std::to_string(n) +
                                 ", f = " + std::to_string(f) + ")");
    }
    const int m_max = n - f - 2;
    if (m == 0) m = m_max;
    if (m < 1 || m > m_max) {
        throw precondition_error("multi-krum: m must be in [1, n-f-2] = [1, " +
                                 std::to_string(m_max) + "], got " + std::to_string(m));
    }
    return GarParams{n, f, m, 0, 0};
}

/// Validates n >= 4f + 3; fills theta = n - 2f - 2 and beta = theta - 2f.
inline GarParams make_multi_bulyan_params(int n, int f) {
    if (f < 0) throw precondition_error("multi-bulyan: f must be >= 0");
    if (n < 4 * f + 3) {
        throw precondition_error("multi-bulyan requires n >= 4f+3 (got n = " + std::to_string(n) +
                                 ", f = " + std::to_string(f) + ")");
    }
    const int theta = n - 2 * f - 2;
    const int beta = theta - 2 * f;
    return GarParams{n, f, n - f - 2, theta, beta};
}

/// One score per candidate: the sum of squared distances to its
/// neighbors_used = k - f - 2 nearest other gradients.
struct ScoreTable {
    std::vector<std::pair<std::size_t, double>> scores;  // (worker index, score)
    std::size_t neighbors_used = 0;
};

namespace detail {

/// Flattened symmetric pairwise squared-distance matrix.
class DistanceMatrix {
  public:
    explicit DistanceMatrix(std::span<const GradientVector> gradients)
        : n_(gradients.size()), cell_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double dd = l2_distance_sq(gradients[i], gradients[j]);
                cell_[i * n_ + j] = dd;
                cell_[j * n_ + i] = dd;
            }
        }
    }

    double operator()(std::size_t i, std::size_t j) const { return cell_[i * n_ + j]; }

  private:
    std::size_t n_;
    std::vector<double> cell_;
};

/// Krum scores for the candidates listed in `members` (original indices),
/// reading distances from the precomputed matrix. Neighbor sets take the
/// k - f - 2 smallest (distance, index) pairs, summed in that order.
inline std::vector<std::pair<std::size_t, double>> krum_scores_impl(
    const DistanceMatrix& dist, std::span<const std::size_t> members, int f) {
    const std::size_t k = members.size();
    const std::size_t neighbors = k - static_cast<std::size_t>(f) - 2;
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(k);
    std::vector<std::pair<double, std::size_t>> others;
    others.reserve(k - 1);
    for (std::size_t i : members) {
        others.clear();
        for (std::size_t j : members) {
            if (j != i) others.emplace_back(dist(i, j), j);
        }
        std::sort(others.begin(), others.end());
        long double acc = 0.0L;
        for (std::size_t t = 0; t < neighbors; ++t) acc += others[t].first;
        out.emplace_back(i, static_cast<double>(acc));
    }
    return out;
}

/// Positions of the m smallest scores, ties toward the lower worker index;
/// result sorted ascending by worker index.
inline std::vector<std::size_t> smallest_m(
    const std::vector<std::pair<std::size_t, double>>& scores, std::size_t m) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].second != scores[b].second) return scores[a].second < scores[b].second;
        return scores[a].first < scores[b].first;
    });
    std::vector<std::size_t> picked(m);
    for (std::size_t t = 0; t < m; ++t) picked[t] = scores[order[t]].first;
    std::sort(picked.begin(), picked.end());
    return picked;
}

inline void check_krum_size(std::size_t k, int f, std::string_view where) {
    if (f < 0) throw precondition_error(std::string(where) + ": f must be >= 0");
    if (k < static_cast<std::size_t>(f) + 3) {
        throw precondition_error(std::string(where) + ": needs at least f+3 = " +
                                 std::to_string(f + 3) + " gradients, got " + std::to_string(k));
    }
}

}  // namespace detail

/// Score every gradient by the summed squared distance to its k - f - 2
/// nearest other gradients (self excluded, ties toward the lower index).
inline ScoreTable krum_scores(std::span<const GradientVector> gradients, int f) {
    detail::check_nonempty_same_d(gradients, "krum_scores");
    detail::check_krum_size(gradients.size(), f, "krum_scores");
    detail::DistanceMatrix dist(gradients);
    std::vector<std::size_t> members(gradients.size());
    std::iota(members.begin(), members.end(), std::size_t{0});
    ScoreTable table;
    table.neighbors_used = gradients.size() - static_cast<std::size_t>(f) - 2;
    table.scores = detail::krum_scores_impl(dist, members, f);
    return table;
}

struct MultiKrumResult {
    std::size_t winner_index = 0;        // argmin score, ties toward lower index
    GradientVector output;               // average of the m selected gradients
    std::vector<std::size_t> selected;   // the m lowest-scoring indices, ascending
};

/// multi-krum: average the m lowest-scoring gradients. m == 0 selects the
/// default width k - f - 2 (so m == 1 is plain krum).
inline MultiKrumResult multi_krum(std::span<const GradientVector> gradients, int f, int m = 0) {
    detail::check_nonempty_same_d(gradients, "multi_krum");
    const GarParams p = make_multi_krum_params(static_cast<int>(gradients.size()), f, m);
    const ScoreTable table = krum_scores(gradients, f);
    MultiKrumResult res;
    res.selected = detail::smallest_m(table.scores, static_cast<std::size_t>(p.m));
    res.winner_index = detail::smallest_m(table.scores, 1).front();
    res.output = average_of(gradients, res.selected);
    return res;
}

/// multi-bulyan: theta = n - 2f - 2 rounds of multi-krum over the shrinking
/// candidate set (each round's winner removed, inner m recomputed as
/// k - f - 2), then per coordinate the average of the beta = theta - 2f
/// aggregated values closest to the coordinate-wise median of the winners.
/// Pairwise distances are computed once up front; the per-round scores use
/// the cached values, which are bit-identical to recomputing them.
inline GradientVector multi_bulyan(std::span<const GradientVector> gradients, int f) {
    detail::check_nonempty_same_d(gradients, "multi_bulyan");
    const GarParams p = make_multi_bulyan_params(static_cast<int>(gradients.size()), f);
    const std::size_t n = gradients.size();
    const std::size_t d = gradients.front().size();
    const std::size_t theta = static_cast<std::size_t>(p.theta);
    const std::size_t beta = static_cast<std::size_t>(p.beta);

    detail::DistanceMatrix dist(gradients);
    std::vector<std::size_t> alive(n);
    std::iota(alive.begin(), alive.end(), std::size_t{0});

    std::vector<GradientVector> extracted;   // per-round winner gradients
    std::vector<GradientVector> aggregated;  // per-round multi-krum averages
    extracted.reserve(theta);
    aggregated.reserve(theta);
    for (std::size_t round = 0; round < theta; ++round) {
        const std::size_t k = alive.size();
        const std::size_t m_inner = k - static_cast<std::size_t>(f) - 2;
        const auto scores = detail::krum_scores_impl(dist, alive, f);
        const std::size_t winner = detail::smallest_m(scores, 1).front();
        const std::vector<std::size_t> picked = detail::smallest_m(scores, m_inner);
        extracted.push_back(gradients[winner]);
        aggregated.push_back(average_of(gradients, picked));
        alive.erase(std::find(alive.begin(), alive.end(), winner));
    }

    const GradientVector med = coordinate_median(extracted);

    GradientVector out(d);
    std::vector<std::pair<double, std::size_t>> byDist(theta);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < theta; ++i) {
            byDist[i] = {std::abs(aggregated[i][j] - med[j]), i};
        }
        std::sort(byDist.begin(), byDist.end());
        // Same semantics as select_k_closest: beta smallest distances, ties
        // toward the lower round index, averaged in ascending round order.
        std::vector<std::size_t> rounds(beta);
        for (std::size_t t = 0; t < beta; ++t) rounds[t] = byDist[t].second;
        std::sort(rounds.begin(), rounds.end());
        long double acc = 0.0L;
        for (std::size_t r : rounds) acc += aggregated[r][j];
        out[j] = static_cast<double>(acc / static_cast<long double>(beta));
    }
    return out;
}

inline GradientVector median_gar(std::span<const GradientVector> gradients) {
    return coordinate_median(gradients);
}

inline GradientVector average_gar(std::span<const GradientVector> gradients) {
    return average(gradients);
}

/// The common aggregation entry point used by the simulator, the CLI and
/// the benchmark. m is only meaningful for multi-krum (0 = default width).
inline GradientVector aggregate(Rule rule, std::span<const GradientVector> gradients, int f,
                                int m = 0) {
    switch (rule) {
        case Rule::average: return average_gar(gradients);
        case Rule::median: return median_gar(gradients);
        case Rule::krum: return multi_krum(gradients, f, 1).output;
        case Rule::multi_krum: return multi_krum(gradients, f, m).output;
        case Rule::multi_bulyan: return multi_bulyan(gradients, f);
        case Rule::noop_copy:
            detail::check_nonempty_same_d(gradients, "noop");
            return gradients.front();
    }
    throw precondition_error("aggregate: unknown rule");
}

}  // namespace garpp
