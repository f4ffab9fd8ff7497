#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "garpp/errors.hpp"
#include "garpp/rng.hpp"
#include "garpp/rules.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

enum class AttackKind {
    none,              // duplicates one honest draw (control condition)
    random_gaussian,   // i.i.d. N(0, scale^2) per coordinate
    reversed,          // -scale * mean(correct)
    constant_large,    // scale * (1, ..., 1)
    little_is_enough,  // mean - z * std (population convention) per coordinate
    mimic_regression,  // budgeted search for a selected-but-deviant vector
};

inline std::string_view attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::none: return "none";
        case AttackKind::random_gaussian: return "random_gaussian";
        case AttackKind::reversed: return "reversed";
        case AttackKind::constant_large: return "constant_large";
        case AttackKind::little_is_enough: return "little_is_enough";
        case AttackKind::mimic_regression: return "mimic_regression";
    }
    return "?";
}

inline std::optional<AttackKind> parse_attack_kind(std::string_view name) {
    if (name == "none") return AttackKind::none;
    if (name == "random_gaussian") return AttackKind::random_gaussian;
    if (name == "reversed") return AttackKind::reversed;
    if (name == "constant_large") return AttackKind::constant_large;
    if (name == "little_is_enough") return AttackKind::little_is_enough;
    if (name == "mimic_regression") return AttackKind::mimic_regression;
    return std::nullopt;
}

/// A named Byzantine strategy plus its numeric parameters.
///
/// Parameters by kind:
///   none             -- (no parameters)
///   random_gaussian  -- scale (per-coordinate std, >= 0)
///   reversed         -- scale (lambda, > 0)
///   constant_large   -- scale (finite)
///   little_is_enough -- z (>= 0)
///   mimic_regression -- budget (>= 1, selection tests), direction_seed,
///                       step0 (> 0, initial step as a multiple of the
///                       correct set's largest coordinate spread)
struct AttackSpec {
    AttackKind kind = AttackKind::none;
    std::map<std::string, double> params;

    double param_or(const std::string& name, double fallback) const {
        auto it = params.find(name);
        return it == params.end() ? fallback : it->second;
    }

    void validate() const {
        for (const auto& [name, value] : params) {
            if (!std::isfinite(value)) {
                throw precondition_error("attack parameter '" + name + "' is not finite");
            }
            if (!param_allowed(name)) {
                throw precondition_error("attack '" + std::string(attack_kind_name(kind)) +
                                         "' does not take parameter '" + name + "'");
            }
        }
        switch (kind) {
            case AttackKind::none: break;
            case AttackKind::random_gaussian:
                if (param_or("scale", 1.0) < 0) {
                    throw precondition_error("random_gaussian: scale must be >= 0");
                }
                break;
            case AttackKind::reversed:
                if (param_or("scale", 1.0) <= 0) {
                    throw precondition_error("reversed: scale (lambda) must be > 0");
                }
                break;
            case AttackKind::constant_large: break;
            case AttackKind::little_is_enough:
                if (param_or("z", 1.5) < 0) {
                    throw precondition_error("little_is_enough: z must be >= 0");
                }
                break;
            case AttackKind::mimic_regression:
                if (param_or("budget", 128.0) < 1) {
                    throw precondition_error("mimic_regression: budget must be >= 1");
                }
                if (param_or("step0", 1.0) <= 0) {
                    throw precondition_error("mimic_regression: step0 must be > 0");
                }
                break;
        }
    }

  private:
    bool param_allowed(const std::string& name) const {
        switch (kind) {
            case AttackKind::none: return false;
            case AttackKind::random_gaussian: return name == "scale";
            case AttackKind::reversed: return name == "scale";
            case AttackKind::constant_large: return name == "scale";
            case AttackKind::little_is_enough: return name == "z";
            case AttackKind::mimic_regression:
                return name == "budget" || name == "direction_seed" || name == "step0";
        }
        return false;
    }
};

struct AttackResult {
    std::vector<GradientVector> vectors;
    // mimic_regression only: whether the final candidate is still inside
    // multi-krum's selected set when appended to the correct gradients.
    std::optional<bool> mimic_selected;
};

namespace detail {

inline GradientVector coordinate_mean_std(std::span<const GradientVector> vs,
                                          GradientVector* std_out) {
    const std::size_t d = vs.front().size();
    GradientVector mu = average(vs);
    if (std_out) {
        std_out->assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            long double acc = 0.0L;
            for (const GradientVector& v : vs) {
                const double diff = v[j] - mu[j];
                acc += static_cast<long double>(diff) * diff;
            }
            // population convention: divide by the count, not count - 1
            (*std_out)[j] = static_cast<double>(std::sqrt(acc / static_cast<long double>(vs.size())));
        }
    }
    return mu;
}

/// True when the candidate (appended as the last row) survives multi-krum
/// selection with the default width.
inline bool candidate_selected(std::vector<GradientVector>& arena, int f) {
    const MultiKrumResult r = multi_krum(arena, f);
    return r.selected.back() == arena.size() - 1;
}

inline AttackResult mimic_regression_attack(const AttackSpec& spec,
                                            std::span<const GradientVector> correct, int f,
                                            Rng& rng) {
    (void)rng;  // the search itself is deterministic; direction comes from its own seed
    const std::size_t d = correct.front().size();
    const int budget = static_cast<int>(spec.param_or("budget", 128.0));
    const std::uint64_t dir_seed =
        static_cast<std::uint64_t>(spec.param_or("direction_seed", 1.0));

    if (correct.size() + 1 < static_cast<std::size_t>(2 * f + 3)) {
        throw precondition_error(
            "mimic_regression: selection harness needs |correct|+1 >= 2f+3");
    }

    // Fixed unit target direction derived from the attack's own seed.
    Rng dir_rng(derive_seed(dir_seed, 0x6d696d69ULL /* "mimi" */));
    GradientVector dir(d);
    for (std::size_t j = 0; j < d; ++j) dir[j] = dir_rng.normal();
    const double norm = l2_norm(dir);
    if (norm > 0) {
        for (double& x : dir) x /= norm;
    } else {
        dir.assign(d, 0.0);
        dir[0] = 1.0;
    }

    const GradientVector mu = detail::coordinate_mean_std(correct, nullptr);
    double spread = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double lo = correct[0][j], hi = correct[0][j];
        for (const GradientVector& v : correct) {
            lo = std::min(lo, v[j]);
            hi = std::max(hi, v[j]);
        }
        spread = std::max(spread, hi - lo);
    }
    double step = spec.param_or("step0", 1.0) * std::max(spread, 1e-9);

    std::vector<GradientVector> arena(correct.begin(), correct.end());
    arena.push_back(mu);
    GradientVector& cand = arena.back();

    int evals = 0;
    bool current_selected = candidate_selected(arena, f);
    ++evals;
    // Pattern-search coordinate descent along the target direction: a move
    // is kept iff the candidate remains inside the selected set; a sweep
    // with no accepted move halves the step.
    while (evals < budget && step > 1e-12 * std::max(spread, 1e-9)) {
        bool moved = false;
        for (std::size_t j = 0; j < d && evals < budget; ++j) {
            if (dir[j] == 0.0) continue;
            const double old = cand[j];
            cand[j] = old + step * dir[j];
            ++evals;
            if (candidate_selected(arena, f)) {
                current_selected = true;
                moved = true;
            } else {
                cand[j] = old;
            }
        }
        if (!moved) step *= 0.5;
    }

    AttackResult res;
    res.mimic_selected = current_selected;
    res.vectors.assign(static_cast<std::size_t>(f), cand);
    return res;
}

}  // namespace detail

/// Produce the f Byzantine gradients for one aggregation step. The adversary
/// is omniscient: it sees every correct gradient of the step. Colluding
/// deterministic kinds (reversed, constant_large, little_is_enough,
/// mimic_regression) return f identical vectors; random_gaussian draws each
/// vector independently from the given stream.
inline AttackResult gen_byzantine(const AttackSpec& spec, std::span<const GradientVector> correct,
                                  int f, Rng& rng) {
    spec.validate();
    if (f < 0) throw precondition_error("gen_byzantine: f must be >= 0");
    AttackResult res;
    if (f == 0) return res;
    if (correct.empty()) {
        throw precondition_error("gen_byzantine: f > 0 requires a nonempty correct set");
    }
    detail::check_nonempty_same_d(correct, "gen_byzantine");
    const std::size_t d = correct.front().size();
    const std::size_t count = static_cast<std::size_t>(f);

    switch (spec.kind) {
        case AttackKind::none: {
            const std::size_t pick = rng.below(correct.size());
            res.vectors.assign(count, correct[pick]);
            return res;
        }
        case AttackKind::random_gaussian: {
            const double scale = spec.param_or("scale", 1.0);
            res.vectors.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                GradientVector v(d);
                for (std::size_t j = 0; j < d; ++j) v[j] = rng.normal(0.0, scale);
                res.vectors.push_back(std::move(v));
            }
            return res;
        }
        case AttackKind::reversed: {
            const double lambda = spec.param_or("scale", 1.0);
            GradientVector v = average(correct);
            for (double& x : v) x = -lambda * x;
            res.vectors.assign(count, v);
            return res;
        }
        case AttackKind::constant_large: {
            const double scale = spec.param_or("scale", 1e6);
            res.vectors.assign(count, GradientVector(d, scale));
            return res;
        }
        case AttackKind::little_is_enough: {
            const double z = spec.param_or("z", 1.5);
            GradientVector sd;
            GradientVector v = detail::coordinate_mean_std(correct, &sd);
            for (std::size_t j = 0; j < d; ++j) v[j] -= z * sd[j];
            res.vectors.assign(count, v);
            return res;
        }
        case AttackKind::mimic_regression:
            return detail::mimic_regression_attack(spec, correct, f, rng);
    }
    throw precondition_error("gen_byzantine: unknown attack kind");
}

}  // namespace garpp
