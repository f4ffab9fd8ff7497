#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garpp/attacks.hpp"
#include "garpp/errors.hpp"
#include "garpp/rng.hpp"
#include "garpp/rules.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

enum class CostKind { quadratic, nonconvex_sine };

/// Analytic cost with diagonal curvature:
///   quadratic:       Q(x) = 1/2 * sum_j A_j (x_j - x*_j)^2
///   nonconvex_sine:  Q(x) = quadratic + amp * sum_j sin(freq * (x_j - x*_j))
struct CostModel {
    CostKind kind = CostKind::quadratic;
    int d = 0;
    GradientVector optimum;    // x*
    GradientVector curvature;  // A, per coordinate, > 0
    double amp = 0.0;          // nonconvex_sine only
    double freq = 0.0;         // nonconvex_sine only

    void validate() const {
        if (d < 1) throw precondition_error("cost model: d must be >= 1");
        if (optimum.size() != static_cast<std::size_t>(d) ||
            curvature.size() != static_cast<std::size_t>(d)) {
            throw precondition_error("cost model: optimum/curvature must have length d");
        }
        ensure_finite(optimum, "cost model optimum");
        ensure_finite(curvature, "cost model curvature");
        for (double a : curvature) {
            if (a <= 0) throw precondition_error("cost model: curvature must be > 0");
        }
        if (kind == CostKind::nonconvex_sine) {
            if (!std::isfinite(amp) || amp < 0) {
                throw precondition_error("cost model: amp must be finite and >= 0");
            }
            if (!std::isfinite(freq) || freq <= 0) {
                throw precondition_error("cost model: freq must be > 0");
            }
        }
    }
};

inline double cost_value(const CostModel& model, const GradientVector& x) {
    if (x.size() != static_cast<std::size_t>(model.d)) {
        throw precondition_error("cost_value: dimension mismatch");
    }
    long double acc = 0.0L;
    for (int j = 0; j < model.d; ++j) {
        const double e = x[j] - model.optimum[j];
        acc += 0.5L * model.curvature[j] * e * e;
        if (model.kind == CostKind::nonconvex_sine) {
            acc += static_cast<long double>(model.amp) * std::sin(model.freq * e);
        }
    }
    return static_cast<double>(acc);
}

/// Exact gradient of the cost model at x.
inline GradientVector true_gradient(const CostModel& model, const GradientVector& x) {
    if (x.size() != static_cast<std::size_t>(model.d)) {
        throw precondition_error("true_gradient: dimension mismatch");
    }
    GradientVector g(x.size());
    for (int j = 0; j < model.d; ++j) {
        const double e = x[j] - model.optimum[j];
        g[j] = model.curvature[j] * e;
        if (model.kind == CostKind::nonconvex_sine) {
            g[j] += model.amp * model.freq * std::cos(model.freq * e);
        }
    }
    return g;
}

/// Honest worker draw: true gradient plus N(0, (sigma/sqrt(b))^2) noise per
/// coordinate; unbiased by construction.
inline GradientVector stochastic_gradient(const CostModel& model, const GradientVector& x,
                                          double sigma, int batch, Rng& rng) {
    if (sigma < 0) throw precondition_error("stochastic_gradient: sigma must be >= 0");
    if (batch < 1) throw precondition_error("stochastic_gradient: batch must be >= 1");
    GradientVector g = true_gradient(model, x);
    if (sigma > 0) {
        const double noise = sigma / std::sqrt(static_cast<double>(batch));
        for (double& v : g) v += rng.normal(0.0, noise);
    }
    return g;
}

struct LrSchedule {
    enum class Kind { constant, inverse_decay } kind = Kind::constant;
    double gamma0 = 0.1;
    double k0 = 1.0;  // inverse_decay: gamma_k = gamma0 / (1 + k / k0)

    double at(int step) const {
        if (kind == Kind::constant) return gamma0;
        return gamma0 / (1.0 + static_cast<double>(step) / k0);
    }

    void validate() const {
        if (!std::isfinite(gamma0) || gamma0 <= 0) {
            throw precondition_error("learning rate: gamma0 must be > 0");
        }
        if (kind == Kind::inverse_decay && (!std::isfinite(k0) || k0 <= 0)) {
            throw precondition_error("learning rate: k0 must be > 0");
        }
    }
};

/// Full description of one parameter-server run.
struct SimConfig {
    int n = 11;
    int f = 0;
    Rule rule = Rule::average;
    int m = 0;  // multi-krum width, 0 = default
    AttackSpec attack;
    CostModel model;
    double sigma = 0.0;
    int batch = 1;
    int steps = 100;
    LrSchedule lr;
    std::uint64_t seed = 1;
    double threshold = 1e-3;
    std::optional<GradientVector> x0;  // default: optimum + 1 per coordinate

    void validate() const {
        if (n < 1) throw precondition_error("sim config: n must be >= 1");
        if (steps < 0) throw precondition_error("sim config: steps must be >= 0");
        if (f < 0 || f > max_f(n, rule)) {
            throw precondition_error("sim config: f = " + std::to_string(f) +
                                     " exceeds max_f(" + std::to_string(n) + ", " +
                                     std::string(rule_name(rule)) + ") = " +
                                     std::to_string(max_f(n, rule)));
        }
        if (sigma < 0) throw precondition_error("sim config: sigma must be >= 0");
        if (batch < 1) throw precondition_error("sim config: batch must be >= 1");
        if (!std::isfinite(threshold)) throw precondition_error("sim config: threshold must be finite");
        model.validate();
        lr.validate();
        attack.validate();
        if (x0) {
            if (x0->size() != static_cast<std::size_t>(model.d)) {
                throw precondition_error("sim config: x0 must have length d");
            }
            ensure_finite(*x0, "sim config x0");
        }
        if (rule == Rule::multi_krum && m != 0) {
            make_multi_krum_params(n, f, m);
        }
    }
};

struct StepRecord {
    double loss = 0.0;       // Q(x_k), recorded before the k-th update
    double grad_norm = 0.0;  // ||grad Q(x_k)||
    double cosine = 0.0;     // cos(GAR output, true gradient) at x_k
};

struct SimMetrics {
    std::vector<StepRecord> steps;
    std::optional<int> steps_to_threshold;  // first step with recorded loss < threshold
    bool divergent = false;
    std::optional<int> divergence_step;
    GradientVector final_x;
    double final_loss = 0.0;
};

namespace detail {

// Byzantine substream tag; outside the 32-bit worker index range.
inline constexpr std::uint64_t kAttackStreamTag = 0xffffffff00000001ULL;

inline bool all_finite(const GradientVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace detail

/// Synchronous parameter-server loop. Per step: n - f honest workers draw
/// stochastic gradients (stream = hash(seed, step, worker)), the attack sees
/// those draws and emits f vectors, the server aggregates and applies
/// x <- x - gamma_k * GAR. Fully deterministic given the config.
inline SimMetrics run_simulation(const SimConfig& config) {
    config.validate();
    const int honest = config.n - config.f;

    GradientVector x = config.x0 ? *config.x0 : [&] {
        GradientVector v = config.model.optimum;
        for (double& c : v) c += 1.0;
        return v;
    }();

    SimMetrics metrics;
    metrics.steps.reserve(static_cast<std::size_t>(config.steps));
    std::vector<GradientVector> gradients;
    gradients.reserve(static_cast<std::size_t>(config.n));

    for (int k = 0; k < config.steps; ++k) {
        if (!detail::all_finite(x)) {
            metrics.divergent = true;
            metrics.divergence_step = k;
            break;
        }
        const double loss = cost_value(config.model, x);
        const GradientVector g_true = true_gradient(config.model, x);
        if (!std::isfinite(loss) || !detail::all_finite(g_true)) {
            metrics.divergent = true;
            metrics.divergence_step = k;
            break;
        }

        gradients.clear();
        for (int w = 0; w < honest; ++w) {
            Rng stream(derive_seed(config.seed, static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(w)));
            gradients.push_back(
                stochastic_gradient(config.model, x, config.sigma, config.batch, stream));
        }
        if (config.f > 0) {
            Rng attack_stream(derive_seed(config.seed, static_cast<std::uint64_t>(k),
                                          detail::kAttackStreamTag));
            AttackResult byz = gen_byzantine(config.attack,
                                             std::span<const GradientVector>(gradients.data(),
                                                                             gradients.size()),
                                             config.f, attack_stream);
            for (auto& v : byz.vectors) gradients.push_back(std::move(v));
        }

        const GradientVector out = aggregate(config.rule, gradients, config.f, config.m);

        StepRecord rec;
        rec.loss = loss;
        rec.grad_norm = l2_norm(g_true);
        const double denom = l2_norm(out) * rec.grad_norm;
        rec.cosine = denom > 0 ? std::clamp(dot(out, g_true) / denom, -1.0, 1.0) : 0.0;
        metrics.steps.push_back(rec);
        if (!metrics.steps_to_threshold && loss < config.threshold) {
            metrics.steps_to_threshold = k;
        }

        const double gamma = config.lr.at(k);
        for (int j = 0; j < config.model.d; ++j) {
            x[static_cast<std::size_t>(j)] -= gamma * out[static_cast<std::size_t>(j)];
        }
    }

    metrics.final_x = x;
    metrics.final_loss = detail::all_finite(x) ? cost_value(config.model, x)
                                               : std::numeric_limits<double>::quiet_NaN();
    return metrics;
}

/// Steps-to-threshold ratio reference/candidate; > 1 means the candidate
/// converged in fewer steps.
inline double slowdown(const SimMetrics& reference, const SimMetrics& candidate) {
    if (!reference.steps_to_threshold) {
        throw precondition_error("slowdown: reference run never reached the threshold");
    }
    if (!candidate.steps_to_threshold) {
        throw precondition_error("slowdown: candidate run never reached the threshold");
    }
    const int ref = *reference.steps_to_threshold;
    const int cand = *candidate.steps_to_threshold;
    if (cand == 0) {
        if (ref == 0) return 1.0;
        throw numeric_error("slowdown: candidate reached the threshold at step 0");
    }
    return static_cast<double>(ref) / static_cast<double>(cand);
}

}  // namespace garpp
