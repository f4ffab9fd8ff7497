#pragma once

// JSON schemas for the CLI: simulation config (strict: unknown keys are
// rejected at every level), plus the serializers for the simulation summary
// and the resilience report.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "garpp/attacks.hpp"
#include "garpp/errors.hpp"
#include "garpp/resilience.hpp"
#include "garpp/rules.hpp"
#include "garpp/simulator.hpp"

namespace garpp {

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    std::string offenders;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            if (!offenders.empty()) offenders += ", ";
            offenders += "'" + it.key() + "'";
        }
    }
    if (!offenders.empty()) {
        throw format_error("unknown key(s) in " + where + ": " + offenders);
    }
}

inline void require_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw format_error(where + " must be a JSON object");
}

inline double number_at(const nlohmann::json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) throw format_error("'" + key + "' must be a number");
    return obj.at(key).get<double>();
}

inline int int_at(const nlohmann::json& obj, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_integer()) throw format_error("'" + key + "' must be an integer");
    return obj.at(key).get<int>();
}

inline std::string string_at(const nlohmann::json& obj, const std::string& key,
                             const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) throw format_error("'" + key + "' must be a string");
    return obj.at(key).get<std::string>();
}

/// Scalar broadcast or explicit array of length d.
inline GradientVector vector_at(const nlohmann::json& obj, const std::string& key, int d,
                                double fallback) {
    GradientVector v(static_cast<std::size_t>(d), fallback);
    if (!obj.contains(key)) return v;
    const nlohmann::json& node = obj.at(key);
    if (node.is_number()) {
        v.assign(static_cast<std::size_t>(d), node.get<double>());
    } else if (node.is_array()) {
        if (node.size() != static_cast<std::size_t>(d)) {
            throw format_error("'" + key + "' must have length d = " + std::to_string(d));
        }
        for (std::size_t i = 0; i < node.size(); ++i) {
            if (!node[i].is_number()) throw format_error("'" + key + "' must contain numbers");
            v[i] = node[i].get<double>();
        }
    } else {
        throw format_error("'" + key + "' must be a number or an array of numbers");
    }
    ensure_finite(v, "'" + key + "'");
    return v;
}

}  // namespace detail

inline AttackSpec parse_attack(const nlohmann::json& j) {
    detail::require_object(j, "attack");
    detail::reject_unknown_keys(j, {"kind", "params"}, "attack");
    AttackSpec spec;
    const std::string kind = detail::string_at(j, "kind", "none");
    const auto parsed = parse_attack_kind(kind);
    if (!parsed) {
        throw format_error("unknown attack kind '" + kind +
                           "' (valid: none, random_gaussian, reversed, constant_large, "
                           "little_is_enough, mimic_regression)");
    }
    spec.kind = *parsed;
    if (j.contains("params")) {
        detail::require_object(j.at("params"), "attack params");
        for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) {
            if (!it.value().is_number()) {
                throw format_error("attack parameter '" + it.key() + "' must be a number");
            }
            spec.params[it.key()] = it.value().get<double>();
        }
    }
    try {
        spec.validate();
    } catch (const precondition_error& e) {
        throw format_error(e.what());
    }
    return spec;
}

inline CostModel parse_cost_model(const nlohmann::json& j) {
    detail::require_object(j, "model");
    detail::reject_unknown_keys(j, {"kind", "d", "optimum", "curvature", "amp", "freq"}, "model");
    CostModel model;
    const std::string kind = detail::string_at(j, "kind", "quadratic");
    if (kind == "quadratic") {
        model.kind = CostKind::quadratic;
        if (j.contains("amp") || j.contains("freq")) {
            throw format_error("model keys 'amp'/'freq' only apply to kind 'nonconvex_sine'");
        }
    } else if (kind == "nonconvex_sine") {
        model.kind = CostKind::nonconvex_sine;
    } else {
        throw format_error("unknown model kind '" + kind +
                           "' (valid: quadratic, nonconvex_sine)");
    }
    model.d = detail::int_at(j, "d", 10);
    if (model.d < 1) throw format_error("model 'd' must be >= 1");
    model.optimum = detail::vector_at(j, "optimum", model.d, 0.0);
    model.curvature = detail::vector_at(j, "curvature", model.d, 1.0);
    model.amp = detail::number_at(j, "amp", 0.0);
    model.freq = detail::number_at(j, "freq", model.kind == CostKind::nonconvex_sine ? 1.0 : 0.0);
    try {
        model.validate();
    } catch (const precondition_error& e) {
        throw format_error(e.what());
    }
    return model;
}

inline LrSchedule parse_lr(const nlohmann::json& j) {
    detail::require_object(j, "lr");
    detail::reject_unknown_keys(j, {"kind", "gamma0", "k0"}, "lr");
    LrSchedule lr;
    const std::string kind = detail::string_at(j, "kind", "constant");
    if (kind == "constant") {
        lr.kind = LrSchedule::Kind::constant;
        if (j.contains("k0")) throw format_error("lr key 'k0' only applies to kind 'inverse_decay'");
    } else if (kind == "inverse_decay") {
        lr.kind = LrSchedule::Kind::inverse_decay;
        lr.k0 = detail::number_at(j, "k0", 100.0);
    } else {
        throw format_error("unknown lr kind '" + kind + "' (valid: constant, inverse_decay)");
    }
    lr.gamma0 = detail::number_at(j, "gamma0", 0.1);
    try {
        lr.validate();
    } catch (const precondition_error& e) {
        throw format_error(e.what());
    }
    return lr;
}

/// Parsed simulation job: config plus the configured output paths.
struct SimJob {
    SimConfig config;
    std::string metrics_csv = "metrics.csv";
    std::string summary_json = "summary.json";
};

inline SimJob parse_sim_job(const nlohmann::json& j) {
    detail::require_object(j, "config");
    detail::reject_unknown_keys(j,
                                {"n", "f", "rule", "m", "attack", "model", "sigma", "batch",
                                 "steps", "lr", "seed", "threshold", "x0", "metrics_csv",
                                 "summary_json"},
                                "config");
    SimJob job;
    SimConfig& c = job.config;
    c.n = detail::int_at(j, "n", 11);
    c.f = detail::int_at(j, "f", 0);
    const std::string rule = detail::string_at(j, "rule", "average");
    const auto parsed_rule = parse_rule(rule);
    if (!parsed_rule) {
        throw format_error("unknown rule '" + rule + "' (valid: " + kValidRuleNames + ")");
    }
    c.rule = *parsed_rule;
    c.m = detail::int_at(j, "m", 0);
    if (j.contains("attack")) c.attack = parse_attack(j.at("attack"));
    c.model = j.contains("model") ? parse_cost_model(j.at("model")) : parse_cost_model(nlohmann::json::object());
    c.sigma = detail::number_at(j, "sigma", 0.0);
    c.batch = detail::int_at(j, "batch", 1);
    c.steps = detail::int_at(j, "steps", 100);
    c.lr = j.contains("lr") ? parse_lr(j.at("lr")) : LrSchedule{};
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
            throw format_error("'seed' must be an integer");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.threshold = detail::number_at(j, "threshold", 1e-3);
    if (j.contains("x0")) c.x0 = detail::vector_at(j, "x0", c.model.d, 0.0);
    job.metrics_csv = detail::string_at(j, "metrics_csv", job.metrics_csv);
    job.summary_json = detail::string_at(j, "summary_json", job.summary_json);
    try {
        c.validate();
    } catch (const precondition_error& e) {
        throw format_error(e.what());
    }
    return job;
}

inline nlohmann::json summary_json(const SimMetrics& metrics) {
    nlohmann::json j;
    if (metrics.steps_to_threshold) {
        j["steps_to_threshold"] = *metrics.steps_to_threshold;
    } else {
        j["steps_to_threshold"] = nullptr;
    }
    j["divergent"] = metrics.divergent;
    if (metrics.divergence_step) {
        j["divergence_step"] = *metrics.divergence_step;
    } else {
        j["divergence_step"] = nullptr;
    }
    j["steps_executed"] = metrics.steps.size();
    if (std::isfinite(metrics.final_loss)) {
        j["final_loss"] = metrics.final_loss;
    } else {
        j["final_loss"] = nullptr;
    }
    return j;
}

inline nlohmann::json resilience_report_json(const ResilienceEstimate& est) {
    nlohmann::json j;
    j["trials"] = est.trials;
    j["eta"] = est.eta_value;
    j["inner_product_lhs"] = est.inner_product_lhs;
    j["halfwidth"] = est.halfwidth;
    if (est.alpha_defined) {
        j["alpha"] = est.alpha;
        j["sin_alpha"] = est.sin_alpha;
        j["bound_rhs"] = est.bound_rhs;
    } else {
        j["alpha"] = nullptr;
        j["sin_alpha"] = nullptr;
        j["bound_rhs"] = nullptr;
    }
    j["pass"] = std::string(decision_name(est.decision));
    j["moments"] = {{"r2", est.moment_r2}, {"r3", est.moment_r3}, {"r4", est.moment_r4}};
    return j;
}

}  // namespace garpp
