#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "garpp/attacks.hpp"
#include "garpp/errors.hpp"
#include "garpp/fit.hpp"
#include "garpp/rng.hpp"
#include "garpp/rules.hpp"
#include "garpp/simulator.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

/// The multi-krum variance-control ratio appears with two denominators in
/// the inner sum: m in the stated formula, n - 2f - 2 in the closing bound
/// of its derivation. Both are exposed; lemma_statement is the default.
enum class EtaVariant { lemma_statement, proof_body };

inline std::optional<EtaVariant> parse_eta_variant(std::string_view name) {
    if (name == "lemma_statement") return EtaVariant::lemma_statement;
    if (name == "proof_body") return EtaVariant::proof_body;
    return std::nullopt;
}

/// eta(n, f) = sqrt(2 * (n - f + (f*m + f^2*(m+1)) / D)) with D = m
/// (lemma_statement) or D = n - 2f - 2 (proof_body).
inline double eta(int n, int f, int m, EtaVariant variant) {
    if (f < 0) throw precondition_error("eta: f must be >= 0");
    if (m < 1 || m > n - f - 2) {
        throw precondition_error("eta: m must be in [1, n-f-2]");
    }
    const double denom = variant == EtaVariant::lemma_statement
                             ? static_cast<double>(m)
                             : static_cast<double>(n - 2 * f - 2);
    if (denom <= 0) {
        throw precondition_error("eta: denominator n-2f-2 must be > 0, got " +
                                 std::to_string(static_cast<int>(denom)));
    }
    const double fm = static_cast<double>(f) * m;
    const double f2m1 = static_cast<double>(f) * f * (m + 1);
    return std::sqrt(2.0 * (static_cast<double>(n - f) + (fm + f2m1) / denom));
}

struct VarianceCondition {
    bool holds = false;        // eta * sqrt(d) * sigma < grad_norm (strict)
    bool alpha_defined = false;
    double sin_alpha = std::numeric_limits<double>::quiet_NaN();
};

inline VarianceCondition check_variance_condition(double eta_value, int d, double sigma,
                                                  double grad_norm) {
    if (eta_value < 0 || d < 1 || sigma < 0 || grad_norm <= 0) {
        throw precondition_error("check_variance_condition: needs eta, sigma >= 0, d >= 1, grad_norm > 0");
    }
    VarianceCondition c;
    const double lhs = eta_value * std::sqrt(static_cast<double>(d)) * sigma;
    c.holds = lhs < grad_norm;
    if (c.holds) {
        c.alpha_defined = true;
        c.sin_alpha = lhs / grad_norm;
    }
    return c;
}

enum class Decision { pass, fail, indeterminate };

inline std::string_view decision_name(Decision d) {
    switch (d) {
        case Decision::pass: return "pass";
        case Decision::fail: return "fail";
        case Decision::indeterminate: return "indeterminate";
    }
    return "?";
}

/// Monte-Carlo estimate of the inner-product condition <E GAR, g> against
/// the (1 - sin alpha) * ||g||^2 bound, plus empirical moments of ||GAR||^r
/// for r = 2, 3, 4 (finiteness proxy for the moment condition).
struct ResilienceEstimate {
    double inner_product_lhs = 0.0;
    double halfwidth = 0.0;      // 3 standard errors of the lhs estimate
    double bound_rhs = std::numeric_limits<double>::quiet_NaN();
    double eta_value = 0.0;
    bool alpha_defined = false;
    double sin_alpha = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();  // radians
    int trials = 0;
    Decision decision = Decision::indeterminate;
    double moment_r2 = 0.0;
    double moment_r3 = 0.0;
    double moment_r4 = 0.0;
};

/// Per trial: draw n - f honest gradients ~ N(g, sigma^2 I), let the attack
/// see them, aggregate with the rule, and accumulate <GAR, g>. The decision
/// rule is lhs - halfwidth > rhs; if the variance condition fails, alpha is
/// undefined and the decision is indeterminate. The eta bound uses the
/// default multi-krum width m = n - f - 2.
inline ResilienceEstimate estimate_weak_condition(
    Rule rule, int n, int f, const AttackSpec& attack, const GradientVector& g, double sigma,
    int trials, std::uint64_t seed, EtaVariant variant = EtaVariant::lemma_statement) {
    if (trials < 100) throw precondition_error("estimate_weak_condition: trials must be >= 100");
    if (n < 3 || f < 0 || f >= n) throw precondition_error("estimate_weak_condition: bad (n, f)");
    if (g.empty()) throw precondition_error("estimate_weak_condition: g must be nonempty");
    ensure_finite(g, "estimate_weak_condition g");
    if (sigma < 0) throw precondition_error("estimate_weak_condition: sigma must be >= 0");
    attack.validate();

    const int d = static_cast<int>(g.size());
    const double gnorm = l2_norm(g);
    if (gnorm <= 0) throw precondition_error("estimate_weak_condition: ||g|| must be > 0");

    ResilienceEstimate est;
    est.trials = trials;
    est.eta_value = eta(n, f, n - f - 2, variant);
    const VarianceCondition cond = check_variance_condition(est.eta_value, d, sigma, gnorm);
    est.alpha_defined = cond.alpha_defined;
    if (cond.alpha_defined) {
        est.sin_alpha = cond.sin_alpha;
        est.alpha = std::asin(cond.sin_alpha);
        est.bound_rhs = (1.0 - cond.sin_alpha) * gnorm * gnorm;
    }

    const int honest = n - f;
    long double sum_ip = 0.0L, sum_ip_sq = 0.0L;
    long double sum_r2 = 0.0L, sum_r3 = 0.0L, sum_r4 = 0.0L;
    std::vector<GradientVector> gradients;
    gradients.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < trials; ++t) {
        gradients.clear();
        Rng honest_stream(derive_seed(seed, static_cast<std::uint64_t>(t), 0));
        for (int w = 0; w < honest; ++w) {
            GradientVector v(g);
            for (double& c : v) c += honest_stream.normal(0.0, sigma);
            gradients.push_back(std::move(v));
        }
        if (f > 0) {
            Rng attack_stream(derive_seed(seed, static_cast<std::uint64_t>(t), 1));
            AttackResult byz = gen_byzantine(attack,
                                             std::span<const GradientVector>(gradients.data(),
                                                                             gradients.size()),
                                             f, attack_stream);
            for (auto& v : byz.vectors) gradients.push_back(std::move(v));
        }
        const GradientVector out = aggregate(rule, gradients, f);
        const double ip = dot(out, g);
        sum_ip += ip;
        sum_ip_sq += static_cast<long double>(ip) * ip;
        const double norm = l2_norm(out);
        const double n2 = norm * norm;
        sum_r2 += n2;
        sum_r3 += n2 * norm;
        sum_r4 += n2 * n2;
    }

    const long double tn = static_cast<long double>(trials);
    est.inner_product_lhs = static_cast<double>(sum_ip / tn);
    const long double var =
        (sum_ip_sq - sum_ip * sum_ip / tn) / static_cast<long double>(trials - 1);
    est.halfwidth = 3.0 * static_cast<double>(std::sqrt(std::max(var, 0.0L) / tn));
    est.moment_r2 = static_cast<double>(sum_r2 / tn);
    est.moment_r3 = static_cast<double>(sum_r3 / tn);
    est.moment_r4 = static_cast<double>(sum_r4 / tn);

    if (!cond.alpha_defined) {
        est.decision = Decision::indeterminate;
    } else {
        // >= so the noise-free case (lhs equal to the bound exactly) passes;
        // with noise the halfwidth makes equality a measure-zero event.
        est.decision = est.inner_product_lhs - est.halfwidth >= est.bound_rhs ? Decision::pass
                                                                              : Decision::fail;
    }
    return est;
}

/// Per-coordinate attack leeway: for each coordinate the smallest (over
/// honest workers) mean absolute gap between the aggregate and that worker's
/// gradient.
struct LeewayReport {
    std::vector<double> per_coordinate;
    double max_coordinate = 0.0;
};

inline LeewayReport leeway_check(Rule rule, int n, int f, const AttackSpec& attack,
                                 const GradientVector& g, double sigma, int trials,
                                 std::uint64_t seed) {
    if (trials < 100) throw precondition_error("leeway_check: trials must be >= 100");
    if (n < 3 || f < 0 || f >= n) throw precondition_error("leeway_check: bad (n, f)");
    if (g.empty()) throw precondition_error("leeway_check: g must be nonempty");
    attack.validate();

    const std::size_t d = g.size();
    const int honest = n - f;
    std::vector<long double> acc(d * static_cast<std::size_t>(honest), 0.0L);
    std::vector<GradientVector> gradients;
    gradients.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < trials; ++t) {
        gradients.clear();
        Rng honest_stream(derive_seed(seed, static_cast<std::uint64_t>(t), 0));
        for (int w = 0; w < honest; ++w) {
            GradientVector v(g);
            for (double& c : v) c += honest_stream.normal(0.0, sigma);
            gradients.push_back(std::move(v));
        }
        if (f > 0) {
            Rng attack_stream(derive_seed(seed, static_cast<std::uint64_t>(t), 1));
            AttackResult byz = gen_byzantine(attack,
                                             std::span<const GradientVector>(gradients.data(),
                                                                             gradients.size()),
                                             f, attack_stream);
            for (auto& v : byz.vectors) gradients.push_back(std::move(v));
        }
        const GradientVector out = aggregate(rule, gradients, f);
        for (int w = 0; w < honest; ++w) {
            const GradientVector& hw = gradients[static_cast<std::size_t>(w)];
            for (std::size_t j = 0; j < d; ++j) {
                acc[j * static_cast<std::size_t>(honest) + static_cast<std::size_t>(w)] +=
                    std::abs(out[j] - hw[j]);
            }
        }
    }

    LeewayReport report;
    report.per_coordinate.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        long double best = acc[j * static_cast<std::size_t>(honest)];
        for (int w = 1; w < honest; ++w) {
            best = std::min(best, acc[j * static_cast<std::size_t>(honest) +
                                      static_cast<std::size_t>(w)]);
        }
        report.per_coordinate[j] = static_cast<double>(best / static_cast<long double>(trials));
    }
    report.max_coordinate = 0.0;
    for (double v : report.per_coordinate) report.max_coordinate = std::max(report.max_coordinate, v);
    return report;
}

/// Max-coordinate leeway across a dimension sweep with ||g|| = 1 and the
/// total gradient-noise budget held fixed (per-coordinate sigma = sigma0 /
/// sqrt(d), so the variance condition is equally tight at every d), plus the
/// fitted log-log d-exponent.
struct LeewayScaling {
    std::vector<int> dims;
    std::vector<double> max_leeway;
    double fitted_exponent = 0.0;
};

inline LeewayScaling leeway_scaling(Rule rule, int n, int f, const AttackSpec& attack,
                                    double sigma0, int trials, std::uint64_t seed,
                                    std::span<const int> dims) {
    if (dims.size() < 3) throw precondition_error("leeway_scaling: need at least 3 dimensions");
    LeewayScaling out;
    std::vector<double> xs, ys;
    for (int d : dims) {
        if (d < 1) throw precondition_error("leeway_scaling: d must be >= 1");
        GradientVector g(static_cast<std::size_t>(d),
                         1.0 / std::sqrt(static_cast<double>(d)));
        const double sigma_d = sigma0 / std::sqrt(static_cast<double>(d));
        const LeewayReport rep =
            leeway_check(rule, n, f, attack, g, sigma_d, trials,
                         derive_seed(seed, static_cast<std::uint64_t>(d)));
        out.dims.push_back(d);
        out.max_leeway.push_back(rep.max_coordinate);
        xs.push_back(static_cast<double>(d));
        ys.push_back(rep.max_coordinate);
    }
    out.fitted_exponent = fit_loglog_slope(xs, ys);
    return out;
}

}  // namespace garpp
