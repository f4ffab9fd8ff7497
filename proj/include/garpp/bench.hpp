#pragma once

#include <chrono>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "garpp/errors.hpp"
#include "garpp/fit.hpp"
#include "garpp/rng.hpp"
#include "garpp/rules.hpp"
#include "garpp/vec_ops.hpp"

namespace garpp {

struct BenchRecord {
    Rule rule;
    int n = 0;
    long long d = 0;
    int f = 0;
    int run_index = 0;
    std::uint64_t elapsed_ns = 0;
};

struct BenchSummary {
    Rule rule;
    int n = 0;
    long long d = 0;
    int f = 0;
    double mean_ns = 0.0;
    double std_ns = 0.0;  // population convention over the kept runs
};

struct BenchOptions {
    int repeats = 7;
    std::uint64_t seed = 1;
    bool keep_raw = false;
};

struct BenchResult {
    std::vector<BenchSummary> summaries;
    std::vector<BenchRecord> raw;
    std::vector<std::string> skipped;  // one diagnostic per skipped cell
};

struct TimingSummary {
    std::vector<double> kept;  // surviving timings, original run order
    double mean = 0.0;
    double stddev = 0.0;
};

/// Timing protocol for one cell: drop the 2 timings furthest from the
/// median of all timings (distance ties drop the larger timing first),
/// then report mean and population std of the rest.
inline TimingSummary drop_two_summarize(std::span<const double> timings) {
    if (timings.size() < 3) {
        throw precondition_error("drop_two_summarize: need at least 3 timings");
    }
    std::vector<double> sorted(timings.begin(), timings.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double med = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    std::vector<std::size_t> order(timings.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = std::abs(timings[a] - med);
        const double db = std::abs(timings[b] - med);
        if (da != db) return da > db;
        if (timings[a] != timings[b]) return timings[a] > timings[b];
        return a < b;
    });

    std::vector<bool> dropped(timings.size(), false);
    dropped[order[0]] = true;
    dropped[order[1]] = true;

    TimingSummary s;
    for (std::size_t i = 0; i < timings.size(); ++i) {
        if (!dropped[i]) s.kept.push_back(timings[i]);
    }
    long double sum = 0.0L;
    for (double t : s.kept) sum += t;
    const long double mean = sum / static_cast<long double>(s.kept.size());
    long double var = 0.0L;
    for (double t : s.kept) {
        const long double dv = t - mean;
        var += dv * dv;
    }
    var /= static_cast<long double>(s.kept.size());
    s.mean = static_cast<double>(mean);
    s.stddev = static_cast<double>(std::sqrt(var));
    return s;
}

enum class BenchAxis { n, d };

/// Fitted power-law exponent of mean_ns along one axis. All summaries must
/// share the rule and the value of the other axis.
inline double fit_scaling_exponent(std::span<const BenchSummary> summaries, BenchAxis axis) {
    if (summaries.size() < 3) {
        throw precondition_error("fit_scaling_exponent: need at least 3 points");
    }
    std::vector<double> xs, ys;
    for (const BenchSummary& s : summaries) {
        if (s.rule != summaries.front().rule) {
            throw precondition_error("fit_scaling_exponent: mixed rules");
        }
        if (axis == BenchAxis::n && s.d != summaries.front().d) {
            throw precondition_error("fit_scaling_exponent: d must be fixed when fitting along n");
        }
        if (axis == BenchAxis::d && s.n != summaries.front().n) {
            throw precondition_error("fit_scaling_exponent: n must be fixed when fitting along d");
        }
        xs.push_back(axis == BenchAxis::n ? static_cast<double>(s.n) : static_cast<double>(s.d));
        ys.push_back(s.mean_ns);
    }
    return fit_loglog_slope(xs, ys);
}

namespace detail {

// Keeps aggregation results observable so the timed call is not elided.
inline volatile double bench_sink = 0.0;

}  // namespace detail

/// Timing sweep over (rule, n, d) cells with f = (n - 3) / 4. Inputs are
/// n gradients sampled i.i.d. uniform on (0,1)^d, seeded per (n, d) cell so
/// every rule aggregates the same data. One untimed warm-up call per cell,
/// then `repeats` timed calls; only the aggregation call is bracketed.
/// Cells run strictly sequentially.
inline BenchResult run_bench(std::span<const Rule> rules, std::span<const int> n_list,
                             std::span<const long long> d_list, const BenchOptions& options) {
    if (options.repeats < 3) throw precondition_error("run_bench: repeats must be >= 3");
    BenchResult result;
    using clock = std::chrono::steady_clock;

    for (long long d : d_list) {
        if (d < 1) throw precondition_error("run_bench: d must be >= 1");
        for (int n : n_list) {
            if (n < 3) {
                result.skipped.push_back("n=" + std::to_string(n) + ": needs n >= 3");
                continue;
            }
            const int f = (n - 3) / 4;
            std::vector<GradientVector> inputs;
            try {
                Rng gen(derive_seed(options.seed, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(d)));
                inputs.resize(static_cast<std::size_t>(n));
                for (auto& v : inputs) {
                    v.resize(static_cast<std::size_t>(d));
                    for (auto& x : v) x = gen.uniform_open01();
                }
            } catch (const std::bad_alloc&) {
                result.skipped.push_back("n=" + std::to_string(n) + " d=" + std::to_string(d) +
                                         ": out of memory while sampling inputs");
                continue;
            }

            for (Rule rule : rules) {
                if (rule != Rule::noop_copy && f > max_f(n, rule)) {
                    result.skipped.push_back(std::string(rule_name(rule)) + " n=" +
                                             std::to_string(n) + ": f=" + std::to_string(f) +
                                             " exceeds the rule's bound");
                    continue;
                }
                try {
                    GradientVector out = aggregate(rule, inputs, f);  // warm-up, untimed
                    detail::bench_sink = detail::bench_sink + out[0];

                    std::vector<double> timings;
                    timings.reserve(static_cast<std::size_t>(options.repeats));
                    for (int run = 0; run < options.repeats; ++run) {
                        const auto t0 = clock::now();
                        out = aggregate(rule, inputs, f);
                        const auto t1 = clock::now();
                        detail::bench_sink = detail::bench_sink + out[0];
                        const auto ns =
                            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
                        timings.push_back(static_cast<double>(ns));
                        if (options.keep_raw) {
                            result.raw.push_back(BenchRecord{rule, n, d, f, run,
                                                             static_cast<std::uint64_t>(ns)});
                        }
                    }
                    const TimingSummary ts = drop_two_summarize(timings);
                    result.summaries.push_back(BenchSummary{rule, n, d, f, ts.mean, ts.stddev});
                } catch (const std::bad_alloc&) {
                    result.skipped.push_back(std::string(rule_name(rule)) + " n=" +
                                             std::to_string(n) + " d=" + std::to_string(d) +
                                             ": out of memory");
                }
            }
        }
    }
    return result;
}

}  // namespace garpp
