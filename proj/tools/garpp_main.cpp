// garpp command-line tool: aggregate gradients from a binary container,
// run parameter-server simulations from a JSON config, run the timing
// benchmark sweep, and run the resilience checkers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "garpp/attacks.hpp"
#include "garpp/bench.hpp"
#include "garpp/errors.hpp"
#include "garpp/gradient_file.hpp"
#include "garpp/json_config.hpp"
#include "garpp/resilience.hpp"
#include "garpp/rules.hpp"
#include "garpp/simulator.hpp"

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw garpp::format_error("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw garpp::format_error("short write to '" + path + "'");
}

garpp::Rule parse_rule_or_throw(const std::string& name) {
    const auto rule = garpp::parse_rule(name);
    if (!rule) {
        throw garpp::format_error("unknown rule '" + name + "' (valid: " +
                                  garpp::kValidRuleNames + ")");
    }
    return *rule;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

garpp::AttackSpec attack_from_flags(const std::string& kind,
                                    const std::vector<std::string>& params) {
    garpp::AttackSpec spec;
    const auto parsed = garpp::parse_attack_kind(kind);
    if (!parsed) {
        throw garpp::format_error("unknown attack kind '" + kind +
                                  "' (valid: none, random_gaussian, reversed, constant_large, "
                                  "little_is_enough, mimic_regression)");
    }
    spec.kind = *parsed;
    for (const std::string& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw garpp::format_error("attack parameter '" + kv + "' must look like name=value");
        }
        try {
            spec.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw garpp::format_error("attack parameter '" + kv + "' has a non-numeric value");
        }
    }
    try {
        spec.validate();
    } catch (const garpp::precondition_error& e) {
        throw garpp::format_error(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------- aggregate

struct AggregateArgs {
    std::string rule;
    int f = 0;
    int m = 0;
    std::string input;
    std::string output;
};

int cmd_aggregate(const AggregateArgs& args) {
    const garpp::Rule rule = parse_rule_or_throw(args.rule);
    const std::vector<garpp::GradientVector> gradients = garpp::read_gradient_file(args.input);

    garpp::GradientVector out;
    if (rule == garpp::Rule::krum || rule == garpp::Rule::multi_krum) {
        const int m = rule == garpp::Rule::krum ? 1 : args.m;
        const garpp::MultiKrumResult res = garpp::multi_krum(gradients, args.f, m);
        std::cout << res.winner_index << "\n";
        out = res.output;
    } else {
        out = garpp::aggregate(rule, gradients, args.f, args.m);
    }
    garpp::write_gradient_file(args.output, std::vector<garpp::GradientVector>{out});
    return 0;
}

// ----------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw garpp::format_error("cannot open config '" + config_path + "'");
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw garpp::format_error("config '" + config_path + "' is not valid JSON: " + e.what());
    }
    const garpp::SimJob job = garpp::parse_sim_job(parsed);
    const garpp::SimMetrics metrics = garpp::run_simulation(job.config);

    std::string csv = "step,loss,grad_norm,cosine\n";
    for (std::size_t k = 0; k < metrics.steps.size(); ++k) {
        const garpp::StepRecord& r = metrics.steps[k];
        csv += std::to_string(k);
        csv += ',';
        csv += fmt_double(r.loss);
        csv += ',';
        csv += fmt_double(r.grad_norm);
        csv += ',';
        csv += fmt_double(r.cosine);
        csv += '\n';
    }
    write_text_file(job.metrics_csv, csv);
    write_text_file(job.summary_json, garpp::summary_json(metrics).dump(2) + "\n");
    return 0;
}

// -------------------------------------------------------------------- bench

struct BenchArgs {
    std::string rules = "multi-krum,multi-bulyan,median";
    int n_min = 7;
    int n_max = 39;
    int n_step = 2;
    std::string d_list = "100000,1000000";
    bool include_d1e7 = false;
    int repeats = 7;
    std::uint64_t seed = 1;
    std::string out = "bench.csv";
    std::string raw_out;
};

int cmd_bench(const BenchArgs& args) {
    std::vector<garpp::Rule> rules;
    for (const std::string& name : split_csv(args.rules)) {
        rules.push_back(parse_rule_or_throw(name));
    }
    if (rules.empty()) throw garpp::format_error("no rules given");
    if (args.n_step < 1) throw garpp::format_error("--n-step must be >= 1");
    std::vector<int> n_list;
    for (int n = args.n_min; n <= args.n_max; n += args.n_step) n_list.push_back(n);
    if (n_list.empty()) throw garpp::format_error("empty n range");
    std::vector<long long> d_list;
    for (const std::string& ds : split_csv(args.d_list)) {
        try {
            d_list.push_back(std::stoll(ds));
        } catch (const std::exception&) {
            throw garpp::format_error("bad d value '" + ds + "'");
        }
    }
    if (args.include_d1e7) d_list.push_back(10000000LL);
    if (d_list.empty()) throw garpp::format_error("empty d list");

    garpp::BenchOptions options;
    options.repeats = args.repeats;
    options.seed = args.seed;
    options.keep_raw = !args.raw_out.empty();
    const garpp::BenchResult result = garpp::run_bench(rules, n_list, d_list, options);

    std::string csv = "rule,n,d,f,mean_ns,std_ns\n";
    for (const garpp::BenchSummary& s : result.summaries) {
        csv += std::string(garpp::rule_name(s.rule)) + ',' + std::to_string(s.n) + ',' +
               std::to_string(s.d) + ',' + std::to_string(s.f) + ',' + fmt_double(s.mean_ns) +
               ',' + fmt_double(s.std_ns) + '\n';
    }
    write_text_file(args.out, csv);
    if (!args.raw_out.empty()) {
        std::string raw = "rule,n,d,f,run,elapsed_ns\n";
        for (const garpp::BenchRecord& r : result.raw) {
            raw += std::string(garpp::rule_name(r.rule)) + ',' + std::to_string(r.n) + ',' +
                   std::to_string(r.d) + ',' + std::to_string(r.f) + ',' +
                   std::to_string(r.run_index) + ',' + std::to_string(r.elapsed_ns) + '\n';
        }
        write_text_file(args.raw_out, raw);
    }
    for (const std::string& msg : result.skipped) {
        std::cerr << "skipped: " << msg << "\n";
    }
    return 0;
}

// -------------------------------------------------------------------- check

struct CheckArgs {
    std::string mode = "weak";
    std::string rule = "multi-krum";
    int n = 11;
    int f = 2;
    int d = 100;
    double sigma = 0.01;
    std::string attack = "reversed";
    std::vector<std::string> params;
    int trials = 10000;
    std::uint64_t seed = 1;
    std::string eta_variant = "lemma_statement";
    std::string dims = "16,64,256,1024";
    std::string out;
};

int cmd_check(const CheckArgs& args) {
    const garpp::Rule rule = parse_rule_or_throw(args.rule);
    const garpp::AttackSpec attack = attack_from_flags(args.attack, args.params);
    const auto variant = garpp::parse_eta_variant(args.eta_variant);
    if (!variant) {
        throw garpp::format_error("unknown eta variant '" + args.eta_variant +
                                  "' (valid: lemma_statement, proof_body)");
    }

    nlohmann::json report;
    report["rule"] = std::string(garpp::rule_name(rule));
    report["n"] = args.n;
    report["f"] = args.f;
    report["d"] = args.d;
    report["sigma"] = args.sigma;
    report["attack"] = std::string(garpp::attack_kind_name(attack.kind));
    report["trials"] = args.trials;
    report["seed"] = args.seed;

    if (args.mode == "weak") {
        if (args.d < 1) throw garpp::format_error("--d must be >= 1");
        garpp::GradientVector g(static_cast<std::size_t>(args.d),
                                1.0 / std::sqrt(static_cast<double>(args.d)));
        const garpp::ResilienceEstimate est = garpp::estimate_weak_condition(
            rule, args.n, args.f, attack, g, args.sigma, args.trials, args.seed, *variant);
        report["mode"] = "weak";
        report["eta_variant"] = args.eta_variant;
        report.update(garpp::resilience_report_json(est));
    } else if (args.mode == "leeway") {
        std::vector<int> dims;
        for (const std::string& ds : split_csv(args.dims)) {
            try {
                dims.push_back(std::stoi(ds));
            } catch (const std::exception&) {
                throw garpp::format_error("bad dims value '" + ds + "'");
            }
        }
        const garpp::LeewayScaling scaling =
            garpp::leeway_scaling(rule, args.n, args.f, attack, args.sigma, args.trials,
                                  args.seed, dims);
        report["mode"] = "leeway";
        report["dims"] = scaling.dims;
        report["max_leeway"] = scaling.max_leeway;
        report["fitted_exponent"] = scaling.fitted_exponent;
    } else {
        throw garpp::format_error("unknown mode '" + args.mode + "' (valid: weak, leeway)");
    }

    const std::string text = report.dump(2) + "\n";
    if (args.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(args.out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-resilient gradient aggregation toolkit"};
    app.require_subcommand(1);

    AggregateArgs agg;
    CLI::App* aggregate = app.add_subcommand("aggregate", "Aggregate a gradient container file");
    aggregate->add_option("--rule", agg.rule, "Aggregation rule")->required();
    aggregate->add_option("-f,--f", agg.f, "Declared Byzantine bound")->default_val(0);
    aggregate->add_option("-m,--m", agg.m, "multi-krum width (0 = default n-f-2)")->default_val(0);
    aggregate->add_option("--in", agg.input, "Input gradient file")->required();
    aggregate->add_option("--out", agg.output, "Output gradient file")->required();

    std::string config_path;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a parameter-server simulation");
    simulate->add_option("config", config_path, "JSON config path")->required();

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Aggregation timing sweep");
    bench_cmd->add_option("--rules", bench.rules, "Comma-separated rule list");
    bench_cmd->add_option("--n-min", bench.n_min, "Smallest worker count");
    bench_cmd->add_option("--n-max", bench.n_max, "Largest worker count");
    bench_cmd->add_option("--n-step", bench.n_step, "Worker count stride");
    bench_cmd->add_option("--d", bench.d_list, "Comma-separated dimension list");
    bench_cmd->add_flag("--include-d1e7", bench.include_d1e7,
                        "Also run d = 10^7 (about 3.2 GB of inputs at n = 39)");
    bench_cmd->add_option("--repeats", bench.repeats, "Timed runs per cell");
    bench_cmd->add_option("--seed", bench.seed, "Input sampling seed");
    bench_cmd->add_option("--out", bench.out, "Summary CSV path");
    bench_cmd->add_option("--raw-out", bench.raw_out, "Also write per-run timings CSV");

    CheckArgs check;
    CLI::App* check_cmd = app.add_subcommand("check", "Empirical resilience checks");
    check_cmd->add_option("--mode", check.mode, "weak or leeway");
    check_cmd->add_option("--rule", check.rule, "Aggregation rule");
    check_cmd->add_option("-n,--n", check.n, "Worker count");
    check_cmd->add_option("-f,--f", check.f, "Byzantine count");
    check_cmd->add_option("-d,--d", check.d, "Dimension (weak mode)");
    check_cmd->add_option("--sigma", check.sigma,
                          "Per-coordinate noise std (weak) or total noise budget (leeway)");
    check_cmd->add_option("--attack", check.attack, "Attack kind");
    check_cmd->add_option("--param", check.params, "Attack parameter name=value (repeatable)");
    check_cmd->add_option("--trials", check.trials, "Monte-Carlo trials");
    check_cmd->add_option("--seed", check.seed, "Trial seed");
    check_cmd->add_option("--eta-variant", check.eta_variant, "lemma_statement or proof_body");
    check_cmd->add_option("--dims", check.dims, "Comma-separated dimension sweep (leeway mode)");
    check_cmd->add_option("--out", check.out, "Report path (default: stdout)");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(aggregate)) return cmd_aggregate(agg);
        if (app.got_subcommand(simulate)) return cmd_simulate(config_path);
        if (app.got_subcommand(bench_cmd)) return cmd_bench(bench);
        if (app.got_subcommand(check_cmd)) return cmd_check(check);
        return 2;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const garpp::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const garpp::precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const garpp::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
