#include "iud/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "iud/betabinom_mle.hpp"
#include "iud/inference.hpp"
#include "iud/io.hpp"

namespace iud::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string join_numbers(const Vector& v, char sep) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += format_number(v[i]);
    }
    return out;
}

// Runs `body`, mapping exceptions to exit codes with a one-line diagnostic.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return UsageError;
    } catch (const json::exception& e) {
        err << "error: malformed document: " << e.what() << '\n';
        return UsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return RuntimeFailure;
    }
}

} // namespace

int simulate_command(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto started = std::chrono::steady_clock::now();
        json document = read_json(options.config);
        if (document.is_object() && document.value("format", "") == "iud-manifest") {
            if (!document.contains("config")) throw ConfigurationError("manifest has no config");
            document = json(document["config"]);
        }
        if (options.replicates) document["replicates"] = *options.replicates;
        if (options.seed) {
            if (!document.contains("trial")) document["trial"] = json::object();
            document["trial"]["seed"] = *options.seed;
        }
        const SimulationPlan plan = parse_config(document);
        const unsigned threads = resolve_threads(options.threads);

        std::filesystem::create_directories(options.out);
        std::vector<MetricRow> rows;
        json failures = json::array();
        json traces = json::array();
        for (const Scenario& scenario : plan.scenarios) {
            for (const MechanismSpec& spec : plan.mechanisms) {
                const TrialConfig config = plan.trial_for(spec);
                MetricsSummary summary =
                    run_monte_carlo(config, scenario, plan.replicates, spec.label, threads);
                err << scenario.name << ' ' << spec.label << ": " << summary.replicates
                    << " replicates, " << summary.failed << " failed\n";
                if (summary.failed > 0) {
                    failures.push_back({{"scenario", scenario.name},
                                        {"mechanism", spec.label},
                                        {"failed", summary.failed}});
                }
                rows.insert(rows.end(), summary.rows.begin(), summary.rows.end());

                if (!options.emit_traces) continue;
                const auto dir = options.out / "traces";
                std::filesystem::create_directories(dir);
                for (std::uint64_t r = 0; r < plan.replicates; ++r) {
                    Xoshiro256 rng = replicate_stream(config.seed, r);
                    TrialTrace trace;
                    try {
                        trace = run_trial(config, scenario, rng);
                    } catch (const ConfigurationError&) {
                        throw;
                    } catch (const std::exception& e) {
                        err << "warning: replicate " << r << " failed: " << e.what() << '\n';
                        continue;
                    }
                    trace.replicate = r;
                    const std::string name =
                        scenario.name + "_" + spec.label + "_" + std::to_string(r) + ".json";
                    write_json(dir / name, trace_to_json(trace, spec, scenario));
                    traces.push_back("traces/" + name);
                }
            }
        }

        {
            std::ofstream csv(options.out / "metrics.csv", std::ios::binary);
            if (!csv) throw std::runtime_error("cannot write " + (options.out / "metrics.csv").string());
            write_metrics_csv(csv, rows);
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json outputs = {{"metrics", "metrics.csv"}};
        if (options.emit_traces) outputs["traces"] = traces;
        write_json(options.out / "manifest.json",
                   {{"format", "iud-manifest"},
                    {"tool", "iud"},
                    {"version", kVersion},
                    {"wall_clock_seconds", seconds},
                    {"threads", threads},
                    {"outputs", outputs},
                    {"failures", failures},
                    {"config", plan_to_json(plan)}});
        out << (options.out / "metrics.csv").string() << '\n';
        return static_cast<int>(Success);
    });
}

int mle_command(const MleOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(options.varsigma > 0.0)) throw ConfigurationError("--varsigma must be positive");
        std::ifstream in(options.counts, std::ios::binary);
        if (!in) throw ConfigurationError("cannot open " + options.counts.string());
        const AggregatedSample sample = read_counts_csv(in);
        iud::MleOptions opts;
        opts.default_prior = options.varsigma;
        const MleResult fit = fit_mle(sample, opts);
        out << "alpha,beta,status,log_likelihood\n"
            << format_number(fit.alpha) << ',' << format_number(fit.beta) << ','
            << to_string(fit.status) << ',' << format_number(fit.log_likelihood) << '\n';
        return static_cast<int>(Success);
    });
}

int analyze_command(const AnalyzeOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const TrialTrace trace = trace_from_json(read_json(options.trace));
        const Index J = trace.config.treatments;
        const Index H = trace.config.strata;
        if (options.j < 1 || options.j > J || options.l < 1 || options.l > J || options.j == options.l) {
            throw ConfigurationError("--pair: need two distinct treatments in 1.." + std::to_string(J));
        }
        if (options.h < 1 || options.h > H) {
            throw ConfigurationError("--stratum: need a stratum in 1.." + std::to_string(H));
        }
        if (!(options.level > 0.0 && options.level < 1.0)) {
            throw ConfigurationError("--level must lie in (0, 1)");
        }
        if (trace.steps.empty()) throw ConfigurationError("trace has no checkpoints");
        const Index j = options.j - 1;
        const Index l = options.l - 1;
        const Index h = options.h - 1;
        const auto last = trace.find(trace.config.horizon);
        if (!last) throw ConfigurationError("trace has no snapshot at the horizon");
        const CountsTensor& counts = trace.counts[*last];
        const Matrix& urn = trace.urn[*last];

        const double nan = std::numeric_limits<double>::quiet_NaN();
        auto or_nan = [&](auto&& f) {
            try {
                return f();
            } catch (const UndefinedStatisticError&) {
                return nan;
            } catch (const SingularMatrixError&) {
                return nan;
            }
        };
        const Interval ci = confidence_interval(counts, j, l, h, options.level);
        const double wald = or_nan([&] { return wald_statistic(counts, j, l, h); });
        const double wald_urn = or_nan([&] { return wald_statistic_urn(counts, urn, j, l, h); });
        const double chi2 = or_nan([&] { return homogeneity_chi2(counts, h); });

        out << "j,l,h,n,N_j,N_l,theta_hat_j,theta_hat_l,difference,ci_level,ci_lo,ci_hi,wald,wald_p,"
               "P_j,P_l,wald_urn,chi2,chi2_df,chi2_p\n";
        out << options.j << ',' << options.l << ',' << options.h << ',' << trace.config.horizon << ','
            << counts.assigned(j, h) << ',' << counts.assigned(l, h) << ','
            << format_number(theta_hat(counts, j, h)) << ',' << format_number(theta_hat(counts, l, h))
            << ',' << format_number(theta_hat(counts, j, h) - theta_hat(counts, l, h)) << ','
            << format_number(options.level) << ',' << format_number(ci.lo) << ','
            << format_number(ci.hi) << ',' << format_number(wald) << ','
            << format_number(std::isnan(wald) ? nan : wald_p_value(wald)) << ','
            << format_number(urn(j, h)) << ',' << format_number(urn(l, h)) << ','
            << format_number(wald_urn) << ',' << format_number(chi2) << ',' << (J - 1) << ','
            << format_number(std::isnan(chi2) ? nan : homogeneity_p_value(chi2, J)) << '\n';

        out << "\nt,step,U\n";
        const std::vector<Count> steps = information_steps(trace.config.horizon, options.times);
        for (std::size_t k = 0; k < options.times.size(); ++k) {
            if (k > 0 && !(options.times[k] > options.times[k - 1])) {
                throw ConfigurationError("--times must be ascending");
            }
            const auto snapshot = trace.find(steps[k]);
            if (!snapshot) {
                throw ConfigurationError("trace has no snapshot at step " + std::to_string(steps[k]));
            }
        }
        SequentialPath path;
        try {
            path = sequential_path(trace, j, l, h, options.times);
        } catch (const UndefinedStatisticError&) {
            path.steps = steps;
            for (Count step : steps) {
                const CountsTensor& c = trace.counts[*trace.find(step)];
                path.statistics.push_back(or_nan([&] { return wald_statistic(c, j, l, h); }));
            }
        }
        for (std::size_t k = 0; k < path.steps.size(); ++k) {
            out << format_number(options.times[k]) << ',' << path.steps[k] << ','
                << format_number(path.statistics[k]) << '\n';
        }
        return static_cast<int>(Success);
    });
}

int scenarios_command(std::ostream& out) {
    out << "name,kind,treatment,theta,alpha,beta\n";
    for (const Scenario& s : builtin_scenarios()) {
        for (Index j = 0; j < s.treatments(); ++j) {
            out << s.name << ',';
            if (s.kind == Scenario::Kind::Deterministic) {
                out << "deterministic," << (j + 1) << ',' << join_numbers(s.theta.row(j).transpose(), ' ')
                    << ",,\n";
            } else {
                out << "beta," << (j + 1) << ",," << format_number(s.beta[j].alpha) << ','
                    << format_number(s.beta[j].beta) << '\n';
            }
        }
    }
    return Success;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interacting urns design: simulation, Beta-Binomial fitting and trial analysis", "iud"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo study from a JSON config or manifest");
    simulate->add_option("--config", sim.config, "config or manifest JSON")->required();
    simulate->add_option("--out", sim.out, "output directory")->required();
    std::uint64_t replicates = 0;
    std::uint64_t seed = 0;
    auto* rep_opt = simulate->add_option("--replicates", replicates, "replicates M")->check(CLI::PositiveNumber);
    auto* seed_opt = simulate->add_option("--seed", seed, "base seed");
    simulate->add_option("--threads", sim.threads, "worker threads; IUD_THREADS overrides");
    simulate->add_flag("--emit-traces", sim.emit_traces, "write one trace file per replicate");

    MleOptions mle;
    auto* mle_cmd = app.add_subcommand("mle", "Beta-Binomial maximum likelihood from n,s rows");
    mle_cmd->add_option("--counts", mle.counts, "CSV of n,s per row")->required();
    mle_cmd->add_option("--varsigma", mle.varsigma, "default prior mass");

    AnalyzeOptions analyze;
    std::string pair;
    auto* analyze_cmd = app.add_subcommand("analyze", "Fixed-sample and sequential statistics of a trace");
    analyze_cmd->add_option("--trace", analyze.trace, "trace JSON")->required();
    analyze_cmd->add_option("--pair", pair, "treatments j,l (1-based)")->required();
    analyze_cmd->add_option("--stratum", analyze.h, "stratum h (1-based)")->required();
    analyze_cmd->add_option("--times", analyze.times, "information times")->delimiter(',');
    analyze_cmd->add_option("--level", analyze.level, "confidence level");

    auto* scenarios = app.add_subcommand("scenarios", "List the built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Success : UsageError;
    }

    if (simulate->parsed()) {
        if (rep_opt->count()) sim.replicates = replicates;
        if (seed_opt->count()) sim.seed = seed;
        return simulate_command(sim, out, err);
    }
    if (mle_cmd->parsed()) return mle_command(mle, out, err);
    if (analyze_cmd->parsed()) {
        const auto comma = pair.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("pair");
            std::size_t used = 0;
            analyze.j = std::stoi(pair.substr(0, comma), &used);
            if (used != comma) throw std::invalid_argument("pair");
            const std::string rest = pair.substr(comma + 1);
            analyze.l = std::stoi(rest, &used);
            if (used != rest.size()) throw std::invalid_argument("pair");
        } catch (const std::exception&) {
            err << "error: --pair expects two integers j,l\n";
            return UsageError;
        }
        return analyze_command(analyze, out, err);
    }
    if (scenarios->parsed()) return scenarios_command(out);
    return UsageError;
}

} // namespace iud::cli
