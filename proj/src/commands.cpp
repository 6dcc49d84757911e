#include "agesched/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "agesched/oracle.hpp"
#include "agesched/simulator.hpp"
#include "agesched/sweep.hpp"

namespace agesched {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

std::ofstream open_csv(const fs::path& path, const ExperimentConfig& cfg, std::uint64_t seed) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << "# config_hash=" << hex64(cfg.model_hash()) << " base_seed=" << seed << "\n";
    out << std::setprecision(17);
    return out;
}

struct Resolved {
    fs::path out_dir;
    std::uint64_t seed;
};

Resolved resolve(const ExperimentConfig& cfg, const CommandOptions& opts) {
    Resolved r;
    r.out_dir = opts.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opts.out_dir);
    r.seed = opts.seed ? opts.seed : cfg.base_seed;
    return r;
}

std::string mapping_to_string(const BufferMapping& m) {
    std::string s = "[";
    for (std::size_t i = 0; i < m.positions.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(m.positions[i]);
    }
    return s + "]";
}

}  // namespace

std::string cmd_error_curve(const ExperimentConfig& config, const CommandOptions& opts) {
    const Resolved r = resolve(config, opts);
    const ErrorCurve curve = config.build_curve();
    const fs::path path = r.out_dir / "error_curve.csv";
    std::ofstream out = open_csv(path, config, r.seed);
    out << "delta,h\n";
    for (int d = 1; d <= curve.delta_max(); ++d) out << d << "," << curve.at(d) << "\n";
    std::cout << "error-curve: delta_max=" << curve.delta_max() << " min=" << curve.min_value()
              << " max=" << curve.max_value() << " -> " << path.string() << "\n";
    return path.string();
}

std::string cmd_solve(const ExperimentConfig& config, const CommandOptions& opts) {
    const Resolved r = resolve(config, opts);
    const ErrorCurve curve = config.build_curve();
    const ChannelModel channel = config.build_channel();
    PolicyModel model(curve, channel, config.nu_max);

    const double combos = std::pow(static_cast<double>(config.buffer_size),
                                   static_cast<double>(channel.state_count()));
    const bool keep_all = combos <= 32.0;
    const auto solution =
        model.optimize_mapping(config.buffer_size, config.solver_tol, opts.jobs, keep_all);

    if (keep_all) {
        std::cout << "per-mapping thresholds:\n";
        for (std::size_t idx = 0; idx < solution.all_thresholds.size(); ++idx) {
            std::int64_t rem = static_cast<std::int64_t>(idx);
            std::vector<int> pos(static_cast<std::size_t>(channel.state_count()));
            for (int c = channel.state_count() - 1; c >= 0; --c) {
                pos[static_cast<std::size_t>(c)] = static_cast<int>(rem % config.buffer_size);
                rem /= config.buffer_size;
            }
            std::cout << "  psi=(";
            for (std::size_t i = 0; i < pos.size(); ++i) std::cout << (i ? "," : "") << pos[i];
            std::cout << ") beta=" << std::setprecision(12) << solution.all_thresholds[idx] << "\n";
        }
    }
    std::cout << "solved: mapping=" << mapping_to_string(solution.mapping)
              << " threshold=" << std::setprecision(12) << solution.threshold << "\n";
    if (model.window_cap_raises() > 0) {
        std::cout << "warning: index window cap raised for " << model.window_cap_raises()
                  << " table entries (nu_max below the exact-window bound)\n";
    }

    fs::create_directories(r.out_dir);
    const fs::path artifact_path = r.out_dir / "policy.json";
    json artifact;
    artifact["model_hash"] = hex64(config.model_hash());
    artifact["policy_kind"] = "optimal";
    artifact["buffer_size"] = config.buffer_size;
    artifact["buffer_mapping"] = solution.mapping.positions;
    artifact["threshold"] = solution.threshold;
    std::ofstream af(artifact_path);
    if (!af) throw ValidationError("cannot write '" + artifact_path.string() + "'");
    af << artifact.dump(2) << "\n";

    const fs::path index_path = r.out_dir / "index_table.csv";
    std::ofstream out = open_csv(index_path, config, r.seed);
    out << "delta,state,gamma\n";
    for (int d = 1; d <= model.table_max(); ++d) {
        for (int c = 0; c < channel.state_count(); ++c) {
            out << d << "," << c << "," << model.index_value(d, c) << "\n";
        }
    }
    std::cout << "artifacts: " << artifact_path.string() << ", " << index_path.string() << "\n";
    return artifact_path.string();
}

std::string cmd_simulate(const ExperimentConfig& config, const std::string& artifact_path,
                         const CommandOptions& opts) {
    const Resolved r = resolve(config, opts);
    std::ifstream af(artifact_path);
    if (!af) throw ValidationError("cannot open artifact '" + artifact_path + "'");
    json artifact;
    try {
        af >> artifact;
    } catch (const json::parse_error& e) {
        throw ValidationError("artifact parse error: " + std::string(e.what()));
    }
    const std::string expect = hex64(config.model_hash());
    const std::string got = artifact.value("model_hash", "");
    if (got != expect) {
        throw ValidationError("artifact/config hash mismatch: artifact carries " + got +
                              ", config hashes to " + expect);
    }

    const ErrorCurve curve = config.build_curve();
    const ChannelModel channel = config.build_channel();
    auto model = std::make_shared<const PolicyModel>(curve, channel, config.nu_max);
    BufferMapping mapping;
    mapping.buffer_size = artifact.at("buffer_size").get<int>();
    mapping.positions = artifact.at("buffer_mapping").get<std::vector<int>>();
    const double threshold = artifact.at("threshold").get<double>();
    const auto policy = SchedulingPolicy::with_threshold(
        PolicyKind::OptimalThreshold, ThresholdPolicy(mapping, threshold, model));

    if (opts.trace_slots > 0) {
        const fs::path trace_path = r.out_dir / "trace.csv";
        std::ofstream tout = open_csv(trace_path, config, r.seed);
        tout << "t,delta,cost,event,channel_state,buffer_pos\n";
        const auto trace = replay_trace(policy, channel, curve,
                                        derive_seed(r.seed, {0, 0}), opts.trace_slots,
                                        config.initial_age);
        for (const auto& row : trace) {
            tout << row.t << "," << row.delta << "," << row.cost << "," << row.event << ","
                 << row.channel_state << "," << row.buffer_position << "\n";
        }
        std::cout << "trace: " << trace_path.string() << "\n";
    }

    const fs::path path = r.out_dir / "sim_report.csv";
    std::ofstream out = open_csv(path, config, r.seed);
    out << "seed_index,seed,time_avg_cost,std_error,measured_slots,warmup_slots,epochs,"
           "mean_epoch_cost,mean_epoch_length,extension_slots\n";
    for (int s = 0; s < config.num_seeds; ++s) {
        SimConfig sim;
        sim.horizon = config.horizon;
        sim.warm_up = config.warm_up;
        sim.initial_age = config.initial_age;
        sim.seed = derive_seed(r.seed, {0, static_cast<std::uint64_t>(s)});
        const SimReport rep = run_simulation(policy, channel, curve, sim);
        out << s << "," << rep.seed << "," << rep.time_avg_cost << "," << rep.std_error << ","
            << rep.measured_slots << "," << rep.warmup_slots << "," << rep.epochs << ","
            << rep.mean_epoch_cost << "," << rep.mean_epoch_length << "," << rep.extension_slots
            << "\n";
        std::cout << "seed " << s << ": time_avg_cost=" << std::setprecision(10)
                  << rep.time_avg_cost << " (se " << rep.std_error << ")\n";
    }
    std::cout << "report: " << path.string() << "\n";
    return path.string();
}

std::string cmd_sweep(const ExperimentConfig& config, const CommandOptions& opts) {
    const Resolved r = resolve(config, opts);
    if (config.alpha_sweep.empty()) {
        throw ValidationError("config: simulation.alpha_sweep: required for the sweep command");
    }
    SweepSettings settings;
    settings.alphas = config.alpha_sweep;
    settings.num_seeds = config.num_seeds;
    settings.base_seed = r.seed;
    settings.horizon = config.horizon;
    settings.warm_up = config.warm_up;
    settings.buffer_size = config.buffer_size;
    settings.nu_max = config.nu_max;
    settings.solver_tol = config.solver_tol;
    settings.jobs = opts.jobs;

    const ErrorCurve curve = config.build_curve();
    const auto points =
        run_sweep(curve, config.build_transmission_pmfs(), config.build_feedback_pmfs(), settings);

    const fs::path path = r.out_dir / "sweep.csv";
    std::ofstream out = open_csv(path, config, r.seed);
    out << "alpha,policy,mean_cost,normalized_cost,stderr,seeds\n";
    for (const auto& p : points) {
        out << p.alpha << "," << policy_kind_name(p.policy) << "," << p.mean_cost << ","
            << p.normalized_cost << "," << p.std_error << "," << p.seeds << "\n";
        std::cout << "alpha=" << p.alpha << " " << policy_kind_name(p.policy)
                  << ": normalized=" << std::setprecision(6) << p.normalized_cost << "\n";
    }
    std::cout << "sweep: " << path.string() << "\n";
    return path.string();
}

bool cmd_oracle_check(const ExperimentConfig& config, const CommandOptions& opts) {
    const ErrorCurve curve = config.build_curve();
    const ChannelModel channel = config.build_channel();

    const int wait_cap = config.oracle_wait_cap >= 0 ? config.oracle_wait_cap : curve.delta_max();
    const double states = static_cast<double>(config.buffer_size - 1 +
                                              channel.max_transmission_delay() +
                                              channel.max_feedback_delay() + wait_cap) *
                          channel.state_count();
    const double actions = static_cast<double>(wait_cap + 1) * config.buffer_size;
    if (states * actions > 2e7) {
        throw ValidationError("oracle-check: instance too large (" + std::to_string(states * actions) +
                              " state-actions); reduce delta_max, buffer_size or oracle.wait_cap");
    }

    PolicyModel model(curve, channel, config.nu_max);
    const auto solution = model.optimize_mapping(config.buffer_size, config.solver_tol, opts.jobs);

    const TruncatedSmdp smdp = TruncatedSmdp::make_default(config.buffer_size, channel, curve, wait_cap);
    const RviResult rvi = relative_value_iteration(smdp);
    const MatchReport report =
        greedy_matches_threshold(smdp, rvi, model, solution.mapping, solution.threshold);

    {
        const Resolved r = resolve(config, opts);
        const fs::path vpath = r.out_dir / "rvi_values.csv";
        std::ofstream vout = open_csv(vpath, config, r.seed);
        vout << "age,state,value,greedy_wait,greedy_buffer\n";
        for (int c = 0; c < channel.state_count(); ++c) {
            for (int age = 1; age <= smdp.age_cap; ++age) {
                const std::size_t s = static_cast<std::size_t>(age - 1) +
                                      static_cast<std::size_t>(smdp.age_cap) *
                                          static_cast<std::size_t>(c);
                vout << age << "," << c << "," << rvi.value[s] << "," << rvi.greedy[s].wait << ","
                     << rvi.greedy[s].buffer << "\n";
            }
        }
        std::cout << "value table: " << vpath.string() << "\n";
    }

    std::cout << "threshold solve: h_opt=" << std::setprecision(12) << solution.threshold
              << " mapping=" << mapping_to_string(solution.mapping) << "\n";
    std::cout << "value iteration: average_cost=" << rvi.average_cost << " (" << rvi.iterations
              << " iterations, span " << rvi.span_residual << ")\n";
    const double diff = std::abs(rvi.average_cost - solution.threshold);
    std::cout << "|h_opt - rvi| = " << diff << "\n";
    std::cout << "greedy match: " << report.states_checked << " reachable states, "
              << report.mismatches.size() << " mismatches\n";
    for (const auto& m : report.mismatches) {
        std::cout << "  mismatch at (age=" << m.age << ", state=" << m.state << "): policy ("
                  << m.policy_wait << "," << m.policy_buffer << ") vs greedy (" << m.greedy_wait
                  << "," << m.greedy_buffer << "), action gap " << m.action_gap << "\n";
    }
    const bool ok = report.ok() && diff < 1e-3;
    std::cout << (ok ? "oracle-check: PASS\n" : "oracle-check: FAIL\n");
    return ok;
}

}  // namespace agesched
