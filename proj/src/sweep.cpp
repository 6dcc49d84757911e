#include "agesched/sweep.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <memory>
#include <thread>

#include "agesched/stats.hpp"

namespace agesched {

std::vector<SweepPoint> run_sweep(const ErrorCurve& curve, const std::vector<DelayPmf>& transmission,
                                  const std::vector<DelayPmf>& feedback,
                                  const SweepSettings& settings) {
    if (settings.alphas.empty()) throw ValidationError("run_sweep: empty alpha list");
    if (settings.num_seeds < 1) throw ValidationError("run_sweep: need at least one seed");
    for (double a : settings.alphas) {
        if (!(a > 0.0) || !(a < 2.0)) {
            throw ValidationError("run_sweep: alpha " + std::to_string(a) + " outside (0, 2)");
        }
    }
    const int jobs = std::max(1, settings.jobs);
    const std::array<PolicyKind, 3> kinds{PolicyKind::OptimalThreshold, PolicyKind::IidBaseline,
                                          PolicyKind::ZeroWait};

    std::vector<SweepPoint> out;
    for (std::size_t ai = 0; ai < settings.alphas.size(); ++ai) {
        const double alpha = settings.alphas[ai];
        ChannelModel channel(symmetric_two_state_matrix(alpha), transmission, feedback);

        auto model = std::make_shared<const PolicyModel>(curve, channel, settings.nu_max);
        auto surrogate_model = std::make_shared<const PolicyModel>(curve, iid_surrogate(channel),
                                                                   settings.nu_max);

        const auto opt = model->optimize_mapping(settings.buffer_size, settings.solver_tol, jobs);
        const auto iid = surrogate_model->optimize_mapping(settings.buffer_size,
                                                           settings.solver_tol, jobs);

        std::array<SchedulingPolicy, 3> policies{
            SchedulingPolicy::with_threshold(PolicyKind::OptimalThreshold,
                                             ThresholdPolicy(opt.mapping, opt.threshold, model)),
            SchedulingPolicy::with_threshold(
                PolicyKind::IidBaseline,
                ThresholdPolicy(iid.mapping, iid.threshold, surrogate_model)),
            SchedulingPolicy::zero_wait()};

        // all (policy, seed) runs at this alpha, executed on the true channel
        std::vector<double> costs(static_cast<std::size_t>(3 * settings.num_seeds), 0.0);
        std::atomic<int> next{0};
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
        auto worker = [&](int w) {
            try {
                for (;;) {
                    const int job = next.fetch_add(1);
                    if (job >= 3 * settings.num_seeds) break;
                    const int pi = job / settings.num_seeds;
                    const int si = job % settings.num_seeds;
                    SimConfig cfg;
                    cfg.horizon = settings.horizon;
                    cfg.warm_up = settings.warm_up;
                    cfg.seed = derive_seed(settings.base_seed, {static_cast<std::uint64_t>(ai),
                                                                static_cast<std::uint64_t>(si)});
                    costs[static_cast<std::size_t>(job)] =
                        run_simulation(policies[static_cast<std::size_t>(pi)], channel, curve, cfg)
                            .time_avg_cost;
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        };
        if (jobs == 1) {
            worker(0);
        } else {
            std::vector<std::thread> threads;
            for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
            for (auto& t : threads) t.join();
        }
        for (const auto& err : errors) {
            if (err) std::rethrow_exception(err);
        }

        std::array<RunningStat, 3> stats;
        for (int pi = 0; pi < 3; ++pi) {
            for (int si = 0; si < settings.num_seeds; ++si) {
                stats[static_cast<std::size_t>(pi)].push(
                    costs[static_cast<std::size_t>(pi * settings.num_seeds + si)]);
            }
        }
        const double baseline_mean = stats[1].mean();
        for (int pi = 0; pi < 3; ++pi) {
            SweepPoint point;
            point.alpha = alpha;
            point.policy = kinds[static_cast<std::size_t>(pi)];
            point.mean_cost = stats[static_cast<std::size_t>(pi)].mean();
            point.normalized_cost = point.mean_cost / baseline_mean;
            point.std_error = stats[static_cast<std::size_t>(pi)].std_error();
            point.seeds = settings.num_seeds;
            point.solved_threshold =
                pi == 0 ? opt.threshold : (pi == 1 ? iid.threshold : 0.0);
            out.push_back(point);
        }
    }
    return out;
}

}  // namespace agesched
