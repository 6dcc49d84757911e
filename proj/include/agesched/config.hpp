#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "agesched/ar_model.hpp"
#include "agesched/channel.hpp"
#include "agesched/error_curve.hpp"

namespace agesched {

/// Experiment description parsed from a JSON config file. Exactly one of
/// the AR source or a direct h table must be present; the channel is either
/// an explicit transition matrix or the symmetric two-state alpha shorthand.
struct ExperimentConfig {
    // source
    std::optional<ARModel> ar;
    double coefficient_scale = 1.0;  ///< multiplies the AR coefficients at build time
    std::optional<std::vector<double>> h_table;

    // channel
    std::optional<double> alpha;
    std::optional<std::vector<std::vector<double>>> transition;
    std::vector<std::vector<std::pair<int, double>>> transmission_pmfs;
    std::vector<std::vector<std::pair<int, double>>> feedback_pmfs;

    // policy
    int buffer_size = 64;
    int delta_max = 500;
    int nu_max = -1;         ///< <1 means delta_max
    double solver_tol = -1;  ///< <=0 means 1e-9 * curve range

    // simulation
    std::int64_t horizon = 1'000'000;
    std::int64_t warm_up = 10'000;
    int num_seeds = 10;
    std::uint64_t base_seed = 1;
    std::vector<double> alpha_sweep;
    int initial_age = -1;

    // oracle
    int oracle_wait_cap = -1;  ///< <0 means delta_max

    // output
    std::string out_dir = "out";

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;

    /// Hash over the model-defining sections (source, channel, policy);
    /// simulation settings do not affect it.
    std::uint64_t model_hash() const;

    std::vector<DelayPmf> build_transmission_pmfs() const;
    std::vector<DelayPmf> build_feedback_pmfs() const;
    ChannelModel build_channel(std::optional<double> alpha_override = std::nullopt) const;
    ErrorCurve build_curve() const;
    /// The AR model with coefficient_scale applied, when a source is present.
    std::optional<ARModel> scaled_ar() const;
};

/// FNV-1a over the canonical serialized form.
std::uint64_t hash_json(const nlohmann::json& j);

}  // namespace agesched
