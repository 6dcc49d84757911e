#include "agesched/config.hpp"

#include <fstream>

namespace agesched {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError("config: " + path + ": " + what);
}

const json& need(const json& j, const std::string& parent, const char* key) {
    if (!j.contains(key)) fail(parent + "." + key, "missing required field");
    return j.at(key);
}

double need_number(const json& j, const std::string& parent, const char* key) {
    const json& v = need(j, parent, key);
    if (!v.is_number()) fail(parent + "." + key, "expected a number");
    return v.get<double>();
}

std::vector<std::vector<std::pair<int, double>>> parse_pmfs(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of PMFs");
    std::vector<std::vector<std::pair<int, double>>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& pmf = j[i];
        const std::string ppath = path + "[" + std::to_string(i) + "]";
        if (!pmf.is_array() || pmf.empty()) fail(ppath, "expected a non-empty array of [value, prob] pairs");
        std::vector<std::pair<int, double>> entries;
        for (std::size_t k = 0; k < pmf.size(); ++k) {
            const json& pair = pmf[k];
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
                fail(ppath + "[" + std::to_string(k) + "]", "expected a [value, prob] pair");
            }
            entries.emplace_back(pair[0].get<int>(), pair[1].get<double>());
        }
        out.push_back(std::move(entries));
    }
    return out;
}

json pmfs_to_json(const std::vector<std::vector<std::pair<int, double>>>& pmfs) {
    json out = json::array();
    for (const auto& pmf : pmfs) {
        json jp = json::array();
        for (const auto& [v, p] : pmf) jp.push_back(json::array({v, p}));
        out.push_back(jp);
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (!j.is_object()) fail("", "top-level value must be an object");

    const json& source = need(j, "", "source");
    const bool has_ar = source.contains("ar");
    const bool has_table = source.contains("h_table");
    if (has_ar == has_table) {
        fail("source", "exactly one of 'ar' or 'h_table' must be present");
    }
    if (has_ar) {
        const json& ar = source.at("ar");
        ARModel model;
        const json& coeffs = need(ar, "source.ar", "coefficients");
        if (!coeffs.is_array()) fail("source.ar.coefficients", "expected an array");
        for (const auto& c : coeffs) {
            if (!c.is_number()) fail("source.ar.coefficients", "expected numbers");
            model.coefficients.push_back(c.get<double>());
        }
        model.noise_variance = need_number(ar, "source.ar", "noise_variance");
        model.observation_noise_variance = need_number(ar, "source.ar", "observation_noise_variance");
        cfg.ar = std::move(model);
        if (ar.contains("coefficient_scale")) {
            cfg.coefficient_scale = ar.at("coefficient_scale").get<double>();
            if (!(cfg.coefficient_scale > 0.0)) fail("source.ar.coefficient_scale", "must be > 0");
        }
    } else {
        const json& table = source.at("h_table");
        if (!table.is_array() || table.empty()) fail("source.h_table", "expected a non-empty array");
        std::vector<double> values;
        for (const auto& v : table) {
            if (!v.is_number()) fail("source.h_table", "expected numbers");
            values.push_back(v.get<double>());
        }
        cfg.h_table = std::move(values);
    }

    const json& channel = need(j, "", "channel");
    const bool has_alpha = channel.contains("alpha");
    const bool has_matrix = channel.contains("transition");
    if (has_alpha == has_matrix) {
        fail("channel", "exactly one of 'alpha' or 'transition' must be present");
    }
    if (has_alpha) {
        cfg.alpha = need_number(channel, "channel", "alpha");
    } else {
        const json& m = channel.at("transition");
        if (!m.is_array() || m.empty()) fail("channel.transition", "expected a non-empty matrix");
        std::vector<std::vector<double>> matrix;
        for (const auto& row : m) {
            if (!row.is_array()) fail("channel.transition", "expected rows as arrays");
            std::vector<double> r;
            for (const auto& v : row) r.push_back(v.get<double>());
            matrix.push_back(std::move(r));
        }
        cfg.transition = std::move(matrix);
    }
    cfg.transmission_pmfs = parse_pmfs(need(channel, "channel", "transmission_pmfs"),
                                       "channel.transmission_pmfs");
    cfg.feedback_pmfs = parse_pmfs(need(channel, "channel", "feedback_pmfs"), "channel.feedback_pmfs");

    if (j.contains("policy")) {
        const json& p = j.at("policy");
        if (p.contains("buffer_size")) cfg.buffer_size = p.at("buffer_size").get<int>();
        if (p.contains("delta_max")) cfg.delta_max = p.at("delta_max").get<int>();
        if (p.contains("nu_max")) cfg.nu_max = p.at("nu_max").get<int>();
        if (p.contains("solver_tol")) cfg.solver_tol = p.at("solver_tol").get<double>();
    }
    if (cfg.buffer_size < 1) fail("policy.buffer_size", "must be >= 1");
    if (cfg.delta_max < 1) fail("policy.delta_max", "must be >= 1");

    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        if (s.contains("horizon")) cfg.horizon = s.at("horizon").get<std::int64_t>();
        if (s.contains("warm_up")) cfg.warm_up = s.at("warm_up").get<std::int64_t>();
        if (s.contains("num_seeds")) cfg.num_seeds = s.at("num_seeds").get<int>();
        if (s.contains("base_seed")) cfg.base_seed = s.at("base_seed").get<std::uint64_t>();
        if (s.contains("initial_age")) cfg.initial_age = s.at("initial_age").get<int>();
        if (s.contains("alpha_sweep")) {
            for (const auto& a : s.at("alpha_sweep")) {
                if (!a.is_number()) fail("simulation.alpha_sweep", "expected numbers");
                cfg.alpha_sweep.push_back(a.get<double>());
            }
        }
    }
    if (cfg.horizon < 1) fail("simulation.horizon", "must be >= 1");
    if (cfg.num_seeds < 1) fail("simulation.num_seeds", "must be >= 1");

    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        if (o.contains("wait_cap")) cfg.oracle_wait_cap = o.at("wait_cap").get<int>();
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        if (o.contains("dir")) cfg.out_dir = o.at("dir").get<std::string>();
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config: parse error in '" + path + "': " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    json j;
    json source;
    if (ar) {
        json jar;
        jar["coefficients"] = ar->coefficients;
        jar["noise_variance"] = ar->noise_variance;
        jar["observation_noise_variance"] = ar->observation_noise_variance;
        jar["coefficient_scale"] = coefficient_scale;
        source["ar"] = std::move(jar);
    } else if (h_table) {
        source["h_table"] = *h_table;
    }
    j["source"] = std::move(source);

    json channel;
    if (alpha) channel["alpha"] = *alpha;
    if (transition) channel["transition"] = *transition;
    channel["transmission_pmfs"] = pmfs_to_json(transmission_pmfs);
    channel["feedback_pmfs"] = pmfs_to_json(feedback_pmfs);
    j["channel"] = std::move(channel);

    j["policy"] = {{"buffer_size", buffer_size},
                   {"delta_max", delta_max},
                   {"nu_max", nu_max},
                   {"solver_tol", solver_tol}};
    j["simulation"] = {{"horizon", horizon},
                       {"warm_up", warm_up},
                       {"num_seeds", num_seeds},
                       {"base_seed", base_seed},
                       {"initial_age", initial_age},
                       {"alpha_sweep", alpha_sweep}};
    j["oracle"] = {{"wait_cap", oracle_wait_cap}};
    j["output"] = {{"dir", out_dir}};
    return j;
}

std::uint64_t hash_json(const nlohmann::json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t ExperimentConfig::model_hash() const {
    const json full = to_json();
    json model;
    model["source"] = full.at("source");
    model["channel"] = full.at("channel");
    model["policy"] = full.at("policy");
    return hash_json(model);
}

std::vector<DelayPmf> ExperimentConfig::build_transmission_pmfs() const {
    std::vector<DelayPmf> out;
    for (const auto& e : transmission_pmfs) out.emplace_back(e);
    return out;
}

std::vector<DelayPmf> ExperimentConfig::build_feedback_pmfs() const {
    std::vector<DelayPmf> out;
    for (const auto& e : feedback_pmfs) out.emplace_back(e);
    return out;
}

ChannelModel ExperimentConfig::build_channel(std::optional<double> alpha_override) const {
    std::vector<std::vector<double>> matrix;
    if (alpha_override) {
        matrix = symmetric_two_state_matrix(*alpha_override);
    } else if (alpha) {
        matrix = symmetric_two_state_matrix(*alpha);
    } else {
        matrix = *transition;
    }
    return ChannelModel(std::move(matrix), build_transmission_pmfs(), build_feedback_pmfs());
}

std::optional<ARModel> ExperimentConfig::scaled_ar() const {
    if (!ar) return std::nullopt;
    ARModel scaled = *ar;
    for (double& c : scaled.coefficients) c *= coefficient_scale;
    return scaled;
}

ErrorCurve ExperimentConfig::build_curve() const {
    if (h_table) return ErrorCurve(*h_table);
    return inference_error_curve(*scaled_ar(), delta_max);
}

}  // namespace agesched
