#include "posg/config.hpp"

#include "posg/toml.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace posg::config {

namespace {

double get_double(const toml::Table& t, const std::string& s, const std::string& k,
                  double fallback) {
    return toml::contains(t, s, k) ? toml::require(t, s, k).as_double() : fallback;
}

std::int64_t get_int(const toml::Table& t, const std::string& s, const std::string& k,
                     std::int64_t fallback) {
    return toml::contains(t, s, k) ? toml::require(t, s, k).as_int() : fallback;
}

std::string get_string(const toml::Table& t, const std::string& s, const std::string& k,
                       const std::string& fallback) {
    return toml::contains(t, s, k) ? toml::require(t, s, k).as_string() : fallback;
}

bool get_bool(const toml::Table& t, const std::string& s, const std::string& k,
              bool fallback) {
    return toml::contains(t, s, k) ? toml::require(t, s, k).as_bool() : fallback;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

namespace {

ExperimentConfig parse_config(const toml::Table& tab) {
    ExperimentConfig c;
    c.env_preset = get_string(tab, "run", "env", c.env_preset);
    c.layout_file = get_string(tab, "run", "layout_file", "");
    c.algorithm = get_string(tab, "run", "algorithm", c.algorithm);
    c.iterations = static_cast<int>(get_int(tab, "run", "iterations", c.iterations));
    if (toml::contains(tab, "run", "seeds")) {
        c.seeds.clear();
        for (std::int64_t s : toml::require(tab, "run", "seeds").as_int_array())
            c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    c.out_dir = get_string(tab, "run", "out_dir", c.out_dir);
    c.demo_file = get_string(tab, "run", "demo_file", "");
    c.demo_limit = static_cast<std::size_t>(
        get_int(tab, "run", "demo_limit", static_cast<std::int64_t>(c.demo_limit)));
    c.demo_capacity = static_cast<std::size_t>(get_int(
        tab, "run", "demo_capacity", static_cast<std::int64_t>(c.demo_capacity)));

    c.ppo.gamma = get_double(tab, "ppo", "gamma", c.ppo.gamma);
    c.ppo.gae_lambda = get_double(tab, "ppo", "gae_lambda", c.ppo.gae_lambda);
    c.ppo.clip_ratio = get_double(tab, "ppo", "clip_ratio", c.ppo.clip_ratio);
    c.ppo.epochs_per_update =
        static_cast<int>(get_int(tab, "ppo", "epochs", c.ppo.epochs_per_update));
    c.ppo.minibatch_size =
        static_cast<int>(get_int(tab, "ppo", "minibatch", c.ppo.minibatch_size));
    c.ppo.learning_rate = get_double(tab, "ppo", "learning_rate", c.ppo.learning_rate);
    c.ppo.entropy_coef = get_double(tab, "ppo", "entropy_coef", c.ppo.entropy_coef);
    c.ppo.value_coef = get_double(tab, "ppo", "value_coef", c.ppo.value_coef);
    c.ppo.update_frequency = static_cast<int>(
        get_int(tab, "ppo", "update_frequency", c.ppo.update_frequency));
    c.ppo.guidance_gamma =
        get_double(tab, "ppo", "guidance_gamma", c.ppo.guidance_gamma);

    c.guidance.enabled = get_bool(tab, "guidance", "enabled", c.guidance.enabled);
    c.guidance.k_temp = get_double(tab, "guidance", "k_temp", c.guidance.k_temp);
    c.guidance.epsilon = get_double(tab, "guidance", "epsilon", c.guidance.epsilon);
    c.guidance.alpha = get_double(tab, "guidance", "alpha", c.guidance.alpha);
    c.guidance.beta = get_double(tab, "guidance", "beta", c.guidance.beta);
    const std::string mode =
        get_string(tab, "guidance", "mode", "discrete_table");
    if (mode == "discrete_table")
        c.guidance.mode = guidance::GuidanceMode::discrete_table;
    else if (mode == "continuous_per_trajectory")
        c.guidance.mode = guidance::GuidanceMode::continuous_per_trajectory;
    else
        throw ConfigError("unknown guidance mode: " + mode);
    c.guidance.key_on_state_only =
        get_bool(tab, "guidance", "key_on_state_only", false);

    c.kernel.bandwidth = get_double(tab, "kernel", "bandwidth", c.kernel.bandwidth);
    const std::string bw_mode =
        get_string(tab, "kernel", "bandwidth_mode", "median");
    if (bw_mode == "fixed")
        c.kernel.mode = mmd::BandwidthMode::fixed;
    else if (bw_mode == "median" || bw_mode == "median_heuristic")
        c.kernel.mode = mmd::BandwidthMode::median_heuristic;
    else
        throw ConfigError("unknown bandwidth mode: " + bw_mode);
    c.max_points = static_cast<std::size_t>(
        get_int(tab, "kernel", "max_points", static_cast<std::int64_t>(c.max_points)));

    const std::string fmode = get_string(tab, "features", "mode", "identity");
    if (fmode == "identity") {
        c.feature_map.mode = mmd::FeatureMap::Mode::identity;
    } else if (fmode == "coordinate_projection") {
        c.feature_map.mode = mmd::FeatureMap::Mode::coordinate_projection;
        c.feature_map.projection_indices.clear();
        if (toml::contains(tab, "features", "indices")) {
            for (std::int64_t i : toml::require(tab, "features", "indices").as_int_array())
                c.feature_map.projection_indices.push_back(
                    static_cast<std::size_t>(i));
        }
    } else {
        throw ConfigError("unknown feature map mode: " + fmode);
    }

    if (tab.count("demo_files")) {
        for (const auto& [k, v] : tab.at("demo_files"))
            c.demo_files_by_quality[k] = v.as_string();
    }
    return c;
}

} // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    try {
        return parse_config(toml::parse_file(path));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_toml_text(const std::string& text) {
    try {
        return parse_config(toml::parse(text));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
}

bool ExperimentConfig::guidance_active() const {
    return algorithm == "posg" && guidance.enabled;
}

void ExperimentConfig::validate() const {
    if (algorithm != "posg" && algorithm != "ppo")
        throw ConfigError("algorithm must be 'posg' or 'ppo'");
    if (iterations <= 0) throw ConfigError("iterations must be positive");
    if (seeds.empty()) throw ConfigError("seeds must be non-empty");
    if (demo_file.empty()) throw ConfigError("demo_file is required");
    if (!std::filesystem::exists(demo_file))
        throw ConfigError("demo file does not exist: " + demo_file);
    if (!layout_file.empty() && !std::filesystem::exists(layout_file))
        throw ConfigError("layout file does not exist: " + layout_file);
    const bool discrete_env = env_preset == "kdt" || env_preset == "kdt-small";
    if (env_preset != "kdt" && env_preset != "kdt-small" && env_preset != "pointmass")
        throw ConfigError("unknown env preset: " + env_preset);
    if (guidance.mode == guidance::GuidanceMode::discrete_table && !discrete_env)
        throw ConfigError("discrete_table guidance requires a discrete env");
    try {
        ppo.validate();
        guidance.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (kernel.mode == mmd::BandwidthMode::fixed && !(kernel.bandwidth > 0.0))
        throw ConfigError("fixed kernel bandwidth must be positive");
    if (max_points == 0) throw ConfigError("max_points must be positive");
    if (feature_map.mode == mmd::FeatureMap::Mode::coordinate_projection &&
        feature_map.projection_indices.empty())
        throw ConfigError("coordinate_projection needs indices");
}

std::string ExperimentConfig::to_toml() const {
    std::stringstream ss;
    ss << "[run]\n";
    ss << "env = \"" << env_preset << "\"\n";
    if (!layout_file.empty()) ss << "layout_file = \"" << layout_file << "\"\n";
    ss << "algorithm = \"" << algorithm << "\"\n";
    ss << "iterations = " << iterations << "\n";
    ss << "seeds = [";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        ss << (i ? ", " : "") << seeds[i];
    ss << "]\n";
    ss << "out_dir = \"" << out_dir << "\"\n";
    ss << "demo_file = \"" << demo_file << "\"\n";
    ss << "demo_limit = " << demo_limit << "\n";
    ss << "demo_capacity = " << demo_capacity << "\n\n";

    ss << "[ppo]\n";
    ss << "gamma = " << fmt(ppo.gamma) << "\n";
    ss << "gae_lambda = " << fmt(ppo.gae_lambda) << "\n";
    ss << "clip_ratio = " << fmt(ppo.clip_ratio) << "\n";
    ss << "epochs = " << ppo.epochs_per_update << "\n";
    ss << "minibatch = " << ppo.minibatch_size << "\n";
    ss << "learning_rate = " << fmt(ppo.learning_rate) << "\n";
    ss << "entropy_coef = " << fmt(ppo.entropy_coef) << "\n";
    ss << "value_coef = " << fmt(ppo.value_coef) << "\n";
    ss << "update_frequency = " << ppo.update_frequency << "\n";
    ss << "guidance_gamma = " << fmt(ppo.guidance_gamma) << "\n\n";

    ss << "[guidance]\n";
    ss << "enabled = " << (guidance.enabled ? "true" : "false") << "\n";
    ss << "k_temp = " << fmt(guidance.k_temp) << "\n";
    ss << "epsilon = " << fmt(guidance.epsilon) << "\n";
    ss << "alpha = " << fmt(guidance.alpha) << "\n";
    ss << "beta = " << fmt(guidance.beta) << "\n";
    ss << "mode = \""
       << (guidance.mode == guidance::GuidanceMode::discrete_table
               ? "discrete_table"
               : "continuous_per_trajectory")
       << "\"\n";
    ss << "key_on_state_only = " << (guidance.key_on_state_only ? "true" : "false")
       << "\n\n";

    ss << "[kernel]\n";
    ss << "bandwidth = " << fmt(kernel.bandwidth) << "\n";
    ss << "bandwidth_mode = \""
       << (kernel.mode == mmd::BandwidthMode::fixed ? "fixed" : "median") << "\"\n";
    ss << "max_points = " << max_points << "\n\n";

    ss << "[features]\n";
    ss << "mode = \""
       << (feature_map.mode == mmd::FeatureMap::Mode::identity ? "identity"
                                                               : "coordinate_projection")
       << "\"\n";
    if (feature_map.mode == mmd::FeatureMap::Mode::coordinate_projection) {
        ss << "indices = [";
        for (std::size_t i = 0; i < feature_map.projection_indices.size(); ++i)
            ss << (i ? ", " : "") << feature_map.projection_indices[i];
        ss << "]\n";
    }
    if (!demo_files_by_quality.empty()) {
        ss << "\n[demo_files]\n";
        for (const auto& [k, v] : demo_files_by_quality)
            ss << k << " = \"" << v << "\"\n";
    }
    return ss.str();
}

ppo::IterationConfig ExperimentConfig::iteration_config() const {
    ppo::IterationConfig ic;
    ic.ppo = ppo;
    ic.guidance = guidance;
    ic.guidance.enabled = guidance_active();
    ic.kernel = kernel;
    ic.feature_map = feature_map;
    ic.max_points = max_points;
    return ic;
}

} // namespace posg::config
