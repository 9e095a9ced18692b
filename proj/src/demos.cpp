#include "posg/demos.hpp"

#include "posg/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace posg::demos {

using envs::Cell;
using envs::KdtLayout;
using nlohmann::json;

namespace {

// BFS returning the action sequence from -> to; door passable only if allowed
std::vector<int> bfs_actions(const KdtLayout& l, Cell from, Cell to, bool allow_door) {
    const int dr[4] = {0, 0, 1, -1}; // east, west, south, north
    const int dc[4] = {1, -1, 0, 0};
    auto idx = [&](Cell c) {
        return static_cast<std::size_t>(c.row) * l.width + static_cast<std::size_t>(c.col);
    };
    auto passable = [&](Cell c) {
        if (l.is_wall(c.row, c.col)) return false;
        if (c == l.door && !allow_door) return false;
        return true;
    };
    std::vector<int> parent_action(l.height * l.width, -1);
    std::vector<std::uint8_t> seen(l.height * l.width, 0);
    std::deque<Cell> queue{from};
    seen[idx(from)] = 1;
    bool found = (from == to);
    while (!queue.empty() && !found) {
        const Cell c = queue.front();
        queue.pop_front();
        for (int a = 0; a < 4; ++a) {
            const Cell n{c.row + dr[a], c.col + dc[a]};
            if (!l.in_bounds(n.row, n.col) || !passable(n) || seen[idx(n)]) continue;
            seen[idx(n)] = 1;
            parent_action[idx(n)] = a;
            queue.push_back(n);
            if (n == to) {
                found = true;
                break;
            }
        }
    }
    if (!found) throw std::runtime_error("kdt layout: goal unreachable for expert");
    std::vector<int> actions;
    Cell c = to;
    while (!(c == from)) {
        const int a = parent_action[idx(c)];
        actions.push_back(a);
        c = Cell{c.row - dr[a], c.col - dc[a]};
    }
    std::reverse(actions.begin(), actions.end());
    return actions;
}

} // namespace

namespace {

// next action of the shortest-path controller: BFS toward the current subgoal
// (key, then door, then treasure), re-planned every step
int next_expert_action(const KdtLayout& layout, const envs::KdtEnv::State& st) {
    Cell subgoal;
    bool allow_door = true;
    if (!st.has_key) {
        subgoal = layout.key;
        allow_door = false;
    } else if (!st.door_open) {
        subgoal = layout.door;
    } else {
        subgoal = layout.treasure;
    }
    const auto path = bfs_actions(layout, st.agent, subgoal, allow_door);
    return path.empty() ? 0 : path.front();
}

} // namespace

std::vector<int> kdt_expert_actions(const KdtLayout& layout) {
    envs::KdtEnv env(layout);
    env.reset(0);
    std::vector<int> actions;
    while (true) {
        const int a = next_expert_action(layout, env.state());
        actions.push_back(a);
        if (env.step_discrete(a).done) break;
        if (actions.size() > layout.max_steps)
            throw std::runtime_error("kdt expert controller failed to finish");
    }
    return actions;
}

DemoFileRecord scripted_expert_kdt(const KdtLayout& layout) {
    return scripted_medium_kdt(layout, 0.0, 0);
}

DemoFileRecord scripted_medium_kdt(const KdtLayout& layout, double noise,
                                   std::uint64_t seed) {
    if (noise < 0.0 || noise > 1.0)
        throw std::invalid_argument("medium demo noise must lie in [0, 1]");
    envs::KdtEnv env(layout);
    Rng rng(mix_seed(seed, 0x6d6564ULL));
    DemoFileRecord rec;
    rec.env_id = "kdt";
    rec.quality_tag = noise == 0.0 ? "expert" : "medium";
    rec.generator_seed = static_cast<std::int64_t>(seed);
    rec.observations.push_back(env.reset(0));

    while (true) {
        const int action = rng.uniform() < noise
                               ? static_cast<int>(rng.below(4))
                               : next_expert_action(layout, env.state());
        const auto res = env.step_discrete(action);
        rec.observations.push_back(res.obs);
        rec.return_ += res.reward;
        if (res.done) break;
    }
    return rec;
}

DemoFileRecord scripted_expert_pointmass(const envs::PointMassParams& params) {
    envs::PointMassEnv env(params);
    DemoFileRecord rec;
    rec.env_id = "pointmass";
    rec.quality_tag = "expert";
    rec.generator_seed = 0;
    auto obs = env.reset(0);
    rec.observations.push_back(obs);
    while (true) {
        const std::vector<double> action = {
            std::clamp(params.goal_x - obs[0], -1.0, 1.0),
            std::clamp(params.goal_y - obs[1], -1.0, 1.0)};
        const auto res = env.step_continuous(action);
        obs = res.obs;
        rec.observations.push_back(obs);
        rec.return_ += res.reward;
        if (res.done) break;
    }
    return rec;
}

DemoFileRecord scripted_medium_pointmass(const envs::PointMassParams& params,
                                         double noise_sigma, std::uint64_t seed) {
    envs::PointMassEnv env(params);
    Rng rng(mix_seed(seed, 0x706d6dULL));
    DemoFileRecord rec;
    rec.env_id = "pointmass";
    rec.quality_tag = "medium";
    rec.generator_seed = static_cast<std::int64_t>(seed);
    auto obs = env.reset(0);
    rec.observations.push_back(obs);
    while (true) {
        const std::vector<double> action = {
            std::clamp(params.goal_x - obs[0] + noise_sigma * rng.normal(), -1.0, 1.0),
            std::clamp(params.goal_y - obs[1] + noise_sigma * rng.normal(), -1.0, 1.0)};
        const auto res = env.step_continuous(action);
        obs = res.obs;
        rec.observations.push_back(obs);
        rec.return_ += res.reward;
        if (res.done) break;
    }
    return rec;
}

namespace {

json record_to_json(const DemoFileRecord& rec) {
    json j;
    j["env_id"] = rec.env_id;
    j["quality"] = rec.quality_tag;
    j["seed"] = rec.generator_seed;
    j["return"] = rec.return_;
    j["observations"] = rec.observations;
    return j;
}

} // namespace

void save_demos(const std::vector<DemoFileRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open demo file for write: " + path);
    for (const DemoFileRecord& rec : records) out << record_to_json(rec).dump() << "\n";
}

std::vector<DemoFileRecord> load_demo_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open demo file: " + path);
    std::vector<DemoFileRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error("demo file " + path + " line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (j.contains("actions"))
            throw std::runtime_error("demo file " + path + " line " +
                                     std::to_string(line_no) +
                                     ": record carries actions, violating the "
                                     "state-only contract");
        DemoFileRecord rec;
        try {
            rec.env_id = j.at("env_id").get<std::string>();
            rec.quality_tag = j.at("quality").get<std::string>();
            rec.generator_seed = j.at("seed").get<std::int64_t>();
            rec.return_ = j.at("return").get<double>();
            rec.observations = j.at("observations").get<std::vector<std::vector<double>>>();
        } catch (const json::exception& e) {
            throw std::runtime_error("demo file " + path + " line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (rec.observations.empty())
            throw std::runtime_error("demo file " + path + " line " +
                                     std::to_string(line_no) + ": no observations");
        records.push_back(std::move(rec));
    }
    if (records.empty())
        throw std::runtime_error("demo file " + path + " holds no records");
    return records;
}

guidance::DemoSet load_demos(const std::string& path, std::size_t limit,
                             std::size_t capacity) {
    auto records = load_demo_records(path);
    if (limit > 0 && records.size() > limit) records.resize(limit);
    const std::size_t cap = capacity > 0 ? capacity : std::max<std::size_t>(records.size(), 10);
    guidance::DemoSet demos(cap);
    for (auto& rec : records) {
        guidance::DemoTrajectory demo;
        demo.observations = std::move(rec.observations);
        demo.return_ = rec.return_;
        demos.add(std::move(demo));
    }
    return demos;
}

std::vector<DemoFileRecord> generate(const std::string& env_preset,
                                     const std::string& quality, std::size_t count,
                                     std::uint64_t seed, const std::string& layout_file) {
    if (count == 0) throw std::invalid_argument("demo count must be positive");
    if (quality != "expert" && quality != "medium")
        throw std::invalid_argument("demo quality must be 'expert' or 'medium'");
    std::vector<DemoFileRecord> records;
    if (env_preset == "kdt" || env_preset == "kdt-small") {
        const KdtLayout layout = layout_file.empty()
                                     ? KdtLayout::builtin(env_preset)
                                     : KdtLayout::load_file(layout_file,
                                                            env_preset == "kdt" ? 240 : 120);
        for (std::size_t i = 0; i < count; ++i) {
            DemoFileRecord rec;
            if (quality == "expert") {
                // record 0 is the exact shortest path; the rest are lightly
                // perturbed successful episodes so multi-demo files vary
                rec = scripted_expert_kdt(layout);
                for (std::uint64_t attempt = 0; i > 0 && attempt < 100; ++attempt) {
                    rec = scripted_medium_kdt(layout, 0.08, mix_seed(mix_seed(seed, i), attempt));
                    if (rec.return_ == 200.0) break;
                }
                if (rec.return_ != 200.0)
                    throw std::runtime_error("could not generate a successful expert demo");
                rec.quality_tag = "expert";
            } else {
                rec = scripted_medium_kdt(layout, 0.75, mix_seed(seed, i));
            }
            rec.env_id = env_preset;
            rec.generator_seed = static_cast<std::int64_t>(mix_seed(seed, i));
            records.push_back(std::move(rec));
        }
    } else if (env_preset == "pointmass") {
        const envs::PointMassParams params;
        for (std::size_t i = 0; i < count; ++i) {
            DemoFileRecord rec;
            if (quality == "expert") {
                rec = scripted_expert_pointmass(params);
                for (std::uint64_t attempt = 0; i > 0 && attempt < 100; ++attempt) {
                    rec = scripted_medium_pointmass(params, 0.05, mix_seed(mix_seed(seed, i), attempt));
                    if (rec.return_ == params.goal_reward) break;
                }
                if (rec.return_ != params.goal_reward)
                    throw std::runtime_error("could not generate a successful expert demo");
                rec.quality_tag = "expert";
            } else {
                rec = scripted_medium_pointmass(params, 0.3, mix_seed(seed, i));
            }
            rec.generator_seed = static_cast<std::int64_t>(mix_seed(seed, i));
            records.push_back(std::move(rec));
        }
    } else {
        throw std::invalid_argument("unknown env preset: " + env_preset);
    }
    return records;
}

} // namespace posg::demos
