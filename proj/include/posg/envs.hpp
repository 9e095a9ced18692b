#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace posg::envs {

struct StepResult {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
    bool terminal = false; // goal reached; false when truncated at the step cap
};

class Env {
public:
    virtual ~Env() = default;

    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual StepResult step_discrete(int action);
    virtual StepResult step_continuous(const std::vector<double>& action);

    virtual std::size_t obs_dim() const = 0;
    virtual bool discrete_actions() const = 0;
    virtual std::size_t action_count() const { return 0; }
    virtual std::size_t action_dim() const { return 0; }
    virtual std::size_t max_steps() const = 0;

    // fixed per-component scale applied to observations before they enter the
    // policy/value networks (raw observations are what everything else sees)
    virtual std::vector<double> obs_scale() const = 0;
    virtual std::string id() const = 0;
};

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

// Grid layout parsed from text: '#' wall, '.' floor, 'K' key, 'D' door,
// 'T' treasure, 'S' start. Validated by flood fill at construction: the
// start->key->door->treasure chain must be walkable with the door treated as
// locked until the key leg is done.
struct KdtLayout {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> walls; // row-major
    Cell key, door, treasure, start;
    std::size_t max_steps = 240;

    bool is_wall(int row, int col) const;
    bool in_bounds(int row, int col) const;

    static KdtLayout parse(const std::string& text, std::size_t max_steps);
    static KdtLayout load_file(const std::string& path, std::size_t max_steps);

    // shipped presets: "kdt" is the 26x36 grid with a 240-step cap,
    // "kdt-small" the 13x18 grid with a 120-step cap
    static KdtLayout builtin(const std::string& name);
    static std::string builtin_text(const std::string& name);
};

// actions: 0 east, 1 west, 2 south, 3 north
class KdtEnv final : public Env {
public:
    explicit KdtEnv(KdtLayout layout);

    std::vector<double> reset(std::uint64_t seed) override;
    StepResult step_discrete(int action) override;

    std::size_t obs_dim() const override { return 4; }
    bool discrete_actions() const override { return true; }
    std::size_t action_count() const override { return 4; }
    std::size_t max_steps() const override { return layout_.max_steps; }
    std::vector<double> obs_scale() const override;
    std::string id() const override { return id_; }

    const KdtLayout& layout() const { return layout_; }
    void set_id(std::string id) { id_ = std::move(id); }

    struct State {
        Cell agent;
        bool has_key = false;
        bool door_open = false;
        std::size_t step_count = 0;
        bool done = true;
    };
    const State& state() const { return state_; }

private:
    std::vector<double> observation() const;

    KdtLayout layout_;
    State state_;
    std::string id_ = "kdt";
};

struct PointMassParams {
    double arena_half = 10.0;
    double start_x = -8.0, start_y = -8.0;
    double goal_x = 8.0, goal_y = 8.0;
    double goal_radius = 0.5;
    double accel = 0.1;
    double v_max = 1.0;
    double goal_reward = 100.0;
    std::size_t max_steps = 500;
};

// Sparse 2D navigation: zero reward everywhere except a single bonus inside
// the goal radius; actions are accelerations in [-1, 1]^2.
class PointMassEnv final : public Env {
public:
    explicit PointMassEnv(PointMassParams params = {});

    std::vector<double> reset(std::uint64_t seed) override;
    StepResult step_continuous(const std::vector<double>& action) override;

    std::size_t obs_dim() const override { return 4; }
    bool discrete_actions() const override { return false; }
    std::size_t action_dim() const override { return 2; }
    std::size_t max_steps() const override { return params_.max_steps; }
    std::vector<double> obs_scale() const override;
    std::string id() const override { return "pointmass"; }

    const PointMassParams& params() const { return params_; }

private:
    std::vector<double> observation() const;

    PointMassParams params_;
    double x_ = 0, y_ = 0, vx_ = 0, vy_ = 0;
    std::size_t step_count_ = 0;
    bool done_ = true;
};

// env presets used by configs: "kdt", "kdt-small", "pointmass"
std::unique_ptr<Env> make_env(const std::string& preset,
                              const std::string& layout_file = "");

} // namespace posg::envs
