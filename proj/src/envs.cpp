#include "posg/envs.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace posg::envs {

StepResult Env::step_discrete(int) {
    throw std::logic_error("env does not take discrete actions");
}

StepResult Env::step_continuous(const std::vector<double>&) {
    throw std::logic_error("env does not take continuous actions");
}

namespace {

// kdt: 26x36, three rooms. The tall left room holds the start and the key,
// a bottom gap leads to the lower-right room, and the only way into the
// upper-right treasure room is the door in the dividing wall.
const char* kKdtFull =
    "####################################\n"
    "#................#.................#\n"
    "#................#...............T.#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................##########D########\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#................#.................#\n"
    "#.S................................#\n"
    "#..................................#\n"
    "#.....K..........#.................#\n"
    "####################################\n";

const char* kKdtSmall =
    "##################\n"
    "#.......#........#\n"
    "#.......#......T.#\n"
    "#.......#........#\n"
    "#.......#........#\n"
    "#.......#........#\n"
    "#.......####D#####\n"
    "#.......#........#\n"
    "#.......#........#\n"
    "#S......#........#\n"
    "#................#\n"
    "#.K..............#\n"
    "##################\n";

} // namespace

bool KdtLayout::is_wall(int row, int col) const {
    if (!in_bounds(row, col)) return true;
    return walls[static_cast<std::size_t>(row) * width + static_cast<std::size_t>(col)] != 0;
}

bool KdtLayout::in_bounds(int row, int col) const {
    return row >= 0 && col >= 0 && static_cast<std::size_t>(row) < height &&
           static_cast<std::size_t>(col) < width;
}

namespace {

bool kdt_reachable(const KdtLayout& l, Cell from, Cell to, bool allow_door) {
    std::vector<std::uint8_t> seen(l.height * l.width, 0);
    auto idx = [&](Cell c) {
        return static_cast<std::size_t>(c.row) * l.width + static_cast<std::size_t>(c.col);
    };
    auto passable = [&](Cell c) {
        if (l.is_wall(c.row, c.col)) return false;
        if (c == l.door && !allow_door) return false;
        return true;
    };
    if (!passable(from)) return false;
    std::deque<Cell> queue{from};
    seen[idx(from)] = 1;
    const int dr[4] = {0, 0, 1, -1};
    const int dc[4] = {1, -1, 0, 0};
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        if (c == to) return true;
        for (int a = 0; a < 4; ++a) {
            const Cell n{c.row + dr[a], c.col + dc[a]};
            if (!l.in_bounds(n.row, n.col) || !passable(n)) continue;
            if (seen[idx(n)]) continue;
            seen[idx(n)] = 1;
            queue.push_back(n);
        }
    }
    return false;
}

} // namespace

KdtLayout KdtLayout::parse(const std::string& text, std::size_t max_steps) {
    KdtLayout l;
    l.max_steps = max_steps;
    std::vector<std::string> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.size() < 3) throw std::invalid_argument("kdt layout: too few rows");
    l.height = rows.size();
    l.width = rows[0].size();
    l.walls.assign(l.height * l.width, 0);

    int found_k = 0, found_d = 0, found_t = 0, found_s = 0;
    for (std::size_t r = 0; r < l.height; ++r) {
        if (rows[r].size() != l.width)
            throw std::invalid_argument("kdt layout: ragged rows");
        for (std::size_t c = 0; c < l.width; ++c) {
            const Cell cell{static_cast<int>(r), static_cast<int>(c)};
            switch (rows[r][c]) {
                case '#': l.walls[r * l.width + c] = 1; break;
                case '.': break;
                case 'K': l.key = cell; ++found_k; break;
                case 'D': l.door = cell; ++found_d; break;
                case 'T': l.treasure = cell; ++found_t; break;
                case 'S': l.start = cell; ++found_s; break;
                default:
                    throw std::invalid_argument("kdt layout: unknown cell character");
            }
        }
    }
    if (found_k != 1 || found_d != 1 || found_t != 1 || found_s != 1)
        throw std::invalid_argument("kdt layout: need exactly one K, D, T, S");

    const Cell cells[4] = {l.key, l.door, l.treasure, l.start};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (cells[i] == cells[j])
                throw std::invalid_argument("kdt layout: K/D/T/S must be distinct");

    if (!kdt_reachable(l, l.start, l.key, /*allow_door=*/false))
        throw std::invalid_argument("kdt layout: key unreachable from start");
    if (!kdt_reachable(l, l.key, l.door, /*allow_door=*/true))
        throw std::invalid_argument("kdt layout: door unreachable from key");
    if (!kdt_reachable(l, l.door, l.treasure, /*allow_door=*/true))
        throw std::invalid_argument("kdt layout: treasure unreachable from door");
    return l;
}

KdtLayout KdtLayout::load_file(const std::string& path, std::size_t max_steps) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open layout file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), max_steps);
}

std::string KdtLayout::builtin_text(const std::string& name) {
    if (name == "kdt") return kKdtFull;
    if (name == "kdt-small") return kKdtSmall;
    throw std::invalid_argument("unknown kdt layout preset: " + name);
}

KdtLayout KdtLayout::builtin(const std::string& name) {
    return parse(builtin_text(name), name == "kdt" ? 240 : 120);
}

KdtEnv::KdtEnv(KdtLayout layout) : layout_(std::move(layout)) {}

std::vector<double> KdtEnv::reset(std::uint64_t /*seed*/) {
    state_ = State{};
    state_.agent = layout_.start;
    state_.done = false;
    return observation();
}

std::vector<double> KdtEnv::observation() const {
    return {static_cast<double>(state_.agent.row), static_cast<double>(state_.agent.col),
            state_.has_key ? 1.0 : 0.0, state_.door_open ? 1.0 : 0.0};
}

std::vector<double> KdtEnv::obs_scale() const {
    return {1.0 / static_cast<double>(layout_.height - 1),
            1.0 / static_cast<double>(layout_.width - 1), 1.0, 1.0};
}

StepResult KdtEnv::step_discrete(int action) {
    if (state_.done) throw std::logic_error("kdt: step after episode end");
    if (action < 0 || action > 3) throw std::invalid_argument("kdt: bad action");

    static constexpr int dr[4] = {0, 0, 1, -1}; // east, west, south, north
    static constexpr int dc[4] = {1, -1, 0, 0};
    const Cell target{state_.agent.row + dr[action], state_.agent.col + dc[action]};

    const bool blocked = layout_.is_wall(target.row, target.col) ||
                         (target == layout_.door && !state_.has_key);
    if (!blocked) state_.agent = target;
    if (state_.agent == layout_.key) state_.has_key = true;
    if (state_.agent == layout_.door) state_.door_open = true;
    ++state_.step_count;

    StepResult res;
    if (state_.agent == layout_.treasure) {
        res.reward = 200.0;
        res.done = true;
        res.terminal = true;
    } else if (state_.step_count >= layout_.max_steps) {
        res.done = true;
    }
    state_.done = res.done;
    res.obs = observation();
    return res;
}

PointMassEnv::PointMassEnv(PointMassParams params) : params_(params) {}

std::vector<double> PointMassEnv::reset(std::uint64_t /*seed*/) {
    x_ = params_.start_x;
    y_ = params_.start_y;
    vx_ = vy_ = 0.0;
    step_count_ = 0;
    done_ = false;
    return observation();
}

std::vector<double> PointMassEnv::observation() const { return {x_, y_, vx_, vy_}; }

std::vector<double> PointMassEnv::obs_scale() const {
    const double s = 1.0 / params_.arena_half;
    return {s, s, 1.0, 1.0};
}

StepResult PointMassEnv::step_continuous(const std::vector<double>& action) {
    if (done_) throw std::logic_error("pointmass: step after episode end");
    if (action.size() != 2) throw std::invalid_argument("pointmass: bad action size");
    if (!std::isfinite(action[0]) || !std::isfinite(action[1]))
        throw std::invalid_argument("pointmass: non-finite action");

    const double ax = std::clamp(action[0], -1.0, 1.0);
    const double ay = std::clamp(action[1], -1.0, 1.0);
    vx_ += params_.accel * ax;
    vy_ += params_.accel * ay;
    const double speed = std::hypot(vx_, vy_);
    if (speed > params_.v_max) {
        vx_ *= params_.v_max / speed;
        vy_ *= params_.v_max / speed;
    }
    x_ = std::clamp(x_ + vx_, -params_.arena_half, params_.arena_half);
    y_ = std::clamp(y_ + vy_, -params_.arena_half, params_.arena_half);
    ++step_count_;

    StepResult res;
    const double dist = std::hypot(x_ - params_.goal_x, y_ - params_.goal_y);
    if (dist < params_.goal_radius) {
        res.reward = params_.goal_reward;
        res.done = true;
        res.terminal = true;
    } else if (step_count_ >= params_.max_steps) {
        res.done = true;
    }
    done_ = res.done;
    res.obs = observation();
    return res;
}

std::unique_ptr<Env> make_env(const std::string& preset, const std::string& layout_file) {
    if (preset == "kdt" || preset == "kdt-small") {
        KdtLayout layout = layout_file.empty()
                               ? KdtLayout::builtin(preset)
                               : KdtLayout::load_file(layout_file,
                                                      preset == "kdt" ? 240 : 120);
        auto env = std::make_unique<KdtEnv>(std::move(layout));
        env->set_id(preset);
        return env;
    }
    if (preset == "pointmass") return std::make_unique<PointMassEnv>();
    throw std::invalid_argument("unknown env preset: " + preset);
}

} // namespace posg::envs
