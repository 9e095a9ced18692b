#include "posg/mmd.hpp"
#include "posg/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace posg;
using mmd::BandwidthMode;
using mmd::FeatureMap;
using mmd::KernelSpec;
using mmd::PointSet;

namespace {

PointSet make_set(const std::vector<std::vector<double>>& pts) {
    PointSet s;
    for (const auto& p : pts) s.push_back(p);
    return s;
}

// independent triple-loop evaluation of the V-statistic, straight from the
// definition: E[k(x,x')] - 2 E[k(x,y)] + E[k(y,y')]
double brute_force_mmd_sq(const PointSet& a, const PointSet& b, double sigma) {
    auto k = [&](const double* x, const double* y) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < a.dim; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
        return std::exp(-d2 / (2.0 * sigma * sigma));
    };
    double kxx = 0.0, kxy = 0.0, kyy = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) kxx += k(a.point(i), a.point(j));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) kxy += k(a.point(i), b.point(j));
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) kyy += k(b.point(i), b.point(j));
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    return kxx / (na * na) - 2.0 * kxy / (na * nb) + kyy / (nb * nb);
}

PointSet random_set(Rng& rng, std::size_t n, std::size_t dim) {
    PointSet s;
    s.dim = dim;
    for (std::size_t i = 0; i < n * dim; ++i) s.data.push_back(rng.uniform(-1.5, 1.5));
    return s;
}

} // namespace

TEST_CASE("kernel_eval direct values") {
    KernelSpec spec; // sigma 1, fixed
    CHECK(mmd::kernel_eval({0, 0}, {0, 0}, spec) == doctest::Approx(1.0));
    CHECK(mmd::kernel_eval({0, 0}, {1, 0}, spec) == doctest::Approx(0.606531).epsilon(1e-5));
    CHECK(mmd::kernel_eval({0, 0}, {0, 3}, spec) == doctest::Approx(0.011109).epsilon(1e-4));
    CHECK_THROWS_AS(mmd::kernel_eval({0, 0}, {0, 0, 0}, spec), std::invalid_argument);
}

TEST_CASE("kernel_eval bounded in (0,1], 1 iff equal") {
    KernelSpec spec;
    spec.bandwidth = 0.8;
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(3), y(3);
        for (int i = 0; i < 3; ++i) {
            x[i] = rng.uniform(-4, 4);
            y[i] = rng.uniform(-4, 4);
        }
        const double v = mmd::kernel_eval(x, y, spec);
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
        CHECK((v == 1.0) == (x == y));
        CHECK(mmd::kernel_eval(x, x, spec) == 1.0);
        CHECK(mmd::kernel_eval(x, y, spec) == mmd::kernel_eval(y, x, spec));
    }
}

TEST_CASE("mmd_sq closed-form singleton cases") {
    KernelSpec spec;
    const PointSet z = make_set({{0, 0}});
    const PointSet e1 = make_set({{1, 0}});
    CHECK(mmd::mmd_sq(z, z, spec) == 0.0);
    CHECK(mmd::mmd_sq(z, e1, spec) == doctest::Approx(0.786939).epsilon(1e-5));
    const PointSet pair = make_set({{0, 0}, {1, 0}});
    CHECK(mmd::mmd_sq(pair, pair, spec) == 0.0);
    CHECK_THROWS_AS(mmd::mmd_sq(z, make_set({{1, 0, 0}}), spec), std::invalid_argument);
}

TEST_CASE("mmd_sq matches the brute-force triple loop") {
    KernelSpec spec;
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t na = 1 + rng.below(5);
        const std::size_t nb = 1 + rng.below(5);
        const std::size_t dim = 1 + rng.below(3);
        const PointSet a = random_set(rng, na, dim);
        const PointSet b = random_set(rng, nb, dim);
        spec.bandwidth = rng.uniform(0.5, 2.0);
        const double got = mmd::mmd_sq(a, b, spec);
        const double want = brute_force_mmd_sq(a, b, spec.bandwidth);
        CHECK(std::abs(got - want) <=
              1e-12 * std::max({std::abs(want), std::abs(got), 1e-30}));
    }
}

TEST_CASE("mmd_sq symmetry and non-negativity") {
    KernelSpec spec;
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const PointSet a = random_set(rng, 1 + rng.below(12), 2);
        const PointSet b = random_set(rng, 1 + rng.below(12), 2);
        spec.bandwidth = rng.uniform(0.3, 3.0);
        const double ab = mmd::mmd_sq(a, b, spec);
        CHECK(ab >= 0.0);
        // symmetric up to summation order
        CHECK(ab == doctest::Approx(mmd::mmd_sq(b, a, spec)).epsilon(1e-12));
        CHECK(mmd::mmd_sq(a, a, spec) == 0.0);
    }
}

TEST_CASE("median heuristic bandwidth") {
    KernelSpec spec;
    spec.mode = BandwidthMode::median_heuristic;
    const PointSet same = make_set({{1, 1}, {1, 1}, {1, 1}});
    CHECK(mmd::resolve_bandwidth(same, same, spec) == 1.0); // all points coincide
    const PointSet spread = make_set({{0, 0}, {3, 4}});
    CHECK(mmd::resolve_bandwidth(spread, spread, spec) > 0.0);
    // a fixed spec never recomputes
    KernelSpec fixed;
    fixed.bandwidth = 2.5;
    CHECK(mmd::resolve_bandwidth(spread, spread, fixed) == 2.5);
}

TEST_CASE("traj_features identity and projection") {
    FeatureMap id;
    const auto fs = mmd::traj_features({{1, 2}, {3, 4}}, id);
    CHECK(fs.size() == 2);
    CHECK(fs.point(0)[0] == 1.0);
    CHECK(fs.point(1)[1] == 4.0);

    FeatureMap proj;
    proj.mode = FeatureMap::Mode::coordinate_projection;
    proj.projection_indices = {0, 1};
    const auto ps = mmd::traj_features({{1, 2, 9, 9}}, proj);
    CHECK(ps.dim == 2);
    CHECK(ps.point(0)[0] == 1.0);
    CHECK(ps.point(0)[1] == 2.0);

    FeatureMap bad;
    bad.mode = FeatureMap::Mode::coordinate_projection;
    bad.projection_indices = {7};
    CHECK_THROWS_AS(mmd::traj_features({{1, 2}}, bad), std::invalid_argument);
    CHECK_THROWS_AS(mmd::traj_features({}, id), std::invalid_argument);
}

TEST_CASE("subsampling is deterministic and bounded") {
    Rng rng(41);
    PointSet big = random_set(rng, 1000, 2);
    const PointSet sub1 = mmd::subsample(big, 200);
    const PointSet sub2 = mmd::subsample(big, 200);
    CHECK(sub1.size() <= 200);
    CHECK(sub1.size() == 200); // stride ceil(1000/200)=5
    CHECK(sub1.data == sub2.data);
    // order preserved: first point is the original first point
    CHECK(sub1.point(0)[0] == big.point(0)[0]);

    const PointSet small = random_set(rng, 7, 2);
    CHECK(mmd::subsample(small, 200).size() == 7);

    KernelSpec spec;
    const double d1 = mmd::traj_mmd_sq(big, small, spec, 200);
    const double d2 = mmd::traj_mmd_sq(big, small, spec, 200);
    CHECK(d1 == d2); // bit-identical repeat
}

TEST_CASE("dist_to_demoset minimum and tie-break") {
    KernelSpec spec;
    const PointSet traj = make_set({{0, 0}});
    const PointSet far = make_set({{1, 0}}); // mmd^2 = 0.786939
    // singleton at distance r so that 2 - 2 exp(-r^2/2) = 0.1
    const double r = std::sqrt(-2.0 * std::log(0.95));
    const PointSet near = make_set({{r, 0}});

    SUBCASE("copy of the trajectory wins") {
        const auto [d, idx] = mmd::dist_to_demoset(traj, {far, traj}, spec, 256);
        CHECK(d == 0.0);
        CHECK(idx == 1);
    }
    SUBCASE("constructed distances 0.7869 vs 0.1") {
        const auto [d, idx] = mmd::dist_to_demoset(traj, {far, near}, spec, 256);
        CHECK(d == doctest::Approx(0.1).epsilon(1e-9));
        CHECK(idx == 1);
    }
    SUBCASE("equal distances resolve to the lowest index") {
        const auto [d, idx] = mmd::dist_to_demoset(traj, {far, far}, spec, 256);
        CHECK(d == doctest::Approx(0.786939).epsilon(1e-5));
        CHECK(idx == 0);
    }
    SUBCASE("min property") {
        Rng rng(51);
        const PointSet t = random_set(rng, 6, 2);
        std::vector<PointSet> demos;
        for (int i = 0; i < 5; ++i) demos.push_back(random_set(rng, 4, 2));
        const auto [d, idx] = mmd::dist_to_demoset(t, demos, spec, 256);
        for (const auto& dm : demos) CHECK(d <= mmd::traj_mmd_sq(t, dm, spec, 256));
        CHECK(d == mmd::traj_mmd_sq(t, demos[idx], spec, 256));
    }
    CHECK_THROWS_AS(mmd::dist_to_demoset(traj, {}, spec, 256), std::invalid_argument);
}
