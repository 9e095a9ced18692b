#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace posg::mmd {

enum class KernelFamily { rbf };
enum class BandwidthMode { fixed, median_heuristic };

struct KernelSpec {
    KernelFamily family = KernelFamily::rbf;
    double bandwidth = 1.0;
    BandwidthMode mode = BandwidthMode::fixed;
};

// Maps a raw observation to the feature vector the trajectory distance sees,
// e.g. the (row, col) coordinates out of a wider state tuple.
struct FeatureMap {
    enum class Mode { identity, coordinate_projection };
    Mode mode = Mode::identity;
    std::vector<std::size_t> projection_indices;

    std::vector<double> apply(const std::vector<double>& obs) const;
};

// Row-major set of equal-dimension points.
struct PointSet {
    std::size_t dim = 0;
    std::vector<double> data;

    std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
    const double* point(std::size_t i) const { return data.data() + i * dim; }
    void push_back(const std::vector<double>& p);
};

// exp(-||x - y||^2 / (2 sigma^2)); requires a resolved (fixed) bandwidth
double kernel_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const KernelSpec& spec);

// biased V-statistic estimate of squared MMD between the two sample sets;
// under median_heuristic the bandwidth is recomputed from the pooled pairwise
// distances of the inputs (sigma = 1 when every point coincides)
double mmd_sq(const PointSet& a, const PointSet& b, const KernelSpec& spec);

// bandwidth actually used by mmd_sq for these inputs
double resolve_bandwidth(const PointSet& a, const PointSet& b, const KernelSpec& spec);

PointSet traj_features(const std::vector<std::vector<double>>& observations,
                       const FeatureMap& g);

// stride subsample to at most max_points (stride = ceil(n / max_points)),
// keeping order; identity when the set already fits
PointSet subsample(const PointSet& points, std::size_t max_points);

double traj_mmd_sq(const PointSet& features1, const PointSet& features2,
                   const KernelSpec& spec, std::size_t max_points);
double traj_mmd_sq(const std::vector<std::vector<double>>& obs1,
                   const std::vector<std::vector<double>>& obs2,
                   const FeatureMap& g, const KernelSpec& spec,
                   std::size_t max_points);

// minimum traj_mmd_sq over the demo feature sets; ties resolve to the lowest
// index; returns {distance, argmin index}
std::pair<double, std::size_t> dist_to_demoset(const PointSet& traj_features,
                                               const std::vector<PointSet>& demo_features,
                                               const KernelSpec& spec,
                                               std::size_t max_points);

} // namespace posg::mmd
