#include "posg/mmd.hpp"

#include "posg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace posg::mmd {

std::vector<double> FeatureMap::apply(const std::vector<double>& obs) const {
    if (mode == Mode::identity) return obs;
    std::vector<double> out;
    out.reserve(projection_indices.size());
    for (std::size_t idx : projection_indices) {
        if (idx >= obs.size())
            throw std::invalid_argument("feature projection index out of range");
        out.push_back(obs[idx]);
    }
    return out;
}

void PointSet::push_back(const std::vector<double>& p) {
    if (dim == 0) dim = p.size();
    if (p.size() != dim)
        throw std::invalid_argument("point dimension mismatch in PointSet");
    data.insert(data.end(), p.begin(), p.end());
}

double kernel_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const KernelSpec& spec) {
    if (x.size() != y.size())
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    if (!(spec.bandwidth > 0.0))
        throw std::invalid_argument("kernel_eval: bandwidth must be positive");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        d2 += diff * diff;
    }
    return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

double resolve_bandwidth(const PointSet& a, const PointSet& b, const KernelSpec& spec) {
    if (spec.mode == BandwidthMode::fixed) {
        if (!(spec.bandwidth > 0.0))
            throw std::invalid_argument("mmd: fixed bandwidth must be positive");
        return spec.bandwidth;
    }
    // median of pairwise distances over the pooled points
    const std::size_t n = a.size(), m = b.size();
    const std::size_t total = n + m;
    auto point_of = [&](std::size_t i) {
        return i < n ? a.point(i) : b.point(i - n);
    };
    std::vector<double> dists;
    dists.reserve(total * (total - 1) / 2);
    for (std::size_t i = 0; i < total; ++i) {
        const double* pi = point_of(i);
        for (std::size_t j = i + 1; j < total; ++j) {
            const double* pj = point_of(j);
            double d2 = 0.0;
            for (std::size_t k = 0; k < a.dim; ++k) {
                const double diff = pi[k] - pj[k];
                d2 += diff * diff;
            }
            dists.push_back(std::sqrt(d2));
        }
    }
    if (dists.empty()) return 1.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    const double med = dists[mid];
    return med > 0.0 ? med : 1.0;
}

double mmd_sq(const PointSet& a, const PointSet& b, const KernelSpec& spec) {
    if (a.size() == 0 || b.size() == 0)
        throw std::invalid_argument("mmd_sq: point sets must be non-empty");
    if (a.dim != b.dim)
        throw std::invalid_argument("mmd_sq: dimension mismatch");

    const double sigma = resolve_bandwidth(a, b, spec);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    const double saa =
        kernels::rbf_sum(a.data.data(), a.size(), a.data.data(), a.size(), a.dim, inv2s2);
    const double sbb =
        kernels::rbf_sum(b.data.data(), b.size(), b.data.data(), b.size(), b.dim, inv2s2);
    const double sab =
        kernels::rbf_sum(a.data.data(), a.size(), b.data.data(), b.size(), a.dim, inv2s2);

    const double v = saa / (na * na) - 2.0 * sab / (na * nb) + sbb / (nb * nb);
    return std::max(0.0, v);
}

PointSet traj_features(const std::vector<std::vector<double>>& observations,
                       const FeatureMap& g) {
    if (observations.empty())
        throw std::invalid_argument("traj_features: empty observation sequence");
    PointSet out;
    for (const auto& obs : observations) out.push_back(g.apply(obs));
    return out;
}

PointSet subsample(const PointSet& points, std::size_t max_points) {
    if (max_points == 0)
        throw std::invalid_argument("subsample: max_points must be positive");
    const std::size_t n = points.size();
    if (n <= max_points) return points;
    const std::size_t stride = (n + max_points - 1) / max_points;
    PointSet out;
    out.dim = points.dim;
    for (std::size_t i = 0; i < n; i += stride) {
        out.data.insert(out.data.end(), points.point(i), points.point(i) + points.dim);
    }
    return out;
}

double traj_mmd_sq(const PointSet& features1, const PointSet& features2,
                   const KernelSpec& spec, std::size_t max_points) {
    return mmd_sq(subsample(features1, max_points), subsample(features2, max_points), spec);
}

double traj_mmd_sq(const std::vector<std::vector<double>>& obs1,
                   const std::vector<std::vector<double>>& obs2,
                   const FeatureMap& g, const KernelSpec& spec,
                   std::size_t max_points) {
    return traj_mmd_sq(traj_features(obs1, g), traj_features(obs2, g), spec, max_points);
}

std::pair<double, std::size_t> dist_to_demoset(const PointSet& traj_feats,
                                               const std::vector<PointSet>& demo_features,
                                               const KernelSpec& spec,
                                               std::size_t max_points) {
    if (demo_features.empty())
        throw std::invalid_argument("dist_to_demoset: demo set is empty");
    double best = 0.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < demo_features.size(); ++i) {
        const double d = traj_mmd_sq(traj_feats, demo_features[i], spec, max_points);
        if (i == 0 || d < best) {
            best = d;
            best_idx = i;
        }
    }
    return {best, best_idx};
}

} // namespace posg::mmd
