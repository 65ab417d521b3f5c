#include "dsfs/exemplar_selection.hpp"

#include <algorithm>
#include <numeric>

#include "dsfs/error.hpp"

namespace dsfs::cluster {

std::vector<double> exemplar_weights(const std::vector<std::size_t>& cluster_sizes, std::size_t n) {
    if (n == 0) throw DataError("exemplar_weights: total count must be positive");
    const std::size_t total = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
    if (total != n)
        throw DataError("exemplar_weights: cluster sizes sum to " + std::to_string(total) + ", expected " +
                        std::to_string(n));
    std::vector<double> w;
    w.reserve(cluster_sizes.size());
    for (std::size_t c : cluster_sizes) w.push_back(static_cast<double>(c) / static_cast<double>(n));
    return w;
}

namespace {

void rescale(std::vector<std::vector<double>>& pts, SpaceScaling scaling) {
    if (scaling == SpaceScaling::none || pts.empty()) return;
    const std::size_t dim = pts.front().size();
    std::vector<double> lo(dim), range(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        auto [mn, mx] = std::minmax_element(pts.begin(), pts.end(),
                                            [c](const auto& a, const auto& b) { return a[c] < b[c]; });
        lo[c] = (*mn)[c];
        range[c] = (*mx)[c] - (*mn)[c];
    }
    if (scaling == SpaceScaling::joint) {
        const double r = *std::max_element(range.begin(), range.end());
        std::fill(range.begin(), range.end(), r);
    }
    for (auto& p : pts)
        for (std::size_t c = 0; c < dim; ++c) p[c] = range[c] > 0.0 ? (p[c] - lo[c]) / range[c] : 0.0;
}

ClusterResult cluster_points(std::vector<std::vector<double>> pts, const SelectionConfig& cfg) {
    rescale(pts, cfg.scaling);
    return ap_cluster(negative_squared_distances(pts), cfg.ap);
}

}  // namespace

ExemplarSet two_step_select(const std::vector<metrics::ConditionVector>& conditions, const SelectionConfig& cfg) {
    if (conditions.empty()) throw DataError("two_step_select: empty generic set");
    const std::size_t n = conditions.size();

    std::vector<std::vector<double>> pose_pts;
    pose_pts.reserve(n);
    for (const auto& c : conditions) pose_pts.push_back({c.pose.pitch, c.pose.yaw, c.pose.roll});
    const ClusterResult pose = cluster_points(std::move(pose_pts), cfg);

    ExemplarSet out;
    out.generic_count = n;
    out.pose_cluster_count = pose.cluster_count();
    out.converged = pose.converged;
    out.pose_cluster_of_roi.resize(n);
    std::vector<std::size_t> sizes;
    for (std::size_t j = 0; j < pose.exemplar_indices.size(); ++j) {
        const std::size_t pose_exemplar = pose.exemplar_indices[j];
        const std::vector<std::size_t> members = pose.members_of(pose_exemplar);
        for (std::size_t m : members) out.pose_cluster_of_roi[m] = j;

        std::vector<std::vector<double>> light_pts;
        light_pts.reserve(members.size());
        for (std::size_t m : members) light_pts.push_back({conditions[m].luminance, conditions[m].contrast});
        const ClusterResult light = cluster_points(std::move(light_pts), cfg);
        out.converged = out.converged && light.converged;

        for (std::size_t local : light.exemplar_indices) {
            Exemplar e;
            e.roi_index = members[local];
            e.pose_roi_index = pose_exemplar;
            e.pose = conditions[pose_exemplar].pose;
            e.condition = conditions[members[local]];
            e.cluster_size = light.members_of(local).size();
            out.exemplars.push_back(e);
            out.pose_cluster_of.push_back(j);
            sizes.push_back(e.cluster_size);
        }
    }
    out.weights = exemplar_weights(sizes, n);
    return out;
}

ExemplarSet two_step_select(const std::vector<RoiRecord>& generic, const GrayImage& reference,
                            const SelectionConfig& cfg) {
    if (generic.empty()) throw DataError("two_step_select: empty generic set");
    std::vector<metrics::ConditionVector> conditions;
    conditions.reserve(generic.size());
    for (const auto& roi : generic) conditions.push_back(metrics::condition_vector(roi, reference, cfg.metrics));
    return two_step_select(conditions, cfg);
}

}  // namespace dsfs::cluster
