#include "dsfs/synthesis.hpp"

#include <algorithm>

#include "dsfs/error.hpp"
#include "dsfs/render.hpp"

namespace dsfs::synth {

std::size_t SyntheticSet::failure_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(provenance.begin(), provenance.end(), [](const Provenance& p) { return !p.ok; }));
}

Landmarks canonical_landmarks(const ShapeModel& model, const std::vector<double>& alpha, std::size_t width,
                              std::size_t height, const PoseAngles& pose) {
    return project_vertices(procedural_landmarks_3d(model, alpha), fit_camera(width, height, pose));
}

SyntheticSet dsfs_generate(const RoiRecord& still, const cluster::ExemplarSet& exemplars,
                           const std::vector<RoiRecord>& exemplar_rois, const ShapeModel& model,
                           const std::vector<double>& alpha, const SynthesisConfig& cfg) {
    if (exemplar_rois.size() != exemplars.size())
        throw DataError("dsfs_generate: need one ROI per exemplar");
    if (still.image.empty()) throw DataError("dsfs_generate: empty still");
    model.validate();

    const std::size_t w = still.image.width(), h = still.image.height();
    const std::vector<double> coeffs = alpha.empty() ? std::vector<double>(model.coefficient_count(), 0.0) : alpha;
    const Mesh3D mesh = synthesize_shape(model, coeffs);
    const LayerDecomposition layers = decompose(still.image, cfg.decomposition);

    Landmarks still_lms = still.landmarks;
    if (still_lms.empty()) still_lms = canonical_landmarks(model, coeffs, w, h);
    check_landmarks(still.image, still_lms);
    const std::vector<Vec3> lms_3d = lift_points(mesh, fit_camera(w, h), still_lms);

    SyntheticSet out;
    out.subject_id = still.subject_id;
    for (std::size_t j = 0; j < exemplars.size(); ++j) {
        const auto& ex = exemplars.exemplars[j];
        Provenance prov;
        prov.pose_cluster = j < exemplars.pose_cluster_of.size() ? exemplars.pose_cluster_of[j] : 0;
        prov.exemplar_index = j;
        prov.pose_roi_index = ex.pose_roi_index;
        prov.lighting_roi_index = ex.roi_index;
        prov.weight = j < exemplars.weights.size() ? exemplars.weights[j] : 0.0;
        try {
            const CameraPose cam = fit_camera(w, h, ex.pose);
            const GrayImage rendered = render_pose(mesh, layers.material, cam, w, h, cfg.transfer.max_value);
            const Landmarks rendered_lms = project_vertices(lms_3d, cam);

            const RoiRecord& lroi = exemplar_rois[j];
            Landmarks light_lms = lroi.landmarks;
            if (light_lms.empty())
                light_lms = canonical_landmarks(model, coeffs, lroi.image.width(), lroi.image.height(), lroi.pose);
            if (light_lms.size() != rendered_lms.size())
                throw DataError("landmark count differs between still and exemplar");
            const LayerDecomposition light = decompose(lroi.image, cfg.decomposition);
            out.rois.push_back(transfer_illumination(light.shading, light_lms, rendered, rendered_lms, cfg.transfer));
        } catch (const std::exception& e) {
            prov.ok = false;
            prov.error = e.what();
            out.rois.push_back(still.image);
        }
        out.provenance.push_back(std::move(prov));
    }
    return out;
}

}  // namespace dsfs::synth
