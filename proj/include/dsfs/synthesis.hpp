#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dsfs/decomposition.hpp"
#include "dsfs/exemplar_selection.hpp"
#include "dsfs/image.hpp"
#include "dsfs/shape_model.hpp"
#include "dsfs/warp.hpp"

namespace dsfs::synth {

struct SynthesisConfig {
    DecompositionConfig decomposition;
    TransferConfig transfer;
};

struct Provenance {
    std::size_t pose_cluster = 0;
    std::size_t exemplar_index = 0;     // position in the ExemplarSet
    std::size_t pose_roi_index = 0;
    std::size_t lighting_roi_index = 0;
    double weight = 0.0;
    bool ok = true;
    std::string error;  // set when the ROI is a fallback copy of the still
};

/// One synthetic ROI per exemplar, in ExemplarSet order. An exemplar that
/// fails to synthesise still occupies its slot (a copy of the still) so the
/// dictionary block width stays q; its provenance carries ok = false.
struct SyntheticSet {
    std::string subject_id;
    std::vector<GrayImage> rois;
    std::vector<Provenance> provenance;
    std::size_t size() const noexcept { return rois.size(); }
    std::size_t failure_count() const noexcept;
};

/// Five canonical landmarks of the model (eyes, nose tip, mouth corners)
/// projected into a width x height frame at `pose`. Stand-in for an upstream
/// landmark detector.
Landmarks canonical_landmarks(const ShapeModel& model, const std::vector<double>& alpha, std::size_t width,
                              std::size_t height, const PoseAngles& pose = {});

/// Renders the still's material layer on the shape at every exemplar pose and
/// relights it with the shading layer of the matching lighting exemplar.
/// `exemplar_rois[j]` is the lighting-exemplar ROI of `exemplars.exemplars[j]`.
/// Missing landmarks fall back to canonical_landmarks.
SyntheticSet dsfs_generate(const RoiRecord& still, const cluster::ExemplarSet& exemplars,
                           const std::vector<RoiRecord>& exemplar_rois, const ShapeModel& model,
                           const std::vector<double>& alpha, const SynthesisConfig& cfg = {});

}  // namespace dsfs::synth
