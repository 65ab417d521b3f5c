#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dsfs/evaluation.hpp"
#include "dsfs/exemplar_selection.hpp"
#include "dsfs/shape_model.hpp"
#include "dsfs/sparse_classifier.hpp"
#include "dsfs/synthesis.hpp"

namespace dsfs::bench {

// ---- procedural world -------------------------------------------------------

struct Identity {
    std::string id;
    GrayImage albedo;           // texture space, roi_size x roi_size
    std::vector<double> alpha;  // shape coefficients
};

/// Capture conditions of one operational frame.
struct Condition {
    PoseAngles pose;
    double light_angle = 0.0;     // direction of the brightness gradient, radians
    double light_strength = 0.0;  // gradient amplitude across the face
    double light_level = 1.0;     // mean shading
    double contrast = 1.0;
    double noise = 0.0;           // additive Gaussian sigma
};

struct WorldConfig {
    std::size_t roi_size = 48;
    /// Surveillance viewpoints and lighting set-ups of the simulated camera.
    std::vector<PoseAngles> pose_modes{{-8, 28, 3}, {6, -32, -4}, {12, 4, 0}};
    double pose_jitter = 3.0;  // degrees, per angle
    std::vector<double> light_angles{0.0, 3.14159265358979, 1.5707963267949};
    double light_strength = 0.45;
    double noise = 0.02;
};

Identity make_identity(const std::string& id, const WorldConfig& cfg, std::mt19937_64& rng);
Condition sample_condition(const WorldConfig& cfg, std::mt19937_64& rng);
/// Enrollment still: frontal, even lighting, no noise; landmarks attached.
RoiRecord render_still(const Identity& who, const synth::ShapeModel& model, const WorldConfig& cfg);
/// Operational frame under `cond`, landmarks attached.
RoiRecord render_frame(const Identity& who, const synth::ShapeModel& model, const WorldConfig& cfg,
                       const Condition& cond, std::mt19937_64& rng);

// ---- protocol ----------------------------------------------------------------

enum class ScoreSource {
    residual,  // per class: -||y - D_i x_i||
    sci,       // per class: SCI for the decided class, -1 elsewhere
};

struct ProtocolConfig {
    cluster::SelectionConfig selection;
    synth::SynthesisConfig synthesis;
    sparse::DictionaryConfig dictionary;
    sparse::SolverConfig solver;
    double tau = 0.3;
    double pauc_cutoff = 0.1;
    ScoreSource score = ScoreSource::residual;
};

struct ArmResult {
    std::vector<eval::CurveSummary> per_class;
    eval::CurveSummary pooled;
    double mean_auc = 0.0;
    double mean_pauc = 0.0;  // normalised
    double mean_aupr = 0.0;
    double rank1_accuracy = 0.0;  // over watch-list probes
    double dsq = 0.0;             // ED dictionary vs OD probes of the same subjects
    std::size_t nonconverged = 0;
};

struct ProtocolResult {
    std::size_t q = 0;
    std::size_t pose_clusters = 0;
    bool calibration_converged = true;
    std::size_t synthesis_failures = 0;
    ArmResult baseline;   // stills only
    ArmResult augmented;  // stills + synthetic ROIs
    std::string note;
};

/// calibrate -> synthesize -> enroll -> recognize on in-memory data. Probes
/// whose subject is not in the gallery act as non-targets for every class.
/// The first gallery still serves as the calibration reference.
ProtocolResult evaluate_protocol(const std::vector<RoiRecord>& gallery, const std::vector<RoiRecord>& generic,
                                 const std::vector<RoiRecord>& probes, const synth::ShapeModel& model,
                                 const ProtocolConfig& cfg);

std::vector<std::vector<double>> class_scores(const std::vector<sparse::Decision>& decisions,
                                              const std::vector<sparse::SparseSolution>& solutions,
                                              ScoreSource source);

/// DSQ between the first k probes of each class and the first k columns of
/// its block, k = min(columns, smallest non-empty probe count). Columns past
/// the block repeat the still so arms with different q compare on equal
/// footing. Classes without k probes are left out; 0 when nothing pairs.
double paired_dsq(const sparse::CrossDomainDictionary& dict, const Eigen::MatrixXd& probe_cols,
                  const std::vector<std::vector<std::size_t>>& probes_of_class, std::size_t columns);

// ---- benchmark ---------------------------------------------------------------

struct BenchmarkConfig {
    WorldConfig world;
    ProtocolConfig protocol;
    std::uint64_t seed = 1;
    std::size_t replications = 5;
    std::size_t watchlist = 5;
    std::size_t generic = 10;
    std::size_t others = 10;         // unknown identities seen only as probes
    std::size_t generic_frames = 6;  // per generic identity
    std::size_t probe_frames = 6;    // per watch-list / unknown identity
};

/// Generated data of one replication.
struct Split {
    std::vector<RoiRecord> gallery;
    std::vector<RoiRecord> generic;
    std::vector<RoiRecord> probes;
};

/// Identity pool and frames depend only on (seed, replication).
Split make_split(const BenchmarkConfig& cfg, const synth::ShapeModel& model, std::size_t replication);

/// Writes PNGs plus gallery/generic/probes manifests under `dir`.
void export_split(const Split& split, const std::filesystem::path& dir);

struct BenchmarkReport {
    std::vector<ProtocolResult> replications;
    double mean_auc_baseline = 0.0;
    double mean_auc_augmented = 0.0;
    double std_auc_baseline = 0.0;
    double std_auc_augmented = 0.0;
};

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const synth::ShapeModel& model);

}  // namespace dsfs::bench
