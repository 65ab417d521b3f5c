#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dsfs/benchmark.hpp"
#include "dsfs/exemplar_selection.hpp"
#include "dsfs/manifest.hpp"
#include "dsfs/sparse_classifier.hpp"
#include "dsfs/synthesis.hpp"

namespace dsfs::pipeline {

enum class MissingLandmarks {
    skip,       // leave the subject out and report it
    canonical,  // fall back to the model's canonical landmarks
};

struct PipelineConfig {
    bench::BenchmarkConfig benchmark;  // protocol settings live in benchmark.protocol
    std::string shape_model;           // empty: the built-in procedural head
    MissingLandmarks missing_landmarks = MissingLandmarks::skip;
    bool export_fixture = false;       // benchmark also writes replication 0 as files
    std::size_t dsq_columns = 0;       // paired columns per class in evaluate; 0 = block width

    const bench::ProtocolConfig& protocol() const { return benchmark.protocol; }
    bench::ProtocolConfig& protocol() { return benchmark.protocol; }

    /// Throws ConfigError. tau must lie strictly inside (0, 1).
    void validate() const;
};

/// Flat "key = value" text, '#' comments. Keys not present keep their
/// defaults; unknown keys and malformed values are ConfigErrors.
PipelineConfig parse_config(const std::string& text);
PipelineConfig read_config(const std::filesystem::path& path);
/// Every key with its current value, one per line, grouped and commented.
std::string format_config(const PipelineConfig& cfg);

/// Sets one key from its textual value (same rules as parse_config).
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> config_keys();

synth::ShapeModel load_shape_model(const PipelineConfig& cfg);

// ---- artifacts ----------------------------------------------------------------

/// Persisted calibration result. Exemplar ROI paths are stored relative to the
/// file so a run directory can be moved as a whole.
struct ExemplarFile {
    cluster::ExemplarSet set;
    std::vector<RoiRecord> rois;  // lighting-exemplar ROIs, images loaded on read
};

std::string format_exemplar_file(const cluster::ExemplarSet& set, const std::vector<ManifestEntry>& rois,
                                 const std::filesystem::path& base);
void write_exemplar_file(const std::filesystem::path& path, const cluster::ExemplarSet& set,
                         const std::vector<ManifestEntry>& rois);
ExemplarFile read_exemplar_file(const std::filesystem::path& path);

struct ProvenanceRecord {
    std::string path;  // relative to the synthetic directory
    std::string subject;
    synth::Provenance provenance;
};

struct SyntheticIndex {
    std::size_t q = 0;
    std::vector<double> weights;          // per exemplar
    std::vector<ProvenanceRecord> records;
    std::vector<std::string> skipped;     // "subject: reason"
};

void write_synthetic_index(const std::filesystem::path& dir, const SyntheticIndex& index);
SyntheticIndex read_synthetic_index(const std::filesystem::path& dir);

struct DecisionRecord {
    std::string path;
    std::string subject;  // ground truth from the probe manifest, may be "-"
    sparse::Decision decision;
    std::vector<double> residuals;  // per class, dictionary order
    std::size_t iterations = 0;
};

struct DecisionFile {
    std::vector<std::string> class_ids;
    std::vector<DecisionRecord> records;
};

void write_decision_file(const std::filesystem::path& path, const DecisionFile& f);
DecisionFile read_decision_file(const std::filesystem::path& path);

// ---- commands -----------------------------------------------------------------

/// Outcome of a command. `nonconverged` maps to exit status 3.
struct CommandResult {
    std::vector<std::filesystem::path> written;
    std::size_t nonconverged = 0;
    std::vector<std::string> warnings;
};

CommandResult cmd_calibrate(const std::filesystem::path& generic_manifest, const std::filesystem::path& reference,
                            const std::filesystem::path& out, const PipelineConfig& cfg);
CommandResult cmd_synthesize(const std::filesystem::path& gallery_manifest, const std::filesystem::path& exemplars,
                             const std::filesystem::path& out_dir, const PipelineConfig& cfg);
/// `synthetic_dir` empty: baseline dictionary of stills only.
CommandResult cmd_enroll(const std::filesystem::path& gallery_manifest, const std::filesystem::path& synthetic_dir,
                         const std::filesystem::path& out, const PipelineConfig& cfg);
CommandResult cmd_recognize(const std::filesystem::path& probe_manifest, const std::filesystem::path& dictionary,
                            const std::filesystem::path& out, const PipelineConfig& cfg);
/// `input` is a decision file or a "score label" file (label 1 = target).
/// With a dictionary, DSQ against the decision file's probes is added.
CommandResult cmd_evaluate(const std::filesystem::path& input, const std::filesystem::path& dictionary,
                           const std::filesystem::path& out, const PipelineConfig& cfg);
CommandResult cmd_benchmark(const std::filesystem::path& out_dir, const PipelineConfig& cfg, std::ostream& log);

}  // namespace dsfs::pipeline
