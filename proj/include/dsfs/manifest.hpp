#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dsfs/image.hpp"

namespace dsfs {

// One ROI per line, whitespace separated:
//   path subject domain pitch yaw roll [x1 y1 x2 y2 ...]
// domain is "enrollment"/"ed" or "operational"/"od". '#' starts a comment.
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
    std::string path;
    std::string subject;
    Domain domain = Domain::operational;
    PoseAngles pose;
    Landmarks landmarks;
};

struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    std::filesystem::path resolve(const ManifestEntry& e) const;
};

/// Parses and checks that every referenced file exists (DataError otherwise).
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& root);
std::string format_manifest_entry(const ManifestEntry& e);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::string& header = {});

/// Reads every image; landmarks are checked against the image bounds.
std::vector<RoiRecord> load_records(const Manifest& m);

/// Shortest round-trip decimal form.
std::string format_real(double v);

}  // namespace dsfs
