#include "dsfs/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"

namespace dsfs {

std::string format_real(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

double parse_real(const std::string& tok, const std::string& where) {
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw DataError(where + ": expected a number, got '" + tok + "'");
    return v;
}

}  // namespace

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
    const std::filesystem::path p(e.path);
    return p.is_absolute() ? p : root / p;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& root) {
    Manifest m;
    m.root = root;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string where = "manifest line " + std::to_string(lineno);
        if (tok.size() < 6) throw DataError(where + ": need path subject domain pitch yaw roll");
        if ((tok.size() - 6) % 2 != 0) throw DataError(where + ": landmark coordinates must come in pairs");
        ManifestEntry e;
        e.path = tok[0];
        e.subject = tok[1];
        try {
            e.domain = parse_domain(tok[2]);
        } catch (const std::exception&) {
            throw DataError(where + ": unknown domain '" + tok[2] + "'");
        }
        e.pose = {parse_real(tok[3], where), parse_real(tok[4], where), parse_real(tok[5], where)};
        for (std::size_t i = 6; i < tok.size(); i += 2)
            e.landmarks.push_back({parse_real(tok[i], where), parse_real(tok[i + 1], where)});
        m.entries.push_back(std::move(e));
    }
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open manifest " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    Manifest m = parse_manifest(ss.str(), path.parent_path());
    for (const auto& e : m.entries)
        if (!std::filesystem::exists(m.resolve(e)))
            throw DataError(path.string() + ": missing file " + m.resolve(e).string());
    return m;
}

std::string format_manifest_entry(const ManifestEntry& e) {
    std::string s = e.path + ' ' + e.subject + ' ' + (e.domain == Domain::enrollment ? "ed" : "od") + ' ' +
                    format_real(e.pose.pitch) + ' ' + format_real(e.pose.yaw) + ' ' + format_real(e.pose.roll);
    for (const auto& p : e.landmarks) s += ' ' + format_real(p.x) + ' ' + format_real(p.y);
    return s;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries,
                    const std::string& header) {
    std::string out;
    if (!header.empty()) out += "# " + header + '\n';
    out += "# path subject domain pitch yaw roll [landmark x y ...]\n";
    for (const auto& e : entries) out += format_manifest_entry(e) + '\n';
    io::write_file_atomic(path, out);
}

std::vector<RoiRecord> load_records(const Manifest& m) {
    std::vector<RoiRecord> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        RoiRecord r;
        r.path = m.resolve(e).string();
        r.image = io::read_image(r.path);
        r.pose = e.pose;
        r.landmarks = e.landmarks;
        r.subject_id = e.subject;
        r.domain = e.domain;
        try {
            check_landmarks(r.image, r.landmarks);
        } catch (const std::exception& ex) {
            throw DataError(r.path + ": " + ex.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace dsfs
