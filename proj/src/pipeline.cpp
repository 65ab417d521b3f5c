#include "dsfs/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dsfs/error.hpp"
#include "dsfs/evaluation.hpp"
#include "dsfs/image_io.hpp"

namespace fs = std::filesystem;

namespace dsfs::pipeline {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt(double v) { return format_real(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

struct Key {
    std::string name;
    std::string comment;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const std::string&)> set;
};

template <class F>
Key real_key(std::string name, std::string comment, F field) {
    return {name, std::move(comment), [field](const PipelineConfig& c) { return fmt(field(c)); },
            [field, name](PipelineConfig& c, const std::string& v) { field(c) = to_real(name, v); }};
}

template <class F>
Key size_key(std::string name, std::string comment, F field) {
    return {name, std::move(comment),
            [field](const PipelineConfig& c) { return fmt(static_cast<std::uint64_t>(field(c))); },
            [field, name](PipelineConfig& c, const std::string& v) {
                field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(to_u64(name, v));
            }};
}

template <class F>
Key bool_key(std::string name, std::string comment, F field) {
    return {name, std::move(comment), [field](const PipelineConfig& c) { return fmt(field(c)); },
            [field, name](PipelineConfig& c, const std::string& v) { field(c) = to_bool(name, v); }};
}

template <class E, class F>
Key enum_key(std::string name, std::string comment, std::vector<std::pair<std::string, E>> names, F field) {
    return {name, std::move(comment),
            [field, names](const PipelineConfig& c) {
                const E v = field(c);
                for (const auto& [s, e] : names)
                    if (e == v) return s;
                return std::string("?");
            },
            [field, names, name](PipelineConfig& c, const std::string& v) {
                for (const auto& [s, e] : names)
                    if (s == v) {
                        field(c) = e;
                        return;
                    }
                std::string allowed;
                for (const auto& [s, e] : names) allowed += (allowed.empty() ? "" : "|") + s;
                throw ConfigError(name + ": expected " + allowed + ", got '" + v + "'");
            }};
}

const std::vector<Key>& key_table() {
    using C = PipelineConfig;
    static const std::vector<Key> keys = [] {
        std::vector<Key> k;
        // capture metrics
        k.push_back(size_key("metrics.window", "sliding window side B, px", [](auto& c) -> auto& { return c.protocol().selection.metrics.window; }));
        k.push_back(size_key("metrics.stride", "window step, px", [](auto& c) -> auto& { return c.protocol().selection.metrics.stride; }));
        k.push_back(real_key("metrics.k_l", "luminance stabiliser", [](auto& c) -> auto& { return c.protocol().selection.metrics.k_l; }));
        k.push_back(real_key("metrics.k_c", "contrast stabiliser", [](auto& c) -> auto& { return c.protocol().selection.metrics.k_c; }));
        k.push_back(real_key("metrics.dynamic_range", "intensity range L of loaded images", [](auto& c) -> auto& { return c.protocol().selection.metrics.dynamic_range; }));
        // clustering
        k.push_back({"cluster.preference", "median | minimum | a fixed number",
                     [](const C& c) {
                         const auto& ap = c.protocol().selection.ap;
                         if (ap.preference) return fmt(*ap.preference);
                         return std::string(ap.preference_rule == cluster::PreferenceRule::median ? "median" : "minimum");
                     },
                     [](C& c, const std::string& v) {
                         auto& ap = c.protocol().selection.ap;
                         if (v == "median" || v == "minimum") {
                             ap.preference.reset();
                             ap.preference_rule = v == "median" ? cluster::PreferenceRule::median : cluster::PreferenceRule::minimum;
                         } else {
                             ap.preference = to_real("cluster.preference", v);
                         }
                     }});
        k.push_back(real_key("cluster.damping", "message damping in [0.5, 1)", [](auto& c) -> auto& { return c.protocol().selection.ap.damping; }));
        k.push_back(size_key("cluster.max_iter", "", [](auto& c) -> auto& { return c.protocol().selection.ap.max_iter; }));
        k.push_back(size_key("cluster.stable_window", "iterations with unchanged exemplars before stopping", [](auto& c) -> auto& { return c.protocol().selection.ap.stable_window; }));
        k.push_back(real_key("cluster.noise", "relative tie-breaking perturbation", [](auto& c) -> auto& { return c.protocol().selection.ap.noise; }));
        k.push_back(real_key("cluster.tie_nudge", "relative preference lift for tied configurations", [](auto& c) -> auto& { return c.protocol().selection.ap.tie_nudge; }));
        k.push_back(size_key("cluster.seed", "seed of the tie-breaking perturbation", [](auto& c) -> auto& { return c.protocol().selection.ap.seed; }));
        k.push_back(enum_key<cluster::SpaceScaling>(
            "cluster.scaling", "none | joint | per_axis",
            {{"none", cluster::SpaceScaling::none}, {"joint", cluster::SpaceScaling::joint}, {"per_axis", cluster::SpaceScaling::per_axis}},
            [](auto& c) -> auto& { return c.protocol().selection.scaling; }));
        // synthesis
        k.push_back(real_key("synthesis.shading_sigma", "px", [](auto& c) -> auto& { return c.protocol().synthesis.decomposition.shading_sigma; }));
        k.push_back(real_key("synthesis.texture_sigma", "px", [](auto& c) -> auto& { return c.protocol().synthesis.decomposition.texture_sigma; }));
        k.push_back(real_key("synthesis.epsilon", "intensity floor before logs", [](auto& c) -> auto& { return c.protocol().synthesis.decomposition.epsilon; }));
        k.push_back(bool_key("synthesis.normalize_material", "", [](auto& c) -> auto& { return c.protocol().synthesis.decomposition.normalize_material; }));
        k.push_back(real_key("synthesis.dissolve", "1 = replace shading, 0 = keep the render", [](auto& c) -> auto& { return c.protocol().synthesis.transfer.dissolve; }));
        k.push_back(bool_key("synthesis.anchor_borders", "", [](auto& c) -> auto& { return c.protocol().synthesis.transfer.anchor_borders; }));
        k.push_back({"synthesis.shape_model", "path; empty for the built-in procedural head",
                     [](const C& c) { return c.shape_model; }, [](C& c, const std::string& v) { c.shape_model = v; }});
        k.push_back(enum_key<MissingLandmarks>(
            "synthesis.missing_landmarks", "skip | canonical",
            {{"skip", MissingLandmarks::skip}, {"canonical", MissingLandmarks::canonical}},
            [](auto& c) -> auto& { return c.missing_landmarks; }));
        // dictionary and solver
        k.push_back(real_key("dictionary.still_weight", "", [](auto& c) -> auto& { return c.protocol().dictionary.still_weight; }));
        k.push_back(bool_key("dictionary.invert_weights", "penalise large clusters less", [](auto& c) -> auto& { return c.protocol().dictionary.invert_weights; }));
        k.push_back(real_key("solver.lambda", "", [](auto& c) -> auto& { return c.protocol().solver.lambda; }));
        k.push_back(real_key("solver.rho", "ADMM penalty", [](auto& c) -> auto& { return c.protocol().solver.rho; }));
        k.push_back(real_key("solver.tol_primal", "", [](auto& c) -> auto& { return c.protocol().solver.tol_primal; }));
        k.push_back(real_key("solver.tol_dual", "", [](auto& c) -> auto& { return c.protocol().solver.tol_dual; }));
        k.push_back(size_key("solver.max_iter", "", [](auto& c) -> auto& { return c.protocol().solver.max_iter; }));
        k.push_back(bool_key("solver.adaptive_rho", "residual balancing of rho", [](auto& c) -> auto& { return c.protocol().solver.adaptive_rho; }));
        k.push_back(size_key("solver.max_rho_updates", "", [](auto& c) -> auto& { return c.protocol().solver.max_rho_updates; }));
        k.push_back(enum_key<sparse::SolverMode>(
            "solver.mode", "penalized | equality",
            {{"penalized", sparse::SolverMode::penalized}, {"equality", sparse::SolverMode::equality}},
            [](auto& c) -> auto& { return c.protocol().solver.mode; }));
        k.push_back(real_key("decision.tau", "SCI acceptance threshold, in (0, 1)", [](auto& c) -> auto& { return c.protocol().tau; }));
        // evaluation
        k.push_back(real_key("evaluation.pauc_cutoff", "false positive rate bound, in (0, 1]", [](auto& c) -> auto& { return c.protocol().pauc_cutoff; }));
        k.push_back(enum_key<bench::ScoreSource>(
            "evaluation.score", "residual | sci",
            {{"residual", bench::ScoreSource::residual}, {"sci", bench::ScoreSource::sci}},
            [](auto& c) -> auto& { return c.protocol().score; }));
        k.push_back(size_key("evaluation.dsq_columns", "probe/column pairs per class for DSQ; 0 = block width. Use the same value for dictionaries of different q", [](auto& c) -> auto& { return c.dsq_columns; }));
        // benchmark
        k.push_back(size_key("benchmark.seed", "", [](auto& c) -> auto& { return c.benchmark.seed; }));
        k.push_back(size_key("benchmark.replications", "", [](auto& c) -> auto& { return c.benchmark.replications; }));
        k.push_back(size_key("benchmark.watchlist", "enrolled identities", [](auto& c) -> auto& { return c.benchmark.watchlist; }));
        k.push_back(size_key("benchmark.generic", "identities seen only in the generic set", [](auto& c) -> auto& { return c.benchmark.generic; }));
        k.push_back(size_key("benchmark.others", "unknown identities seen only as probes", [](auto& c) -> auto& { return c.benchmark.others; }));
        k.push_back(size_key("benchmark.generic_frames", "", [](auto& c) -> auto& { return c.benchmark.generic_frames; }));
        k.push_back(size_key("benchmark.probe_frames", "", [](auto& c) -> auto& { return c.benchmark.probe_frames; }));
        k.push_back(size_key("benchmark.roi_size", "px", [](auto& c) -> auto& { return c.benchmark.world.roi_size; }));
        k.push_back({"benchmark.pose_modes", "pitch,yaw,roll;... degrees",
                     [](const C& c) {
                         std::string s;
                         for (const auto& p : c.benchmark.world.pose_modes)
                             s += (s.empty() ? "" : ";") + fmt(p.pitch) + "," + fmt(p.yaw) + "," + fmt(p.roll);
                         return s;
                     },
                     [](C& c, const std::string& v) {
                         std::vector<PoseAngles> modes;
                         for (const auto& m : split(v, ';')) {
                             const auto a = split(m, ',');
                             if (a.size() != 3) throw ConfigError("benchmark.pose_modes: expected pitch,yaw,roll, got '" + m + "'");
                             modes.push_back({to_real("benchmark.pose_modes", a[0]), to_real("benchmark.pose_modes", a[1]),
                                              to_real("benchmark.pose_modes", a[2])});
                         }
                         c.benchmark.world.pose_modes = modes;
                     }});
        k.push_back(real_key("benchmark.pose_jitter", "degrees per angle", [](auto& c) -> auto& { return c.benchmark.world.pose_jitter; }));
        k.push_back({"benchmark.light_angles", "radians, comma separated",
                     [](const C& c) {
                         std::string s;
                         for (double a : c.benchmark.world.light_angles) s += (s.empty() ? "" : ",") + fmt(a);
                         return s;
                     },
                     [](C& c, const std::string& v) {
                         std::vector<double> a;
                         for (const auto& t : split(v, ',')) a.push_back(to_real("benchmark.light_angles", t));
                         c.benchmark.world.light_angles = a;
                     }});
        k.push_back(real_key("benchmark.light_strength", "", [](auto& c) -> auto& { return c.benchmark.world.light_strength; }));
        k.push_back(real_key("benchmark.noise", "additive Gaussian sigma", [](auto& c) -> auto& { return c.benchmark.world.noise; }));
        k.push_back(bool_key("benchmark.export_fixture", "also write replication 0 as image files", [](auto& c) -> auto& { return c.export_fixture; }));
        return k;
    }();
    return keys;
}

const Key& find_key(const std::string& name) {
    for (const auto& k : key_table())
        if (k.name == name) return k;
    throw ConfigError("unknown configuration key '" + name + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Lines with comments stripped, paired with 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> records(const std::string& text) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> out;
    std::istringstream in(text);
    std::size_t no = 0;
    for (std::string line; std::getline(in, line);) {
        ++no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto t = tokens(line);
        if (!t.empty()) out.emplace_back(no, std::move(t));
    }
    return out;
}

double real_field(const std::string& tok, const std::string& where) {
    try {
        return to_real(where, tok);
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    }
}

std::size_t size_field(const std::string& tok, const std::string& where) {
    try {
        return static_cast<std::size_t>(to_u64(where, tok));
    } catch (const ConfigError& e) {
        throw DataError(e.what());
    }
}

std::string where(const fs::path& file, std::size_t line) { return file.string() + ":" + std::to_string(line); }

std::string relative_to(const fs::path& target, const fs::path& base) {
    return fs::proximate(fs::absolute(target), fs::absolute(base)).generic_string();
}

fs::path resolve(const std::string& p, const fs::path& base) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<RoiRecord> load_manifest(const fs::path& path) {
    const Manifest m = read_manifest(path);
    if (m.entries.empty()) throw DataError(path.string() + ": manifest lists no ROIs");
    return load_records(m);
}

}  // namespace

// ---- configuration --------------------------------------------------------------

void PipelineConfig::validate() const {
    const auto& p = protocol();
    const auto& m = p.selection.metrics;
    if (m.window == 0 || m.stride == 0) throw ConfigError("metrics: window and stride must be positive");
    if (!(m.k_l > 0.0) || !(m.k_c > 0.0) || !(m.dynamic_range > 0.0))
        throw ConfigError("metrics: k_l, k_c and dynamic_range must be positive");
    const auto& ap = p.selection.ap;
    if (!(ap.damping >= 0.5 && ap.damping < 1.0)) throw ConfigError("cluster.damping must lie in [0.5, 1)");
    if (ap.max_iter == 0 || ap.stable_window == 0) throw ConfigError("cluster: iteration caps must be positive");
    if (ap.noise < 0.0 || ap.tie_nudge < 0.0) throw ConfigError("cluster: noise and tie_nudge must be non-negative");
    const auto& d = p.synthesis.decomposition;
    if (!(d.shading_sigma > 0.0) || !(d.texture_sigma > 0.0) || !(d.epsilon > 0.0))
        throw ConfigError("synthesis: sigmas and epsilon must be positive");
    if (!(p.synthesis.transfer.dissolve >= 0.0 && p.synthesis.transfer.dissolve <= 1.0))
        throw ConfigError("synthesis.dissolve must lie in [0, 1]");
    if (!(p.dictionary.still_weight > 0.0)) throw ConfigError("dictionary.still_weight must be positive");
    p.solver.validate();
    if (!(p.tau > 0.0 && p.tau < 1.0)) throw ConfigError("decision.tau must lie in (0, 1), got " + fmt(p.tau));
    if (!(p.pauc_cutoff > 0.0 && p.pauc_cutoff <= 1.0)) throw ConfigError("evaluation.pauc_cutoff must lie in (0, 1]");
    const auto& b = benchmark;
    if (b.replications == 0) throw ConfigError("benchmark.replications must be positive");
    if (b.watchlist < 2) throw ConfigError("benchmark.watchlist needs at least two identities");
    if (b.probe_frames == 0) throw ConfigError("benchmark.probe_frames must be positive");
    if (b.world.roi_size < 8) throw ConfigError("benchmark.roi_size must be at least 8");
    if (b.world.pose_modes.empty() || b.world.light_angles.empty())
        throw ConfigError("benchmark: pose_modes and light_angles must not be empty");
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    find_key(key).set(cfg, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
}

PipelineConfig parse_config(const std::string& text) {
    PipelineConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::size_t no = 0;
    for (std::string line; std::getline(in, line);) {
        ++no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second) throw ConfigError("config line " + std::to_string(no) + ": duplicate key " + key);
        try {
            set_config_value(cfg, key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(no) + ": " + e.what());
        }
    }
    return cfg;
}

PipelineConfig read_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const PipelineConfig& cfg) {
    std::string out = "# dsfs configuration\n";
    std::string group;
    for (const auto& k : key_table()) {
        const std::string g = k.name.substr(0, k.name.find('.'));
        if (g != group) {
            out += "\n# [" + g + "]\n";
            group = g;
        }
        if (!k.comment.empty()) out += "# " + k.comment + "\n";
        out += k.name + " = " + k.get(cfg) + "\n";
    }
    return out;
}

synth::ShapeModel load_shape_model(const PipelineConfig& cfg) {
    return cfg.shape_model.empty() ? synth::procedural_head() : synth::read_shape_model(cfg.shape_model);
}

// ---- exemplar file --------------------------------------------------------------

std::string format_exemplar_file(const cluster::ExemplarSet& set, const std::vector<ManifestEntry>& rois,
                                 const fs::path& base) {
    if (rois.size() != set.size()) throw DataError("exemplar file: one ROI per exemplar required");
    std::string out = "# dsfs exemplar set\n";
    out += "generic_count " + std::to_string(set.generic_count) + "\n";
    out += "pose_clusters " + std::to_string(set.pose_cluster_count) + "\n";
    out += std::string("converged ") + (set.converged ? "1" : "0") + "\n";
    out += "# exemplar path subject pose_cluster n_ij weight roi_index pose_roi_index"
           " pitch yaw roll roi_pitch roi_yaw roi_roll luminance contrast [x y ...]\n";
    for (std::size_t j = 0; j < set.size(); ++j) {
        const auto& e = set.exemplars[j];
        const auto& r = rois[j];
        out += "exemplar " + relative_to(r.path, base) + ' ' + r.subject + ' ' + std::to_string(set.pose_cluster_of[j]) +
               ' ' + std::to_string(e.cluster_size) + ' ' + fmt(set.weights[j]) + ' ' + std::to_string(e.roi_index) +
               ' ' + std::to_string(e.pose_roi_index) + ' ' + fmt(e.pose.pitch) + ' ' + fmt(e.pose.yaw) + ' ' +
               fmt(e.pose.roll) + ' ' + fmt(e.condition.pose.pitch) + ' ' + fmt(e.condition.pose.yaw) + ' ' +
               fmt(e.condition.pose.roll) + ' ' + fmt(e.condition.luminance) + ' ' + fmt(e.condition.contrast);
        for (const auto& p : r.landmarks) out += ' ' + fmt(p.x) + ' ' + fmt(p.y);
        out += '\n';
    }
    return out;
}

void write_exemplar_file(const fs::path& path, const cluster::ExemplarSet& set, const std::vector<ManifestEntry>& rois) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    io::write_file_atomic(path, format_exemplar_file(set, rois, base));
}

ExemplarFile read_exemplar_file(const fs::path& path) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    ExemplarFile f;
    bool have_count = false;
    for (const auto& [no, t] : records(read_text(path))) {
        const std::string at = where(path, no);
        if (t[0] == "generic_count" && t.size() == 2) {
            f.set.generic_count = size_field(t[1], at);
            have_count = true;
        } else if (t[0] == "pose_clusters" && t.size() == 2) {
            f.set.pose_cluster_count = size_field(t[1], at);
        } else if (t[0] == "converged" && t.size() == 2) {
            f.set.converged = t[1] == "1";
        } else if (t[0] == "exemplar") {
            if (t.size() < 16 || (t.size() - 16) % 2 != 0) throw DataError(at + ": malformed exemplar record");
            cluster::Exemplar e;
            RoiRecord r;
            r.path = resolve(t[1], base).string();
            r.subject_id = t[2];
            f.set.pose_cluster_of.push_back(size_field(t[3], at));
            e.cluster_size = size_field(t[4], at);
            f.set.weights.push_back(real_field(t[5], at));
            e.roi_index = size_field(t[6], at);
            e.pose_roi_index = size_field(t[7], at);
            e.pose = {real_field(t[8], at), real_field(t[9], at), real_field(t[10], at)};
            e.condition.pose = {real_field(t[11], at), real_field(t[12], at), real_field(t[13], at)};
            e.condition.luminance = real_field(t[14], at);
            e.condition.contrast = real_field(t[15], at);
            for (std::size_t k = 16; k + 1 < t.size(); k += 2) r.landmarks.push_back({real_field(t[k], at), real_field(t[k + 1], at)});
            r.pose = e.condition.pose;
            r.domain = Domain::operational;
            r.image = io::read_image(r.path);
            f.set.exemplars.push_back(e);
            f.rois.push_back(std::move(r));
        } else {
            throw DataError(at + ": unexpected record '" + t[0] + "'");
        }
    }
    if (!have_count) throw DataError(path.string() + ": not an exemplar set (generic_count missing)");
    double total = 0.0;
    for (double w : f.set.weights) total += w;
    if (!f.set.weights.empty() && std::abs(total - 1.0) > 1e-9)
        throw DataError(path.string() + ": exemplar weights sum to " + fmt(total));
    return f;
}

// ---- synthetic index ------------------------------------------------------------

void write_synthetic_index(const fs::path& dir, const SyntheticIndex& index) {
    std::string out = "# dsfs synthetic set\n";
    out += "q " + std::to_string(index.q) + "\n";
    for (std::size_t j = 0; j < index.weights.size(); ++j)
        out += "weight " + std::to_string(j) + ' ' + fmt(index.weights[j]) + "\n";
    for (const auto& s : index.skipped) out += "skipped " + s + "\n";
    out += "# roi path subject exemplar pose_cluster pose_roi lighting_roi weight ok [error]\n";
    for (const auto& r : index.records) {
        const auto& p = r.provenance;
        out += "roi " + r.path + ' ' + r.subject + ' ' + std::to_string(p.exemplar_index) + ' ' +
               std::to_string(p.pose_cluster) + ' ' + std::to_string(p.pose_roi_index) + ' ' +
               std::to_string(p.lighting_roi_index) + ' ' + fmt(p.weight) + ' ' + (p.ok ? "1" : "0");
        if (!p.ok) {
            std::string err = p.error;
            std::replace(err.begin(), err.end(), '\n', ' ');
            std::replace(err.begin(), err.end(), '#', ' ');
            out += ' ' + err;
        }
        out += '\n';
    }
    io::write_file_atomic(dir / "provenance.txt", out);
}

SyntheticIndex read_synthetic_index(const fs::path& dir) {
    const fs::path path = dir / "provenance.txt";
    SyntheticIndex idx;
    bool have_q = false;
    for (const auto& [no, t] : records(read_text(path))) {
        const std::string at = where(path, no);
        if (t[0] == "q" && t.size() == 2) {
            idx.q = size_field(t[1], at);
            have_q = true;
        } else if (t[0] == "weight" && t.size() == 3) {
            if (size_field(t[1], at) != idx.weights.size()) throw DataError(at + ": weights out of order");
            idx.weights.push_back(real_field(t[2], at));
        } else if (t[0] == "skipped" && t.size() >= 2) {
            std::string s = t[1];
            for (std::size_t k = 2; k < t.size(); ++k) s += ' ' + t[k];
            idx.skipped.push_back(s);
        } else if (t[0] == "roi" && t.size() >= 9) {
            ProvenanceRecord r;
            r.path = t[1];
            r.subject = t[2];
            auto& p = r.provenance;
            p.exemplar_index = size_field(t[3], at);
            p.pose_cluster = size_field(t[4], at);
            p.pose_roi_index = size_field(t[5], at);
            p.lighting_roi_index = size_field(t[6], at);
            p.weight = real_field(t[7], at);
            p.ok = t[8] == "1";
            for (std::size_t k = 9; k < t.size(); ++k) p.error += (k > 9 ? " " : "") + t[k];
            if (p.exemplar_index >= idx.q) throw DataError(at + ": exemplar index beyond q");
            idx.records.push_back(std::move(r));
        } else {
            throw DataError(at + ": unexpected record '" + t[0] + "'");
        }
    }
    if (!have_q) throw DataError(path.string() + ": not a synthetic index (q missing)");
    if (idx.weights.size() != idx.q) throw DataError(path.string() + ": expected one weight per exemplar");
    return idx;
}

// ---- decision file --------------------------------------------------------------

void write_decision_file(const fs::path& path, const DecisionFile& f) {
    std::string out = "# dsfs decisions\n";
    out += "classes";
    for (const auto& c : f.class_ids) out += ' ' + c;
    out += "\n# probe path subject outcome class sci converged iterations [top class residual]x3 | residual per class\n";
    for (const auto& r : f.records) {
        const auto& d = r.decision;
        out += "probe " + r.path + ' ' + r.subject + ' ' + (d.accepted ? "accepted" : "rejected") + ' ' + d.class_id +
               ' ' + fmt(d.sci) + ' ' + (d.converged ? "1" : "0") + ' ' + std::to_string(r.iterations);
        for (std::size_t k = 0; k < std::min<std::size_t>(3, d.residual_ranking.size()); ++k)
            out += ' ' + f.class_ids[d.residual_ranking[k].first] + ' ' + fmt(d.residual_ranking[k].second);
        out += " |";
        for (double v : r.residuals) out += ' ' + fmt(v);
        out += '\n';
    }
    io::write_file_atomic(path, out);
}

DecisionFile read_decision_file(const fs::path& path) {
    DecisionFile f;
    bool have_classes = false;
    for (const auto& [no, t] : records(read_text(path))) {
        const std::string at = where(path, no);
        if (t[0] == "classes") {
            f.class_ids.assign(t.begin() + 1, t.end());
            have_classes = true;
        } else if (t[0] == "probe" && have_classes) {
            const auto bar = std::find(t.begin(), t.end(), "|");
            if (bar == t.end() || bar - t.begin() < 8) throw DataError(at + ": malformed probe record");
            DecisionRecord r;
            r.path = t[1];
            r.subject = t[2];
            r.decision.accepted = t[3] == "accepted";
            r.decision.class_id = t[4];
            r.decision.sci = real_field(t[5], at);
            r.decision.converged = t[6] == "1";
            r.iterations = size_field(t[7], at);
            for (auto it = bar + 1; it != t.end(); ++it) r.residuals.push_back(real_field(*it, at));
            if (r.residuals.size() != f.class_ids.size()) throw DataError(at + ": expected one residual per class");
            const auto cls = std::find(f.class_ids.begin(), f.class_ids.end(), r.decision.class_id);
            if (cls == f.class_ids.end()) throw DataError(at + ": unknown class " + r.decision.class_id);
            r.decision.class_index = static_cast<std::size_t>(cls - f.class_ids.begin());
            for (std::size_t i = 0; i < r.residuals.size(); ++i) r.decision.residual_ranking.emplace_back(i, r.residuals[i]);
            std::stable_sort(r.decision.residual_ranking.begin(), r.decision.residual_ranking.end(),
                             [](const auto& a, const auto& b) { return a.second < b.second; });
            f.records.push_back(std::move(r));
        } else {
            throw DataError(at + ": unexpected record '" + t[0] + "'");
        }
    }
    if (!have_classes) throw DataError(path.string() + ": not a decision file");
    return f;
}

// ---- commands -------------------------------------------------------------------

CommandResult cmd_calibrate(const fs::path& generic_manifest, const fs::path& reference, const fs::path& out,
                            const PipelineConfig& cfg) {
    cfg.validate();
    const Manifest m = read_manifest(generic_manifest);
    if (m.entries.empty()) throw DataError(generic_manifest.string() + ": generic manifest lists no ROIs");
    const auto generic = load_records(m);
    const GrayImage ref = io::read_image(reference);
    const auto set = cluster::two_step_select(generic, ref, cfg.protocol().selection);

    std::vector<ManifestEntry> rois;
    for (const auto& e : set.exemplars) {
        ManifestEntry entry = m.entries[e.roi_index];
        entry.path = m.resolve(entry).string();
        rois.push_back(entry);
    }
    write_exemplar_file(out, set, rois);
    CommandResult r;
    r.written.push_back(out);
    if (!set.converged) {
        r.nonconverged = 1;
        r.warnings.push_back("affinity propagation did not converge; exemplars are from the last iteration");
    }
    return r;
}

CommandResult cmd_synthesize(const fs::path& gallery_manifest, const fs::path& exemplars, const fs::path& out_dir,
                             const PipelineConfig& cfg) {
    cfg.validate();
    const auto gallery = load_manifest(gallery_manifest);
    const ExemplarFile ex = read_exemplar_file(exemplars);
    const auto model = load_shape_model(cfg);
    CommandResult result;

    SyntheticIndex index;
    index.q = ex.set.size();
    index.weights = ex.set.weights;
    std::vector<ManifestEntry> listing;
    if (index.q == 0) result.warnings.push_back("exemplar set is empty (q = 0): no synthetic ROIs written");

    for (const auto& still : gallery) {
        if (index.q == 0) break;
        if (still.landmarks.empty() && cfg.missing_landmarks == MissingLandmarks::skip) {
            index.skipped.push_back(still.subject_id + " missing landmarks");
            result.warnings.push_back("subject " + still.subject_id + " skipped: still has no landmarks");
            continue;
        }
        const auto set = synth::dsfs_generate(still, ex.set, ex.rois, model, {}, cfg.protocol().synthesis);
        for (std::size_t j = 0; j < set.size(); ++j) {
            const std::string name = still.subject_id + "_" + std::to_string(j) + ".png";
            io::write_png(out_dir / name, set.rois[j]);
            result.written.push_back(out_dir / name);
            index.records.push_back({name, still.subject_id, set.provenance[j]});
            ManifestEntry e;
            e.path = name;
            e.subject = still.subject_id;
            e.domain = Domain::enrollment;
            e.pose = ex.set.exemplars[j].pose;
            listing.push_back(e);
            if (!set.provenance[j].ok)
                result.warnings.push_back(name + ": synthesis failed, still copied (" + set.provenance[j].error + ")");
        }
    }
    write_manifest(out_dir / "synthetic.txt", listing, "synthetic ROIs");
    write_synthetic_index(out_dir, index);
    result.written.push_back(out_dir / "synthetic.txt");
    result.written.push_back(out_dir / "provenance.txt");
    return result;
}

CommandResult cmd_enroll(const fs::path& gallery_manifest, const fs::path& synthetic_dir, const fs::path& out,
                         const PipelineConfig& cfg) {
    cfg.validate();
    const auto gallery = load_manifest(gallery_manifest);
    std::vector<synth::SyntheticSet> sets;
    std::vector<double> weights;
    CommandResult result;
    if (!synthetic_dir.empty()) {
        const SyntheticIndex idx = read_synthetic_index(synthetic_dir);
        weights = idx.weights;
        if (idx.q == 0) result.warnings.push_back("synthetic set is empty (q = 0): dictionary holds stills only");
        std::map<std::string, std::vector<const ProvenanceRecord*>> by_subject;
        for (const auto& r : idx.records) by_subject[r.subject].push_back(&r);
        std::vector<std::string> gaps;
        for (const auto& still : gallery) {
            if (idx.q == 0) break;
            synth::SyntheticSet s;
            s.subject_id = still.subject_id;
            s.rois.resize(idx.q);
            s.provenance.resize(idx.q);
            std::vector<bool> have(idx.q, false);
            for (const auto* r : by_subject[still.subject_id]) {
                const std::size_t j = r->provenance.exemplar_index;
                s.rois[j] = io::read_image(resolve(r->path, synthetic_dir));
                s.provenance[j] = r->provenance;
                have[j] = true;
            }
            if (std::count(have.begin(), have.end(), true) != static_cast<std::ptrdiff_t>(idx.q)) {
                gaps.push_back(still.subject_id);
                continue;
            }
            sets.push_back(std::move(s));
        }
        if (!gaps.empty()) {
            std::string msg = "synthetic set does not cover gallery subject(s):";
            for (const auto& g : gaps) msg += ' ' + g;
            for (const auto& s : idx.skipped) msg += "; skipped " + s;
            throw DataError(msg);
        }
        if (idx.q == 0) sets.clear();
    }
    const auto dict = sparse::build_cross_domain_dictionary(gallery, sets, weights, cfg.protocol().dictionary);
    sparse::write_dictionary(out, dict);
    result.written.push_back(out);
    return result;
}

CommandResult cmd_recognize(const fs::path& probe_manifest, const fs::path& dictionary, const fs::path& out,
                            const PipelineConfig& cfg) {
    cfg.validate();
    const auto dict = sparse::read_dictionary(dictionary);
    const Manifest m = read_manifest(probe_manifest);
    const sparse::BlockSparseSolver solver(dict, cfg.protocol().solver);
    const fs::path base = out.has_parent_path() ? out.parent_path() : fs::path(".");

    DecisionFile f;
    f.class_ids = dict.class_ids;
    CommandResult result;
    for (const auto& e : m.entries) {
        const fs::path p = m.resolve(e);
        const GrayImage img = io::read_image(p);
        if (img.width() != dict.width || img.height() != dict.height)
            throw DataError(p.string() + ": probe is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                            ", dictionary expects " + std::to_string(dict.width) + "x" + std::to_string(dict.height));
        const auto sol = solver.solve(sparse::probe_vector(img, dict));
        DecisionRecord r;
        r.path = relative_to(p, base);
        r.subject = e.subject;
        r.decision = sparse::decide(sol, dict, cfg.protocol().tau);
        r.residuals = sol.residuals;
        r.iterations = sol.iterations;
        if (!sol.converged) ++result.nonconverged;
        f.records.push_back(std::move(r));
    }
    write_decision_file(out, f);
    result.written.push_back(out);
    if (result.nonconverged)
        result.warnings.push_back(std::to_string(result.nonconverged) + " probe(s) hit the solver iteration cap");
    return result;
}

namespace {

std::string summary_line(const std::string& label, const eval::CurveSummary& s) {
    return label + " auc " + fmt(s.auc) + " pauc " + fmt(s.pauc) + " pauc_normalized " + fmt(s.pauc_normalized) +
           " aupr " + fmt(s.aupr) + " targets " + std::to_string(s.targets) + " nontargets " +
           std::to_string(s.nontargets);
}

fs::path svg_path(const fs::path& report) {
    fs::path p = report;
    p.replace_extension(".svg");
    return p;
}

}  // namespace

CommandResult cmd_evaluate(const fs::path& input, const fs::path& dictionary, const fs::path& out,
                           const PipelineConfig& cfg) {
    cfg.validate();
    const double cutoff = cfg.protocol().pauc_cutoff;
    CommandResult result;
    std::string report = "# dsfs evaluation\n";
    report += "pauc_cutoff " + fmt(cutoff) + "\n";

    const std::string text = read_text(input);
    const auto recs = records(text);
    const bool is_decisions = !recs.empty() && recs.front().second[0] == "classes";
    if (!is_decisions) {
        if (!dictionary.empty()) throw ConfigError("evaluate: --dictionary needs a decision file as input");
        std::vector<eval::ScoredTrial> trials;
        for (const auto& [no, t] : recs) {
            if (t.size() != 2 || (t[1] != "0" && t[1] != "1"))
                throw DataError(where(input, no) + ": expected 'score label' with label 0 or 1");
            trials.push_back({real_field(t[0], where(input, no)), t[1] == "1"});
        }
        const auto s = eval::roc_metrics(trials, cutoff);
        report += "trials " + std::to_string(trials.size()) + "\n";
        report += summary_line("overall", s) + "\n";
        eval::write_curves_svg(svg_path(out), {{"scores", &s}}, "ROC and precision-recall");
    } else {
        const DecisionFile f = read_decision_file(input);
        const std::size_t n = f.class_ids.size();
        std::vector<std::vector<double>> scores;
        std::size_t accepted = 0, known = 0, correct = 0, nonconverged = 0;
        for (const auto& r : f.records) {
            std::vector<double> s(n);
            for (std::size_t i = 0; i < n; ++i)
                s[i] = cfg.protocol().score == bench::ScoreSource::residual
                           ? -r.residuals[i]
                           : (r.decision.class_index == i ? r.decision.sci : -1.0);
            scores.push_back(std::move(s));
            accepted += r.decision.accepted;
            nonconverged += !r.decision.converged;
            if (std::find(f.class_ids.begin(), f.class_ids.end(), r.subject) != f.class_ids.end()) {
                ++known;
                correct += r.decision.class_id == r.subject;
            }
        }
        report += "probes " + std::to_string(f.records.size()) + "\n";
        report += "accepted " + std::to_string(accepted) + "\n";
        report += "rejected " + std::to_string(f.records.size() - accepted) + "\n";
        report += "nonconverged " + std::to_string(nonconverged) + "\n";
        report += "rank1_accuracy " + (known ? fmt(double(correct) / double(known)) : std::string("nan")) + "\n";

        std::vector<eval::CurveSummary> per_class;
        std::vector<std::string> labels;
        std::vector<eval::ScoredTrial> pooled;
        double mean_auc = 0.0, mean_pauc = 0.0, mean_aupr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<eval::ScoredTrial> trials;
            for (std::size_t p = 0; p < f.records.size(); ++p)
                trials.push_back({scores[p][i], f.records[p].subject == f.class_ids[i]});
            pooled.insert(pooled.end(), trials.begin(), trials.end());
            const auto targets = std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.is_target; });
            if (targets == 0 || targets == static_cast<std::ptrdiff_t>(trials.size())) continue;
            per_class.push_back(eval::roc_metrics(trials, cutoff));
            labels.push_back(f.class_ids[i]);
            mean_auc += per_class.back().auc;
            mean_pauc += per_class.back().pauc_normalized;
            mean_aupr += per_class.back().aupr;
        }
        report += "classes_evaluated " + std::to_string(per_class.size()) + "\n";
        if (per_class.empty()) {
            result.warnings.push_back("no class has both target and non-target probes; ROC metrics skipped");
        } else {
            const double k = static_cast<double>(per_class.size());
            report += "mean_auc " + fmt(mean_auc / k) + "\n";
            report += "mean_pauc_normalized " + fmt(mean_pauc / k) + "\n";
            report += "mean_aupr " + fmt(mean_aupr / k) + "\n";
            const auto all = eval::roc_metrics(pooled, cutoff);
            report += summary_line("pooled", all) + "\n";
            for (std::size_t i = 0; i < per_class.size(); ++i) report += summary_line("class " + labels[i], per_class[i]) + "\n";
            std::vector<eval::NamedCurve> curves{{"pooled", &all}};
            for (std::size_t i = 0; i < per_class.size(); ++i) curves.push_back({labels[i], &per_class[i]});
            eval::write_curves_svg(svg_path(out), curves, "ROC and precision-recall");
        }

        if (!dictionary.empty()) {
            const auto dict = sparse::read_dictionary(dictionary);
            if (dict.class_ids != f.class_ids) throw DataError("evaluate: dictionary classes differ from the decision file");
            const fs::path base = input.has_parent_path() ? input.parent_path() : fs::path(".");
            Eigen::MatrixXd cols(static_cast<Eigen::Index>(dict.rows()), static_cast<Eigen::Index>(f.records.size()));
            std::vector<std::vector<std::size_t>> of_class(n);
            for (std::size_t p = 0; p < f.records.size(); ++p) {
                cols.col(static_cast<Eigen::Index>(p)) =
                    sparse::probe_vector(io::read_image(resolve(f.records[p].path, base)), dict);
                for (std::size_t i = 0; i < n; ++i)
                    if (f.records[p].subject == f.class_ids[i]) of_class[i].push_back(p);
            }
            report += "dsq " + fmt(bench::paired_dsq(dict, cols, of_class, cfg.dsq_columns ? cfg.dsq_columns : dict.block_width())) + "\n";
        }
    }
    io::write_file_atomic(out, report);
    result.written.push_back(out);
    return result;
}

CommandResult cmd_benchmark(const fs::path& out_dir, const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto model = load_shape_model(cfg);
    const auto& b = cfg.benchmark;
    CommandResult result;
    log << "benchmark seed " << b.seed << ", " << b.replications << " replication(s)\n";

    const auto rep = bench::run_benchmark(b, model);
    std::string out = "# dsfs benchmark\n";
    out += "seed " + std::to_string(b.seed) + "\n";
    out += "# replication q pose_clusters converged synthesis_failures"
           " auc_base auc_aug pauc_base pauc_aug aupr_base aupr_aug rank1_base rank1_aug dsq_base dsq_aug"
           " nonconverged_base nonconverged_aug\n";
    for (std::size_t r = 0; r < rep.replications.size(); ++r) {
        const auto& x = rep.replications[r];
        out += "replication " + std::to_string(r) + ' ' + std::to_string(x.q) + ' ' + std::to_string(x.pose_clusters) +
               ' ' + (x.calibration_converged ? "1" : "0") + ' ' + std::to_string(x.synthesis_failures) + ' ' +
               fmt(x.baseline.mean_auc) + ' ' + fmt(x.augmented.mean_auc) + ' ' + fmt(x.baseline.mean_pauc) + ' ' +
               fmt(x.augmented.mean_pauc) + ' ' + fmt(x.baseline.mean_aupr) + ' ' + fmt(x.augmented.mean_aupr) + ' ' +
               fmt(x.baseline.rank1_accuracy) + ' ' + fmt(x.augmented.rank1_accuracy) + ' ' + fmt(x.baseline.dsq) +
               ' ' + fmt(x.augmented.dsq) + ' ' + std::to_string(x.baseline.nonconverged) + ' ' +
               std::to_string(x.augmented.nonconverged) + "\n";
        result.nonconverged += x.baseline.nonconverged + x.augmented.nonconverged + (x.calibration_converged ? 0 : 1);
        if (!x.note.empty()) result.warnings.push_back("replication " + std::to_string(r) + ": " + x.note);
        log << "  replication " << r << ": q=" << x.q << " K=" << x.pose_clusters << " auc baseline "
            << fmt(x.baseline.mean_auc) << " augmented " << fmt(x.augmented.mean_auc) << "\n";
    }
    out += "mean_auc_baseline " + fmt(rep.mean_auc_baseline) + " std " + fmt(rep.std_auc_baseline) + "\n";
    out += "mean_auc_augmented " + fmt(rep.mean_auc_augmented) + " std " + fmt(rep.std_auc_augmented) + "\n";
    out += "mean_auc_gain " + fmt(rep.mean_auc_augmented - rep.mean_auc_baseline) + "\n";
    log << "mean auc baseline " << fmt(rep.mean_auc_baseline) << " augmented " << fmt(rep.mean_auc_augmented) << "\n";

    io::write_file_atomic(out_dir / "report.txt", out);
    io::write_file_atomic(out_dir / "config.txt", format_config(cfg));
    result.written.push_back(out_dir / "report.txt");
    result.written.push_back(out_dir / "config.txt");
    if (!rep.replications.empty() && !rep.replications[0].baseline.per_class.empty()) {
        const auto& r0 = rep.replications[0];
        eval::write_curves_svg(out_dir / "curves.svg", {{"baseline", &r0.baseline.pooled}, {"augmented", &r0.augmented.pooled}},
                               "replication 0, pooled over watch-list classes");
        result.written.push_back(out_dir / "curves.svg");
    }
    if (cfg.export_fixture) {
        bench::export_split(bench::make_split(b, model, 0), out_dir / "fixture");
        result.written.push_back(out_dir / "fixture");
    }
    return result;
}

}  // namespace dsfs::pipeline
