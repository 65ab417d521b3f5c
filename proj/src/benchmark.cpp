#include "dsfs/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dsfs/decomposition.hpp"
#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"
#include "dsfs/manifest.hpp"
#include "dsfs/render.hpp"

namespace dsfs::bench {

namespace {

double gauss2(double x, double y, double cx, double cy, double sx, double sy) {
    const double dx = (x - cx) / sx, dy = (y - cy) / sy;
    return std::exp(-0.5 * (dx * dx + dy * dy));
}

double smoothstep(double e0, double e1, double v) {
    const double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

Landmarks true_landmarks(const Identity& who, const synth::ShapeModel& model, const synth::CameraPose& cam) {
    return synth::project_vertices(synth::procedural_landmarks_3d(model, who.alpha), cam);
}

}  // namespace

Identity make_identity(const std::string& id, const WorldConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

    Identity who;
    who.id = id;
    who.alpha = {0.5 * g(rng), 0.5 * g(rng), 0.5 * g(rng)};

    const double tone = range(0.45, 0.75);
    struct Blob {
        double x, y, s, a;
    };
    std::vector<Blob> blobs;
    for (int k = 0; k < 3; ++k) blobs.push_back({range(-0.7, 0.7), range(-0.7, 0.7), range(0.15, 0.35), range(-0.12, 0.12)});
    const double eye_dx = range(-0.04, 0.04), eye_dy = range(-0.04, 0.04);
    // Proportions of a ~48 px face crop: eyes about 8 px wide, mouth about 12 px.
    const double eye_r = range(0.09, 0.13), eye_dark = range(0.3, 0.5);
    const double brow_y = range(-0.44, -0.36), brow_w = range(0.12, 0.18), brow_dark = range(0.2, 0.5);
    const double brow_tilt = range(-0.08, 0.08);
    const double mouth_y = 0.45 + range(-0.04, 0.04), mouth_w = range(0.14, 0.24), mouth_h = range(0.04, 0.07);
    const double mouth_dark = range(0.25, 0.5);
    const double nose_dark = range(0.1, 0.3), nose_w = range(0.07, 0.12);
    const double hairline = range(-0.85, -0.55), hair_tone = range(0.08, 0.4), hair_wave = range(0.0, 0.12);

    const std::size_t n = cfg.roi_size;
    GrayImage grain(n, n);
    for (double& v : grain.data()) v = g(rng);
    grain = synth::gaussian_blur(grain, 1.0);

    who.albedo = GrayImage(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
            const double y = 2.0 * static_cast<double>(j) / static_cast<double>(n - 1) - 1.0;
            double v = tone;
            for (const auto& b : blobs) v *= 1.0 + b.a * gauss2(x, y, b.x, b.y, b.s, b.s);
            for (double side : {-1.0, 1.0}) {
                const double ex = side * 0.32 + side * eye_dx, ey = -0.22 + eye_dy;
                v *= 1.0 - eye_dark * gauss2(x, y, ex, ey, eye_r, 0.6 * eye_r);
                v *= 1.0 - brow_dark * gauss2(x, y, ex, brow_y + side * brow_tilt * (x - ex), brow_w, 0.04);
            }
            v *= 1.0 - mouth_dark * gauss2(x, y, 0.0, mouth_y, mouth_w, mouth_h);
            v *= 1.0 - nose_dark * gauss2(x, y, 0.0, 0.2, nose_w, 0.05);
            v *= 1.0 + 0.04 * grain.at(i, j);
            const double edge = hairline + hair_wave * std::cos(3.0 * x);
            v = v + (hair_tone - v) * (1.0 - smoothstep(edge - 0.06, edge + 0.06, y));
            // Outside the face oval: the same neutral backdrop for everyone.
            const double r = std::sqrt((x / 0.82) * (x / 0.82) + y * y);
            v = v + (0.3 - v) * smoothstep(0.95, 1.05, r);
            who.albedo.at(i, j) = std::clamp(v, 0.02, 1.0);
        }
    }
    return who;
}

Condition sample_condition(const WorldConfig& cfg, std::mt19937_64& rng) {
    if (cfg.pose_modes.empty() || cfg.light_angles.empty()) throw ConfigError("world: no pose or lighting modes");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    Condition c;
    const auto& p = cfg.pose_modes[static_cast<std::size_t>(u(rng) * static_cast<double>(cfg.pose_modes.size())) %
                                   cfg.pose_modes.size()];
    c.pose = {p.pitch + cfg.pose_jitter * g(rng), p.yaw + cfg.pose_jitter * g(rng), p.roll + cfg.pose_jitter * g(rng)};
    c.light_angle = cfg.light_angles[static_cast<std::size_t>(u(rng) * static_cast<double>(cfg.light_angles.size())) %
                                     cfg.light_angles.size()] +
                    0.2 * g(rng);
    c.light_strength = cfg.light_strength * (0.7 + 0.6 * u(rng));
    c.light_level = 0.7 + 0.3 * u(rng);
    c.contrast = 0.6 + 0.4 * u(rng);
    c.noise = cfg.noise;
    return c;
}

RoiRecord render_still(const Identity& who, const synth::ShapeModel& model, const WorldConfig& cfg) {
    const std::size_t n = cfg.roi_size;
    const auto mesh = synth::synthesize_shape(model, who.alpha);
    const auto cam = synth::fit_camera(n, n);
    RoiRecord r;
    r.image = synth::render_pose(mesh, who.albedo, cam, n, n);
    for (double& v : r.image.data()) v *= 0.9;
    r.landmarks = true_landmarks(who, model, cam);
    r.subject_id = who.id;
    r.domain = Domain::enrollment;
    return r;
}

RoiRecord render_frame(const Identity& who, const synth::ShapeModel& model, const WorldConfig& cfg,
                       const Condition& cond, std::mt19937_64& rng) {
    const std::size_t n = cfg.roi_size;
    const auto mesh = synth::synthesize_shape(model, who.alpha);
    const auto cam = synth::fit_camera(n, n, cond.pose);
    GrayImage img = synth::render_pose(mesh, who.albedo, cam, n, n);
    const double c = (static_cast<double>(n) - 1.0) / 2.0;
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double nx = (static_cast<double>(x) - c) / c, ny = (static_cast<double>(y) - c) / c;
            const double s = cond.light_level *
                             (1.0 + cond.light_strength * (std::cos(cond.light_angle) * nx + std::sin(cond.light_angle) * ny));
            img.at(x, y) *= std::max(s, 0.05);
        }
    const double mean = std::accumulate(img.data().begin(), img.data().end(), 0.0) / static_cast<double>(img.size());
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : img.data()) v = std::clamp(mean + cond.contrast * (v - mean) + cond.noise * g(rng), 0.0, 1.0);

    RoiRecord r;
    r.image = std::move(img);
    r.pose = cond.pose;
    r.landmarks = true_landmarks(who, model, cam);
    for (auto& p : r.landmarks) {
        p.x = std::clamp(p.x, 0.0, static_cast<double>(n - 1));
        p.y = std::clamp(p.y, 0.0, static_cast<double>(n - 1));
    }
    r.subject_id = who.id;
    r.domain = Domain::operational;
    return r;
}

std::vector<std::vector<double>> class_scores(const std::vector<sparse::Decision>& decisions,
                                              const std::vector<sparse::SparseSolution>& solutions,
                                              ScoreSource source) {
    std::vector<std::vector<double>> out;
    for (std::size_t p = 0; p < solutions.size(); ++p) {
        const auto& res = solutions[p].residuals;
        std::vector<double> s(res.size());
        for (std::size_t i = 0; i < res.size(); ++i)
            s[i] = source == ScoreSource::residual ? -res[i]
                                                   : (decisions[p].class_index == i ? decisions[p].sci : -1.0);
        out.push_back(std::move(s));
    }
    return out;
}

double paired_dsq(const sparse::CrossDomainDictionary& dict, const Eigen::MatrixXd& probe_cols,
                  const std::vector<std::vector<std::size_t>>& probes_of_class, std::size_t columns) {
    std::size_t k = columns;
    for (const auto& v : probes_of_class)
        if (!v.empty()) k = std::min(k, v.size());
    std::vector<Eigen::Index> pc, dc;
    for (std::size_t i = 0; i < probes_of_class.size() && i < dict.class_count(); ++i) {
        if (probes_of_class[i].size() < k) continue;
        for (std::size_t j = 0; j < k; ++j) {
            pc.push_back(static_cast<Eigen::Index>(probes_of_class[i][j]));
            dc.push_back(static_cast<Eigen::Index>(dict.block_begin(i) + std::min(j, dict.q)));
        }
    }
    if (pc.empty()) return 0.0;
    Eigen::MatrixXd a(probe_cols.rows(), static_cast<Eigen::Index>(pc.size())), b(a.rows(), a.cols());
    for (std::size_t j = 0; j < pc.size(); ++j) {
        a.col(static_cast<Eigen::Index>(j)) = probe_cols.col(pc[j]);
        b.col(static_cast<Eigen::Index>(j)) = dict.columns.col(dc[j]);
    }
    return eval::dsq(a, b);
}

namespace {

ArmResult run_arm(const sparse::CrossDomainDictionary& dict, const std::vector<RoiRecord>& probes,
                  const ProtocolConfig& cfg, const Eigen::MatrixXd& probe_cols,
                  const std::vector<std::vector<std::size_t>>& probes_of_class, std::size_t dsq_cols) {
    ArmResult arm;
    const sparse::BlockSparseSolver solver(dict, cfg.solver);
    std::vector<sparse::SparseSolution> sols;
    std::vector<sparse::Decision> decs;
    for (Eigen::Index p = 0; p < probe_cols.cols(); ++p) {
        sols.push_back(solver.solve(probe_cols.col(p)));
        decs.push_back(sparse::decide(sols.back(), dict, cfg.tau));
        if (!sols.back().converged) ++arm.nonconverged;
    }
    const auto scores = class_scores(decs, sols, cfg.score);

    const std::size_t n = dict.class_count();
    std::vector<eval::ScoredTrial> pooled;
    std::size_t evaluated = 0, known = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<eval::ScoredTrial> trials;
        for (std::size_t p = 0; p < probes.size(); ++p)
            trials.push_back({scores[p][i], probes[p].subject_id == dict.class_ids[i]});
        pooled.insert(pooled.end(), trials.begin(), trials.end());
        if (probes_of_class[i].empty() || probes_of_class[i].size() == probes.size()) continue;
        arm.per_class.push_back(eval::roc_metrics(trials, cfg.pauc_cutoff));
        arm.mean_auc += arm.per_class.back().auc;
        arm.mean_pauc += arm.per_class.back().pauc_normalized;
        arm.mean_aupr += arm.per_class.back().aupr;
        ++evaluated;
        for (std::size_t p : probes_of_class[i]) {
            ++known;
            if (decs[p].class_index == i) ++correct;
        }
    }
    if (evaluated > 0) {
        arm.mean_auc /= static_cast<double>(evaluated);
        arm.mean_pauc /= static_cast<double>(evaluated);
        arm.mean_aupr /= static_cast<double>(evaluated);
        arm.pooled = eval::roc_metrics(pooled, cfg.pauc_cutoff);
    }
    arm.rank1_accuracy = known ? static_cast<double>(correct) / static_cast<double>(known) : 0.0;

    arm.dsq = paired_dsq(dict, probe_cols, probes_of_class, dsq_cols);
    return arm;
}

}  // namespace

ProtocolResult evaluate_protocol(const std::vector<RoiRecord>& gallery, const std::vector<RoiRecord>& generic,
                                 const std::vector<RoiRecord>& probes, const synth::ShapeModel& model,
                                 const ProtocolConfig& cfg) {
    if (gallery.size() < 2) throw DataError("protocol: the gallery needs at least two subjects");
    if (probes.empty()) throw DataError("protocol: no probes");
    std::set<std::string> enrolled;
    for (const auto& s : gallery) enrolled.insert(s.subject_id);
    for (const auto& g : generic)
        if (enrolled.count(g.subject_id))
            throw DataError("protocol: generic subject " + g.subject_id + " is also on the watch-list");

    ProtocolResult out;
    cluster::ExemplarSet ex;
    std::vector<RoiRecord> ex_rois;
    if (generic.empty()) {
        out.note = "empty generic set: q = 0, augmented dictionary equals the baseline";
    } else {
        ex = cluster::two_step_select(generic, gallery.front().image, cfg.selection);
        for (const auto& e : ex.exemplars) ex_rois.push_back(generic[e.roi_index]);
        out.calibration_converged = ex.converged;
        out.pose_clusters = ex.pose_cluster_count;
    }
    out.q = ex.size();

    std::vector<synth::SyntheticSet> syn;
    if (out.q > 0) {
        for (const auto& still : gallery) {
            syn.push_back(synth::dsfs_generate(still, ex, ex_rois, model, {}, cfg.synthesis));
            out.synthesis_failures += syn.back().failure_count();
        }
    }
    const auto base = sparse::build_cross_domain_dictionary(gallery, {}, {}, cfg.dictionary);
    const auto aug = out.q > 0 ? sparse::build_cross_domain_dictionary(gallery, syn, ex.weights, cfg.dictionary) : base;

    Eigen::MatrixXd probe_cols(static_cast<Eigen::Index>(base.rows()), static_cast<Eigen::Index>(probes.size()));
    for (std::size_t p = 0; p < probes.size(); ++p)
        probe_cols.col(static_cast<Eigen::Index>(p)) = sparse::probe_vector(probes[p].image, base);
    std::vector<std::vector<std::size_t>> probes_of_class(gallery.size());
    for (std::size_t p = 0; p < probes.size(); ++p)
        for (std::size_t i = 0; i < gallery.size(); ++i)
            if (probes[p].subject_id == gallery[i].subject_id) probes_of_class[i].push_back(p);
    out.baseline = run_arm(base, probes, cfg, probe_cols, probes_of_class, out.q + 1);
    out.augmented = run_arm(aug, probes, cfg, probe_cols, probes_of_class, out.q + 1);
    return out;
}

Split make_split(const BenchmarkConfig& cfg, const synth::ShapeModel& model, std::size_t replication) {
    if (cfg.watchlist < 2) throw ConfigError("benchmark: watch-list needs at least two identities");
    const std::size_t pool = cfg.watchlist + cfg.generic + cfg.others;
    std::vector<Identity> people;
    for (std::size_t i = 0; i < pool; ++i) {
        auto rng = stream(cfg.seed, 0, i);
        char id[32];
        std::snprintf(id, sizeof id, "id%02zu", i);
        people.push_back(make_identity(id, cfg.world, rng));
    }
    std::vector<std::size_t> order(pool);
    std::iota(order.begin(), order.end(), 0);
    auto split_rng = stream(cfg.seed, 1, replication);
    std::shuffle(order.begin(), order.end(), split_rng);

    auto frame_rng = stream(cfg.seed, 2, replication);
    auto frames = [&](const Identity& who, std::size_t count, std::vector<RoiRecord>& dst) {
        for (std::size_t k = 0; k < count; ++k)
            dst.push_back(render_frame(who, model, cfg.world, sample_condition(cfg.world, frame_rng), frame_rng));
    };
    Split s;
    for (std::size_t k = 0; k < cfg.watchlist; ++k) {
        const auto& who = people[order[k]];
        s.gallery.push_back(render_still(who, model, cfg.world));
        frames(who, cfg.probe_frames, s.probes);
    }
    for (std::size_t k = 0; k < cfg.generic; ++k) frames(people[order[cfg.watchlist + k]], cfg.generic_frames, s.generic);
    for (std::size_t k = 0; k < cfg.others; ++k)
        frames(people[order[cfg.watchlist + cfg.generic + k]], cfg.probe_frames, s.probes);
    return s;
}

void export_split(const Split& split, const std::filesystem::path& dir) {
    auto dump = [&](const std::vector<RoiRecord>& recs, const std::string& name) {
        std::filesystem::create_directories(dir / name);
        std::vector<ManifestEntry> entries;
        for (std::size_t k = 0; k < recs.size(); ++k) {
            char file[96];
            std::snprintf(file, sizeof file, "%s_%03zu.png", recs[k].subject_id.c_str(), k);
            io::write_png(dir / name / file, recs[k].image);
            entries.push_back({name + "/" + file, recs[k].subject_id, recs[k].domain, recs[k].pose, recs[k].landmarks});
        }
        write_manifest(dir / (name + ".txt"), entries, name + " ROIs of a synthetic benchmark split");
    };
    dump(split.gallery, "gallery");
    dump(split.generic, "generic");
    dump(split.probes, "probes");
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const synth::ShapeModel& model) {
    if (cfg.replications == 0) throw ConfigError("benchmark: at least one replication");
    BenchmarkReport rep;
    for (std::size_t r = 0; r < cfg.replications; ++r) {
        const Split s = make_split(cfg, model, r);
        rep.replications.push_back(evaluate_protocol(s.gallery, s.generic, s.probes, model, cfg.protocol));
    }
    const double k = static_cast<double>(cfg.replications);
    for (const auto& r : rep.replications) {
        rep.mean_auc_baseline += r.baseline.mean_auc / k;
        rep.mean_auc_augmented += r.augmented.mean_auc / k;
    }
    for (const auto& r : rep.replications) {
        rep.std_auc_baseline += std::pow(r.baseline.mean_auc - rep.mean_auc_baseline, 2) / k;
        rep.std_auc_augmented += std::pow(r.augmented.mean_auc - rep.mean_auc_augmented, 2) / k;
    }
    rep.std_auc_baseline = std::sqrt(rep.std_auc_baseline);
    rep.std_auc_augmented = std::sqrt(rep.std_auc_augmented);
    return rep;
}

}  // namespace dsfs::bench
