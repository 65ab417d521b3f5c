#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "dsfs/benchmark.hpp"
#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"
#include "dsfs/manifest.hpp"

using namespace dsfs;
using namespace dsfs::bench;

namespace {

BenchmarkConfig small_config() {
    BenchmarkConfig cfg;
    cfg.replications = 1;
    cfg.watchlist = 3;
    cfg.generic = 4;
    cfg.others = 3;
    cfg.generic_frames = 4;
    cfg.probe_frames = 3;
    return cfg;
}

}  // namespace

TEST_CASE("world: stills are frontal, frames carry landmarks inside the roi") {
    const auto model = synth::procedural_head();
    WorldConfig world;
    std::mt19937_64 rng(5);
    const Identity who = make_identity("s1", world, rng);
    const RoiRecord still = render_still(who, model, world);
    CHECK(still.domain == Domain::enrollment);
    CHECK(still.image.width() == world.roi_size);
    CHECK(still.landmarks.size() == 5);
    for (int t = 0; t < 20; ++t) {
        const Condition c = sample_condition(world, rng);
        const RoiRecord f = render_frame(who, model, world, c, rng);
        CHECK(f.domain == Domain::operational);
        for (const auto& p : f.landmarks) {
            CHECK(p.x >= 0.0);
            CHECK(p.y >= 0.0);
            CHECK(p.x <= double(world.roi_size - 1));
            CHECK(p.y <= double(world.roi_size - 1));
        }
        for (double v : f.image.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("split is a pure function of seed and replication") {
    const auto model = synth::procedural_head();
    const BenchmarkConfig cfg = small_config();
    const Split a = make_split(cfg, model, 0), b = make_split(cfg, model, 0), c = make_split(cfg, model, 1);
    REQUIRE(a.probes.size() == b.probes.size());
    for (std::size_t i = 0; i < a.probes.size(); ++i) CHECK(std::ranges::equal(a.probes[i].image.data(), b.probes[i].image.data()));
    CHECK(a.gallery.size() == cfg.watchlist);
    CHECK(a.generic.size() == cfg.generic * cfg.generic_frames);
    CHECK(a.probes.size() == (cfg.watchlist + cfg.others) * cfg.probe_frames);
    CHECK_FALSE(std::ranges::equal(a.gallery[0].image.data(), c.gallery[0].image.data()));
}

// Under the literal penalty weighting the cheap synthetic columns of other
// classes absorb part of a still probe, so only the decision (not the
// residual ranking across probes) is exact for the augmented arm.
TEST_CASE("protocol: stills as probes are recognised by both arms") {
    const auto model = synth::procedural_head();
    const BenchmarkConfig cfg = small_config();
    const Split s = make_split(cfg, model, 0);
    const ProtocolResult r = evaluate_protocol(s.gallery, s.generic, s.gallery, model, cfg.protocol);
    CHECK(r.baseline.mean_auc == doctest::Approx(1.0));
    CHECK(r.baseline.rank1_accuracy == doctest::Approx(1.0));
    CHECK(r.augmented.rank1_accuracy == doctest::Approx(1.0));
}

TEST_CASE("protocol: an empty generic set degenerates to the baseline") {
    const auto model = synth::procedural_head();
    const BenchmarkConfig cfg = small_config();
    const Split s = make_split(cfg, model, 0);
    const ProtocolResult r = evaluate_protocol(s.gallery, {}, s.probes, model, cfg.protocol);
    CHECK(r.q == 0);
    CHECK_FALSE(r.note.empty());
    CHECK(r.augmented.mean_auc == doctest::Approx(r.baseline.mean_auc).epsilon(1e-12));
    CHECK(r.augmented.rank1_accuracy == doctest::Approx(r.baseline.rank1_accuracy));
}

TEST_CASE("protocol: input errors") {
    const auto model = synth::procedural_head();
    const BenchmarkConfig cfg = small_config();
    const Split s = make_split(cfg, model, 0);
    auto generic = s.generic;
    generic[0].subject_id = s.gallery[0].subject_id;
    CHECK_THROWS_AS(evaluate_protocol(s.gallery, generic, s.probes, model, cfg.protocol), DataError);
    CHECK_THROWS_AS(evaluate_protocol({s.gallery[0]}, s.generic, s.probes, model, cfg.protocol), DataError);
    CHECK_THROWS_AS(evaluate_protocol(s.gallery, s.generic, {}, model, cfg.protocol), DataError);
}

TEST_CASE("benchmark: synthetic augmentation improves the watch-list AUC on average") {
    const auto model = synth::procedural_head();
    BenchmarkConfig cfg;  // full default protocol
    const BenchmarkReport a = run_benchmark(cfg, model);
    REQUIRE(a.replications.size() == cfg.replications);
    for (const auto& r : a.replications) {
        CHECK(r.calibration_converged);
        CHECK(r.q > 0);
        CHECK(r.synthesis_failures == 0);
    }
    CHECK(a.mean_auc_augmented > a.mean_auc_baseline);

    const BenchmarkReport b = run_benchmark(cfg, model);
    CHECK(a.mean_auc_augmented == b.mean_auc_augmented);
    CHECK(a.mean_auc_baseline == b.mean_auc_baseline);
}

TEST_CASE("export writes loadable manifests") {
    const auto model = synth::procedural_head();
    const Split s = make_split(small_config(), model, 0);
    const auto dir = std::filesystem::temp_directory_path() / "dsfs_test_export";
    std::filesystem::remove_all(dir);
    export_split(s, dir);
    const Manifest g = read_manifest(dir / "gallery.txt");
    const Manifest p = read_manifest(dir / "probes.txt");
    CHECK(g.entries.size() == s.gallery.size());
    CHECK(p.entries.size() == s.probes.size());
    const auto recs = load_records(g);
    REQUIRE(recs.size() == s.gallery.size());
    CHECK(recs[0].subject_id == s.gallery[0].subject_id);
    CHECK(recs[0].landmarks.size() == s.gallery[0].landmarks.size());
    std::filesystem::remove_all(dir);
}
