// dsfs: calibrate / synthesize / enroll / recognize / evaluate / benchmark / config
//
// Exit status: 0 ok, 1 usage or configuration error, 2 data error,
// 3 finished but something did not converge.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dsfs/error.hpp"
#include "dsfs/image_io.hpp"
#include "dsfs/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dsfs;

namespace {

constexpr int kOk = 0, kUsage = 1, kData = 2, kNonConvergence = 3;

struct Options {
    std::string manifest, config, out, dictionary, exemplars, shape_model, reference, synthetic;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau, lambda, pauc_cutoff;
    std::vector<std::string> sets;
    bool defaults = false;
};

pipeline::PipelineConfig effective_config(const Options& o) {
    pipeline::PipelineConfig cfg = o.config.empty() ? pipeline::PipelineConfig{} : pipeline::read_config(o.config);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        pipeline::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.shape_model.empty()) cfg.shape_model = o.shape_model;
    if (o.seed) cfg.benchmark.seed = *o.seed;
    if (o.tau) cfg.protocol().tau = *o.tau;
    if (o.lambda) cfg.protocol().solver.lambda = *o.lambda;
    if (o.pauc_cutoff) cfg.protocol().pauc_cutoff = *o.pauc_cutoff;
    cfg.validate();
    return cfg;
}

void common_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.sets, "override one configuration key (key=value), repeatable");
    cmd->add_option("--seed", o.seed, "64-bit seed of the benchmark splits");
    cmd->add_option("--tau", o.tau, "SCI acceptance threshold in (0, 1)");
    cmd->add_option("--lambda", o.lambda, "block sparsity weight");
    cmd->add_option("--pauc-cutoff", o.pauc_cutoff, "false positive rate bound of the partial AUC");
    cmd->add_option("--shape-model", o.shape_model, "shape model container (default: procedural head)");
}

int finish(const pipeline::CommandResult& r) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& p : r.written) std::cerr << "wrote " << p.string() << "\n";
    return r.nonconverged ? kNonConvergence : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-specific face synthesis for still-to-video recognition"};
    app.require_subcommand(1);
    Options o;

    auto* calibrate = app.add_subcommand("calibrate", "select capture-condition exemplars from a generic set");
    calibrate->add_option("--manifest", o.manifest, "generic ROI manifest")->required();
    calibrate->add_option("--reference", o.reference, "reference still image")->required()->check(CLI::ExistingFile);
    calibrate->add_option("--out", o.out, "exemplar set file")->required();
    common_flags(calibrate, o);

    auto* synthesize = app.add_subcommand("synthesize", "render every gallery still under every exemplar condition");
    synthesize->add_option("--manifest", o.manifest, "gallery manifest (one still per subject)")->required();
    synthesize->add_option("--exemplars", o.exemplars, "exemplar set from calibrate")->required();
    synthesize->add_option("--out", o.out, "output directory")->required();
    common_flags(synthesize, o);

    auto* enroll = app.add_subcommand("enroll", "build the cross-domain dictionary");
    enroll->add_option("--manifest", o.manifest, "gallery manifest")->required();
    enroll->add_option("--synthetic", o.synthetic, "directory written by synthesize; omit for stills only");
    enroll->add_option("--out", o.out, "dictionary file")->required();
    common_flags(enroll, o);

    auto* recognize = app.add_subcommand("recognize", "classify probes against a dictionary");
    recognize->add_option("--manifest", o.manifest, "probe manifest")->required();
    recognize->add_option("--dictionary", o.dictionary, "dictionary from enroll")->required();
    recognize->add_option("--out", o.out, "decision file")->required();
    common_flags(recognize, o);

    auto* evaluate = app.add_subcommand("evaluate", "ROC, partial AUC, AUPR and DSQ from decisions or scores");
    evaluate->add_option("--manifest", o.manifest, "decision file, or 'score label' lines")->required();
    evaluate->add_option("--dictionary", o.dictionary, "dictionary for DSQ against the decided probes");
    evaluate->add_option("--out", o.out, "report file; curves go next to it as .svg")->required();
    common_flags(evaluate, o);

    auto* benchmark = app.add_subcommand("benchmark", "seeded synthetic trend benchmark, baseline vs augmented");
    benchmark->add_option("--out", o.out, "output directory")->required();
    common_flags(benchmark, o);

    auto* config = app.add_subcommand("config", "print the effective configuration");
    config->add_flag("--defaults", o.defaults, "print built-in defaults, ignoring --config");
    config->add_option("--out", o.out, "write to a file instead of stdout");
    common_flags(config, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (config->parsed()) {
            const auto cfg = o.defaults ? pipeline::PipelineConfig{} : effective_config(o);
            const std::string text = pipeline::format_config(cfg);
            if (o.out.empty()) std::cout << text;
            else io::write_file_atomic(o.out, text);
            return kOk;
        }
        const auto cfg = effective_config(o);
        if (calibrate->parsed()) return finish(pipeline::cmd_calibrate(o.manifest, o.reference, o.out, cfg));
        if (synthesize->parsed()) return finish(pipeline::cmd_synthesize(o.manifest, o.exemplars, o.out, cfg));
        if (enroll->parsed()) return finish(pipeline::cmd_enroll(o.manifest, o.synthetic, o.out, cfg));
        if (recognize->parsed()) return finish(pipeline::cmd_recognize(o.manifest, o.dictionary, o.out, cfg));
        if (evaluate->parsed()) return finish(pipeline::cmd_evaluate(o.manifest, o.dictionary, o.out, cfg));
        if (benchmark->parsed()) return finish(pipeline::cmd_benchmark(o.out, cfg, std::cout));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
