#include "cli.hpp"

#include "autodetect/autoencoder.hpp"
#include "autodetect/detector.hpp"
#include "autodetect/error.hpp"
#include "autodetect/image_io.hpp"
#include "autodetect/manifest.hpp"
#include "autodetect/metrics.hpp"
#include "autodetect/parallel.hpp"
#include "autodetect/poison.hpp"
#include "autodetect/rng.hpp"
#include "autodetect/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace autodetect::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// JSON config: nested objects name subcommands, leaves are option values
// keyed by their long flag name, e.g. {"ae": {"train": {"epochs": 50}}}.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return dump(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        json root;
        try {
            root = json::parse(in);
        } catch (const json::parse_error& e) {
            throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        std::vector<std::string> parents;
        flatten(root, parents, items);
        return items;
    }

private:
    static json dump(const CLI::App* app, bool defaults) {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
            const auto& name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& r = opt->results();
                j[name] = r.size() == 1 ? json(r.front()) : json(r);
            } else if (defaults && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            auto s = dump(sub, defaults);
            if (!s.empty()) j[sub->get_name()] = std::move(s);
        }
        return j;
    }

    static std::string scalar(const json& v, const std::string& key) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConfigError("config key '" + key + "' has an unsupported value type");
    }

    static void flatten(const json& j, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
        if (!j.is_object()) throw CLI::ConfigError("config file must contain a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                parents.push_back(key);
                flatten(value, parents, items);
                parents.pop_back();
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            const auto full = item.fullname();
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v, full));
            } else {
                item.inputs.push_back(scalar(value, full));
            }
            items.push_back(std::move(item));
        }
    }
};

class Log {
public:
    explicit Log(std::ostream& err) : err_(err) {}

    void operator()(const std::string& msg) const {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        localtime_r(&now, &tm);
        char stamp[16];
        std::strftime(stamp, sizeof stamp, "%H:%M:%S", &tm);
        err_ << '[' << stamp << "] " << msg << '\n';
    }

private:
    std::ostream& err_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// k-th output of a splitmix64 stream seeded with the run seed; every
// randomised stage draws from its own child.
std::uint64_t child_seed(std::uint64_t seed, int k) {
    RngState rng{seed};
    std::uint64_t out = 0;
    for (int i = 0; i <= k; ++i) out = rng_next(rng);
    return out;
}

enum : int { kPoisonStream = 0, kPatchStream = 1, kSweepStream = 2 };

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    bool paper_scale = false;
};

struct PatchOptions {
    std::string kind = "checkerboard";
    int size = 25;
    int cell = 1;
    std::vector<float> color{1.0f, 1.0f, 1.0f};
    std::string file;

    synth::PatchSpec spec(std::uint64_t seed) const {
        synth::PatchSpec s;
        s.kind = file.empty() ? synth::parse_patch_kind(kind) : synth::PatchKind::file;
        s.side = size;
        s.seed = seed;
        s.cell = cell;
        s.color = {color[0], color[1], color[2]};
        s.file = file;
        return s;
    }
};

struct SynthGen {
    std::string out;
    int train = 500, val = 100, test = 100;
    int size = 64;
    std::string style = "smooth";
};

struct PatchGen {
    PatchOptions patch;
    std::string out;
};

struct PoisonCmd {
    std::string manifest, out;
    double rate = 0.3;
    double alpha = 0.8;
    int target_class = 1;
    std::string placement = "random";
    std::string mode = "replace";
    PatchOptions patch;
};

struct AeTrain {
    std::string manifest, out, log;
    int epochs = 200;
    double lr = 1e-4;
    int batch = 64;
    int side = 64;
    std::vector<int> widths{16, 32, 64};
    double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
};

struct DetectFit {
    std::string model, manifest, out;
    int slice = 25;
    std::string aggregator = "mean";
};

struct DetectScan {
    std::string model, reference, manifest, out, hist;
    double threshold = 0.95;
    int bins = 50;
};

struct EvalAuroc {
    std::string report, truth, roc, summary, reference, hist;
    std::optional<double> threshold;
    int bins = 50;
};

struct EvalSweep {
    std::string model, val_manifest, test_manifest, out;
    PatchOptions patch;
    std::vector<int> patch_sides{13, 26};
    std::vector<int> slice_sides{13, 26};
    int repeats = 3;
    double alpha = 0.8;
    std::string placement = "random";
    std::string aggregator = "mean";
};

void add_patch_options(CLI::App* app, PatchOptions& p, const std::string& prefix) {
    app->add_option("--" + prefix + "kind", p.kind, "Patch kind: checkerboard, solid or noise")
        ->check(CLI::IsMember({"checkerboard", "solid", "noise"}));
    app->add_option("--" + prefix + "size", p.size, "Patch side in pixels")->check(CLI::PositiveNumber);
    app->add_option("--cell", p.cell, "Checkerboard cell side")->check(CLI::PositiveNumber);
    app->add_option("--color", p.color, "Solid patch colour r,g,b in [0,1]")->expected(3)->delimiter(',');
    app->add_option("--" + prefix + "file", p.file, "Load the patch from an image (overrides the kind)");
}

void run_synth_gen(const SynthGen& o, const Globals& g, const Log& log) {
    RngState master{g.seed};
    const std::pair<const char*, int> splits[] = {{"train", o.train}, {"val", o.val}, {"test", o.test}};
    for (const auto& [name, count] : splits) {
        const auto seed = rng_next(master);
        if (count == 0) continue;
        const auto m = synth::gen_corpus({count, o.size, seed, synth::parse_style(o.style)}, fs::path(o.out) / name);
        log(std::string(name) + ": " + std::to_string(m.size()) + " images of " + std::to_string(o.size) + "x" +
            std::to_string(o.size) + " -> " + (fs::path(o.out) / name / "manifest.jsonl").string());
    }
}

void run_patch_gen(const PatchGen& o, const Globals& g, const Log& log) {
    const auto patch = synth::gen_patch(o.patch.spec(child_seed(g.seed, kPatchStream)));
    ensure_parent(o.out);
    save_image(patch.image, o.out, format_for_path(o.out));
    log(std::string(synth::to_string(patch.kind)) + " patch " + std::to_string(patch.side()) + "x" +
        std::to_string(patch.side()) + " -> " + o.out);
}

void run_poison(const PoisonCmd& o, const Globals& g, const Log& log) {
    const auto manifest = read_manifest(o.manifest);
    poison::PoisonConfig cfg;
    cfg.rate = o.rate;
    cfg.alpha = o.alpha;
    cfg.target_class = o.target_class;
    cfg.placement = poison::parse_placement(o.placement);
    cfg.mode = poison::parse_mode(o.mode);
    cfg.patch = synth::gen_patch(o.patch.spec(child_seed(g.seed, kPatchStream)));
    cfg.seed = child_seed(g.seed, kPoisonStream);
    const auto result = poison::poison_dataset(manifest, cfg, o.out);
    std::size_t flagged = 0;
    for (const auto& r : result.records) flagged += r.poisoned;
    log("poisoned " + std::to_string(flagged) + " of " + std::to_string(result.manifest.size()) + " records -> " +
        (fs::path(o.out) / "manifest.jsonl").string() + " (ground truth in truth.jsonl)");
}

void run_ae_train(const AeTrain& o, const Globals& g, const Log& log) {
    const auto manifest = read_manifest(o.manifest);
    const ae::ArchDescriptor arch{o.side, 3, {o.widths[0], o.widths[1], o.widths[2]}};
    ae::TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch;
    cfg.seed = g.seed;
    cfg.beta1 = o.beta1;
    cfg.beta2 = o.beta2;
    cfg.epsilon = o.epsilon;
    cfg.validate();
    log("training on " + std::to_string(manifest.size()) + " images, " + std::to_string(ae::param_count(arch)) +
        " parameters");
    const auto result = ae::train(manifest, arch, cfg, [&](int epoch, double loss) {
        log("epoch " + std::to_string(epoch) + "/" + std::to_string(cfg.epochs) + " loss " + fmt(loss));
    });
    ensure_parent(o.out);
    ae::save_model(result.model, o.out);
    if (!o.log.empty()) {
        ensure_parent(o.log);
        std::ofstream csv(o.log, std::ios::binary);
        if (!csv) throw IoError("cannot write " + o.log);
        csv << "epoch,mean_loss\n";
        char buf[64];
        for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%zu,%.9g\n", e + 1, result.epoch_losses[e]);
            csv << buf;
        }
        if (!csv) throw IoError("write failed for " + o.log);
    }
    log("model -> " + o.out);
}

void run_detect_fit(const DetectFit& o, const Log& log) {
    const auto model = ae::load_model(o.model);
    const detect::SliceConfig cfg{o.slice, detect::parse_aggregator(o.aggregator)};
    cfg.validate();
    const auto ref = detect::fit_reference(model, read_manifest(o.manifest), cfg);
    ensure_parent(o.out);
    detect::write_reference(ref, o.out);
    log("reference mu " + fmt(ref.mu) + " sigma " + fmt(ref.sigma) + " over " + std::to_string(ref.n) +
        " slice errors -> " + o.out);
}

void run_detect_scan(const DetectScan& o, const Log& log) {
    const auto model = ae::load_model(o.model);
    const auto ref = detect::read_reference(o.reference);
    const detect::SliceConfig cfg{ref.slice, ref.aggregator};
    const auto reports = detect::scan(model, ref, read_manifest(o.manifest), cfg, o.threshold);
    ensure_parent(o.out);
    detect::write_reports(reports, o.out);
    std::size_t flagged = 0;
    for (const auto& r : reports) flagged += r.verdict;
    log("flagged " + std::to_string(flagged) + " of " + std::to_string(reports.size()) + " images at t=" +
        fmt(o.threshold) + " -> " + o.out);
    if (!o.hist.empty()) {
        ensure_parent(o.hist);
        detect::write_histogram(detect::histogram(ref, reports, o.bins), o.hist);
    }
}

void run_eval_auroc(const EvalAuroc& o, const Log& log) {
    auto reports = detect::read_reports(o.report);
    metrics::attach_truth(reports, poison::read_truth(o.truth));
    if (o.threshold) reports = detect::reclassify(reports, *o.threshold);
    const auto scores = metrics::scores_from_reports(reports);
    const double auc = metrics::auroc(scores);
    const auto acc = metrics::accuracy_at(reports);
    log("AUROC " + fmt(auc) + ", accuracy " + fmt(acc.accuracy) + " at t=" + fmt(reports.front().threshold));
    if (!o.roc.empty()) {
        ensure_parent(o.roc);
        metrics::write_roc(metrics::roc_curve(scores), o.roc);
    }
    if (!o.summary.empty()) {
        const json j = {{"auroc", auc},
                        {"accuracy", acc.accuracy},
                        {"threshold", reports.front().threshold},
                        {"tp", acc.confusion.tp},
                        {"fp", acc.confusion.fp},
                        {"tn", acc.confusion.tn},
                        {"fn", acc.confusion.fn},
                        {"positives", scores.positives()},
                        {"negatives", scores.negatives()}};
        ensure_parent(o.summary);
        std::ofstream out(o.summary, std::ios::binary);
        if (!out) throw IoError("cannot write " + o.summary);
        out << j.dump(2) << '\n';
        if (!out) throw IoError("write failed for " + o.summary);
    }
    if (!o.hist.empty()) {
        if (o.reference.empty()) throw Error("--hist needs --reference");
        ensure_parent(o.hist);
        detect::write_histogram(detect::histogram(detect::read_reference(o.reference), reports, o.bins), o.hist);
    }
}

void run_eval_sweep(const EvalSweep& o, const Globals& g, const Log& log) {
    const auto model = ae::load_model(o.model);
    metrics::SweepConfig cfg;
    cfg.patch = o.patch.spec(child_seed(g.seed, kPatchStream));
    cfg.patch_sides = o.patch_sides;
    cfg.slice_sides = o.slice_sides;
    cfg.seeds.clear();
    RngState rng{child_seed(g.seed, kSweepStream)};
    for (int i = 0; i < o.repeats; ++i) cfg.seeds.push_back(rng_next(rng));
    cfg.alpha = o.alpha;
    cfg.placement = poison::parse_placement(o.placement);
    cfg.aggregator = detect::parse_aggregator(o.aggregator);
    const auto result = metrics::sweep(model, read_manifest(o.val_manifest), read_manifest(o.test_manifest), cfg);
    ensure_parent(o.out);
    metrics::write_sweep_csv(result, o.out);
    log("sweep mean AUROC " + fmt(result.grand_mean()) + " (diagonal " + fmt(result.diagonal_mean()) +
        ", off-diagonal " + fmt(result.off_diagonal_mean()) + ") -> " + o.out);
}

// A value the --paper-scale preset imposes unless the flag itself was given
// on the command line.
struct PresetValue {
    CLI::App* app;
    CLI::Option* option;
    std::function<void()> apply;
};

bool given_on_command_line(const CLI::App* app, const CLI::Option* opt) {
    const auto& order = app->parse_order();
    return std::find(order.begin(), order.end(), opt) != order.end();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Patch-poisoning simulation and autoencoder-based poisoned-image detection", "autodetect"};
    app.option_defaults()->always_capture_default();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    Globals g;
    app.set_config("--config", "", "JSON config file; sections are named after subcommands");
    app.add_option("--seed", g.seed, "Seed for every random choice of the run");
    app.add_option("--threads", g.threads, "Worker threads, 0 = all logical cores")->check(CLI::NonNegativeNumber);
    app.add_flag("--paper-scale", g.paper_scale, "Use 320x320 images, 200 epochs, 25x25 slices and patches");

    std::vector<PresetValue> presets;
    auto preset = [&](CLI::App* sub, CLI::Option* opt, auto& var, auto value) {
        presets.push_back({sub, opt, [&var, value] { var = value; }});
    };

    auto* synth = app.add_subcommand("synth", "Synthetic clean corpora")->require_subcommand(1);
    SynthGen sg;
    auto* synth_gen = synth->add_subcommand("gen", "Generate train/val/test corpora with manifests");
    synth_gen->add_option("--out", sg.out, "Output directory")->required();
    synth_gen->add_option("--train", sg.train, "Training images")->check(CLI::NonNegativeNumber);
    synth_gen->add_option("--val", sg.val, "Validation images")->check(CLI::NonNegativeNumber);
    synth_gen->add_option("--test", sg.test, "Test images")->check(CLI::NonNegativeNumber);
    auto* sg_size = synth_gen->add_option("--size", sg.size, "Image side in pixels");
    synth_gen->add_option("--style", sg.style, "smooth or shapes")->check(CLI::IsMember({"smooth", "shapes"}));
    preset(synth_gen, sg_size, sg.size, 320);

    auto* patch = app.add_subcommand("patch", "Adversarial patches")->require_subcommand(1);
    PatchGen pg;
    auto* patch_gen = patch->add_subcommand("gen", "Render a patch to an image file");
    add_patch_options(patch_gen, pg.patch, "");
    patch_gen->add_option("--out", pg.out, "Output image (.png or .ppm)")->required();
    preset(patch_gen, patch_gen->get_option("--size"), pg.patch.size, 25);

    PoisonCmd pc;
    auto* poison_cmd = app.add_subcommand("poison", "Blend a patch into a fraction of a dataset and flip labels");
    poison_cmd->add_option("--manifest", pc.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
    poison_cmd->add_option("--out", pc.out, "Output directory")->required();
    poison_cmd->add_option("--rate", pc.rate, "Poisoning rate r")->check(CLI::Range(0.0, 1.0));
    poison_cmd->add_option("--alpha", pc.alpha, "Blend factor")->check(CLI::Range(0.0, 1.0));
    poison_cmd->add_option("--target-class", pc.target_class, "Class every poisoned object is relabelled to");
    poison_cmd->add_option("--placement", pc.placement, "random, top_left or x,y");
    poison_cmd->add_option("--mode", pc.mode, "replace or append")->check(CLI::IsMember({"replace", "append"}));
    add_patch_options(poison_cmd, pc.patch, "patch-");
    preset(poison_cmd, poison_cmd->get_option("--patch-size"), pc.patch.size, 25);

    auto* ae_cmd = app.add_subcommand("ae", "Autoencoder")->require_subcommand(1);
    AeTrain at;
    auto* ae_train = ae_cmd->add_subcommand("train", "Train the autoencoder on clean images");
    ae_train->add_option("--manifest", at.manifest, "Training manifest")->required()->check(CLI::ExistingFile);
    ae_train->add_option("--out", at.out, "Model file")->required();
    ae_train->add_option("--log", at.log, "Training log CSV (epoch,mean_loss)");
    auto* at_epochs = ae_train->add_option("--epochs", at.epochs, "Epochs")->check(CLI::NonNegativeNumber);
    ae_train->add_option("--lr", at.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    ae_train->add_option("--batch", at.batch, "Batch size")->check(CLI::PositiveNumber);
    auto* at_side = ae_train->add_option("--side", at.side, "Input side; images are resized to it");
    ae_train->add_option("--widths", at.widths, "Encoder widths c1,c2,c3")->expected(3)->delimiter(',');
    ae_train->add_option("--beta1", at.beta1, "Adam beta1");
    ae_train->add_option("--beta2", at.beta2, "Adam beta2");
    ae_train->add_option("--epsilon", at.epsilon, "Adam epsilon");
    preset(ae_train, at_side, at.side, 320);
    preset(ae_train, at_epochs, at.epochs, 200);

    auto* detect_cmd = app.add_subcommand("detect", "Poisoned-image detection")->require_subcommand(1);
    DetectFit df;
    auto* detect_fit = detect_cmd->add_subcommand("fit", "Fit the Gaussian reference on clean validation images");
    detect_fit->add_option("--model", df.model, "Model file")->required()->check(CLI::ExistingFile);
    detect_fit->add_option("--manifest", df.manifest, "Clean validation manifest")->required()->check(CLI::ExistingFile);
    detect_fit->add_option("--out", df.out, "Reference JSON")->required();
    auto* df_slice = detect_fit->add_option("--slice", df.slice, "Slice side in pixels");
    detect_fit->add_option("--aggregator", df.aggregator, "mean, max or percentile:<p>");
    preset(detect_fit, df_slice, df.slice, 25);

    DetectScan ds;
    auto* detect_scan = detect_cmd->add_subcommand("scan", "Score and classify every image of a manifest");
    detect_scan->add_option("--model", ds.model, "Model file")->required()->check(CLI::ExistingFile);
    detect_scan->add_option("--reference", ds.reference, "Reference JSON")->required()->check(CLI::ExistingFile);
    detect_scan->add_option("--manifest", ds.manifest, "Manifest to scan")->required()->check(CLI::ExistingFile);
    detect_scan->add_option("--out", ds.out, "Report JSONL")->required();
    detect_scan->add_option("--threshold", ds.threshold, "CDF threshold t")->check(CLI::Range(0.5, 1.0));
    detect_scan->add_option("--hist", ds.hist, "Histogram CSV of q_max against the reference");
    detect_scan->add_option("--bins", ds.bins, "Histogram bins")->check(CLI::PositiveNumber);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluation against ground truth")->require_subcommand(1);
    EvalAuroc ea;
    auto* eval_auroc = eval_cmd->add_subcommand("auroc", "AUROC, ROC curve and accuracy of a report");
    eval_auroc->add_option("--report", ea.report, "Report JSONL")->required()->check(CLI::ExistingFile);
    eval_auroc->add_option("--truth", ea.truth, "Ground-truth JSONL written by poison")->required()->check(CLI::ExistingFile);
    eval_auroc->add_option("--roc", ea.roc, "ROC CSV (fpr,tpr,threshold)");
    eval_auroc->add_option("--summary", ea.summary, "Summary JSON");
    eval_auroc->add_option("--threshold", ea.threshold, "Re-apply this threshold before computing accuracy")
        ->check(CLI::Range(0.5, 1.0));
    eval_auroc->add_option("--reference", ea.reference, "Reference JSON (needed for --hist)");
    eval_auroc->add_option("--hist", ea.hist, "Histogram CSV split into clean and poisoned counts");
    eval_auroc->add_option("--bins", ea.bins, "Histogram bins")->check(CLI::PositiveNumber);

    EvalSweep es;
    auto* eval_sweep = eval_cmd->add_subcommand("sweep", "AUROC grid over patch sides and slice sides");
    eval_sweep->add_option("--model", es.model, "Model file")->required()->check(CLI::ExistingFile);
    eval_sweep->add_option("--val-manifest", es.val_manifest, "Clean validation manifest")->required()->check(CLI::ExistingFile);
    eval_sweep->add_option("--test-manifest", es.test_manifest, "Clean test manifest")->required()->check(CLI::ExistingFile);
    eval_sweep->add_option("--out", es.out, "Sweep CSV")->required();
    add_patch_options(eval_sweep, es.patch, "patch-");
    eval_sweep->remove_option(eval_sweep->get_option("--patch-size"));
    eval_sweep->add_option("--patch-sides", es.patch_sides, "Patch sides (columns)")->delimiter(',');
    eval_sweep->add_option("--slice-sides", es.slice_sides, "Slice sides (rows)")->delimiter(',');
    eval_sweep->add_option("--repeats", es.repeats, "Poisoning draws averaged per cell")->check(CLI::PositiveNumber);
    eval_sweep->add_option("--alpha", es.alpha, "Blend factor")->check(CLI::Range(0.0, 1.0));
    eval_sweep->add_option("--placement", es.placement, "random, top_left or x,y");
    eval_sweep->add_option("--aggregator", es.aggregator, "mean, max or percentile:<p>");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        const std::string extras = "INI was not able to parse ";
        if (msg.rfind(extras, 0) == 0) {
            err << "error: unknown config key '" << msg.substr(extras.size()) << "'\n";
            return 1;
        }
        if (e.get_exit_code() != 0) {
            if (const auto rest = app.remaining(true); !rest.empty()) {
                err << "error: unexpected argument '" << rest.front() << "'\n";
                return 1;
            }
        }
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    if (g.paper_scale) {
        for (const auto& p : presets) {
            if (p.app->parsed() && !given_on_command_line(p.app, p.option)) p.apply();
        }
    }

    const Log log(err);
    try {
        set_thread_count(static_cast<unsigned>(g.threads));
        if (synth_gen->parsed()) run_synth_gen(sg, g, log);
        else if (patch_gen->parsed()) run_patch_gen(pg, g, log);
        else if (poison_cmd->parsed()) run_poison(pc, g, log);
        else if (ae_train->parsed()) run_ae_train(at, g, log);
        else if (detect_fit->parsed()) run_detect_fit(df, log);
        else if (detect_scan->parsed()) run_detect_scan(ds, log);
        else if (eval_auroc->parsed()) run_eval_auroc(ea, log);
        else if (eval_sweep->parsed()) run_eval_sweep(es, g, log);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace autodetect::cli
