#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "fundus/error.hpp"
#include "fundus/metrics.hpp"
#include "fundus/model_io.hpp"
#include "fundus/orchestrate.hpp"
#include "fundus/parallel.hpp"
#include "fundus/synthetic.hpp"
#include "run_config.hpp"

namespace fundus::cli {

namespace fs = std::filesystem;

namespace {

struct Io {
    std::ostream& out;
    std::ostream& err;
};

// Command-line flags that are shorthands for config keys. They are applied
// after the config file, so a flag always wins.
class KeyFlags {
public:
    CLI::Option* add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        auto& slot = slots_.emplace_back();
        slot.key = key;
        slot.opt = app.add_option(flag, slot.value, help);
        return slot.opt;
    }

    void apply_to(RunConfig& cfg) const {
        for (const auto& s : slots_)
            if (s.opt->count() > 0) cfg.apply(s.key, s.value);
    }

private:
    struct Slot {
        std::string key;
        std::string value;
        CLI::Option* opt = nullptr;
    };
    std::deque<Slot> slots_;
};

RunConfig build_config(const std::string& config_path, const KeyFlags& flags, RunConfig base = {}) {
    if (!config_path.empty()) apply_config_file(base, config_path);
    flags.apply_to(base);
    base.validate();
    return base;
}

void add_preprocess_flags(CLI::App& cmd, KeyFlags& flags) {
    flags.add(cmd, "--crop", "crop_size", "Center-crop side in pixels");
    flags.add(cmd, "--resize", "resize_to", "Output side after cropping (0 keeps the crop)");
    flags.add(cmd, "--sigma", "sigma", "Gaussian blur standard deviation");
    flags.add(cmd, "--amp", "amplification", "Local-contrast amplification");
    flags.add(cmd, "--offset", "offset", "Intensity the normalized image is centered on");
}

void add_train_flags(CLI::App& cmd, KeyFlags& flags) {
    flags.add(cmd, "--arch", "arch", "Network variant")->check(CLI::IsMember({"plain", "multilevel"}));
    flags.add(cmd, "--epochs", "epochs", "Maximum training epochs")->check(CLI::PositiveNumber);
    flags.add(cmd, "--lr", "lr", "Initial learning rate")->check(CLI::PositiveNumber);
    flags.add(cmd, "--gamma", "gamma", "Per-epoch learning-rate decay")->check(CLI::PositiveNumber);
    flags.add(cmd, "--batch-size", "batch_size", "Mini-batch size")->check(CLI::PositiveNumber);
    flags.add(cmd, "--patience", "patience", "Early-stopping patience in epochs")->check(CLI::PositiveNumber);
    flags.add(cmd, "--seed", "seed", "Seed for initialization, shuffling and augmentation")
        ->check(CLI::NonNegativeNumber);
}

struct ManifestFlags {
    bool binarize = false;
    int referable_grade = 3;

    void add(CLI::App& cmd) {
        cmd.add_flag("--binarize", binarize, "Read `path,grade` manifests and map grades to referable labels");
        cmd.add_option("--referable-grade", referable_grade, "Lowest grade counted as referable")
            ->check(CLI::Range(1, 4));
    }
    ManifestOptions options() const { return {binarize, referable_grade}; }
};

Manifest read_manifest(const std::string& path, const ManifestFlags& mf, const Io& io) {
    Manifest m = load_manifest(path, mf.options());
    for (const auto& w : m.warnings) io.err << "warning: " << w << "\n";
    return m;
}

std::size_t count_positive(const Dataset& d) {
    return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](const Sample& s) { return s.label == 1; }));
}

EpochCallback epoch_logger(const Io& io, std::string prefix = {}) {
    return [&io, prefix](const EpochRecord& r) {
        fmt::print(io.err, "{}epoch {:3d}  train_loss {:.4f}  val_loss {:.4f}  val_auroc {:.4f}  lr {:.4g}\n", prefix,
                   r.epoch, r.train_loss, r.val_loss, r.val_auroc, r.lr);
    };
}

std::vector<ModelParams> load_models(const std::vector<std::string>& paths) {
    std::vector<ModelParams> models;
    for (const auto& p : paths) models.push_back(load_model(p));
    for (std::size_t i = 1; i < models.size(); ++i) {
        if (models[i].arch.input_size != models[0].arch.input_size) {
            throw ConfigError("model '" + paths[i] + "' expects input size " +
                              std::to_string(models[i].arch.input_size) + ", '" + paths[0] + "' expects " +
                              std::to_string(models[0].arch.input_size));
        }
        if (!(models[i].preprocess == models[0].preprocess)) {
            throw ConfigError("model '" + paths[i] + "' was trained with different preprocessing than '" + paths[0] +
                              "'");
        }
    }
    return models;
}

// ---- preprocess -----------------------------------------------------------

struct PreprocessCmd {
    std::string input_dir, output_dir, config;
    KeyFlags flags;

    void attach(CLI::App& cmd) {
        cmd.add_option("--input-dir", input_dir, "Directory of source images")->required();
        cmd.add_option("--output-dir", output_dir, "Destination directory")->required();
        cmd.add_option("--config", config, "Flat key=value config file");
        add_preprocess_flags(cmd, flags);
    }

    int run(const Io& io) const {
        const RunConfig cfg = build_config(config, flags);
        if (!fs::is_directory(input_dir)) throw IoError("input directory '" + input_dir + "' does not exist");
        fs::create_directories(output_dir);

        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input_dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());

        std::vector<std::optional<std::string>> failures(files.size());
        parallel_for(files.size(), [&](std::size_t i) {
            try {
                const Image out = preprocess(read_image(files[i].string()), cfg.preprocess);
                fs::path name = files[i].filename();
                if (name.extension() != ".ppm") name.replace_extension(".ppm");
                write_ppm((fs::path(output_dir) / name).string(), out);
            } catch (const Error& e) {
                failures[i] = e.what();
            }
        });

        std::size_t failed = 0;
        for (std::size_t i = 0; i < files.size(); ++i) {
            if (!failures[i]) continue;
            ++failed;
            io.err << "error: " << *failures[i] << "\n";
        }
        write_text_file((fs::path(output_dir) / "preprocess.cfg").string(), format_kv(to_kv(cfg.preprocess)));
        fmt::print(io.out, "processed {}, failed {}\n", files.size() - failed, failed);
        return failed == 0 ? kExitOk : kExitFailure;
    }
};

// ---- train ----------------------------------------------------------------

struct TrainCmd {
    std::string manifest, val_manifest, out, history, init, config;
    ManifestFlags mf;
    KeyFlags flags;

    void attach(CLI::App& cmd) {
        cmd.add_option("--manifest", manifest, "Training manifest CSV")->required();
        cmd.add_option("--val-manifest", val_manifest, "Validation manifest CSV")->required();
        cmd.add_option("--out", out, "Output model file")->required();
        cmd.add_option("--history", history, "Training history JSON (default: <out>.history.json)");
        cmd.add_option("--init", init, "Start from this model's weights (fine-tuning)");
        cmd.add_option("--config", config, "Flat key=value config file");
        mf.add(cmd);
        add_train_flags(cmd, flags);
        add_preprocess_flags(cmd, flags);
    }

    int run(const Io& io) const {
        std::optional<ModelParams> base;
        RunConfig defaults;
        if (!init.empty()) {
            base = load_model(init);
            defaults.arch = base->arch;
            defaults.preprocess = base->preprocess;
        }
        const RunConfig cfg = build_config(config, flags, defaults);

        const Dataset train_set =
            load_dataset(read_manifest(manifest, mf, io), cfg.preprocess, cfg.arch.input_size);
        const Dataset val_set =
            load_dataset(read_manifest(val_manifest, mf, io), cfg.preprocess, cfg.arch.input_size);
        fmt::print(io.err, "training {} on {} samples ({} positive), validating on {}\n", to_string(cfg.arch.variant),
                   train_set.size(), count_positive(train_set), val_set.size());

        TrainResult res = base ? fine_tune(*base, cfg.arch, train_set, val_set, cfg.train, epoch_logger(io))
                               : train(train_set, val_set, cfg.arch, cfg.train, nullptr, epoch_logger(io));
        res.best.preprocess = cfg.preprocess;

        if (const auto dir = fs::path(out).parent_path(); !dir.empty()) fs::create_directories(dir);
        save_model(res.best, out);
        const std::string history_path =
            history.empty() ? fs::path(out).replace_extension(".history.json").string() : history;
        write_text_file(history_path, history_json(res, cfg.arch, cfg.train));
        fmt::print(io.out, "saved {} (best epoch {}, {} epochs run{})\n", out, res.best_epoch, res.epochs_run(),
                   res.stopped_early ? ", stopped early" : "");
        return kExitOk;
    }
};

// ---- cv -------------------------------------------------------------------

struct CvCmd {
    std::string manifest, out_dir, config;
    std::uint32_t folds = 5;
    std::uint32_t top_k = 3;
    ManifestFlags mf;
    KeyFlags flags;

    void attach(CLI::App& cmd) {
        cmd.add_option("--manifest", manifest, "Manifest CSV")->required();
        cmd.add_option("--out-dir", out_dir, "Directory for fold models and results")->required();
        cmd.add_option("--folds", folds, "Number of folds")->capture_default_str()->check(CLI::Range(2u, 1000u));
        cmd.add_option("--top-k", top_k, "Models kept for the ensemble")->capture_default_str()->check(
            CLI::Range(1u, 1000u));
        cmd.add_option("--config", config, "Flat key=value config file");
        mf.add(cmd);
        add_train_flags(cmd, flags);
        add_preprocess_flags(cmd, flags);
    }

    int run(const Io& io) const {
        const RunConfig cfg = build_config(config, flags);
        if (top_k > folds) throw ConfigError("--top-k must not exceed --folds");
        const Dataset data = load_dataset(read_manifest(manifest, mf, io), cfg.preprocess, cfg.arch.input_size);
        fmt::print(io.err, "{}-fold cross-validation on {} samples ({} positive)\n", folds, data.size(),
                   count_positive(data));

        CvOptions opts;
        opts.k = folds;
        opts.top_k = top_k;
        opts.out_dir = out_dir;
        const CvResult cv = run_cv(data, cfg.arch, cfg.train, opts, cfg.preprocess, epoch_logger(io, "  "));

        std::string listing;
        for (auto f : cv.selected) listing += cv.folds[f].model_path + "\n";
        write_text_file((fs::path(out_dir) / "ensemble.txt").string(), listing);
        for (const auto& f : cv.folds) {
            fmt::print(io.out, "fold {}  val_auroc {:.4f}  val_auprc {:.4f}  epochs {}\n", f.fold, f.val_auroc,
                       f.val_auprc, f.epochs_run);
        }
        std::string selected;
        for (auto f : cv.selected) selected += (selected.empty() ? "" : " ") + std::to_string(f);
        fmt::print(io.out, "selected folds: {}\n", selected);
        return kExitOk;
    }
};

// ---- eval -----------------------------------------------------------------

struct EvalCmd {
    std::string manifest, report_path, scores_path, config;
    std::vector<std::string> models;
    bool tta = false;
    ManifestFlags mf;
    KeyFlags flags;

    void attach(CLI::App& cmd) {
        cmd.add_option("--manifest", manifest, "Manifest CSV")->required();
        cmd.add_option("--model", models, "Model file; repeat for an ensemble")->required();
        cmd.add_flag("--tta", tta, "Average over test-time augmentation views");
        cmd.add_option("--report", report_path, "Metrics report JSON");
        cmd.add_option("--scores", scores_path, "Per-sample scores CSV");
        cmd.add_option("--config", config, "Flat key=value config file");
        flags.add(cmd, "--threshold", "threshold", "Operating threshold for sensitivity and specificity");
        mf.add(cmd);
    }

    int run(const Io& io) const {
        const RunConfig cfg = build_config(config, flags);
        const auto params = load_models(models);
        const Dataset data =
            load_dataset(read_manifest(manifest, mf, io), params[0].preprocess, params[0].arch.input_size);

        std::vector<ScoredSample> scored(data.size());
        const AugmentPolicy* policy = tta ? &cfg.train.augment : nullptr;
        parallel_for(data.size(), [&](std::size_t i) {
            scored[i] = {ensemble_predict(params, data[i].image, policy), data[i].label, data[i].id};
        });
        std::sort(scored.begin(), scored.end(), [](const ScoredSample& a, const ScoredSample& b) { return a.id < b.id; });

        if (!scores_path.empty()) write_text_file(scores_path, scores_csv(scored));
        const MetricsReport r = report(scored, cfg.threshold);
        if (!report_path.empty()) write_text_file(report_path, report_json(r));
        fmt::print(io.out, "auroc {:.4f}  auprc {:.4f}  sensitivity {:.4f}  specificity {:.4f}  (threshold {}, {} pos, {} neg)\n",
                   r.auroc, r.auprc, r.sensitivity, r.specificity, r.threshold, r.n_pos, r.n_neg);
        return kExitOk;
    }
};

// ---- predict --------------------------------------------------------------

struct PredictCmd {
    std::vector<std::string> images, models;
    std::string config;
    bool tta = false;
    bool raw = false;

    void attach(CLI::App& cmd) {
        cmd.add_option("--image", images, "Image to score; repeatable")->required();
        cmd.add_option("--model", models, "Model file; repeat for an ensemble")->required();
        cmd.add_flag("--tta", tta, "Average over test-time augmentation views");
        cmd.add_flag("--raw", raw, "Skip preprocessing; the image must already match the model input size");
        cmd.add_option("--config", config, "Flat key=value config file");
    }

    int run(const Io& io) const {
        const RunConfig cfg = build_config(config, KeyFlags{});
        const auto params = load_models(models);
        const AugmentPolicy* policy = tta ? &cfg.train.augment : nullptr;

        auto sorted = images;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& path : sorted) {
            Image img = read_image(path);
            if (!raw) img = prepare_input(img, params[0].preprocess, params[0].arch.input_size);
            fmt::print(io.out, "{}\t{:.6f}\n", path, ensemble_predict(params, img, policy));
        }
        return kExitOk;
    }
};

// ---- synth ----------------------------------------------------------------

struct SynthCmd {
    std::string out_dir, task = "blob", prefix = "img";
    std::size_t count = 100;
    std::uint64_t seed = 1;
    std::uint32_t size = 64;

    void attach(CLI::App& cmd) {
        cmd.add_option("--out-dir", out_dir, "Destination directory")->required();
        cmd.add_option("--task", task, "Lesion pattern carried by class 1")
            ->capture_default_str()
            ->check(CLI::IsMember({"blob", "ring"}));
        cmd.add_option("--count", count, "Number of images")->capture_default_str()->check(CLI::PositiveNumber);
        cmd.add_option("--seed", seed, "Generator seed")->capture_default_str();
        cmd.add_option("--size", size, "Image side in pixels")->capture_default_str()->check(CLI::Range(8u, 4096u));
        cmd.add_option("--prefix", prefix, "File name prefix")->capture_default_str();
    }

    int run(const Io& io) const {
        SyntheticOptions opts;
        opts.size = size;
        const Dataset data =
            make_synthetic(task == "ring" ? SyntheticTask::ring : SyntheticTask::blob, count, seed, prefix, opts);
        fs::create_directories(out_dir);
        std::string manifest = "path,label\n";
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::string name = fmt::format("{}_{:05d}.ppm", prefix, i);
            write_ppm((fs::path(out_dir) / name).string(), data[i].image);
            manifest += fmt::format("{},{}\n", name, data[i].label);
        }
        const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
        write_text_file(manifest_path, manifest);
        fmt::print(io.out, "wrote {} images and {}\n", data.size(), manifest_path);
        return kExitOk;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fundus image screening: preprocessing, training, cross-validation and evaluation",
                 "fundus_screen"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "fundus_screen 0.1.0");

    PreprocessCmd preprocess_cmd;
    TrainCmd train_cmd;
    CvCmd cv_cmd;
    EvalCmd eval_cmd;
    PredictCmd predict_cmd;
    SynthCmd synth_cmd;

    auto* pre = app.add_subcommand("preprocess", "Crop, resize and color-normalize a directory of images");
    auto* tr = app.add_subcommand("train", "Train (or fine-tune with --init) a model");
    auto* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation with top-k selection");
    auto* ev = app.add_subcommand("eval", "Score a labelled manifest and report metrics");
    auto* pr = app.add_subcommand("predict", "Print the referable probability of images");
    auto* sy = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
    preprocess_cmd.attach(*pre);
    train_cmd.attach(*tr);
    cv_cmd.attach(*cv);
    eval_cmd.attach(*ev);
    predict_cmd.attach(*pr);
    synth_cmd.attach(*sy);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Io io{out, err};
    try {
        if (pre->parsed()) return preprocess_cmd.run(io);
        if (tr->parsed()) return train_cmd.run(io);
        if (cv->parsed()) return cv_cmd.run(io);
        if (ev->parsed()) return eval_cmd.run(io);
        if (pr->parsed()) return predict_cmd.run(io);
        if (sy->parsed()) return synth_cmd.run(io);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace fundus::cli
