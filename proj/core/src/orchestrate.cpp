#include "fundus/orchestrate.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>

#include <json.hpp>

#include "fundus/error.hpp"
#include "fundus/model_io.hpp"
#include "fundus/parallel.hpp"
#include "fundus/rng.hpp"

namespace fundus {

namespace fs = std::filesystem;

int binarize_grade(int grade, int cut) {
    if (grade < 0 || grade > 4) throw ConfigError("grade " + std::to_string(grade) + " outside 0..4");
    return grade >= cut ? 1 : 0;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

}  // namespace

Manifest parse_manifest(std::string_view text, const fs::path& base_dir, const ManifestOptions& opts,
                        std::string source) {
    Manifest m;
    m.source = std::move(source);
    const std::string where = m.source + ":";
    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t line_no = 0;
    bool graded = false, have_header = false;

    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty()) continue;

        if (!have_header) {
            if (line == "path,label") graded = false;
            else if (line == "path,grade") graded = true;
            else throw ConfigError(where + std::to_string(line_no) + ": expected header 'path,label' or 'path,grade'");
            have_header = true;
            continue;
        }

        const auto comma = line.rfind(',');
        if (comma == std::string_view::npos) {
            throw ConfigError(where + std::to_string(line_no) + ": expected two columns");
        }
        const auto path = trim(line.substr(0, comma));
        const auto value = trim(line.substr(comma + 1));
        if (path.empty()) throw ConfigError(where + std::to_string(line_no) + ": empty path");
        int v = 0;
        const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
            throw ConfigError(where + std::to_string(line_no) + ": label '" + std::string(value) + "' is not an integer");
        }

        int label = v;
        if (graded && opts.binarize) {
            if (v < 0 || v > 4) {
                throw ConfigError(where + std::to_string(line_no) + ": grade " + std::to_string(v) + " outside 0..4");
            }
            label = binarize_grade(v, opts.referable_grade);
        } else if (v != 0 && v != 1) {
            throw ConfigError(where + std::to_string(line_no) + ": non-binary label '" + std::string(value) +
                              "' in binary mode");
        }

        ManifestEntry e;
        const fs::path p(std::string{path});
        e.path = (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
        e.label = label;
        e.id = std::string(path);
        if (auto it = seen.find(e.id); it != seen.end()) {
            e.id += "#" + std::to_string(line_no);
            m.warnings.push_back(where + std::to_string(line_no) + ": duplicate path '" + std::string(path) +
                                 "' (first on line " + std::to_string(it->second) + "), id set to '" + e.id + "'");
        } else {
            seen.emplace(e.id, line_no);
        }
        m.entries.push_back(std::move(e));
    }
    if (!have_header) throw ConfigError(where + " empty manifest");
    return m;
}

Manifest load_manifest(const std::string& path, const ManifestOptions& opts) {
    const std::string text = read_text_file(path);
    return parse_manifest(text, fs::path(path).parent_path(), opts, path);
}

Image prepare_input(const Image& img, const PreprocessConfig& cfg, std::uint32_t input_size) {
    Image out = preprocess(img, cfg);
    if (out.width() != input_size || out.height() != input_size) out = resize_bilinear(out, input_size, input_size);
    return out;
}

Dataset load_dataset(const Manifest& manifest, const PreprocessConfig& cfg, std::uint32_t input_size) {
    Dataset data(manifest.entries.size());
    parallel_for(data.size(), [&](std::size_t i) {
        const auto& e = manifest.entries[i];
        data[i] = {e.id, prepare_input(read_image(e.path), cfg, input_size), e.label};
    });
    return data;
}

std::uint32_t FoldPlan::fold_of(std::string_view id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] == id) return assignments[i];
    throw ConfigError("id '" + std::string(id) + "' not in fold plan");
}

FoldPlan stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, std::uint32_t k,
                          std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be >= 2");
    if (ids.size() != labels.size()) throw ConfigError("ids and labels differ in length");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.ids.assign(ids.begin(), ids.end());
    plan.assignments.assign(ids.size(), 0);

    std::size_t next_fold = 0;
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != 0 && labels[i] != 1) throw ConfigError("labels must be binary");
            if (labels[i] == cls) members.push_back(i);
        }
        if (members.size() < k) {
            throw ConfigError("class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                              " samples, fewer than " + std::to_string(k) + " folds");
        }
        RngStream rng = rng_for(seed, static_cast<std::uint64_t>(cls), 0);
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
        for (auto idx : members) {
            plan.assignments[idx] = static_cast<std::uint32_t>(next_fold);
            next_fold = (next_fold + 1) % k;
        }
    }
    return plan;
}

FoldPlan stratified_kfold(const Manifest& manifest, std::uint32_t k, std::uint64_t seed) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& e : manifest.entries) {
        ids.push_back(e.id);
        labels.push_back(e.label);
    }
    return stratified_kfold(ids, labels, k, seed);
}

FoldPlan stratified_kfold(const Dataset& data, std::uint32_t k, std::uint64_t seed) {
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& s : data) {
        ids.push_back(s.id);
        labels.push_back(s.label);
    }
    return stratified_kfold(ids, labels, k, seed);
}

CvResult run_cv(const Dataset& data, const ArchDescriptor& arch, const TrainConfig& cfg, const CvOptions& opts,
                const PreprocessConfig& snapshot, const EpochCallback& on_epoch) {
    if (opts.top_k == 0 || opts.top_k > opts.k) throw ConfigError("top_k must lie in [1, folds]");
    const FoldPlan plan = stratified_kfold(data, opts.k, cfg.seed);
    fs::create_directories(opts.out_dir);

    CvResult cv;
    cv.k = opts.k;
    cv.seed = cfg.seed;
    for (std::uint32_t fold = 0; fold < opts.k; ++fold) {
        Dataset train_set, val_set;
        for (std::size_t i = 0; i < data.size(); ++i) (plan.assignments[i] == fold ? val_set : train_set).push_back(data[i]);

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed + fold;
        TrainResult tr;
        try {
            tr = train(train_set, val_set, arch, fold_cfg, nullptr, on_epoch);
        } catch (const Error& e) {
            throw TrainingError("fold " + std::to_string(fold) + ": " + e.what());
        }
        tr.best.preprocess = snapshot;

        CvFold f;
        f.fold = fold;
        f.model_path = (opts.out_dir / ("fold_" + std::to_string(fold) + ".mlnn")).string();
        save_model(tr.best, f.model_path);
        const auto ev = evaluate(tr.best, val_set);
        f.val_auroc = auroc(ev.scores);
        f.val_auprc = auprc(ev.scores);
        f.epochs_run = tr.epochs_run();
        f.best_epoch = tr.best_epoch;
        cv.folds.push_back(std::move(f));
    }
    cv.selected = select_top_k(cv, opts.top_k);
    write_text_file((opts.out_dir / "cv_result.json").string(), cv_result_json(cv));
    return cv;
}

std::vector<std::uint32_t> select_top_k(const CvResult& cv, std::uint32_t top_k) {
    if (top_k > cv.folds.size()) throw ConfigError("top_k exceeds the number of folds");
    std::vector<const CvFold*> order;
    for (const auto& f : cv.folds) order.push_back(&f);
    std::stable_sort(order.begin(), order.end(), [](const CvFold* a, const CvFold* b) {
        if (a->val_auroc != b->val_auroc) return a->val_auroc > b->val_auroc;
        return a->fold < b->fold;
    });
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < top_k; ++i) out.push_back(order[i]->fold);
    return out;
}

std::string cv_result_json(const CvResult& cv) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["k"] = cv.k;
    j["seed"] = cv.seed;
    ordered_json folds = ordered_json::array();
    for (const auto& f : cv.folds) {
        ordered_json row;
        row["fold"] = f.fold;
        row["model"] = f.model_path;
        row["val_auroc"] = f.val_auroc;
        row["val_auprc"] = f.val_auprc;
        row["epochs_run"] = f.epochs_run;
        folds.push_back(std::move(row));
    }
    j["folds"] = std::move(folds);
    j["selected"] = cv.selected;
    return j.dump(2) + "\n";
}

double ensemble_predict(std::span<const ModelParams> models, const Image& img, const AugmentPolicy* tta) {
    if (models.empty()) throw ConfigError("ensemble needs at least one model");
    for (const auto& m : models) {
        if (m.arch.input_size != models[0].arch.input_size) {
            throw ConfigError("ensemble members disagree on input size");
        }
    }
    const auto views = tta ? tta_set(*tta) : std::vector<TransformSpec>{TransformSpec{}};
    std::vector<Image> transformed;
    for (const auto& v : views) transformed.push_back(apply_transform(img, v));

    double sum = 0.0;
    for (const auto& m : models)
        for (const auto& view : transformed) sum += predict(m, view);
    return sum / static_cast<double>(models.size() * transformed.size());
}

TrainResult fine_tune(const ModelParams& base, const ArchDescriptor& arch, const Dataset& train_set,
                      const Dataset& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    if (!(base.arch == arch)) throw ConfigError("base model architecture does not match the requested one");
    const std::string hash = model_hash(base);
    TrainResult res;
    if (cfg.epochs == 0) {
        res.best = base;
    } else {
        res = train(train_set, val_set, arch, cfg, &base, on_epoch);
    }
    res.base_hash = hash;
    return res;
}

}  // namespace fundus
