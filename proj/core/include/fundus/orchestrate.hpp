#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fundus/augment.hpp"
#include "fundus/imaging.hpp"
#include "fundus/network.hpp"
#include "fundus/train.hpp"

namespace fundus {

struct ManifestEntry {
    std::string path;  // resolved against the manifest's directory
    int label = 0;
    std::string id;    // path as written; "<path>#<line>" for repeated paths
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::string source;
    std::vector<std::string> warnings;
};

struct ManifestOptions {
    // Map a `path,grade` manifest through binarize_grade; without it grades must already be 0/1.
    bool binarize = false;
    int referable_grade = 3;
};

// Lowest grade counted as referable is `cut` (3 = severe NPDR, 4 = PDR).
int binarize_grade(int grade, int cut = 3);

// CSV with header `path,label` or `path,grade`. Errors name the line number.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                        const ManifestOptions& opts = {}, std::string source = "<memory>");
Manifest load_manifest(const std::string& path, const ManifestOptions& opts = {});

// Preprocess (when enabled) then bilinear-resize to the network input size if needed.
Image prepare_input(const Image& img, const PreprocessConfig& cfg, std::uint32_t input_size);

// Reads, prepares and labels every manifest entry, in manifest order.
Dataset load_dataset(const Manifest& manifest, const PreprocessConfig& cfg, std::uint32_t input_size);

struct FoldPlan {
    std::uint32_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> ids;
    std::vector<std::uint32_t> assignments;  // parallel to ids

    std::uint32_t fold_of(std::string_view id) const;
    friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

// Per class (manifest order), shuffle with the seed, then deal round-robin.
// Class 1 continues dealing where class 0 stopped so fold totals stay balanced.
FoldPlan stratified_kfold(std::span<const std::string> ids, std::span<const int> labels, std::uint32_t k,
                          std::uint64_t seed);
FoldPlan stratified_kfold(const Manifest& manifest, std::uint32_t k, std::uint64_t seed);
FoldPlan stratified_kfold(const Dataset& data, std::uint32_t k, std::uint64_t seed);

struct CvFold {
    std::uint32_t fold = 0;
    std::string model_path;
    double val_auroc = 0.0;
    double val_auprc = 0.0;
    std::uint32_t epochs_run = 0;
    std::uint32_t best_epoch = 0;
};

struct CvResult {
    std::uint32_t k = 0;
    std::uint64_t seed = 0;
    std::vector<CvFold> folds;
    std::vector<std::uint32_t> selected;
};

struct CvOptions {
    std::uint32_t k = 5;
    std::uint32_t top_k = 3;
    std::filesystem::path out_dir;
};

// Fold i validates on plan fold i and trains on the rest with seed cfg.seed + i.
// Writes fold_<i>.mlnn and cv_result.json into out_dir.
CvResult run_cv(const Dataset& data, const ArchDescriptor& arch, const TrainConfig& cfg, const CvOptions& opts,
                const PreprocessConfig& snapshot = {}, const EpochCallback& on_epoch = {});

// Fold indices by validation AUROC descending, lower fold index first on ties.
std::vector<std::uint32_t> select_top_k(const CvResult& cv, std::uint32_t top_k);

std::string cv_result_json(const CvResult& cv);

// Flat mean of predict() over every (model, view) pair; views come from
// tta_set(*tta) when given, otherwise the identity only.
double ensemble_predict(std::span<const ModelParams> models, const Image& img, const AugmentPolicy* tta = nullptr);

// Trains from `base` with its weights as the starting point; the result records
// base's hash. Zero epochs returns base untouched.
TrainResult fine_tune(const ModelParams& base, const ArchDescriptor& arch, const Dataset& train_set,
                      const Dataset& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace fundus
