#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fundus/augment.hpp"
#include "fundus/image.hpp"
#include "fundus/kv.hpp"
#include "fundus/metrics.hpp"
#include "fundus/network.hpp"

namespace fundus {

struct Sample {
    std::string id;
    Image image;  // already at the model input size
    int label = 0;
};

using Dataset = std::vector<Sample>;

struct TrainConfig {
    std::uint32_t epochs = 100;
    double lr0 = 1e-4;
    double gamma = 0.95;
    std::uint32_t batch_size = 16;
    std::uint32_t patience = 10;
    std::uint64_t seed = 42;
    AugmentPolicy augment;

    void validate() const;
};

KvBlock to_kv(const TrainConfig& cfg);  // augmentation keys excluded
bool set_field(TrainConfig& cfg, std::string_view key, std::string_view value);

struct EpochRecord {
    std::uint32_t epoch = 0;  // 0-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_auroc = 0.0;   // NaN when the validation set has one class
    double lr = 0.0;
};

struct TrainResult {
    ModelParams best;
    std::vector<EpochRecord> history;
    std::uint32_t best_epoch = 0;
    bool stopped_early = false;
    std::optional<std::string> base_hash;  // set when fine-tuned from another model

    std::uint32_t epochs_run() const noexcept { return static_cast<std::uint32_t>(history.size()); }
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam + exponential decay with early stopping on validation loss. Training
// images are augmented per (seed, index, epoch); the epoch order is shuffled
// from the seed. When `init` is given its weights (and preprocess snapshot)
// are the starting point.
TrainResult train(const Dataset& train_set, const Dataset& val_set, const ArchDescriptor& arch,
                  const TrainConfig& cfg, const ModelParams* init = nullptr,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
    double loss = 0.0;
    std::vector<ScoredSample> scores;
};

// Mean cross-entropy and class-1 probabilities without augmentation.
Evaluation evaluate(const ModelParams& params, const Dataset& data);

std::string history_json(const TrainResult& result, const ArchDescriptor& arch, const TrainConfig& cfg);

}  // namespace fundus
