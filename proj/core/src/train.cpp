#include "fundus/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "fundus/error.hpp"
#include "fundus/optim.hpp"
#include "fundus/rng.hpp"

namespace fundus {

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ConfigError("lr must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (patience == 0) throw ConfigError("patience must be >= 1");
    augment.validate();
}

KvBlock to_kv(const TrainConfig& cfg) {
    return {
        {"epochs", std::to_string(cfg.epochs)},
        {"lr", format_double(cfg.lr0)},
        {"gamma", format_double(cfg.gamma)},
        {"batch_size", std::to_string(cfg.batch_size)},
        {"patience", std::to_string(cfg.patience)},
        {"seed", std::to_string(cfg.seed)},
    };
}

bool set_field(TrainConfig& cfg, std::string_view key, std::string_view value) {
    auto u32 = [&] {
        const auto v = parse_u64(key, value);
        if (v > UINT32_MAX) throw ConfigError("value for '" + std::string(key) + "' is too large");
        return static_cast<std::uint32_t>(v);
    };
    if (key == "epochs") cfg.epochs = u32();
    else if (key == "lr") cfg.lr0 = parse_double(key, value);
    else if (key == "gamma") cfg.gamma = parse_double(key, value);
    else if (key == "batch_size") cfg.batch_size = u32();
    else if (key == "patience") cfg.patience = u32();
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else return set_field(cfg.augment, key, value);
    return true;
}

namespace {

constexpr std::uint64_t kShuffleStream = UINT64_MAX;

void check_dataset(const Dataset& data, const ArchDescriptor& arch, const char* which) {
    for (const auto& s : data) {
        if (s.image.width() != arch.input_size || s.image.height() != arch.input_size) {
            throw ShapeError("input", std::string(which) + " sample '" + s.id + "' is " +
                                          std::to_string(s.image.width()) + "x" + std::to_string(s.image.height()) +
                                          ", model expects " + std::to_string(arch.input_size));
        }
        if (s.label != 0 && s.label != 1) throw ConfigError("sample '" + s.id + "' has a non-binary label");
    }
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream rng = rng_for(seed, kShuffleStream, epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

}  // namespace

Evaluation evaluate(const ModelParams& params, const Dataset& data) {
    Evaluation ev;
    if (data.empty()) return ev;
    constexpr std::size_t kChunk = 32;
    double total = 0.0;
    for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
        const std::size_t end = std::min(data.size(), begin + kChunk);
        std::vector<const Image*> imgs;
        std::vector<int> labels;
        for (std::size_t i = begin; i < end; ++i) {
            imgs.push_back(&data[i].image);
            labels.push_back(data[i].label);
        }
        const auto fwd = forward(params, images_to_batch(imgs));
        total += cross_entropy(fwd.logits, labels).loss * static_cast<double>(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            const auto p = softmax(fwd.logits.data().subspan((i - begin) * 2, 2));
            ev.scores.push_back({p[1], data[i].label, data[i].id});
        }
    }
    ev.loss = total / static_cast<double>(data.size());
    return ev;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const ArchDescriptor& arch,
                  const TrainConfig& cfg, const ModelParams* init, const EpochCallback& on_epoch) {
    cfg.validate();
    arch.validate();
    if (train_set.empty()) throw ConfigError("training set is empty");
    if (val_set.empty()) throw ConfigError("validation set is empty");
    check_dataset(train_set, arch, "training");
    check_dataset(val_set, arch, "validation");
    std::size_t positives = 0;
    for (const auto& s : train_set) positives += s.label;
    if (positives == 0 || positives == train_set.size()) {
        throw ConfigError("training set must contain both classes");
    }

    ModelParams params;
    if (init) {
        if (!(init->arch == arch)) throw ConfigError("initial model architecture does not match the requested one");
        params = *init;
        params.validate();
    } else {
        params = init_params(arch, cfg.seed);
    }

    TrainResult result;
    result.best = params;
    AdamState adam(params);
    EarlyStopper stopper(cfg.patience);

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg.lr0, cfg.gamma, epoch);
        const auto order = shuffled_order(train_set.size(), cfg.seed, epoch);
        double epoch_loss = 0.0;

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<Image> augmented;
            std::vector<int> labels;
            augmented.reserve(end - begin);
            for (std::size_t k = begin; k < end; ++k) {
                const std::size_t idx = order[k];
                RngStream rng = rng_for(cfg.seed, idx, epoch);
                augmented.push_back(apply_transform(train_set[idx].image, sample_transform(rng, cfg.augment)));
                labels.push_back(train_set[idx].label);
            }
            std::vector<const Image*> ptrs;
            for (const auto& img : augmented) ptrs.push_back(&img);

            const auto fwd = forward(params, images_to_batch(ptrs));
            const auto ce = cross_entropy(fwd.logits, labels);
            if (!std::isfinite(ce.loss)) throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
            const auto grads = backward(params, fwd.cache, ce.dlogits);
            adam_step(params, grads, adam, lr);
            epoch_loss += ce.loss * static_cast<double>(end - begin);
        }

        const Evaluation val = evaluate(params, val_set);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(train_set.size());
        rec.val_loss = val.loss;
        rec.lr = lr;
        try {
            rec.val_auroc = auroc(val.scores);
        } catch (const MetricError&) {
            rec.val_auroc = std::numeric_limits<double>::quiet_NaN();
        }
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (stopper.observe(val.loss)) {
            result.best = params;
            result.best_epoch = epoch;
        } else if (stopper.should_stop()) {
            result.stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    return result;
}

std::string history_json(const TrainResult& result, const ArchDescriptor& arch, const TrainConfig& cfg) {
    using nlohmann::ordered_json;
    auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
    ordered_json j;
    j["arch"] = std::string(to_string(arch.variant));
    j["input_size"] = arch.input_size;
    j["epochs"] = cfg.epochs;
    j["lr"] = cfg.lr0;
    j["gamma"] = cfg.gamma;
    j["batch_size"] = cfg.batch_size;
    j["patience"] = cfg.patience;
    j["seed"] = cfg.seed;
    j["epochs_run"] = result.epochs_run();
    j["best_epoch"] = result.best_epoch;
    j["stopped_early"] = result.stopped_early;
    j["init_hash"] = result.base_hash ? ordered_json(*result.base_hash) : ordered_json(nullptr);
    ordered_json epochs = ordered_json::array();
    for (const auto& e : result.history) {
        ordered_json row;
        row["epoch"] = e.epoch;
        row["train_loss"] = num(e.train_loss);
        row["val_loss"] = num(e.val_loss);
        row["val_auroc"] = num(e.val_auroc);
        row["lr"] = e.lr;
        epochs.push_back(std::move(row));
    }
    j["history"] = std::move(epochs);
    return j.dump(2) + "\n";
}

}  // namespace fundus
