#pragma once

#include <string>
#include <string_view>

#include "fundus/imaging.hpp"
#include "fundus/kv.hpp"
#include "fundus/network.hpp"
#include "fundus/train.hpp"

namespace fundus::cli {

// Every tunable of a run in one place. Layers are applied in order
// defaults -> config file -> command-line flags, all through apply().
struct RunConfig {
    PreprocessConfig preprocess;
    ArchDescriptor arch;
    TrainConfig train;  // carries the augmentation policy
    double threshold = 0.5;

    // Throws ConfigError for keys no component recognises.
    void apply(std::string_view key, std::string_view value);
    void apply(const KvBlock& block);
    void validate() const;

    KvBlock to_kv() const;
};

void apply_config_file(RunConfig& cfg, const std::string& path);

}  // namespace fundus::cli
