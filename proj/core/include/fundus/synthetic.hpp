#pragma once

#include <cstdint>
#include <string>

#include "fundus/train.hpp"

namespace fundus {

// Toy screening tasks used for end-to-end checks. Every image is a dim,
// slightly red background with per-pixel Gaussian noise. Labels alternate
// 0, 1, 0, 1, ... so the classes are balanced.
enum class SyntheticTask {
    blob,  // class 1 carries a bright Gaussian blob at a random position
    ring,  // class 1 carries a bright thin ring at a random position
};

struct SyntheticOptions {
    std::uint32_t size = 64;
    double background = 60.0;
    double noise_std = 10.0;
    double amplitude = 140.0;
    double blob_sigma_min = 3.0;
    double blob_sigma_max = 6.0;
    double ring_radius_min = 7.0;
    double ring_radius_max = 12.0;
    double ring_width = 1.5;
};

Dataset make_synthetic(SyntheticTask task, std::size_t count, std::uint64_t seed,
                       const std::string& id_prefix, const SyntheticOptions& opts = {});

}  // namespace fundus
