#include "fundus/synthetic.hpp"

#include <cmath>

#include "fundus/imaging.hpp"
#include "fundus/rng.hpp"

namespace fundus {

Dataset make_synthetic(SyntheticTask task, std::size_t count, std::uint64_t seed, const std::string& id_prefix,
                       const SyntheticOptions& opts) {
    static constexpr double tint[3] = {1.25, 0.85, 0.6};
    const std::uint32_t n = opts.size;
    Dataset data;
    data.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng = rng_for(seed, i, 0x73796e7468);
        const int label = static_cast<int>(i % 2);
        const double margin = n / 8.0;
        const double cx = rng.uniform(margin, n - 1 - margin);
        const double cy = rng.uniform(margin, n - 1 - margin);
        const double blob_sigma = rng.uniform(opts.blob_sigma_min, opts.blob_sigma_max);
        const double radius = rng.uniform(opts.ring_radius_min, opts.ring_radius_max);

        Image img(n, n);
        for (std::uint32_t y = 0; y < n; ++y) {
            for (std::uint32_t x = 0; x < n; ++x) {
                double signal = 0.0;
                if (label == 1) {
                    const double dx = x - cx, dy = y - cy;
                    const double r2 = dx * dx + dy * dy;
                    if (task == SyntheticTask::blob) {
                        signal = opts.amplitude * std::exp(-r2 / (2.0 * blob_sigma * blob_sigma));
                    } else {
                        const double d = std::sqrt(r2) - radius;
                        signal = opts.amplitude * std::exp(-d * d / (2.0 * opts.ring_width * opts.ring_width));
                    }
                }
                for (int c = 0; c < 3; ++c) {
                    const double v = opts.background * tint[c] + signal + opts.noise_std * rng.normal();
                    img.at(x, y, c) = quantize(v);
                }
            }
        }
        data.push_back({id_prefix + std::to_string(i), std::move(img), label});
    }
    return data;
}

}  // namespace fundus
