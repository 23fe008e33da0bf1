#pragma once

// Brute-force reference computations. These deliberately avoid the library's
// code paths (no shared kernels, no shared sorting) so they can check them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/metrics.hpp"

namespace oracle {

// Mirror-reflect until the index lands inside [0, n).
inline long reflect_walk(long i, long n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

// Direct (non-separable) 2-D Gaussian convolution with reflect-101 borders.
inline fundus::Channel direct_blur(const fundus::Channel& ch, double sigma) {
    const long r = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> k1;
    double s = 0.0;
    for (long i = -r; i <= r; ++i) {
        k1.push_back(std::exp(-double(i * i) / (2.0 * sigma * sigma)));
        s += k1.back();
    }
    for (auto& v : k1) v /= s;

    const long w = ch.width, h = ch.height;
    fundus::Channel out(ch.width, ch.height);
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long dy = -r; dy <= r; ++dy)
                for (long dx = -r; dx <= r; ++dx)
                    acc += k1[dy + r] * k1[dx + r] *
                           ch.data[reflect_walk(y + dy, h) * w + reflect_walk(x + dx, w)];
            out.data[y * w + x] = static_cast<float>(acc);
        }
    }
    return out;
}

// Pixel-wise amplification*(orig - blur) + offset, rounded half away from zero.
inline fundus::Image scalar_normalize(const fundus::Image& img, double sigma, double amp, double offset) {
    fundus::Image out(img.width(), img.height());
    for (int c = 0; c < 3; ++c) {
        fundus::Channel ch(img.width(), img.height());
        for (std::uint32_t y = 0; y < img.height(); ++y)
            for (std::uint32_t x = 0; x < img.width(); ++x) ch.at(x, y) = img.at(x, y, c);
        const auto blurred = direct_blur(ch, sigma);
        for (std::uint32_t y = 0; y < img.height(); ++y) {
            for (std::uint32_t x = 0; x < img.width(); ++x) {
                double v = amp * (double(img.at(x, y, c)) - double(blurred.at(x, y))) + offset;
                v = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
                out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return out;
}

// Mean over all positive/negative pairs of [p > n] + 0.5 [p == n].
inline double pairwise_auroc(const std::vector<fundus::ScoredSample>& s) {
    double wins = 0.0;
    std::size_t np = 0, nn = 0;
    for (const auto& a : s) (a.label ? np : nn)++;
    for (const auto& p : s) {
        if (!p.label) continue;
        for (const auto& n : s) {
            if (n.label) continue;
            if (p.score > n.score) wins += 1.0;
            else if (p.score == n.score) wins += 0.5;
        }
    }
    return wins / (double(np) * double(nn));
}

// Enumerate every distinct score as a threshold (descending), recount TP/FP
// from scratch at each, and accumulate delta-recall * precision.
inline double threshold_ap(const std::vector<fundus::ScoredSample>& s) {
    std::set<double, std::greater<>> thresholds;
    std::size_t np = 0;
    for (const auto& a : s) {
        thresholds.insert(a.score);
        np += a.label;
    }
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (double t : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (const auto& a : s)
            if (a.score >= t) (a.label ? tp : fp)++;
        if (tp != prev_tp) ap += (double(tp - prev_tp) / double(np)) * (double(tp) / double(tp + fp));
        prev_tp = tp;
    }
    return ap;
}

}  // namespace oracle
