#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fundus/network.hpp"
#include "fundus/tensor.hpp"

namespace fundus {

// Moments mirror the parameter tensors; arithmetic is done in double.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const ModelParams& params);
};

// One bias-corrected Adam update. Throws TrainingError before touching
// anything if a gradient is non-finite, ShapeError on shape mismatch.
void adam_step(ModelParams& params, const std::vector<NamedTensor>& grads, AdamState& state, double lr);

// lr0 * gamma^epoch, built by repeated multiplication so that
// lr_at(e + 1) == gamma * lr_at(e) holds exactly.
double lr_at(double lr0, double gamma, std::uint64_t epoch);

// Tracks the best validation loss and the number of epochs without improvement.
class EarlyStopper {
public:
    explicit EarlyStopper(std::uint32_t patience);

    // Returns true when val_loss is a strict improvement.
    bool observe(double val_loss);
    bool should_stop() const noexcept { return since_best_ >= patience_; }
    double best() const noexcept { return best_; }
    std::uint32_t since_best() const noexcept { return since_best_; }

private:
    std::uint32_t patience_;
    std::uint32_t since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace fundus
