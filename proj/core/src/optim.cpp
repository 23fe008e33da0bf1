#include "fundus/optim.hpp"

#include <cmath>

#include "fundus/error.hpp"

namespace fundus {

AdamState::AdamState(const ModelParams& params) {
    for (const auto& t : params.tensors) {
        m.emplace_back(t.value.shape());
        v.emplace_back(t.value.shape());
    }
}

void adam_step(ModelParams& params, const std::vector<NamedTensor>& grads, AdamState& state, double lr) {
    if (grads.size() != params.tensors.size() || state.m.size() != params.tensors.size() ||
        state.v.size() != params.tensors.size()) {
        throw ShapeError("adam", "parameter, gradient and moment counts differ");
    }
    for (std::size_t p = 0; p < grads.size(); ++p) {
        const auto& shape = params.tensors[p].value.shape();
        if (grads[p].value.shape() != shape || state.m[p].shape() != shape || state.v[p].shape() != shape) {
            throw ShapeError(params.tensors[p].name, "gradient or moment shape mismatch");
        }
        for (float g : grads[p].value.data()) {
            if (!std::isfinite(g)) throw TrainingError("non-finite gradient in '" + grads[p].name + "'");
        }
    }

    ++state.t;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < grads.size(); ++p) {
        auto theta = params.tensors[p].value.data();
        const auto g = grads[p].value.data();
        auto m = state.m[p].data();
        auto v = state.v[p].data();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = g[i];
            const double mi = b1 * m[i] + (1.0 - b1) * gi;
            const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double mhat = mi / c1;
            const double vhat = vi / c2;
            theta[i] = static_cast<float>(theta[i] - lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

double lr_at(double lr0, double gamma, std::uint64_t epoch) {
    double lr = lr0;
    for (std::uint64_t e = 0; e < epoch; ++e) lr *= gamma;
    return lr;
}

EarlyStopper::EarlyStopper(std::uint32_t patience) : patience_(patience) {
    if (patience == 0) throw ConfigError("patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
    if (val_loss < best_) {
        best_ = val_loss;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

}  // namespace fundus
