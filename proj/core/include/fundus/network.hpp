#pragma once

// MiniNet: a small stride-2 conv stack with global-average-pooled taps feeding
// a two-layer head. The multilevel variant pools several stages and
// concatenates them; the plain variant pools only the last stage.
//
//   input [3,S,S] -> stage0 (stem) -> stage1 -> ... -> stageL-1
//                       |               |                 |
//                      GAP*            GAP*              GAP*     (* tapped stages)
//                       +-------- concat ---------------+
//                                      |
//                          fc1 -> ReLU -> fc2 -> logits
//
// Every stage is conv3x3 / stride 2 / pad 1 + ReLU.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fundus/image.hpp"
#include "fundus/imaging.hpp"
#include "fundus/kv.hpp"
#include "fundus/tensor.hpp"

namespace fundus {

enum class Variant { plain, multilevel };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view s);

struct ArchDescriptor {
    Variant variant = Variant::multilevel;
    std::uint32_t input_size = 64;
    std::vector<std::uint32_t> stage_channels{8, 16, 32, 64};
    // Only consulted for the multilevel variant.
    std::vector<std::uint32_t> tap_stages{1, 2, 3};
    std::uint32_t head_hidden = 32;
    std::uint32_t classes = 2;

    static ArchDescriptor plain();
    static ArchDescriptor multilevel();

    // Stages feeding the head: tap_stages for multilevel, the last stage for plain.
    std::vector<std::uint32_t> effective_taps() const;
    // Width of the pooled concat (sum of tapped stage channels).
    std::uint32_t feature_width() const;
    // Spatial side of stage i's output.
    std::uint32_t stage_size(std::size_t i) const;

    void validate() const;
    friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

KvBlock to_kv(const ArchDescriptor& arch);
bool set_field(ArchDescriptor& arch, std::string_view key, std::string_view value);
ArchDescriptor arch_from_kv(const KvBlock& block);

// Learnable weights plus the descriptors needed to rebuild the model.
struct ModelParams {
    ArchDescriptor arch;
    std::vector<NamedTensor> tensors;
    PreprocessConfig preprocess;

    Tensor& get(std::string_view name);
    const Tensor& get(std::string_view name) const;
    // Checks names and shapes against arch; throws ShapeError.
    void validate() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Parameter names and shapes in canonical order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const ArchDescriptor& arch);

ModelParams zero_params(const ArchDescriptor& arch);
// He-normal (fan-in) weights, zero biases, drawn from `seed`.
ModelParams init_params(const ArchDescriptor& arch, std::uint64_t seed);

std::uint64_t params_fingerprint(const ModelParams& params) noexcept;

// Per-sample activations kept for backward. Storage type is float for
// training; the gradient checker runs the same code in double.
template <class T>
struct SampleTrace {
    std::vector<T> input;
    std::vector<std::vector<T>> stages;  // post-ReLU output of each stage
    std::vector<T> features;             // pooled concat
    std::vector<T> hidden;               // post-ReLU fc1
    std::vector<T> logits;
};

struct ForwardCache {
    ArchDescriptor arch;
    std::uint64_t fingerprint = 0;
    std::vector<SampleTrace<float>> samples;
};

struct ForwardResult {
    Tensor logits;  // [N, classes]
    ForwardCache cache;
};

// batch: [N, 3, S, S] with S = arch.input_size.
ForwardResult forward(const ModelParams& params, const Tensor& batch);

struct LossResult {
    double loss = 0.0;
    Tensor dlogits;
};

// Mean softmax cross-entropy with log-sum-exp; dlogits = (softmax - onehot) / N.
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

// Gradients in the same order and shapes as params.tensors.
std::vector<NamedTensor> backward(const ModelParams& params, const ForwardCache& cache,
                                  const Tensor& dlogits);

// Mean cross-entropy evaluated with double activations; used by finite differences.
double loss_f64(const ModelParams& params, const Tensor& batch, std::span<const int> labels);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

// Compares backward() against central differences of loss_f64 for every
// scalar parameter of a randomly initialised model on a random batch.
// Relative error is |a - n| / max(|a|, |n|, 1e-6). Throws ParameterError for eps <= 0.
GradCheckResult grad_check(const ArchDescriptor& arch, std::uint64_t seed, double eps);

// Bytes / 255 laid out as [3, S, S].
void image_to_chw(const Image& img, std::span<float> out);
Tensor images_to_batch(std::span<const Image* const> images);

std::vector<double> softmax(std::span<const float> logits);

// Probability of class 1. The image must already be arch.input_size square.
double predict(const ModelParams& params, const Image& img);

}  // namespace fundus
