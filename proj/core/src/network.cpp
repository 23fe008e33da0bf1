#include "fundus/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fundus/error.hpp"
#include "fundus/parallel.hpp"
#include "fundus/rng.hpp"

namespace fundus {

std::string_view to_string(Variant v) noexcept { return v == Variant::plain ? "plain" : "multilevel"; }

Variant parse_variant(std::string_view s) {
    if (s == "plain") return Variant::plain;
    if (s == "multilevel") return Variant::multilevel;
    throw ConfigError("unknown architecture variant '" + std::string(s) + "' (expected plain|multilevel)");
}

ArchDescriptor ArchDescriptor::plain() {
    ArchDescriptor a;
    a.variant = Variant::plain;
    a.tap_stages = {3};
    return a;
}

ArchDescriptor ArchDescriptor::multilevel() { return ArchDescriptor{}; }

std::vector<std::uint32_t> ArchDescriptor::effective_taps() const {
    if (variant == Variant::plain) {
        return {static_cast<std::uint32_t>(stage_channels.empty() ? 0 : stage_channels.size() - 1)};
    }
    return tap_stages;
}

std::uint32_t ArchDescriptor::feature_width() const {
    std::uint32_t w = 0;
    for (auto s : effective_taps()) w += stage_channels.at(s);
    return w;
}

std::uint32_t ArchDescriptor::stage_size(std::size_t i) const {
    std::uint32_t s = input_size;
    for (std::size_t k = 0; k <= i; ++k) s = (s + 1) / 2;
    return s;
}

void ArchDescriptor::validate() const {
    if (input_size == 0) throw ConfigError("input_size must be >= 1");
    if (stage_channels.empty()) throw ConfigError("stage_channels must list at least one stage");
    for (auto c : stage_channels)
        if (c == 0) throw ConfigError("stage_channels entries must be >= 1");
    if (head_hidden == 0) throw ConfigError("head_hidden must be >= 1");
    if (classes != 2) throw ConfigError("classes must be 2");
    if (variant == Variant::multilevel) {
        if (tap_stages.empty()) throw ConfigError("multilevel arch needs at least one tap stage");
        for (std::size_t i = 0; i < tap_stages.size(); ++i) {
            if (tap_stages[i] >= stage_channels.size()) {
                throw ConfigError("tap stage " + std::to_string(tap_stages[i]) + " out of range");
            }
            if (i && tap_stages[i] <= tap_stages[i - 1]) {
                throw ConfigError("tap_stages must be strictly increasing");
            }
        }
    }
}

KvBlock to_kv(const ArchDescriptor& a) {
    return {
        {"arch", std::string(to_string(a.variant))},
        {"input_size", std::to_string(a.input_size)},
        {"stage_channels", format_u32_list(a.stage_channels)},
        {"tap_stages", format_u32_list(a.tap_stages)},
        {"head_hidden", std::to_string(a.head_hidden)},
        {"classes", std::to_string(a.classes)},
    };
}

bool set_field(ArchDescriptor& a, std::string_view key, std::string_view value) {
    auto u32 = [&] {
        const auto v = parse_u64(key, value);
        if (v > UINT32_MAX) throw ConfigError("value for '" + std::string(key) + "' is too large");
        return static_cast<std::uint32_t>(v);
    };
    if (key == "arch") a.variant = parse_variant(value);
    else if (key == "input_size") a.input_size = u32();
    else if (key == "stage_channels") a.stage_channels = parse_u32_list(key, value);
    else if (key == "tap_stages") a.tap_stages = parse_u32_list(key, value);
    else if (key == "head_hidden") a.head_hidden = u32();
    else if (key == "classes") a.classes = u32();
    else return false;
    return true;
}

ArchDescriptor arch_from_kv(const KvBlock& block) {
    ArchDescriptor a;
    for (const auto& [key, value] : block) {
        if (!set_field(a, key, value)) throw ConfigError("unknown architecture key '" + key + "'");
    }
    a.validate();
    return a;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(const ArchDescriptor& arch) {
    arch.validate();
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    std::size_t cin = 3;
    for (std::size_t i = 0; i < arch.stage_channels.size(); ++i) {
        const std::size_t cout = arch.stage_channels[i];
        const std::string base = "stage" + std::to_string(i);
        out.push_back({base + ".weight", {cout, cin, 3, 3}});
        out.push_back({base + ".bias", {cout}});
        cin = cout;
    }
    out.push_back({"head.fc1.weight", {arch.head_hidden, arch.feature_width()}});
    out.push_back({"head.fc1.bias", {arch.head_hidden}});
    out.push_back({"head.fc2.weight", {arch.classes, arch.head_hidden}});
    out.push_back({"head.fc2.bias", {arch.classes}});
    return out;
}

Tensor& ModelParams::get(std::string_view name) {
    for (auto& t : tensors)
        if (t.name == name) return t.value;
    throw ShapeError(std::string(name), "no such parameter");
}

const Tensor& ModelParams::get(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t.value;
    throw ShapeError(std::string(name), "no such parameter");
}

void ModelParams::validate() const {
    const auto layout = parameter_layout(arch);
    if (tensors.size() != layout.size()) {
        throw ShapeError("model", "expected " + std::to_string(layout.size()) + " tensors, found " +
                                      std::to_string(tensors.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (tensors[i].name != layout[i].first) {
            throw ShapeError(layout[i].first, "found tensor '" + tensors[i].name + "' in its slot");
        }
        if (tensors[i].value.shape() != layout[i].second) {
            throw ShapeError(layout[i].first, "shape " + shape_string(tensors[i].value.shape()) +
                                                  " does not match " + shape_string(layout[i].second));
        }
    }
}

ModelParams zero_params(const ArchDescriptor& arch) {
    ModelParams p;
    p.arch = arch;
    for (auto& [name, shape] : parameter_layout(arch)) p.tensors.push_back({name, Tensor(shape)});
    return p;
}

ModelParams init_params(const ArchDescriptor& arch, std::uint64_t seed) {
    ModelParams p = zero_params(arch);
    RngStream rng = rng_for(seed, UINT64_MAX - 1, 0);
    for (auto& [name, t] : p.tensors) {
        if (t.rank() < 2) continue;  // biases stay zero
        const std::size_t fan_in = t.size() / t.dim(0);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (auto& v : t.data()) v = static_cast<float>(stddev * rng.normal());
    }
    return p;
}

std::uint64_t params_fingerprint(const ModelParams& params) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : params.tensors) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(t.value.raw());
        for (std::size_t i = 0; i < t.value.size() * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

namespace {

struct StageGeom {
    std::size_t cin, cout, in_size, out_size;
};

struct Geometry {
    std::vector<StageGeom> stages;
    std::vector<std::uint32_t> taps;
    std::size_t features, hidden, classes;
};

Geometry geometry(const ArchDescriptor& arch) {
    Geometry g;
    std::size_t cin = 3, size = arch.input_size;
    for (auto c : arch.stage_channels) {
        const std::size_t out = (size + 1) / 2;
        g.stages.push_back({cin, c, size, out});
        cin = c;
        size = out;
    }
    g.taps = arch.effective_taps();
    g.features = arch.feature_width();
    g.hidden = arch.head_hidden;
    g.classes = arch.classes;
    return g;
}

// Raw pointers into the parameter tensors in canonical order; W is float for
// the training path and double for finite-difference evaluation.
template <class W>
struct Weights {
    std::vector<const W*> stage_w, stage_b;
    const W *fc1_w, *fc1_b, *fc2_w, *fc2_b;
};

template <class W>
Weights<W> bind_weights(const std::vector<const W*>& ptrs, std::size_t stages) {
    Weights<W> w;
    for (std::size_t i = 0; i < stages; ++i) {
        w.stage_w.push_back(ptrs[2 * i]);
        w.stage_b.push_back(ptrs[2 * i + 1]);
    }
    w.fc1_w = ptrs[2 * stages];
    w.fc1_b = ptrs[2 * stages + 1];
    w.fc2_w = ptrs[2 * stages + 2];
    w.fc2_b = ptrs[2 * stages + 3];
    return w;
}

Weights<float> bind_weights(const ModelParams& p) {
    std::vector<const float*> ptrs;
    for (const auto& t : p.tensors) ptrs.push_back(t.value.raw());
    return bind_weights(ptrs, p.arch.stage_channels.size());
}

template <class T, class W>
void conv_relu_forward(const StageGeom& g, const T* in, const W* w, const W* b, T* out) {
    const std::size_t isz = g.in_size, osz = g.out_size, plane = osz * osz;
    std::vector<double> acc(plane);
    for (std::size_t o = 0; o < g.cout; ++o) {
        std::fill(acc.begin(), acc.end(), static_cast<double>(b[o]));
        for (std::size_t c = 0; c < g.cin; ++c) {
            const T* src = in + c * isz * isz;
            const W* k = w + (o * g.cin + c) * 9;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const double wv = k[ky * 3 + kx];
                    if (wv == 0.0) continue;
                    for (std::size_t y = 0; y < osz; ++y) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * y + ky) - 1;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(isz)) continue;
                        const T* row = src + iy * static_cast<std::ptrdiff_t>(isz);
                        double* dst = acc.data() + y * osz;
                        // ix = 2x + kx - 1 must lie in [0, isz)
                        for (std::size_t x = kx == 0 ? 1 : 0; x < osz; ++x) {
                            const std::size_t ix = 2 * x + kx - 1;
                            if (ix >= isz) break;
                            dst[x] += wv * static_cast<double>(row[ix]);
                        }
                    }
                }
            }
        }
        T* dst = out + o * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = acc[i] > 0.0 ? static_cast<T>(acc[i]) : T(0);
    }
}

template <class T, class W>
void forward_sample(const Geometry& g, const Weights<W>& w, SampleTrace<T>& tr) {
    const std::size_t L = g.stages.size();
    tr.stages.resize(L);
    const T* in = tr.input.data();
    for (std::size_t s = 0; s < L; ++s) {
        const auto& sg = g.stages[s];
        tr.stages[s].assign(sg.cout * sg.out_size * sg.out_size, T(0));
        conv_relu_forward(sg, in, w.stage_w[s], w.stage_b[s], tr.stages[s].data());
        in = tr.stages[s].data();
    }

    tr.features.assign(g.features, T(0));
    std::size_t off = 0;
    for (auto s : g.taps) {
        const auto& sg = g.stages[s];
        const std::size_t plane = sg.out_size * sg.out_size;
        for (std::size_t o = 0; o < sg.cout; ++o) {
            double sum = 0.0;
            const T* src = tr.stages[s].data() + o * plane;
            for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(src[i]);
            tr.features[off + o] = static_cast<T>(sum / static_cast<double>(plane));
        }
        off += sg.cout;
    }

    tr.hidden.assign(g.hidden, T(0));
    for (std::size_t j = 0; j < g.hidden; ++j) {
        double acc = w.fc1_b[j];
        const W* row = w.fc1_w + j * g.features;
        for (std::size_t f = 0; f < g.features; ++f) acc += static_cast<double>(row[f]) * static_cast<double>(tr.features[f]);
        tr.hidden[j] = acc > 0.0 ? static_cast<T>(acc) : T(0);
    }

    tr.logits.assign(g.classes, T(0));
    for (std::size_t k = 0; k < g.classes; ++k) {
        double acc = w.fc2_b[k];
        const W* row = w.fc2_w + k * g.hidden;
        for (std::size_t j = 0; j < g.hidden; ++j) acc += static_cast<double>(row[j]) * static_cast<double>(tr.hidden[j]);
        tr.logits[k] = static_cast<T>(acc);
    }
}

// Accumulates dL/dparam for one sample into grads (canonical order, double).
template <class T, class W>
void backward_sample(const Geometry& g, const Weights<W>& w, const SampleTrace<T>& tr,
                     std::span<const double> dlogits, std::vector<std::vector<double>>& grads) {
    const std::size_t L = g.stages.size();
    auto& g_fc1w = grads[2 * L];
    auto& g_fc1b = grads[2 * L + 1];
    auto& g_fc2w = grads[2 * L + 2];
    auto& g_fc2b = grads[2 * L + 3];

    std::vector<double> dhidden(g.hidden, 0.0);
    for (std::size_t k = 0; k < g.classes; ++k) {
        const double d = dlogits[k];
        g_fc2b[k] += d;
        for (std::size_t j = 0; j < g.hidden; ++j) {
            g_fc2w[k * g.hidden + j] += d * static_cast<double>(tr.hidden[j]);
            dhidden[j] += static_cast<double>(w.fc2_w[k * g.hidden + j]) * d;
        }
    }
    for (std::size_t j = 0; j < g.hidden; ++j)
        if (!(tr.hidden[j] > T(0))) dhidden[j] = 0.0;

    std::vector<double> dfeat(g.features, 0.0);
    for (std::size_t j = 0; j < g.hidden; ++j) {
        const double d = dhidden[j];
        if (d == 0.0) continue;
        g_fc1b[j] += d;
        for (std::size_t f = 0; f < g.features; ++f) {
            g_fc1w[j * g.features + f] += d * static_cast<double>(tr.features[f]);
            dfeat[f] += static_cast<double>(w.fc1_w[j * g.features + f]) * d;
        }
    }

    // Gradient w.r.t. each stage's post-ReLU output. A tapped stage receives
    // its pooled-branch share here and the downstream share from the next conv.
    std::vector<std::vector<double>> dact(L);
    for (std::size_t s = 0; s < L; ++s) dact[s].assign(tr.stages[s].size(), 0.0);
    std::size_t off = 0;
    for (auto s : g.taps) {
        const auto& sg = g.stages[s];
        const std::size_t plane = sg.out_size * sg.out_size;
        for (std::size_t o = 0; o < sg.cout; ++o) {
            const double share = dfeat[off + o] / static_cast<double>(plane);
            double* dst = dact[s].data() + o * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] += share;
        }
        off += sg.cout;
    }

    for (std::size_t s = L; s-- > 0;) {
        const auto& sg = g.stages[s];
        const std::size_t isz = sg.in_size, osz = sg.out_size, plane = osz * osz;
        auto& dpre = dact[s];
        const auto& act = tr.stages[s];
        for (std::size_t i = 0; i < dpre.size(); ++i)
            if (!(act[i] > T(0))) dpre[i] = 0.0;

        const T* in = s == 0 ? tr.input.data() : tr.stages[s - 1].data();
        double* din = s == 0 ? nullptr : dact[s - 1].data();
        auto& gw = grads[2 * s];
        auto& gb = grads[2 * s + 1];
        const W* wts = w.stage_w[s];

        for (std::size_t o = 0; o < sg.cout; ++o) {
            const double* dp = dpre.data() + o * plane;
            double bsum = 0.0;
            for (std::size_t i = 0; i < plane; ++i) bsum += dp[i];
            gb[o] += bsum;
            if (bsum == 0.0 && std::all_of(dp, dp + plane, [](double v) { return v == 0.0; })) continue;
            for (std::size_t c = 0; c < sg.cin; ++c) {
                const T* src = in + c * isz * isz;
                double* dsrc = din ? din + c * isz * isz : nullptr;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const std::size_t widx = ((o * sg.cin + c) * 3 + ky) * 3 + kx;
                        const double wv = wts[widx];
                        double acc = 0.0;
                        for (std::size_t y = 0; y < osz; ++y) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(2 * y + ky) - 1;
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(isz)) continue;
                            const T* row = src + iy * static_cast<std::ptrdiff_t>(isz);
                            double* drow = dsrc ? dsrc + iy * static_cast<std::ptrdiff_t>(isz) : nullptr;
                            const double* dprow = dp + y * osz;
                            for (std::size_t x = kx == 0 ? 1 : 0; x < osz; ++x) {
                                const std::size_t ix = 2 * x + kx - 1;
                                if (ix >= isz) break;
                                acc += dprow[x] * static_cast<double>(row[ix]);
                                if (drow) drow[ix] += wv * dprow[x];
                            }
                        }
                        gw[widx] += acc;
                    }
                }
            }
        }
    }
}

void check_batch(const ArchDescriptor& arch, const Tensor& batch) {
    const std::size_t s = arch.input_size;
    if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != s || batch.dim(3) != s) {
        throw ShapeError("stage0", "input batch shape " + shape_string(batch.shape()) + " does not match [N,3," +
                                       std::to_string(s) + "," + std::to_string(s) + "]");
    }
}

template <class T>
double sample_ce(std::span<const T> logits, int label) {
    double mx = -std::numeric_limits<double>::infinity();
    for (auto v : logits) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    for (auto v : logits) sum += std::exp(static_cast<double>(v) - mx);
    return -(static_cast<double>(logits[static_cast<std::size_t>(label)]) - mx - std::log(sum));
}

void check_labels(std::span<const int> labels, std::size_t n, std::size_t classes) {
    if (labels.size() != n) {
        throw ShapeError("loss", "got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " samples");
    }
    for (auto l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= classes) throw ShapeError("loss", "label out of range");
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Tensor& batch) {
    params.validate();
    check_batch(params.arch, batch);
    const Geometry g = geometry(params.arch);
    const Weights<float> w = bind_weights(params);
    const std::size_t n = batch.dim(0);
    const std::size_t per = 3 * params.arch.input_size * params.arch.input_size;

    ForwardResult res;
    res.cache.arch = params.arch;
    res.cache.fingerprint = params_fingerprint(params);
    res.cache.samples.resize(n);
    parallel_for(n, [&](std::size_t i) {
        auto& tr = res.cache.samples[i];
        tr.input.assign(batch.raw() + i * per, batch.raw() + (i + 1) * per);
        forward_sample(g, w, tr);
    });
    res.logits = Tensor({n, g.classes});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < g.classes; ++k) res.logits[i * g.classes + k] = res.cache.samples[i].logits[k];
    return res;
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("loss", "logits must be [N, classes]");
    const std::size_t n = logits.dim(0), classes = logits.dim(1);
    check_labels(labels, n, classes);
    LossResult res;
    res.dlogits = Tensor({n, classes});
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.data().subspan(i * classes, classes);
        total += sample_ce(row, labels[i]);
        const auto p = softmax(row);
        for (std::size_t k = 0; k < classes; ++k) {
            const double onehot = static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0;
            res.dlogits[i * classes + k] = static_cast<float>((p[k] - onehot) / static_cast<double>(n));
        }
    }
    res.loss = total / static_cast<double>(n);
    return res;
}

std::vector<NamedTensor> backward(const ModelParams& params, const ForwardCache& cache, const Tensor& dlogits) {
    params.validate();
    if (!(cache.arch == params.arch)) throw ShapeError("backward", "cache was produced by a different architecture");
    if (cache.fingerprint != params_fingerprint(params)) {
        throw ShapeError("backward", "stale cache: parameters changed since forward");
    }
    const Geometry g = geometry(params.arch);
    const std::size_t n = cache.samples.size();
    if (dlogits.rank() != 2 || dlogits.dim(0) != n || dlogits.dim(1) != g.classes) {
        throw ShapeError("backward", "dlogits shape " + shape_string(dlogits.shape()) + " does not match [" +
                                         std::to_string(n) + "," + std::to_string(g.classes) + "]");
    }
    const Weights<float> w = bind_weights(params);

    auto zero_grads = [&] {
        std::vector<std::vector<double>> gr;
        for (const auto& t : params.tensors) gr.emplace_back(t.value.size(), 0.0);
        return gr;
    };
    std::vector<std::vector<std::vector<double>>> per_sample(n);
    parallel_for(n, [&](std::size_t i) {
        per_sample[i] = zero_grads();
        std::vector<double> dl(g.classes);
        for (std::size_t k = 0; k < g.classes; ++k) dl[k] = dlogits[i * g.classes + k];
        backward_sample(g, w, cache.samples[i], dl, per_sample[i]);
    });

    auto total = zero_grads();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < total.size(); ++p)
            for (std::size_t j = 0; j < total[p].size(); ++j) total[p][j] += per_sample[i][p][j];

    std::vector<NamedTensor> out;
    for (std::size_t p = 0; p < params.tensors.size(); ++p) {
        Tensor t(params.tensors[p].value.shape());
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = static_cast<float>(total[p][j]);
        out.push_back({params.tensors[p].name, std::move(t)});
    }
    return out;
}

namespace {

double loss_with_weights(const Geometry& g, const Weights<double>& w, const Tensor& batch,
                         std::span<const int> labels) {
    const std::size_t n = batch.dim(0);
    const std::size_t per = batch.size() / n;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        SampleTrace<double> tr;
        tr.input.assign(batch.raw() + i * per, batch.raw() + (i + 1) * per);
        forward_sample(g, w, tr);
        total += sample_ce(std::span<const double>(tr.logits), labels[i]);
    }
    return total / static_cast<double>(n);
}

std::vector<std::vector<double>> to_double(const ModelParams& params) {
    std::vector<std::vector<double>> out;
    for (const auto& t : params.tensors) out.emplace_back(t.value.data().begin(), t.value.data().end());
    return out;
}

Weights<double> bind_weights(const std::vector<std::vector<double>>& values, std::size_t stages) {
    std::vector<const double*> ptrs;
    for (const auto& v : values) ptrs.push_back(v.data());
    return bind_weights(ptrs, stages);
}

}  // namespace

double loss_f64(const ModelParams& params, const Tensor& batch, std::span<const int> labels) {
    params.validate();
    check_batch(params.arch, batch);
    check_labels(labels, batch.dim(0), params.arch.classes);
    const auto values = to_double(params);
    return loss_with_weights(geometry(params.arch), bind_weights(values, params.arch.stage_channels.size()), batch, labels);
}

GradCheckResult grad_check(const ArchDescriptor& arch, std::uint64_t seed, double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("grad_check eps must be > 0");
    ModelParams params = init_params(arch, seed);
    RngStream rng = rng_for(seed, 0x6772616463686b, 1);
    // Non-zero biases so every bias gradient path is exercised away from symmetry.
    for (auto& [name, t] : params.tensors)
        if (t.rank() == 1)
            for (auto& v : t.data()) v = static_cast<float>(0.1 * rng.normal());

    const std::size_t n = 3, s = arch.input_size;
    Tensor batch({n, 3, s, s});
    for (auto& v : batch.data()) v = static_cast<float>(rng.uniform());
    const std::vector<int> labels{0, 1, 1};

    const auto fwd = forward(params, batch);
    const auto ce = cross_entropy(fwd.logits, labels);
    const auto grads = backward(params, fwd.cache, ce.dlogits);

    const Geometry g = geometry(arch);
    auto values = to_double(params);
    GradCheckResult res;
    for (std::size_t p = 0; p < values.size(); ++p) {
        for (std::size_t j = 0; j < values[p].size(); ++j) {
            const double orig = values[p][j];
            values[p][j] = orig + eps;
            const double up = loss_with_weights(g, bind_weights(values, arch.stage_channels.size()), batch, labels);
            values[p][j] = orig - eps;
            const double down = loss_with_weights(g, bind_weights(values, arch.stage_channels.size()), batch, labels);
            values[p][j] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = grads[p].value[j];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            const double rel = std::abs(analytic - numeric) / denom;
            ++res.checked;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = grads[p].name;
                res.worst_index = j;
            }
        }
    }
    return res;
}

void image_to_chw(const Image& img, std::span<float> out) {
    const std::size_t plane = static_cast<std::size_t>(img.width()) * img.height();
    if (out.size() != plane * 3) throw ShapeError("input", "destination size does not match image");
    const auto src = img.data();
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c) out[c * plane + i] = static_cast<float>(src[i * 3 + c]) / 255.0f;
}

Tensor images_to_batch(std::span<const Image* const> images) {
    if (images.empty()) throw ShapeError("input", "empty batch");
    const std::size_t w = images[0]->width(), h = images[0]->height();
    Tensor batch({images.size(), 3, h, w});
    const std::size_t per = 3 * w * h;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i]->width() != w || images[i]->height() != h) {
            throw ShapeError("input", "batch images differ in size");
        }
        image_to_chw(*images[i], batch.data().subspan(i * per, per));
    }
    return batch;
}

std::vector<double> softmax(std::span<const float> logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (auto v : logits) mx = std::max(mx, static_cast<double>(v));
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) sum += p[k] = std::exp(static_cast<double>(logits[k]) - mx);
    for (auto& v : p) v /= sum;
    return p;
}

double predict(const ModelParams& params, const Image& img) {
    const auto s = params.arch.input_size;
    if (img.width() != s || img.height() != s) {
        throw ShapeError("input", "image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                                      ", model expects " + std::to_string(s) + "x" + std::to_string(s));
    }
    const Image* one[] = {&img};
    const auto fwd = forward(params, images_to_batch(one));
    return softmax(fwd.logits.data())[1];
}

}  // namespace fundus
