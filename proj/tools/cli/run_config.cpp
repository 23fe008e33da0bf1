#include "run_config.hpp"

#include "fundus/error.hpp"

namespace fundus::cli {

void RunConfig::apply(std::string_view key, std::string_view value) {
    if (key == "threshold") {
        threshold = parse_double(key, value);
        return;
    }
    if (set_field(preprocess, key, value)) return;
    if (set_field(arch, key, value)) return;
    if (set_field(train, key, value)) return;
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply(const KvBlock& block) {
    for (const auto& [k, v] : block) apply(k, v);
}

void RunConfig::validate() const {
    preprocess.validate();
    arch.validate();
    train.validate();
    train.augment.validate();
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
}

KvBlock RunConfig::to_kv() const {
    KvBlock out = fundus::to_kv(preprocess);
    for (auto& e : fundus::to_kv(arch)) out.push_back(std::move(e));
    for (auto& e : fundus::to_kv(train)) out.push_back(std::move(e));
    for (auto& e : fundus::to_kv(train.augment)) out.push_back(std::move(e));
    out.emplace_back("threshold", format_double(threshold));
    return out;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    try {
        cfg.apply(parse_kv(read_text_file(path)));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace fundus::cli
