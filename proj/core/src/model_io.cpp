#include "fundus/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fundus/error.hpp"
#include "fundus/kv.hpp"

namespace fundus {

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <class T>
    void pod(T v) { bytes(&v, sizeof(T)); }
    void block(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    void bytes(void* dst, std::size_t n) {
        if (in_.size() - pos_ < n) throw FormatError("unexpected end of file at byte " + std::to_string(pos_));
        std::memcpy(dst, in_.data() + pos_, n);
        pos_ += n;
    }
    template <class T>
    T pod() {
        T v;
        bytes(&v, sizeof(T));
        return v;
    }
    std::string block() {
        const auto n = pod<std::uint32_t>();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams& params) {
    params.validate();
    Writer w;
    w.bytes("MLNN", 4);
    w.pod(kModelFormatVersion);
    w.block(format_kv(to_kv(params.arch)));
    w.block(format_kv(to_kv(params.preprocess)));
    w.pod(static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& [name, t] : params.tensors) {
        w.pod(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.pod(static_cast<std::uint8_t>(t.rank()));
        for (auto d : t.shape()) w.pod(static_cast<std::uint32_t>(d));
        w.bytes(t.raw(), t.size() * sizeof(float));
    }
    return w.take();
}

ModelParams deserialize_model(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "MLNN", 4) != 0) throw FormatError("bad magic");
    const auto version = r.pod<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw FormatError("unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
    }

    ModelParams p;
    try {
        p.arch = arch_from_kv(parse_kv(r.block()));
        p.preprocess = preprocess_config_from_kv(parse_kv(r.block()));
    } catch (const ConfigError& e) {
        throw FormatError(std::string("invalid header block: ") + e.what());
    } catch (const ParameterError& e) {
        throw FormatError(std::string("invalid header block: ") + e.what());
    }

    const auto count = r.pod<std::uint32_t>();
    const auto layout = parameter_layout(p.arch);
    if (count != layout.size()) {
        throw FormatError("tensor count " + std::to_string(count) + " does not match architecture (" +
                          std::to_string(layout.size()) + ")");
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = r.pod<std::uint16_t>();
        std::string name(name_len, '\0');
        r.bytes(name.data(), name_len);
        const auto rank = r.pod<std::uint8_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.pod<std::uint32_t>();
        if (name != layout[i].first || shape != layout[i].second) {
            throw FormatError("tensor " + std::to_string(i) + " '" + name + "' " + shape_string(shape) +
                              " inconsistent with architecture (expected '" + layout[i].first + "' " +
                              shape_string(layout[i].second) + ")");
        }
        std::vector<float> data(shape_elements(shape));
        r.bytes(data.data(), data.size() * sizeof(float));
        p.tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    if (!r.done()) throw FormatError("trailing bytes after last tensor");
    return p;
}

void save_model(const ModelParams& params, const std::string& path) {
    const auto bytes = serialize_model(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for model '" + path + "'");
}

ModelParams load_model(const std::string& path) {
    const auto bytes = read_binary_file(path);
    try {
        return deserialize_model(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

std::string model_hash(const ModelParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto b : serialize_model(params)) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = hex[h & 0xF];
    return s;
}

}  // namespace fundus
