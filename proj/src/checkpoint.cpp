#include "edformer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "edformer/error.hpp"

namespace edformer::checkpoint {

namespace {

constexpr char kMagic[4] = {'E', 'D', 'F', '1'};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8(const char* what) { return take(1, what)[0]; }
    std::uint32_t u32(const char* what) {
        const auto b = take(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }
    std::uint64_t u64(const char* what) {
        const auto b = take(8, what);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (in_.size() - pos_ < n) {
            throw TruncatedFileError(std::string("expected ") + std::to_string(n) + " more bytes for " + what +
                                     " at offset " + std::to_string(pos_));
        }
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

bool read_flag(Reader& r, const char* what) {
    const auto v = r.u8(what);
    if (v > 1) throw CheckpointError(std::string("invalid boolean for ") + what);
    return v == 1;
}

}  // namespace

model::Model Checkpoint::make_model() const {
    model::Model m(config);
    if (m.parameter_names() != names) throw CheckpointError("parameter names do not match the stored configuration");
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        if (parameters[i].shape() != m.parameters()[i].shape()) {
            throw CheckpointError("parameter '" + names[i] + "' has shape " +
                                  engine::shape_string(parameters[i].shape()) + ", expected " +
                                  engine::shape_string(m.parameters()[i].shape()));
        }
    }
    m.parameters() = parameters;
    return m;
}

Checkpoint capture(const model::Model& model, const data::Standardizer& stats, std::uint64_t training_steps) {
    return {model.config(), model.parameter_names(), model.parameters(), stats, training_steps};
}

std::vector<std::uint8_t> encode(const Checkpoint& c) {
    if (c.names.size() != c.parameters.size()) throw CheckpointError("parameter names and values differ in count");
    if (c.data_stats.mean.size() != c.data_stats.std.size()) throw CheckpointError("standardizer is inconsistent");
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kFormatVersion);

    const auto& m = c.config;
    w.u64(m.lookback);
    w.u64(m.horizon);
    w.u64(m.variates);
    w.u64(m.model_width);
    w.u64(m.heads);
    w.u64(m.layers);
    w.u64(m.ffn_width);
    w.u64(m.decomposition_kernel);
    w.f64(m.dropout);
    w.u8(m.use_decomposition ? 1 : 0);
    w.u8(m.embedding_mode == model::EmbeddingMode::variate ? 0 : 1);
    w.u8(m.time_flip ? 1 : 0);
    w.u8(m.embed_trend ? 1 : 0);
    w.u64(m.embedding_depth);
    w.u64(m.seed);

    w.u32(static_cast<std::uint32_t>(c.parameters.size()));
    for (std::size_t i = 0; i < c.parameters.size(); ++i) {
        w.u32(static_cast<std::uint32_t>(c.names[i].size()));
        w.bytes(c.names[i].data(), c.names[i].size());
        const auto& t = c.parameters[i];
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) w.u64(d);
        for (double v : t.data()) w.f64(v);
    }

    w.u32(static_cast<std::uint32_t>(c.data_stats.mean.size()));
    for (double v : c.data_stats.mean) w.f64(v);
    for (double v : c.data_stats.std) w.f64(v);
    w.u64(c.training_steps);
    return w.take();
}

Checkpoint decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw BadMagicError();
    }
    r.take(sizeof kMagic, "magic");
    const auto version = r.u32("version");
    if (version != kFormatVersion) throw UnsupportedVersionError(version);

    Checkpoint c;
    auto& m = c.config;
    m.lookback = r.u64("lookback");
    m.horizon = r.u64("horizon");
    m.variates = r.u64("variates");
    m.model_width = r.u64("model_width");
    m.heads = r.u64("heads");
    m.layers = r.u64("layers");
    m.ffn_width = r.u64("ffn_width");
    m.decomposition_kernel = r.u64("decomposition_kernel");
    m.dropout = r.f64("dropout");
    m.use_decomposition = read_flag(r, "use_decomposition");
    const auto mode = r.u8("embedding_mode");
    if (mode > 1) throw CheckpointError("unknown embedding mode " + std::to_string(mode));
    m.embedding_mode = mode == 0 ? model::EmbeddingMode::variate : model::EmbeddingMode::temporal;
    m.time_flip = read_flag(r, "time_flip");
    m.embed_trend = read_flag(r, "embed_trend");
    m.embedding_depth = r.u64("embedding_depth");
    m.seed = r.u64("seed");
    try {
        m.validate();
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("stored configuration is invalid: ") + e.what());
    }

    const auto count = r.u32("parameter count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.u32("parameter name length");
        const auto name = r.take(len, "parameter name");
        c.names.emplace_back(name.begin(), name.end());
        const auto rank = r.u32("parameter rank");
        engine::Shape shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = r.u64("parameter dimension");
            if (d == 0 || d > r.remaining()) throw TruncatedFileError("parameter '" + c.names.back() + "' exceeds the file");
            n *= d;
        }
        if (n > r.remaining() / 8) throw TruncatedFileError("parameter '" + c.names.back() + "' exceeds the file");
        std::vector<double> values(n);
        for (double& v : values) v = r.f64("parameter values");
        try {
            c.parameters.emplace_back(std::move(shape), std::move(values));
        } catch (const Error& e) {
            throw CheckpointError("parameter '" + c.names.back() + "': " + e.what());
        }
    }

    const auto n_stats = r.u32("standardizer size");
    if (n_stats > r.remaining() / 16) throw TruncatedFileError("standardizer exceeds the file");
    c.data_stats.mean.resize(n_stats);
    c.data_stats.std.resize(n_stats);
    for (double& v : c.data_stats.mean) v = r.f64("standardizer mean");
    for (double& v : c.data_stats.std) v = r.f64("standardizer std");
    c.training_steps = r.u64("training steps");
    if (r.remaining() != 0) throw CheckpointError(std::to_string(r.remaining()) + " trailing bytes after checkpoint");

    c.make_model();  // validates names and shapes against the configuration
    return c;
}

void save(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    const auto bytes = encode(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

}  // namespace edformer::checkpoint
