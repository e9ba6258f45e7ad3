#include "edformer/model.hpp"

#include <cmath>
#include <string>

#include "edformer/error.hpp"

namespace edformer::model {

using namespace engine;

std::string_view to_string(EmbeddingMode mode) {
    return mode == EmbeddingMode::variate ? "variate" : "temporal";
}

EmbeddingMode embedding_mode_from_string(std::string_view text) {
    if (text == "variate") return EmbeddingMode::variate;
    if (text == "temporal") return EmbeddingMode::temporal;
    throw ConfigError("embedding_mode must be 'variate' or 'temporal', got '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(lookback, "lookback");
    positive(horizon, "horizon");
    positive(variates, "variates");
    positive(model_width, "model_width");
    positive(heads, "heads");
    positive(layers, "layers");
    positive(ffn_width, "ffn_width");
    if (model_width % heads != 0) {
        throw ConfigError("model_width " + std::to_string(model_width) + " is not divisible by heads " +
                          std::to_string(heads));
    }
    decomposition::validate_kernel(decomposition_kernel);
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (embedding_depth != 1 && embedding_depth != 2) throw ConfigError("embedding_depth must be 1 or 2");
    if (embed_trend && !use_decomposition) throw ConfigError("embed_trend requires use_decomposition");
}

// ---------------------------------------------------------------------------
// Instance normalization

NormalizedVars instance_normalize(Var series) {
    if (series.rank() != 3) throw ShapeError("instance_normalize expects [B, L, N]");
    Var mean = mean_axis(series, 1);
    Var centered = sub(series, mean);
    Var std = sqrt_floor(mean_axis(square(centered), 1), kNormEps);
    return {div(centered, std), mean, std};
}

Var denormalize(Var y, const NormalizedVars& stats) { return add(mul(y, stats.std), stats.mean); }

std::pair<Tensor, NormStats> instance_normalize(const Tensor& seasonal) {
    Tape tape;
    const auto out = instance_normalize(tape.constant(seasonal));
    const std::size_t b = seasonal.dim(0);
    const std::size_t n = seasonal.dim(2);
    return {out.normalized.value(), NormStats{out.mean.value().reshaped({b, n}), out.std.value().reshaped({b, n})}};
}

Tensor denormalize(const Tensor& y, const NormStats& stats) {
    if (y.rank() != 3 || stats.mean.rank() != 2 || stats.mean.shape() != stats.std.shape() ||
        stats.mean.dim(0) != y.dim(0) || stats.mean.dim(1) != y.dim(2)) {
        throw ShapeError("denormalize: y " + shape_string(y.shape()) + " does not match stats " +
                         shape_string(stats.mean.shape()));
    }
    Tape tape;
    const std::size_t b = y.dim(0);
    const std::size_t n = y.dim(2);
    NormalizedVars vars{Var{}, tape.constant(stats.mean.reshaped({b, 1, n})), tape.constant(stats.std.reshaped({b, 1, n}))};
    return denormalize(tape.constant(y), vars).value();
}

// ---------------------------------------------------------------------------
// Layers

Var dense(Var x, const DenseVars& layer) { return add(matmul(x, layer.weight), layer.bias); }

Var embed_variates(Var x, const DenseVars& embedding) {
    if (x.rank() != 3) throw ShapeError("embed_variates expects [B, L, N]");
    return dense(permute(x, {0, 2, 1}), embedding);
}

Var project_seasonal(Var tokens, const DenseVars& projection) {
    return permute(dense(tokens, projection), {0, 2, 1});
}

Var project_trend(Var trend, const DenseVars& projection) {
    return permute(dense(permute(trend, {0, 2, 1}), projection), {0, 2, 1});
}

Var multivariate_attention(Var tokens, const AttentionVars& params, std::size_t heads, Tensor* weights) {
    if (tokens.rank() != 3) throw ShapeError("attention expects tokens [B, T, D]");
    const std::size_t batch = tokens.dim(0);
    const std::size_t count = tokens.dim(1);
    const std::size_t width = tokens.dim(2);
    if (heads == 0 || width % heads != 0) throw ConfigError("model width must be divisible by heads");
    const std::size_t head_width = width / heads;

    auto split = [&](Var projected) {
        return permute(reshape(projected, {batch, count, heads, head_width}), {0, 2, 1, 3});
    };
    Var q = split(matmul(tokens, params.w_q));
    Var k = split(matmul(tokens, params.w_k));
    Var v = split(matmul(tokens, params.w_v));

    Var scores = scale(matmul(q, transpose(k, 2, 3)), 1.0 / std::sqrt(static_cast<double>(head_width)));
    Var attn = softmax(scores, -1);
    if (weights != nullptr) *weights = attn.value();

    Var merged = reshape(permute(matmul(attn, v), {0, 2, 1, 3}), {batch, count, width});
    return matmul(merged, params.w_o);
}

Var encoder_block(Var tokens, const EncoderBlockVars& p, const BlockRuntime& rt, Tensor* attention) {
    const bool drop = rt.train && rt.rng != nullptr && rt.dropout > 0.0;

    Var attended = multivariate_attention(tokens, p.attention, rt.heads, attention);
    if (drop) attended = dropout(attended, rt.dropout, *rt.rng);
    Var h1 = add(mul(layer_norm(add(attended, tokens), kLayerNormEps), p.norm1_gain), p.norm1_bias);

    Var ffn = dense(relu(dense(h1, p.ffn_in)), p.ffn_out);
    if (drop) ffn = dropout(ffn, rt.dropout, *rt.rng);
    return add(mul(layer_norm(add(ffn, h1), kLayerNormEps), p.norm2_gain), p.norm2_bias);
}

// ---------------------------------------------------------------------------
// Model

std::size_t Model::add_weight(std::string name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(fan_in * fan_out);
    for (double& v : values) v = dist(rng);
    names_.push_back(std::move(name));
    params_.emplace_back(Shape{fan_in, fan_out}, std::move(values));
    return params_.size() - 1;
}

std::size_t Model::add_constant(std::string name, Shape shape, double value) {
    names_.push_back(std::move(name));
    params_.emplace_back(std::move(shape), value);
    return params_.size() - 1;
}

Model::DenseIndex Model::add_dense(const std::string& prefix, std::size_t in, std::size_t out, std::mt19937_64& rng) {
    DenseIndex idx;
    idx.weight = add_weight(prefix + ".weight", in, out, rng);
    idx.bias = add_constant(prefix + ".bias", {out}, 0.0);
    return idx;
}

Model::Model(ModelConfig config) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    const auto& c = config_;
    const std::size_t D = c.model_width;
    const bool variate = c.embedding_mode == EmbeddingMode::variate;
    const std::size_t embed_in = variate ? c.lookback : c.variates;

    auto embedding_stack = [&](const std::string& prefix) {
        std::vector<DenseIndex> stack;
        stack.push_back(add_dense(prefix + ".0", embed_in, D, rng));
        if (c.embedding_depth == 2) stack.push_back(add_dense(prefix + ".1", D, D, rng));
        return stack;
    };
    embed_seasonal_ = embedding_stack("embed.seasonal");
    if (c.embed_trend) embed_trend_ = embedding_stack("embed.trend");
    if (!variate) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(D));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> pos(c.lookback * D);
        for (double& v : pos) v = dist(rng);
        names_.push_back("embed.position");
        params_.emplace_back(Shape{c.lookback, D}, std::move(pos));
        position_ = params_.size() - 1;
    }

    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::string prefix = "encoder." + std::to_string(l);
        BlockIndex b;
        b.w_q = add_weight(prefix + ".attn.w_q", D, D, rng);
        b.w_k = add_weight(prefix + ".attn.w_k", D, D, rng);
        b.w_v = add_weight(prefix + ".attn.w_v", D, D, rng);
        b.w_o = add_weight(prefix + ".attn.w_o", D, D, rng);
        b.ffn_in = add_dense(prefix + ".ffn.0", D, c.ffn_width, rng);
        b.ffn_out = add_dense(prefix + ".ffn.1", c.ffn_width, D, rng);
        b.norm1_gain = add_constant(prefix + ".norm1.gain", {D}, 1.0);
        b.norm1_bias = add_constant(prefix + ".norm1.bias", {D}, 0.0);
        b.norm2_gain = add_constant(prefix + ".norm2.gain", {D}, 1.0);
        b.norm2_bias = add_constant(prefix + ".norm2.bias", {D}, 0.0);
        blocks_.push_back(b);
    }

    if (variate) {
        head_seasonal_ = add_dense("head.seasonal", D, c.horizon, rng);
    } else {
        head_variate_ = add_dense("head.variate", D, c.variates, rng);
        head_seasonal_ = add_dense("head.seasonal", c.lookback, c.horizon, rng);
    }
    if (c.use_decomposition && !c.embed_trend) head_trend_ = add_dense("head.trend", c.lookback, c.horizon, rng);
}

Tensor& Model::parameter(std::string_view name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return params_[i];
    throw ConfigError("no parameter named '" + std::string(name) + "'");
}

const Tensor& Model::parameter(std::string_view name) const {
    return const_cast<Model*>(this)->parameter(name);
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

std::vector<Var> Model::bind(Tape& tape, bool requires_grad) const {
    std::vector<Var> vars;
    vars.reserve(params_.size());
    for (const auto& p : params_) vars.push_back(tape.leaf(p, requires_grad));
    return vars;
}

DenseVars Model::dense_vars(std::span<const Var> p, const DenseIndex& idx) { return {p[idx.weight], p[idx.bias]}; }

Var Model::embed(Var normalized, std::span<const Var> p, const std::vector<DenseIndex>& stack) const {
    // normalized is [B, L, N]; variate tokens read whole series, temporal tokens read one time step.
    Var h = config_.embedding_mode == EmbeddingMode::variate ? embed_variates(normalized, dense_vars(p, stack[0]))
                                                             : dense(normalized, dense_vars(p, stack[0]));
    for (std::size_t i = 1; i < stack.size(); ++i) h = dense(relu(h), dense_vars(p, stack[i]));
    return h;
}

void Model::check_input(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(1) != config_.lookback || x.dim(2) != config_.variates) {
        throw ShapeError("forecast input " + shape_string(x.shape()) + " does not match [B, " +
                         std::to_string(config_.lookback) + ", " + std::to_string(config_.variates) + "]");
    }
    require_finite(x.data(), "forecast input");
}

Var Model::forward(Var x, std::span<const Var> p, const ForwardOptions& options) const {
    const auto& c = config_;
    if (p.size() != params_.size()) throw ShapeError("forward: parameter count mismatch");
    if (x.rank() != 3 || x.dim(1) != c.lookback || x.dim(2) != c.variates) {
        throw ShapeError("forward input " + shape_string(x.shape()) + " does not match the model config");
    }
    const bool variate = c.embedding_mode == EmbeddingMode::variate;

    Var seasonal = x;
    Var trend;
    if (c.use_decomposition) {
        const auto parts = decomposition::series_decompose(x, c.decomposition_kernel);
        seasonal = parts.seasonal;
        trend = parts.trend;
    }

    NormalizedVars stats;
    Var trend_normalized;
    if (c.embed_trend) {
        // Statistics of the full series; seasonal and trend are scaled by the
        // same std so their normalized sum equals the normalized input.
        stats = instance_normalize(x);
        stats.normalized = div(seasonal, stats.std);
        trend_normalized = div(sub(trend, stats.mean), stats.std);
    } else {
        stats = instance_normalize(seasonal);
    }

    Var normalized = stats.normalized;
    if (c.time_flip) {
        normalized = flip(normalized, 1);
        if (c.embed_trend) trend_normalized = flip(trend_normalized, 1);
    }

    Var tokens = embed(normalized, p, embed_seasonal_);
    if (c.embed_trend) tokens = add(tokens, embed(trend_normalized, p, embed_trend_));
    if (!variate) tokens = add(tokens, p[position_]);

    if (options.context != nullptr) {
        options.context->attention.clear();
        options.context->tokens.assign(1, tokens.value());
    }

    BlockRuntime rt{c.heads, c.dropout, options.train, options.rng};
    for (const auto& b : blocks_) {
        EncoderBlockVars vars{{p[b.w_q], p[b.w_k], p[b.w_v], p[b.w_o]},
                              dense_vars(p, b.ffn_in),
                              dense_vars(p, b.ffn_out),
                              p[b.norm1_gain],
                              p[b.norm1_bias],
                              p[b.norm2_gain],
                              p[b.norm2_bias]};
        Tensor attention;
        tokens = encoder_block(tokens, vars, rt, options.context ? &attention : nullptr);
        if (options.context != nullptr) {
            options.context->attention.push_back(std::move(attention));
            options.context->tokens.push_back(tokens.value());
        }
    }

    Var seasonal_out;
    if (variate) {
        seasonal_out = project_seasonal(tokens, dense_vars(p, head_seasonal_));
    } else {
        // [B, L, D] -> [B, L, N] -> series per variate -> [B, H, N]
        Var per_step = dense(tokens, dense_vars(p, head_variate_));
        seasonal_out = project_trend(per_step, dense_vars(p, head_seasonal_));
    }
    Var out = denormalize(seasonal_out, stats);
    if (c.use_decomposition && !c.embed_trend) out = add(out, project_trend(trend, dense_vars(p, head_trend_)));
    return out;
}

Tensor Model::forecast(const Tensor& x) const {
    check_input(x);
    Tape tape;
    const auto vars = bind(tape, false);
    return forward(tape.constant(x), vars).value();
}

Tensor Model::forecast(const Tensor& x, AttributionContext& context) const {
    check_input(x);
    Tape tape;
    const auto vars = bind(tape, false);
    ForwardOptions options;
    options.context = &context;
    return forward(tape.constant(x), vars, options).value();
}

}  // namespace edformer::model
