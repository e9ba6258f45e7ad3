#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edformer/decomposition.hpp"
#include "edformer/engine/ops.hpp"
#include "edformer/engine/tape.hpp"
#include "edformer/engine/tensor.hpp"

namespace edformer::model {

using engine::Shape;
using engine::Tape;
using engine::Tensor;
using engine::Var;

// How the lookback window becomes attention tokens.
//   variate:  one token per variate holding its whole series (inverted layout)
//   temporal: one token per time step, with learned positional encoding
enum class EmbeddingMode { variate, temporal };

std::string_view to_string(EmbeddingMode mode);
EmbeddingMode embedding_mode_from_string(std::string_view text);

inline constexpr double kNormEps = 1e-5;       // floor on per-window std
inline constexpr double kLayerNormEps = 1e-5;  // inside sqrt in encoder layer norms

struct ModelConfig {
    std::size_t lookback = 96;
    std::size_t horizon = 96;
    std::size_t variates = 7;
    std::size_t model_width = 128;
    std::size_t heads = 8;
    std::size_t layers = 2;
    std::size_t ffn_width = 256;
    std::size_t decomposition_kernel = decomposition::kDefaultKernel;
    double dropout = 0.1;
    bool use_decomposition = true;
    EmbeddingMode embedding_mode = EmbeddingMode::variate;
    // Reverse every series in time before embedding.
    bool time_flip = false;
    // Embed the trend alongside the seasonal part instead of forecasting it
    // with a separate linear head.
    bool embed_trend = false;
    // 1 = single dense layer; 2 = dense, relu, dense.
    std::size_t embedding_depth = 1;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Per-window, per-variate statistics; mean and std are [B, N].
struct NormStats {
    Tensor mean;
    Tensor std;
};

// Subtracts each (batch, variate) series' time mean and divides by its std
// floored at kNormEps. seasonal is [B, L, N].
std::pair<Tensor, NormStats> instance_normalize(const Tensor& seasonal);

// y * std + mean for y [B, H, N].
Tensor denormalize(const Tensor& y, const NormStats& stats);

// Tape-level pieces of the network, exposed for testing and reuse.

struct NormalizedVars {
    Var normalized;  // [B, L, N]
    Var mean;        // [B, 1, N]
    Var std;         // [B, 1, N]
};
NormalizedVars instance_normalize(Var series);
Var denormalize(Var y, const NormalizedVars& stats);

struct DenseVars {
    Var weight;  // [in, out]
    Var bias;    // [out]
};
// x [..., in] -> [..., out]
Var dense(Var x, const DenseVars& layer);

// x [B, L, N] -> tokens [B, N, D]: one token per variate from its full series.
Var embed_variates(Var x, const DenseVars& embedding);
// tokens [B, N, D] -> [B, H, N].
Var project_seasonal(Var tokens, const DenseVars& projection);
// trend [B, L, N] -> [B, H, N] through a shared L -> H map.
Var project_trend(Var trend, const DenseVars& projection);

struct AttentionVars {
    Var w_q;
    Var w_k;
    Var w_v;
    Var w_o;
};

// Multi-head scaled dot-product self-attention across the T tokens of
// tokens [B, T, D]. When `weights` is non-null it receives the softmax
// matrices [B, heads, T, T].
Var multivariate_attention(Var tokens, const AttentionVars& params, std::size_t heads, Tensor* weights = nullptr);

struct EncoderBlockVars {
    AttentionVars attention;
    DenseVars ffn_in;
    DenseVars ffn_out;
    Var norm1_gain;
    Var norm1_bias;
    Var norm2_gain;
    Var norm2_bias;
};

struct BlockRuntime {
    std::size_t heads = 1;
    double dropout = 0.0;
    // Dropout is applied only when training and an rng is supplied.
    bool train = false;
    std::mt19937_64* rng = nullptr;
};

// H' = LN(MVA(X) + X); H = LN(FFN(H') + H').
Var encoder_block(Var tokens, const EncoderBlockVars& params, const BlockRuntime& runtime,
                  Tensor* attention = nullptr);

// Activations kept from one forward pass for inspection.
struct AttributionContext {
    std::vector<Tensor> attention;  // per layer [B, heads, T, T]
    std::vector<Tensor> tokens;     // per layer [B, T, D]; entry 0 is the embedding output
};

struct ForwardOptions {
    bool train = false;
    std::mt19937_64* rng = nullptr;
    AttributionContext* context = nullptr;
};

class Model {
public:
    explicit Model(ModelConfig config);

    const ModelConfig& config() const { return config_; }

    // Parameters in a fixed order; the order is part of the checkpoint format.
    const std::vector<std::string>& parameter_names() const { return names_; }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    Tensor& parameter(std::string_view name);
    const Tensor& parameter(std::string_view name) const;
    std::size_t parameter_count() const;

    // Places every parameter on the tape, in parameters() order.
    std::vector<Var> bind(Tape& tape, bool requires_grad) const;

    // Records the forecast of x [B, L, N] -> [B, H, N].
    Var forward(Var x, std::span<const Var> params, const ForwardOptions& options = {}) const;

    // Eval-mode forecast; no state is touched.
    Tensor forecast(const Tensor& x) const;
    Tensor forecast(const Tensor& x, AttributionContext& context) const;

    void check_input(const Tensor& x) const;

private:
    struct DenseIndex {
        std::size_t weight = 0;
        std::size_t bias = 0;
    };
    struct BlockIndex {
        std::size_t w_q = 0, w_k = 0, w_v = 0, w_o = 0;
        DenseIndex ffn_in, ffn_out;
        std::size_t norm1_gain = 0, norm1_bias = 0, norm2_gain = 0, norm2_bias = 0;
    };

    std::size_t add_weight(std::string name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
    std::size_t add_constant(std::string name, Shape shape, double value);
    DenseIndex add_dense(const std::string& prefix, std::size_t in, std::size_t out, std::mt19937_64& rng);
    static DenseVars dense_vars(std::span<const Var> p, const DenseIndex& idx);
    Var embed(Var normalized, std::span<const Var> p, const std::vector<DenseIndex>& stack) const;

    ModelConfig config_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;

    std::vector<DenseIndex> embed_seasonal_;
    std::vector<DenseIndex> embed_trend_;
    std::size_t position_ = 0;
    std::vector<BlockIndex> blocks_;
    DenseIndex head_variate_;  // temporal mode: D -> N per time token
    DenseIndex head_seasonal_;
    DenseIndex head_trend_;
};

}  // namespace edformer::model
