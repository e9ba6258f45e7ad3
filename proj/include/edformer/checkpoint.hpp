#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "edformer/data.hpp"
#include "edformer/model.hpp"

namespace edformer::checkpoint {

// Binary layout, all integers and doubles little-endian:
//   "EDF1" | u32 version | model config | u32 parameter count
//   | per parameter: u32 name length, name bytes, u32 rank, u64 dims, f64 values
//   | u32 variates, f64 means, f64 stds | u64 training steps
inline constexpr std::uint32_t kFormatVersion = 1;

struct Checkpoint {
    model::ModelConfig config;
    std::vector<std::string> names;
    std::vector<engine::Tensor> parameters;
    data::Standardizer data_stats;
    std::uint64_t training_steps = 0;

    model::Model make_model() const;
};

Checkpoint capture(const model::Model& model, const data::Standardizer& stats, std::uint64_t training_steps);

std::vector<std::uint8_t> encode(const Checkpoint& checkpoint);
Checkpoint decode(std::span<const std::uint8_t> bytes);

void save(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

}  // namespace edformer::checkpoint
