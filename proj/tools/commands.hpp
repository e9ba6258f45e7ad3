#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace edformer::cli {

using engine::Tensor;

struct PreparedData {
    data::RawDataset raw;
    data::Splits splits;
    data::Standardizer stats;
    Tensor values;  // standardized [T, N]
};

// Loads the configured dataset and standardizes it with statistics fit on the
// training split (or with `stats` when given).
PreparedData prepare_data(const RunConfig& config, std::size_t lookback, std::size_t horizon,
                          const data::Standardizer* stats = nullptr);

// Each command writes its CSV artifacts into config.out_dir and a short
// summary to `log`.
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_evaluate(const RunConfig& config, const std::vector<std::string>& checkpoints, bool invert,
                  std::ostream& log);
void cmd_forecast(const RunConfig& config, const std::string& checkpoint, const std::filesystem::path& input,
                  bool invert, std::ostream& log);
void cmd_decompose(const RunConfig& config, const std::filesystem::path& input, std::size_t kernel,
                   std::ostream& log);
void cmd_explain(const RunConfig& config, const std::string& checkpoint, std::ostream& log);
void cmd_bench(const RunConfig& config, const std::string& checkpoint, std::ostream& log);

}  // namespace edformer::cli
