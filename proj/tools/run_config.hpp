#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "edformer/data.hpp"
#include "edformer/explain.hpp"
#include "edformer/model.hpp"
#include "edformer/train.hpp"

namespace edformer::cli {

// Everything a command needs, read from a flat `key = value` file and then
// overridden by flags. Unknown keys are rejected.
struct RunConfig {
    model::ModelConfig model;
    train::TrainConfig train;

    // Either a CSV path or the built-in synthetic series.
    std::string data_path;
    bool synthetic = false;
    data::ToySeriesOptions toy;
    std::string dataset_name = "dataset";

    data::SplitRatios split;
    // Absolute split sizes; used instead of the ratios when all three are set.
    std::size_t train_rows = 0;
    std::size_t val_rows = 0;
    std::size_t test_rows = 0;
    std::size_t stride = 1;

    std::string checkpoint = "model.edf";
    std::filesystem::path out_dir = ".";

    std::string method = "ig";
    std::vector<double> k_fractions{0.2};
    std::size_t explain_windows = 16;
    std::size_t gs_random_baselines = 4;
    explain::AttributionOptions attribution;

    std::vector<std::size_t> bench_lookbacks{96, 192, 336, 720};
    std::size_t bench_iters = 10;
    std::size_t bench_windows = 64;

    std::set<std::string> explicit_keys;

    void set(const std::string& key, const std::string& value);
    bool was_set(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

// Lines are `key = value`; `#` starts a comment; blank lines are skipped.
void read_config(std::istream& in, const std::string& source, RunConfig& config);
void read_config_file(const std::filesystem::path& path, RunConfig& config);

// Parses `key=value` from a --set flag.
void apply_override(const std::string& assignment, RunConfig& config);

explain::TargetFunctional parse_target(const std::string& text);

std::vector<std::string> known_keys();

}  // namespace edformer::cli
