#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "edformer/error.hpp"

namespace edformer::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

template <class T, class Parse>
std::vector<T> to_list(const std::string& key, const std::string& v, Parse parse) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const auto comma = v.find(',', start);
        const auto item = trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.empty()) throw ConfigError("'" + key + "' has an empty list entry");
        out.push_back(parse(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto size_field = [](std::size_t RunConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = to_size(k, v); };
        };
        auto model_size = [](std::size_t model::ModelConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.model.*field = to_size(k, v); };
        };
        auto model_bool = [](bool model::ModelConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.model.*field = to_bool(k, v); };
        };
        auto train_size = [](std::size_t train::TrainConfig::*field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) { c.train.*field = to_size(k, v); };
        };

        t["lookback"] = model_size(&model::ModelConfig::lookback);
        t["horizon"] = model_size(&model::ModelConfig::horizon);
        t["variates"] = model_size(&model::ModelConfig::variates);
        t["model_width"] = model_size(&model::ModelConfig::model_width);
        t["heads"] = model_size(&model::ModelConfig::heads);
        t["layers"] = model_size(&model::ModelConfig::layers);
        t["ffn_width"] = model_size(&model::ModelConfig::ffn_width);
        t["decomposition_kernel"] = model_size(&model::ModelConfig::decomposition_kernel);
        t["embedding_depth"] = model_size(&model::ModelConfig::embedding_depth);
        t["use_decomposition"] = model_bool(&model::ModelConfig::use_decomposition);
        t["time_flip"] = model_bool(&model::ModelConfig::time_flip);
        t["embed_trend"] = model_bool(&model::ModelConfig::embed_trend);
        t["dropout"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.model.dropout = to_double(k, v); };
        t["embedding_mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.model.embedding_mode = model::embedding_mode_from_string(v);
        };
        t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.model.seed = c.train.seed = c.attribution.seed = to_u64(k, v);
        };

        t["batch_size"] = train_size(&train::TrainConfig::batch_size);
        t["max_epochs"] = train_size(&train::TrainConfig::max_epochs);
        t["patience"] = train_size(&train::TrainConfig::patience);
        t["max_steps"] = train_size(&train::TrainConfig::max_steps);
        t["learning_rate"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.learning_rate = to_double(k, v);
        };
        t["shuffle"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.train.shuffle = to_bool(k, v); };

        t["data_path"] = [](RunConfig& c, const std::string&, const std::string& v) { c.data_path = v; };
        t["dataset_name"] = [](RunConfig& c, const std::string&, const std::string& v) { c.dataset_name = v; };
        t["synthetic"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.synthetic = to_bool(k, v); };
        t["toy_length"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.toy.length = to_size(k, v); };
        t["toy_variates"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.toy.variates = to_size(k, v);
        };
        t["toy_noise"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.toy.noise_std = to_double(k, v);
        };
        t["toy_seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.toy.seed = to_u64(k, v); };

        t["split_train"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.split.train = to_double(k, v); };
        t["split_val"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.split.val = to_double(k, v); };
        t["split_test"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.split.test = to_double(k, v); };
        t["train_rows"] = size_field(&RunConfig::train_rows);
        t["val_rows"] = size_field(&RunConfig::val_rows);
        t["test_rows"] = size_field(&RunConfig::test_rows);
        t["stride"] = size_field(&RunConfig::stride);

        t["checkpoint"] = [](RunConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; };
        t["out_dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };

        t["method"] = [](RunConfig& c, const std::string&, const std::string& v) {
            explain::method_from_string(v);
            c.method = v;
        };
        t["k_fraction"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.k_fractions = to_list<double>(k, v, to_double);
        };
        t["explain_windows"] = size_field(&RunConfig::explain_windows);
        t["gs_random_baselines"] = size_field(&RunConfig::gs_random_baselines);
        t["baseline"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.baseline = to_double(k, v);
        };
        t["patch_length"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.patch_length = to_size(k, v);
        };
        t["ig_steps"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.ig_steps = to_size(k, v);
        };
        t["gs_samples"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.gs_samples = to_size(k, v);
        };
        t["gs_noise_std"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.gs_noise_std = to_double(k, v);
        };
        t["win_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.attribution.win_size = to_size(k, v);
        };
        t["target"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.attribution.target = parse_target(v);
        };

        t["bench_lookbacks"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.bench_lookbacks = to_list<std::size_t>(k, v, to_size);
        };
        t["bench_iters"] = size_field(&RunConfig::bench_iters);
        t["bench_windows"] = size_field(&RunConfig::bench_windows);
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(*this, key, value);
    explicit_keys.insert(key);
}

std::vector<std::string> known_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : setters()) keys.push_back(k);
    return keys;
}

explain::TargetFunctional parse_target(const std::string& text) {
    if (text == "mean") return explain::TargetFunctional::mean_all();
    auto fields = [&](std::size_t prefix) {
        std::vector<std::size_t> out;
        std::size_t start = prefix;
        while (true) {
            const auto colon = text.find(':', start);
            out.push_back(to_size("target", text.substr(start, colon == std::string::npos ? std::string::npos : colon - start)));
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
        return out;
    };
    if (text.rfind("cell:", 0) == 0) {
        const auto f = fields(5);
        if (f.size() == 2) return explain::TargetFunctional::cell(f[0], f[1]);
    } else if (text.rfind("variate:", 0) == 0) {
        const auto f = fields(8);
        if (f.size() == 1) return explain::TargetFunctional::variate_mean(f[0]);
    }
    throw ConfigError("target must be 'mean', 'cell:H:N' or 'variate:N', got '" + text + "'");
}

void read_config(std::istream& in, const std::string& source, RunConfig& config) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            config.set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void read_config_file(const std::filesystem::path& path, RunConfig& config) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    read_config(in, path.string(), config);
}

void apply_override(const std::string& assignment, RunConfig& config) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    config.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace edformer::cli
