#include "edformer/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string_view>

#include "edformer/error.hpp"

namespace edformer::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

RawDataset parse_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, header_line)) {
        ++line_no;
        if (!trim(header_line).empty()) break;
    }
    if (trim(header_line).empty()) throw ParseError(source + ": missing header row", line_no, 0);
    header = split_fields(header_line);
    const std::size_t columns = header.size();

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != columns) {
            throw ParseError(source + ": row at line " + std::to_string(line_no) + " has " +
                                 std::to_string(fields.size()) + " fields, header has " + std::to_string(columns),
                             line_no, fields.size());
        }
        rows.emplace_back(fields.begin(), fields.end());
        row_lines.push_back(line_no);
    }
    if (rows.empty()) throw ParseError(source + ": no data rows", line_no, 0);

    double probe = 0.0;
    const bool has_dates = header[0] == "date" || !parse_double(rows[0][0], probe);
    const std::size_t first = has_dates ? 1 : 0;
    if (columns <= first) throw ParseError(source + ": no value columns", 1, columns);

    RawDataset ds;
    for (std::size_t c = first; c < columns; ++c) ds.variate_names.emplace_back(header[c]);
    const std::size_t n = columns - first;
    std::vector<double> values;
    values.reserve(rows.size() * n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (has_dates) ds.timestamps.push_back(rows[r][0]);
        for (std::size_t c = first; c < columns; ++c) {
            double v = 0.0;
            if (!parse_double(rows[r][c], v)) {
                throw ParseError(source + ": cannot parse '" + rows[r][c] + "' at line " + std::to_string(row_lines[r]) +
                                     ", column " + std::to_string(c + 1),
                                 row_lines[r], c + 1);
            }
            values.push_back(v);
        }
    }
    ds.values = Tensor({rows.size(), n}, std::move(values));
    return ds;
}

RawDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
    return parse_csv(in, path.string());
}

namespace {

void check_split(const char* name, IndexRange r, std::size_t lookback, std::size_t horizon) {
    if (r.size() < lookback + horizon) {
        throw ConfigError(std::string(name) + " split has " + std::to_string(r.size()) + " rows; needs at least " +
                          std::to_string(lookback + horizon) + " (lookback + horizon)");
    }
}

}  // namespace

Splits split_by_sizes(std::size_t total, std::size_t train, std::size_t val, std::size_t test, std::size_t lookback,
                      std::size_t horizon) {
    if (train + val + test > total) {
        throw ConfigError("split sizes " + std::to_string(train) + "/" + std::to_string(val) + "/" +
                          std::to_string(test) + " exceed the " + std::to_string(total) + " available rows");
    }
    Splits s{{0, train}, {train, train + val}, {train + val, train + val + test}};
    check_split("train", s.train, lookback, horizon);
    check_split("validation", s.val, lookback, horizon);
    check_split("test", s.test, lookback, horizon);
    return s;
}

Splits split_chronological(std::size_t total, const SplitRatios& ratios, std::size_t lookback, std::size_t horizon) {
    if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
        throw ConfigError("split ratios must all be positive");
    }
    if (ratios.train + ratios.val + ratios.test > 1.0 + 1e-9) throw ConfigError("split ratios sum to more than 1");
    // The small offset keeps products like 100 * 0.29 from flooring one row short.
    auto rows = [total](double ratio) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(total) * ratio + 1e-9));
    };
    return split_by_sizes(total, rows(ratios.train), rows(ratios.val), rows(ratios.test), lookback, horizon);
}

Standardizer fit_standardizer(const Tensor& values, IndexRange train) {
    if (values.rank() != 2) throw ShapeError("fit_standardizer expects [T, N]");
    if (train.size() == 0 || train.end > values.dim(0)) throw ConfigError("training range is empty or out of bounds");
    const std::size_t n = values.dim(1);
    Standardizer s;
    s.mean.assign(n, 0.0);
    s.std.assign(n, 0.0);
    const double count = static_cast<double>(train.size());
    for (std::size_t v = 0; v < n; ++v) {
        double sum = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) sum += values[t * n + v];
        const double mean = sum / count;
        double var = 0.0;
        for (std::size_t t = train.begin; t < train.end; ++t) {
            const double d = values[t * n + v] - mean;
            var += d * d;
        }
        s.mean[v] = mean;
        s.std[v] = std::max(std::sqrt(var / count), kStdFloor);
    }
    return s;
}

Tensor Standardizer::transform(const Tensor& values) const {
    const std::size_t n = values.shape().back();
    if (n != mean.size()) throw ShapeError("standardizer fit on " + std::to_string(mean.size()) + " variates, got " + std::to_string(n));
    Tensor out = values;
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (d[i] - mean[i % n]) / std[i % n];
    return out;
}

Tensor Standardizer::inverse(const Tensor& values) const {
    const std::size_t n = values.shape().back();
    if (n != mean.size()) throw ShapeError("standardizer fit on " + std::to_string(mean.size()) + " variates, got " + std::to_string(n));
    Tensor out = values;
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = d[i] * std[i % n] + mean[i % n];
    return out;
}

Standardized standardize(const Tensor& values, IndexRange train) {
    Standardizer stats = fit_standardizer(values, train);
    Tensor out = stats.transform(values);
    return {std::move(out), std::move(stats)};
}

std::vector<WindowPair> make_windows(const Tensor& values, IndexRange range, std::size_t lookback,
                                     std::size_t horizon, std::size_t stride) {
    if (values.rank() != 2) throw ShapeError("make_windows expects [T, N]");
    if (stride == 0) throw ConfigError("window stride must be positive");
    if (range.end > values.dim(0)) throw ConfigError("window range exceeds the series length");
    const std::size_t n = values.dim(1);
    std::vector<WindowPair> windows;
    const std::size_t first = std::max(range.begin, lookback);
    for (std::size_t origin = first; origin + horizon <= range.end; origin += stride) {
        const auto data = values.data();
        const auto in_begin = data.begin() + static_cast<std::ptrdiff_t>((origin - lookback) * n);
        const auto mid = data.begin() + static_cast<std::ptrdiff_t>(origin * n);
        const auto out_end = mid + static_cast<std::ptrdiff_t>(horizon * n);
        windows.push_back(WindowPair{Tensor({lookback, n}, std::vector<double>(in_begin, mid)),
                                     Tensor({horizon, n}, std::vector<double>(mid, out_end)), origin});
    }
    return windows;
}

namespace {

Tensor stack(std::span<const WindowPair> windows, std::span<const std::size_t> order, bool inputs) {
    if (order.empty()) throw ShapeError("cannot stack an empty batch");
    const Tensor& first = inputs ? windows[order[0]].input : windows[order[0]].target;
    std::vector<double> data;
    data.reserve(order.size() * first.size());
    for (std::size_t i : order) {
        const Tensor& t = inputs ? windows[i].input : windows[i].target;
        data.insert(data.end(), t.data().begin(), t.data().end());
    }
    return Tensor({order.size(), first.dim(0), first.dim(1)}, std::move(data));
}

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    return order;
}

}  // namespace

Tensor stack_inputs(std::span<const WindowPair> windows, std::span<const std::size_t> order) {
    return stack(windows, order, true);
}
Tensor stack_targets(std::span<const WindowPair> windows, std::span<const std::size_t> order) {
    return stack(windows, order, false);
}
Tensor stack_inputs(std::span<const WindowPair> windows) {
    return stack(windows, identity_order(windows.size()), true);
}
Tensor stack_targets(std::span<const WindowPair> windows) {
    return stack(windows, identity_order(windows.size()), false);
}

RawDataset make_toy_series(const ToySeriesOptions& o) {
    if (o.length == 0 || o.variates == 0) throw ConfigError("toy series needs positive length and variates");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> values(o.length * o.variates);
    for (std::size_t t = 0; t < o.length; ++t) {
        for (std::size_t v = 0; v < o.variates; ++v) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(v) / static_cast<double>(o.variates);
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / o.period + phase;
            values[t * o.variates + v] =
                o.amplitude * std::sin(angle) + o.slope * static_cast<double>(t) + o.noise_std * noise(rng);
        }
    }
    RawDataset ds;
    for (std::size_t v = 0; v < o.variates; ++v) ds.variate_names.push_back("x" + std::to_string(v));
    ds.values = Tensor({o.length, o.variates}, std::move(values));
    return ds;
}

}  // namespace edformer::data
