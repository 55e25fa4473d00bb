#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spikemon/error.hpp"
#include "spikemon/io.hpp"

namespace spikemon {

enum class Sensor { PD1, PD2, BD };
enum class Condition { Healthy, Defective };
enum class PatchLocation { BL, BR, TL, TR };

inline std::string to_string(Sensor s) {
    switch (s) {
        case Sensor::PD1: return "PD1";
        case Sensor::PD2: return "PD2";
        case Sensor::BD: return "BD";
    }
    return "?";
}

inline Sensor parse_sensor(std::string_view s) {
    if (s == "PD1" || s == "pd1") return Sensor::PD1;
    if (s == "PD2" || s == "pd2") return Sensor::PD2;
    if (s == "BD" || s == "bd") return Sensor::BD;
    throw InputError("unknown sensor '" + std::string(s) + "'");
}

inline std::string to_string(Condition c) { return c == Condition::Healthy ? "healthy" : "defective"; }

inline std::string to_string(PatchLocation p) {
    switch (p) {
        case PatchLocation::BL: return "BL";
        case PatchLocation::BR: return "BR";
        case PatchLocation::TL: return "TL";
        case PatchLocation::TR: return "TR";
    }
    return "?";
}

struct SeriesMetadata {
    double power_reduction_percent = 0.0;
    int defect_layer_count = 0;
    PatchLocation patch_location = PatchLocation::BL;
};

// Per-layer mean sensor values, keyed (and therefore ordered) by layer number.
struct SignalSeries {
    Sensor sensor = Sensor::PD1;
    Condition condition = Condition::Healthy;
    std::map<int, double> values;
    SeriesMetadata metadata{};

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    int first_layer() const { return values.begin()->first; }
    int last_layer() const { return values.rbegin()->first; }

    std::vector<int> layers() const {
        std::vector<int> out;
        out.reserve(values.size());
        for (const auto& [l, _] : values) out.push_back(l);
        return out;
    }
    std::vector<double> samples() const {
        std::vector<double> out;
        out.reserve(values.size());
        for (const auto& [_, v] : values) out.push_back(v);
        return out;
    }

    // Same layers and metadata, new values (in layer order).
    SignalSeries with_samples(const std::vector<double>& v) const {
        if (v.size() != values.size()) throw InputError("series: sample count mismatch");
        SignalSeries out = *this;
        std::size_t k = 0;
        for (auto& [_, x] : out.values) x = v[k++];
        return out;
    }

    // Raw sensor data must be finite and non-negative; filtered data only finite.
    void validate(bool allow_negative = false) const {
        for (const auto& [l, v] : values) {
            if (!std::isfinite(v)) throw InputError("series: non-finite value at layer " + std::to_string(l));
            if (!allow_negative && v < 0.0)
                throw InputError("series: negative value at layer " + std::to_string(l));
        }
    }
};

struct CsvSchema {
    std::string layer_column = "layer";
    std::string value_column = "value";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace detail

// Parses a `layer,value` CSV. Lines starting with '#' and blank lines are skipped;
// error rows are 1-based physical line numbers.
inline SignalSeries parse_layer_series(std::string_view text, const CsvSchema& schema = {}) {
    SignalSeries out;
    std::optional<std::size_t> layer_idx, value_idx;
    std::size_t ncols = 0;
    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++row;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;

        auto cells = detail::split_csv(line);
        if (!layer_idx) {
            ncols = cells.size();
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c] == schema.layer_column) layer_idx = c;
                if (cells[c] == schema.value_column) value_idx = c;
            }
            if (!layer_idx) throw ParseError("missing column '" + schema.layer_column + "'", row);
            if (!value_idx) throw ParseError("missing column '" + schema.value_column + "'", row);
            continue;
        }
        if (cells.size() != ncols) throw ParseError("expected " + std::to_string(ncols) + " columns", row);
        auto layer = detail::parse_number<int>(cells[*layer_idx]);
        if (!layer) throw ParseError("non-integer layer '" + std::string(cells[*layer_idx]) + "'", row);
        auto value = detail::parse_number<double>(cells[*value_idx]);
        if (!value || !std::isfinite(*value))
            throw ParseError("non-numeric value '" + std::string(cells[*value_idx]) + "'", row);
        if (*value < 0.0) throw ParseError("negative value", row);
        if (!out.values.emplace(*layer, *value).second)
            throw ParseError("duplicate layer " + std::to_string(*layer), row);
    }
    if (!layer_idx) throw ParseError("empty file: no header row");
    return out;
}

inline SignalSeries load_layer_series(const std::filesystem::path& path, const CsvSchema& schema = {}) {
    if (!std::filesystem::exists(path)) throw ParseError("no such file: " + path.string());
    try {
        return parse_layer_series(read_file(path), schema);
    } catch (const ParseError& e) {
        throw ParseError::with_context(path.string(), e);
    }
}

inline std::string format_layer_series(const SignalSeries& s, const std::vector<std::string>& comments = {}) {
    std::ostringstream out;
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "layer,value\n";
    for (const auto& [l, v] : s.values) out << l << ',' << fmt_exact(v) << '\n';
    return out.str();
}

}  // namespace spikemon
