#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucut/model.hpp"

namespace ucut {

// 17 significant digits, enough to round-trip any double.
std::string format_double(double x);

// Pretty-printed JSON (two-space indent) with floats written by format_double
// and non-finite floats as null. Ends with a newline.
std::string dump_json(const nlohmann::ordered_json& j);

struct CsvRead {
    ObservationSet obs;
    std::optional<std::int64_t> header_m;
    // Set when a flag m overrode a different header m.
    std::optional<std::string> warning;
};

// Observation table: optional `# key=value` comment lines (`# m=10000`), a
// header naming `count` or `cfr` plus optional `id`, `s_true`, `label`
// columns, then one row per observation. Errors name the offending line.
CsvRead read_observations(std::istream& in, std::optional<std::int64_t> m_flag = std::nullopt);
CsvRead read_observations_file(const std::string& path,
                               std::optional<std::int64_t> m_flag = std::nullopt);

// Writes `# m=...` plus the given comment lines, then id,count (or id,cfr)
// and s_true,label when truth is present.
void write_observations(std::ostream& out, const ObservationSet& obs,
                        const std::vector<std::string>& comments = {});

}  // namespace ucut
