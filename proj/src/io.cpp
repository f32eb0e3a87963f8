#include "ucut/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ucut {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void emit(const nlohmann::ordered_json& j, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
    if (j.is_number_float()) {
        const double x = j.get<double>();
        out += std::isfinite(x) ? format_double(x) : "null";
    } else if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += pad + nlohmann::ordered_json(key).dump() + ": ";
            emit(value, depth + 1, out);
        }
        out += "\n" + close_pad + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t k = 0; k < j.size(); ++k) {
            if (k) out += ",\n";
            out += pad;
            emit(j[k], depth + 1, out);
        }
        out += "\n" + close_pad + "]";
    } else {
        out += j.dump();
    }
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& j) {
    std::string out;
    emit(j, 0, out);
    out += '\n';
    return out;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw Error("line " + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(const std::string& s, std::size_t line, const char* what) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        fail(line, std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

double parse_real(const std::string& s, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(line, std::string("bad ") + what + " '" + s + "'");
    }
}

}  // namespace

CsvRead read_observations(std::istream& in, std::optional<std::int64_t> m_flag) {
    std::optional<std::int64_t> header_m;
    std::vector<std::string> columns;
    int col_id = -1, col_count = -1, col_cfr = -1, col_s = -1, col_label = -1;
    std::vector<std::string> ids;
    std::vector<std::int64_t> counts;
    std::vector<double> ratios;
    std::vector<Truth> truth;
    std::vector<std::size_t> row_lines;

    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream ss(line.substr(1));
            std::string token;
            while (ss >> token) {
                if (token.rfind("m=", 0) == 0) header_m = parse_int(token.substr(2), line_no, "m");
            }
            continue;
        }
        auto fields = split_fields(line);
        if (columns.empty()) {
            columns = fields;
            for (int j = 0; j < static_cast<int>(columns.size()); ++j) {
                const auto& c = columns[static_cast<std::size_t>(j)];
                if (c == "id") col_id = j;
                else if (c == "count") col_count = j;
                else if (c == "cfr") col_cfr = j;
                else if (c == "s_true") col_s = j;
                else if (c == "label") col_label = j;
            }
            if (col_count < 0 && col_cfr < 0) fail(line_no, "header needs a count or cfr column");
            if ((col_s < 0) != (col_label < 0)) fail(line_no, "s_true and label come together");
            continue;
        }
        if (fields.size() != columns.size()) {
            fail(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        auto at = [&](int j) { return fields[static_cast<std::size_t>(j)]; };
        row_lines.push_back(line_no);
        if (col_id >= 0) ids.push_back(at(col_id));
        if (col_count >= 0) {
            counts.push_back(parse_int(at(col_count), line_no, "count"));
        } else {
            const double r = parse_real(at(col_cfr), line_no, "cfr");
            if (!(r >= 0.0 && r <= 1.0)) fail(line_no, "cfr outside [0, 1]");
            ratios.push_back(r);
        }
        if (col_s >= 0) {
            Truth t;
            t.s = parse_real(at(col_s), line_no, "s_true");
            try {
                t.label = label_from_string(at(col_label));
            } catch (const Error& e) {
                fail(line_no, e.what());
            }
            truth.push_back(t);
        }
    }
    if (columns.empty()) throw Error("missing header line");

    CsvRead out{ObservationSet::from_ratios({0.0}), header_m, std::nullopt};
    if (col_count >= 0) {
        std::optional<std::int64_t> m = m_flag ? m_flag : header_m;
        if (!m) throw Error("count data needs m (flag or '# m=' header)");
        if (m_flag && header_m && *m_flag != *header_m) {
            out.warning = "m flag " + std::to_string(*m_flag) + " overrides header m=" +
                          std::to_string(*header_m);
        }
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] < 0 || counts[i] > *m) {
                fail(row_lines[i], "count " + std::to_string(counts[i]) + " outside [0, " +
                                       std::to_string(*m) + "]");
            }
        }
        out.obs = ObservationSet(*m, std::move(counts), std::move(ids), std::move(truth));
    } else {
        out.obs = ObservationSet::from_ratios(std::move(ratios), std::move(ids), std::move(truth));
    }
    return out;
}

CsvRead read_observations_file(const std::string& path, std::optional<std::int64_t> m_flag) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_observations(in, m_flag);
}

void write_observations(std::ostream& out, const ObservationSet& obs,
                        const std::vector<std::string>& comments) {
    if (obs.has_counts()) out << "# m=" << *obs.m() << '\n';
    for (const auto& c : comments) out << "# " << c << '\n';
    out << (obs.has_counts() ? "id,count" : "id,cfr");
    if (obs.has_truth()) out << ",s_true,label";
    out << '\n';
    for (std::size_t i = 0; i < obs.size(); ++i) {
        out << obs.id(i) << ',';
        if (obs.has_counts()) {
            out << obs.counts()[i];
        } else {
            out << format_double(obs.ratios()[i]);
        }
        if (obs.has_truth()) {
            out << ',' << format_double(obs.truth()[i].s) << ',' << to_string(obs.truth()[i].label);
        }
        out << '\n';
    }
}

}  // namespace ucut
