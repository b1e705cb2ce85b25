#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "arcs/error.hpp"
#include "arcs/simulate.hpp"

namespace arcs::simulate {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
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

bool is_missing(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

}  // namespace

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return j;
    return std::nullopt;
}

std::size_t CsvTable::column(std::string_view name) const {
    auto j = find(name);
    require(j.has_value(), ErrorCode::calibration,
            "column '" + std::string(name) + "' not found in data");
    return *j;
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::io, "CSV input is empty");
    for (auto name : split(line)) table.header.emplace_back(name);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        require(cells.size() == table.header.size(), ErrorCode::io,
                "CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                    " fields, header has " + std::to_string(table.header.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (is_missing(cells[j])) {
                row[j] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            auto [ptr, ec] = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), row[j]);
            require(ec == std::errc{} && ptr == cells[j].data() + cells[j].size(), ErrorCode::io,
                    "CSV line " + std::to_string(line_no) + ", column '" + table.header[j] +
                        "': '" + std::string(cells[j]) + "' is not a number");
        }
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open '" + path + "'");
    return read_csv(in);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j)
        out << (j ? "," : "") << table.header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < table.values.cols(); ++j)
            out << (j ? "," : "") << format_double(table.values(i, j));
        out << '\n';
    }
}

void write_per_rep(std::ostream& out, const ReplicationResult& result) {
    const auto& s = result.summary;
    const std::string prefix_tail = std::string(engine::method_name(s.method)) + "," +
                                    std::string(example_name(s.example)) + "," +
                                    std::to_string(s.n) + "," + std::to_string(s.p) + "," +
                                    std::to_string(s.N) + ",";
    for (const auto& r : result.records) {
        const std::string prefix = std::to_string(r.rep) + "," + prefix_tail;
        if (!r.ok) {
            out << prefix << "failed,1\n";
            continue;
        }
        const auto& m = r.metrics;
        out << prefix << "imb_m," << format_double(m.imb_m) << '\n';
        out << prefix << "dncm," << format_double(m.dncm) << '\n';
        out << prefix << "dnc," << format_double(m.dnc) << '\n';
        out << prefix << "imb_phi," << format_double(m.imb_phi) << '\n';
        out << prefix << "tau_hat," << format_double(m.tau_hat) << '\n';
        if (s.has_selection && !m.tpr.empty()) {
            out << prefix << "final_tpr," << format_double(m.tpr.back()) << '\n';
            out << prefix << "final_fpr," << format_double(m.fpr.back()) << '\n';
        }
    }
}

void write_trajectory(std::ostream& out, const ReplicationResult& result) {
    const auto& s = result.summary;
    if (!s.has_selection) return;
    const std::string method(engine::method_name(s.method));
    for (const auto& r : result.records) {
        if (!r.ok) continue;
        for (std::size_t b = 0; b < r.metrics.tpr.size(); ++b)
            out << r.rep << ',' << method << ',' << b << ',' << format_double(r.metrics.tpr[b])
                << ',' << format_double(r.metrics.fpr[b]) << '\n';
    }
}

void write_summary_row(std::ostream& out, const ReplicationSummary& s) {
    out << engine::method_name(s.method) << ',' << example_name(s.example) << ',' << s.n << ','
        << s.p << ',' << s.N << ',' << s.reps << ',' << s.failures << ','
        << format_double(s.imb_m) << ',' << format_double(s.dncm) << ','
        << format_double(s.dnc) << ',' << format_double(s.imb_phi) << ','
        << format_double(s.tau_mean) << ',' << format_double(s.tau_sd_scaled) << ',';
    if (s.has_selection)
        out << format_double(s.final_tpr) << ',' << format_double(s.final_fpr);
    else
        out << ',';
    out << '\n';
}

}  // namespace arcs::simulate
