// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

namespace asrser::harness {

namespace {

std::vector<std::string> metric_columns(const std::vector<ResultRow>& rows)
{
    std::vector<std::string> cols;
    for (const auto& r : rows) {
        for (const auto& [name, value] : r.metrics) {
            if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
        }
    }
    return cols;
}

const double* find_metric(const ResultRow& r, const std::string& name)
{
    for (const auto& [k, v] : r.metrics) {
        if (k == name) return &v;
    }
    return nullptr;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_number)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw std::invalid_argument(fmt::format("report line {}: unterminated quote", line_number));
    out.push_back(std::move(cur));
    return out;
}

double parse_double(const std::string& s, std::size_t line_number)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument(fmt::format("report line {}: '{}' is not a number", line_number, s));
    }
    return v;
}

bool is_fold_metric(const std::string& name) { return name.find('@') != std::string::npos; }

// Percentages for rates and accuracies, plain values otherwise.
std::string markdown_cell(const std::string& metric, double v)
{
    if (metric.rfind("Acc", 0) == 0) return fmt::format("{:.2f}", v * 100.0);
    return fmt::format("{:.3f}", v);
}

}  // namespace

ReportFormat parse_report_format(const std::string& name)
{
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw std::invalid_argument("unknown report format '" + name + "' (expected csv or markdown)");
}

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format)
{
    if (rows.empty()) throw std::invalid_argument("report: no rows");
    auto cols = metric_columns(rows);
    std::string out;
    if (format == ReportFormat::csv) {
        out += "corpus,technique,source,wer";
        for (const auto& c : cols) out += "," + csv_field(c);
        out += ",seed\n";
        for (const auto& r : rows) {
            out += csv_field(r.corpus) + "," + csv_field(r.technique) + "," + csv_field(r.source) + ",";
            if (r.wer) out += fmt::format("{}", *r.wer);
            for (const auto& c : cols) {
                out += ",";
                if (const double* v = find_metric(r, c)) out += fmt::format("{}", *v);
            }
            out += fmt::format(",{}\n", r.seed);
        }
        return out;
    }

    cols.erase(std::remove_if(cols.begin(), cols.end(), is_fold_metric), cols.end());
    out += "| Corpus | Technique | Source | WER (%) |";
    for (const auto& c : cols) out += fmt::format(" {}{} |", c, c.rfind("Acc", 0) == 0 ? " (%)" : "");
    out += " Seed |\n|---|---|---|---:|";
    for (std::size_t i = 0; i < cols.size(); ++i) out += "---:|";
    out += "---:|\n";
    for (const auto& r : rows) {
        out += fmt::format("| {} | {} | {} | {} |", r.corpus, r.technique, r.source,
                           r.wer ? fmt::format("{:.2f}", *r.wer * 100.0) : std::string("-"));
        for (const auto& c : cols) {
            const double* v = find_metric(r, c);
            out += fmt::format(" {} |", v ? markdown_cell(c, *v) : std::string("-"));
        }
        out += fmt::format(" {} |\n", r.seed);
    }
    return out;
}

void write_report(const std::string& path, const std::vector<ResultRow>& rows, ReportFormat format)
{
    std::string text = format_report(rows, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report " + path);
    out << text;
    if (!out) throw std::runtime_error("failed writing report " + path);
}

std::vector<ResultRow> parse_csv_report(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("report: empty input");
    auto header = split_csv_line(line, 1);
    if (header.size() < 5 || header[0] != "corpus" || header[1] != "technique" || header[2] != "source" ||
        header[3] != "wer" || header.back() != "seed") {
        throw std::invalid_argument("report line 1: unexpected header");
    }
    std::vector<ResultRow> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto f = split_csv_line(line, n);
        if (f.size() != header.size()) {
            throw std::invalid_argument(fmt::format("report line {}: {} fields, header has {}", n, f.size(), header.size()));
        }
        ResultRow r;
        r.corpus = f[0];
        r.technique = f[1];
        r.source = f[2];
        if (!f[3].empty()) r.wer = parse_double(f[3], n);
        for (std::size_t c = 4; c + 1 < f.size(); ++c) {
            if (!f[c].empty()) r.metrics.emplace_back(header[c], parse_double(f[c], n));
        }
        auto [ptr, ec] = std::from_chars(f.back().data(), f.back().data() + f.back().size(), r.seed);
        if (ec != std::errc() || ptr != f.back().data() + f.back().size()) {
            throw std::invalid_argument(fmt::format("report line {}: bad seed '{}'", n, f.back()));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_csv_report(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open report " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv_report(ss.str());
}

}  // namespace asrser::harness
