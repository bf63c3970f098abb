// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0
//
// Result tables. CSV columns: corpus, technique, source, wer, one column
// per metric (in order of first appearance across the rows), seed. Numbers
// are written in shortest round-trip form so a parse recovers them exactly.

#pragma once

#include <string>
#include <vector>

#include "asrser/harness/experiment.hpp"

namespace asrser::harness {

enum class ReportFormat { csv, markdown };

ReportFormat parse_report_format(const std::string& name);

/// Throws std::invalid_argument on an empty row list.
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format);
void write_report(const std::string& path, const std::vector<ResultRow>& rows, ReportFormat format);

/// Inverse of the CSV format. Empty metric cells are omitted from the row.
std::vector<ResultRow> parse_csv_report(const std::string& text);
std::vector<ResultRow> read_csv_report(const std::string& path);

}  // namespace asrser::harness
