// Copyright 2026 The asynppg Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace asynppg {

// Shortest decimal string that parses back to exactly the same double.
// Used for every float we emit (CSV, JSON) so rerun artifacts are byte-stable.
std::string format_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Joins cells with commas and terminates the line; no quoting (cells never
// contain commas here).
std::string csv_row(const std::vector<std::string>& cells);

} // namespace asynppg
