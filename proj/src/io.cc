// Copyright 2026 The nosdist Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nosdist/io.h"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "nosdist/errors.h"

namespace nosdist {

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  out.push_back(field);
  return out;
}

double ParseDouble(const std::string& field, const std::string& what) {
  if (field.empty()) throw InvalidArgument("empty value for " + what);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  // Underflow to a subnormal is fine; overflow is not.
  if (end != field.c_str() + field.size() || (errno == ERANGE && std::isinf(v))) {
    throw InvalidArgument("bad number '" + field + "' for " + what);
  }
  return v;
}

std::size_t ParseIndex(const std::string& field, const std::string& what) {
  if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos) {
    throw InvalidArgument("bad index '" + field + "' for " + what);
  }
  return static_cast<std::size_t>(std::stoull(field));
}

std::size_t CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidArgument("missing CSV column " + name);
}

CsvTable ReadCsv(std::istream& is) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = SplitCsvLine(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidArgument("CSV input has no header");
  return table;
}

void WriteCurveCsv(std::ostream& os, const DistributionCurve& curve) {
  os << "grid,value\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << FormatDouble(curve.grid()[i]) << ',' << FormatDouble(curve.values()[i])
       << '\n';
  }
}

DistributionCurve ReadCurveCsv(std::istream& is, const nlohmann::json& sidecar) {
  const CsvTable table = ReadCsv(is);
  if (table.header != std::vector<std::string>{"grid", "value"}) {
    throw InvalidArgument("curve CSV header must be grid,value");
  }
  std::vector<double> grid;
  std::vector<double> values;
  for (const auto& row : table.rows) {
    grid.push_back(ParseDouble(row[0], "grid"));
    values.push_back(ParseDouble(row[1], "value"));
  }
  std::vector<MassPoint> masses;
  for (const auto& m : sidecar.value("mass_points", nlohmann::json::array())) {
    masses.push_back({m.at("location").get<double>(), m.at("jump").get<double>()});
  }
  return DistributionCurve(std::move(grid), std::move(values),
                           CurveKindFromString(sidecar.at("kind").get<std::string>()),
                           std::move(masses), sidecar.value("axis", "grid"));
}

}  // namespace nosdist
