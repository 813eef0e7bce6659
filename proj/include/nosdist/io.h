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

#ifndef NOSDIST_IO_H_
#define NOSDIST_IO_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "nosdist/core_model.h"

namespace nosdist {

// Shortest round-tripping text for a double ("%.17g").
std::string FormatDouble(double v);

std::vector<std::string> SplitCsvLine(const std::string& line);

// Strict parse of a whole field; throws InvalidArgument naming `what`.
double ParseDouble(const std::string& field, const std::string& what);
std::size_t ParseIndex(const std::string& field, const std::string& what);

// Reads the header and data lines of a CSV stream, skipping blank lines.
// Throws InvalidArgument on ragged rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header, or throws.
  std::size_t Column(const std::string& name) const;
};
CsvTable ReadCsv(std::istream& is);

// `<axis>,value` rows.
void WriteCurveCsv(std::ostream& os, const DistributionCurve& curve);
DistributionCurve ReadCurveCsv(std::istream& is, const nlohmann::json& sidecar);

}  // namespace nosdist

#endif  // NOSDIST_IO_H_
