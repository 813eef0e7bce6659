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

#ifndef NOSDIST_CLI_RUN_H_
#define NOSDIST_CLI_RUN_H_

#include <filesystem>
#include <ostream>
#include <string>

#include "nosdist/cli/config.h"

namespace nosdist::cli {

// Hex SHA-256 of a file's bytes.
std::string FileDigest(const std::filesystem::path& path);

// Runs one pipeline, writing artifacts and manifest.json into config.out.
// On failure writes error.json there instead and returns nonzero.
int Run(const RunConfig& config, std::ostream& err);

// Command-line entry point.
int Main(int argc, char** argv);

}  // namespace nosdist::cli

#endif  // NOSDIST_CLI_RUN_H_
