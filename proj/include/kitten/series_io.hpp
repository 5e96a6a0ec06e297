// Copyright 2026 The Kitten Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kitten/model_core.hpp"

namespace kitten::io {

#ifdef KITTEN_VERSION
inline constexpr std::string_view kToolVersion = KITTEN_VERSION;
#else
inline constexpr std::string_view kToolVersion = "0.0.0";
#endif

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash of the canonical (sorted-key) JSON dump.
std::string config_hash(const nlohmann::json &config);

nlohmann::json to_json(const model::ModelParams &p);
model::ModelParams model_params_from_json(const nlohmann::json &j);

/// Shortest text that reads back to the same double.
std::string fmt_double(double v);

/// Parses a comma-separated row of exactly `expected` numbers. Errors carry
/// the line number.
std::vector<double> parse_numbers(std::string_view line, std::size_t expected, std::size_t lineno);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view content);

}  // namespace kitten::io
