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

#include "kitten/series_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "kitten/error.hpp"

namespace kitten::io {

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string config_hash(const nlohmann::json &config) { return fnv1a_hex(config.dump()); }

nlohmann::json to_json(const model::ModelParams &p) {
    return {
        {"cavity", {{"gamma_t", p.cavity.gamma_t}, {"gamma_l", p.cavity.gamma_l}, {"fsr", p.cavity.fsr}}},
        {"detector",
         {{"eta0", p.detector.eta0},
          {"eta_f", p.detector.eta_f},
          {"bandwidth", p.detector.bandwidth},
          {"window", p.detector.window},
          {"nu", p.detector.nu}}},
        {"loss", {{"tau", p.loss.tau}, {"tau_h", p.loss.tau_h}, {"tau_s0", p.loss.tau_s0}, {"kappa", p.loss.kappa}}},
    };
}

model::ModelParams model_params_from_json(const nlohmann::json &j) {
    model::ModelParams p;
    try {
        const auto &c = j.at("cavity");
        p.cavity = {c.at("gamma_t").get<double>(), c.at("gamma_l").get<double>(), c.at("fsr").get<double>()};
        const auto &d = j.at("detector");
        p.detector = {d.at("eta0").get<double>(), d.at("eta_f").get<double>(), d.at("bandwidth").get<double>(),
                      d.at("window").get<double>(), d.at("nu").get<double>()};
        const auto &l = j.at("loss");
        p.loss = {l.at("tau").get<double>(), l.at("tau_h").get<double>(), l.at("tau_s0").get<double>(),
                  l.at("kappa").get<double>()};
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("model parameters: {}", e.what()));
    }
    return p;
}

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<double> parse_numbers(std::string_view line, std::size_t expected, std::size_t lineno) {
    std::vector<double> out;
    out.reserve(expected);
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t end = line.find(',', pos);
        if (end == std::string_view::npos) end = line.size();
        auto cell = line.substr(pos, end - pos);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
            throw IoError(fmt::format("line {}: cannot parse '{}' as a number", lineno, cell));
        }
        out.push_back(v);
        pos = end + 1;
    }
    if (out.size() != expected) {
        throw IoError(fmt::format("line {}: expected {} columns, found {}", lineno, expected, out.size()));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace kitten::io
