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
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "kitten/model_core.hpp"

namespace kitten::sampling {

/// Local-oscillator phase per record.
enum class PhaseSchedule {
    UniformRandom,  ///< theta ~ U[0, pi) independently per record
    LinearSweep,    ///< theta_i = pi * i / n
    Fixed,          ///< every record at SamplerOptions::fixed_phase
};

const char *to_string(PhaseSchedule s);
PhaseSchedule phase_schedule_from_string(const std::string &s);

struct SamplerOptions {
    PhaseSchedule schedule = PhaseSchedule::UniformRandom;
    double fixed_phase = 0.0;
    std::size_t shard_size = 4096;
    unsigned workers = 0;  ///< 0: hardware concurrency; output never depends on it
};

struct QuadratureRecord {
    double theta;
    double x;
    bool operator==(const QuadratureRecord &) const = default;
};

struct DatasetMeta {
    double z = 0.0;
    std::uint64_t seed = 0;
    std::size_t count = 0;
    PhaseSchedule schedule = PhaseSchedule::UniformRandom;
    double acceptance_rate = 1.0;
    /// Configuration snapshot; the sampler fills in the model parameters, the
    /// CLI replaces it with the full experiment configuration.
    nlohmann::json config;
    std::string config_hash;
};

struct QuadratureDataset {
    std::vector<QuadratureRecord> records;
    DatasetMeta meta;
};

/// Seed of shard `index` derived from the top-level seed (SplitMix64).
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

/// n i.i.d. homodyne records from the conditional state at pump ratio z,
/// drawn by exact rejection sampling from the analytic marginals.
QuadratureDataset sample(double z, const model::ModelParams &params, std::size_t n, std::uint64_t seed,
                         const SamplerOptions &options = {});

void write_dataset(std::ostream &os, const QuadratureDataset &ds);
void emit_dataset(const QuadratureDataset &ds, const std::filesystem::path &path);
QuadratureDataset read_dataset(std::istream &is);
QuadratureDataset load_dataset(const std::filesystem::path &path);

}  // namespace kitten::sampling
