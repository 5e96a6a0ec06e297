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

#include <random>

#include "kitten/model_core.hpp"

namespace kitten::oracle {

struct RandomCase {
    model::ModelParams params;
    double z;
};

/// Random physically valid configuration with a well-defined conditional state.
template <class Rng>
RandomCase random_case(Rng &rng) {
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    model::ModelParams p;
    p.cavity.gamma_t = u(20e6, 100e6);
    p.cavity.gamma_l = u(0.0, 5e6);
    p.detector.window = u(0.5e-9, 2e-9);
    p.detector.bandwidth = p.cavity.zeta0() / (2.0 * model::kPi) * u(0.5, 2.0);
    p.detector.eta0 = u(0.2, 1.0);
    p.detector.eta_f = u(0.1, 1.0);
    p.detector.nu = u(0.0, 2e-9);
    p.loss.tau = u(0.85, 0.995);
    p.loss.tau_h = u(0.5, 1.0);
    p.loss.tau_s0 = u(0.8, 1.0);
    p.loss.kappa = u(0.0, 1.2);
    const double z = u(0.05, 0.6);
    return {p, z};
}

}  // namespace kitten::oracle
