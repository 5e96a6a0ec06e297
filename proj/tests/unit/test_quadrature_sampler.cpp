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

#include "kitten/quadrature_sampler.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "kitten/error.hpp"
#include "oracles.hpp"

using namespace kitten;
using namespace kitten::sampling;
using model::kPi;

namespace {

model::ModelParams nominal() { return model::default_params(0.95); }

std::vector<double> xs_of(const QuadratureDataset &ds) {
    std::vector<double> out;
    for (const auto &r : ds.records) out.push_back(r.x);
    return out;
}

SamplerOptions fixed_at(double theta) {
    SamplerOptions o;
    o.schedule = PhaseSchedule::Fixed;
    o.fixed_phase = theta;
    return o;
}

}  // namespace

TEST(Sample, VacuumVarianceIsOneHalf) {
    auto p = nominal();
    p.detector.nu = 0.1;
    const auto ds = sample(0.0, p, 50000, 3);
    ASSERT_EQ(ds.records.size(), 50000u);
    double s = 0, s2 = 0;
    for (const auto &r : ds.records) {
        s += r.x;
        s2 += r.x * r.x;
    }
    const double n = 50000.0;
    const double var = s2 / n - (s / n) * (s / n);
    EXPECT_NEAR(var, 0.5, 3.0 * 0.5 * std::sqrt(2.0 / n));
    EXPECT_GT(ds.meta.acceptance_rate, 0.1);
}

TEST(Sample, EmptyDatasetKeepsMetadata) {
    const auto ds = sample(0.3, nominal(), 0, 17);
    EXPECT_TRUE(ds.records.empty());
    EXPECT_EQ(ds.meta.seed, 17u);
    EXPECT_EQ(ds.meta.count, 0u);
    EXPECT_FALSE(ds.meta.config_hash.empty());
    EXPECT_TRUE(ds.meta.config.contains("model"));
}

TEST(Sample, DeterministicAndIndependentOfWorkerCount) {
    SamplerOptions one, four;
    one.workers = 1;
    one.shard_size = 1000;
    four.workers = 4;
    four.shard_size = 1000;
    const auto a = sample(0.3, nominal(), 7300, 42, one);
    const auto b = sample(0.3, nominal(), 7300, 42, four);
    const auto c = sample(0.3, nominal(), 7300, 43, one);
    EXPECT_EQ(a.records, b.records);
    EXPECT_NE(a.records, c.records);
    EXPECT_NE(child_seed(1, 0), child_seed(1, 1));
    EXPECT_NE(child_seed(1, 0), child_seed(2, 0));
}

TEST(Sample, PhaseUniformityChiSquare) {
    const auto ds = sample(0.3, nominal(), 50000, 8);
    std::vector<double> counts(24, 0.0);
    for (const auto &r : ds.records) {
        ASSERT_GE(r.theta, 0.0);
        ASSERT_LT(r.theta, kPi);
        counts[std::min<std::size_t>(23, static_cast<std::size_t>(r.theta / kPi * 24))] += 1.0;
    }
    const double expected = 50000.0 / 24.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 41.64);  // chi-square 99th percentile, 23 dof
}

TEST(Sample, LinearSweepSchedule) {
    SamplerOptions o;
    o.schedule = PhaseSchedule::LinearSweep;
    const auto ds = sample(0.2, nominal(), 100, 1, o);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(ds.records[i].theta, kPi * i / 100.0);
}

TEST(Sample, MatchesIntegratedMarginalCdf) {
    const auto p = nominal();
    for (double z : {0.1, 0.3}) {
        const model::ConditionalWigner w(model::PumpRatio(z), p);
        for (double theta : {0.0, kPi / 4, kPi / 2}) {
            const auto ds = sample(z, p, 100000, 1234, fixed_at(theta));
            const double reach = 14.0 * std::sqrt(w.unconditioned().quadrature_variance(theta));
            const oracle::InverseCdfSampler cdf([&](double q) { return w.marginal(theta, q); }, -reach, reach, 40001);
            const double d = oracle::ks_statistic(xs_of(ds), [&](double q) { return cdf.cdf(q); });
            EXPECT_LT(d, oracle::ks_critical_1pct(100000.0)) << "z=" << z << " theta=" << theta;
        }
    }
}

TEST(Sample, PhotonSubtractedHistogramAgainstInverseCdfOracle) {
    const auto p = nominal();
    const double z = model::pump_ratio_for_squeezing_db(-2.6, p).value();
    const auto ds = sample(z, p, 50000, 77, fixed_at(0.0));
    const auto xs = xs_of(ds);

    // Dip at the origin between the two lobes of the odd-photon marginal.
    auto count_in = [&](double lo, double hi) {
        return static_cast<double>(std::count_if(xs.begin(), xs.end(), [&](double x) { return x >= lo && x < hi; }));
    };
    const double centre = count_in(-0.1, 0.1);
    const double lobes = 0.5 * (count_in(-0.6, -0.4) + count_in(0.4, 0.6));
    EXPECT_LT(centre, lobes);

    const model::ConditionalWigner w(model::PumpRatio(z), p);
    const double reach = 14.0 * std::sqrt(w.unconditioned().quadrature_variance(0.0));
    const oracle::InverseCdfSampler inv([&](double q) { return w.marginal(0.0, q); }, -reach, reach, 40001);
    std::mt19937_64 rng(2718);
    std::vector<double> ref(50000);
    for (auto &v : ref) v = inv.draw(rng);
    const double d = oracle::ks_two_sample(xs, ref);
    EXPECT_LT(d, oracle::ks_critical_1pct(25000.0));
}

TEST(Sample, RejectsInvalidInputs) {
    EXPECT_THROW(sample(1.0, nominal(), 10, 1), DomainError);
    auto p = nominal();
    p.detector.nu = 0.0;
    EXPECT_THAT([&] { sample(0.0, p, 10, 1); },
                ::testing::ThrowsMessage<DomainError>(::testing::HasSubstr("no heralding")));
    EXPECT_THROW(sample(0.2, nominal(), 10, 1, fixed_at(4.0)), ConfigError);
}

TEST(DatasetFile, RoundTripHeaderAndBytes) {
    const auto ds = sample(0.25, nominal(), 2000, 555);
    std::stringstream a, b;
    write_dataset(a, ds);
    write_dataset(b, sample(0.25, nominal(), 2000, 555));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_THAT(a.str(), ::testing::HasSubstr("\"seed\":555"));
    EXPECT_THAT(a.str(), ::testing::HasSubstr("\"config_hash\":\"" + ds.meta.config_hash + "\""));
    EXPECT_THAT(a.str(), ::testing::HasSubstr("\ntheta,x\n"));

    const auto back = read_dataset(a);
    EXPECT_EQ(back.records, ds.records);
    EXPECT_EQ(back.meta.seed, 555u);
    EXPECT_EQ(back.meta.config, ds.meta.config);
}

TEST(DatasetFile, ParseErrorsCarryLineNumbers) {
    std::stringstream bad("# meta: {\"z\":0,\"seed\":1,\"count\":2,\"phase_schedule\":\"uniform\",\"config\":{}}\ntheta,x\n0.1,0.2\n0.1,abc\n");
    EXPECT_THAT([&] { read_dataset(bad); }, ::testing::ThrowsMessage<IoError>(::testing::HasSubstr("line 4")));
    std::stringstream phase("# meta: {\"z\":0,\"seed\":1,\"count\":1,\"phase_schedule\":\"uniform\",\"config\":{}}\ntheta,x\n3.5,0.2\n");
    EXPECT_THROW(read_dataset(phase), IoError);
    std::stringstream nometa("theta,x\n0.1,0.2\n");
    EXPECT_THROW(read_dataset(nometa), IoError);
}

TEST(DatasetFile, FiftyThousandRowsParseQuickly) {
    const auto ds = sample(0.3, nominal(), 50000, 9);
    std::stringstream ss;
    write_dataset(ss, ds);
    const std::string text = ss.str();
    const auto t0 = std::chrono::steady_clock::now();
    std::istringstream in(text);
    const auto back = read_dataset(in);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(back.records.size(), 50000u);
    EXPECT_LT(secs, 1.0);
}
