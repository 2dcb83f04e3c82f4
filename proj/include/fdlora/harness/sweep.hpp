// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdlora/harness/experiment.hpp"

namespace fdlora {

enum class SweepAxis { kRounds, kInnerSteps, kSyncEvery, kAlpha, kClients, kFusionMode };

std::string_view to_string(SweepAxis axis);
/// Accepts T, K, H, alpha, N, fusion_mode (and the long field names).
SweepAxis parse_sweep_axis(std::string_view name);

struct SweepSpec {
    SweepAxis axis = SweepAxis::kSyncEvery;
    /// Values as text, e.g. "10", "inf", "0.5", "AdaFusion".
    std::vector<std::string> values;
    ExperimentConfig base;
    int repeats = 5;
    /// Runs executed concurrently.
    std::size_t jobs = 1;
};

/// `base` with `axis` set to `value`. Throws ConfigError for a bad value.
ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value);

/// Seed of repeat `r`: base_seed + 1000 * r.
std::uint64_t repeat_seed(std::uint64_t base_seed, int repeat);

struct SweepRun {
    std::string run_id;
    std::string value;
    int repeat = 0;
    std::uint64_t seed = 0;
    /// Empty on failure.
    std::optional<RunReport> report;
    std::optional<double> partition_imbalance;
    std::string error;
};

struct SweepAggregate {
    std::string value;
    std::size_t runs = 0;
    std::size_t failed = 0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    double mean_loss = 0.0;
    double std_loss = 0.0;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    std::vector<SweepAggregate> aggregates;
    /// Per-client and mean rows of every successful run.
    std::vector<MetricsRecord> records;
    std::size_t failures() const;
};

/// One run per (value, repeat). A failing run is recorded and the sweep
/// continues. Aggregates are mean and sample std over the repeats' mean
/// rows. With `out_dir`, each run writes its outputs to out_dir/<run_id>/
/// and the sweep writes metrics.csv and summary.csv at the top.
SweepResult run_sweep(const SweepSpec& spec,
                      const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::string summary_csv(SweepAxis axis, const std::vector<SweepAggregate>& aggregates);

}  // namespace fdlora
