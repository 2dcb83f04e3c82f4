// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdlora/datagen/synthetic.hpp"
#include "fdlora/federation/run.hpp"

namespace fdlora {

/// A run description: the federation config plus where the data comes from.
/// Without `data_path` the two-skill synthetic task is generated; its client
/// count, alpha and seed always follow `federation`.
struct ExperimentConfig {
    FederationConfig federation;
    TwoSkillSpec task;
    std::optional<std::filesystem::path> data_path;
};

/// Top-level keys are FederationConfig fields, plus optional "task" (an
/// object of TwoSkillSpec fields) and "data" (a JSONL path, resolved
/// relative to `base_dir`).
ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig base = {},
                                      const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base = {});
nlohmann::ordered_json to_json(const ExperimentConfig& exp);

/// The two-skill task parameters actually generated for this experiment.
TwoSkillSpec effective_task(const ExperimentConfig& exp);

struct ExperimentData {
    std::vector<ClientShard> shards;
    std::size_t num_classes = 0;
};

/// Loads or generates the data and splits it across clients.
ExperimentData prepare_data(const ExperimentConfig& exp);

RunResult run_experiment(const ExperimentConfig& exp, const RunOptions& options = {});

/// One CSV row.
struct MetricsRecord {
    std::string run_id;
    /// A client id, or "mean".
    std::string client_id;
    std::int64_t round = 0;
    double accuracy = 0.0;
    double f1 = 0.0;
    double loss = 0.0;
    std::int64_t bytes_communicated = 0;
};

inline constexpr const char* kMetricsHeader =
    "run_id,client_id,round,accuracy,f1,loss,bytes_communicated";

/// Per-client rows followed by a "mean" row, all at round T. A client's
/// bytes are its global-adapter uploads plus downloads.
std::vector<MetricsRecord> metrics_records(const std::string& run_id, const RunReport& report);
std::string metrics_csv(const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);

/// Writes metrics.csv, report.json, manifest.json and partition.json.
void write_run_outputs(const std::filesystem::path& dir, const std::string& run_id,
                       const RunResult& result);

/// JSON text with a trailing newline.
std::string dump_json(const nlohmann::ordered_json& j);

}  // namespace fdlora
