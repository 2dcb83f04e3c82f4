// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/harness/experiment.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "fdlora/common/io.hpp"
#include "fdlora/datagen/jsonl.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

std::size_t task_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("config: task." + key + " must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

double task_double(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: task." + key + " must be a number");
    return v.get<double>();
}

TwoSkillSpec task_from_json(const nlohmann::json& j, TwoSkillSpec t) {
    if (!j.is_object()) throw ConfigError("config: 'task' must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "num_classes") t.num_classes = task_count(v, key);
        else if (key == "shared_dim") t.shared_dim = task_count(v, key);
        else if (key == "private_dim") t.private_dim = task_count(v, key);
        else if (key == "shared_per_class") t.shared_per_class = task_count(v, key);
        else if (key == "private_per_client") t.private_per_client = task_count(v, key);
        else if (key == "shared_noise") t.shared_noise = task_double(v, key);
        else if (key == "private_noise") t.private_noise = task_double(v, key);
        else if (key == "private_separation") t.private_separation = task_double(v, key);
        else if (key == "equal_size") {
            if (!v.is_boolean()) throw ConfigError("config: task.equal_size must be a boolean");
            t.equal_size = v.get<bool>();
        } else {
            throw ConfigError("config: unknown task key '" + key + "'");
        }
    }
    return t;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

}  // namespace

ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig base,
                                      const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    nlohmann::json fed = j;
    if (j.contains("task")) {
        base.task = task_from_json(j.at("task"), base.task);
        fed.erase("task");
    }
    if (j.contains("data")) {
        if (!j.at("data").is_string()) throw ConfigError("config: 'data' must be a path string");
        std::filesystem::path p = j.at("data").get<std::string>();
        base.data_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        fed.erase("data");
    }
    base.federation = config_from_json(fed, base.federation);
    return base;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
    const std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return experiment_from_json(j, std::move(base), path.parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& exp) {
    nlohmann::ordered_json j = to_json(exp.federation);
    if (exp.data_path) {
        j["data"] = exp.data_path->string();
    } else {
        const TwoSkillSpec& t = exp.task;
        nlohmann::ordered_json tj;
        tj["num_classes"] = t.num_classes;
        tj["shared_dim"] = t.shared_dim;
        tj["private_dim"] = t.private_dim;
        tj["shared_per_class"] = t.shared_per_class;
        tj["private_per_client"] = t.private_per_client;
        tj["shared_noise"] = t.shared_noise;
        tj["private_noise"] = t.private_noise;
        tj["private_separation"] = t.private_separation;
        tj["equal_size"] = t.equal_size;
        j["task"] = std::move(tj);
    }
    return j;
}

TwoSkillSpec effective_task(const ExperimentConfig& exp) {
    TwoSkillSpec t = exp.task;
    t.num_clients = exp.federation.num_clients;
    t.alpha = exp.federation.dirichlet_alpha;
    t.seed = exp.federation.seed;
    return t;
}

ExperimentData prepare_data(const ExperimentConfig& exp) {
    exp.federation.validate();
    if (exp.data_path) {
        const Dataset data = load_jsonl(*exp.data_path);
        return {dirichlet_partition(data, partition_spec(exp.federation)), num_classes(data)};
    }
    FederatedTask task = make_two_skill_task(effective_task(exp));
    return {std::move(task.shards), task.num_classes};
}

RunResult run_experiment(const ExperimentConfig& exp, const RunOptions& options) {
    if (exp.data_path) {
        return run_fdlora(exp.federation, load_jsonl(*exp.data_path), options);
    }
    const ExperimentData data = prepare_data(exp);
    return run_fdlora(exp.federation, data.shards, data.num_classes, options);
}

std::vector<MetricsRecord> metrics_records(const std::string& run_id, const RunReport& report) {
    const std::int64_t n = static_cast<std::int64_t>(report.clients.size());
    const std::int64_t per_client =
        n == 0 ? 0 : (report.ledger.bytes_up + report.ledger.bytes_down) / n;
    std::vector<MetricsRecord> rows;
    for (const ClientReport& c : report.clients) {
        rows.push_back({run_id, std::to_string(c.client_id), report.ledger.rounds_sent,
                        c.metrics.accuracy, c.metrics.f1, c.metrics.loss, per_client});
    }
    rows.push_back({run_id, "mean", report.ledger.rounds_sent, report.mean_accuracy,
                    report.mean_f1, report.mean_loss, per_client});
    return rows;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
    std::ostringstream os;
    os << kMetricsHeader << '\n';
    for (const MetricsRecord& r : records) {
        os << csv_field(r.run_id) << ',' << csv_field(r.client_id) << ',' << r.round << ','
           << format_double(r.accuracy) << ',' << format_double(r.f1) << ','
           << format_double(r.loss) << ',' << r.bytes_communicated << '\n';
    }
    return os.str();
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw InputError("metrics csv: unexpected header '" + line + "'");
    }
    std::vector<MetricsRecord> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 7) {
            throw InputError("metrics csv line " + std::to_string(line_no) + ": expected 7 fields");
        }
        try {
            rows.push_back({f[0], f[1], std::stoll(f[2]), std::stod(f[3]), std::stod(f[4]),
                            std::stod(f[5]), std::stoll(f[6])});
        } catch (const std::logic_error&) {
            throw InputError("metrics csv line " + std::to_string(line_no) + ": bad number");
        }
    }
    return rows;
}

std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void write_run_outputs(const std::filesystem::path& dir, const std::string& run_id,
                       const RunResult& result) {
    write_text_file(dir / "metrics.csv", metrics_csv(metrics_records(run_id, result.report)));
    write_text_file(dir / "report.json", dump_json(result.report.to_json()));
    write_text_file(dir / "manifest.json", dump_json(result.manifest));
    std::vector<ClientShard> shards;
    for (const ClientState& c : result.clients) shards.push_back(*c.shard);
    write_text_file(dir / "partition.json", partition_manifest_json(shards));
}

}  // namespace fdlora
