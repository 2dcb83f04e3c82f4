// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/harness/sweep.hpp"

#include <cstdio>
#include <sstream>

#include "fdlora/common/io.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

std::int64_t parse_int(const std::string& s, const char* what) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ConfigError(std::string("sweep: ") + what + " value '" + s + "' is not an integer");
    }
    return v;
}

double parse_double(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) {
        throw ConfigError(std::string("sweep: ") + what + " value '" + s + "' is not a number");
    }
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::kRounds: return "T";
        case SweepAxis::kInnerSteps: return "K";
        case SweepAxis::kSyncEvery: return "H";
        case SweepAxis::kAlpha: return "alpha";
        case SweepAxis::kClients: return "N";
        case SweepAxis::kFusionMode: return "fusion_mode";
    }
    return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
    if (name == "T" || name == "outer_rounds") return SweepAxis::kRounds;
    if (name == "K" || name == "inner_steps") return SweepAxis::kInnerSteps;
    if (name == "H" || name == "sync_every") return SweepAxis::kSyncEvery;
    if (name == "alpha" || name == "dirichlet_alpha") return SweepAxis::kAlpha;
    if (name == "N" || name == "num_clients") return SweepAxis::kClients;
    if (name == "fusion_mode") return SweepAxis::kFusionMode;
    throw ConfigError("unknown sweep axis '" + std::string(name) +
                      "' (expected T, K, H, alpha, N or fusion_mode)");
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, const std::string& value) {
    ExperimentConfig e = base;
    FederationConfig& c = e.federation;
    switch (axis) {
        case SweepAxis::kRounds: c.outer_rounds = parse_int(value, "T"); break;
        case SweepAxis::kInnerSteps: c.inner_steps = parse_int(value, "K"); break;
        case SweepAxis::kSyncEvery:
            if (value == "inf" || value == "infinity") {
                c.sync_every.reset();
            } else {
                c.sync_every = parse_int(value, "H");
            }
            break;
        case SweepAxis::kAlpha: c.dirichlet_alpha = parse_double(value, "alpha"); break;
        case SweepAxis::kClients: {
            const std::int64_t n = parse_int(value, "N");
            if (n < 1) throw ConfigError("sweep: N must be >= 1");
            c.num_clients = static_cast<std::size_t>(n);
            break;
        }
        case SweepAxis::kFusionMode: c.fusion_mode = parse_fusion_mode(value); break;
    }
    return e;
}

std::uint64_t repeat_seed(std::uint64_t base_seed, int repeat) {
    return base_seed + 1000ULL * static_cast<std::uint64_t>(repeat);
}

std::size_t SweepResult::failures() const {
    std::size_t n = 0;
    for (const SweepRun& r : runs) n += r.report ? 0 : 1;
    return n;
}

SweepResult run_sweep(const SweepSpec& spec, const std::optional<std::filesystem::path>& out_dir) {
    if (spec.values.empty()) throw ConfigError("sweep: no values");
    if (spec.repeats < 1) throw ConfigError("sweep: repeats must be >= 1");
    std::vector<ExperimentConfig> configs;
    SweepResult result;
    for (const std::string& value : spec.values) {
        ExperimentConfig e = apply_axis(spec.base, spec.axis, value);
        for (int r = 0; r < spec.repeats; ++r) {
            SweepRun run;
            run.value = value;
            run.repeat = r;
            run.seed = repeat_seed(spec.base.federation.seed, r);
            run.run_id = std::string(to_string(spec.axis)) + "=" + value + "_r" + std::to_string(r);
            e.federation.seed = run.seed;
            configs.push_back(e);
            result.runs.push_back(std::move(run));
        }
    }

    parallel_for(result.runs.size(), spec.jobs, [&](std::size_t i) {
        SweepRun& run = result.runs[i];
        try {
            const RunResult rr = run_experiment(configs[i]);
            if (out_dir) write_run_outputs(*out_dir / run.run_id, run.run_id, rr);
            run.partition_imbalance = rr.manifest.at("partition_imbalance").get<double>();
            run.report = rr.report;
        } catch (const std::exception& e) {
            run.error = e.what();
        }
    });

    for (const std::string& value : spec.values) {
        SweepAggregate agg;
        agg.value = value;
        std::vector<double> acc;
        std::vector<double> f1;
        std::vector<double> loss;
        for (const SweepRun& run : result.runs) {
            if (run.value != value) continue;
            ++agg.runs;
            if (!run.report) {
                ++agg.failed;
                continue;
            }
            acc.push_back(run.report->mean_accuracy);
            f1.push_back(run.report->mean_f1);
            loss.push_back(run.report->mean_loss);
        }
        agg.mean_accuracy = mean_of(acc);
        agg.std_accuracy = sample_std(acc);
        agg.mean_f1 = mean_of(f1);
        agg.std_f1 = sample_std(f1);
        agg.mean_loss = mean_of(loss);
        agg.std_loss = sample_std(loss);
        result.aggregates.push_back(agg);
    }
    for (const SweepRun& run : result.runs) {
        if (!run.report) continue;
        const std::vector<MetricsRecord> rows = metrics_records(run.run_id, *run.report);
        result.records.insert(result.records.end(), rows.begin(), rows.end());
    }

    if (out_dir) {
        write_text_file(*out_dir / "metrics.csv", metrics_csv(result.records));
        write_text_file(*out_dir / "summary.csv", summary_csv(spec.axis, result.aggregates));
    }
    return result;
}

std::string summary_csv(SweepAxis axis, const std::vector<SweepAggregate>& aggregates) {
    std::ostringstream os;
    os << "axis,value,runs,failed,mean_accuracy,std_accuracy,mean_f1,std_f1,mean_loss,std_loss\n";
    for (const SweepAggregate& a : aggregates) {
        os << to_string(axis) << ',' << a.value << ',' << a.runs << ',' << a.failed << ','
           << fmt(a.mean_accuracy) << ',' << fmt(a.std_accuracy) << ',' << fmt(a.mean_f1) << ','
           << fmt(a.std_f1) << ',' << fmt(a.mean_loss) << ',' << fmt(a.std_loss) << '\n';
    }
    return os.str();
}

}  // namespace fdlora
