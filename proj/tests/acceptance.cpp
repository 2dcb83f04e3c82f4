// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fdlora/common/io.hpp"
#include "fdlora/datagen/synthetic.hpp"
#include "fdlora/harness/cli.hpp"
#include "fdlora/harness/experiment.hpp"
#include "fdlora/harness/sweep.hpp"
#include "fed_oracles.hpp"

using namespace fdlora;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::size_t hw_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig reduction_experiment() {
    ExperimentConfig e;
    e.federation = FederationConfig::desk_preset();
    e.federation.num_clients = 5;
    e.federation.outer_rounds = 10;
    e.federation.inner_steps = 3;
    e.federation.outer_momentum = 0.0;
    e.federation.outer_lr = 1.0;
    e.federation.sync_every = 1;
    e.federation.fusion_mode = FusionMode::kGlobalOnly;
    e.federation.seed = 7;
    return e;
}

std::vector<ClientState> stage1_clients(const FederationConfig& cfg,
                                        const std::vector<ClientShard>& shards,
                                        const BaseModel& base) {
    return stage1_local_learning(make_clients(shards, initial_adapters(base, cfg), cfg), base, cfg);
}

Outcome fedavg_reduction() {
    const ExperimentConfig e = reduction_experiment();
    const ExperimentData d = prepare_data(e);
    const RunResult r = run_fdlora(e.federation, d.shards, d.num_classes);
    const AdapterSet want =
        oracle::fedavg(stage1_clients(e.federation, d.shards, r.base), r.base, e.federation);
    const double diff = oracle::max_abs_diff(r.server.global_adapter, want);
    return {diff <= 1e-10, "max |diff| = " + fmt("%.3g", diff)};
}

Outcome souping_reduction() {
    ExperimentConfig e = reduction_experiment();
    e.federation.outer_rounds = 1;
    const ExperimentData d = prepare_data(e);
    const RunResult r = run_fdlora(e.federation, d.shards, d.num_classes);
    std::vector<ClientState> clients = stage1_clients(e.federation, d.shards, r.base);
    std::vector<AdapterSet> tuned;
    const AdapterSet start = oracle::plain_mean([&] {
        std::vector<AdapterSet> p;
        for (const ClientState& c : clients) p.push_back(c.personalized);
        return p;
    }());
    for (ClientState& c : clients) tuned.push_back(oracle::local_steps(c, start, r.base, e.federation));
    const double diff = oracle::max_abs_diff(r.server.global_adapter, oracle::plain_mean(tuned));
    return {diff <= 1e-12, "max |diff| = " + fmt("%.3g", diff)};
}

Outcome data_parallel_reduction() {
    ExperimentConfig e = reduction_experiment();
    FederationConfig& cfg = e.federation;
    cfg.outer_rounds = 1;
    cfg.inner_steps = 1;
    cfg.inner_optimizer = InnerOptimizerKind::kSgd;
    cfg.batch_size = 1 << 30;
    cfg.weight_decay = 0.0;
    cfg.fusion_set_size = 0;
    const ExperimentData d = prepare_data(e);
    std::vector<ClientShard> shards;
    for (std::size_t i = 0; i < cfg.num_clients; ++i) {
        ClientShard s = d.shards[0];
        s.client_id = i;
        shards.push_back(s);
    }
    const RunResult r = run_fdlora(cfg, shards, d.num_classes);
    const std::vector<ClientState> clients = stage1_clients(cfg, shards, r.base);
    const ServerState init = stage2_init_global(clients, cfg);
    const AdapterSet want = oracle::centralized_step(init.global_adapter, clients, r.base, cfg.inner_lr);
    const double diff = oracle::max_abs_diff(r.server.global_adapter, want);
    return {diff <= 1e-8, "max |diff| = " + fmt("%.3g", diff)};
}

Outcome adafusion_cross_terms() {
    Rng rng(2026);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    std::uniform_int_distribution<std::size_t> rk(1, 4);
    std::uniform_real_distribution<double> wdist(-1.5, 1.5);
    double worst = 0.0;
    double worst_decomp = 0.0;
    double min_cross = 1e300;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = dim(rng);
        const std::size_t k = dim(rng);
        const std::size_t r = std::min({rk(rng), d, k});
        const LoraAdapter p("s", oracle::random_matrix(d, r, rng), oracle::random_matrix(r, k, rng));
        const LoraAdapter g("s", oracle::random_matrix(d, r, rng), oracle::random_matrix(r, k, rng));
        const FusionWeights w{wdist(rng), wdist(rng)};
        const Matrix got = delta(ada_fuse(p, g, w));
        const Matrix want = oracle::naive_matmul(
            oracle::naive_add(oracle::naive_scale(p.b_factor(), w.w1),
                              oracle::naive_scale(g.b_factor(), w.w2)),
            oracle::naive_add(oracle::naive_scale(p.a_factor(), w.w1),
                              oracle::naive_scale(g.a_factor(), w.w2)));
        worst = std::max(worst, max_abs_diff(got, want));

        const Matrix pp = oracle::naive_matmul(p.b_factor(), p.a_factor());
        const Matrix gg = oracle::naive_matmul(g.b_factor(), g.a_factor());
        const Matrix cross = oracle::naive_add(oracle::naive_matmul(p.b_factor(), g.a_factor()),
                                               oracle::naive_matmul(g.b_factor(), p.a_factor()));
        const Matrix no_cross =
            oracle::naive_add(oracle::naive_scale(pp, w.w1 * w.w1), oracle::naive_scale(gg, w.w2 * w.w2));
        const Matrix full = oracle::naive_add(no_cross, oracle::naive_scale(cross, w.w1 * w.w2));
        worst_decomp = std::max(worst_decomp, max_abs_diff(got, full));
        min_cross = std::min(min_cross, max_abs_diff(got, no_cross));
    }
    const bool ok = worst <= 1e-12 && worst_decomp <= 1e-12 && min_cross > 1e-9;
    return {ok, "oracle " + fmt("%.3g", worst) + ", decomposition " + fmt("%.3g", worst_decomp) +
                    ", min cross-term " + fmt("%.3g", min_cross)};
}

/// Two-skill fusion-mode sweep shared by the efficacy and ablation checks.
const SweepResult& mode_sweep() {
    static const SweepResult result = [] {
        SweepSpec spec;
        spec.axis = SweepAxis::kFusionMode;
        spec.values = {"AdaFusion", "Random", "Average", "Sum", "PersonalizedOnly", "GlobalOnly"};
        spec.repeats = 5;
        spec.jobs = hw_jobs();
        spec.base.federation = FederationConfig::desk_preset();
        spec.base.federation.num_clients = 5;
        spec.base.federation.outer_rounds = 30;
        spec.base.federation.inner_steps = 3;
        spec.base.federation.sync_every = 30;
        spec.base.federation.dirichlet_alpha = 0.5;
        return run_sweep(spec);
    }();
    return result;
}

std::map<std::string, double> mode_means() {
    std::map<std::string, double> m;
    for (const SweepAggregate& a : mode_sweep().aggregates) {
        m[a.value] = a.failed == 0 ? a.mean_accuracy : std::nan("");
    }
    return m;
}

Outcome fusion_efficacy() {
    auto m = mode_means();
    const double ada = m["AdaFusion"];
    const bool ok = ada >= m["Random"] && ada >= m["Average"] && ada >= m["Sum"];
    return {ok, "AdaFusion " + fmt("%.4f", ada) + " vs Random " + fmt("%.4f", m["Random"]) +
                    ", Average " + fmt("%.4f", m["Average"]) + ", Sum " + fmt("%.4f", m["Sum"])};
}

Outcome dual_module_ablation() {
    auto m = mode_means();
    const double ada = m["AdaFusion"];
    const double best_single = std::max(m["PersonalizedOnly"], m["GlobalOnly"]);
    return {ada >= best_single - 0.01,
            "AdaFusion " + fmt("%.4f", ada) + " vs PersonalizedOnly " +
                fmt("%.4f", m["PersonalizedOnly"]) + ", GlobalOnly " + fmt("%.4f", m["GlobalOnly"])};
}

Outcome dirichlet_monotonicity() {
    const std::vector<double> alphas = {0.1, 0.5, 1.0};
    std::vector<double> mean_std;
    for (double alpha : alphas) {
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const Dataset data = make_synthetic_task(4, 4, 60, 0.5, seed);
            PartitionSpec ps;
            ps.alpha = alpha;
            ps.num_clients = 5;
            ps.seed = seed;
            sum += class_proportion_std(dirichlet_partition(data, ps), 4);
        }
        mean_std.push_back(sum / 50.0);
    }
    return {mean_std[0] > mean_std[1] && mean_std[1] > mean_std[2],
            "0.1: " + fmt("%.4f", mean_std[0]) + ", 0.5: " + fmt("%.4f", mean_std[1]) +
                ", 1.0: " + fmt("%.4f", mean_std[2])};
}

Outcome communication_accounting() {
    bool ok = true;
    std::string detail;
    for (std::optional<std::int64_t> h : {std::optional<std::int64_t>(1), std::optional<std::int64_t>(3),
                                          std::optional<std::int64_t>()}) {
        ExperimentConfig e = reduction_experiment();
        e.federation.fusion_mode = FusionMode::kAdaFusion;
        e.federation.sync_every = h;
        const RunResult r = run_experiment(e);
        const std::int64_t t = e.federation.outer_rounds;
        const auto n = static_cast<std::int64_t>(e.federation.num_clients);
        const auto size = static_cast<std::int64_t>(serialized_size(r.server.global_adapter));
        const std::int64_t syncs = h ? t / *h : 0;
        const CommLedger& l = r.report.ledger;
        ok = ok && l.bytes_up == t * n * size && l.bytes_down == t * n * size &&
             l.sync_events == syncs && l.rounds_sent == t;
        detail += "H=" + (h ? std::to_string(*h) : std::string("inf")) + ": up " +
                  std::to_string(l.bytes_up) + "/" + std::to_string(t * n * size) + " syncs " +
                  std::to_string(l.sync_events) + "/" + std::to_string(syncs) + "; ";
    }
    return {ok, detail};
}

Outcome gradient_integrity() {
    Rng rng(99);
    std::uniform_int_distribution<std::size_t> width(1, 6);
    std::uniform_int_distribution<std::size_t> depth(0, 2);
    std::uniform_int_distribution<std::size_t> rk(1, 3);
    std::uniform_int_distribution<std::size_t> rows(1, 6);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t classes = 2 + width(rng) % 3;
        std::vector<std::size_t> dims{width(rng)};
        const std::size_t hidden = depth(rng);
        for (std::size_t i = 0; i < hidden; ++i) dims.push_back(width(rng) + 1);
        dims.push_back(classes);
        const BaseModel m = BaseModel::mlp(dims, static_cast<std::uint64_t>(trial));
        AdapterSet adapters;
        for (const auto& [site, a] : m.init_adapters(rk(rng), rng)) {
            adapters.insert(a.with_factors(
                oracle::random_matrix(a.b_factor().rows(), a.b_factor().cols(), rng, -0.5, 0.5),
                oracle::random_matrix(a.a_factor().rows(), a.a_factor().cols(), rng, -0.5, 0.5)));
        }
        const std::size_t n = rows(rng);
        const Matrix x = oracle::random_matrix(n, dims.front(), rng);
        std::uniform_int_distribution<int> label(0, static_cast<int>(classes) - 1);
        std::vector<int> labels(n);
        for (int& y : labels) y = label(rng);

        const LossAndGrads lg = loss_and_grads(m, adapters, x, labels);
        for (const auto& [site, a] : adapters) {
            for (int which = 0; which < 2; ++which) {
                const Matrix& analytic = which == 0 ? lg.grads.at(site).b : lg.grads.at(site).a;
                const Matrix& p = which == 0 ? a.b_factor() : a.a_factor();
                for (std::size_t i = 0; i < p.rows(); ++i) {
                    for (std::size_t j = 0; j < p.cols(); ++j) {
                        auto loss_with = [&](double v) {
                            Matrix q = p;
                            q(i, j) = v;
                            AdapterSet s = adapters;
                            s.insert(which == 0 ? a.with_factors(q, a.a_factor())
                                                : a.with_factors(a.b_factor(), q));
                            return model_loss(m, s, x, labels).scalar;
                        };
                        const double h = 1e-6;
                        const double fd = (loss_with(p(i, j) + h) - loss_with(p(i, j) - h)) / (2 * h);
                        worst = std::max(worst, oracle::rel_err(analytic(i, j), fd));
                    }
                }
            }
        }
    }
    return {worst <= 1e-4, "worst relative error " + fmt("%.3g", worst)};
}

std::string report_without_timing(const fs::path& dir) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(read_text_file(dir / "report.json"));
    j.erase("timing");
    return j.dump(2);
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "fdlora_acceptance_determinism";
    fs::remove_all(root);
    std::vector<std::string> reports;
    for (const char* jobs : {"1", "1", "4"}) {
        const fs::path out = root / ("run_" + std::to_string(reports.size()));
        const std::vector<std::string> args = {"fdlora", "run", "--preset", "desk", "--jobs", jobs,
                                               "--out", out.string()};
        std::vector<const char*> argv;
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream sink;
        if (cli_main(static_cast<int>(argv.size()), argv.data(), sink, sink) != kExitOk) {
            return {false, "run failed: " + sink.str()};
        }
        reports.push_back(report_without_timing(out));
    }
    fs::remove_all(root);
    const bool ok = reports[0] == reports[1] && reports[0] == reports[2];
    return {ok, ok ? "serial, serial and 4-thread reports identical" : "reports differ"};
}

Outcome frozen_base() {
    ExperimentConfig e = reduction_experiment();
    e.federation.fusion_mode = FusionMode::kAdaFusion;
    const ExperimentData d = prepare_data(e);
    const std::uint64_t fresh =
        make_base_model(e.federation, d.shards[0].train[0].features.size(), d.num_classes).checksum();
    const RunResult r = run_fdlora(e.federation, d.shards, d.num_classes);
    const auto before = r.manifest["base_checksum"].get<std::uint64_t>();
    const bool ok = before == fresh && r.report.base_checksum == fresh && r.base.checksum() == fresh;
    return {ok, "checksum " + std::to_string(fresh)};
}

Outcome trainable_fraction() {
    const std::vector<std::size_t> dims{256, 256, 2};
    const BaseModel m = BaseModel::mlp(dims, 1, {"fc1"});
    Rng rng(1);
    const AdapterSet a = m.init_adapters(8, rng);
    const std::size_t trainable = count_trainable(a);
    const double frac = static_cast<double>(trainable) / static_cast<double>(m.parameter_count());
    return {trainable == 4096 && frac < 0.07,
            "count " + std::to_string(trainable) + ", fraction " + fmt("%.4f", frac)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "FedAvg reduction", 30, fedavg_reduction},
        {2, "souping reduction", 5, souping_reduction},
        {3, "data-parallel reduction", 5, data_parallel_reduction},
        {4, "AdaFusion cross terms", 2, adafusion_cross_terms},
        {5, "fusion optimizer efficacy", 300, fusion_efficacy},
        {6, "dual-module ablation", 300, dual_module_ablation},
        {7, "Dirichlet imbalance monotonicity", 10, dirichlet_monotonicity},
        {8, "communication accounting", 5, communication_accounting},
        {9, "gradient integrity", 30, gradient_integrity},
        {10, "determinism", 60, determinism},
        {11, "frozen base", 30, frozen_base},
        {12, "trainable fraction", 1, trainable_fraction},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s %2d %s: %s (%.2fs of %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
