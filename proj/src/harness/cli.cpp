// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/harness/cli.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdlora/common/io.hpp"
#include "fdlora/errors.hpp"
#include "fdlora/harness/experiment.hpp"
#include "fdlora/harness/sweep.hpp"
#include "fdlora/lora/checkpoint.hpp"

namespace fdlora {

namespace {

/// Thrown while assembling a configuration; maps to the usage exit code.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::string config_path;
    std::string preset = "paper";
    std::string data_path;
    std::string out_dir = "fdlora_out";
    std::int64_t clients = 0;
    std::int64_t rounds = 0;
    std::int64_t inner_steps = 0;
    std::string sync_every;
    double alpha = 0.0;
    std::int64_t rank = 0;
    std::int64_t seed = 0;
    std::string fusion_mode;
    double lambda = 0.0;
    double inner_lr = 0.0;
    double outer_lr = 0.0;
    std::int64_t batch_size = 0;
    std::int64_t local_epochs = 0;
    std::int64_t jobs = 1;

    std::vector<std::pair<std::string, CLI::Option*>> opts;

    bool given(const std::string& name) const {
        for (const auto& [n, o] : opts) {
            if (n == name) return o->count() > 0;
        }
        return false;
    }
};

void add_overrides(CLI::App* app, Overrides& o) {
    auto add = [&](const std::string& flag, auto& target, const std::string& help) {
        o.opts.emplace_back(flag, app->add_option(flag, target, help));
    };
    add("--config", o.config_path, "JSON config file (FederationConfig fields, optional task/data)");
    add("--preset", o.preset, "Base settings before the config file: paper or desk");
    add("--data", o.data_path, "JSONL dataset; default is the synthetic two-skill task");
    add("--out", o.out_dir, "Output directory");
    add("--clients", o.clients, "Number of clients N");
    add("--rounds", o.rounds, "Outer rounds T");
    add("--inner-steps", o.inner_steps, "Inner steps per round K");
    add("--sync-every", o.sync_every, "Sync period H (integer or inf)");
    add("--alpha", o.alpha, "Dirichlet concentration");
    add("--rank", o.rank, "Adapter rank r");
    add("--seed", o.seed, "Base seed");
    add("--fusion-mode", o.fusion_mode,
        "AdaFusion, Random, Average, Sum, PersonalizedOnly or GlobalOnly");
    add("--lambda", o.lambda, "L1 weight of the fusion search");
    add("--inner-lr", o.inner_lr, "Inner learning rate");
    add("--outer-lr", o.outer_lr, "Outer learning rate");
    add("--batch-size", o.batch_size, "Mini-batch size b");
    add("--local-epochs", o.local_epochs, "Local fine-tuning epochs");
    add("--jobs", o.jobs, "Worker threads");
}

ExperimentConfig build_experiment(const Overrides& o) {
    try {
        ExperimentConfig e;
        if (o.preset == "desk") {
            e.federation = FederationConfig::desk_preset();
        } else if (o.preset != "paper") {
            throw ConfigError("unknown preset '" + o.preset + "' (expected paper or desk)");
        }
        if (!o.config_path.empty()) e = load_experiment_config(o.config_path, e);
        FederationConfig& c = e.federation;
        if (o.given("--data")) e.data_path = o.data_path;
        if (o.given("--clients")) {
            if (o.clients < 1) throw ConfigError("--clients must be >= 1");
            c.num_clients = static_cast<std::size_t>(o.clients);
        }
        if (o.given("--rounds")) c.outer_rounds = o.rounds;
        if (o.given("--inner-steps")) c.inner_steps = o.inner_steps;
        if (o.given("--sync-every")) {
            nlohmann::json j;
            if (o.sync_every == "inf" || o.sync_every == "infinity") {
                j["sync_every"] = "inf";
            } else {
                std::size_t used = 0;
                std::int64_t h = 0;
                try {
                    h = std::stoll(o.sync_every, &used);
                } catch (const std::logic_error&) {
                    used = 0;
                }
                if (used == 0 || used != o.sync_every.size()) {
                    throw ConfigError("--sync-every expects an integer or inf");
                }
                j["sync_every"] = h;
            }
            c = config_from_json(j, c);
        }
        if (o.given("--alpha")) c.dirichlet_alpha = o.alpha;
        if (o.given("--rank")) {
            if (o.rank < 1) throw ConfigError("--rank must be >= 1");
            c.rank = static_cast<std::size_t>(o.rank);
        }
        if (o.given("--seed")) {
            if (o.seed < 0) throw ConfigError("--seed must be >= 0");
            c.seed = static_cast<std::uint64_t>(o.seed);
        }
        if (o.given("--fusion-mode")) c.fusion_mode = parse_fusion_mode(o.fusion_mode);
        if (o.given("--lambda")) c.fusion_lambda = o.lambda;
        if (o.given("--inner-lr")) c.inner_lr = o.inner_lr;
        if (o.given("--outer-lr")) c.outer_lr = o.outer_lr;
        if (o.given("--batch-size")) c.batch_size = o.batch_size;
        if (o.given("--local-epochs")) c.local_epochs = o.local_epochs;
        if (o.given("--jobs")) {
            if (o.jobs < 1) throw ConfigError("--jobs must be >= 1");
            c.jobs = static_cast<std::size_t>(o.jobs);
        }
        c.validate();
        return e;
    } catch (const std::invalid_argument& ex) {
        throw UsageError(ex.what());
    }
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

int cmd_run(const Overrides& o, bool checkpoints, std::ostream& out) {
    const ExperimentConfig e = build_experiment(o);
    RunOptions options;
    const std::filesystem::path dir = o.out_dir;
    if (checkpoints) options.checkpoint_dir = dir / "checkpoints";
    const RunResult r = run_experiment(e, options);
    write_run_outputs(dir, "run", r);
    const RunReport& rep = r.report;
    out << "clients=" << rep.clients.size() << " rounds=" << rep.ledger.rounds_sent
        << " accuracy=" << fixed(rep.mean_accuracy) << "+-" << fixed(rep.std_accuracy)
        << " f1=" << fixed(rep.mean_f1) << "+-" << fixed(rep.std_f1)
        << " bytes_up=" << rep.ledger.bytes_up << " bytes_down=" << rep.ledger.bytes_down << '\n'
        << "wrote " << (dir / "report.json").string() << '\n';
    return kExitOk;
}

int cmd_sweep(const Overrides& o, const std::string& axis, const std::vector<std::string>& values,
              int repeats, std::ostream& out, std::ostream& err) {
    SweepSpec spec;
    try {
        spec.axis = parse_sweep_axis(axis);
        spec.values = values;
        spec.repeats = repeats;
        if (repeats < 1) throw ConfigError("--repeats must be >= 1");
        for (const std::string& v : values) apply_axis(ExperimentConfig{}, spec.axis, v);
    } catch (const std::invalid_argument& ex) {
        throw UsageError(ex.what());
    }
    spec.base = build_experiment(o);
    spec.jobs = spec.base.federation.jobs;
    spec.base.federation.jobs = 1;
    const SweepResult r = run_sweep(spec, std::filesystem::path(o.out_dir));
    for (const SweepAggregate& a : r.aggregates) {
        out << axis << '=' << a.value << " runs=" << a.runs << " failed=" << a.failed
            << " accuracy=" << fixed(a.mean_accuracy) << "+-" << fixed(a.std_accuracy)
            << " f1=" << fixed(a.mean_f1) << "+-" << fixed(a.std_f1) << '\n';
    }
    for (const SweepRun& run : r.runs) {
        if (!run.report) err << "run " << run.run_id << " failed: " << run.error << '\n';
    }
    out << "wrote " << (std::filesystem::path(o.out_dir) / "summary.csv").string() << '\n';
    return r.failures() == 0 ? kExitOk : kExitRunError;
}

int cmd_partition(const Overrides& o, std::ostream& out) {
    const ExperimentConfig e = build_experiment(o);
    const ExperimentData data = prepare_data(e);
    const std::filesystem::path path = std::filesystem::path(o.out_dir) / "partition.json";
    write_text_file(path, partition_manifest_json(data.shards));
    for (const ClientShard& s : data.shards) {
        out << "client " << s.client_id << ": train=" << s.train.size()
            << " test=" << s.test.size() << '\n';
    }
    out << "class_proportion_std=" << fixed(class_proportion_std(data.shards, data.num_classes), 6)
        << '\n'
        << "wrote " << path.string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const Overrides& o, const std::string& adapters_path, std::ostream& out) {
    const ExperimentConfig e = build_experiment(o);
    const AdapterSetCheckpoint ckpt = load_set_checkpoint(adapters_path);
    const ExperimentData data = prepare_data(e);
    const BaseModel base = make_base_model(e.federation, data.shards.front().train.front().features.size(),
                                           data.num_classes);
    base.validate(ckpt.adapters);
    nlohmann::ordered_json j;
    nlohmann::ordered_json clients = nlohmann::ordered_json::array();
    std::vector<double> acc;
    std::vector<double> f1;
    for (const ClientShard& s : data.shards) {
        const ClassificationMetrics m = evaluate(base, ckpt.adapters, s.test);
        acc.push_back(m.accuracy);
        f1.push_back(m.f1);
        nlohmann::ordered_json cj;
        cj["client_id"] = s.client_id;
        cj["accuracy"] = m.accuracy;
        cj["f1"] = m.f1;
        cj["f1_degenerate"] = m.f1_degenerate;
        cj["loss"] = m.loss;
        clients.push_back(std::move(cj));
    }
    j["clients"] = std::move(clients);
    j["mean_accuracy"] = mean_of(acc);
    j["std_accuracy"] = sample_std(acc);
    j["mean_f1"] = mean_of(f1);
    j["std_f1"] = sample_std(f1);
    const std::string text = dump_json(j);
    if (o.given("--out")) write_text_file(std::filesystem::path(o.out_dir) / "evaluation.json", text);
    out << text;
    return kExitOk;
}

int cmd_fuse(const Overrides& o, const std::string& p_path, const std::string& g_path,
             CLI::Option* w1_opt, CLI::Option* w2_opt, double w1, double w2, std::int64_t client_id,
             std::ostream& out) {
    const AdapterSetCheckpoint p = load_set_checkpoint(p_path);
    const AdapterSetCheckpoint g = load_set_checkpoint(g_path);
    FusionWeights w{w1, w2};
    if ((w1_opt->count() > 0) != (w2_opt->count() > 0)) {
        throw UsageError("--w1 and --w2 must be given together");
    }
    if (w1_opt->count() == 0) {
        const ExperimentConfig e = build_experiment(o);
        const ExperimentData data = prepare_data(e);
        if (client_id < 0 || static_cast<std::size_t>(client_id) >= data.shards.size()) {
            throw UsageError("--client must name one of the " + std::to_string(data.shards.size()) +
                             " clients");
        }
        const BaseModel base = make_base_model(
            e.federation, data.shards.front().train.front().features.size(), data.num_classes);
        std::vector<ClientState> clients = make_clients(
            std::span<const ClientShard>(&data.shards[static_cast<std::size_t>(client_id)], 1),
            p.adapters, e.federation);
        ServerState server;
        server.global_adapter = g.adapters;
        FederationConfig cfg = e.federation;
        cfg.fusion_mode = FusionMode::kAdaFusion;
        clients = stage3_fusion(std::move(clients), server, base, cfg);
        w = clients.front().fusion_weights;
    }
    const AdapterSet fused = ada_fuse(p.adapters, g.adapters, w);
    const std::filesystem::path path = std::filesystem::path(o.out_dir) / "fused.json";
    save_checkpoint(path, AdapterSetCheckpoint{fused, p.seed, p.protocol_round});
    out << "w1=" << fixed(w.w1, 6) << " w2=" << fixed(w.w2, 6) << '\n'
        << "wrote " << path.string() << '\n';
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Federated dual-adapter fine-tuning simulator", "fdlora"};
    app.require_subcommand(1);

    Overrides run_o;
    CLI::App* run = app.add_subcommand("run", "Run one federated experiment");
    add_overrides(run, run_o);
    bool checkpoints = false;
    run->add_flag("--checkpoints", checkpoints, "Write per-round adapter checkpoints");

    Overrides sweep_o;
    CLI::App* sweep = app.add_subcommand("sweep", "Repeat runs over one config axis");
    add_overrides(sweep, sweep_o);
    std::string axis;
    std::vector<std::string> values;
    int repeats = 5;
    sweep->add_option("--axis", axis, "T, K, H, alpha, N or fusion_mode")->required();
    sweep->add_option("--values", values, "Comma-separated axis values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--repeats", repeats, "Seeded repeats per value");

    Overrides part_o;
    CLI::App* part = app.add_subcommand("partition", "Write the client partition manifest");
    add_overrides(part, part_o);

    Overrides eval_o;
    CLI::App* eval = app.add_subcommand("evaluate", "Score an adapter checkpoint on every client");
    add_overrides(eval, eval_o);
    std::string adapters_path;
    eval->add_option("--adapters", adapters_path, "Adapter-set checkpoint")->required();

    Overrides fuse_o;
    CLI::App* fuse = app.add_subcommand("fuse", "Fuse a personalized and a global adapter");
    add_overrides(fuse, fuse_o);
    std::string p_path;
    std::string g_path;
    double w1 = 1.0;
    double w2 = 0.0;
    std::int64_t client_id = 0;
    fuse->add_option("--personalized", p_path, "Personalized adapter checkpoint")->required();
    fuse->add_option("--global", g_path, "Global adapter checkpoint")->required();
    CLI::Option* w1_opt = fuse->add_option("--w1", w1, "Personalized weight");
    CLI::Option* w2_opt = fuse->add_option("--w2", w2, "Global weight");
    fuse->add_option("--client", client_id, "Client whose fusion set drives the search");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_o, checkpoints, out);
        if (sweep->parsed()) return cmd_sweep(sweep_o, axis, values, repeats, out, err);
        if (part->parsed()) return cmd_partition(part_o, out);
        if (eval->parsed()) return cmd_evaluate(eval_o, adapters_path, out);
        if (fuse->parsed()) {
            return cmd_fuse(fuse_o, p_path, g_path, w1_opt, w2_opt, w1, w2, client_id, out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n' << "Run with --help for usage.\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRunError;
    }
    return kExitUsage;
}

}  // namespace fdlora
