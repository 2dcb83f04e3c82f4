// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "fdlora/datagen/synthetic.hpp"
#include "fdlora/errors.hpp"
#include "fdlora/federation/run.hpp"
#include "fed_oracles.hpp"

using namespace fdlora;

namespace {

FederationConfig small_config() {
    FederationConfig c = FederationConfig::desk_preset();
    c.num_clients = 4;
    c.outer_rounds = 4;
    c.local_epochs = 2;
    c.seed = 11;
    return c;
}

std::vector<ClientShard> small_shards(const FederationConfig& cfg, std::size_t* classes = nullptr) {
    TwoSkillSpec t;
    t.num_clients = cfg.num_clients;
    t.shared_per_class = 20;
    t.private_per_client = 20;
    t.alpha = cfg.dirichlet_alpha;
    t.seed = cfg.seed;
    FederatedTask task = make_two_skill_task(t);
    if (classes) *classes = task.num_classes;
    return task.shards;
}

struct Setup {
    FederationConfig cfg;
    std::vector<ClientShard> shards;
    std::size_t classes = 0;
    BaseModel base;
    AdapterSet initial;
    std::vector<ClientState> clients;
};

Setup make_setup(FederationConfig cfg, std::vector<ClientShard> shards, std::size_t classes) {
    BaseModel base = make_base_model(cfg, shards.front().train.front().features.size(), classes);
    AdapterSet init = initial_adapters(base, cfg);
    std::vector<ClientState> clients = make_clients(shards, init, cfg);
    return Setup{cfg, std::move(shards), classes, std::move(base), std::move(init),
                 std::move(clients)};
}

Setup make_setup(FederationConfig cfg) {
    std::size_t classes = 0;
    auto shards = small_shards(cfg, &classes);
    return make_setup(cfg, std::move(shards), classes);
}

/// N copies of one shard with distinct ids.
std::vector<ClientShard> identical_shards(const ClientShard& s, std::size_t n) {
    std::vector<ClientShard> out;
    for (std::size_t i = 0; i < n; ++i) {
        ClientShard c = s;
        c.client_id = i;
        out.push_back(c);
    }
    return out;
}

double train_accuracy(const BaseModel& base, const ClientState& c) {
    const Batch b = make_batch(c.train_examples());
    const std::vector<int> pred = base.predict(b.x, c.personalized);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == b.labels[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

AdapterSet scaled(const AdapterSet& s, double k) {
    AdapterSet out;
    for (const auto& [site, a] : s) {
        out.insert(a.with_factors(oracle::naive_scale(a.b_factor(), k),
                                  oracle::naive_scale(a.a_factor(), k)));
    }
    return out;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
    FederationConfig c;
    CHECK_NOTHROW(c.validate());
    c.outer_rounds = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FederationConfig{};
    c.num_clients = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FederationConfig{};
    c.outer_momentum = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FederationConfig{};
    c.sync_every = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FederationConfig{};
    c.weight_decay = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = FederationConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config json round trip, infinite H and unknown keys") {
    FederationConfig c = small_config();
    c.sync_every = std::nullopt;
    c.fusion_mode = FusionMode::kSum;
    c.hidden_dims = {8, 6};
    const FederationConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(to_json(back).dump() == to_json(c).dump());
    CHECK_FALSE(back.sync_every.has_value());
    CHECK(to_json(c)["sync_every"] == "inf");

    CHECK(config_from_json(nlohmann::json{{"sync_every", nullptr}}).sync_every == std::nullopt);
    CHECK(config_from_json(nlohmann::json{{"sync_every", 5}}).sync_every == 5);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"outer_round", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"outer_rounds", -2}}).validate(), ConfigError);
}

TEST_CASE("sync schedule gives floor(T/H) events") {
    FederationConfig c;
    for (std::int64_t t : {0, 1, 7, 30}) {
        for (std::int64_t h : {1, 2, 3, 30, 31}) {
            c.outer_rounds = t;
            c.sync_every = h;
            std::int64_t count = 0;
            for (std::int64_t r = 1; r <= t; ++r) count += c.syncs_at(r);
            CHECK(count == t / h);
            CHECK(c.expected_sync_events() == t / h);
        }
    }
    c.sync_every = std::nullopt;
    CHECK_FALSE(c.syncs_at(1));
    CHECK(c.expected_sync_events() == 0);
}

TEST_CASE("few-shot set is the shard tail, at most half of train") {
    CHECK(few_shot_size(100, 32) == 32);
    CHECK(few_shot_size(40, 32) == 20);
    CHECK(few_shot_size(1, 32) == 0);
    CHECK(few_shot_size(50, 0) == 0);

    Setup s = make_setup(small_config());
    for (const ClientState& c : s.clients) {
        CHECK(c.train_examples().size() + c.few_shot_count == c.shard->train.size());
        CHECK(c.few_shot_examples().data() == c.train_examples().data() + c.train_examples().size());
    }
}

TEST_CASE("batch sampling draws distinct indices, all indices when b >= n") {
    Rng rng(3);
    const auto idx = sample_batch_indices(10, 4, rng);
    CHECK(idx.size() == 4);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 4);
    for (std::size_t i : idx) CHECK(i < 10);
    CHECK(sample_batch_indices(3, 8, rng) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("stage 1 with zero epochs leaves clients untouched") {
    FederationConfig cfg = small_config();
    cfg.local_epochs = 0;
    Setup s = make_setup(cfg);
    const auto after = stage1_local_learning(s.clients, s.base, cfg);
    for (const ClientState& c : after) CHECK(c.personalized == s.initial);
}

TEST_CASE("stage 1 fits a separable task") {
    FederationConfig cfg = small_config();
    cfg.num_clients = 3;
    cfg.local_epochs = 40;
    cfg.fusion_set_size = 0;
    const Dataset data = make_synthetic_task(3, 6, 40, 0.1, 5);
    PartitionSpec ps = partition_spec(cfg);
    const auto shards = dirichlet_partition(data, ps);
    Setup s = make_setup(cfg, shards, 3);
    const auto after = stage1_local_learning(s.clients, s.base, cfg);
    for (const ClientState& c : after) CHECK(train_accuracy(s.base, c) > 0.9);
}

TEST_CASE("identical shards and seeds give bitwise identical personalized adapters") {
    FederationConfig cfg = small_config();
    Setup s = make_setup(cfg);
    std::vector<ClientState> twins = {s.clients[0], s.clients[0]};
    twins[1].client_id = 1;
    const auto after = stage1_local_learning(twins, s.base, cfg);
    CHECK(after[0].personalized == after[1].personalized);
    CHECK_FALSE(after[0].personalized == s.initial);
}

TEST_CASE("stage 1 rejects an empty shard") {
    FederationConfig cfg = small_config();
    Setup s = make_setup(cfg);
    ClientShard empty = *s.clients[0].shard;
    empty.train.clear();
    s.clients[0].shard = std::make_shared<const ClientShard>(empty);
    s.clients[0].few_shot_count = 0;
    CHECK_THROWS_AS(stage1_local_learning(s.clients, s.base, cfg), ConfigError);
}

TEST_CASE("initial global is the client mean") {
    FederationConfig cfg = small_config();
    Setup s = make_setup(cfg);
    Rng rng(9);
    for (ClientState& c : s.clients) {
        AdapterSet r;
        for (const auto& [site, a] : c.personalized) {
            r.insert(a.with_factors(
                oracle::random_matrix(a.b_factor().rows(), a.b_factor().cols(), rng),
                oracle::random_matrix(a.a_factor().rows(), a.a_factor().cols(), rng)));
        }
        c.personalized = r;
    }

    SUBCASE("one client is copied") {
        std::vector<ClientState> one = {s.clients[0]};
        CHECK(stage2_init_global(one, cfg).global_adapter == s.clients[0].personalized);
    }
    SUBCASE("opposite factors cancel") {
        std::vector<ClientState> two = {s.clients[0], s.clients[0]};
        two[1].personalized = scaled(s.clients[0].personalized, -1.0);
        const AdapterSet g = stage2_init_global(two, cfg).global_adapter;
        CHECK(oracle::max_abs_diff(g, scaled(g, 0.0)) == 0.0);
    }
    SUBCASE("matches the entry mean") {
        std::vector<AdapterSet> sets;
        for (const ClientState& c : s.clients) sets.push_back(c.personalized);
        const ServerState srv = stage2_init_global(s.clients, cfg);
        CHECK(oracle::max_abs_diff(srv.global_adapter, oracle::plain_mean(sets)) < 1e-15);
        CHECK(srv.round == 0);
    }
}

TEST_CASE("one round with plain averaging equals a centralized gradient step") {
    FederationConfig cfg = small_config();
    cfg.inner_optimizer = InnerOptimizerKind::kSgd;
    cfg.inner_steps = 1;
    cfg.batch_size = 100000;
    cfg.outer_momentum = 0.0;
    cfg.outer_lr = 1.0;
    cfg.weight_decay = 0.0;
    cfg.fusion_set_size = 0;
    cfg.inner_lr = 0.05;
    cfg.outer_rounds = 1;

    std::size_t classes = 0;
    const auto base_shards = small_shards(cfg, &classes);

    SUBCASE("identical shards") {
        Setup s = make_setup(cfg, identical_shards(base_shards[0], cfg.num_clients), classes);
        s.clients = stage1_local_learning(s.clients, s.base, cfg);
        const ServerState srv = stage2_init_global(s.clients, cfg);
        const RoundResult r = stage2_round(srv, s.clients, s.base, cfg, CommLedger{});
        const AdapterSet want =
            oracle::centralized_step(srv.global_adapter, s.clients, s.base, cfg.inner_lr);
        CHECK(oracle::max_abs_diff(r.server.global_adapter, want) < 1e-8);
    }
    SUBCASE("equal-size distinct shards") {
        auto shards = base_shards;
        std::size_t smallest = shards[0].train.size();
        for (const auto& sh : shards) smallest = std::min(smallest, sh.train.size());
        for (auto& sh : shards) sh.train.resize(smallest);
        Setup s = make_setup(cfg, shards, classes);
        const ServerState srv = stage2_init_global(s.clients, cfg);
        const RoundResult r = stage2_round(srv, s.clients, s.base, cfg, CommLedger{});
        const AdapterSet want =
            oracle::centralized_step(srv.global_adapter, s.clients, s.base, cfg.inner_lr);
        CHECK(oracle::max_abs_diff(r.server.global_adapter, want) < 1e-8);
    }
}

TEST_CASE("a single averaging round is model souping") {
    FederationConfig cfg = small_config();
    cfg.outer_rounds = 1;
    cfg.outer_momentum = 0.0;
    cfg.outer_lr = 1.0;
    Setup s = make_setup(cfg);
    s.clients = stage1_local_learning(s.clients, s.base, cfg);
    const ServerState srv = stage2_init_global(s.clients, cfg);
    const RoundResult r = stage2_round(srv, s.clients, s.base, cfg, CommLedger{});
    std::vector<AdapterSet> tuned;
    for (const ClientState& c : r.clients) tuned.push_back(c.global_copy);
    CHECK(oracle::max_abs_diff(r.server.global_adapter, oracle::plain_mean(tuned)) < 1e-12);
}

TEST_CASE("round bookkeeping and personalized copies") {
    FederationConfig cfg = small_config();
    Setup s = make_setup(cfg);
    s.clients = stage1_local_learning(s.clients, s.base, cfg);
    const ServerState srv = stage2_init_global(s.clients, cfg);
    const auto size = static_cast<std::int64_t>(serialized_size(srv.global_adapter));
    const auto n = static_cast<std::int64_t>(cfg.num_clients);

    SUBCASE("H = 1 copies every round") {
        const RoundResult r = stage2_round(srv, s.clients, s.base, cfg, CommLedger{});
        CHECK(r.server.round == 1);
        CHECK(r.ledger.rounds_sent == 1);
        CHECK(r.ledger.bytes_up == n * size);
        CHECK(r.ledger.bytes_down == n * size);
        CHECK(r.ledger.inner_steps_total == n * cfg.inner_steps);
        CHECK(r.ledger.sync_events == 1);
        for (const ClientState& c : r.clients) CHECK(c.personalized == c.global_copy);
    }
    SUBCASE("H = inf never touches the personalized adapter") {
        cfg.sync_every = std::nullopt;
        ServerState cur = srv;
        std::vector<ClientState> clients = s.clients;
        CommLedger ledger;
        while (cur.round < cfg.outer_rounds) {
            RoundResult r = stage2_round(cur, clients, s.base, cfg, ledger);
            cur = r.server;
            clients = r.clients;
            ledger = r.ledger;
        }
        for (std::size_t i = 0; i < clients.size(); ++i) {
            CHECK(clients[i].personalized == s.clients[i].personalized);
        }
        CHECK(ledger.sync_events == 0);
    }
    SUBCASE("no round past T") {
        ServerState done = srv;
        done.round = cfg.outer_rounds;
        CHECK_THROWS_AS(stage2_round(done, s.clients, s.base, cfg, CommLedger{}), ContractError);
    }
}

TEST_CASE("a failing client leaves the round inputs untouched") {
    FederationConfig cfg = small_config();
    cfg.jobs = 3;
    Setup s = make_setup(cfg);
    s.clients = stage1_local_learning(s.clients, s.base, cfg);
    const ServerState srv = stage2_init_global(s.clients, cfg);
    std::vector<ClientState> clients = s.clients;
    ClientShard bad = *clients[2].shard;
    for (LabeledExample& e : bad.train) e.label = 99;
    clients[2].shard = std::make_shared<const ClientShard>(bad);
    const std::vector<ClientState> before = clients;
    const ServerState srv_before = srv;
    CommLedger ledger;
    ledger.rounds_sent = 7;

    CHECK_THROWS(stage2_round(srv, clients, s.base, cfg, ledger));
    CHECK(srv.global_adapter == srv_before.global_adapter);
    CHECK(srv.round == srv_before.round);
    CHECK(ledger.rounds_sent == 7);
    for (std::size_t i = 0; i < clients.size(); ++i) {
        CHECK(clients[i].personalized == before[i].personalized);
        CHECK(clients[i].rng == before[i].rng);
    }
}

TEST_CASE("rounds match an independent FedAvg loop") {
    FederationConfig cfg = small_config();
    cfg.num_clients = 5;
    cfg.outer_rounds = 10;
    cfg.inner_steps = 3;
    cfg.outer_momentum = 0.0;
    cfg.outer_lr = 1.0;
    cfg.jobs = 2;
    Setup s = make_setup(cfg);
    s.clients = stage1_local_learning(s.clients, s.base, cfg);
    const AdapterSet want = oracle::fedavg(s.clients, s.base, cfg);

    ServerState cur = stage2_init_global(s.clients, cfg);
    std::vector<ClientState> clients = s.clients;
    CommLedger ledger;
    while (cur.round < cfg.outer_rounds) {
        RoundResult r = stage2_round(cur, clients, s.base, cfg, ledger);
        cur = r.server;
        clients = r.clients;
        ledger = r.ledger;
    }
    CHECK(oracle::max_abs_diff(cur.global_adapter, want) < 1e-10);
}

TEST_CASE("stage 3 fusion modes") {
    FederationConfig cfg = small_config();
    Setup s = make_setup(cfg);
    s.clients = stage1_local_learning(s.clients, s.base, cfg);
    ServerState srv = stage2_init_global(s.clients, cfg);
    CommLedger ledger;
    while (srv.round < cfg.outer_rounds) {
        RoundResult r = stage2_round(srv, s.clients, s.base, cfg, ledger);
        srv = r.server;
        s.clients = r.clients;
        ledger = r.ledger;
    }

    SUBCASE("GlobalOnly reproduces the global model") {
        cfg.fusion_mode = FusionMode::kGlobalOnly;
        const auto fused = stage3_fusion(s.clients, srv, s.base, cfg);
        for (const ClientState& c : fused) {
            CHECK(c.fusion_weights == FusionWeights{0.0, 1.0});
            const Batch b = make_batch(c.shard->test);
            CHECK(max_abs_diff(s.base.logits(b.x, fused_adapters(c, srv)),
                               s.base.logits(b.x, srv.global_adapter)) == 0.0);
        }
    }
    SUBCASE("PersonalizedOnly keeps the personalized adapter") {
        cfg.fusion_mode = FusionMode::kPersonalizedOnly;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            CHECK(fused_adapters(c, srv) == c.personalized);
        }
    }
    SUBCASE("heavy regularization pins the weights near zero") {
        cfg.fusion_lambda = 1e3;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            CHECK(std::abs(c.fusion_weights.w1) <= 0.1);
            CHECK(std::abs(c.fusion_weights.w2) <= 0.1);
        }
    }
    SUBCASE("tuned weights never lose to the personalized adapter on the fusion set") {
        cfg.fusion_lambda = 0.0;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            const double tuned = fusion_loss(c, srv.global_adapter, s.base, c.fusion_weights);
            const double pers = fusion_loss(c, srv.global_adapter, s.base, FusionWeights{1.0, 0.0});
            CHECK(tuned <= pers);
            CHECK(std::abs(c.fusion_weights.w1) <= 1.5);
            CHECK(std::abs(c.fusion_weights.w2) <= 1.5);
        }
    }
    SUBCASE("baselines") {
        cfg.fusion_mode = FusionMode::kAverage;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            CHECK(c.fusion_weights == FusionWeights{0.5, 0.5});
        }
        cfg.fusion_mode = FusionMode::kSum;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            CHECK(c.fusion_weights == FusionWeights{1.0, 1.0});
        }
        cfg.fusion_mode = FusionMode::kRandom;
        for (const ClientState& c : stage3_fusion(s.clients, srv, s.base, cfg)) {
            CHECK(c.fusion_weights.w1 >= 0.0);
            CHECK(c.fusion_weights.w1 <= 1.0);
            CHECK(c.fusion_weights.w2 >= 0.0);
            CHECK(c.fusion_weights.w2 <= 1.0);
        }
    }
}

TEST_CASE("full run: ledger, checksum and determinism") {
    FederationConfig cfg = small_config();
    std::size_t classes = 0;
    const auto shards = small_shards(cfg, &classes);
    const RunResult a = run_fdlora(cfg, shards, classes);

    const auto size = static_cast<std::int64_t>(serialized_size(a.server.global_adapter));
    const auto n = static_cast<std::int64_t>(cfg.num_clients);
    CHECK(a.report.ledger.rounds_sent == cfg.outer_rounds);
    CHECK(a.report.ledger.bytes_up == cfg.outer_rounds * n * size);
    CHECK(a.report.ledger.bytes_down == cfg.outer_rounds * n * size);
    CHECK(a.report.ledger.sync_events == cfg.expected_sync_events());
    CHECK(a.report.global_adapter_bytes == size);
    CHECK(a.report.base_checksum == make_base_model(cfg, a.base.input_dim(), classes).checksum());
    CHECK(a.manifest["base_checksum"] == a.report.base_checksum);
    CHECK(a.manifest["initial_adapters_hash"].get<std::string>().size() == 40);

    FederationConfig par = cfg;
    par.jobs = 4;
    const RunResult b = run_fdlora(par, shards, classes);
    CHECK(a.report.to_json(false).dump() == b.report.to_json(false).dump());
    CHECK(a.server.global_adapter == b.server.global_adapter);
    CHECK_FALSE(a.report.to_json(false).contains("timing"));
    CHECK(a.report.to_json(true).contains("timing"));
}

TEST_CASE("every client shares the initial adapters") {
    FederationConfig cfg = small_config();
    std::size_t classes = 0;
    const auto shards = small_shards(cfg, &classes);
    cfg.local_epochs = 0;
    cfg.outer_rounds = 0;
    cfg.fusion_mode = FusionMode::kPersonalizedOnly;
    const RunResult r = run_fdlora(cfg, shards, classes);
    for (const ClientState& c : r.clients) CHECK(c.personalized == r.initial_adapters);
}

TEST_CASE("zero rounds with PersonalizedOnly is the local baseline") {
    FederationConfig cfg = small_config();
    cfg.outer_rounds = 0;
    cfg.fusion_mode = FusionMode::kPersonalizedOnly;
    std::size_t classes = 0;
    const auto shards = small_shards(cfg, &classes);
    const RunResult r = run_fdlora(cfg, shards, classes);
    CHECK(r.report.ledger.rounds_sent == 0);
    CHECK(r.report.ledger.bytes_up == 0);

    const BaseModel base = make_base_model(cfg, r.base.input_dim(), classes);
    const auto local = stage1_local_learning(make_clients(shards, initial_adapters(base, cfg), cfg),
                                             base, cfg);
    for (std::size_t i = 0; i < local.size(); ++i) {
        const ClassificationMetrics m = evaluate(base, local[i].personalized, shards[i].test);
        CHECK(m.accuracy == r.report.clients[i].metrics.accuracy);
        CHECK(m.f1 == r.report.clients[i].metrics.f1);
        CHECK(m.loss == r.report.clients[i].metrics.loss);
    }
}

TEST_CASE("with H dividing T the final personalized adapter is the last global copy") {
    for (std::int64_t h : {1, 2, 4}) {
        FederationConfig cfg = small_config();
        cfg.sync_every = h;
        std::size_t classes = 0;
        const auto shards = small_shards(cfg, &classes);
        const RunResult r = run_fdlora(cfg, shards, classes);
        for (const ClientState& c : r.clients) CHECK(c.personalized == c.global_copy);
        CHECK(r.report.ledger.sync_events == cfg.outer_rounds / h);
    }
}

TEST_CASE("checkpoints are written for every round") {
    FederationConfig cfg = small_config();
    cfg.outer_rounds = 2;
    std::size_t classes = 0;
    const auto shards = small_shards(cfg, &classes);
    const auto dir = std::filesystem::temp_directory_path() / "fdlora_test_ckpt";
    std::filesystem::remove_all(dir);
    run_fdlora(cfg, shards, classes, RunOptions{dir});
    for (int t = 0; t <= 2; ++t) {
        const auto rd = dir / ("round_" + std::to_string(t));
        CHECK(std::filesystem::exists(rd / "global.json"));
        for (std::size_t i = 0; i < cfg.num_clients; ++i) {
            CHECK(std::filesystem::exists(rd / ("client_" + std::to_string(i) + "_personalized.json")));
        }
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("run input checks") {
    FederationConfig cfg = small_config();
    std::size_t classes = 0;
    auto shards = small_shards(cfg, &classes);
    shards.pop_back();
    CHECK_THROWS_AS(run_fdlora(cfg, shards, classes), ConfigError);
    shards = small_shards(cfg, &classes);
    shards[1].test.clear();
    CHECK_THROWS_AS(run_fdlora(cfg, shards, classes), ConfigError);
}

TEST_CASE("sample std and mean") {
    const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    CHECK(mean_of(v) == 2.5);
    CHECK(sample_std(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
    CHECK(sample_std(std::vector<double>{2.0}) == 0.0);
}
