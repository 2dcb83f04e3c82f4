// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/federation/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError("config: " + message);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::int64_t get_int(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    return v.get<std::int64_t>();
}

std::size_t get_count(const nlohmann::json& v, const std::string& key) {
    const std::int64_t n = get_int(v, key);
    if (n < 0) throw ConfigError("config: '" + key + "' must be >= 0, got " + std::to_string(n));
    return static_cast<std::size_t>(n);
}

double get_double(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return v.get<double>();
}

std::string get_string(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

void FederationConfig::validate() const {
    require(num_clients >= 1, "num_clients must be >= 1");
    require(outer_rounds >= 0, "outer_rounds must be >= 0, got " + std::to_string(outer_rounds));
    require(inner_steps >= 1, "inner_steps must be >= 1, got " + std::to_string(inner_steps));
    require(!sync_every || *sync_every >= 1, "sync_every must be >= 1 or inf");
    require(positive(dirichlet_alpha), "dirichlet_alpha must be > 0");
    require(positive(inner_lr), "inner_lr must be > 0");
    require(positive(outer_lr), "outer_lr must be > 0");
    require(std::isfinite(outer_momentum) && outer_momentum >= 0.0 && outer_momentum < 1.0,
            "outer_momentum must be in [0, 1)");
    require(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay must be >= 0");
    require(positive(lr_decay) && lr_decay <= 1.0, "lr_decay must be in (0, 1]");
    require(std::isfinite(fusion_lambda) && fusion_lambda >= 0.0, "fusion_lambda must be >= 0");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(local_epochs >= 0, "local_epochs must be >= 0");
    require(rank >= 1, "rank must be >= 1");
    require(fusion_steps >= 1, "fusion_steps must be >= 1");
    require(std::isfinite(test_fraction) && test_fraction >= 0.0 && test_fraction < 1.0,
            "test_fraction must be in [0, 1)");
    for (std::size_t h : hidden_dims) require(h >= 1, "hidden_dims entries must be >= 1");
    require(jobs >= 1, "jobs must be >= 1");
}

InnerOptConfig FederationConfig::inner_opt_config() const {
    InnerOptConfig c;
    c.kind = inner_optimizer;
    c.lr = inner_lr;
    c.weight_decay = weight_decay;
    c.lr_decay = lr_decay;
    return c;
}

bool FederationConfig::syncs_at(std::int64_t round) const {
    return sync_every.has_value() && round % *sync_every == 0;
}

std::int64_t FederationConfig::expected_sync_events() const {
    return sync_every ? outer_rounds / *sync_every : 0;
}

FederationConfig FederationConfig::desk_preset() {
    FederationConfig c;
    c.inner_lr = 0.03;
    c.outer_lr = 0.7;
    c.batch_size = 8;
    c.local_epochs = 20;
    return c;
}

nlohmann::ordered_json to_json(const FederationConfig& c) {
    nlohmann::ordered_json j;
    j["num_clients"] = c.num_clients;
    j["outer_rounds"] = c.outer_rounds;
    j["inner_steps"] = c.inner_steps;
    if (c.sync_every) {
        j["sync_every"] = *c.sync_every;
    } else {
        j["sync_every"] = "inf";
    }
    j["dirichlet_alpha"] = c.dirichlet_alpha;
    j["inner_lr"] = c.inner_lr;
    j["outer_lr"] = c.outer_lr;
    j["outer_momentum"] = c.outer_momentum;
    j["weight_decay"] = c.weight_decay;
    j["lr_decay"] = c.lr_decay;
    j["fusion_lambda"] = c.fusion_lambda;
    j["fusion_mode"] = std::string(to_string(c.fusion_mode));
    j["batch_size"] = c.batch_size;
    j["local_epochs"] = c.local_epochs;
    j["rank"] = c.rank;
    j["seed"] = c.seed;
    j["inner_optimizer"] = std::string(to_string(c.inner_optimizer));
    j["fusion_steps"] = c.fusion_steps;
    j["fusion_set_size"] = c.fusion_set_size;
    j["test_fraction"] = c.test_fraction;
    j["hidden_dims"] = c.hidden_dims;
    j["jobs"] = c.jobs;
    return j;
}

FederationConfig config_from_json(const nlohmann::json& j, FederationConfig c) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    static const std::set<std::string> known = {
        "num_clients", "outer_rounds", "inner_steps", "sync_every", "dirichlet_alpha",
        "inner_lr", "outer_lr", "outer_momentum", "weight_decay", "lr_decay",
        "fusion_lambda", "fusion_mode", "batch_size", "local_epochs", "rank", "seed",
        "inner_optimizer", "fusion_steps", "fusion_set_size", "test_fraction", "hidden_dims",
        "jobs"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        if (key == "num_clients") c.num_clients = get_count(value, key);
        else if (key == "outer_rounds") c.outer_rounds = get_int(value, key);
        else if (key == "inner_steps") c.inner_steps = get_int(value, key);
        else if (key == "sync_every") {
            if (value.is_null() || (value.is_string() && (value == "inf" || value == "infinity"))) {
                c.sync_every.reset();
            } else {
                c.sync_every = get_int(value, key);
            }
        }
        else if (key == "dirichlet_alpha") c.dirichlet_alpha = get_double(value, key);
        else if (key == "inner_lr") c.inner_lr = get_double(value, key);
        else if (key == "outer_lr") c.outer_lr = get_double(value, key);
        else if (key == "outer_momentum") c.outer_momentum = get_double(value, key);
        else if (key == "weight_decay") c.weight_decay = get_double(value, key);
        else if (key == "lr_decay") c.lr_decay = get_double(value, key);
        else if (key == "fusion_lambda") c.fusion_lambda = get_double(value, key);
        else if (key == "fusion_mode") c.fusion_mode = parse_fusion_mode(get_string(value, key));
        else if (key == "batch_size") c.batch_size = get_int(value, key);
        else if (key == "local_epochs") c.local_epochs = get_int(value, key);
        else if (key == "rank") c.rank = get_count(value, key);
        else if (key == "seed") c.seed = get_count(value, key);
        else if (key == "inner_optimizer") {
            c.inner_optimizer = parse_inner_optimizer(get_string(value, key));
        }
        else if (key == "fusion_steps") c.fusion_steps = static_cast<int>(get_int(value, key));
        else if (key == "fusion_set_size") c.fusion_set_size = get_count(value, key);
        else if (key == "test_fraction") c.test_fraction = get_double(value, key);
        else if (key == "hidden_dims") {
            if (!value.is_array()) throw ConfigError("config: 'hidden_dims' must be an array");
            c.hidden_dims.clear();
            for (const auto& h : value) c.hidden_dims.push_back(get_count(h, key));
        }
        else if (key == "jobs") c.jobs = get_count(value, key);
    }
    return c;
}

}  // namespace fdlora
