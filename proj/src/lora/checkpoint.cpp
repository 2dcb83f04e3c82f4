// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/lora/checkpoint.hpp"

#include <json.hpp>

#include "fdlora/common/io.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

using Json = nlohmann::ordered_json;

Json adapter_to_json(const LoraAdapter& adapter, std::uint64_t seed, std::int64_t round) {
    Json j;
    j["site_id"] = adapter.site_id();
    j["rank"] = adapter.rank();
    j["d"] = adapter.out_dim();
    j["k"] = adapter.in_dim();
    auto b = adapter.b_factor().data();
    auto a = adapter.a_factor().data();
    j["b_factor"] = std::vector<double>(b.begin(), b.end());
    j["a_factor"] = std::vector<double>(a.begin(), a.end());
    j["seed"] = seed;
    j["protocol_round"] = round;
    return j;
}

AdapterCheckpoint adapter_from_json(const Json& j) {
    try {
        const auto site = j.at("site_id").get<std::string>();
        const auto rank = j.at("rank").get<std::size_t>();
        const auto d = j.at("d").get<std::size_t>();
        const auto k = j.at("k").get<std::size_t>();
        auto b = j.at("b_factor").get<std::vector<double>>();
        auto a = j.at("a_factor").get<std::vector<double>>();
        if (b.size() != d * rank || a.size() != rank * k) {
            throw InputError("checkpoint for site '" + site + "': factor lengths do not match d, k, rank");
        }
        AdapterCheckpoint out{LoraAdapter(site, Matrix(d, rank, std::move(b)),
                                          Matrix(rank, k, std::move(a))),
                              j.at("seed").get<std::uint64_t>(),
                              j.at("protocol_round").get<std::int64_t>()};
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed adapter checkpoint: ") + e.what());
    }
}

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
}

}  // namespace

std::string dump_checkpoint(const AdapterCheckpoint& ckpt) {
    return adapter_to_json(ckpt.adapter, ckpt.seed, ckpt.protocol_round).dump() + "\n";
}

AdapterCheckpoint parse_checkpoint(const std::string& text) {
    return adapter_from_json(parse_json(text));
}

std::string dump_checkpoint(const AdapterSetCheckpoint& ckpt) {
    Json j;
    j["adapters"] = Json::array();
    for (const auto& [_, adapter] : ckpt.adapters) {
        j["adapters"].push_back(adapter_to_json(adapter, ckpt.seed, ckpt.protocol_round));
    }
    return j.dump() + "\n";
}

AdapterSetCheckpoint parse_set_checkpoint(const std::string& text) {
    const Json j = parse_json(text);
    if (!j.contains("adapters") || !j["adapters"].is_array()) {
        throw InputError("adapter set checkpoint needs an \"adapters\" array");
    }
    AdapterSetCheckpoint out;
    bool first = true;
    for (const Json& entry : j["adapters"]) {
        AdapterCheckpoint c = adapter_from_json(entry);
        if (first) {
            out.seed = c.seed;
            out.protocol_round = c.protocol_round;
            first = false;
        } else if (c.seed != out.seed || c.protocol_round != out.protocol_round) {
            throw InputError("adapter set checkpoint mixes seeds or protocol rounds");
        }
        if (out.adapters.contains(c.adapter.site_id())) {
            throw InputError("adapter set checkpoint repeats site '" + c.adapter.site_id() + "'");
        }
        out.adapters.insert(std::move(c.adapter));
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const AdapterCheckpoint& ckpt) {
    write_text_file(path, dump_checkpoint(ckpt));
}

AdapterCheckpoint load_checkpoint(const std::filesystem::path& path) {
    return parse_checkpoint(read_text_file(path));
}

void save_checkpoint(const std::filesystem::path& path, const AdapterSetCheckpoint& ckpt) {
    write_text_file(path, dump_checkpoint(ckpt));
}

AdapterSetCheckpoint load_set_checkpoint(const std::filesystem::path& path) {
    return parse_set_checkpoint(read_text_file(path));
}

}  // namespace fdlora
