// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fdlora/lora/adapter.hpp"

namespace fdlora {

/// One adapter as stored on disk:
///   {"site_id", "rank", "d", "k", "b_factor": [...], "a_factor": [...],
///    "seed", "protocol_round"}
/// with factors flattened row-major. Saving a loaded file reproduces it
/// byte for byte.
struct AdapterCheckpoint {
    LoraAdapter adapter;
    std::uint64_t seed = 0;
    std::int64_t protocol_round = 0;
};

/// A whole adapter set: {"adapters": [<adapter document>, ...]} in site order.
struct AdapterSetCheckpoint {
    AdapterSet adapters;
    std::uint64_t seed = 0;
    std::int64_t protocol_round = 0;
};

std::string dump_checkpoint(const AdapterCheckpoint& ckpt);
AdapterCheckpoint parse_checkpoint(const std::string& text);

std::string dump_checkpoint(const AdapterSetCheckpoint& ckpt);
AdapterSetCheckpoint parse_set_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const AdapterCheckpoint& ckpt);
AdapterCheckpoint load_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const AdapterSetCheckpoint& ckpt);
AdapterSetCheckpoint load_set_checkpoint(const std::filesystem::path& path);

}  // namespace fdlora
