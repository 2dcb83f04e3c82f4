// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "fdlora/datagen/example.hpp"

namespace fdlora {

/// One JSON object per line with numeric "features" (alias "input") and an
/// integer "label" (alias "output"). Blank lines are skipped. Schema errors
/// raise InputError naming the 1-based line number.
Dataset parse_jsonl(const std::string& text);
Dataset load_jsonl(const std::filesystem::path& path);

/// Writes {"features": [...], "label": n} lines; load_jsonl reads them back
/// to an equal dataset.
std::string dump_jsonl(const Dataset& data);
void save_jsonl(const std::filesystem::path& path, const Dataset& data);

/// Hex SHA-256 of dump_jsonl(data).
std::string dataset_digest(const Dataset& data);

}  // namespace fdlora
