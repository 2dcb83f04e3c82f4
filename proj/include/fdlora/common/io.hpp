// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

namespace fdlora {

/// Reads a whole file; throws InputError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Truncates and writes `text`, creating parent directories as needed.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fdlora
