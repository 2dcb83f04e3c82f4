// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/common/io.hpp"

#include <fstream>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace fdlora
