// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace fdlora {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Git object id of a blob with these contents: SHA-1 of "blob <len>\0<bytes>".
std::string git_blob_hash(std::string_view bytes);

}  // namespace fdlora
