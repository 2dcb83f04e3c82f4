// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/common/digest.hpp"

#include <array>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace fdlora {

namespace {

std::string digest_hex(const EVP_MD* md, std::string_view prefix, std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), prefix.data(), prefix.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
        throw std::runtime_error("digest computation failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        char buf[3];
        std::snprintf(buf, sizeof(buf), "%02x", out[i]);
        hex += buf;
    }
    return hex;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) { return digest_hex(EVP_sha256(), {}, bytes); }

std::string git_blob_hash(std::string_view bytes) {
    std::string header = "blob " + std::to_string(bytes.size());
    header.push_back('\0');
    return digest_hex(EVP_sha1(), header, bytes);
}

}  // namespace fdlora
