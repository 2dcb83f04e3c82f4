// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/datagen/jsonl.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fdlora/common/digest.hpp"
#include "fdlora/common/io.hpp"
#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
    throw InputError("line " + std::to_string(line) + ": " + what);
}

const nlohmann::json* field(const nlohmann::json& obj, const char* name, const char* alias) {
    if (auto it = obj.find(name); it != obj.end()) return &*it;
    if (auto it = obj.find(alias); it != obj.end()) return &*it;
    return nullptr;
}

}  // namespace

Dataset parse_jsonl(const std::string& text) {
    Dataset out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            line_error(lineno, "not valid JSON");
        }
        if (!obj.is_object()) line_error(lineno, "expected a JSON object");

        const nlohmann::json* feats = field(obj, "features", "input");
        const nlohmann::json* label = field(obj, "label", "output");
        if (!feats || !feats->is_array() || feats->empty()) {
            line_error(lineno, "missing non-empty numeric \"features\" array");
        }
        if (!label || !label->is_number_integer()) line_error(lineno, "missing integer \"label\"");

        LabeledExample ex;
        for (const auto& v : *feats) {
            if (!v.is_number()) line_error(lineno, "non-numeric feature value");
            const double d = v.get<double>();
            if (!std::isfinite(d)) line_error(lineno, "non-finite feature value");
            ex.features.push_back(d);
        }
        const auto lab = label->get<long long>();
        if (lab < 0) line_error(lineno, "negative label");
        ex.label = static_cast<int>(lab);
        if (out.empty()) {
            dim = ex.features.size();
        } else if (ex.features.size() != dim) {
            line_error(lineno, "expected " + std::to_string(dim) + " features, found " +
                                   std::to_string(ex.features.size()));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

Dataset load_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_text_file(path)); }

std::string dump_jsonl(const Dataset& data) {
    std::string out;
    for (const LabeledExample& ex : data) {
        nlohmann::ordered_json j;
        j["features"] = ex.features;
        j["label"] = ex.label;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void save_jsonl(const std::filesystem::path& path, const Dataset& data) {
    write_text_file(path, dump_jsonl(data));
}

std::string dataset_digest(const Dataset& data) { return sha256_hex(dump_jsonl(data)); }

}  // namespace fdlora
