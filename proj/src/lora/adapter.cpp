// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/lora/adapter.hpp"

#include <algorithm>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

constexpr std::size_t kSiteHeaderBytes = 64;
constexpr std::size_t kBytesPerEntry = 8;

}  // namespace

LoraAdapter::LoraAdapter(std::string site_id, Matrix b_factor, Matrix a_factor)
    : site_id_(std::move(site_id)), b_(std::move(b_factor)), a_(std::move(a_factor)) {
    if (b_.empty() || a_.empty()) throw ShapeError("adapter '" + site_id_ + "': empty factor");
    if (b_.cols() != a_.rows()) {
        throw ShapeError("adapter '" + site_id_ + "': B is " + b_.shape_string() + " but A is " +
                         a_.shape_string() + "; inner dimensions must equal the rank");
    }
    if (rank() > std::min(out_dim(), in_dim())) {
        std::ostringstream os;
        os << "adapter '" << site_id_ << "': rank " << rank() << " exceeds min(d, k) for "
           << out_dim() << "x" << in_dim();
        throw ConfigError(os.str());
    }
}

LoraAdapter LoraAdapter::init(std::string site_id, std::size_t d, std::size_t k, std::size_t rank,
                              Rng& rng, double a_stddev) {
    if (rank == 0) throw ConfigError("adapter rank must be positive");
    if (rank > std::min(d, k)) {
        std::ostringstream os;
        os << "adapter '" << site_id << "': rank " << rank << " exceeds min(d, k) for " << d
           << "x" << k;
        throw ConfigError(os.str());
    }
    Matrix a = gaussian_matrix(rank, k, a_stddev, rng);
    return LoraAdapter(std::move(site_id), Matrix(d, rank), std::move(a));
}

LoraAdapter LoraAdapter::with_factors(Matrix b_factor, Matrix a_factor) const {
    if (!b_factor.same_shape(b_) || !a_factor.same_shape(a_)) {
        throw ShapeError("adapter '" + site_id_ + "': replacement factors " +
                         b_factor.shape_string() + "/" + a_factor.shape_string() +
                         " do not match " + b_.shape_string() + "/" + a_.shape_string());
    }
    return LoraAdapter(site_id_, std::move(b_factor), std::move(a_factor));
}

Matrix delta(const LoraAdapter& adapter) { return matmul(adapter.b_factor(), adapter.a_factor()); }

Matrix effective_weight(const Matrix& base, const LoraAdapter& adapter) {
    if (base.rows() != adapter.out_dim() || base.cols() != adapter.in_dim()) {
        std::ostringstream os;
        os << "site '" << adapter.site_id() << "': base weight is " << base.shape_string()
           << " but adapter delta is " << adapter.out_dim() << "x" << adapter.in_dim();
        throw ShapeError(os.str());
    }
    return add(base, delta(adapter));
}

void AdapterSet::insert(LoraAdapter adapter) {
    const std::string key = adapter.site_id();
    adapters_.insert_or_assign(key, std::move(adapter));
}

const LoraAdapter& AdapterSet::at(const std::string& site_id) const {
    auto it = adapters_.find(site_id);
    if (it == adapters_.end()) throw ContractError("no adapter for site '" + site_id + "'");
    return it->second;
}

const LoraAdapter* AdapterSet::find(const std::string& site_id) const {
    auto it = adapters_.find(site_id);
    return it == adapters_.end() ? nullptr : &it->second;
}

std::vector<std::string> AdapterSet::site_ids() const {
    std::vector<std::string> ids;
    ids.reserve(adapters_.size());
    for (const auto& [id, _] : adapters_) ids.push_back(id);
    return ids;
}

bool AdapterSet::same_structure(const AdapterSet& other) const {
    if (adapters_.size() != other.adapters_.size()) return false;
    auto it = other.adapters_.begin();
    for (const auto& [id, adapter] : adapters_) {
        if (id != it->first) return false;
        if (!adapter.b_factor().same_shape(it->second.b_factor()) ||
            !adapter.a_factor().same_shape(it->second.a_factor())) {
            return false;
        }
        ++it;
    }
    return true;
}

AdapterGrads zeros_like(const AdapterSet& set) {
    AdapterGrads out;
    for (const auto& [id, adapter] : set) {
        out.emplace(id, FactorPair{Matrix(adapter.out_dim(), adapter.rank()),
                                   Matrix(adapter.rank(), adapter.in_dim())});
    }
    return out;
}

void require_compatible(std::span<const AdapterSet> sets, const char* context) {
    if (sets.empty()) return;
    const AdapterSet& first = sets.front();
    for (const AdapterSet& s : sets) {
        if (s.site_ids() != first.site_ids()) {
            throw ConfigError(std::string(context) + ": adapter sets cover different sites");
        }
        for (const auto& [id, adapter] : s) {
            const LoraAdapter& ref = first.at(id);
            if (adapter.rank() != ref.rank()) {
                std::ostringstream os;
                os << context << ": site '" << id << "' has ranks " << ref.rank() << " and "
                   << adapter.rank();
                throw ConfigError(os.str());
            }
            if (adapter.out_dim() != ref.out_dim() || adapter.in_dim() != ref.in_dim()) {
                throw ConfigError(std::string(context) + ": site '" + id +
                                  "' has mismatched shapes");
            }
        }
    }
}

AdapterSet average_adapters(std::span<const AdapterSet> sets) {
    if (sets.empty()) throw ContractError("average_adapters: no adapter sets given");
    require_compatible(sets, "average_adapters");

    AdapterSet out;
    std::vector<const Matrix*> bs(sets.size());
    std::vector<const Matrix*> as(sets.size());
    for (const auto& [id, ref] : sets.front()) {
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const LoraAdapter& adapter = sets[i].at(id);
            bs[i] = &adapter.b_factor();
            as[i] = &adapter.a_factor();
        }
        out.insert(LoraAdapter(id, pairwise_mean(bs), pairwise_mean(as)));
    }
    return out;
}

std::size_t count_trainable(const AdapterSet& set) {
    std::size_t total = 0;
    for (const auto& [_, adapter] : set) {
        total += adapter.rank() * (adapter.out_dim() + adapter.in_dim());
    }
    return total;
}

std::size_t serialized_size(const AdapterSet& set) {
    std::size_t bytes = 0;
    for (const auto& [_, adapter] : set) {
        bytes += kSiteHeaderBytes + kBytesPerEntry * adapter.parameter_count();
    }
    return bytes;
}

}  // namespace fdlora
