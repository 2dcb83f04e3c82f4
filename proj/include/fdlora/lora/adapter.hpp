// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdlora/numerics/matrix.hpp"
#include "fdlora/numerics/random.hpp"

namespace fdlora {

/// Low-rank update of one base weight: delta = B * A with B (d x r), A (r x k).
///
/// There is no alpha/r scaling; the adapter contributes B * A directly.
class LoraAdapter {
public:
    LoraAdapter(std::string site_id, Matrix b_factor, Matrix a_factor);

    /// B = 0 and A ~ N(0, a_stddev^2), so the initial delta is exactly zero.
    static LoraAdapter init(std::string site_id, std::size_t d, std::size_t k, std::size_t rank,
                            Rng& rng, double a_stddev = 0.02);

    const std::string& site_id() const noexcept { return site_id_; }
    const Matrix& b_factor() const noexcept { return b_; }
    const Matrix& a_factor() const noexcept { return a_; }
    std::size_t rank() const noexcept { return b_.cols(); }
    std::size_t out_dim() const noexcept { return b_.rows(); }
    std::size_t in_dim() const noexcept { return a_.cols(); }
    std::size_t parameter_count() const noexcept { return b_.size() + a_.size(); }

    /// Same site, new factors; shapes must match the current ones.
    LoraAdapter with_factors(Matrix b_factor, Matrix a_factor) const;

    friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;

private:
    std::string site_id_;
    Matrix b_;
    Matrix a_;
};

/// B * A.
Matrix delta(const LoraAdapter& adapter);

/// base + B * A. Throws ShapeError naming the site when shapes disagree.
Matrix effective_weight(const Matrix& base, const LoraAdapter& adapter);

/// Adapters keyed by the base-weight site they modify, in site-id order.
class AdapterSet {
public:
    using Map = std::map<std::string, LoraAdapter>;

    AdapterSet() = default;

    void insert(LoraAdapter adapter);
    bool contains(const std::string& site_id) const { return adapters_.count(site_id) != 0; }
    const LoraAdapter& at(const std::string& site_id) const;
    const LoraAdapter* find(const std::string& site_id) const;
    std::size_t size() const noexcept { return adapters_.size(); }
    bool empty() const noexcept { return adapters_.empty(); }
    std::vector<std::string> site_ids() const;

    Map::const_iterator begin() const { return adapters_.begin(); }
    Map::const_iterator end() const { return adapters_.end(); }

    /// Same sites with identical factor shapes.
    bool same_structure(const AdapterSet& other) const;

    friend bool operator==(const AdapterSet&, const AdapterSet&) = default;

private:
    Map adapters_;
};

/// Gradient (or any other same-shaped buffer) for one adapter's factors.
struct FactorPair {
    Matrix b;
    Matrix a;
};
using AdapterGrads = std::map<std::string, FactorPair>;

/// Zero-filled buffers shaped like `set`.
AdapterGrads zeros_like(const AdapterSet& set);

/// Per-entry mean of the B factors and of the A factors across sets
/// (factor-space averaging; the mean of deltas is generally different).
/// Throws ConfigError on differing sites or ranks, ContractError if empty.
AdapterSet average_adapters(std::span<const AdapterSet> sets);

/// Sum over adapters of r * (d + k).
std::size_t count_trainable(const AdapterSet& set);

/// Fails with ConfigError when `sets` disagree on sites, ranks or shapes.
void require_compatible(std::span<const AdapterSet> sets, const char* context);

/// 8 bytes per adapter entry plus a 64-byte header per site.
std::size_t serialized_size(const AdapterSet& set);

}  // namespace fdlora
