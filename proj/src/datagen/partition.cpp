// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/datagen/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fdlora/errors.hpp"

namespace fdlora {

namespace {

using Grid = std::vector<std::vector<double>>;
using Counts = std::vector<std::vector<std::size_t>>;

std::vector<double> draw_dirichlet(double alpha, std::size_t n, Rng& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(n);
    for (;;) {
        double total = 0.0;
        for (double& v : p) {
            v = gamma(rng);
            total += v;
        }
        // Tiny alpha can underflow every component; draw again.
        if (total > 0.0 && std::isfinite(total)) {
            for (double& v : p) v /= total;
            return p;
        }
    }
}

// Rescales rows and columns of a positive matrix until its marginals match
// (Sinkhorn-Knopp). Rows are exact on return, columns within tolerance.
void match_marginals(Grid& x, const std::vector<double>& row_sums,
                     const std::vector<double>& col_sums) {
    const std::size_t rows = x.size();
    const std::size_t cols = col_sums.size();
    for (int iter = 0; iter < 20000; ++iter) {
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < rows; ++c) s += x[c][j];
            if (s > 0.0)
                for (std::size_t c = 0; c < rows; ++c) x[c][j] *= col_sums[j] / s;
        }
        double worst = 0.0;
        for (std::size_t c = 0; c < rows; ++c) {
            double s = 0.0;
            for (double v : x[c]) s += v;
            if (s > 0.0)
                for (double& v : x[c]) v *= row_sums[c] / s;
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < rows; ++c) s += x[c][j];
            worst = std::max(worst, std::abs(s - col_sums[j]));
        }
        if (worst < 1e-9) return;
    }
}

// Integer matrix with exact row sums `rows_total` and column sums
// `cols_total`, as close as the rounding allows to the real matrix `x`.
Counts round_with_marginals(const Grid& x, const std::vector<std::size_t>& rows_total,
                            const std::vector<std::size_t>& cols_total) {
    const std::size_t rows = x.size();
    const std::size_t cols = cols_total.size();
    Counts m(rows, std::vector<std::size_t>(cols, 0));
    std::vector<long long> row_def(rows);
    std::vector<long long> col_def(cols);
    for (std::size_t j = 0; j < cols; ++j) col_def[j] = static_cast<long long>(cols_total[j]);

    struct Cell {
        double frac;
        std::size_t c, j;
    };
    std::vector<Cell> cells;
    for (std::size_t c = 0; c < rows; ++c) {
        row_def[c] = static_cast<long long>(rows_total[c]);
        for (std::size_t j = 0; j < cols; ++j) {
            const double fl = std::floor(x[c][j] + 1e-9);
            auto take = static_cast<long long>(std::max(0.0, fl));
            take = std::min({take, row_def[c], col_def[j]});
            m[c][j] = static_cast<std::size_t>(take);
            row_def[c] -= take;
            col_def[j] -= take;
            cells.push_back({x[c][j] - fl, c, j});
        }
    }
    std::stable_sort(cells.begin(), cells.end(),
                     [](const Cell& a, const Cell& b) { return a.frac > b.frac; });
    for (const Cell& cell : cells) {
        if (row_def[cell.c] > 0 && col_def[cell.j] > 0) {
            ++m[cell.c][cell.j];
            --row_def[cell.c];
            --col_def[cell.j];
        }
    }
    // Whatever is left goes to the column with the largest remaining deficit.
    for (std::size_t c = 0; c < rows; ++c) {
        while (row_def[c] > 0) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < cols; ++j)
                if (col_def[j] > col_def[best]) best = j;
            if (col_def[best] <= 0) throw ContractError("partition rounding lost mass");
            ++m[c][best];
            --row_def[c];
            --col_def[best];
        }
    }
    return m;
}

Counts proportional_counts(const Grid& props, const std::vector<std::size_t>& class_totals) {
    Counts counts;
    for (std::size_t c = 0; c < props.size(); ++c) {
        counts.push_back(largest_remainder(props[c], class_totals[c]));
    }
    return counts;
}

Counts equal_size_counts(const Grid& props, const std::vector<std::size_t>& class_totals,
                         std::size_t num_clients) {
    const std::size_t total = std::accumulate(class_totals.begin(), class_totals.end(),
                                              std::size_t{0});
    const std::vector<double> uniform(num_clients, 1.0);
    const std::vector<std::size_t> sizes = largest_remainder(uniform, total);

    Grid x(props.size(), std::vector<double>(num_clients));
    std::vector<double> row_sums(props.size());
    for (std::size_t c = 0; c < props.size(); ++c) {
        row_sums[c] = static_cast<double>(class_totals[c]);
        for (std::size_t j = 0; j < num_clients; ++j) {
            x[c][j] = std::max(props[c][j], 1e-12) * row_sums[c];
        }
    }
    std::vector<double> col_sums(sizes.begin(), sizes.end());
    match_marginals(x, row_sums, col_sums);
    return round_with_marginals(x, class_totals, sizes);
}

}  // namespace

std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
    if (weights.empty()) throw ContractError("largest_remainder: no weights");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ContractError("largest_remainder: negative weight");
        wsum += w;
    }
    if (wsum <= 0.0) throw ContractError("largest_remainder: weights sum to zero");

    std::vector<std::size_t> out(weights.size());
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double exact = static_cast<double>(total) * weights[i] / wsum;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[i];
        rema.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[rema[k % rema.size()].second];
    while (assigned > total) {
        // Floating error can overshoot by one; take it back from the largest cell.
        auto it = std::max_element(out.begin(), out.end());
        --*it;
        --assigned;
    }
    return out;
}

ClientShard split_shard(const Dataset& data, std::size_t client_id,
                        std::vector<std::size_t> indices, double test_fraction, Rng& rng) {
    std::shuffle(indices.begin(), indices.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(indices.size())));
    ClientShard shard;
    shard.client_id = client_id;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t idx = indices[k];
        if (k < indices.size() - n_test) {
            shard.train.push_back(data[idx]);
            shard.train_index.push_back(idx);
        } else {
            shard.test.push_back(data[idx]);
            shard.test_index.push_back(idx);
        }
    }
    return shard;
}

std::vector<ClientShard> dirichlet_partition(const Dataset& data, const PartitionSpec& spec) {
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha)) {
        throw ConfigError("dirichlet_partition: alpha must be positive and finite");
    }
    if (spec.num_clients == 0) throw ConfigError("dirichlet_partition: need at least one client");
    if (data.empty()) throw ConfigError("dirichlet_partition: dataset is empty");
    if (spec.test_fraction < 0.0 || spec.test_fraction >= 1.0) {
        throw ConfigError("dirichlet_partition: test_fraction must be in [0, 1)");
    }
    if (spec.equal_size && data.size() < spec.num_clients) {
        throw ConfigError("dirichlet_partition: fewer examples than clients");
    }

    const std::size_t classes = num_classes(data);
    const std::vector<std::size_t> totals = class_counts(data, classes);
    Rng rng(spec.seed);

    std::vector<std::vector<std::size_t>> pools(classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        pools[static_cast<std::size_t>(data[i].label)].push_back(i);
    }
    for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

    for (int attempt = 0; attempt <= spec.max_retries; ++attempt) {
        Grid props(classes);
        for (std::size_t c = 0; c < classes; ++c) {
            props[c] = draw_dirichlet(spec.alpha, spec.num_clients, rng);
        }
        const Counts counts = spec.equal_size
                                  ? equal_size_counts(props, totals, spec.num_clients)
                                  : proportional_counts(props, totals);

        std::vector<std::vector<std::size_t>> members(spec.num_clients);
        for (std::size_t c = 0; c < classes; ++c) {
            std::size_t next = 0;
            for (std::size_t j = 0; j < spec.num_clients; ++j) {
                for (std::size_t k = 0; k < counts[c][j]; ++k) members[j].push_back(pools[c][next++]);
            }
        }
        if (std::any_of(members.begin(), members.end(), [](const auto& m) { return m.empty(); })) {
            continue;
        }

        std::vector<ClientShard> shards;
        shards.reserve(spec.num_clients);
        for (std::size_t j = 0; j < spec.num_clients; ++j) {
            shards.push_back(split_shard(data, j, std::move(members[j]), spec.test_fraction, rng));
        }
        return shards;
    }
    std::ostringstream os;
    os << "dirichlet_partition: a client received no examples in " << spec.max_retries + 1
       << " draws (alpha=" << spec.alpha << ", clients=" << spec.num_clients
       << ", examples=" << data.size() << ")";
    throw ConfigError(os.str());
}

double class_proportion_std(const std::vector<ClientShard>& shards, std::size_t classes) {
    if (shards.empty() || classes == 0) return 0.0;
    double total = 0.0;
    for (const ClientShard& s : shards) {
        std::vector<double> counts(classes, 0.0);
        for (const auto* part : {&s.train, &s.test})
            for (const LabeledExample& ex : *part) counts[static_cast<std::size_t>(ex.label)] += 1.0;
        const double n = static_cast<double>(s.size());
        if (n == 0.0) continue;
        const double mean = 1.0 / static_cast<double>(classes);
        double var = 0.0;
        for (double c : counts) var += (c / n - mean) * (c / n - mean);
        total += std::sqrt(var / static_cast<double>(classes));
    }
    return total / static_cast<double>(shards.size());
}

std::string partition_manifest_json(const std::vector<ClientShard>& shards) {
    nlohmann::ordered_json j;
    j["clients"] = nlohmann::ordered_json::array();
    for (const ClientShard& s : shards) {
        nlohmann::ordered_json c;
        c["client_id"] = s.client_id;
        c["train"] = s.train_index;
        c["test"] = s.test_index;
        j["clients"].push_back(std::move(c));
    }
    return j.dump() + "\n";
}

std::vector<ManifestEntry> parse_partition_manifest(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        std::vector<ManifestEntry> out;
        for (const auto& c : j.at("clients")) {
            out.push_back({c.at("client_id").get<std::size_t>(),
                           c.at("train").get<std::vector<std::size_t>>(),
                           c.at("test").get<std::vector<std::size_t>>()});
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed partition manifest: ") + e.what());
    }
}

}  // namespace fdlora
