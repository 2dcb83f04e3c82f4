// Copyright (c) 2026, The fdlora Authors
// SPDX-License-Identifier: Apache-2.0

#include "fdlora/lora/fusion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "fdlora/errors.hpp"

namespace fdlora {

double FusionWeights::l1() const { return std::abs(w1) + std::abs(w2); }

FusionWeights clamp(FusionWeights w, const FusionBox& box) {
    return FusionWeights{std::clamp(w.w1, box.lo, box.hi), std::clamp(w.w2, box.lo, box.hi)};
}

std::string_view to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::kAdaFusion: return "AdaFusion";
        case FusionMode::kRandom: return "Random";
        case FusionMode::kAverage: return "Average";
        case FusionMode::kSum: return "Sum";
        case FusionMode::kPersonalizedOnly: return "PersonalizedOnly";
        case FusionMode::kGlobalOnly: return "GlobalOnly";
    }
    return "unknown";
}

FusionMode parse_fusion_mode(std::string_view name) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    };
    const std::string wanted = lower(name);
    for (FusionMode m : {FusionMode::kAdaFusion, FusionMode::kRandom, FusionMode::kAverage,
                         FusionMode::kSum, FusionMode::kPersonalizedOnly, FusionMode::kGlobalOnly}) {
        if (lower(to_string(m)) == wanted) return m;
    }
    throw ConfigError("unknown fusion mode '" + std::string(name) +
                      "' (expected AdaFusion, Random, Average, Sum, PersonalizedOnly, GlobalOnly)");
}

LoraAdapter ada_fuse(const LoraAdapter& personalized, const LoraAdapter& global,
                     const FusionWeights& w) {
    if (personalized.rank() != global.rank()) {
        std::ostringstream os;
        os << "ada_fuse: site '" << personalized.site_id() << "' has rank "
           << personalized.rank() << " vs " << global.rank();
        throw FusionError(os.str());
    }
    if (!personalized.b_factor().same_shape(global.b_factor()) ||
        !personalized.a_factor().same_shape(global.a_factor())) {
        throw FusionError("ada_fuse: site '" + personalized.site_id() +
                          "' factor shapes differ");
    }
    return LoraAdapter(personalized.site_id(),
                       axpby(w.w1, personalized.b_factor(), w.w2, global.b_factor()),
                       axpby(w.w1, personalized.a_factor(), w.w2, global.a_factor()));
}

AdapterSet ada_fuse(const AdapterSet& personalized, const AdapterSet& global,
                    const FusionWeights& w) {
    if (personalized.site_ids() != global.site_ids()) {
        throw FusionError("ada_fuse: adapter sets cover different sites");
    }
    AdapterSet out;
    for (const auto& [id, p] : personalized) out.insert(ada_fuse(p, global.at(id), w));
    return out;
}

FusionWeights baseline_fusion(FusionMode mode, Rng& rng) {
    switch (mode) {
        case FusionMode::kRandom: {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            auto draw = [&] {
                double v = 0.0;
                while (v == 0.0) v = unit(rng);
                return v;
            };
            const double w1 = draw();
            const double w2 = draw();
            return {w1, w2};
        }
        case FusionMode::kAverage: return {0.5, 0.5};
        case FusionMode::kSum: return {1.0, 1.0};
        case FusionMode::kPersonalizedOnly: return {1.0, 0.0};
        case FusionMode::kGlobalOnly: return {0.0, 1.0};
        case FusionMode::kAdaFusion: break;
    }
    throw ContractError("baseline_fusion: AdaFusion weights come from the fusion optimizer");
}

}  // namespace fdlora
