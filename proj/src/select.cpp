#include "lmsel/select.hpp"

#include "lmsel/error.hpp"
#include "lmsel/rng.hpp"
#include "lmsel/text.hpp"

#include <algorithm>
#include <cmath>

namespace lmsel {

std::string_view to_string(PolicyKind kind)
{
    switch (kind) {
    case PolicyKind::ranked: return "ranked";
    case PolicyKind::random: return "random";
    case PolicyKind::all: return "all";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name)
{
    if (name == "ranked") return PolicyKind::ranked;
    if (name == "random") return PolicyKind::random;
    if (name == "all") return PolicyKind::all;
    throw ConfigError("unknown selection policy '" + std::string(name) + "'");
}

void SelectionPolicy::validate() const
{
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw ConfigError("selection ratio must lie in [0, 1]");
    }
    if (cap && *cap < 1) {
        throw ConfigError("selection cap must be at least 1");
    }
}

std::string SelectionPolicy::describe() const
{
    if (kind == PolicyKind::all) {
        return "all";
    }
    return std::string(to_string(kind)) + ":" + text::format_double(ratio) + ":" +
           (cap ? std::to_string(*cap) : std::string("inf"));
}

SelectionPolicy parse_policy(std::string_view input)
{
    const auto parts = text::split(input, ':');
    if (parts.empty() || parts.size() > 3) {
        throw ConfigError("policy must be kind[:ratio[:cap]], got '" + std::string(input) + "'");
    }
    SelectionPolicy p;
    p.kind = parse_policy_kind(parts[0]);
    try {
        if (parts.size() > 1) {
            p.ratio = text::parse_double(parts[1], "ratio");
        }
        if (parts.size() > 2 && parts[2] != "inf") {
            p.cap = text::parse_u64(parts[2], "cap");
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    p.validate();
    return p;
}

SelectionSize selection_size(const SelectionPolicy& policy, std::size_t candidate_count)
{
    if (policy.kind == PolicyKind::all || candidate_count == 0) {
        return {candidate_count, false};
    }
    // The small bias keeps products like 0.29 * 100 from flooring to 28.
    auto n = static_cast<std::size_t>(std::floor(policy.ratio * static_cast<double>(candidate_count) + 1e-9));
    n = std::clamp<std::size_t>(n, 1, candidate_count);
    if (policy.cap && *policy.cap < n) {
        return {static_cast<std::size_t>(*policy.cap), true};
    }
    return {n, false};
}

std::vector<LandmarkId> select(const SelectionPolicy& policy, std::span<const RankedCandidate> ordered)
{
    const auto size = selection_size(policy, ordered.size());
    std::vector<LandmarkId> out;
    out.reserve(size.count);
    for (std::size_t i = 0; i < size.count; ++i) {
        out.push_back(ordered[i].id);
    }
    return out;
}

std::vector<RankedCandidate> shuffle_candidates(std::span<const LandmarkId> candidates, std::uint64_t seed)
{
    std::vector<RankedCandidate> out;
    out.reserve(candidates.size());
    for (const LandmarkId id : candidates) {
        out.push_back({id, {}});
    }
    Rng rng(seed);
    for (std::size_t i = out.size(); i > 1; --i) {
        std::swap(out[i - 1], out[rng.below(i)]);
    }
    return out;
}

std::vector<RankedCandidate> order_candidates(const SelectionPolicy& policy, const CoObservabilityStore& store,
                                              std::span<const LandmarkId> candidates,
                                              const RecentObservations& recent)
{
    switch (policy.kind) {
    case PolicyKind::ranked:
        return store.rank(candidates, recent);
    case PolicyKind::random:
        return shuffle_candidates(candidates, policy.rng_seed);
    case PolicyKind::all:
        break;
    }
    std::vector<RankedCandidate> out;
    out.reserve(candidates.size());
    for (const LandmarkId id : candidates) {
        out.push_back({id, {}});
    }
    return out;
}

double selection_ratio(std::size_t selected, std::size_t candidates)
{
    if (candidates == 0) {
        throw UndefinedMetricError("selection ratio is undefined for an empty candidate set");
    }
    return static_cast<double>(selected) / static_cast<double>(candidates);
}

}  // namespace lmsel
