#pragma once

#include "lmsel/coobs.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmsel {

enum class PolicyKind : std::uint8_t { ranked = 0, random = 1, all = 2 };

std::string_view to_string(PolicyKind kind);
/// Throws ConfigError for anything but "ranked", "random", "all".
PolicyKind parse_policy_kind(std::string_view name);

/// Selection policy: keep n = min(floor(ratio * |C|), cap) of the ordered
/// candidates, at least one when any exist. kind == all keeps everything.
struct SelectionPolicy {
    PolicyKind kind = PolicyKind::ranked;
    double ratio = 1.0;
    std::optional<std::uint64_t> cap;  // nullopt = unbounded
    std::uint64_t rng_seed = 0;        // random kind only

    static SelectionPolicy all() { return {PolicyKind::all, 1.0, std::nullopt, 0}; }
    static SelectionPolicy ranked(double ratio, std::optional<std::uint64_t> cap = std::nullopt)
    {
        return {PolicyKind::ranked, ratio, cap, 0};
    }
    static SelectionPolicy random(double ratio, std::optional<std::uint64_t> cap, std::uint64_t seed)
    {
        return {PolicyKind::random, ratio, cap, seed};
    }

    /// Throws ConfigError unless ratio in [0, 1] and cap >= 1.
    void validate() const;

    /// e.g. "ranked:0.3:1800", "random:0.3:inf", "all".
    std::string describe() const;

    friend bool operator==(const SelectionPolicy&, const SelectionPolicy&) = default;
};

/// Parses the describe() form, "kind[:ratio[:cap]]"; cap may be "inf".
SelectionPolicy parse_policy(std::string_view text);

struct SelectionSize {
    std::size_t count = 0;
    bool capped = false;  // the cap, not the ratio, bounded the count
};

SelectionSize selection_size(const SelectionPolicy& policy, std::size_t candidate_count);

/// Prefix of `ordered` of length selection_size(policy, ordered.size()).
/// The caller supplies rank order (ranked), a shuffle (random) or any order
/// (all).
std::vector<LandmarkId> select(const SelectionPolicy& policy, std::span<const RankedCandidate> ordered);

/// Uniformly random order of `candidates` (ascending ids in) by Fisher-Yates
/// on its own stream seeded with `seed`. Scores are zero.
std::vector<RankedCandidate> shuffle_candidates(std::span<const LandmarkId> candidates, std::uint64_t seed);

/// Orders candidates as the policy kind requires: rank order for ranked, a
/// seeded shuffle for random, ascending id for all.
std::vector<RankedCandidate> order_candidates(const SelectionPolicy& policy, const CoObservabilityStore& store,
                                              std::span<const LandmarkId> candidates,
                                              const RecentObservations& recent);

/// |selected| / |candidates|. Throws UndefinedMetricError when candidates is empty.
double selection_ratio(std::size_t selected, std::size_t candidates);

}  // namespace lmsel
