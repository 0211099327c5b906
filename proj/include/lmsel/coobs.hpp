#pragma once

#include "lmsel/world.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmsel {

/// One past traversal z: every landmark observed at least once along it.
struct TraversalRecord {
    TraversalId id = 0;
    std::vector<LandmarkId> observed;  // sorted, unique
    std::optional<ConditionId> condition_tag;  // metadata, never read by scoring

    TraversalRecord() = default;
    TraversalRecord(TraversalId id_, std::vector<LandmarkId> observed_, std::optional<ConditionId> tag = std::nullopt);

    friend bool operator==(const TraversalRecord&, const TraversalRecord&) = default;
};

/// The recent observation window V (set semantics).
struct RecentObservations {
    std::vector<LandmarkId> ids;  // sorted, unique

    RecentObservations() = default;
    explicit RecentObservations(std::vector<LandmarkId> ids_);

    bool empty() const { return ids.empty(); }
    std::size_t size() const { return ids.size(); }
};

/// Co-observability score kept as the exact rational
/// co_observations / traversals, where traversals = |Z'| and co_observations
/// is the sum over z in Z' of |V ∩ z|. A landmark seen in no traversal scores
/// 0 (stored as 0/0 and compared as 0/1).
__extension__ using Uint128 = unsigned __int128;

struct Score {
    std::uint64_t co_observations = 0;
    std::uint64_t traversals = 0;

    double value() const
    {
        return traversals == 0 ? 0.0 : static_cast<double>(co_observations) / static_cast<double>(traversals);
    }

    friend std::strong_ordering operator<=>(const Score& a, const Score& b)
    {
        const Uint128 lhs = static_cast<Uint128>(a.co_observations) * (b.traversals == 0 ? 1 : b.traversals);
        const Uint128 rhs = static_cast<Uint128>(b.co_observations) * (a.traversals == 0 ? 1 : a.traversals);
        return lhs <=> rhs;
    }
    friend bool operator==(const Score& a, const Score& b) { return (a <=> b) == 0; }
};

struct RankedCandidate {
    LandmarkId id = 0;
    Score score;

    friend bool operator==(const RankedCandidate&, const RankedCandidate&) = default;
};

/// Localization history Z with an inverted index landmark -> traversals.
///
/// Not internally synchronized: concurrent const access is safe, writers must
/// be serialized against everything else by the owner.
class CoObservabilityStore {
public:
    /// Adds a traversal. Throws ConflictError on a duplicate id and
    /// std::invalid_argument on an empty observation set; the store is left
    /// unchanged in both cases.
    void record(TraversalRecord record);

    /// Ranking function f(l) = (1/|Z'|) * sum_{z in Z'} |V ∩ z|, with Z' the
    /// traversals that observed `candidate`. The constant 1/|V| is dropped.
    Score score(LandmarkId candidate, const RecentObservations& recent) const;

    /// Candidates ordered by descending score, ties by ascending id.
    std::vector<RankedCandidate> rank(std::span<const LandmarkId> candidates, const RecentObservations& recent) const;

    std::span<const TraversalId> traversals_observing(LandmarkId id) const;
    const TraversalRecord* find(TraversalId id) const;
    const std::map<TraversalId, TraversalRecord>& traversals() const { return traversals_; }
    const std::unordered_map<LandmarkId, std::vector<TraversalId>>& by_landmark() const { return by_landmark_; }
    std::size_t count() const { return traversals_.size(); }

    /// Rebuilds the inverted index from the records and compares.
    bool index_consistent() const;

    /// One line per traversal in ascending id order: "id: l1 l2 ...\n" with
    /// landmark ids ascending. Condition tags are not persisted.
    std::string to_text() const;
    /// Throws ConfigError on malformed input or duplicate traversal ids.
    static CoObservabilityStore from_text(std::string_view text);

private:
    std::map<TraversalId, TraversalRecord> traversals_;
    std::unordered_map<LandmarkId, std::vector<TraversalId>> by_landmark_;
};

}  // namespace lmsel
