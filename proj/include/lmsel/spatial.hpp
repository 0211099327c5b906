#pragma once

#include "lmsel/pose.hpp"
#include "lmsel/world.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

namespace lmsel {

/// Landmarks observed from one mapping pose.
struct MappingObservation {
    Pose2 pose;
    std::vector<LandmarkId> observed;

    friend bool operator==(const MappingObservation&, const MappingObservation&) = default;
};

/// Answers "which landmarks were observed from within radius r of this
/// pose" over the mapping data. Immutable after build; safe for concurrent
/// queries.
class ObservedFromIndex {
public:
    ObservedFromIndex() = default;

    /// `cell_size` is the grid pitch; the query radius is a good choice.
    static ObservedFromIndex build(std::span<const MappingObservation> observations, double cell_size);

    /// { l : some mapping pose p of l has |p.xy - pose.xy| <= radius }, in
    /// ascending id order. Heading is ignored; the boundary is inclusive
    /// (compared as squared distances). Throws DomainError for radius < 0.
    std::vector<LandmarkId> candidates(const Pose2& pose, double radius) const;

    /// Landmark -> mapping poses it was observed from, in input order.
    const std::map<LandmarkId, std::vector<Pose2>>& entries() const { return entries_; }

    double cell_size() const { return cell_size_; }
    std::size_t cell_count() const { return grid_.size(); }

private:
    struct Entry {
        double x;
        double y;
        LandmarkId id;
    };
    using CellKey = std::uint64_t;

    CellKey key(std::int64_t cx, std::int64_t cy) const;
    std::int64_t cell_coord(double v) const;

    std::map<LandmarkId, std::vector<Pose2>> entries_;
    std::unordered_map<CellKey, std::vector<Entry>> grid_;
    double cell_size_ = 1.0;
    std::int64_t min_cx_ = 0, max_cx_ = -1, min_cy_ = 0, max_cy_ = -1;
};

}  // namespace lmsel
