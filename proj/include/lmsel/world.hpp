#pragma once

#include "lmsel/pose.hpp"
#include "lmsel/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lmsel {

using LandmarkId = std::uint64_t;
using ConditionId = std::uint32_t;
using TraversalId = std::uint64_t;

struct AppearanceCondition {
    ConditionId id = 0;
    std::string label;

    friend bool operator==(const AppearanceCondition&, const AppearanceCondition&) = default;
};

struct Landmark {
    LandmarkId id = 0;
    Point2 position;
    std::vector<std::uint8_t> descriptor;
    /// (condition, observation probability), sorted by condition. Simulation
    /// truth only: nothing on the selection path may read it.
    std::vector<std::pair<ConditionId, double>> affinity;

    /// Probability of observing this landmark in range under `condition`;
    /// 0 when the condition has no entry.
    double observation_probability(ConditionId condition) const;

    friend bool operator==(const Landmark&, const Landmark&) = default;
};

enum class TrajectoryShape { circle, rectangle };

struct TrajectorySpec {
    TrajectoryShape shape = TrajectoryShape::circle;
    double radius = 30.0;   // circle
    double width = 80.0;    // rectangle
    double height = 40.0;   // rectangle
    std::size_t steps = 120;
};

/// Parameters of the synthetic world generator.
///
/// Landmarks fall into affinity classes: exclusive to one condition
/// (exclusive_fractions[c]), shared by all conditions (shared_fraction), and
/// the remainder, each observable under a random pair of cyclically adjacent
/// conditions (c, c+1 mod C). Class counts are derived by rounding cumulative
/// fractions, so each is within one landmark of fraction * landmark_count.
struct WorldSpec {
    std::size_t landmark_count = 1000;
    std::vector<std::string> condition_labels{"default"};
    std::vector<double> exclusive_fractions{1.0};
    double shared_fraction = 0.0;
    double p_exclusive = 0.9;
    double p_pair = 0.8;
    double p_shared = 0.7;
    TrajectorySpec trajectory;
    /// Landmarks are scattered uniformly in a disk of this radius around a
    /// uniformly chosen point of the trajectory.
    double landmark_spread = 15.0;
    double sensor_range = 15.0;
    std::size_t descriptor_bytes = 64;
    std::uint64_t seed = 1;

    /// Throws ConfigError.
    void validate() const;
};

/// Immutable synthetic world. Landmarks are stored in ascending id order.
class World {
public:
    World(std::vector<Landmark> landmarks, std::vector<AppearanceCondition> conditions,
          std::vector<Pose2> trajectory, double sensor_range, std::size_t descriptor_bytes,
          std::uint64_t seed);

    const std::vector<Landmark>& landmarks() const { return landmarks_; }
    const std::vector<AppearanceCondition>& conditions() const { return conditions_; }
    const std::vector<Pose2>& trajectory() const { return trajectory_; }
    double sensor_range() const { return sensor_range_; }
    std::size_t descriptor_bytes() const { return descriptor_bytes_; }
    std::uint64_t seed() const { return seed_; }

    const Landmark* find_landmark(LandmarkId id) const;
    bool has_condition(ConditionId id) const;
    /// Throws DomainError for unknown labels.
    ConditionId condition_by_label(std::string_view label) const;
    const std::string& condition_label(ConditionId id) const;

    friend bool operator==(const World&, const World&) = default;

private:
    std::vector<Landmark> landmarks_;
    std::vector<AppearanceCondition> conditions_;
    std::vector<Pose2> trajectory_;
    double sensor_range_;
    std::size_t descriptor_bytes_;
    std::uint64_t seed_;
};

/// Deterministic for a fixed spec (including its seed).
World generate_world(const WorldSpec& spec);

/// Samples the landmarks observed from `pose` under `condition`.
///
/// Landmarks are visited in ascending id order; every landmark within
/// sensor_range consumes exactly one uniform draw from `rng` and is observed
/// iff that draw is below its affinity for the condition. Landmarks out of
/// range consume nothing. Returns ids in ascending order.
std::vector<LandmarkId> observe(const World& world, const Pose2& pose, ConditionId condition, Rng& rng);

/// Versioned text snapshot; parse_world(serialize_world(w)) == w.
std::string serialize_world(const World& world);
World parse_world(std::string_view text);

}  // namespace lmsel
