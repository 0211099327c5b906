#pragma once

#include <cmath>

namespace lmsel {

/// Wraps an angle to (-pi, pi].
double normalize_angle(double theta);

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Planar rigid pose of the vehicle body in the world frame.
/// theta is kept in (-pi, pi].
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose2() = default;
    Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}

    Point2 position() const { return {x, y}; }

    /// Maps a body-frame point into the world frame.
    Point2 to_world(const Point2& body) const;

    /// Maps a world-frame point into the body frame.
    Point2 to_body(const Point2& world) const;

    /// Composition this * rhs (rhs expressed in this pose's frame).
    Pose2 compose(const Pose2& rhs) const;

    Pose2 inverse() const;

    /// Relative transform this^-1 * other.
    Pose2 between(const Pose2& other) const { return inverse().compose(other); }

    friend bool operator==(const Pose2&, const Pose2&) = default;
};

inline double squared_distance(const Point2& a, const Point2& b)
{
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

}  // namespace lmsel
