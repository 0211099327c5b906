#include "lmsel/pose.hpp"

#include <numbers>

namespace lmsel {

double normalize_angle(double theta)
{
    double wrapped = std::remainder(theta, 2.0 * std::numbers::pi);
    if (wrapped <= -std::numbers::pi) {
        wrapped += 2.0 * std::numbers::pi;
    }
    return wrapped;
}

Point2 Pose2::to_world(const Point2& body) const
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * body.x - s * body.y + x, s * body.x + c * body.y + y};
}

Point2 Pose2::to_body(const Point2& world) const
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double dx = world.x - x;
    const double dy = world.y - y;
    return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2 Pose2::compose(const Pose2& rhs) const
{
    const Point2 t = to_world(rhs.position());
    return {t.x, t.y, theta + rhs.theta};
}

Pose2 Pose2::inverse() const
{
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {-(c * x + s * y), s * x - c * y, -theta};
}

}  // namespace lmsel
