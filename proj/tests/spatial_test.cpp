#include "lmsel/error.hpp"
#include "lmsel/rng.hpp"
#include "lmsel/spatial.hpp"

#include <gtest/gtest.h>

#include <set>

namespace lmsel {
namespace {

std::vector<LandmarkId> linear_scan(std::span<const MappingObservation> obs, const Pose2& pose, double radius)
{
    std::set<LandmarkId> out;
    for (const auto& o : obs) {
        if (squared_distance(o.pose.position(), pose.position()) <= radius * radius) {
            out.insert(o.observed.begin(), o.observed.end());
        }
    }
    return {out.begin(), out.end()};
}

std::vector<MappingObservation> random_mapping(std::uint64_t seed, std::size_t poses, std::size_t landmarks,
                                               double extent)
{
    Rng rng(seed);
    std::vector<MappingObservation> out;
    for (std::size_t i = 0; i < poses; ++i) {
        MappingObservation o;
        o.pose = Pose2(extent * (2 * rng.uniform() - 1), extent * (2 * rng.uniform() - 1), rng.uniform());
        std::set<LandmarkId> ids;
        const auto n = rng.below(12);
        for (std::uint64_t j = 0; j < n; ++j) {
            ids.insert(1 + rng.below(landmarks));
        }
        o.observed.assign(ids.begin(), ids.end());
        out.push_back(std::move(o));
    }
    return out;
}

TEST(ObservedFromIndex, SinglePair)
{
    const Pose2 p(1, 2, 0.5);
    const std::vector<MappingObservation> obs{{p, {7}}};
    const auto index = ObservedFromIndex::build(obs, 2.0);
    ASSERT_EQ(index.entries().size(), 1u);
    EXPECT_EQ(index.entries().at(7), std::vector<Pose2>{p});
}

TEST(ObservedFromIndex, ThreePosesThreeEntries)
{
    const std::vector<MappingObservation> obs{{Pose2(0, 0, 0), {1, 2}}, {Pose2(5, 0, 0), {1}}, {Pose2(9, 9, 0), {1, 3}}};
    const auto index = ObservedFromIndex::build(obs, 2.0);
    EXPECT_EQ(index.entries().at(1).size(), 3u);
    EXPECT_EQ(index.entries().at(2).size(), 1u);
}

TEST(ObservedFromIndex, ZeroRadiusIncludesExactPose)
{
    const std::vector<MappingObservation> obs{{Pose2(3.25, -1.5, 0), {4}}};
    const auto index = ObservedFromIndex::build(obs, 2.0);
    EXPECT_EQ(index.candidates(Pose2(3.25, -1.5, 2.0), 0.0), std::vector<LandmarkId>{4});
}

TEST(ObservedFromIndex, RadiusBelowNearestIsEmpty)
{
    const std::vector<MappingObservation> obs{{Pose2(3, 4, 0), {4}}};
    const auto index = ObservedFromIndex::build(obs, 1.0);
    EXPECT_TRUE(index.candidates(Pose2{}, 4.99).empty());
    EXPECT_EQ(index.candidates(Pose2{}, 5.0), std::vector<LandmarkId>{4});
}

TEST(ObservedFromIndex, NegativeRadiusRejected)
{
    const auto index = ObservedFromIndex::build({}, 1.0);
    EXPECT_THROW(index.candidates(Pose2{}, -0.1), DomainError);
    EXPECT_TRUE(index.candidates(Pose2{}, 10.0).empty());
}

TEST(ObservedFromIndex, GridMatchesLinearScanSmallRadius)
{
    const auto obs = random_mapping(17, 400, 300, 50.0);
    const auto index = ObservedFromIndex::build(obs, 2.0);
    Rng rng(18);
    for (int q = 0; q < 100; ++q) {
        const Pose2 pose(60 * (2 * rng.uniform() - 1), 60 * (2 * rng.uniform() - 1), 0);
        const double radius = 6.0 * rng.uniform();
        ASSERT_EQ(index.candidates(pose, radius), linear_scan(obs, pose, radius)) << "query " << q;
    }
}

TEST(ObservedFromIndex, GridMatchesLinearScanRadius15)
{
    const auto obs = random_mapping(23, 2000, 1000, 60.0);
    const auto index = ObservedFromIndex::build(obs, 2.0);
    std::set<LandmarkId> seen;
    for (const auto& o : obs) {
        seen.insert(o.observed.begin(), o.observed.end());
    }
    ASSERT_EQ(seen.size(), 1000u);
    Rng rng(24);
    for (int q = 0; q < 100; ++q) {
        const Pose2 pose(70 * (2 * rng.uniform() - 1), 70 * (2 * rng.uniform() - 1), 0);
        ASSERT_EQ(index.candidates(pose, 15.0), linear_scan(obs, pose, 15.0)) << "query " << q;
    }
}

TEST(ObservedFromIndex, MonotoneInRadius)
{
    const auto obs = random_mapping(5, 300, 200, 30.0);
    const auto index = ObservedFromIndex::build(obs, 3.0);
    Rng rng(6);
    for (int q = 0; q < 50; ++q) {
        const Pose2 pose(30 * (2 * rng.uniform() - 1), 30 * (2 * rng.uniform() - 1), 0);
        const double r1 = 10 * rng.uniform();
        const double r2 = r1 + 10 * rng.uniform();
        const auto small = index.candidates(pose, r1);
        const auto large = index.candidates(pose, r2);
        EXPECT_TRUE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
    }
}

}  // namespace
}  // namespace lmsel
