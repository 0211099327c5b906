#include "lmsel/config.hpp"
#include "lmsel/error.hpp"
#include "lmsel/world.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace lmsel {
namespace {

World ring_world(std::size_t count, double distance, double p, double sensor_range = 10.0)
{
    std::vector<Landmark> lms;
    for (std::size_t i = 0; i < count; ++i) {
        const double phi = 2.0 * 3.141592653589793 * static_cast<double>(i) / static_cast<double>(count);
        lms.push_back({i + 1, {distance * std::cos(phi), distance * std::sin(phi)}, {}, {{0, p}}});
    }
    return World(std::move(lms), {{0, "day"}, {1, "night"}}, {Pose2{}}, sensor_range, 0, 1);
}

TEST(GenerateWorld, ExclusiveCountsFollowFractions)
{
    WorldSpec spec;
    spec.landmark_count = 2000;
    spec.condition_labels = {"day", "night"};
    spec.exclusive_fractions = {0.8, 0.2};
    spec.shared_fraction = 0.0;
    spec.seed = 7;
    const World world = generate_world(spec);
    ASSERT_EQ(world.landmarks().size(), 2000u);
    std::size_t only_day = 0, only_night = 0;
    for (const auto& lm : world.landmarks()) {
        if (lm.affinity.size() == 1 && lm.affinity[0].first == 0) {
            ++only_day;
        } else if (lm.affinity.size() == 1 && lm.affinity[0].first == 1) {
            ++only_night;
        }
    }
    EXPECT_EQ(only_day, 1600u);
    EXPECT_EQ(only_night, 400u);
}

TEST(GenerateWorld, SingleLandmarkSingleCondition)
{
    WorldSpec spec;
    spec.landmark_count = 1;
    const World world = generate_world(spec);
    ASSERT_EQ(world.landmarks().size(), 1u);
    EXPECT_EQ(world.landmarks()[0].affinity.size(), 1u);
}

TEST(GenerateWorld, DeterministicPerSeed)
{
    WorldSpec spec;
    spec.landmark_count = 500;
    spec.condition_labels = {"a", "b", "c"};
    spec.exclusive_fractions = {0.2, 0.2, 0.2};
    spec.shared_fraction = 0.1;
    spec.seed = 11;
    EXPECT_EQ(serialize_world(generate_world(spec)), serialize_world(generate_world(spec)));
    auto other = spec;
    other.seed = 12;
    EXPECT_NE(serialize_world(generate_world(spec)), serialize_world(generate_world(other)));
}

TEST(GenerateWorld, AffinityClassesWithPairs)
{
    WorldSpec spec;
    spec.landmark_count = 1000;
    spec.condition_labels = {"a", "b", "c", "d"};
    spec.exclusive_fractions = {0.1, 0.1, 0.1, 0.1};
    spec.shared_fraction = 0.2;
    const World world = generate_world(spec);
    std::size_t exclusive = 0, shared = 0, pair = 0;
    for (const auto& lm : world.landmarks()) {
        switch (lm.affinity.size()) {
        case 1: ++exclusive; break;
        case 2: {
            ++pair;
            const auto a = lm.affinity[0].first, b = lm.affinity[1].first;
            EXPECT_TRUE(b == a + 1 || (a == 0 && b == 3)) << a << "," << b;
            break;
        }
        case 4: ++shared; break;
        default: ADD_FAILURE() << "unexpected affinity size " << lm.affinity.size();
        }
    }
    EXPECT_EQ(exclusive, 400u);
    EXPECT_EQ(shared, 200u);
    EXPECT_EQ(pair, 400u);
}

TEST(GenerateWorld, InvalidSpecsRejected)
{
    WorldSpec spec;
    spec.landmark_count = 0;
    EXPECT_THROW(generate_world(spec), ConfigError);
    spec = {};
    spec.exclusive_fractions = {0.7};
    spec.shared_fraction = 0.5;
    EXPECT_THROW(generate_world(spec), ConfigError);
    spec = {};
    spec.condition_labels = {"a", "b"};
    EXPECT_THROW(generate_world(spec), ConfigError);
    spec = {};
    spec.p_pair = 1.5;
    EXPECT_THROW(generate_world(spec), ConfigError);
}

TEST(Observe, OutOfRangeNeverObserved)
{
    const World world = ring_world(50, 11.0, 1.0);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        EXPECT_TRUE(observe(world, Pose2{}, 0, rng).empty());
    }
}

TEST(Observe, RangeBoundaryInclusive)
{
    const World world = ring_world(4, 10.0, 1.0);
    Rng rng(1);
    EXPECT_EQ(observe(world, Pose2{}, 0, rng).size(), 4u);
}

TEST(Observe, ZeroAffinityObservesNothing)
{
    const World world = ring_world(50, 2.0, 1.0);
    Rng rng(3);
    EXPECT_TRUE(observe(world, Pose2{}, 1, rng).empty());
    EXPECT_THROW(observe(world, Pose2{}, 9, rng), DomainError);
}

TEST(Observe, ResultWithinSensorRange)
{
    WorldSpec spec;
    spec.landmark_count = 3000;
    const World world = generate_world(spec);
    Rng rng(8);
    for (const auto& pose : world.trajectory()) {
        for (LandmarkId id : observe(world, pose, 0, rng)) {
            const auto* lm = world.find_landmark(id);
            ASSERT_NE(lm, nullptr);
            EXPECT_LE(squared_distance(lm->position, pose.position()), world.sensor_range() * world.sensor_range());
        }
    }
}

// Replays the documented draw loop on a bare std::mt19937_64.
TEST(Observe, MatchesIndependentDrawLoop)
{
    const World world = ring_world(100, 5.0, 0.5);
    for (std::uint64_t seed : {1ull, 42ull, 0xdeadbeefull}) {
        Rng rng(seed);
        const auto got = observe(world, Pose2{}, 0, rng);

        std::mt19937_64 engine(seed);
        std::vector<LandmarkId> want;
        for (LandmarkId id = 1; id <= 100; ++id) {
            const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
            if (u < 0.5) {
                want.push_back(id);
            }
        }
        EXPECT_EQ(got, want);
        EXPECT_EQ(rng.next(), engine());
    }
}

TEST(Observe, DeterministicGivenRngState)
{
    const World world = ring_world(100, 5.0, 0.3);
    Rng a(77), b(77);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(observe(world, Pose2{}, 0, a), observe(world, Pose2{}, 0, b));
    }
}

TEST(Observe, FrequencyWithinThreeSigma)
{
    const double p = 0.37;
    const World world = ring_world(1, 1.0, p);
    Rng rng(2718);
    constexpr int kTrials = 10000;
    int hits = 0;
    for (int i = 0; i < kTrials; ++i) {
        hits += observe(world, Pose2{}, 0, rng).empty() ? 0 : 1;
    }
    const double sigma = std::sqrt(p * (1.0 - p) / kTrials);
    EXPECT_NEAR(hits / static_cast<double>(kTrials), p, 3.0 * sigma);
}

TEST(WorldSnapshot, RoundTrip)
{
    WorldSpec spec;
    spec.landmark_count = 300;
    spec.condition_labels = {"day", "night"};
    spec.exclusive_fractions = {0.5, 0.3};
    spec.trajectory.shape = TrajectoryShape::rectangle;
    spec.trajectory.steps = 40;
    const World world = generate_world(spec);
    const auto text = serialize_world(world);
    const World back = parse_world(text);
    EXPECT_EQ(back, world);
    EXPECT_EQ(serialize_world(back), text);
    EXPECT_THROW(parse_world("not a world\n"), ConfigError);
    EXPECT_THROW(parse_world(text.substr(0, text.size() / 2)), ConfigError);
}

TEST(WorldConfig, ParsesKeysAndRejectsUnknown)
{
    const auto spec = parse_world_spec(
        "landmarks = 50\n"
        "conditions = day, night\n"
        "exclusive = 0.6, 0.4  # all exclusive\n"
        "trajectory = rectangle\n"
        "trajectory_width = 20\n"
        "world_seed = 9\n");
    EXPECT_EQ(spec.landmark_count, 50u);
    EXPECT_EQ(spec.condition_labels, (std::vector<std::string>{"day", "night"}));
    EXPECT_EQ(spec.exclusive_fractions, (std::vector<double>{0.6, 0.4}));
    EXPECT_EQ(spec.trajectory.shape, TrajectoryShape::rectangle);
    EXPECT_EQ(spec.trajectory.width, 20.0);
    EXPECT_EQ(spec.seed, 9u);

    EXPECT_THROW(parse_world_spec("landmark = 5\n"), ConfigError);
    EXPECT_THROW(parse_world_spec("landmarks = 5\nlandmarks = 6\n"), ConfigError);
    EXPECT_THROW(parse_world_spec("landmarks = five\n"), ConfigError);
    EXPECT_THROW(parse_world_spec("trajectory = spiral\n"), ConfigError);
    EXPECT_THROW(parse_world_spec("just text\n"), ConfigError);
}

TEST(WorldConfig, DefaultExclusiveSplitIsEven)
{
    const auto spec = parse_world_spec("conditions = a, b, c, d\n");
    EXPECT_EQ(spec.exclusive_fractions, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
}

}  // namespace
}  // namespace lmsel
