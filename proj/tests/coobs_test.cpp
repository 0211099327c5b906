#include "lmsel/coobs.hpp"
#include "lmsel/error.hpp"
#include "lmsel/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

namespace lmsel {
namespace {

// Straight transcription of the score definition, with no index.
Score brute_force_score(const std::vector<std::set<LandmarkId>>& traversals, LandmarkId l,
                        const std::set<LandmarkId>& recent)
{
    Score s;
    for (const auto& z : traversals) {
        if (!z.contains(l)) {
            continue;
        }
        ++s.traversals;
        for (LandmarkId v : recent) {
            s.co_observations += z.contains(v) ? 1 : 0;
        }
    }
    return s;
}

std::vector<LandmarkId> subset(std::uint64_t mask, std::size_t universe)
{
    std::vector<LandmarkId> out;
    for (std::size_t i = 0; i < universe; ++i) {
        if (mask & (1ull << i)) {
            out.push_back(i + 1);
        }
    }
    return out;
}

TEST(CoObservabilityStore, SingleInsertionIndexesEveryLandmark)
{
    CoObservabilityStore store;
    store.record({1, {10, 20}});
    ASSERT_EQ(store.by_landmark().size(), 2u);
    EXPECT_EQ(store.by_landmark().at(10), std::vector<TraversalId>{1});
    EXPECT_EQ(store.by_landmark().at(20), std::vector<TraversalId>{1});
}

TEST(CoObservabilityStore, DuplicateTraversalConflictsAndLeavesStoreUnchanged)
{
    CoObservabilityStore store;
    store.record({1, {10, 20}});
    const auto before = store.to_text();
    EXPECT_THROW(store.record({1, {30}}), ConflictError);
    EXPECT_EQ(store.to_text(), before);
    EXPECT_FALSE(store.by_landmark().contains(30));
    EXPECT_TRUE(store.index_consistent());
}

TEST(CoObservabilityStore, EmptyTraversalRejected)
{
    CoObservabilityStore store;
    EXPECT_THROW(store.record({1, {}}), std::invalid_argument);
    EXPECT_EQ(store.count(), 0u);
}

TEST(CoObservabilityStore, IncrementalIndexMatchesRebuild)
{
    Rng rng(99);
    CoObservabilityStore store;
    for (TraversalId z = 1; z <= 100; ++z) {
        std::vector<LandmarkId> obs;
        const auto n = 1 + rng.below(30);
        for (std::uint64_t i = 0; i < n; ++i) {
            obs.push_back(1 + rng.below(200));
        }
        store.record({z * 7, obs});
    }
    EXPECT_TRUE(store.index_consistent());

    CoObservabilityStore rebuilt;
    for (const auto& [id, rec] : store.traversals()) {
        rebuilt.record(rec);
    }
    EXPECT_EQ(rebuilt.by_landmark(), store.by_landmark());
}

TEST(Score, WorkedExample)
{
    // V = {v1, v2}; z1 = {l, v1, v2}, z2 = {l, v1}, z3 = {v2}.
    const LandmarkId l = 1, v1 = 2, v2 = 3;
    CoObservabilityStore store;
    store.record({1, {l, v1, v2}});
    store.record({2, {l, v1}});
    store.record({3, {v2}});
    const Score s = store.score(l, RecentObservations({v1, v2}));
    EXPECT_EQ(s.co_observations, 3u);
    EXPECT_EQ(s.traversals, 2u);
    EXPECT_DOUBLE_EQ(s.value(), 1.5);
}

TEST(Score, UnseenCandidateScoresZero)
{
    CoObservabilityStore store;
    store.record({1, {1, 2}});
    EXPECT_EQ(store.score(42, RecentObservations({1, 2})), Score{});
    EXPECT_EQ(store.score(42, RecentObservations({1, 2})).value(), 0.0);
}

TEST(Score, EmptyRecentScoresZero)
{
    CoObservabilityStore store;
    store.record({1, {1, 2, 3}});
    store.record({2, {1, 3}});
    for (LandmarkId l : {1, 2, 3}) {
        EXPECT_EQ(store.score(l, RecentObservations{}).value(), 0.0);
    }
}

TEST(Score, ExactComparison)
{
    EXPECT_EQ((Score{3, 2}), (Score{6, 4}));
    EXPECT_LT((Score{1, 3}), (Score{1, 2}));
    EXPECT_EQ((Score{0, 0}), (Score{0, 5}));
    const std::uint64_t big = ~0ull;
    EXPECT_LT((Score{big - 1, big}), (Score{big, big}));
}

TEST(Rank, HigherScoreFirst)
{
    // score(1) = (2 + 1) / 2 = 1.5, score(2) = (1 + 0) / 2 = 0.5
    CoObservabilityStore store;
    store.record({1, {1, 10, 11}});
    store.record({2, {1, 10}});
    store.record({3, {2, 10}});
    store.record({4, {2}});
    const auto ranked = store.rank(std::vector<LandmarkId>{2, 1}, RecentObservations({10, 11}));
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].id, 1u);
    EXPECT_DOUBLE_EQ(ranked[0].score.value(), 1.5);
    EXPECT_EQ(ranked[1].id, 2u);
    EXPECT_DOUBLE_EQ(ranked[1].score.value(), 0.5);
}

TEST(Rank, TiesBrokenByAscendingId)
{
    CoObservabilityStore store;
    store.record({1, {4, 9, 100}});
    const auto ranked = store.rank(std::vector<LandmarkId>{9, 4}, RecentObservations({100}));
    ASSERT_EQ(ranked.size(), 2u);
    EXPECT_EQ(ranked[0].id, 4u);
    EXPECT_EQ(ranked[1].id, 9u);
}

TEST(Rank, AgreesWithBruteForceSort)
{
    Rng rng(5);
    CoObservabilityStore store;
    std::vector<std::set<LandmarkId>> raw;
    for (TraversalId z = 1; z <= 20; ++z) {
        std::set<LandmarkId> obs;
        for (int i = 0; i < 25; ++i) {
            obs.insert(1 + rng.below(80));
        }
        store.record({z, {obs.begin(), obs.end()}});
        raw.push_back(obs);
    }
    std::vector<LandmarkId> candidates(50);
    std::iota(candidates.begin(), candidates.end(), 1);
    const std::set<LandmarkId> recent{51, 52, 53, 60, 70, 77};
    const auto ranked = store.rank(candidates, RecentObservations({recent.begin(), recent.end()}));

    std::vector<RankedCandidate> expected;
    for (LandmarkId l : candidates) {
        expected.push_back({l, brute_force_score(raw, l, recent)});
    }
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.id < b.id;
    });
    ASSERT_EQ(ranked.size(), expected.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        EXPECT_EQ(ranked[i].id, expected[i].id) << "position " << i;
        EXPECT_EQ(ranked[i].score, expected[i].score);
    }
}

// All stores over at most 4 landmarks and 3 traversals, every recent set and
// every candidate.
TEST(Score, ExhaustiveSmallStoresMatchBruteForce)
{
    constexpr std::size_t kLandmarks = 4;
    constexpr std::uint64_t kSubsets = 1u << kLandmarks;
    std::size_t checked = 0;
    for (std::size_t t = 0; t <= 3; ++t) {
        std::uint64_t combos = 1;
        for (std::size_t i = 0; i < t; ++i) {
            combos *= kSubsets - 1;
        }
        for (std::uint64_t c = 0; c < combos; ++c) {
            CoObservabilityStore store;
            std::vector<std::set<LandmarkId>> raw;
            std::uint64_t rest = c;
            for (std::size_t i = 0; i < t; ++i) {
                const auto obs = subset(1 + rest % (kSubsets - 1), kLandmarks);
                rest /= kSubsets - 1;
                store.record({i + 1, obs});
                raw.emplace_back(obs.begin(), obs.end());
            }
            for (std::uint64_t v = 0; v < kSubsets; ++v) {
                const auto recent_ids = subset(v, kLandmarks);
                const RecentObservations recent(recent_ids);
                const std::set<LandmarkId> recent_set(recent_ids.begin(), recent_ids.end());
                for (LandmarkId l = 1; l <= kLandmarks; ++l) {
                    const Score got = store.score(l, recent);
                    const Score want = brute_force_score(raw, l, recent_set);
                    ASSERT_EQ(got.co_observations, want.co_observations);
                    ASSERT_EQ(got.traversals, want.traversals);
                    ++checked;
                }
            }
        }
    }
    EXPECT_GT(checked, 50000u);
}

TEST(Score, RandomStoresMatchBruteForce)
{
    Rng rng(2024);
    for (int instance = 0; instance < 1000; ++instance) {
        const std::size_t universe = 1 + rng.below(10);
        const std::size_t t = rng.below(6);
        CoObservabilityStore store;
        std::vector<std::set<LandmarkId>> raw;
        for (std::size_t i = 0; i < t; ++i) {
            const auto obs = subset(1 + rng.below((1ull << universe) - 1), universe);
            store.record({100 + i, obs});
            raw.emplace_back(obs.begin(), obs.end());
        }
        const auto recent_ids = subset(rng.below(1ull << universe), universe);
        const std::set<LandmarkId> recent_set(recent_ids.begin(), recent_ids.end());
        const RecentObservations recent(recent_ids);
        std::vector<LandmarkId> all(universe);
        std::iota(all.begin(), all.end(), 1);
        for (const auto& rc : store.rank(all, recent)) {
            const Score want = brute_force_score(raw, rc.id, recent_set);
            ASSERT_EQ(rc.score.co_observations, want.co_observations);
            ASSERT_EQ(rc.score.traversals, want.traversals);
            ASSERT_EQ(store.score(rc.id, recent), want);
        }
    }
}

class ScoreProperties : public ::testing::Test {
protected:
    void SetUp() override
    {
        Rng rng(31);
        for (TraversalId z = 1; z <= 12; ++z) {
            std::set<LandmarkId> obs;
            for (int i = 0; i < 15; ++i) {
                obs.insert(1 + rng.below(40));
            }
            store.record({z, {obs.begin(), obs.end()}});
        }
        candidates.resize(40);
        std::iota(candidates.begin(), candidates.end(), 1);
    }

    CoObservabilityStore store;
    std::vector<LandmarkId> candidates;
};

TEST_F(ScoreProperties, BoundedByRecentSize)
{
    for (std::size_t v = 0; v <= 10; ++v) {
        std::vector<LandmarkId> ids(v);
        std::iota(ids.begin(), ids.end(), 20);
        const RecentObservations recent(ids);
        for (LandmarkId l : candidates) {
            const double s = store.score(l, recent).value();
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, static_cast<double>(v));
        }
    }
}

TEST_F(ScoreProperties, OneExtraRecentIdMovesScoresByAtMostOne)
{
    const RecentObservations base({3, 7, 11});
    for (LandmarkId extra = 1; extra <= 40; ++extra) {
        std::vector<LandmarkId> ids{3, 7, 11, extra};
        const RecentObservations more(ids);
        for (LandmarkId l : candidates) {
            const Score a = store.score(l, base);
            const Score b = store.score(l, more);
            EXPECT_GE(b, a);
            EXPECT_LE(b.co_observations, a.co_observations + a.traversals);
        }
    }
}

TEST_F(ScoreProperties, RecordingSupportingTraversalNeverLowersScore)
{
    const std::vector<LandmarkId> recent_ids{2, 5, 9, 14};
    const RecentObservations recent(recent_ids);
    for (LandmarkId l : candidates) {
        const Score before = store.score(l, recent);
        CoObservabilityStore extended = store;
        std::vector<LandmarkId> obs = recent_ids;
        obs.push_back(l);
        extended.record({1000, obs});
        const Score after = extended.score(l, recent);
        ASSERT_LE(before.value(), static_cast<double>(recent.size()));
        EXPECT_GE(after, before) << "landmark " << l;
    }
}

TEST(Rank, DuplicatedTraversalKeepsOrderAmongIdenticalHistories)
{
    // Landmarks 1..4 share the traversal multiset {z1, z2}; 5..6 share {z3}.
    CoObservabilityStore store;
    store.record({1, {1, 2, 3, 4, 10, 11}});
    store.record({2, {1, 2, 3, 4, 10}});
    store.record({3, {5, 6, 11}});
    const RecentObservations recent({10, 11});
    const std::vector<LandmarkId> c{1, 2, 3, 4, 5, 6};
    const auto before = store.rank(c, recent);

    CoObservabilityStore dup = store;
    dup.record({4, {1, 2, 3, 4, 10, 11}});
    const auto after = dup.rank(c, recent);

    auto order_of = [](const std::vector<RankedCandidate>& r, const std::set<LandmarkId>& group) {
        std::vector<LandmarkId> out;
        for (const auto& rc : r) {
            if (group.contains(rc.id)) {
                out.push_back(rc.id);
            }
        }
        return out;
    };
    EXPECT_EQ(order_of(before, {1, 2, 3, 4}), order_of(after, {1, 2, 3, 4}));
    EXPECT_EQ(order_of(before, {5, 6}), order_of(after, {5, 6}));
}

TEST(CoObservabilityStore, TextRoundTrip)
{
    CoObservabilityStore store;
    store.record({3, {5, 1, 9}});
    store.record({1, {2}});
    const auto text = store.to_text();
    EXPECT_EQ(text, "1: 2\n3: 1 5 9\n");
    const auto back = CoObservabilityStore::from_text(text);
    EXPECT_EQ(back.to_text(), text);
    EXPECT_EQ(back.by_landmark(), store.by_landmark());
    EXPECT_THROW(CoObservabilityStore::from_text("1: 2\n1: 3\n"), ConfigError);
    EXPECT_THROW(CoObservabilityStore::from_text("x: 2\n"), ConfigError);
}

}  // namespace
}  // namespace lmsel
