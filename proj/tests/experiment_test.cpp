#include "lmsel/error.hpp"
#include "lmsel/experiment.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace lmsel {
namespace {

constexpr std::string_view kSpec =
    "landmarks = 2000\n"
    "conditions = day, night\n"
    "exclusive = 0.8, 0.2\n"
    "p_exclusive = 0.8\n"
    "trajectory_steps = 40\n"
    "descriptor_bytes = 8\n"
    "map_sessions = day:2, night:2\n"
    "eval_traversals = day:2, night:2\n"
    "policies = ranked:0.2:1800, random:0.2:1800, all\n"
    "radius = 2\n"
    "seed = 4\n";

std::string artifacts(const ExperimentResult& r)
{
    std::ostringstream out;
    write_steps_csv(out, r);
    write_metrics_csv(out, r.metrics);
    write_joint_selection_csv(out, r.joint_selection);
    return out.str();
}

class ExperimentFixture : public ::testing::Test {
protected:
    static void SetUpTestSuite() { result_ = new ExperimentResult(run_experiment(parse_experiment_spec(kSpec))); }
    static void TearDownTestSuite() { delete result_; }

    static const RunLog& twin_of(const RunLog& run)
    {
        for (const auto& r : result_->runs) {
            if (r.baseline && r.traversal_id == run.traversal_id) {
                return r;
            }
        }
        throw std::logic_error("no twin");
    }

    static ExperimentResult* result_;
};

ExperimentResult* ExperimentFixture::result_ = nullptr;

TEST(ExperimentSpecParsing, Keys)
{
    const auto spec = parse_experiment_spec(kSpec);
    EXPECT_EQ(spec.world.landmark_count, 2000u);
    EXPECT_EQ(spec.map_sessions, (std::vector<SessionPlan>{{"day", 2}, {"night", 2}}));
    ASSERT_EQ(spec.policies.size(), 3u);
    EXPECT_EQ(spec.policies[0], SelectionPolicy::ranked(0.2, 1800));
    EXPECT_EQ(spec.seed, 4u);
    EXPECT_EQ(spec.world.seed, derive_seed(4, stream::kWorldLayout));
}

TEST(ExperimentSpecParsing, Rejections)
{
    EXPECT_THROW(parse_experiment_spec(std::string(kSpec) + "eval_traversal = day:1\n"), ConfigError);
    auto no_eval = std::string(kSpec);
    no_eval.replace(no_eval.find("eval_traversals = day:2, night:2"), 32, "eval_traversals = day:0");
    EXPECT_THROW(parse_experiment_spec(no_eval), ConfigError);
    auto no_map = std::string(kSpec);
    no_map.replace(no_map.find("map_sessions = day:2, night:2"), 29, "map_sessions = dusk:2");
    EXPECT_THROW(parse_experiment_spec(no_map), ConfigError);
    auto no_radius = std::string(kSpec);
    no_radius.replace(no_radius.find("radius = 2\n"), 11, "");
    EXPECT_THROW(parse_experiment_spec(no_radius), ConfigError);
    EXPECT_THROW(parse_session_plans("day"), ConfigError);
    EXPECT_THROW(parse_session_plans("day:x"), ConfigError);

    ExperimentSpec spec = parse_experiment_spec(kSpec);
    spec.eval_traversals.clear();
    EXPECT_THROW(spec.validate(), ConfigError);
    EXPECT_THROW(run_experiment(spec), ConfigError);
}

TEST(ObservationRatio, Examples)
{
    EXPECT_DOUBLE_EQ(observation_ratio(9, 12).value, 0.75);
    EXPECT_FALSE(observation_ratio(9, 12).undefined);
    EXPECT_EQ(observation_ratio(0, 0).value, 1.0);
    EXPECT_TRUE(observation_ratio(0, 0).undefined);
    EXPECT_EQ(observation_ratio(5, 5).value, 1.0);
}

TEST(JointSelection, Examples)
{
    const std::vector<LandmarkId> a{1, 2, 3}, b{4, 5}, c{2, 3, 4, 5};
    EXPECT_EQ(joint_selection_fraction(a, a), 1.0);
    EXPECT_EQ(joint_selection_fraction(a, b), 0.0);
    EXPECT_DOUBLE_EQ(joint_selection_fraction(a, c), 2.0 / 5.0);
    EXPECT_EQ(joint_selection_fraction({}, {}), 1.0);
}

TEST(JointSelection, MatchesSetArithmetic)
{
    Rng rng(10);
    for (int i = 0; i < 500; ++i) {
        std::set<LandmarkId> a, b;
        for (auto n = rng.below(30); n > 0; --n) {
            a.insert(rng.below(40));
        }
        for (auto n = rng.below(30); n > 0; --n) {
            b.insert(rng.below(40));
        }
        std::vector<LandmarkId> inter, uni;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
        const double want = uni.empty() ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni.size());
        EXPECT_EQ(joint_selection_fraction(std::vector<LandmarkId>(a.begin(), a.end()),
                                           std::vector<LandmarkId>(b.begin(), b.end())),
                  want);
    }
}

TEST_F(ExperimentFixture, RerunIsByteIdentical)
{
    const auto again = run_experiment(parse_experiment_spec(kSpec));
    EXPECT_EQ(artifacts(again), artifacts(*result_));
}

TEST_F(ExperimentFixture, DifferentSeedChangesArtifacts)
{
    auto spec = parse_experiment_spec(kSpec);
    reseed(spec, 5);
    EXPECT_NE(artifacts(run_experiment(spec)), artifacts(*result_));
}

TEST_F(ExperimentFixture, JointSelectionMatrixSymmetricWithUnitDiagonal)
{
    std::map<std::tuple<std::string, TraversalId, TraversalId>, double> m;
    for (const auto& e : result_->joint_selection) {
        m[{e.policy, e.traversal_a, e.traversal_b}] = e.fraction;
    }
    ASSERT_EQ(m.size(), 3u * 4 * 4);
    for (const auto& [key, value] : m) {
        const auto& [policy, a, b] = key;
        EXPECT_EQ(value, (m.at({policy, b, a})));
        if (a == b) {
            EXPECT_EQ(value, 1.0);
        }
    }
}

TEST_F(ExperimentFixture, SelectionRatioMatchesStepLog)
{
    std::size_t row = 0;
    for (const auto& run : result_->runs) {
        if (run.baseline) {
            continue;
        }
        double sum = 0;
        std::size_t n = 0;
        for (const auto& s : run.steps) {
            if (!s.candidates.empty()) {
                sum += static_cast<double>(s.selected.size()) / static_cast<double>(s.candidates.size());
                ++n;
            }
        }
        const auto& m = result_->metrics.at(row++);
        EXPECT_EQ(m.traversal_id, run.traversal_id);
        EXPECT_EQ(m.mean_r_sel, sum / static_cast<double>(n));
        EXPECT_GE(m.mean_r_sel, 0.0);
        EXPECT_LE(m.mean_r_sel, 1.0);
    }
    EXPECT_EQ(row, result_->metrics.size());
}

TEST_F(ExperimentFixture, ObservationRatioMatchesPairedRecount)
{
    std::size_t row = 0;
    for (const auto& run : result_->runs) {
        if (run.baseline) {
            continue;
        }
        const auto& twin = twin_of(run);
        double sum = 0;
        for (std::size_t k = 0; k < run.steps.size(); ++k) {
            const auto& sel = run.steps[k].observed;
            const auto& all = twin.steps[k].observed;
            // The paired draw makes the selected run's observations a subset.
            ASSERT_TRUE(std::includes(all.begin(), all.end(), sel.begin(), sel.end()));
            sum += all.empty() ? 1.0 : static_cast<double>(sel.size()) / static_cast<double>(all.size());
        }
        const auto& m = result_->metrics.at(row++);
        EXPECT_EQ(m.mean_r_obs, sum / static_cast<double>(run.steps.size()));
        if (run.policy.kind == PolicyKind::all) {
            EXPECT_EQ(m.mean_r_obs, 1.0);
            EXPECT_EQ(run.steps, twin.steps);
        }
    }
}

TEST_F(ExperimentFixture, RankedBeatsRandomOnMinorityCondition)
{
    double ranked = 0, random = 0;
    for (const auto& m : result_->metrics) {
        if (m.condition != "night") {
            continue;
        }
        if (m.policy.starts_with("ranked")) {
            ranked += m.mean_r_obs;
        } else if (m.policy.starts_with("random")) {
            random += m.mean_r_obs;
        }
    }
    EXPECT_GT(ranked, random);
}

TEST_F(ExperimentFixture, CsvLayout)
{
    std::ostringstream steps, metrics;
    write_steps_csv(steps, *result_);
    write_metrics_csv(metrics, result_->metrics);
    const std::string s = steps.str();
    const std::string m = metrics.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "traversal_id,condition,policy," + std::string(kStepCsvColumns) + ",r_sel,r_obs");
    EXPECT_EQ(std::count(m.begin(), m.end(), '\n'), 1 + 4 * 3);
    EXPECT_NE(s.find(",baseline,"), std::string::npos);
}

}  // namespace
}  // namespace lmsel
