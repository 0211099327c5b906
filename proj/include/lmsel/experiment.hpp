#pragma once

#include "lmsel/localize.hpp"
#include "lmsel/map_service.hpp"
#include "lmsel/select.hpp"
#include "lmsel/world.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmsel {

/// `count` traversals under the condition labelled `condition`.
struct SessionPlan {
    std::string condition;
    std::size_t count = 0;

    friend bool operator==(const SessionPlan&, const SessionPlan&) = default;
};

/// Parses "label:count, label:count".
std::vector<SessionPlan> parse_session_plans(std::string_view text);

struct ExperimentSpec {
    WorldSpec world;
    std::vector<SessionPlan> map_sessions;
    std::vector<SessionPlan> eval_traversals;
    std::vector<SelectionPolicy> policies;
    double radius = 2.0;
    double measurement_noise = 0.2;
    double odometry_noise_trans = 0.02;
    double odometry_noise_rot = 0.005;
    std::size_t window = 1;
    /// Master seed; map, evaluation, odometry and random-policy streams are
    /// all derived from it.
    std::uint64_t seed = 1;

    /// Throws ConfigError (no sessions or traversals, unknown condition
    /// labels, invalid policies or world spec).
    void validate() const;
};

/// Parses an experiment config: the world keys plus map_sessions,
/// eval_traversals, policies, radius, measurement_noise,
/// odometry_noise_trans, odometry_noise_rot, window and seed. Without
/// world_seed the world seed is derived from seed.
ExperimentSpec parse_experiment_spec(std::string_view text);

/// Re-seeds the experiment; the world seed follows unless pinned.
void reseed(ExperimentSpec& spec, std::uint64_t seed, bool world_seed_pinned = false);

/// Runs the mapping sessions in order (traversal ids 1, 2, ...) and collects
/// the map snapshot: landmarks, mapping observations and the history Z.
MapSnapshot build_map(const World& world, std::span<const SessionPlan> sessions, std::uint64_t seed,
                      double cell_size);

struct ObservationRatio {
    double value = 1.0;
    bool undefined = false;  // both runs observed nothing; value is 1 by convention
};

/// |with_selection| / |with_all| for paired runs.
ObservationRatio observation_ratio(std::size_t observed_with_selection, std::size_t observed_with_all);

/// Jaccard index |A ∩ B| / |A ∪ B| of two sorted id sets; 1 when both are empty.
double joint_selection_fraction(std::span<const LandmarkId> a, std::span<const LandmarkId> b);

/// Union of selected ids over a traversal, ascending.
std::vector<LandmarkId> selected_union(std::span<const StepResult> steps);

struct RunLog {
    TraversalId traversal_id = 0;
    ConditionId condition = 0;
    std::string condition_label;
    SelectionPolicy policy;
    bool baseline = false;  // select-all twin of the configured runs
    std::vector<StepResult> steps;
    std::uint64_t bytes_server_to_client = 0;
    std::uint64_t bytes_client_to_server = 0;
};

struct MetricsRow {
    TraversalId traversal_id = 0;
    std::string condition;
    std::string policy;
    double mean_r_sel = 0.0;
    double mean_r_obs = 0.0;
    double rms_translation = 0.0;
    double rms_rotation = 0.0;
    std::uint64_t bytes_server_to_client = 0;
    std::uint64_t bytes_client_to_server = 0;
    std::size_t undefined_r_obs_steps = 0;
    std::size_t fallback_steps = 0;
};

struct JointSelectionEntry {
    std::string policy;
    TraversalId traversal_a = 0;
    TraversalId traversal_b = 0;
    std::string condition_a;
    std::string condition_b;
    double fraction = 0.0;
};

struct ExperimentResult {
    std::vector<RunLog> runs;       // per eval traversal: each policy, then the select-all twin
    std::vector<MetricsRow> metrics;
    std::vector<JointSelectionEntry> joint_selection;  // full matrix per policy, row-major
};

/// Builds the world and map, then runs every eval traversal once per policy
/// plus a select-all twin on the same seeds. Deterministic per spec.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Per-step log of every run, with r_sel and r_obs (empty when undefined).
/// Twin runs are listed with policy "baseline".
void write_steps_csv(std::ostream& out, const ExperimentResult& result);
void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_joint_selection_csv(std::ostream& out, std::span<const JointSelectionEntry> entries);

/// Writes steps.csv, metrics.csv and joint_selection.csv into `dir`.
void write_artifacts(const std::filesystem::path& dir, const ExperimentResult& result);

}  // namespace lmsel
