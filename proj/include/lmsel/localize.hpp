#pragma once

#include "lmsel/map_service.hpp"
#include "lmsel/select.hpp"
#include "lmsel/spatial.hpp"
#include "lmsel/world.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace lmsel {

/// World position of a landmark paired with its noisy body-frame measurement.
struct Correspondence {
    Point2 world;
    Point2 body;
};

/// Closed-form planar rigid alignment: the pose (R(theta), t) minimizing
/// sum |R b_i + t - w_i|^2. Correspondences are put in a canonical order
/// before accumulating, so the result is exactly invariant under permutation.
/// Throws DegenerateGeometryError for fewer than two correspondences or when
/// either point set collapses to a single point.
Pose2 estimate_pose(std::span<const Correspondence> correspondences);

struct OdometryModel {
    double noise_trans = 0.0;  // std-dev per step and axis, meters
    double noise_rot = 0.0;    // std-dev per step, radians
    std::uint64_t seed = 0;
};

/// Drift correction between the odometry guess and the visual estimate.
struct Correction {
    double translation = 0.0;
    double rotation = 0.0;

    friend bool operator==(const Correction&, const Correction&) = default;
};

enum StepFlag : std::uint32_t {
    kStepFallback = 1u << 0,      // no usable estimate, coasted on odometry
    kStepTruncated = 1u << 1,     // the policy cap bound the selection
    kStepServiceError = 1u << 2,  // the map service call failed
};

struct StepResult {
    std::size_t k = 0;
    Pose2 pose_guess;
    Pose2 pose_estimate;
    std::vector<LandmarkId> candidates;  // ascending
    std::vector<LandmarkId> selected;    // server order
    std::vector<LandmarkId> observed;    // ascending, subset of selected
    Correction correction;
    std::uint32_t flags = 0;

    friend bool operator==(const StepResult&, const StepResult&) = default;
};

struct TraversalSetup {
    ConditionId condition = 0;
    TraversalId traversal_id = 0;
    /// Root of the observation and measurement streams. Two runs with the same
    /// seed draw identical Bernoulli outcomes at every step.
    std::uint64_t seed = 0;
    OdometryModel odometry;
    double measurement_noise = 0.0;  // std-dev per axis, meters
    double radius = 0.0;
    /// Number of previous steps whose observations form V.
    std::size_t window = 1;
    /// Send an ObservationReport after each step (commit is left to the caller).
    bool report_observations = false;
};

/// Mapping pass: observes from every true trajectory pose with no selection.
/// Uses the same per-step observation stream as run_traversal.
std::vector<MappingObservation> map_session(const World& world, ConditionId condition, std::uint64_t seed);

/// Iterative localization over one lap of the world trajectory.
///
/// Step k: propagate the guess from the previous estimate with a noisy
/// odometry increment (step 0 perturbs the true start pose); request a
/// selection from the map service with V = observations of the previous
/// `window` steps; observe the true scene and keep only selected landmarks;
/// estimate the pose from their noisy body-frame measurements, falling back
/// to the guess when fewer than two are usable.
///
/// `index` is used only to log the candidate set; the service computes its
/// own. Service failures are flagged and the step coasts on odometry.
std::vector<StepResult> run_traversal(const World& world, MapClient& client, const ObservedFromIndex& index,
                                      const SelectionPolicy& policy, const TraversalSetup& setup);

/// Serverless convenience: wires a MapServer over a copy of `store` through a
/// loopback connection.
std::vector<StepResult> run_traversal(const World& world, const CoObservabilityStore& store,
                                      const ObservedFromIndex& index, const SelectionPolicy& policy,
                                      const TraversalSetup& setup);

struct RmsErrors {
    double translation = 0.0;
    double rotation = 0.0;
};

/// Root mean square of the per-step corrections. Throws UndefinedMetricError
/// on an empty log.
RmsErrors rms_errors(std::span<const StepResult> steps);

inline constexpr std::string_view kStepCsvColumns =
    "k,guess_x,guess_y,guess_theta,est_x,est_y,est_theta,candidates,selected,observed,correction_t,correction_r,flags";

/// Writes the kStepCsvColumns fields of one step, without a line break.
void write_step_csv_fields(std::ostream& out, const StepResult& step);
void write_step_csv(std::ostream& out, std::span<const StepResult> steps);

}  // namespace lmsel
