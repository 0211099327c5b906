#include "lmsel/localize.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <tuple>

namespace lmsel {

Pose2 estimate_pose(std::span<const Correspondence> correspondences)
{
    if (correspondences.size() < 2) {
        throw DegenerateGeometryError("pose estimation needs at least 2 correspondences, got " +
                                      std::to_string(correspondences.size()));
    }
    std::vector<Correspondence> pts(correspondences.begin(), correspondences.end());
    std::sort(pts.begin(), pts.end(), [](const Correspondence& a, const Correspondence& b) {
        return std::tie(a.world.x, a.world.y, a.body.x, a.body.y) < std::tie(b.world.x, b.world.y, b.body.x, b.body.y);
    });

    const auto n = static_cast<double>(pts.size());
    Point2 cw;
    Point2 cb;
    for (const auto& p : pts) {
        cw.x += p.world.x;
        cw.y += p.world.y;
        cb.x += p.body.x;
        cb.y += p.body.y;
    }
    cw = {cw.x / n, cw.y / n};
    cb = {cb.x / n, cb.y / n};

    double dot = 0.0;
    double cross = 0.0;
    double spread_b = 0.0;
    double spread_w = 0.0;
    for (const auto& p : pts) {
        const double bx = p.body.x - cb.x;
        const double by = p.body.y - cb.y;
        const double wx = p.world.x - cw.x;
        const double wy = p.world.y - cw.y;
        dot += bx * wx + by * wy;
        cross += bx * wy - by * wx;
        spread_b += bx * bx + by * by;
        spread_w += wx * wx + wy * wy;
    }
    if (spread_b == 0.0 || spread_w == 0.0 || (dot == 0.0 && cross == 0.0)) {
        throw DegenerateGeometryError("correspondences are coincident");
    }

    const double theta = std::atan2(cross, dot);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {cw.x - (c * cb.x - s * cb.y), cw.y - (s * cb.x + c * cb.y), theta};
}

namespace {

std::uint64_t step_stream(std::uint64_t root, std::uint64_t kind, std::uint64_t k)
{
    return derive_seed(derive_seed(root, kind), k);
}

Correction correction_between(const Pose2& guess, const Pose2& estimate)
{
    const Pose2 delta = guess.between(estimate);
    return {std::hypot(delta.x, delta.y), std::abs(delta.theta)};
}

}  // namespace

std::vector<MappingObservation> map_session(const World& world, ConditionId condition, std::uint64_t seed)
{
    std::vector<MappingObservation> out;
    out.reserve(world.trajectory().size());
    for (std::size_t k = 0; k < world.trajectory().size(); ++k) {
        const Pose2& pose = world.trajectory()[k];
        Rng rng(step_stream(seed, stream::kObservation, k));
        out.push_back({pose, observe(world, pose, condition, rng)});
    }
    return out;
}

std::vector<StepResult> run_traversal(const World& world, MapClient& client, const ObservedFromIndex& index,
                                      const SelectionPolicy& policy, const TraversalSetup& setup)
{
    policy.validate();
    const auto& truth = world.trajectory();
    std::vector<StepResult> steps;
    steps.reserve(truth.size());

    std::deque<std::vector<LandmarkId>> window;
    Pose2 previous_estimate;

    for (std::size_t k = 0; k < truth.size(); ++k) {
        StepResult step;
        step.k = k;

        Rng odo(step_stream(setup.odometry.seed, stream::kOdometry, k));
        const double nx = odo.normal() * setup.odometry.noise_trans;
        const double ny = odo.normal() * setup.odometry.noise_trans;
        const double nt = odo.normal() * setup.odometry.noise_rot;
        if (k == 0) {
            step.pose_guess = truth[0].compose(Pose2(nx, ny, nt));
        } else {
            const Pose2 increment = truth[k - 1].between(truth[k]);
            step.pose_guess = previous_estimate.compose(Pose2(increment.x + nx, increment.y + ny, increment.theta + nt));
        }

        std::vector<LandmarkId> recent;
        for (const auto& ids : window) {
            recent.insert(recent.end(), ids.begin(), ids.end());
        }
        std::sort(recent.begin(), recent.end());
        recent.erase(std::unique(recent.begin(), recent.end()), recent.end());

        step.candidates = index.candidates(step.pose_guess, setup.radius);

        SelectionPolicy step_policy = policy;
        if (policy.kind == PolicyKind::random) {
            step_policy.rng_seed = derive_seed(policy.rng_seed, k);
        }

        std::vector<protocol::LandmarkPayload> payloads;
        try {
            auto response = client.client_step(k, step.pose_guess, recent, step_policy, setup.radius);
            if (response.truncated) {
                step.flags |= kStepTruncated;
            }
            payloads = std::move(response.landmarks);
        } catch (const ProtocolError&) {
            step.flags |= kStepServiceError;
        } catch (const TransportError&) {
            step.flags |= kStepServiceError;
        }
        for (const auto& p : payloads) {
            step.selected.push_back(p.id);
        }

        Rng obs_rng(step_stream(setup.seed, stream::kObservation, k));
        const auto drawn = observe(world, truth[k], setup.condition, obs_rng);

        std::vector<const protocol::LandmarkPayload*> by_id;
        by_id.reserve(payloads.size());
        for (const auto& p : payloads) {
            by_id.push_back(&p);
        }
        std::sort(by_id.begin(), by_id.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

        std::vector<Correspondence> correspondences;
        const std::uint64_t measure_root = step_stream(setup.seed, stream::kMeasurement, k);
        auto it = by_id.begin();
        for (const LandmarkId id : drawn) {
            it = std::lower_bound(it, by_id.end(), id, [](const auto* p, LandmarkId v) { return p->id < v; });
            if (it == by_id.end()) {
                break;
            }
            if ((*it)->id != id) {
                continue;
            }
            step.observed.push_back(id);
            const Landmark* truth_lm = world.find_landmark(id);
            Rng noise(derive_seed(measure_root, id));
            Point2 body = truth[k].to_body(truth_lm->position);
            body.x += noise.normal() * setup.measurement_noise;
            body.y += noise.normal() * setup.measurement_noise;
            correspondences.push_back({(*it)->position, body});
        }

        step.pose_estimate = step.pose_guess;
        if (correspondences.size() >= 2) {
            try {
                step.pose_estimate = estimate_pose(correspondences);
            } catch (const DegenerateGeometryError&) {
                step.flags |= kStepFallback;
            }
        } else {
            step.flags |= kStepFallback;
        }
        step.correction = correction_between(step.pose_guess, step.pose_estimate);

        if (setup.report_observations && !(step.flags & kStepServiceError)) {
            try {
                client.report(setup.traversal_id, k, step.observed);
            } catch (const ProtocolError&) {
                step.flags |= kStepServiceError;
            } catch (const TransportError&) {
                step.flags |= kStepServiceError;
            }
        }

        previous_estimate = step.pose_estimate;
        window.push_back(step.observed);
        while (window.size() > std::max<std::size_t>(setup.window, 1)) {
            window.pop_front();
        }
        steps.push_back(std::move(step));
    }
    return steps;
}

std::vector<StepResult> run_traversal(const World& world, const CoObservabilityStore& store,
                                      const ObservedFromIndex& index, const SelectionPolicy& policy,
                                      const TraversalSetup& setup)
{
    MapServer server(map_landmarks(world), store, index);
    LoopbackConnection connection(server);
    MapClient client(connection);
    return run_traversal(world, client, index, policy, setup);
}

RmsErrors rms_errors(std::span<const StepResult> steps)
{
    if (steps.empty()) {
        throw UndefinedMetricError("RMS error of an empty step log is undefined");
    }
    double sum_t = 0.0;
    double sum_r = 0.0;
    for (const auto& s : steps) {
        sum_t += s.correction.translation * s.correction.translation;
        sum_r += s.correction.rotation * s.correction.rotation;
    }
    const auto n = static_cast<double>(steps.size());
    return {std::sqrt(sum_t / n), std::sqrt(sum_r / n)};
}

void write_step_csv_fields(std::ostream& out, const StepResult& s)
{
    using text::format_double;
    out << s.k << ',' << format_double(s.pose_guess.x) << ',' << format_double(s.pose_guess.y) << ','
        << format_double(s.pose_guess.theta) << ',' << format_double(s.pose_estimate.x) << ','
        << format_double(s.pose_estimate.y) << ',' << format_double(s.pose_estimate.theta) << ','
        << s.candidates.size() << ',' << s.selected.size() << ',' << s.observed.size() << ','
        << format_double(s.correction.translation) << ',' << format_double(s.correction.rotation) << ',' << s.flags;
}

void write_step_csv(std::ostream& out, std::span<const StepResult> steps)
{
    out << kStepCsvColumns << '\n';
    for (const auto& s : steps) {
        write_step_csv_fields(out, s);
        out << '\n';
    }
}

}  // namespace lmsel
