#include "lmsel/experiment.hpp"

#include "lmsel/config.hpp"
#include "lmsel/error.hpp"
#include "lmsel/rng.hpp"
#include "lmsel/text.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

namespace lmsel {

std::vector<SessionPlan> parse_session_plans(std::string_view input)
{
    std::vector<SessionPlan> plans;
    for (const auto item : text::split(input, ',')) {
        const auto colon = item.rfind(':');
        if (colon == std::string_view::npos) {
            throw ConfigError("session plan must be label:count, got '" + std::string(item) + "'");
        }
        SessionPlan plan;
        plan.condition = std::string(text::trim(item.substr(0, colon)));
        try {
            plan.count = text::parse_u64(item.substr(colon + 1), "session count");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

void ExperimentSpec::validate() const
{
    world.validate();
    auto total = [](const std::vector<SessionPlan>& plans) {
        std::size_t n = 0;
        for (const auto& p : plans) n += p.count;
        return n;
    };
    if (total(map_sessions) == 0) {
        throw ConfigError("experiment needs at least one map session");
    }
    if (total(eval_traversals) == 0) {
        throw ConfigError("experiment needs at least one evaluation traversal");
    }
    for (const auto* plans : {&map_sessions, &eval_traversals}) {
        for (const auto& p : *plans) {
            if (std::find(world.condition_labels.begin(), world.condition_labels.end(), p.condition) ==
                world.condition_labels.end()) {
                throw ConfigError("unknown condition '" + p.condition + "' in session plan");
            }
        }
    }
    if (policies.empty()) {
        throw ConfigError("experiment needs at least one selection policy");
    }
    for (const auto& p : policies) {
        p.validate();
    }
    if (!(radius >= 0.0)) {
        throw ConfigError("radius must be non-negative");
    }
    if (!(measurement_noise >= 0.0) || !(odometry_noise_trans >= 0.0) || !(odometry_noise_rot >= 0.0)) {
        throw ConfigError("noise levels must be non-negative");
    }
    if (window < 1) {
        throw ConfigError("observation window must be at least 1 step");
    }
}

void reseed(ExperimentSpec& spec, std::uint64_t seed, bool world_seed_pinned)
{
    spec.seed = seed;
    if (!world_seed_pinned) {
        spec.world.seed = derive_seed(seed, stream::kWorldLayout);
    }
}

ExperimentSpec parse_experiment_spec(std::string_view input)
{
    const auto cfg = KeyValueConfig::parse(input);
    ExperimentSpec spec;
    spec.world = read_world_spec(cfg);
    spec.map_sessions = parse_session_plans(cfg.require("map_sessions"));
    spec.eval_traversals = parse_session_plans(cfg.require("eval_traversals"));
    for (const auto& p : cfg.get_list("policies", {"ranked:0.3:1800", "random:0.3:1800", "all"})) {
        spec.policies.push_back(parse_policy(p));
    }
    cfg.require("radius");
    spec.radius = cfg.get_double("radius", spec.radius);
    spec.measurement_noise = cfg.get_double("measurement_noise", spec.measurement_noise);
    spec.odometry_noise_trans = cfg.get_double("odometry_noise_trans", spec.odometry_noise_trans);
    spec.odometry_noise_rot = cfg.get_double("odometry_noise_rot", spec.odometry_noise_rot);
    spec.window = cfg.get_u64("window", spec.window);
    reseed(spec, cfg.get_u64("seed", spec.seed), cfg.has("world_seed"));
    cfg.reject_unused();
    spec.validate();
    return spec;
}

MapSnapshot build_map(const World& world, std::span<const SessionPlan> sessions, std::uint64_t seed,
                      double cell_size)
{
    MapSnapshot snap;
    snap.landmarks = map_landmarks(world);
    snap.cell_size = cell_size;
    const std::uint64_t root = derive_seed(seed, stream::kMapSession);
    TraversalId next_id = 1;
    for (const auto& plan : sessions) {
        const ConditionId condition = world.condition_by_label(plan.condition);
        for (std::size_t i = 0; i < plan.count; ++i, ++next_id) {
            auto observations = map_session(world, condition, derive_seed(root, next_id));
            std::vector<LandmarkId> seen;
            for (const auto& obs : observations) {
                seen.insert(seen.end(), obs.observed.begin(), obs.observed.end());
            }
            TraversalRecord record(next_id, std::move(seen), condition);
            if (!record.observed.empty()) {
                snap.store.record(std::move(record));
            }
            snap.mapping.insert(snap.mapping.end(), std::make_move_iterator(observations.begin()),
                                std::make_move_iterator(observations.end()));
        }
    }
    return snap;
}

ObservationRatio observation_ratio(std::size_t observed_with_selection, std::size_t observed_with_all)
{
    if (observed_with_all == 0) {
        return {1.0, true};
    }
    return {static_cast<double>(observed_with_selection) / static_cast<double>(observed_with_all), false};
}

double joint_selection_fraction(std::span<const LandmarkId> a, std::span<const LandmarkId> b)
{
    std::size_t common = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++common;
            ++ia;
            ++ib;
        }
    }
    const std::size_t unioned = a.size() + b.size() - common;
    return unioned == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(unioned);
}

std::vector<LandmarkId> selected_union(std::span<const StepResult> steps)
{
    std::vector<LandmarkId> out;
    for (const auto& s : steps) {
        out.insert(out.end(), s.selected.begin(), s.selected.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct EvalJob {
    TraversalId traversal_id;
    ConditionId condition;
    std::uint64_t seed;
    std::uint64_t policy_seed;
};

RunLog run_one(const World& world, MapServer& server, const ObservedFromIndex& index, const ExperimentSpec& spec,
               const EvalJob& job, SelectionPolicy policy)
{
    if (policy.kind == PolicyKind::random) {
        policy.rng_seed = job.policy_seed;
    }
    TraversalSetup setup;
    setup.condition = job.condition;
    setup.traversal_id = job.traversal_id;
    setup.seed = job.seed;
    setup.odometry = {spec.odometry_noise_trans, spec.odometry_noise_rot, derive_seed(job.seed, stream::kOdometry)};
    setup.measurement_noise = spec.measurement_noise;
    setup.radius = spec.radius;
    setup.window = spec.window;

    LoopbackConnection connection(server);
    MapClient client(connection);
    RunLog log;
    log.traversal_id = job.traversal_id;
    log.condition = job.condition;
    log.condition_label = world.condition_label(job.condition);
    log.policy = policy;
    log.steps = run_traversal(world, client, index, policy, setup);
    log.bytes_server_to_client = client.ledger().bytes(protocol::Direction::server_to_client);
    log.bytes_client_to_server = client.ledger().bytes(protocol::Direction::client_to_server);
    return log;
}

MetricsRow metrics_for(const RunLog& run, const RunLog& baseline)
{
    MetricsRow row;
    row.traversal_id = run.traversal_id;
    row.condition = run.condition_label;
    row.policy = run.policy.describe();
    double sum_sel = 0.0;
    std::size_t n_sel = 0;
    double sum_obs = 0.0;
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        const auto& s = run.steps[k];
        if (!s.candidates.empty()) {
            sum_sel += selection_ratio(s.selected.size(), s.candidates.size());
            ++n_sel;
        }
        const auto r = observation_ratio(s.observed.size(), baseline.steps[k].observed.size());
        sum_obs += r.value;
        row.undefined_r_obs_steps += r.undefined ? 1 : 0;
        row.fallback_steps += (s.flags & kStepFallback) ? 1 : 0;
    }
    row.mean_r_sel = n_sel == 0 ? 0.0 : sum_sel / static_cast<double>(n_sel);
    row.mean_r_obs = run.steps.empty() ? 0.0 : sum_obs / static_cast<double>(run.steps.size());
    const auto rms = rms_errors(run.steps);
    row.rms_translation = rms.translation;
    row.rms_rotation = rms.rotation;
    row.bytes_server_to_client = run.bytes_server_to_client;
    row.bytes_client_to_server = run.bytes_client_to_server;
    return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const World world = generate_world(spec.world);
    const MapSnapshot snapshot = build_map(world, spec.map_sessions, spec.seed, spec.radius > 0.0 ? spec.radius : 1.0);
    MapServer server(snapshot);
    const ObservedFromIndex& index = server.index();

    std::vector<EvalJob> jobs;
    const std::uint64_t eval_root = derive_seed(spec.seed, stream::kEvalTraversal);
    const std::uint64_t policy_root = derive_seed(spec.seed, stream::kPolicy);
    TraversalId next_id = snapshot.store.count() + 1;
    for (const auto& plan : spec.eval_traversals) {
        const ConditionId condition = world.condition_by_label(plan.condition);
        for (std::size_t i = 0; i < plan.count; ++i, ++next_id) {
            const std::size_t j = jobs.size();
            jobs.push_back({next_id, condition, derive_seed(eval_root, j), derive_seed(policy_root, j)});
        }
    }

    // Each job: every configured policy, then the select-all twin last.
    const std::size_t per_job = spec.policies.size() + 1;
    std::vector<RunLog> runs(jobs.size() * per_job);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < runs.size(); t = next++) {
            const auto& job = jobs[t / per_job];
            const std::size_t p = t % per_job;
            const bool baseline = p == spec.policies.size();
            runs[t] = run_one(world, server, index, spec, job, baseline ? SelectionPolicy::all() : spec.policies[p]);
            runs[t].baseline = baseline;
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }

    ExperimentResult result;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const RunLog& twin = runs[j * per_job + spec.policies.size()];
        for (std::size_t p = 0; p < spec.policies.size(); ++p) {
            result.metrics.push_back(metrics_for(runs[j * per_job + p], twin));
        }
    }

    for (std::size_t p = 0; p < spec.policies.size(); ++p) {
        std::vector<std::vector<LandmarkId>> unions;
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            unions.push_back(selected_union(runs[j * per_job + p].steps));
        }
        for (std::size_t a = 0; a < jobs.size(); ++a) {
            for (std::size_t b = 0; b < jobs.size(); ++b) {
                const auto& ra = runs[a * per_job + p];
                const auto& rb = runs[b * per_job + p];
                result.joint_selection.push_back({spec.policies[p].describe(), ra.traversal_id, rb.traversal_id,
                                                  ra.condition_label, rb.condition_label,
                                                  joint_selection_fraction(unions[a], unions[b])});
            }
        }
    }
    result.runs = std::move(runs);
    return result;
}

void write_steps_csv(std::ostream& out, const ExperimentResult& result)
{
    using text::format_double;
    out << "traversal_id,condition,policy," << kStepCsvColumns << ",r_sel,r_obs\n";
    std::map<TraversalId, const RunLog*> baselines;
    for (const auto& run : result.runs) {
        if (run.baseline) {
            baselines[run.traversal_id] = &run;
        }
    }
    for (const auto& run : result.runs) {
        const RunLog* twin = baselines.at(run.traversal_id);
        for (std::size_t k = 0; k < run.steps.size(); ++k) {
            const auto& s = run.steps[k];
            out << run.traversal_id << ',' << run.condition_label << ','
                << (run.baseline ? std::string("baseline") : run.policy.describe()) << ',';
            write_step_csv_fields(out, s);
            out << ',';
            if (!s.candidates.empty()) {
                out << format_double(selection_ratio(s.selected.size(), s.candidates.size()));
            }
            out << ',';
            const auto r = observation_ratio(s.observed.size(), twin->steps[k].observed.size());
            if (!r.undefined) {
                out << format_double(r.value);
            }
            out << '\n';
        }
    }
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows)
{
    using text::format_double;
    out << "traversal_id,condition,policy,mean_r_sel,mean_r_obs,rms_translation,rms_rotation,bytes_server_to_client,"
           "bytes_client_to_server,undefined_r_obs_steps,fallback_steps\n";
    for (const auto& r : rows) {
        out << r.traversal_id << ',' << r.condition << ',' << r.policy << ',' << format_double(r.mean_r_sel) << ','
            << format_double(r.mean_r_obs) << ',' << format_double(r.rms_translation) << ','
            << format_double(r.rms_rotation) << ',' << r.bytes_server_to_client << ',' << r.bytes_client_to_server
            << ',' << r.undefined_r_obs_steps << ',' << r.fallback_steps << '\n';
    }
}

void write_joint_selection_csv(std::ostream& out, std::span<const JointSelectionEntry> entries)
{
    out << "policy,traversal_a,traversal_b,condition_a,condition_b,fraction\n";
    for (const auto& e : entries) {
        out << e.policy << ',' << e.traversal_a << ',' << e.traversal_b << ',' << e.condition_a << ','
            << e.condition_b << ',' << text::format_double(e.fraction) << '\n';
    }
}

void write_artifacts(const std::filesystem::path& dir, const ExperimentResult& result)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("steps.csv");
        write_steps_csv(f, result);
    }
    {
        auto f = open("metrics.csv");
        write_metrics_csv(f, result.metrics);
    }
    {
        auto f = open("joint_selection.csv");
        write_joint_selection_csv(f, result.joint_selection);
    }
}

}  // namespace lmsel
