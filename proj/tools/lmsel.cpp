// lmsel: landmark selection simulator and map server.

#include "lmsel/config.hpp"
#include "lmsel/error.hpp"
#include "lmsel/experiment.hpp"
#include "lmsel/localize.hpp"
#include "lmsel/map_service.hpp"
#include "lmsel/net.hpp"
#include "lmsel/rng.hpp"
#include "lmsel/world.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace lmsel;

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    out << content;
}

struct PolicyOptions {
    std::string kind = "ranked";
    double ratio = 0.3;
    std::string cap = "1800";
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& app)
    {
        app.add_option("--policy", kind, "Selection policy: ranked, random or all")->check(CLI::IsMember({"ranked", "random", "all"}));
        app.add_option("--ratio", ratio, "Selection ratio r in [0, 1]");
        app.add_option("--cap", cap, "Maximum number of landmarks m, or 'inf'");
        app.add_option("--policy-seed", seed, "Seed of the random policy's shuffle stream (default: from --seed)");
    }

    SelectionPolicy build(std::uint64_t traversal_seed) const
    {
        SelectionPolicy p = parse_policy(kind + ":" + std::to_string(ratio) + ":" + cap);
        p.ratio = ratio;
        p.rng_seed = seed.value_or(derive_seed(traversal_seed, stream::kPolicy));
        p.validate();
        return p;
    }
};

struct TraversalOptions {
    std::string world_path;
    std::string map_path;
    std::string condition;
    std::string out_path;
    double radius = 0.0;
    double measurement_noise = 0.2;
    double odometry_trans = 0.02;
    double odometry_rot = 0.005;
    std::size_t window = 1;
    std::uint64_t seed = 1;
    TraversalId traversal_id = 0;
    PolicyOptions policy;

    void add_to(CLI::App& app)
    {
        app.add_option("--world", world_path, "World snapshot")->required();
        app.add_option("--map", map_path, "Map snapshot")->required();
        app.add_option("--condition", condition, "Appearance condition label of this traversal")->required();
        app.add_option("--radius", radius, "Candidate retrieval radius (m)")->required();
        app.add_option("--measurement-noise", measurement_noise, "Landmark measurement noise std-dev (m)");
        app.add_option("--odometry-noise-trans", odometry_trans, "Odometry translation noise per step (m)");
        app.add_option("--odometry-noise-rot", odometry_rot, "Odometry rotation noise per step (rad)");
        app.add_option("--window", window, "Steps of recent observations sent as V");
        app.add_option("--seed", seed, "Traversal seed");
        app.add_option("--traversal-id", traversal_id, "Traversal id used in observation reports");
        app.add_option("--out", out_path, "Step log CSV (default: stdout)");
        policy.add_to(app);
    }

    TraversalSetup setup(const World& world) const
    {
        TraversalSetup s;
        s.condition = world.condition_by_label(condition);
        s.traversal_id = traversal_id;
        s.seed = seed;
        s.odometry = {odometry_trans, odometry_rot, derive_seed(seed, stream::kOdometry)};
        s.measurement_noise = measurement_noise;
        s.radius = radius;
        s.window = window;
        return s;
    }

    void emit(const std::vector<StepResult>& steps) const
    {
        if (out_path.empty()) {
            write_step_csv(std::cout, steps);
        } else {
            std::ofstream out(out_path, std::ios::binary);
            write_step_csv(out, steps);
        }
        const auto rms = rms_errors(steps);
        std::cerr << "steps=" << steps.size() << " rms_translation=" << rms.translation
                  << " rms_rotation=" << rms.rotation << '\n';
    }
};

int serve(const std::string& map_path, const std::string& listen, const std::string& ledger_path)
{
    const auto snapshot = MapSnapshot::parse(read_file(map_path));
    MapServer server(snapshot);
    const auto [host, port] = net::parse_endpoint(listen);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    net::TcpServer tcp(server, host, port);
    tcp.start();
    std::cerr << "serving " << snapshot.landmarks.size() << " landmarks, " << snapshot.store.count()
              << " traversals on " << host << ':' << tcp.port() << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    tcp.stop();

    if (ledger_path.empty()) {
        server.ledger().write_csv(std::cout);
    } else {
        std::ofstream out(ledger_path, std::ios::binary);
        server.ledger().write_csv(out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Appearance-adaptive landmark selection: world generator, map server and evaluation"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world snapshot");
    gen->add_option("--spec", spec_path, "World or experiment config file")->required();
    gen->add_option("--out", out_path, "Output world snapshot")->required();
    gen->add_option("--seed", seed, "Override the world seed");

    std::string world_path;
    std::string sessions;
    double cell_size = 2.0;
    auto* build = app.add_subcommand("build-map", "Run mapping sessions and write a map snapshot");
    build->add_option("--world", world_path, "World snapshot")->required();
    build->add_option("--sessions", sessions, "Mapping sessions, e.g. day:2,night:2")->required();
    build->add_option("--out", out_path, "Output map snapshot")->required();
    build->add_option("--seed", seed, "Mapping seed");
    build->add_option("--cell-size", cell_size, "Spatial grid cell size (m); use the query radius");

    TraversalOptions run_opts;
    auto* run = app.add_subcommand("run", "Run one traversal against an in-process map server");
    run_opts.add_to(*run);

    TraversalOptions client_opts;
    std::string connect;
    bool commit = false;
    auto* client = app.add_subcommand("client", "Run one traversal against a remote map server");
    client_opts.add_to(*client);
    client->add_option("--connect", connect, "Server address host:port")->required();
    client->add_flag("--commit", commit, "Report observations and commit the traversal to the server");

    std::string listen;
    std::string ledger_path;
    auto* srv = app.add_subcommand("serve", "Serve a map snapshot over TCP until SIGINT/SIGTERM");
    srv->add_option("--map", spec_path, "Map snapshot")->required();
    srv->add_option("--listen", listen, "Listen address host:port")->required();
    srv->add_option("--ledger", ledger_path, "Bandwidth ledger CSV written on shutdown (default: stdout)");

    auto* eval = app.add_subcommand("eval", "Run a full experiment and write CSV artifacts");
    eval->add_option("--spec", spec_path, "Experiment config file")->required();
    eval->add_option("--out", out_path, "Output directory")->required();
    eval->add_option("--seed", seed, "Override the master seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            // Accepts a world config or a full experiment config.
            const auto text = read_file(spec_path);
            auto spec = KeyValueConfig::parse(text).has("map_sessions") ? parse_experiment_spec(text).world
                                                                        : parse_world_spec(text);
            if (gen->count("--seed") > 0) {
                spec.seed = seed;
            }
            write_file(out_path, serialize_world(generate_world(spec)));
        } else if (*build) {
            const World world = parse_world(read_file(world_path));
            const auto plans = parse_session_plans(sessions);
            const auto snapshot = build_map(world, plans, seed, cell_size);
            write_file(out_path, snapshot.serialize());
            std::cerr << "map: " << snapshot.store.count() << " traversals, " << snapshot.mapping.size()
                      << " mapping poses\n";
        } else if (*run) {
            const World world = parse_world(read_file(run_opts.world_path));
            const auto snapshot = MapSnapshot::parse(read_file(run_opts.map_path));
            MapServer server(snapshot);
            LoopbackConnection connection(server);
            MapClient map_client(connection);
            run_opts.emit(run_traversal(world, map_client, server.index(), run_opts.policy.build(run_opts.seed), run_opts.setup(world)));
        } else if (*client) {
            const World world = parse_world(read_file(client_opts.world_path));
            const auto snapshot = MapSnapshot::parse(read_file(client_opts.map_path));
            const auto index = ObservedFromIndex::build(snapshot.mapping, snapshot.cell_size);
            const auto [host, port] = net::parse_endpoint(connect);
            auto connection = net::TcpConnection::connect(host, port);
            MapClient map_client(connection);
            auto setup = client_opts.setup(world);
            setup.report_observations = commit;
            const auto steps = run_traversal(world, map_client, index, client_opts.policy.build(client_opts.seed), setup);
            client_opts.emit(steps);
            if (commit) {
                map_client.end_traversal(setup.traversal_id);
            }
            map_client.ledger().write_csv(std::cerr);
            for (const auto& s : steps) {
                if (s.flags & kStepServiceError) {
                    std::cerr << "error: map service failed at step " << s.k << '\n';
                    return 2;
                }
            }
        } else if (*srv) {
            return serve(spec_path, listen, ledger_path);
        } else if (*eval) {
            auto spec = parse_experiment_spec(read_file(spec_path));
            if (eval->count("--seed") > 0) {
                reseed(spec, seed);
            }
            const auto result = run_experiment(spec);
            write_artifacts(out_path, result);
            std::cerr << "wrote " << result.metrics.size() << " metric rows to " << out_path << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
