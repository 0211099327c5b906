#include "lmsel/map_service.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

#include <sstream>

namespace lmsel {

using namespace protocol;

namespace {

constexpr std::string_view kMapMagic = "lmsel-map";
constexpr int kMapVersion = 1;

}  // namespace

std::vector<MapLandmark> map_landmarks(const World& world)
{
    std::vector<MapLandmark> out;
    out.reserve(world.landmarks().size());
    for (const auto& lm : world.landmarks()) {
        out.push_back({lm.id, lm.position, lm.descriptor});
    }
    return out;
}

// Format:
//   lmsel-map 1
//   cell_size <double>
//   landmarks <n>
//   <id> <x> <y> <hex descriptor | ->
//   mapping <n>
//   <x> <y> <theta> <k> <id>...
//   store <n>
//   <traversal id>: <id>...
std::string MapSnapshot::serialize() const
{
    using text::format_double;
    std::ostringstream out;
    out << kMapMagic << ' ' << kMapVersion << '\n';
    out << "cell_size " << format_double(cell_size) << '\n';
    out << "landmarks " << landmarks.size() << '\n';
    for (const auto& lm : landmarks) {
        out << lm.id << ' ' << format_double(lm.position.x) << ' ' << format_double(lm.position.y) << ' '
            << (lm.descriptor.empty() ? std::string("-") : text::to_hex(lm.descriptor)) << '\n';
    }
    out << "mapping " << mapping.size() << '\n';
    for (const auto& m : mapping) {
        out << format_double(m.pose.x) << ' ' << format_double(m.pose.y) << ' ' << format_double(m.pose.theta) << ' '
            << m.observed.size();
        for (const auto id : m.observed) {
            out << ' ' << id;
        }
        out << '\n';
    }
    out << "store " << store.count() << '\n';
    out << store.to_text();
    return out.str();
}

MapSnapshot MapSnapshot::parse(std::string_view input)
{
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string_view {
        if (input.empty()) {
            throw ConfigError("map snapshot truncated after line " + std::to_string(line_no));
        }
        const auto nl = input.find('\n');
        const auto line = input.substr(0, nl);
        input = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);
        ++line_no;
        return line;
    };
    auto keyed = [&](std::string_view key) {
        const auto f = text::split_ws(next_line());
        if (f.size() != 2 || f[0] != key) {
            throw ConfigError("map snapshot line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
        }
        return f[1];
    };

    MapSnapshot snap;
    try {
        const auto header = text::split_ws(next_line());
        if (header.size() != 2 || header[0] != kMapMagic || text::parse_u64(header[1], "version") != kMapVersion) {
            throw ConfigError("not a version " + std::to_string(kMapVersion) + " map snapshot");
        }
        snap.cell_size = text::parse_double(keyed("cell_size"), "cell_size");
        snap.landmarks.resize(text::parse_u64(keyed("landmarks"), "landmarks"));
        for (auto& lm : snap.landmarks) {
            const auto f = text::split_ws(next_line());
            if (f.size() != 4) {
                throw ConfigError("map snapshot line " + std::to_string(line_no) + ": landmark needs 4 fields");
            }
            lm.id = text::parse_u64(f[0], "landmark id");
            lm.position = {text::parse_double(f[1], "x"), text::parse_double(f[2], "y")};
            if (f[3] != "-") {
                lm.descriptor = text::from_hex(f[3]);
            }
        }
        snap.mapping.resize(text::parse_u64(keyed("mapping"), "mapping"));
        for (auto& m : snap.mapping) {
            const auto f = text::split_ws(next_line());
            if (f.size() < 4 || f.size() != 4 + text::parse_u64(f[3], "count")) {
                throw ConfigError("map snapshot line " + std::to_string(line_no) + ": malformed mapping observation");
            }
            m.pose = Pose2(text::parse_double(f[0], "x"), text::parse_double(f[1], "y"), text::parse_double(f[2], "theta"));
            for (std::size_t i = 4; i < f.size(); ++i) {
                m.observed.push_back(text::parse_u64(f[i], "landmark id"));
            }
        }
        const auto n_store = text::parse_u64(keyed("store"), "store");
        snap.store = CoObservabilityStore::from_text(input);
        if (snap.store.count() != n_store) {
            throw ConfigError("map snapshot store holds " + std::to_string(snap.store.count()) + " traversals, header says " +
                              std::to_string(n_store));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("map snapshot line " + std::to_string(line_no) + ": " + e.what());
    }
    return snap;
}

MapServer::MapServer(std::vector<MapLandmark> landmarks, CoObservabilityStore store, ObservedFromIndex index)
    : index_(std::move(index)), store_(std::move(store))
{
    for (auto& lm : landmarks) {
        const LandmarkId id = lm.id;
        if (!landmarks_.emplace(id, std::move(lm)).second) {
            throw ConfigError("duplicate landmark id " + std::to_string(id) + " in map");
        }
    }
    for (const auto& [id, poses] : index_.entries()) {
        if (!landmarks_.contains(id)) {
            throw ConfigError("spatial index references unknown landmark " + std::to_string(id));
        }
    }
}

MapServer::MapServer(const MapSnapshot& snapshot)
    : MapServer(snapshot.landmarks, snapshot.store, ObservedFromIndex::build(snapshot.mapping, snapshot.cell_size))
{
}

LocalizeResponse MapServer::localize(const LocalizeRequest& request) const
{
    request.policy.validate();
    const auto candidates = index_.candidates(request.pose_guess, request.radius);
    const RecentObservations recent(request.recent_ids);

    std::vector<RankedCandidate> ordered;
    {
        std::shared_lock lock(store_mutex_);
        ordered = order_candidates(request.policy, store_, candidates, recent);
    }
    const auto size = selection_size(request.policy, ordered.size());

    LocalizeResponse response;
    response.request_id = request.request_id;
    response.truncated = size.capped;
    response.landmarks.reserve(size.count);
    for (const LandmarkId id : select(request.policy, ordered)) {
        const auto& lm = landmarks_.at(id);
        response.landmarks.push_back({lm.id, lm.position, lm.descriptor});
    }
    return response;
}

Message MapServer::report(const ObservationReport& report)
{
    for (const LandmarkId id : report.observed_ids) {
        if (!landmarks_.contains(id)) {
            return ErrorMessage{ErrorCode::rejected, 0,
                                "report for traversal " + std::to_string(report.traversal_id) + " step " +
                                    std::to_string(report.step) + " names unknown landmark " + std::to_string(id)};
        }
    }
    std::lock_guard lock(pending_mutex_);
    auto& pending = pending_[report.traversal_id];
    pending.insert(report.observed_ids.begin(), report.observed_ids.end());
    return Ack{report.traversal_id};
}

Message MapServer::commit(const EndTraversal& end)
{
    std::set<LandmarkId> observed;
    {
        std::lock_guard lock(pending_mutex_);
        const auto it = pending_.find(end.traversal_id);
        if (it != pending_.end()) {
            observed = std::move(it->second);
            pending_.erase(it);
        }
    }
    if (observed.empty()) {
        return ErrorMessage{ErrorCode::rejected, 0,
                            "traversal " + std::to_string(end.traversal_id) + " has no reported observations"};
    }
    try {
        std::unique_lock lock(store_mutex_);
        store_.record(TraversalRecord(end.traversal_id, {observed.begin(), observed.end()}));
    } catch (const ConflictError& e) {
        return ErrorMessage{ErrorCode::rejected, 0, e.what()};
    }
    return Ack{end.traversal_id};
}

Message MapServer::handle(const Message& message)
{
    try {
        if (const auto* req = std::get_if<LocalizeRequest>(&message)) {
            return localize(*req);
        }
        if (const auto* rep = std::get_if<ObservationReport>(&message)) {
            return report(*rep);
        }
        if (const auto* end = std::get_if<EndTraversal>(&message)) {
            return commit(*end);
        }
        return ErrorMessage{ErrorCode::rejected, 0,
                            "unexpected " + std::string(to_string(type_of(message))) + " from client"};
    } catch (const std::invalid_argument& e) {
        return ErrorMessage{ErrorCode::rejected, 0, e.what()};
    } catch (const ConfigError& e) {
        return ErrorMessage{ErrorCode::rejected, 0, e.what()};
    }
}

std::vector<std::uint8_t> MapServer::handle_frame(std::span<const std::uint8_t> frame)
{
    ledger_.add_frame(Direction::client_to_server, frame);
    std::vector<std::uint8_t> reply;
    try {
        reply = encode(handle(decode(frame)));
    } catch (const ProtocolError& e) {
        reply = encode(ErrorMessage{ErrorCode::malformed, e.offset(), e.what()});
    } catch (const std::exception& e) {
        reply = encode(ErrorMessage{ErrorCode::internal, 0, e.what()});
    }
    ledger_.add_frame(Direction::server_to_client, reply);
    return reply;
}

CoObservabilityStore MapServer::store_snapshot() const
{
    std::shared_lock lock(store_mutex_);
    return store_;
}

Message MapClient::exchange(const Message& message)
{
    const auto frame = encode(message);
    ledger_.add_frame(Direction::client_to_server, frame);
    const auto reply = connection_.round_trip(frame);
    ledger_.add_frame(Direction::server_to_client, reply);
    auto decoded = decode(reply);
    if (const auto* err = std::get_if<ErrorMessage>(&decoded)) {
        throw ServiceError(*err);
    }
    return decoded;
}

LocalizeResponse MapClient::client_step(std::uint64_t request_id, const Pose2& pose_guess,
                                        std::span<const LandmarkId> recent_ids, const SelectionPolicy& policy,
                                        double radius)
{
    LocalizeRequest request{request_id, pose_guess, {recent_ids.begin(), recent_ids.end()}, policy, radius};
    auto reply = exchange(request);
    auto* response = std::get_if<LocalizeResponse>(&reply);
    if (response == nullptr) {
        throw ProtocolError("expected localize_response, got " + std::string(to_string(type_of(reply))), 0);
    }
    if (response->request_id != request_id) {
        throw ProtocolError("response echoes request " + std::to_string(response->request_id) + ", expected " +
                                std::to_string(request_id),
                            kHeaderBytes + 1);
    }
    return std::move(*response);
}

void MapClient::report(TraversalId traversal, std::uint64_t step, std::span<const LandmarkId> observed)
{
    const auto reply = exchange(ObservationReport{traversal, step, {observed.begin(), observed.end()}});
    if (!std::holds_alternative<Ack>(reply)) {
        throw ProtocolError("expected ack for observation report", 0);
    }
}

void MapClient::end_traversal(TraversalId traversal)
{
    const auto reply = exchange(EndTraversal{traversal});
    if (!std::holds_alternative<Ack>(reply)) {
        throw ProtocolError("expected ack for end of traversal", 0);
    }
}

}  // namespace lmsel
