#pragma once

#include "lmsel/coobs.hpp"
#include "lmsel/error.hpp"
#include "lmsel/protocol.hpp"
#include "lmsel/spatial.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lmsel {

/// What the server knows about a landmark: no appearance affinities.
struct MapLandmark {
    LandmarkId id = 0;
    Point2 position;
    std::vector<std::uint8_t> descriptor;

    friend bool operator==(const MapLandmark&, const MapLandmark&) = default;
};

/// Everything a map server loads at start: landmarks, the mapping
/// observations the spatial index is rebuilt from, and the history Z.
struct MapSnapshot {
    std::vector<MapLandmark> landmarks;
    std::vector<MappingObservation> mapping;
    CoObservabilityStore store;
    double cell_size = 1.0;

    std::string serialize() const;
    /// Throws ConfigError.
    static MapSnapshot parse(std::string_view text);
};

std::vector<MapLandmark> map_landmarks(const World& world);

/// Server-side request handling, independent of the transport.
///
/// localize() takes a shared lock on the store; commits take it exclusively,
/// so requests are served concurrently while writes stay serialized.
class MapServer {
public:
    MapServer(std::vector<MapLandmark> landmarks, CoObservabilityStore store, ObservedFromIndex index);
    explicit MapServer(const MapSnapshot& snapshot);

    MapServer(const MapServer&) = delete;
    MapServer& operator=(const MapServer&) = delete;

    /// candidates -> rank with V := recent ids -> select -> payloads.
    /// Throws DomainError / ConfigError on invalid radius or policy.
    protocol::LocalizeResponse localize(const protocol::LocalizeRequest& request) const;

    /// Dispatches one decoded message and returns the reply.
    protocol::Message handle(const protocol::Message& message);

    /// Decode, handle, encode. Malformed input yields an error frame rather
    /// than an exception. Both frames are added to the ledger.
    std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> frame);

    const protocol::BandwidthLedger& ledger() const { return ledger_; }
    protocol::BandwidthLedger& ledger() { return ledger_; }

    /// Copy of the current store, taken under the shared lock.
    CoObservabilityStore store_snapshot() const;
    const ObservedFromIndex& index() const { return index_; }

private:
    protocol::Message report(const protocol::ObservationReport& report);
    protocol::Message commit(const protocol::EndTraversal& end);

    std::unordered_map<LandmarkId, MapLandmark> landmarks_;
    ObservedFromIndex index_;

    mutable std::shared_mutex store_mutex_;
    CoObservabilityStore store_;

    std::mutex pending_mutex_;
    std::map<TraversalId, std::set<LandmarkId>> pending_;

    protocol::BandwidthLedger ledger_;
};

/// A request/response byte channel to a map server.
class MapConnection {
public:
    virtual ~MapConnection() = default;
    /// Sends one frame and returns the reply frame. Throws TransportError.
    virtual std::vector<std::uint8_t> round_trip(std::span<const std::uint8_t> frame) = 0;
};

/// In-process channel that hands frames straight to MapServer::handle_frame.
class LoopbackConnection final : public MapConnection {
public:
    explicit LoopbackConnection(MapServer& server) : server_(server) {}
    std::vector<std::uint8_t> round_trip(std::span<const std::uint8_t> frame) override
    {
        return server_.handle_frame(frame);
    }

private:
    MapServer& server_;
};

/// Vehicle side of the protocol with its own byte ledger. One request in
/// flight at a time.
class MapClient {
public:
    explicit MapClient(MapConnection& connection) : connection_(connection) {}

    /// Sends one LocalizeRequest and returns the decoded response. Throws
    /// ProtocolError on malformed or mismatched replies and ServiceError
    /// (a ProtocolError) when the server answers with an error message.
    protocol::LocalizeResponse client_step(std::uint64_t request_id, const Pose2& pose_guess,
                                           std::span<const LandmarkId> recent_ids, const SelectionPolicy& policy,
                                           double radius);

    void report(TraversalId traversal, std::uint64_t step, std::span<const LandmarkId> observed);
    void end_traversal(TraversalId traversal);

    const protocol::BandwidthLedger& ledger() const { return ledger_; }

private:
    protocol::Message exchange(const protocol::Message& message);

    MapConnection& connection_;
    protocol::BandwidthLedger ledger_;
};

/// Error reply from the server, surfaced on the client.
class ServiceError : public ProtocolError {
public:
    ServiceError(const protocol::ErrorMessage& error)
        : ProtocolError("server error: " + error.message, static_cast<std::size_t>(error.offset)),
          code_(error.code)
    {
    }
    protocol::ErrorCode code() const { return code_; }

private:
    protocol::ErrorCode code_;
};

}  // namespace lmsel
