#pragma once

#include "lmsel/pose.hpp"
#include "lmsel/select.hpp"
#include "lmsel/world.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Wire protocol between vehicle clients and the map server.
//
// Frame layout:
//
//   u32 length (big-endian)  number of bytes that follow, i.e. 1 + payload
//   u8  tag                  MessageType, bit 7 carries the truncated flag
//                            of a LocalizeResponse and is zero otherwise
//   ... payload              fixed-width little-endian integers, IEEE-754
//                            binary64 doubles (little-endian), fields in
//                            declaration order, lists prefixed by a u32 count
//
// A LocalizeResponse with n landmarks of descriptor length d therefore takes
// 4 + 1 + 8 + 4 + n * (8 + 16 + d) bytes. All descriptors in one response
// share d, which the decoder recovers from the frame length.
namespace lmsel::protocol {

enum class MessageType : std::uint8_t {
    localize_request = 0x01,
    localize_response = 0x02,
    observation_report = 0x03,
    end_traversal = 0x04,
    ack = 0x05,
    error = 0x06,
};

inline constexpr std::uint8_t kTruncatedFlag = 0x80;
inline constexpr std::size_t kHeaderBytes = 4;
inline constexpr std::size_t kMaxFrameBytes = 256u << 20;

struct LocalizeRequest {
    std::uint64_t request_id = 0;
    Pose2 pose_guess;
    std::vector<LandmarkId> recent_ids;  // distinct
    SelectionPolicy policy;
    double radius = 0.0;

    friend bool operator==(const LocalizeRequest&, const LocalizeRequest&) = default;
};

struct LandmarkPayload {
    LandmarkId id = 0;
    Point2 position;
    std::vector<std::uint8_t> descriptor;

    friend bool operator==(const LandmarkPayload&, const LandmarkPayload&) = default;
};

struct LocalizeResponse {
    std::uint64_t request_id = 0;
    std::vector<LandmarkPayload> landmarks;  // distinct ids, selection order
    bool truncated = false;                  // the policy cap bound the selection

    friend bool operator==(const LocalizeResponse&, const LocalizeResponse&) = default;
};

struct ObservationReport {
    TraversalId traversal_id = 0;
    std::uint64_t step = 0;
    std::vector<LandmarkId> observed_ids;  // distinct

    friend bool operator==(const ObservationReport&, const ObservationReport&) = default;
};

/// Commits the buffered reports of a traversal to the co-observability store.
struct EndTraversal {
    TraversalId traversal_id = 0;

    friend bool operator==(const EndTraversal&, const EndTraversal&) = default;
};

/// Positive reply to ObservationReport / EndTraversal; echoes the traversal id.
struct Ack {
    std::uint64_t id = 0;

    friend bool operator==(const Ack&, const Ack&) = default;
};

enum class ErrorCode : std::uint8_t { malformed = 1, rejected = 2, internal = 3 };

struct ErrorMessage {
    ErrorCode code = ErrorCode::malformed;
    std::uint64_t offset = 0;  // byte offset for malformed frames
    std::string message;

    friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message = std::variant<LocalizeRequest, LocalizeResponse, ObservationReport, EndTraversal, Ack, ErrorMessage>;

MessageType type_of(const Message& message);
std::string_view to_string(MessageType type);

/// Encodes a complete frame, length prefix included.
std::vector<std::uint8_t> encode(const Message& message);

/// Decodes exactly one complete frame. Throws ProtocolError carrying the
/// offending byte offset on short or oversized frames, unknown tags, counts
/// that overrun the frame, duplicate ids and trailing bytes.
Message decode(std::span<const std::uint8_t> frame);

/// Body length announced by a 4-byte header. Throws ProtocolError if it is
/// zero or exceeds kMaxFrameBytes.
std::size_t body_length(std::span<const std::uint8_t, kHeaderBytes> header);

enum class Direction : std::uint8_t { client_to_server = 0, server_to_client = 1 };

/// Cumulative byte and message counters per direction and message type.
/// Thread-safe; counters only grow.
class BandwidthLedger {
public:
    void add(Direction direction, MessageType type, std::size_t bytes);
    /// Convenience: classify a full frame by its tag byte (unknown tags count
    /// as bytes only).
    void add_frame(Direction direction, std::span<const std::uint8_t> frame);

    std::uint64_t bytes(Direction direction) const;
    std::uint64_t bytes(Direction direction, MessageType type) const;
    std::uint64_t messages(Direction direction, MessageType type) const;

    /// CSV: direction,message_type,messages,bytes; one row per pair plus a
    /// "total" row per direction.
    void write_csv(std::ostream& out) const;

private:
    static constexpr std::size_t kTypes = 7;  // index 0 collects unknown tags
    static std::size_t slot(MessageType type);

    std::array<std::array<std::atomic<std::uint64_t>, kTypes>, 2> bytes_{};
    std::array<std::array<std::atomic<std::uint64_t>, kTypes>, 2> messages_{};
};

}  // namespace lmsel::protocol
