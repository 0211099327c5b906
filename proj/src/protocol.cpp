#include "lmsel/protocol.hpp"

#include "lmsel/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <ostream>
#include <unordered_set>

namespace lmsel::protocol {

namespace {

class Writer {
public:
    Writer() { buf_.resize(kHeaderBytes); }

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void count(std::size_t n)
    {
        if (n > UINT32_MAX) {
            throw ProtocolError("list too long to encode", buf_.size());
        }
        u32(static_cast<std::uint32_t>(n));
    }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void pose(const Pose2& p)
    {
        f64(p.x);
        f64(p.y);
        f64(p.theta);
    }
    void ids(std::span<const std::uint64_t> ids)
    {
        count(ids.size());
        for (const auto id : ids) u64(id);
    }

    std::vector<std::uint8_t> finish()
    {
        const std::size_t body = buf_.size() - kHeaderBytes;
        if (body > kMaxFrameBytes) {
            throw ProtocolError("frame exceeds maximum size", 0);
        }
        for (int i = 0; i < 4; ++i) {
            buf_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(body >> (8 * (3 - i)));
        }
        return std::move(buf_);
    }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> frame) : data_(frame) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void need(std::size_t n, const char* what) const
    {
        if (remaining() < n) {
            throw ProtocolError(std::string("short frame reading ") + what, pos_);
        }
    }
    std::uint8_t u8(const char* what)
    {
        need(1, what);
        return data_[pos_++];
    }
    std::uint32_t u32(const char* what)
    {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* what)
    {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    Pose2 pose()
    {
        Pose2 p;
        p.x = f64("pose x");
        p.y = f64("pose y");
        p.theta = f64("pose theta");
        return p;
    }
    /// Reads a count and checks that `element_size` * count bytes remain.
    std::size_t count(std::size_t element_size, const char* what)
    {
        const std::size_t at = pos_;
        const std::size_t n = u32(what);
        if (element_size > 0 && n > remaining() / element_size) {
            throw ProtocolError(std::string("count overflow in ") + what, at);
        }
        return n;
    }
    std::vector<std::uint64_t> distinct_ids(const char* what)
    {
        const std::size_t at = pos_;
        const std::size_t n = count(8, what);
        std::vector<std::uint64_t> ids(n);
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(n);
        for (auto& id : ids) {
            id = u64(what);
            if (!seen.insert(id).second) {
                throw ProtocolError(std::string("duplicate id in ") + what, at);
            }
        }
        return ids;
    }
    std::span<const std::uint8_t> bytes(std::size_t n, const char* what)
    {
        need(n, what);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    void expect_end() const
    {
        if (remaining() != 0) {
            throw ProtocolError("trailing bytes after message", pos_);
        }
    }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

struct Encoder {
    Writer& w;

    std::uint8_t operator()(const LocalizeRequest& m)
    {
        w.u64(m.request_id);
        w.pose(m.pose_guess);
        w.ids(m.recent_ids);
        w.u8(static_cast<std::uint8_t>(m.policy.kind));
        w.f64(m.policy.ratio);
        w.u64(m.policy.cap.value_or(0));
        w.u64(m.policy.rng_seed);
        w.f64(m.radius);
        return static_cast<std::uint8_t>(MessageType::localize_request);
    }
    std::uint8_t operator()(const LocalizeResponse& m)
    {
        w.u64(m.request_id);
        w.count(m.landmarks.size());
        const std::size_t d = m.landmarks.empty() ? 0 : m.landmarks.front().descriptor.size();
        for (const auto& lm : m.landmarks) {
            if (lm.descriptor.size() != d) {
                throw ProtocolError("descriptors in one response must share a length", 0);
            }
            w.u64(lm.id);
            w.f64(lm.position.x);
            w.f64(lm.position.y);
            w.bytes(lm.descriptor);
        }
        return static_cast<std::uint8_t>(MessageType::localize_response) | (m.truncated ? kTruncatedFlag : 0);
    }
    std::uint8_t operator()(const ObservationReport& m)
    {
        w.u64(m.traversal_id);
        w.u64(m.step);
        w.ids(m.observed_ids);
        return static_cast<std::uint8_t>(MessageType::observation_report);
    }
    std::uint8_t operator()(const EndTraversal& m)
    {
        w.u64(m.traversal_id);
        return static_cast<std::uint8_t>(MessageType::end_traversal);
    }
    std::uint8_t operator()(const Ack& m)
    {
        w.u64(m.id);
        return static_cast<std::uint8_t>(MessageType::ack);
    }
    std::uint8_t operator()(const ErrorMessage& m)
    {
        w.u8(static_cast<std::uint8_t>(m.code));
        w.u64(m.offset);
        w.count(m.message.size());
        w.bytes({reinterpret_cast<const std::uint8_t*>(m.message.data()), m.message.size()});
        return static_cast<std::uint8_t>(MessageType::error);
    }
};

LocalizeResponse decode_response(Reader& r, bool truncated)
{
    LocalizeResponse m;
    m.truncated = truncated;
    m.request_id = r.u64("request id");
    const std::size_t count_at = r.offset();
    const std::size_t n = r.count(24, "landmark list");
    std::size_t d = 0;
    if (n > 0) {
        if (r.remaining() % n != 0) {
            throw ProtocolError("landmark list does not divide the frame evenly", count_at);
        }
        d = r.remaining() / n - 24;
    }
    m.landmarks.resize(n);
    std::unordered_set<LandmarkId> seen;
    seen.reserve(n);
    for (auto& lm : m.landmarks) {
        const std::size_t at = r.offset();
        lm.id = r.u64("landmark id");
        if (!seen.insert(lm.id).second) {
            throw ProtocolError("duplicate landmark id in response", at);
        }
        lm.position.x = r.f64("landmark x");
        lm.position.y = r.f64("landmark y");
        const auto desc = r.bytes(d, "descriptor");
        lm.descriptor.assign(desc.begin(), desc.end());
    }
    return m;
}

}  // namespace

MessageType type_of(const Message& message)
{
    return std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LocalizeRequest>) return MessageType::localize_request;
            else if constexpr (std::is_same_v<T, LocalizeResponse>) return MessageType::localize_response;
            else if constexpr (std::is_same_v<T, ObservationReport>) return MessageType::observation_report;
            else if constexpr (std::is_same_v<T, EndTraversal>) return MessageType::end_traversal;
            else if constexpr (std::is_same_v<T, Ack>) return MessageType::ack;
            else return MessageType::error;
        },
        message);
}

std::string_view to_string(MessageType type)
{
    switch (type) {
    case MessageType::localize_request: return "localize_request";
    case MessageType::localize_response: return "localize_response";
    case MessageType::observation_report: return "observation_report";
    case MessageType::end_traversal: return "end_traversal";
    case MessageType::ack: return "ack";
    case MessageType::error: return "error";
    }
    return "unknown";
}

std::vector<std::uint8_t> encode(const Message& message)
{
    Writer w;
    w.u8(0);  // tag placeholder
    const std::uint8_t tag = std::visit(Encoder{w}, message);
    auto frame = w.finish();
    frame[kHeaderBytes] = tag;
    return frame;
}

std::size_t body_length(std::span<const std::uint8_t, kHeaderBytes> header)
{
    const std::size_t len = static_cast<std::size_t>(header[0]) << 24 | static_cast<std::size_t>(header[1]) << 16 |
                            static_cast<std::size_t>(header[2]) << 8 | static_cast<std::size_t>(header[3]);
    if (len == 0) {
        throw ProtocolError("empty frame", 0);
    }
    if (len > kMaxFrameBytes) {
        throw ProtocolError("frame length " + std::to_string(len) + " exceeds maximum", 0);
    }
    return len;
}

Message decode(std::span<const std::uint8_t> frame)
{
    if (frame.size() < kHeaderBytes + 1) {
        throw ProtocolError("short frame", frame.size());
    }
    const std::size_t len = body_length(frame.first<kHeaderBytes>());
    if (frame.size() - kHeaderBytes < len) {
        throw ProtocolError("short frame: header announces " + std::to_string(len) + " bytes", frame.size());
    }
    if (frame.size() - kHeaderBytes > len) {
        throw ProtocolError("trailing bytes after frame", kHeaderBytes + len);
    }

    Reader r(frame);
    r.bytes(kHeaderBytes, "header");
    const std::uint8_t tag = r.u8("tag");
    const auto type = static_cast<MessageType>(tag & ~kTruncatedFlag);
    const bool flagged = (tag & kTruncatedFlag) != 0;
    if (flagged && type != MessageType::localize_response) {
        throw ProtocolError("flag bit set on message without flags", kHeaderBytes);
    }

    Message out;
    switch (type) {
    case MessageType::localize_request: {
        LocalizeRequest m;
        m.request_id = r.u64("request id");
        m.pose_guess = r.pose();
        m.recent_ids = r.distinct_ids("recent ids");
        const std::size_t kind_at = r.offset();
        const std::uint8_t kind = r.u8("policy kind");
        if (kind > static_cast<std::uint8_t>(PolicyKind::all)) {
            throw ProtocolError("unknown policy kind " + std::to_string(kind), kind_at);
        }
        m.policy.kind = static_cast<PolicyKind>(kind);
        m.policy.ratio = r.f64("policy ratio");
        const std::uint64_t cap = r.u64("policy cap");
        if (cap != 0) {
            m.policy.cap = cap;
        }
        m.policy.rng_seed = r.u64("policy seed");
        m.radius = r.f64("radius");
        out = std::move(m);
        break;
    }
    case MessageType::localize_response:
        out = decode_response(r, flagged);
        break;
    case MessageType::observation_report: {
        ObservationReport m;
        m.traversal_id = r.u64("traversal id");
        m.step = r.u64("step");
        m.observed_ids = r.distinct_ids("observed ids");
        out = std::move(m);
        break;
    }
    case MessageType::end_traversal:
        out = EndTraversal{r.u64("traversal id")};
        break;
    case MessageType::ack:
        out = Ack{r.u64("ack id")};
        break;
    case MessageType::error: {
        ErrorMessage m;
        const std::size_t code_at = r.offset();
        const std::uint8_t code = r.u8("error code");
        if (code < 1 || code > 3) {
            throw ProtocolError("unknown error code " + std::to_string(code), code_at);
        }
        m.code = static_cast<ErrorCode>(code);
        m.offset = r.u64("error offset");
        const std::size_t n = r.count(1, "error message");
        const auto text = r.bytes(n, "error message");
        m.message.assign(reinterpret_cast<const char*>(text.data()), text.size());
        out = std::move(m);
        break;
    }
    default:
        throw ProtocolError("unknown message tag " + std::to_string(tag), kHeaderBytes);
    }
    r.expect_end();
    return out;
}

std::size_t BandwidthLedger::slot(MessageType type)
{
    const auto v = static_cast<std::size_t>(type);
    return v < kTypes ? v : 0;
}

void BandwidthLedger::add(Direction direction, MessageType type, std::size_t bytes)
{
    const auto d = static_cast<std::size_t>(direction);
    bytes_[d][slot(type)].fetch_add(bytes, std::memory_order_relaxed);
    messages_[d][slot(type)].fetch_add(1, std::memory_order_relaxed);
}

void BandwidthLedger::add_frame(Direction direction, std::span<const std::uint8_t> frame)
{
    const auto tag = frame.size() > kHeaderBytes ? static_cast<std::uint8_t>(frame[kHeaderBytes] & ~kTruncatedFlag) : 0;
    add(direction, static_cast<MessageType>(tag), frame.size());
}

std::uint64_t BandwidthLedger::bytes(Direction direction) const
{
    std::uint64_t total = 0;
    for (const auto& b : bytes_[static_cast<std::size_t>(direction)]) {
        total += b.load(std::memory_order_relaxed);
    }
    return total;
}

std::uint64_t BandwidthLedger::bytes(Direction direction, MessageType type) const
{
    return bytes_[static_cast<std::size_t>(direction)][slot(type)].load(std::memory_order_relaxed);
}

std::uint64_t BandwidthLedger::messages(Direction direction, MessageType type) const
{
    return messages_[static_cast<std::size_t>(direction)][slot(type)].load(std::memory_order_relaxed);
}

void BandwidthLedger::write_csv(std::ostream& out) const
{
    out << "direction,message_type,messages,bytes\n";
    for (const auto dir : {Direction::client_to_server, Direction::server_to_client}) {
        const char* name = dir == Direction::client_to_server ? "client_to_server" : "server_to_client";
        const auto d = static_cast<std::size_t>(dir);
        std::uint64_t total_msgs = 0;
        for (std::size_t t = 0; t < kTypes; ++t) {
            const auto msgs = messages_[d][t].load(std::memory_order_relaxed);
            total_msgs += msgs;
            if (msgs == 0) {
                continue;
            }
            const std::string_view type = t == 0 ? std::string_view("unknown") : to_string(static_cast<MessageType>(t));
            out << name << ',' << type << ',' << msgs << ',' << bytes_[d][t].load(std::memory_order_relaxed) << '\n';
        }
        out << name << ",total," << total_msgs << ',' << bytes(dir) << '\n';
    }
}

}  // namespace lmsel::protocol
