#pragma once

#include "lmsel/protocol.hpp"
#include "lmsel/rng.hpp"

#include <set>

namespace lmsel::testing {

inline std::vector<LandmarkId> distinct_ids(Rng& rng, std::size_t max_count)
{
    std::set<LandmarkId> ids;
    const auto n = rng.below(max_count + 1);
    while (ids.size() < n) {
        ids.insert(rng.next() >> rng.below(64));
    }
    std::vector<LandmarkId> out(ids.begin(), ids.end());
    for (std::size_t i = out.size(); i > 1; --i) {
        std::swap(out[i - 1], out[rng.below(i)]);
    }
    return out;
}

inline double any_double(Rng& rng)
{
    return (rng.uniform() - 0.5) * std::ldexp(1.0, static_cast<int>(rng.below(80)) - 40);
}

/// Well-formed message of a uniformly chosen type with random fields.
inline protocol::Message random_message(Rng& rng)
{
    using namespace protocol;
    switch (rng.below(6)) {
    case 0: {
        LocalizeRequest m;
        m.request_id = rng.next();
        m.pose_guess = Pose2(any_double(rng), any_double(rng), any_double(rng));
        m.recent_ids = distinct_ids(rng, 40);
        m.policy.kind = static_cast<PolicyKind>(rng.below(3));
        m.policy.ratio = rng.uniform();
        if (rng.below(2) == 1) {
            m.policy.cap = 1 + rng.below(5000);
        }
        m.policy.rng_seed = rng.next();
        m.radius = 50 * rng.uniform();
        return m;
    }
    case 1: {
        LocalizeResponse m;
        m.request_id = rng.next();
        m.truncated = rng.below(2) == 1;
        const auto d = rng.below(65);
        for (LandmarkId id : distinct_ids(rng, 30)) {
            LandmarkPayload p{id, {any_double(rng), any_double(rng)}, {}};
            for (std::uint64_t i = 0; i < d; ++i) {
                p.descriptor.push_back(static_cast<std::uint8_t>(rng.next()));
            }
            m.landmarks.push_back(std::move(p));
        }
        return m;
    }
    case 2:
        return ObservationReport{rng.next(), rng.next(), distinct_ids(rng, 40)};
    case 3:
        return EndTraversal{rng.next()};
    case 4:
        return Ack{rng.next()};
    default: {
        ErrorMessage m;
        m.code = static_cast<ErrorCode>(1 + rng.below(3));
        m.offset = rng.next();
        const auto len = rng.below(60);
        for (std::uint64_t i = 0; i < len; ++i) {
            m.message.push_back(static_cast<char>(rng.below(256)));
        }
        return m;
    }
    }
}

}  // namespace lmsel::testing
