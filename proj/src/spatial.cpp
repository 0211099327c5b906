#include "lmsel/spatial.hpp"

#include "lmsel/error.hpp"

#include <algorithm>
#include <cmath>

namespace lmsel {

ObservedFromIndex ObservedFromIndex::build(std::span<const MappingObservation> observations, double cell_size)
{
    ObservedFromIndex index;
    index.cell_size_ = (cell_size > 0.0 && std::isfinite(cell_size)) ? cell_size : 1.0;
    bool first = true;
    for (const auto& obs : observations) {
        const std::int64_t cx = index.cell_coord(obs.pose.x);
        const std::int64_t cy = index.cell_coord(obs.pose.y);
        if (!obs.observed.empty()) {
            if (first) {
                index.min_cx_ = index.max_cx_ = cx;
                index.min_cy_ = index.max_cy_ = cy;
                first = false;
            }
            index.min_cx_ = std::min(index.min_cx_, cx);
            index.max_cx_ = std::max(index.max_cx_, cx);
            index.min_cy_ = std::min(index.min_cy_, cy);
            index.max_cy_ = std::max(index.max_cy_, cy);
        }
        auto& cell = index.grid_[index.key(cx, cy)];
        for (const LandmarkId l : obs.observed) {
            index.entries_[l].push_back(obs.pose);
            cell.push_back({obs.pose.x, obs.pose.y, l});
        }
    }
    std::erase_if(index.grid_, [](const auto& kv) { return kv.second.empty(); });
    return index;
}

std::vector<LandmarkId> ObservedFromIndex::candidates(const Pose2& pose, double radius) const
{
    if (!(radius >= 0.0)) {
        throw DomainError("candidate radius must be non-negative");
    }
    std::vector<LandmarkId> out;
    if (grid_.empty()) {
        return out;
    }
    const double r_sq = radius * radius;
    auto scan = [&](const std::vector<Entry>& cell) {
        for (const auto& e : cell) {
            const double dx = e.x - pose.x;
            const double dy = e.y - pose.y;
            if (dx * dx + dy * dy <= r_sq) {
                out.push_back(e.id);
            }
        }
    };

    // Clamp the covered cell range to the occupied bounds; fall back to
    // scanning every occupied cell when that is cheaper.
    const std::int64_t lo_x = std::max(min_cx_, cell_coord(pose.x - radius));
    const std::int64_t hi_x = std::min(max_cx_, cell_coord(pose.x + radius));
    const std::int64_t lo_y = std::max(min_cy_, cell_coord(pose.y - radius));
    const std::int64_t hi_y = std::min(max_cy_, cell_coord(pose.y + radius));
    if (lo_x <= hi_x && lo_y <= hi_y) {
        const auto span_cells = static_cast<double>(hi_x - lo_x + 1) * static_cast<double>(hi_y - lo_y + 1);
        if (span_cells > static_cast<double>(grid_.size())) {
            for (const auto& [k, cell] : grid_) {
                scan(cell);
            }
        } else {
            for (std::int64_t cx = lo_x; cx <= hi_x; ++cx) {
                for (std::int64_t cy = lo_y; cy <= hi_y; ++cy) {
                    const auto it = grid_.find(key(cx, cy));
                    if (it != grid_.end()) {
                        scan(it->second);
                    }
                }
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ObservedFromIndex::CellKey ObservedFromIndex::key(std::int64_t cx, std::int64_t cy) const
{
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xFFFFFFFFULL);
}

std::int64_t ObservedFromIndex::cell_coord(double v) const
{
    // Saturate so that huge query radii cannot overflow the cast.
    const double c = std::floor(v / cell_size_);
    constexpr double kLimit = 1e15;
    return static_cast<std::int64_t>(std::clamp(c, -kLimit, kLimit));
}

}  // namespace lmsel
