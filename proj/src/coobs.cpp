#include "lmsel/coobs.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

#include <algorithm>
#include <sstream>

namespace lmsel {

namespace {

void sort_unique(std::vector<LandmarkId>& ids)
{
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

}  // namespace

TraversalRecord::TraversalRecord(TraversalId id_, std::vector<LandmarkId> observed_, std::optional<ConditionId> tag)
    : id(id_), observed(std::move(observed_)), condition_tag(tag)
{
    sort_unique(observed);
}

RecentObservations::RecentObservations(std::vector<LandmarkId> ids_) : ids(std::move(ids_))
{
    sort_unique(ids);
}

void CoObservabilityStore::record(TraversalRecord rec)
{
    if (traversals_.contains(rec.id)) {
        throw ConflictError("traversal " + std::to_string(rec.id) + " is already recorded");
    }
    sort_unique(rec.observed);
    if (rec.observed.empty()) {
        throw std::invalid_argument("traversal " + std::to_string(rec.id) + " observed no landmarks");
    }
    for (const LandmarkId l : rec.observed) {
        auto& list = by_landmark_[l];
        // Keep each list sorted even if ids arrive out of order.
        list.insert(std::upper_bound(list.begin(), list.end(), rec.id), rec.id);
    }
    const TraversalId id = rec.id;
    traversals_.emplace(id, std::move(rec));
}

Score CoObservabilityStore::score(LandmarkId candidate, const RecentObservations& recent) const
{
    Score s;
    for (const TraversalId z : traversals_observing(candidate)) {
        const auto& observed = traversals_.at(z).observed;
        std::uint64_t shared = 0;
        for (const LandmarkId v : recent.ids) {
            if (std::binary_search(observed.begin(), observed.end(), v)) {
                ++shared;
            }
        }
        s.co_observations += shared;
        ++s.traversals;
    }
    return s;
}

std::vector<RankedCandidate> CoObservabilityStore::rank(std::span<const LandmarkId> candidates,
                                                        const RecentObservations& recent) const
{
    // |V ∩ z| once per traversal, then each candidate sums over its own Z'.
    std::unordered_map<TraversalId, std::uint64_t> overlap;
    for (const LandmarkId v : recent.ids) {
        for (const TraversalId z : traversals_observing(v)) {
            ++overlap[z];
        }
    }

    std::vector<RankedCandidate> ranked;
    ranked.reserve(candidates.size());
    for (const LandmarkId l : candidates) {
        RankedCandidate rc{l, {}};
        for (const TraversalId z : traversals_observing(l)) {
            const auto it = overlap.find(z);
            rc.score.co_observations += it == overlap.end() ? 0 : it->second;
            ++rc.score.traversals;
        }
        ranked.push_back(rc);
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        const auto order = a.score <=> b.score;
        return order != 0 ? order > 0 : a.id < b.id;
    });
    return ranked;
}

std::span<const TraversalId> CoObservabilityStore::traversals_observing(LandmarkId id) const
{
    const auto it = by_landmark_.find(id);
    if (it == by_landmark_.end()) {
        return {};
    }
    return it->second;
}

const TraversalRecord* CoObservabilityStore::find(TraversalId id) const
{
    const auto it = traversals_.find(id);
    return it == traversals_.end() ? nullptr : &it->second;
}

bool CoObservabilityStore::index_consistent() const
{
    std::unordered_map<LandmarkId, std::vector<TraversalId>> rebuilt;
    for (const auto& [id, rec] : traversals_) {
        for (const LandmarkId l : rec.observed) {
            rebuilt[l].push_back(id);
        }
    }
    return rebuilt == by_landmark_;
}

std::string CoObservabilityStore::to_text() const
{
    std::ostringstream out;
    for (const auto& [id, rec] : traversals_) {
        out << id << ':';
        for (const LandmarkId l : rec.observed) {
            out << ' ' << l;
        }
        out << '\n';
    }
    return out.str();
}

CoObservabilityStore CoObservabilityStore::from_text(std::string_view input)
{
    CoObservabilityStore store;
    std::size_t line_no = 0;
    while (!input.empty()) {
        const auto nl = input.find('\n');
        const auto line = input.substr(0, nl);
        input = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);
        ++line_no;
        if (text::trim(line).empty()) {
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw ConfigError("store line " + std::to_string(line_no) + ": missing ':'");
        }
        try {
            TraversalRecord rec;
            rec.id = text::parse_u64(line.substr(0, colon), "traversal id");
            for (const auto tok : text::split_ws(line.substr(colon + 1))) {
                rec.observed.push_back(text::parse_u64(tok, "landmark id"));
            }
            store.record(std::move(rec));
        } catch (const ConflictError& e) {
            throw ConfigError("store line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("store line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

}  // namespace lmsel
