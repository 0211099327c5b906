#include "lmsel/world.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lmsel {

namespace {

constexpr std::string_view kWorldMagic = "lmsel-world";
constexpr int kWorldVersion = 1;

bool is_probability(double p)
{
    return p >= 0.0 && p <= 1.0;
}

std::vector<Pose2> make_trajectory(const TrajectorySpec& spec)
{
    std::vector<Pose2> poses;
    poses.reserve(spec.steps);
    const double two_pi = 2.0 * std::numbers::pi;
    if (spec.shape == TrajectoryShape::circle) {
        for (std::size_t i = 0; i < spec.steps; ++i) {
            const double phi = two_pi * static_cast<double>(i) / static_cast<double>(spec.steps);
            poses.emplace_back(spec.radius * std::cos(phi), spec.radius * std::sin(phi),
                               phi + std::numbers::pi / 2.0);
        }
        return poses;
    }
    // Counter-clockwise around an axis-aligned rectangle centred on the origin,
    // starting at the lower-left corner.
    const double w = spec.width;
    const double h = spec.height;
    const double perimeter = 2.0 * (w + h);
    for (std::size_t i = 0; i < spec.steps; ++i) {
        double s = perimeter * static_cast<double>(i) / static_cast<double>(spec.steps);
        if (s < w) {
            poses.emplace_back(-w / 2 + s, -h / 2, 0.0);
        } else if ((s -= w) < h) {
            poses.emplace_back(w / 2, -h / 2 + s, std::numbers::pi / 2);
        } else if ((s -= h) < w) {
            poses.emplace_back(w / 2 - s, h / 2, std::numbers::pi);
        } else {
            s -= w;
            poses.emplace_back(-w / 2, h / 2 - s, -std::numbers::pi / 2);
        }
    }
    return poses;
}

enum class AffinityClass : std::uint8_t { exclusive, shared, pair };

struct ClassSlot {
    AffinityClass kind;
    ConditionId condition;  // exclusive only
};

}  // namespace

double Landmark::observation_probability(ConditionId condition) const
{
    const auto it = std::lower_bound(affinity.begin(), affinity.end(), condition,
                                     [](const auto& entry, ConditionId c) { return entry.first < c; });
    return (it != affinity.end() && it->first == condition) ? it->second : 0.0;
}

void WorldSpec::validate() const
{
    if (landmark_count < 1) {
        throw ConfigError("landmark count must be at least 1");
    }
    if (condition_labels.empty()) {
        throw ConfigError("at least one appearance condition is required");
    }
    if (exclusive_fractions.size() != condition_labels.size()) {
        throw ConfigError("expected one exclusive fraction per condition (" +
                          std::to_string(condition_labels.size()) + "), got " +
                          std::to_string(exclusive_fractions.size()));
    }
    double total = shared_fraction;
    if (shared_fraction < 0.0) {
        throw ConfigError("shared fraction must be non-negative");
    }
    for (const double f : exclusive_fractions) {
        if (!(f >= 0.0)) {
            throw ConfigError("exclusive fractions must be non-negative");
        }
        total += f;
    }
    if (total > 1.0 + 1e-9) {
        throw ConfigError("affinity fractions sum to " + text::format_double(total) + " > 1");
    }
    if (!is_probability(p_exclusive) || !is_probability(p_pair) || !is_probability(p_shared)) {
        throw ConfigError("observation probabilities must lie in [0, 1]");
    }
    if (trajectory.steps < 1) {
        throw ConfigError("trajectory needs at least one step");
    }
    if (trajectory.shape == TrajectoryShape::circle && !(trajectory.radius >= 0.0)) {
        throw ConfigError("trajectory radius must be non-negative");
    }
    if (trajectory.shape == TrajectoryShape::rectangle && !(trajectory.width >= 0.0 && trajectory.height >= 0.0)) {
        throw ConfigError("trajectory width/height must be non-negative");
    }
    if (!(landmark_spread >= 0.0) || !std::isfinite(landmark_spread)) {
        throw ConfigError("landmark spread must be finite and non-negative");
    }
    if (!(sensor_range > 0.0) || !std::isfinite(sensor_range)) {
        throw ConfigError("sensor range must be finite and positive");
    }
}

World::World(std::vector<Landmark> landmarks, std::vector<AppearanceCondition> conditions,
             std::vector<Pose2> trajectory, double sensor_range, std::size_t descriptor_bytes,
             std::uint64_t seed)
    : landmarks_(std::move(landmarks)),
      conditions_(std::move(conditions)),
      trajectory_(std::move(trajectory)),
      sensor_range_(sensor_range),
      descriptor_bytes_(descriptor_bytes),
      seed_(seed)
{
    if (trajectory_.empty()) {
        throw ConfigError("world trajectory must not be empty");
    }
    if (!(sensor_range_ > 0.0)) {
        throw ConfigError("sensor range must be positive");
    }
    std::sort(landmarks_.begin(), landmarks_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < landmarks_.size(); ++i) {
        const auto& lm = landmarks_[i];
        if (i > 0 && landmarks_[i - 1].id == lm.id) {
            throw ConfigError("duplicate landmark id " + std::to_string(lm.id));
        }
        if (lm.descriptor.size() != descriptor_bytes_) {
            throw ConfigError("landmark " + std::to_string(lm.id) + " has a descriptor of wrong length");
        }
        for (const auto& [c, p] : lm.affinity) {
            if (!is_probability(p)) {
                throw ConfigError("landmark " + std::to_string(lm.id) + " has affinity outside [0, 1]");
            }
        }
    }
    for (std::size_t i = 0; i < conditions_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (conditions_[i].id == conditions_[j].id) {
                throw ConfigError("duplicate condition id " + std::to_string(conditions_[i].id));
            }
        }
    }
}

const Landmark* World::find_landmark(LandmarkId id) const
{
    const auto it = std::lower_bound(landmarks_.begin(), landmarks_.end(), id,
                                     [](const Landmark& lm, LandmarkId v) { return lm.id < v; });
    return (it != landmarks_.end() && it->id == id) ? &*it : nullptr;
}

bool World::has_condition(ConditionId id) const
{
    return std::any_of(conditions_.begin(), conditions_.end(), [id](const auto& c) { return c.id == id; });
}

ConditionId World::condition_by_label(std::string_view label) const
{
    for (const auto& c : conditions_) {
        if (c.label == label) {
            return c.id;
        }
    }
    throw DomainError("unknown appearance condition '" + std::string(label) + "'");
}

const std::string& World::condition_label(ConditionId id) const
{
    for (const auto& c : conditions_) {
        if (c.id == id) {
            return c.label;
        }
    }
    throw DomainError("unknown appearance condition id " + std::to_string(id));
}

World generate_world(const WorldSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.landmark_count;
    const auto n_cond = static_cast<ConditionId>(spec.condition_labels.size());

    // Class boundaries from rounded cumulative fractions; the pair class takes
    // whatever is left.
    std::vector<ClassSlot> slots;
    slots.reserve(n);
    double cumulative = 0.0;
    std::size_t filled = 0;
    auto fill_to = [&](double fraction, ClassSlot slot) {
        cumulative += fraction;
        const auto boundary = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(n))));
        while (filled < boundary) {
            slots.push_back(slot);
            ++filled;
        }
    };
    for (ConditionId c = 0; c < n_cond; ++c) {
        fill_to(spec.exclusive_fractions[c], {AffinityClass::exclusive, c});
    }
    fill_to(spec.shared_fraction, {AffinityClass::shared, 0});
    while (filled < n) {
        slots.push_back({AffinityClass::pair, 0});
        ++filled;
    }

    Rng layout(derive_seed(spec.seed, stream::kWorldLayout));
    for (std::size_t i = n; i > 1; --i) {
        std::swap(slots[i - 1], slots[layout.below(i)]);
    }

    std::vector<Pose2> trajectory = make_trajectory(spec.trajectory);
    Rng descriptors(derive_seed(spec.seed, stream::kDescriptors));

    std::vector<Landmark> landmarks(n);
    for (std::size_t i = 0; i < n; ++i) {
        Landmark& lm = landmarks[i];
        lm.id = static_cast<LandmarkId>(i + 1);

        const double arc = layout.uniform() * static_cast<double>(trajectory.size());
        const auto seg = std::min(static_cast<std::size_t>(arc), trajectory.size() - 1);
        const double frac = arc - static_cast<double>(seg);
        const Pose2& a = trajectory[seg];
        const Pose2& b = trajectory[(seg + 1) % trajectory.size()];
        const double r = spec.landmark_spread * std::sqrt(layout.uniform());
        const double phi = 2.0 * std::numbers::pi * layout.uniform();
        lm.position = {a.x + frac * (b.x - a.x) + r * std::cos(phi), a.y + frac * (b.y - a.y) + r * std::sin(phi)};

        switch (slots[i].kind) {
        case AffinityClass::exclusive:
            lm.affinity = {{slots[i].condition, spec.p_exclusive}};
            break;
        case AffinityClass::shared:
            for (ConditionId c = 0; c < n_cond; ++c) {
                lm.affinity.emplace_back(c, spec.p_shared);
            }
            break;
        case AffinityClass::pair: {
            const auto first = static_cast<ConditionId>(layout.below(n_cond));
            const auto second = static_cast<ConditionId>((first + 1) % n_cond);
            lm.affinity.emplace_back(first, spec.p_pair);
            if (second != first) {
                lm.affinity.emplace_back(second, spec.p_pair);
            }
            std::sort(lm.affinity.begin(), lm.affinity.end());
            break;
        }
        }

        lm.descriptor.resize(spec.descriptor_bytes);
        for (std::size_t off = 0; off < spec.descriptor_bytes; off += 8) {
            const std::uint64_t word = descriptors.next();
            for (std::size_t k = 0; k < 8 && off + k < spec.descriptor_bytes; ++k) {
                lm.descriptor[off + k] = static_cast<std::uint8_t>(word >> (8 * k));
            }
        }
    }

    std::vector<AppearanceCondition> conditions;
    for (ConditionId c = 0; c < n_cond; ++c) {
        conditions.push_back({c, spec.condition_labels[c]});
    }
    return World(std::move(landmarks), std::move(conditions), std::move(trajectory), spec.sensor_range,
                 spec.descriptor_bytes, spec.seed);
}

std::vector<LandmarkId> observe(const World& world, const Pose2& pose, ConditionId condition, Rng& rng)
{
    if (!world.has_condition(condition)) {
        throw DomainError("unknown appearance condition id " + std::to_string(condition));
    }
    const double range_sq = world.sensor_range() * world.sensor_range();
    const Point2 origin = pose.position();
    std::vector<LandmarkId> observed;
    for (const auto& lm : world.landmarks()) {
        if (squared_distance(lm.position, origin) > range_sq) {
            continue;
        }
        if (rng.bernoulli(lm.observation_probability(condition))) {
            observed.push_back(lm.id);
        }
    }
    return observed;
}

std::string serialize_world(const World& world)
{
    using text::format_double;
    std::ostringstream out;
    out << kWorldMagic << ' ' << kWorldVersion << '\n';
    out << "seed " << world.seed() << '\n';
    out << "sensor_range " << format_double(world.sensor_range()) << '\n';
    out << "descriptor_bytes " << world.descriptor_bytes() << '\n';
    out << "conditions " << world.conditions().size() << '\n';
    for (const auto& c : world.conditions()) {
        out << c.id << ' ' << c.label << '\n';
    }
    out << "trajectory " << world.trajectory().size() << '\n';
    for (const auto& p : world.trajectory()) {
        out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.theta) << '\n';
    }
    out << "landmarks " << world.landmarks().size() << '\n';
    for (const auto& lm : world.landmarks()) {
        out << lm.id << ' ' << format_double(lm.position.x) << ' ' << format_double(lm.position.y) << ' '
            << (lm.descriptor.empty() ? std::string("-") : text::to_hex(lm.descriptor)) << ' '
            << lm.affinity.size();
        for (const auto& [c, p] : lm.affinity) {
            out << ' ' << c << ':' << format_double(p);
        }
        out << '\n';
    }
    return out.str();
}

namespace {

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next()
    {
        if (pos_ >= text_.size()) {
            throw ConfigError("unexpected end of snapshot after line " + std::to_string(line_));
        }
        const auto end = text_.find('\n', pos_);
        const auto line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
        pos_ = end == std::string_view::npos ? text_.size() : end + 1;
        ++line_;
        return line;
    }

    /// Reads "<key> <value>" and returns the value.
    std::string_view keyed(std::string_view key)
    {
        const auto line = next();
        if (line.substr(0, key.size()) != key || line.size() <= key.size() || line[key.size()] != ' ') {
            throw ConfigError("expected '" + std::string(key) + "' on snapshot line " + std::to_string(line_));
        }
        return line.substr(key.size() + 1);
    }

    std::size_t line() const { return line_; }
    bool done() const { return pos_ >= text_.size(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

}  // namespace

World parse_world(std::string_view input)
{
    LineReader in(input);
    try {
        const auto header = text::split_ws(in.next());
        if (header.size() != 2 || header[0] != kWorldMagic) {
            throw ConfigError("not a world snapshot");
        }
        if (text::parse_u64(header[1], "version") != kWorldVersion) {
            throw ConfigError("unsupported world snapshot version " + std::string(header[1]));
        }
        const auto seed = text::parse_u64(in.keyed("seed"), "seed");
        const double range = text::parse_double(in.keyed("sensor_range"), "sensor_range");
        const auto desc_bytes = text::parse_u64(in.keyed("descriptor_bytes"), "descriptor_bytes");

        std::vector<AppearanceCondition> conditions(text::parse_u64(in.keyed("conditions"), "conditions"));
        for (auto& c : conditions) {
            const auto line = in.next();
            const auto space = line.find(' ');
            c.id = static_cast<ConditionId>(text::parse_u64(line.substr(0, space), "condition id"));
            c.label = space == std::string_view::npos ? std::string() : std::string(line.substr(space + 1));
        }

        std::vector<Pose2> trajectory(text::parse_u64(in.keyed("trajectory"), "trajectory"));
        for (auto& p : trajectory) {
            const auto f = text::split_ws(in.next());
            if (f.size() != 3) {
                throw ConfigError("trajectory line needs 3 fields");
            }
            p = Pose2(text::parse_double(f[0], "x"), text::parse_double(f[1], "y"), text::parse_double(f[2], "theta"));
        }

        std::vector<Landmark> landmarks(text::parse_u64(in.keyed("landmarks"), "landmarks"));
        for (auto& lm : landmarks) {
            const auto f = text::split_ws(in.next());
            if (f.size() < 5) {
                throw ConfigError("landmark line needs at least 5 fields");
            }
            lm.id = text::parse_u64(f[0], "landmark id");
            lm.position = {text::parse_double(f[1], "x"), text::parse_double(f[2], "y")};
            if (f[3] != "-") {
                lm.descriptor = text::from_hex(f[3]);
            }
            const auto n_aff = text::parse_u64(f[4], "affinity count");
            if (f.size() != 5 + n_aff) {
                throw ConfigError("landmark affinity count mismatch");
            }
            for (std::size_t k = 0; k < n_aff; ++k) {
                const auto colon = f[5 + k].find(':');
                if (colon == std::string_view::npos) {
                    throw ConfigError("affinity entry must be condition:probability");
                }
                lm.affinity.emplace_back(static_cast<ConditionId>(text::parse_u64(f[5 + k].substr(0, colon), "condition")),
                                         text::parse_double(f[5 + k].substr(colon + 1), "probability"));
            }
        }
        return World(std::move(landmarks), std::move(conditions), std::move(trajectory), range, desc_bytes, seed);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("world snapshot line " + std::to_string(in.line()) + ": " + e.what());
    }
}

}  // namespace lmsel
