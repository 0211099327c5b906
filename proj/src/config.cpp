#include "lmsel/config.hpp"

#include "lmsel/error.hpp"
#include "lmsel/text.hpp"

namespace lmsel {

KeyValueConfig KeyValueConfig::parse(std::string_view input)
{
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    while (!input.empty()) {
        const auto nl = input.find('\n');
        auto line = input.substr(0, nl);
        input = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = std::string(text::trim(line.substr(0, eq)));
        const auto value = std::string(text::trim(line.substr(eq + 1)));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (!cfg.values_.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

bool KeyValueConfig::has(std::string_view key) const
{
    return values_.find(key) != values_.end();
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const
{
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    used_.insert(it->first);
    return it->second;
}

std::string KeyValueConfig::require(std::string_view key) const
{
    auto v = get(key);
    if (!v) {
        throw ConfigError("missing required config key '" + std::string(key) + "'");
    }
    return *v;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const
{
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return text::parse_double(*v, key);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::uint64_t KeyValueConfig::get_u64(std::string_view key, std::uint64_t fallback) const
{
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return text::parse_u64(*v, key);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::vector<double> KeyValueConfig::get_doubles(std::string_view key, std::vector<double> fallback) const
{
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    std::vector<double> out;
    try {
        for (const auto f : text::split(*v, ',')) {
            out.push_back(text::parse_double(f, key));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return out;
}

std::vector<std::string> KeyValueConfig::get_list(std::string_view key, std::vector<std::string> fallback) const
{
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    std::vector<std::string> out;
    for (const auto f : text::split(*v, ',')) {
        out.emplace_back(f);
    }
    return out;
}

void KeyValueConfig::reject_unused() const
{
    for (const auto& [key, value] : values_) {
        if (!used_.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

WorldSpec read_world_spec(const KeyValueConfig& cfg)
{
    WorldSpec spec;
    spec.landmark_count = cfg.get_u64("landmarks", spec.landmark_count);
    spec.condition_labels = cfg.get_list("conditions", spec.condition_labels);
    if (cfg.has("exclusive")) {
        spec.exclusive_fractions = cfg.get_doubles("exclusive", {});
    } else {
        // Default: conditions split the landmarks evenly and exclusively.
        spec.exclusive_fractions.assign(spec.condition_labels.size(),
                                        1.0 / static_cast<double>(std::max<std::size_t>(1, spec.condition_labels.size())));
    }
    spec.shared_fraction = cfg.get_double("shared", spec.shared_fraction);
    spec.p_exclusive = cfg.get_double("p_exclusive", spec.p_exclusive);
    spec.p_pair = cfg.get_double("p_pair", spec.p_pair);
    spec.p_shared = cfg.get_double("p_shared", spec.p_shared);
    if (const auto shape = cfg.get("trajectory")) {
        if (*shape == "circle") {
            spec.trajectory.shape = TrajectoryShape::circle;
        } else if (*shape == "rectangle") {
            spec.trajectory.shape = TrajectoryShape::rectangle;
        } else {
            throw ConfigError("trajectory must be 'circle' or 'rectangle', got '" + *shape + "'");
        }
    }
    spec.trajectory.radius = cfg.get_double("trajectory_radius", spec.trajectory.radius);
    spec.trajectory.width = cfg.get_double("trajectory_width", spec.trajectory.width);
    spec.trajectory.height = cfg.get_double("trajectory_height", spec.trajectory.height);
    spec.trajectory.steps = cfg.get_u64("trajectory_steps", spec.trajectory.steps);
    spec.landmark_spread = cfg.get_double("landmark_spread", spec.landmark_spread);
    spec.sensor_range = cfg.get_double("sensor_range", spec.sensor_range);
    spec.descriptor_bytes = cfg.get_u64("descriptor_bytes", spec.descriptor_bytes);
    spec.seed = cfg.get_u64("world_seed", spec.seed);
    return spec;
}

WorldSpec parse_world_spec(std::string_view text)
{
    const auto cfg = KeyValueConfig::parse(text);
    WorldSpec spec = read_world_spec(cfg);
    cfg.reject_unused();
    spec.validate();
    return spec;
}

}  // namespace lmsel
