#pragma once

#include "lmsel/world.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lmsel {

/// `key = value` lines; `#` starts a comment; blank lines are ignored. Keys
/// are unique. Every key must be consumed, so typos surface as errors.
class KeyValueConfig {
public:
    /// Throws ConfigError on malformed lines or duplicate keys.
    static KeyValueConfig parse(std::string_view text);

    bool has(std::string_view key) const;
    std::optional<std::string> get(std::string_view key) const;
    std::string require(std::string_view key) const;

    double get_double(std::string_view key, double fallback) const;
    std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(std::string_view key, std::vector<double> fallback) const;
    std::vector<std::string> get_list(std::string_view key, std::vector<std::string> fallback) const;

    /// Throws ConfigError naming the first key that was never read.
    void reject_unused() const;

private:
    std::map<std::string, std::string, std::less<>> values_;
    mutable std::set<std::string, std::less<>> used_;
};

/// Reads the world keys documented in README.md. Keys not present keep the
/// WorldSpec defaults. Does not call reject_unused().
WorldSpec read_world_spec(const KeyValueConfig& config);

/// Parses a world config file and rejects unknown keys.
WorldSpec parse_world_spec(std::string_view text);

}  // namespace lmsel
