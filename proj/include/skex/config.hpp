#pragma once

#include "skex/cluster.hpp"
#include "skex/grid.hpp"
#include "skex/iter.hpp"
#include "skex/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skex {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string description;
};

/// Every accepted configuration key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value configuration with section prefixes (iter., grid., cluster.).
/// Unknown keys and malformed values raise ConfigError.
class RunConfig {
public:
    RunConfig() = default;

    /// One "key = value" per line; blank lines and '#' comments are ignored.
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// Parses "key=value".
    void set_assignment(std::string_view assignment);

    /// Explicit value or the documented default.
    std::string get(const std::string& key) const;
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::uint64_t seed() const;
    IterConfig iter() const;
    GridConfig grid() const;
    ClusterConfig cluster() const;
    /// All four methods from this configuration.
    MethodConfigs methods() const;

    int get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    double get_double(const std::string& key) const;

private:
    std::map<std::string, std::string> values_;
};

OutputKind parse_output_kind(const std::string& text);
std::vector<std::vector<std::size_t>> parse_slices(const std::string& text);

} // namespace skex
