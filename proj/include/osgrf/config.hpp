#pragma once

// Run configuration (JSON), model construction from it, CSV readers and the
// JSON form of every report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "osgrf/graph_field.hpp"
#include "osgrf/montecarlo.hpp"
#include "osgrf/qtable.hpp"
#include "osgrf/regime.hpp"
#include "osgrf/spectral_model.hpp"

namespace osgrf {

using Json = nlohmann::ordered_json;

// Parses a config file; relative paths inside it resolve against its directory.
struct RunConfig {
    Json doc = Json::object();
    std::filesystem::path base_dir = ".";

    static RunConfig load(const std::filesystem::path& path);
    // Rejects unknown keys and wrong types (ConfigError).
    void validate() const;
    const Json& section(const std::string& name) const;
    Json& section_mut(const std::string& name);
    std::filesystem::path resolve(const std::string& path) const;
};

SpectralModel model_from_config(const RunConfig& cfg);
std::vector<PmfEntry> read_pmf_csv(const std::filesystem::path& path, int dim);
// Rows of `columns` numbers; a non-numeric first row is taken as a header.
std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path, std::size_t columns);
std::vector<std::vector<double>> t_grid_from_json(const Json& j, int dim);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
std::string config_hash(const Json& effective);

// Seed from the config, else OSGRF_SEED; nullopt when neither is set.
std::optional<std::uint64_t> resolve_seed(const RunConfig& cfg);

// Shortest round-trip formatting used in every CSV.
std::string fmt_double(double v);

Json to_json(const RegimeReport& r);
Json to_json(const GaussianityResult& g);
Json to_json(const VerdictReport& v);
Json to_json(const IdentityReport& r);

} // namespace osgrf
