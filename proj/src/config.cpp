#include "osgrf/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "osgrf/errors.hpp"

namespace osgrf {

namespace {

enum class Kind { Number, Integer, Bool, String, Array, Object, NumberOrString };

using Schema = std::map<std::string, Kind>;

const std::map<std::string, Schema>& schemas()
{
    static const std::map<std::string, Schema> s{
        {"", {{"seed", Kind::Integer},
              {"workers", Kind::Integer},
              {"output_dir", Kind::String},
              {"model", Kind::Object},
              {"scaling", Kind::Object},
              {"classify", Kind::Object},
              {"qtable", Kind::Object},
              {"limit_cov", Kind::Object},
              {"simulate", Kind::Object},
              {"synthesize_w", Kind::Object},
              {"verify", Kind::Object}}},
        {"model", {{"dimension", Kind::Integer},
                   {"alphas", Kind::Array},
                   {"gammas", Kind::Array},
                   {"family", Kind::String},
                   {"pmf_file", Kind::String},
                   {"p", Kind::Number}}},
        {"scaling", {{"alpha_primes", Kind::Array}, {"n_schedule", Kind::Array}, {"units", Kind::String}}},
        {"classify", {{"tie_epsilon", Kind::Number}, {"boundary_holder", Kind::Number}}},
        {"qtable", {{"extent", Kind::Integer}, {"max_cells", Kind::Integer}, {"parseval", Kind::Bool}}},
        {"limit_cov", {{"points_file", Kind::String},
                       {"points", Kind::Array},
                       {"sigma_x2", Kind::NumberOrString},
                       {"tail_tol", Kind::Number},
                       {"max_radius_line", Kind::Number},
                       {"max_radius_tensor", Kind::Number},
                       {"qmc_points", Kind::Integer},
                       {"closed_form", Kind::Bool},
                       {"max_rel_error", Kind::Number}}},
        {"simulate", {{"extents", Kind::Array},
                      {"replicas", Kind::Integer},
                      {"buffer_depth", Kind::Integer},
                      {"t_grid", Kind::Array},
                      {"site_budget", Kind::Integer}}},
        {"synthesize_w", {{"t_grid", Kind::Array},
                          {"realizations", Kind::Integer},
                          {"octaves", Kind::Integer},
                          {"cells_per_octave", Kind::Integer},
                          {"format", Kind::String},
                          {"sigma_x2", Kind::NumberOrString}}},
        {"verify", {{"replicas", Kind::Integer},
                    {"t_grid", Kind::Array},
                    {"buffer_depth", Kind::Integer},
                    {"site_budget", Kind::Integer},
                    {"var_tolerance", Kind::Number},
                    {"z_tolerance", Kind::Number},
                    {"trend_sigmas", Kind::Number},
                    {"gaussianity", Kind::Bool},
                    {"prelimit", Kind::Bool},
                    {"z_target", Kind::String},
                    {"identities", Kind::Object}}},
        {"verify.identities", {{"replicas", Kind::Integer},
                               {"K", Kind::Integer},
                               {"xstar_depth", Kind::Integer},
                               {"offsets", Kind::Array},
                               {"meeting_depth", Kind::Integer}}},
    };
    return s;
}

bool kind_matches(const Json& v, Kind k)
{
    switch (k) {
    case Kind::Number: return v.is_number();
    case Kind::Integer: return v.is_number_integer();
    case Kind::Bool: return v.is_boolean();
    case Kind::String: return v.is_string();
    case Kind::Array: return v.is_array();
    case Kind::Object: return v.is_object();
    case Kind::NumberOrString: return v.is_number() || v.is_string();
    }
    return false;
}

void check_object(const Json& obj, const std::string& name)
{
    const auto& schema = schemas().at(name);
    const std::string where = name.empty() ? "top level" : "section '" + name + "'";
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        auto s = schema.find(it.key());
        if (s == schema.end()) throw ConfigError("unknown key '" + it.key() + "' in " + where);
        if (!kind_matches(it.value(), s->second)) throw ConfigError("key '" + it.key() + "' in " + where + " has the wrong type");
        if (s->second == Kind::Integer && it.value().is_number_integer() && it.value().get<std::int64_t>() < 0 &&
            !it.value().is_number_unsigned()) {
            throw ConfigError("key '" + it.key() + "' in " + where + " must be nonnegative");
        }
    }
}

std::vector<double> number_array(const Json& j, const std::string& what)
{
    if (!j.is_array()) throw ConfigError(what + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError(what + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}

bool parse_double(const std::string& s, double& v)
{
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

Json nullable(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

} // namespace

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    RunConfig cfg;
    try {
        cfg.doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!cfg.doc.is_object()) throw ConfigError("config root must be an object");
    cfg.base_dir = std::filesystem::absolute(path).parent_path();
    return cfg;
}

void RunConfig::validate() const
{
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    check_object(doc, "");
    for (const auto& [name, schema] : schemas()) {
        if (name.empty() || name.find('.') != std::string::npos) continue;
        if (doc.contains(name)) check_object(doc.at(name), name);
    }
    if (doc.contains("verify") && doc.at("verify").contains("identities")) {
        check_object(doc.at("verify").at("identities"), "verify.identities");
    }
}

const Json& RunConfig::section(const std::string& name) const
{
    static const Json empty = Json::object();
    return doc.contains(name) ? doc.at(name) : empty;
}

Json& RunConfig::section_mut(const std::string& name)
{
    if (!doc.contains(name)) doc[name] = Json::object();
    return doc[name];
}

std::filesystem::path RunConfig::resolve(const std::string& path) const
{
    std::filesystem::path p(path);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
}

SpectralModel model_from_config(const RunConfig& cfg)
{
    const Json& m = cfg.section("model");
    if (!m.contains("alphas")) throw ConfigError("model.alphas is required");
    const auto alphas = number_array(m.at("alphas"), "model.alphas");
    if (m.contains("dimension") && m.at("dimension").get<std::int64_t>() != static_cast<std::int64_t>(alphas.size())) {
        throw ConfigError("model.dimension does not match model.alphas");
    }
    std::vector<double> gammas;
    if (m.contains("gammas")) gammas = number_array(m.at("gammas"), "model.gammas");
    const double p = m.value("p", 0.5);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("model.p must lie in [0,1]");
    const std::string family = m.value("family", std::string("product-pareto"));
    try {
        switch (step_family_from_string(family)) {
        case StepFamily::ProductPareto:
            if (m.contains("pmf_file")) throw ConfigError("pmf_file is only valid for family custom-pmf");
            return SpectralModel::product_pareto(alphas, p, gammas);
        case StepFamily::CustomPmf: {
            if (!m.contains("pmf_file")) throw ConfigError("family custom-pmf needs model.pmf_file");
            const auto table = read_pmf_csv(cfg.resolve(m.at("pmf_file").get<std::string>()), static_cast<int>(alphas.size()));
            return SpectralModel::custom(alphas, gammas, table, p);
        }
        }
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    throw ConfigError("unknown model family");
}

std::vector<PmfEntry> read_pmf_csv(const std::filesystem::path& path, int dim)
{
    const auto rows = read_points_csv(path, static_cast<std::size_t>(dim) + 1);
    std::vector<PmfEntry> out;
    for (const auto& r : rows) {
        PmfEntry e;
        for (int k = 0; k < dim; ++k) {
            if (r[k] != std::floor(r[k])) throw ConfigError("pmf coordinates must be integers in " + path.string());
            e.k[k] = static_cast<std::int64_t>(r[k]);
        }
        e.prob = r[dim];
        out.push_back(e);
    }
    return out;
}

std::vector<std::vector<double>> read_points_csv(const std::filesystem::path& path, std::size_t columns)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            double v;
            if (!parse_double(c, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric && lineno == 1) continue; // header
        if (!numeric || cells.size() != columns) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                              " numeric columns");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::vector<double>> t_grid_from_json(const Json& j, int dim)
{
    if (!j.is_array()) throw ConfigError("t_grid must be an array of points");
    std::vector<std::vector<double>> out;
    for (const auto& p : j) {
        auto v = number_array(p, "t_grid point");
        if (static_cast<int>(v.size()) != dim) throw ConfigError("t_grid point has the wrong dimension");
        out.push_back(std::move(v));
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string config_hash(const Json& effective)
{
    return hex64(fnv1a64(effective.dump()));
}

std::optional<std::uint64_t> resolve_seed(const RunConfig& cfg)
{
    if (cfg.doc.contains("seed")) return cfg.doc.at("seed").get<std::uint64_t>();
    if (const char* env = std::getenv("OSGRF_SEED")) {
        std::uint64_t v = 0;
        const char* end = env + std::char_traits<char>::length(env);
        auto [ptr, ec] = std::from_chars(env, end, v);
        if (ec != std::errc() || ptr != end || ptr == env) throw ConfigError("OSGRF_SEED is not an unsigned integer");
        return v;
    }
    return std::nullopt;
}

std::string fmt_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

Json to_json(const RegimeReport& r)
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["alphas"] = r.alphas;
    j["alpha_primes"] = r.alpha_primes;
    j["rhos"] = r.rhos;
    j["gamma0"] = nullable(r.gamma0);
    Json part = Json::array();
    for (auto c : r.partition) part.push_back(to_string(c));
    j["partition"] = part;
    Json epp = Json::array();
    for (double v : r.e_doubleprime) epp.push_back(nullable(v));
    j["e_doubleprime"] = epp;
    j["H"] = nullable(r.H);
    j["qE"] = nullable(r.qE);
    j["qE_prime"] = nullable(r.qE_prime);
    j["qE_doubleprime"] = nullable(r.qE_doubleprime);
    j["q_greater"] = nullable(r.q_greater);
    j["q_geq"] = nullable(r.q_geq);
    j["valid"] = r.valid;
    j["reasons"] = r.reasons;
    j["warnings"] = r.warnings;
    j["is_critical"] = r.is_critical;
    j["is_fbs"] = r.is_fbs;
    j["hurst"] = r.hurst ? Json(*r.hurst) : Json(nullptr);
    j["holder"] = r.holder;
    j["holder_boundary"] = r.holder_boundary;
    Json inc = Json::array();
    for (auto c : r.increment_class) inc.push_back(to_string(c));
    j["increment_class"] = inc;
    return j;
}

Json to_json(const GaussianityResult& g)
{
    Json j;
    j["n"] = g.n;
    j["skewness"] = nullable(g.skewness);
    j["excess_kurtosis"] = nullable(g.excess_kurtosis);
    j["ks_distance"] = nullable(g.ks_distance);
    j["ks_critical"] = g.ks_critical;
    j["degenerate"] = g.degenerate;
    j["pass"] = g.pass;
    return j;
}

Json to_json(const VerdictReport& v)
{
    Json j;
    j["schema_version"] = v.schema_version;
    j["regime"] = to_json(v.regime);
    j["sum_sq"] = nullable(v.sum_sq);
    j["sum_sq_source"] = v.sum_sq_source;
    j["sigma_x2"] = v.sigma_x2;
    j["z_target"] = to_string(v.z_target);
    j["t_grid"] = v.t_grid;
    Json scales = Json::array();
    for (const auto& s : v.scales) {
        Json sj;
        sj["n"] = s.n;
        sj["scale"] = s.scale;
        sj["extents"] = s.extents;
        sj["buffer_depth"] = s.buffer_depth;
        sj["normalization"] = s.normalization;
        Json entries = Json::array();
        for (const auto& e : s.entries) {
            Json ej;
            ej["a"] = e.a;
            ej["b"] = e.b;
            ej["empirical"] = e.empirical;
            ej["se"] = e.se;
            ej["target"] = e.target;
            ej["target_error"] = e.target_error;
            ej["z"] = nullable(e.z);
            ej["prelimit"] = e.prelimit ? Json(*e.prelimit) : Json(nullptr);
            ej["z_prelimit"] = e.z_prelimit ? nullable(*e.z_prelimit) : Json(nullptr);
            entries.push_back(ej);
        }
        sj["entries"] = entries;
        sj["centered_mean"] = s.centered_mean;
        sj["centered_mean_se"] = s.centered_mean_se;
        sj["centering_ok"] = s.centering_ok;
        sj["var_ratio"] = nullable(s.var_ratio);
        sj["var_ratio_se"] = s.var_ratio_se;
        sj["max_abs_z"] = nullable(s.max_abs_z);
        sj["max_abs_z_prelimit"] = nullable(s.max_abs_z_prelimit);
        sj["mean_truncated_fraction"] = s.mean_truncated_fraction;
        sj["gaussianity"] = s.gaussianity ? to_json(*s.gaussianity) : Json(nullptr);
        scales.push_back(sj);
    }
    j["scales"] = scales;
    j["var_within_tolerance"] = v.var_within_tolerance;
    j["trend_ok"] = v.trend_ok;
    j["z_ok"] = v.z_ok;
    j["gaussian_ok"] = v.gaussian_ok;
    j["passed"] = v.passed;
    j["notes"] = v.notes;
    return j;
}

Json to_json(const IdentityReport& r)
{
    Json j;
    j["schema_version"] = r.schema_version;
    j["sum_sq"] = nullable(r.sum_sq);
    j["sum_sq_source"] = r.sum_sq_source;
    j["degenerate"] = r.degenerate;
    Json x;
    x["target"] = r.target_var_xstar;
    x["estimate"] = r.var_xstar.value;
    x["se"] = r.var_xstar.se;
    x["replicas"] = r.var_xstar.replicas;
    x["K"] = r.var_xstar.K;
    x["truncation_bound"] = r.var_xstar.truncation_bound;
    x["z"] = nullable(r.z_var_xstar);
    j["var_xstar"] = x;
    Json ms = Json::array();
    for (const auto& m : r.meetings) {
        Json mj;
        mj["offset"] = std::vector<std::int64_t>(m.offset.begin(), m.offset.end());
        mj["estimate"] = m.estimate;
        mj["se"] = m.se;
        mj["exact"] = m.exact;
        mj["table"] = m.table;
        mj["z"] = nullable(m.z);
        mj["caveat"] = m.caveat;
        ms.push_back(mj);
    }
    j["meetings"] = ms;
    return j;
}

} // namespace osgrf
