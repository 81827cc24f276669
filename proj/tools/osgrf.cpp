// osgrf command line: classify, qtable, limit-cov, simulate, synthesize-w, verify.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "osgrf/config.hpp"
#include "osgrf/errors.hpp"
#include "osgrf/graph_field.hpp"
#include "osgrf/limit_field.hpp"
#include "osgrf/montecarlo.hpp"
#include "osgrf/parallel.hpp"
#include "osgrf/qtable.hpp"
#include "osgrf/regime.hpp"

namespace fs = std::filesystem;
using namespace osgrf;

namespace {

// Flags shared by every subcommand. Unset flags leave the config alone.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string output_dir;
    std::vector<double> alphas, gammas, alpha_primes, n_schedule;
    std::optional<double> p;
    std::string family, pmf_file, units;
};

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed (falls back to OSGRF_SEED)");
    sub->add_option("--workers", o.workers, "worker threads");
    sub->add_option("-o,--output-dir", o.output_dir, "directory for outputs and the manifest");
    sub->add_option("--alpha", o.alphas, "step exponents alpha_1..alpha_d")->delimiter(',');
    sub->add_option("--gamma", o.gammas, "limit scale weights")->delimiter(',');
    sub->add_option("--p", o.p, "P(component sign = +1)");
    sub->add_option("--family", o.family, "product-pareto or custom-pmf");
    sub->add_option("--pmf-file", o.pmf_file, "CSV k_1..k_d,prob for custom-pmf");
    sub->add_option("--alpha-prime", o.alpha_primes, "scaling exponents alpha'_1..alpha'_d")->delimiter(',');
    sub->add_option("--n", o.n_schedule, "n schedule")->delimiter(',');
    sub->add_option("--units", o.units, "n schedule units: scale or window");
}

std::string absolute_string(const std::string& p)
{
    return fs::absolute(fs::path(p)).lexically_normal().string();
}

// Loads the config file, applies flag overrides and resolves every path.
RunConfig effective_config(const Overrides& o)
{
    RunConfig cfg;
    if (!o.config.empty()) cfg = RunConfig::load(o.config);
    else cfg.base_dir = fs::current_path();
    cfg.validate();

    Json& doc = cfg.doc;
    if (o.seed) doc["seed"] = *o.seed;
    if (o.workers) doc["workers"] = *o.workers;
    if (!o.output_dir.empty()) doc["output_dir"] = absolute_string(o.output_dir);
    if (!o.alphas.empty()) {
        Json& m = cfg.section_mut("model");
        m["alphas"] = o.alphas;
        m.erase("dimension");
    }
    if (!o.gammas.empty()) cfg.section_mut("model")["gammas"] = o.gammas;
    if (o.p) cfg.section_mut("model")["p"] = *o.p;
    if (!o.family.empty()) cfg.section_mut("model")["family"] = o.family;
    if (!o.pmf_file.empty()) cfg.section_mut("model")["pmf_file"] = absolute_string(o.pmf_file);
    if (!o.alpha_primes.empty()) cfg.section_mut("scaling")["alpha_primes"] = o.alpha_primes;
    if (!o.n_schedule.empty()) cfg.section_mut("scaling")["n_schedule"] = o.n_schedule;
    if (!o.units.empty()) cfg.section_mut("scaling")["units"] = o.units;

    auto resolve_key = [&](Json& sec, const char* key) {
        if (sec.is_object() && sec.contains(key)) sec[key] = cfg.resolve(sec[key].get<std::string>()).string();
    };
    if (doc.contains("output_dir")) doc["output_dir"] = cfg.resolve(doc["output_dir"].get<std::string>()).string();
    if (doc.contains("model")) resolve_key(doc["model"], "pmf_file");
    if (doc.contains("limit_cov")) resolve_key(doc["limit_cov"], "points_file");
    cfg.validate();
    return cfg;
}

unsigned workers_of(const RunConfig& cfg)
{
    const unsigned w = cfg.doc.value("workers", 1u);
    if (w == 0) throw ConfigError("workers must be at least 1");
    return w;
}

std::uint64_t require_seed(const RunConfig& cfg, const char* command)
{
    auto s = resolve_seed(cfg);
    if (!s) throw ConfigError(std::string(command) + " needs a seed (config 'seed', --seed or OSGRF_SEED)");
    return *s;
}

std::vector<double> alpha_primes_of(const RunConfig& cfg, const SpectralModel& model)
{
    const Json& sc = cfg.section("scaling");
    if (!sc.contains("alpha_primes")) return model.exponent().alphas; // critical scaling
    std::vector<double> ap = sc.at("alpha_primes").get<std::vector<double>>();
    if (static_cast<int>(ap.size()) != model.dim()) throw ConfigError("scaling.alpha_primes has the wrong length");
    return ap;
}

RegimeOptions regime_options(const RunConfig& cfg)
{
    RegimeOptions o;
    const Json& c = cfg.section("classify");
    o.tie_epsilon = c.value("tie_epsilon", o.tie_epsilon);
    o.boundary_holder = c.value("boundary_holder", o.boundary_holder);
    return o;
}

LimitQuadratureConfig quadrature_of(const RunConfig& cfg)
{
    LimitQuadratureConfig q;
    const Json& c = cfg.section("limit_cov");
    q.tail_tol = c.value("tail_tol", q.tail_tol);
    q.max_radius_line = c.value("max_radius_line", q.max_radius_line);
    q.max_radius_tensor = c.value("max_radius_tensor", q.max_radius_tensor);
    q.qmc_points = c.value("qmc_points", q.qmc_points);
    return q;
}

// "model" (exact sigma_X^2), "unit" (1) or a number.
double sigma_x2_of(const Json& sec, const SpectralModel& model)
{
    if (sec.contains("sigma_x2") && sec.at("sigma_x2").is_number()) {
        const double v = sec.at("sigma_x2").get<double>();
        if (!(v > 0.0)) throw ConfigError("sigma_x2 must be positive");
        return v;
    }
    const std::string mode = sec.value("sigma_x2", std::string("model"));
    if (mode == "unit") return 1.0;
    if (mode != "model") throw ConfigError("sigma_x2 must be a number, 'model' or 'unit'");
    const SumSq ss = exact_sum_sq(model);
    if (!std::isfinite(ss.value)) throw ConfigError("sigma_x2 = 0 for a single-atom step law; give sigma_x2 explicitly");
    return sigma_x2_from_sum_sq(ss.value, model.p());
}

std::vector<std::vector<double>> default_t_grid(int dim)
{
    std::vector<std::vector<double>> g;
    for (double t : {0.25, 0.5, 0.75, 1.0}) g.emplace_back(static_cast<std::size_t>(dim), t);
    return g;
}

std::vector<std::vector<double>> t_grid_of(const Json& sec, int dim)
{
    return sec.contains("t_grid") ? t_grid_from_json(sec.at("t_grid"), dim) : default_t_grid(dim);
}

class Run {
public:
    Run(std::string command, RunConfig cfg, bool need_dir = true) : command_(std::move(command)), cfg_(std::move(cfg))
    {
        start_ = std::chrono::steady_clock::now();
        if (cfg_.doc.contains("output_dir")) dir_ = cfg_.doc.at("output_dir").get<std::string>();
        else if (need_dir) dir_ = fs::current_path() / "osgrf_out";
        if (!dir_.empty()) {
            std::error_code ec;
            fs::create_directories(dir_, ec);
            if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
        }
    }

    const RunConfig& cfg() const { return cfg_; }
    bool has_dir() const { return !dir_.empty(); }

    fs::path file(const std::string& name)
    {
        outputs_.push_back(name);
        return dir_ / name;
    }

    void write_text(const std::string& name, const std::string& text)
    {
        std::ofstream out(file(name), std::ios::binary);
        if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
        out << text;
    }

    void write_json(const std::string& name, const Json& j) { write_text(name, j.dump(2) + "\n"); }

    void finish(std::optional<std::uint64_t> seed)
    {
        if (dir_.empty()) return;
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        Json m;
        m["schema_version"] = kSchemaVersion;
        m["command"] = command_;
        Json v;
        v["osgrf"] = OSGRF_VERSION;
        v["compiler"] = __VERSION__;
        v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                             std::to_string(NLOHMANN_JSON_VERSION_PATCH);
        v["cli11"] = CLI11_VERSION;
        m["versions"] = v;
        m["config_hash"] = config_hash(cfg_.doc);
        m["seed"] = seed ? Json(*seed) : Json(nullptr);
        m["workers"] = cfg_.doc.value("workers", 1u);
        m["wall_time_seconds"] = wall;
        m["outputs"] = outputs_;
        m["effective_config"] = cfg_.doc;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << "\n";
    }

private:
    std::string command_;
    RunConfig cfg_;
    fs::path dir_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

std::string csv_row(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt_double(v[i]);
    }
    return s;
}

std::string axis_header(const char* prefix, int dim)
{
    std::string s;
    for (int k = 1; k <= dim; ++k) {
        if (k > 1) s += ',';
        s += prefix + std::to_string(k);
    }
    return s;
}

int cmd_classify(const RunConfig& cfg)
{
    const Json& m = cfg.section("model");
    if (!m.contains("alphas")) throw ConfigError("classify needs --alpha");
    const auto alphas = m.at("alphas").get<std::vector<double>>();
    std::vector<double> ap = alphas;
    if (cfg.section("scaling").contains("alpha_primes")) {
        ap = cfg.section("scaling").at("alpha_primes").get<std::vector<double>>();
    }
    if (ap.size() != alphas.size()) throw ConfigError("--alpha and --alpha-prime differ in length");
    Run run("classify", cfg, false);
    const Json j = to_json(classify(alphas, ap, regime_options(cfg)));
    std::cout << j.dump(2) << "\n";
    if (run.has_dir()) run.write_json("regime.json", j);
    run.finish(std::nullopt);
    return 0;
}

int cmd_qtable(const RunConfig& cfg)
{
    const SpectralModel model = model_from_config(cfg);
    const Json& sec = cfg.section("qtable");
    const std::int64_t extent = sec.value("extent", model.dim() == 1 ? std::int64_t{16384} : std::int64_t{256});
    if (extent < 1) throw ConfigError("qtable.extent must be positive");
    const std::size_t budget = sec.value("max_cells", kDefaultQTableBudget);
    Run run("qtable", cfg);
    const QTable table = build_qtable(model, extent, budget);

    std::string bytes(reinterpret_cast<const char*>(table.values.data()), table.values.size() * sizeof(double));
    run.write_text("qtable.bin", bytes);
    Json h;
    h["schema_version"] = kSchemaVersion;
    h["dims"] = table.dim;
    h["extent"] = table.extent;
    h["side"] = table.side();
    h["count"] = table.cells();
    h["dtype"] = "float64";
    h["endian"] = "native";
    h["order"] = "colex, axis 0 fastest";
    h["checksum_fnv1a64"] = hex64(fnv1a64(bytes));
    run.write_json("qtable.json", h);

    std::ostringstream csv;
    csv << "extent,cells,sum_sq,sigma_x2,pmf_tail_mass,diagonal_monotone";
    const bool parseval = sec.value("parseval", false);
    if (parseval) csv << ",parseval_integral,parseval_quad_error,parseval_discrepancy";
    csv << "\n"
        << table.extent << ',' << table.cells() << ',' << fmt_double(table.sum_sq) << ','
        << fmt_double(sigma_x2(table, model.p())) << ',' << fmt_double(table.pmf_tail_mass) << ','
        << (table.diagonal_monotone ? 1 : 0);
    if (parseval) {
        const ParsevalResult pr = parseval_check(model, table);
        csv << ',' << fmt_double(pr.integral) << ',' << fmt_double(pr.quad_error) << ',' << fmt_double(pr.discrepancy);
    }
    csv << "\n";
    run.write_text("qtable_summary.csv", csv.str());
    run.finish(std::nullopt);
    return 0;
}

int cmd_limit_cov(const RunConfig& cfg)
{
    const SpectralModel model = model_from_config(cfg);
    const int d = model.dim();
    const Json& sec = cfg.section("limit_cov");
    std::vector<std::vector<double>> rows;
    if (sec.contains("points_file")) rows = read_points_csv(sec.at("points_file").get<std::string>(), 2 * static_cast<std::size_t>(d));
    if (sec.contains("points")) {
        for (const auto& r : sec.at("points")) {
            auto v = r.get<std::vector<double>>();
            if (static_cast<int>(v.size()) != 2 * d) throw ConfigError("limit_cov.points rows need 2d numbers");
            rows.push_back(std::move(v));
        }
    }
    if (rows.empty()) throw ConfigError("limit-cov needs points (--points or limit_cov.points)");

    const RegimeReport rep = classify(model.exponent().alphas, alpha_primes_of(cfg, model), regime_options(cfg));
    if (!rep.valid) throw ConfigError("regime is invalid: " + (rep.reasons.empty() ? std::string() : rep.reasons[0]));
    const double s2 = sigma_x2_of(sec, model);
    const bool closed = sec.value("closed_form", false);
    const double max_rel = sec.value("max_rel_error", 1e-2);

    Run run("limit-cov", cfg);
    std::vector<std::vector<double>> pts;
    for (const auto& r : rows) {
        pts.emplace_back(r.begin(), r.begin() + d);
        pts.emplace_back(r.begin() + d, r.end());
    }
    const LimitCovariance lc(rep, model, s2, quadrature_of(cfg), QueryScale::from_points(pts));
    std::ostringstream csv;
    csv << axis_header("t_", d) << ',' << axis_header("s_", d) << ",value,error";
    if (closed) csv << ",closed_form";
    csv << "\n";
    bool tolerance_met = true;
    for (const auto& r : rows) {
        const std::vector<double> t(r.begin(), r.begin() + d), s(r.begin() + d, r.end());
        const Integral v = lc.cov(t, s);
        if (v.error > max_rel * std::abs(v.value) && v.error > 1e-12) tolerance_met = false;
        csv << csv_row(r) << ',' << fmt_double(v.value) << ',' << fmt_double(v.error);
        if (closed) csv << ',' << fmt_double(closed_form_cov(rep, model, s2, t, s));
        csv << "\n";
    }
    run.write_text("limit_cov.csv", csv.str());
    Json side;
    side["schema_version"] = kSchemaVersion;
    side["regime"] = to_json(rep);
    side["sigma_x2"] = s2;
    side["quadrature_mode"] = to_string(lc.mode());
    side["nodes"] = lc.node_count();
    run.write_json("limit_cov.json", side);
    run.finish(std::nullopt);
    if (!tolerance_met) throw NumericalError("some quadrature error estimates exceed limit_cov.max_rel_error");
    return 0;
}

int cmd_simulate(const RunConfig& cfg)
{
    const std::uint64_t seed = require_seed(cfg, "simulate");
    const SpectralModel model = model_from_config(cfg);
    const int d = model.dim();
    const Json& sec = cfg.section("simulate");
    std::vector<std::int64_t> extents(static_cast<std::size_t>(d), 1024);
    if (sec.contains("extents")) extents = sec.at("extents").get<std::vector<std::int64_t>>();
    if (static_cast<int>(extents.size()) != d) throw ConfigError("simulate.extents has the wrong length");
    for (auto e : extents) {
        if (e < 1) throw ConfigError("simulate.extents must be positive");
    }
    const std::size_t replicas = sec.value("replicas", std::size_t{1});
    const auto grid = t_grid_of(sec, d);
    WindowOptions opt;
    opt.buffer_depth = sec.value("buffer_depth", std::int64_t{0});
    opt.site_budget = sec.value("site_budget", kDefaultSiteBudget);
    const unsigned workers = workers_of(cfg);

    Run run("simulate", cfg);
    std::vector<PartialSumGrid> sums(replicas);
    std::vector<Json> meta(replicas);
    parallel_for(replicas, workers, [&](std::size_t r) {
        const std::uint64_t rs = replica_seed(seed, r);
        const FieldWindow w = simulate_window(model, extents, rs, opt);
        sums[r] = partial_sums(w, grid, model.p());
        Json j;
        j["replica"] = r;
        j["seed"] = rs;
        j["buffer_depth"] = w.buffer_depth;
        j["total_components"] = w.total_components;
        j["truncated_components"] = w.truncated_components;
        j["tracked_sites"] = w.tracked_sites;
        meta[r] = j;
    });

    std::ostringstream csv;
    csv << "replica," << axis_header("t_", d) << ",S,S_centered\n";
    for (std::size_t r = 0; r < replicas; ++r) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv << r << ',' << csv_row(grid[i]) << ',' << fmt_double(sums[r].sums[i]) << ','
                << fmt_double(sums[r].centered[i]) << "\n";
        }
    }
    run.write_text("simulate.csv", csv.str());
    Json side;
    side["schema_version"] = kSchemaVersion;
    side["extents"] = extents;
    side["seed"] = seed;
    side["p"] = model.p();
    side["replicas"] = meta;
    run.write_json("simulate.json", side);
    run.finish(seed);
    return 0;
}

int cmd_synthesize(const RunConfig& cfg)
{
    const std::uint64_t seed = require_seed(cfg, "synthesize-w");
    const SpectralModel model = model_from_config(cfg);
    const int d = model.dim();
    const Json& sec = cfg.section("synthesize_w");
    const RegimeReport rep = classify(model.exponent().alphas, alpha_primes_of(cfg, model), regime_options(cfg));
    if (!rep.valid) throw ConfigError("regime is invalid: " + (rep.reasons.empty() ? std::string() : rep.reasons[0]));
    const double s2 = sigma_x2_of(sec, model);
    SynthesisConfig sc;
    sc.octaves = sec.value("octaves", sc.octaves);
    sc.cells_per_octave = sec.value("cells_per_octave", sc.cells_per_octave);
    const std::size_t count = sec.value("realizations", std::size_t{1});
    const std::string format = sec.value("format", std::string("long"));
    if (format != "long" && format != "per-realization") throw ConfigError("synthesize_w.format must be long or per-realization");
    const auto grid = t_grid_of(sec, d);

    Run run("synthesize-w", cfg);
    const SynthesisResult res = synthesize_W(rep, model, s2, grid, sc, seed, count, workers_of(cfg), quadrature_of(cfg));
    const std::size_t np = grid.size();
    if (format == "long") {
        std::ostringstream csv;
        csv << "realization," << axis_header("t_", d) << ",W\n";
        for (std::size_t r = 0; r < count; ++r) {
            for (std::size_t i = 0; i < np; ++i) csv << r << ',' << csv_row(grid[i]) << ',' << fmt_double(res.values[r * np + i]) << "\n";
        }
        run.write_text("synthesize_w.csv", csv.str());
    } else {
        for (std::size_t r = 0; r < count; ++r) {
            std::ostringstream csv;
            csv << axis_header("t_", d) << ",W\n";
            for (std::size_t i = 0; i < np; ++i) csv << csv_row(grid[i]) << ',' << fmt_double(res.values[r * np + i]) << "\n";
            char name[32];
            std::snprintf(name, sizeof name, "w_%06zu.csv", r);
            run.write_text(name, csv.str());
        }
    }
    Json side;
    side["schema_version"] = kSchemaVersion;
    side["regime"] = to_json(rep);
    side["sigma_x2"] = s2;
    side["t_grid"] = grid;
    side["grid_var"] = res.grid_var;
    side["target_var"] = res.target_var;
    side["warnings"] = res.warnings;
    run.write_json("synthesize_w.json", side);
    run.finish(seed);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_verify(const RunConfig& cfg)
{
    const std::uint64_t seed = require_seed(cfg, "verify");
    ExperimentPlan plan;
    plan.model = model_from_config(cfg);
    const int d = plan.model.dim();
    plan.alpha_primes = alpha_primes_of(cfg, plan.model);
    const Json& sc = cfg.section("scaling");
    if (!sc.contains("n_schedule")) throw ConfigError("verify needs scaling.n_schedule");
    plan.n_schedule = sc.at("n_schedule").get<std::vector<double>>();
    plan.units = schedule_units_from_string(sc.value("units", std::string("scale")));
    const Json& v = cfg.section("verify");
    plan.replicas = v.value("replicas", plan.replicas);
    plan.t_grid = t_grid_of(v, d);
    plan.seed = seed;
    plan.workers = workers_of(cfg);
    plan.buffer_depth = v.value("buffer_depth", plan.buffer_depth);
    plan.site_budget = v.value("site_budget", plan.site_budget);
    plan.var_tolerance = v.value("var_tolerance", plan.var_tolerance);
    plan.z_tolerance = v.value("z_tolerance", plan.z_tolerance);
    plan.trend_sigmas = v.value("trend_sigmas", plan.trend_sigmas);
    plan.gaussianity = v.value("gaussianity", plan.gaussianity);
    plan.prelimit = v.value("prelimit", plan.prelimit);
    plan.z_target = z_target_from_string(v.value("z_target", std::string("limit")));
    plan.quadrature = quadrature_of(cfg);
    plan.validate();

    Run run("verify", cfg);
    const VerdictReport rep = run_invariance_experiment(plan);
    run.write_json("verdict.json", to_json(rep));

    std::ostringstream csv;
    csv << "n," << axis_header("t_", d) << ',' << axis_header("s_", d) << ",empirical,se,target,z,prelimit,z_prelimit\n";
    for (const auto& s : rep.scales) {
        for (const auto& e : s.entries) {
            csv << fmt_double(s.n) << ',' << csv_row(rep.t_grid[e.a]) << ',' << csv_row(rep.t_grid[e.b]) << ','
                << fmt_double(e.empirical) << ',' << fmt_double(e.se) << ',' << fmt_double(e.target) << ','
                << fmt_double(e.z) << ',' << (e.prelimit ? fmt_double(*e.prelimit) : "") << ','
                << (e.z_prelimit ? fmt_double(*e.z_prelimit) : "") << "\n";
        }
    }
    run.write_text("verify.csv", csv.str());

    bool identities_ok = true;
    if (v.contains("identities")) {
        const Json& id = v.at("identities");
        IdentityConfig ic;
        ic.replicas = id.value("replicas", ic.replicas);
        ic.K = id.value("K", ic.K);
        ic.xstar_depth = id.value("xstar_depth", ic.xstar_depth);
        ic.meeting_depth = id.value("meeting_depth", ic.meeting_depth);
        ic.seed = seed;
        ic.workers = plan.workers;
        ic.site_budget = plan.site_budget;
        if (id.contains("offsets")) {
            ic.offsets.clear();
            for (const auto& o : id.at("offsets")) {
                LatticePoint lp{};
                if (o.is_number_integer()) {
                    lp[0] = o.get<std::int64_t>();
                } else {
                    const auto c = o.get<std::vector<std::int64_t>>();
                    if (static_cast<int>(c.size()) != d) throw ConfigError("identities.offsets entry has the wrong length");
                    for (int k = 0; k < d; ++k) lp[k] = c[k];
                }
                ic.offsets.push_back(lp);
            }
        }
        const IdentityReport ir = verify_identities(plan.model, ic);
        run.write_json("identities.json", to_json(ir));
        if (std::abs(ir.z_var_xstar) >= 3.0) identities_ok = false;
        for (const auto& m : ir.meetings) {
            if (std::abs(m.z) >= 3.0) identities_ok = false;
        }
    }
    run.finish(seed);
    std::cout << (rep.passed ? "PASS" : "FAIL") << " invariance verdict";
    if (v.contains("identities")) std::cout << (identities_ok ? ", identities PASS" : ", identities FAIL");
    std::cout << "\n";
    if (!rep.passed || !identities_ok) throw NumericalError("verification tolerances not met");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo and numerical toolkit for operator-scaling graph random fields"};
    app.set_version_flag("--version", OSGRF_VERSION);
    app.require_subcommand(1);

    Overrides o;
    auto* classify_cmd = app.add_subcommand("classify", "regime of (E, E') as JSON");
    auto* qtable_cmd = app.add_subcommand("qtable", "ancestral probabilities q_k on a box");
    auto* limit_cmd = app.add_subcommand("limit-cov", "covariance of the limit field at point pairs");
    auto* simulate_cmd = app.add_subcommand("simulate", "graph field windows and partial sums");
    auto* synth_cmd = app.add_subcommand("synthesize-w", "spectral synthesis of the limit field");
    auto* verify_cmd = app.add_subcommand("verify", "invariance experiment against the limit");
    for (auto* s : {classify_cmd, qtable_cmd, limit_cmd, simulate_cmd, synth_cmd, verify_cmd}) add_common(s, o);

    std::optional<double> tie_eps;
    classify_cmd->add_option("--tie-epsilon", tie_eps, "tolerance for ties in the partition");
    std::optional<std::int64_t> extent;
    bool parseval = false;
    qtable_cmd->add_option("--extent", extent, "box side N");
    qtable_cmd->add_flag("--parseval", parseval, "add the Parseval cross-check to the summary");
    std::string points;
    std::string sigma;
    bool closed = false;
    limit_cmd->add_option("--points", points, "CSV t_1..t_d,s_1..s_d");
    limit_cmd->add_option("--sigma-x2", sigma, "model, unit or a number");
    limit_cmd->add_flag("--closed-form", closed, "add the sheet closed form (one I_= axis)");
    std::vector<std::int64_t> extents;
    std::optional<std::size_t> replicas;
    simulate_cmd->add_option("--extents", extents, "window extents")->delimiter(',');
    simulate_cmd->add_option("--replicas", replicas, "independent windows");
    verify_cmd->add_option("--replicas", replicas, "replicas per n");
    std::optional<std::size_t> realizations;
    std::string format;
    synth_cmd->add_option("--realizations", realizations, "number of realizations");
    synth_cmd->add_option("--format", format, "long or per-realization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = effective_config(o);
        auto set = [&](const char* section, const char* key, Json value) {
            cfg.section_mut(section)[key] = std::move(value);
        };
        if (tie_eps) set("classify", "tie_epsilon", *tie_eps);
        if (extent) set("qtable", "extent", *extent);
        if (parseval) set("qtable", "parseval", true);
        if (!points.empty()) set("limit_cov", "points_file", absolute_string(points));
        if (!sigma.empty()) {
            char* end = nullptr;
            const double v = std::strtod(sigma.c_str(), &end);
            if (end != sigma.c_str() && *end == '\0') set("limit_cov", "sigma_x2", v);
            else set("limit_cov", "sigma_x2", sigma);
        }
        if (closed) set("limit_cov", "closed_form", true);
        if (!extents.empty()) set("simulate", "extents", extents);
        if (replicas) set(simulate_cmd->parsed() ? "simulate" : "verify", "replicas", *replicas);
        if (realizations) set("synthesize_w", "realizations", *realizations);
        if (!format.empty()) set("synthesize_w", "format", format);
        cfg.validate();

        if (classify_cmd->parsed()) return cmd_classify(cfg);
        if (qtable_cmd->parsed()) return cmd_qtable(cfg);
        if (limit_cmd->parsed()) return cmd_limit_cov(cfg);
        if (simulate_cmd->parsed()) return cmd_simulate(cfg);
        if (synth_cmd->parsed()) return cmd_synthesize(cfg);
        if (verify_cmd->parsed()) return cmd_verify(cfg);
        std::cerr << app.help();
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "resource budget exceeded: " << e.what() << "\n";
        return 4;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
