#include "hrw/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hrw/distance_chain.hpp"
#include "hrw/errors.hpp"
#include "hrw/kernel.hpp"
#include "hrw/montecarlo.hpp"
#include "hrw/potential.hpp"

namespace hrw::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[40];
    if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", x);
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", x);
    }
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string spec_hash(const kernel::WalkSpec& spec) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(spec.to_json().dump()));
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

json potential_json(const potential::PotentialValue& v) {
    json j{{"value", v.divergent ? json() : json(v.value)},
           {"truncationError", v.truncation_error},
           {"divergent", v.divergent},
           {"indeterminate", v.indeterminate},
           {"terms", v.terms}};
    return j;
}

struct Emitted {
    std::string summary;
    bool certificate_failure = false;
};

bool is_uint(const json& j) { return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0); }

// --- per-experiment parameter checks (pure diagnostics) --------------------

void check_params(const json& cfg, const std::string& exp, std::vector<std::string>& diag) {
    const json params = cfg.value("params", json::object());
    auto need = [&](const char* field, bool ok) {
        if (!params.contains(field))
            diag.push_back("missing required field: params." + std::string(field));
        else if (!ok)
            diag.push_back("invalid value for params." + std::string(field));
    };
    auto number = [&](const char* field) {
        return params.contains(field) && params[field].is_number();
    };
    auto positive = [&](const char* field) {
        return number(field) && params[field].get<double>() > 0.0;
    };

    if (exp == "transition") {
        if (!params.contains("n") && !params.contains("t"))
            diag.push_back("transition: needs params.n (steps) or params.t (time)");
        if (params.contains("n") && !(is_uint(params["n"]) && params["n"].get<std::uint64_t>() >= 1))
            diag.push_back("invalid value for params.n");
        if (params.contains("t") && !(number("t") && params["t"].get<double>() >= 0.0))
            diag.push_back("invalid value for params.t");
        need("rad", params.contains("rad") && is_uint(params["rad"]));
    } else if (exp == "green") {
        need("zeta", positive("zeta"));
    } else if (exp == "incomplete-sweep") {
        need("t_grid", params.contains("t_grid") && params["t_grid"].is_array() &&
                           !params["t_grid"].empty());
        const std::string fn = params.value("functional", "g1");
        if (fn != "g1" && fn != "g2" && fn != "g2g" && fn != "gzeta")
            diag.push_back("incomplete-sweep: functional must be g1|g2|g2g|gzeta");
        if (fn == "gzeta" && !positive("zeta"))
            diag.push_back("incomplete-sweep: gzeta needs positive params.zeta");
    } else if (exp == "asymptotic-benchmark") {
        need("t_grid", params.contains("t_grid") && params["t_grid"].is_array() &&
                           !params["t_grid"].empty());
    } else if (exp == "last-exit") {
        need("mu", number("mu") && params["mu"].get<double>() >= 1.0);
        need("R", params.contains("R") && is_uint(params["R"]));
    } else if (exp == "return-tail") {
        need("horizon", positive("horizon"));
        need("steps", params.contains("steps") && is_uint(params["steps"]) &&
                          params["steps"].get<std::uint64_t>() >= 100);
    } else if (exp == "max-process") {
        need("n", params.contains("n") && is_uint(params["n"]) &&
                      params["n"].get<std::uint64_t>() >= 1);
    } else if (exp == "timescale") {
        need("mu", number("mu") && params["mu"].get<double>() >= 1.0);
        need("j", params.contains("j") && is_uint(params["j"]) &&
                      params["j"].get<std::uint64_t>() >= 1);
    } else if (exp == "simulate" || exp == "occupation") {
        need("replicas", params.contains("replicas") && is_uint(params["replicas"]) &&
                             params["replicas"].get<std::uint64_t>() >= 1);
        if (!cfg.contains("seed")) diag.push_back("missing required field: seed");
        if (exp == "simulate") {
            const std::string scheme = params.value("scheme", "discrete");
            if (scheme != "discrete" && scheme != "continuous")
                diag.push_back("simulate: scheme must be discrete|continuous");
            if (scheme == "discrete" &&
                !(params.contains("steps") && is_uint(params["steps"]) &&
                  params["steps"].get<std::uint64_t>() >= 1))
                diag.push_back("simulate: discrete scheme needs params.steps >= 1");
            if (scheme == "continuous" && !positive("t"))
                diag.push_back("simulate: continuous scheme needs params.t > 0");
            const std::string estimate = params.value("estimate", "paths");
            if (estimate != "paths" && estimate != "return-time" && estimate != "last-exit")
                diag.push_back("simulate: estimate must be paths|return-time|last-exit");
            if (estimate != "paths" && scheme != "continuous")
                diag.push_back("simulate: " + estimate + " estimation needs the continuous scheme");
        } else {
            need("t", positive("t"));
        }
    }
}

// recurrence certificate used by the occupation validation
bool certified_recurrent_mu1(const kernel::WalkSpec& spec) {
    if (const auto* g = std::get_if<kernel::GeometricLaw>(&spec.law))
        return std::fabs(g->c - 1.0) < 1e-12;
    const kernel::SeqRule* rule = nullptr;
    double mu = 0.0;
    if (const auto* mc = std::get_if<kernel::MuCLaw>(&spec.law)) {
        rule = &mc->cseq;
        mu = mc->mu;
    } else if (const auto* md = std::get_if<kernel::MuDLaw>(&spec.law)) {
        rule = &md->dseq;
        mu = md->mu;
    }
    if (!rule || std::fabs(mu - 1.0) > 1e-12) return false;
    return !rule->power_sum_finite(1.0);
}

} // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{
        "kernel-table",  "transition", "degree",       "green",
        "incomplete-sweep", "asymptotic-benchmark", "last-exit", "return-tail",
        "chain-analytics",  "max-process",          "timescale", "simulate",
        "occupation"};
    return names;
}

std::vector<std::string> validate(const json& config) {
    std::vector<std::string> diag;
    if (!config.is_object()) return {"config must be a JSON object"};
    if (!config.contains("experiment")) {
        diag.push_back("missing required field: experiment");
        return diag;
    }
    const std::string exp = config["experiment"].get<std::string>();
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), exp) == names.end()) {
        diag.push_back("unknown experiment: " + exp);
        return diag;
    }
    if (!config.contains("walk")) {
        diag.push_back("missing required field: walk");
        return diag;
    }
    std::optional<kernel::WalkSpec> spec;
    try {
        spec = kernel::WalkSpec::from_json(config["walk"]);
    } catch (const std::exception& e) {
        diag.push_back(std::string("walk: ") + e.what());
    }
    check_params(config, exp, diag);
    if (spec && exp == "occupation" && !certified_recurrent_mu1(*spec))
        diag.push_back("occupation requires a recurrent walk (mu=1 family with divergent "
                       "inverse d-sums)");
    if (spec && exp == "asymptotic-benchmark" && !spec->is_mu_c() && !spec->is_mu_d())
        diag.push_back("asymptotic-benchmark requires a mu-family walk");
    return diag;
}

namespace {

Emitted dispatch(const json& config, const Options& opts, const fs::path& out_dir) {
    const std::string exp = config["experiment"].get<std::string>();
    const json params = config.value("params", json::object());
    const kernel::WalkSpec spec = kernel::WalkSpec::from_json(config["walk"]);
    const double eps = params.value("eps", 1e-12);
    Emitted em;

    std::uint64_t seed = config.value("seed", std::uint64_t{0});
    if (opts.seed_override) seed = *opts.seed_override;

    if (exp == "degree") {
        const auto rep = potential::degree_classify(spec);
        json j{{"gamma", rep.gamma},
               {"decoration", rep.decoration_name()},
               {"method", rep.method_name()},
               {"lower", rep.lower},
               {"upper", rep.upper}};
        write_json(out_dir / "degree.json", j);
        em.summary = "gamma=" + fmt(rep.gamma) + " decoration=" + rep.decoration_name() +
                     " method=" + rep.method_name();
        return em;
    }

    const kernel::KernelTables tables = kernel::build_tables(spec, eps);

    if (exp == "kernel-table") {
        std::ostringstream csv;
        csv << "j,r,f,h,s,d\n";
        for (std::size_t j = 1; j <= tables.truncation_index(); ++j)
            csv << j << ',' << fmt(tables.r()[j - 1]) << ',' << fmt(tables.f()[j - 1]) << ','
                << fmt(tables.h()[j - 1]) << ',' << fmt(tables.s()[j - 1]) << ','
                << fmt(tables.d()[j - 1]) << '\n';
        atomic_write(out_dir / "kernel_table.csv", csv.str());
        write_json(out_dir / "kernel_table.json",
                   json{{"walk", spec.to_json()},
                        {"J", tables.truncation_index()},
                        {"normalizer", tables.normalizer()},
                        {"tailBound", tables.tail_bound()}});
        em.summary = "kernel tables for " + spec.describe() + ": J=" +
                     std::to_string(tables.truncation_index());
        return em;
    }

    if (exp == "transition") {
        const auto rad = params["rad"].get<std::uint32_t>();
        kernel::ProbValue pv;
        json j{{"rad", rad}};
        std::string what;
        if (params.contains("n")) {
            const auto n = params["n"].get<std::uint64_t>();
            pv = kernel::pn(tables, n, rad);
            j["n"] = n;
            what = "p^(n)";
        } else {
            const double t = params["t"].get<double>();
            if (params.value("ball", false)) {
                pv = kernel::pt_ball(tables, t, rad);
                what = "P_t(ball)";
            } else {
                pv = kernel::pt(tables, t, rad);
                what = "p_t";
            }
            j["t"] = t;
        }
        j["p"] = pv.value;
        j["error"] = pv.error;
        write_json(out_dir / "transition.json", j);
        em.summary = what + " = " + fmt(pv.value) + " (err<=" + fmt(pv.error) + ")";
        return em;
    }

    if (exp == "green") {
        const double zeta = params["zeta"].get<double>();
        const auto v = potential::green_power(tables, zeta);
        write_json(out_dir / "green.json", potential_json(v));
        em.summary = "green power zeta=" + fmt(zeta) + ": " +
                     (v.divergent ? "divergent"
                                  : (v.indeterminate ? "indeterminate" : fmt(v.value)));
        em.certificate_failure = v.indeterminate;
        return em;
    }

    if (exp == "incomplete-sweep") {
        const std::string fn = params.value("functional", "g1");
        const double zeta = params.value("zeta", 1.0);
        std::ostringstream tsv;
        tsv << "# time-cut potential growth, functional " << fn << "\n";
        tsv << "t\tvalue\terror\n";
        bool indet = false;
        for (const auto& tj : params["t_grid"]) {
            const double t = tj.get<double>();
            potential::PotentialValue v;
            if (fn == "g1") v = potential::incomplete_powers(tables, 1, t);
            else if (fn == "g2") v = potential::incomplete_powers(tables, 2, t);
            else if (fn == "g2g") v = potential::g2g(tables, t);
            else v = potential::g_t_zeta(tables, zeta, t);
            indet = indet || v.indeterminate;
            tsv << fmt(t) << '\t' << (v.divergent ? "inf" : fmt(v.value)) << '\t'
                << fmt(v.truncation_error) << '\n';
        }
        atomic_write(out_dir / "incomplete_sweep.tsv", tsv.str());
        em.summary = "incomplete potential sweep (" + fn + ") over " +
                     std::to_string(params["t_grid"].size()) + " time points";
        em.certificate_failure = indet;
        return em;
    }

    if (exp == "asymptotic-benchmark") {
        const double mu = params.value("mu", tables.mu());
        std::ostringstream tsv;
        tsv << "# growth of the mu-th incomplete potential power against the "
               "partial-sum prediction\n";
        tsv << "t\tmeasured\tpredicted\tratio\n";
        double last_ratio = 0.0;
        for (const auto& tj : params["t_grid"]) {
            const double t = tj.get<double>();
            potential::PotentialValue v;
            if (std::fabs(mu - 1.0) < 1e-12) v = potential::incomplete_powers(tables, 1, t);
            else if (std::fabs(mu - 2.0) < 1e-12) v = potential::incomplete_powers(tables, 2, t);
            else if (std::fabs(mu - 3.0) < 1e-12) v = potential::g2g(tables, t);
            else v = potential::g_t_zeta(tables, mu, t);
            const double pred = potential::asymptotic_benchmark(tables, mu, t);
            last_ratio = v.value / pred;
            tsv << fmt(t) << '\t' << fmt(v.value) << '\t' << fmt(pred) << '\t'
                << fmt(last_ratio) << '\n';
        }
        atomic_write(out_dir / "asymptotic_benchmark.tsv", tsv.str());
        em.summary = "asymptotic benchmark mu=" + fmt(mu) +
                     ": final ratio=" + fmt(last_ratio);
        return em;
    }

    if (exp == "last-exit") {
        const double mu = params["mu"].get<double>();
        const auto radius = params["R"].get<std::uint32_t>();
        const auto v = potential::last_exit_integral(tables, mu, radius);
        json j{{"mu", mu}, {"R", radius}, {"series", potential_json(v.series)}};
        if (v.closed_form) j["closedForm"] = *v.closed_form;
        write_json(out_dir / "last_exit.json", j);
        em.summary = "last-exit time integral mu=" + fmt(mu) + " R=" + std::to_string(radius) +
                     ": " + (v.series.divergent ? "divergent" : fmt(v.series.value));
        em.certificate_failure = v.series.indeterminate;
        return em;
    }

    if (exp == "return-tail") {
        const double horizon = params["horizon"].get<double>();
        const auto steps = params["steps"].get<std::size_t>();
        const auto tail = potential::return_tail_solve(tables, horizon, steps);
        std::ostringstream csv;
        csv << "t,rho\n";
        for (std::size_t i = 0; i < tail.t.size(); ++i)
            csv << fmt(tail.t[i]) << ',' << fmt(tail.rho[i]) << '\n';
        atomic_write(out_dir / "return_tail.csv", csv.str());
        json j{{"horizon", horizon}, {"steps", steps}, {"residual", tail.residual}};
        if (params.contains("moment_zeta")) {
            const double zeta = params["moment_zeta"].get<double>();
            const auto m = potential::return_moment(tail, zeta);
            j["moment"] = {{"zeta", zeta},
                           {"value", m.value},
                           {"divergenceFlagged", m.divergence_flagged},
                           {"fittedExponent", m.fitted_exponent}};
        }
        write_json(out_dir / "return_tail.json", j);
        em.summary = "excursion-tail solve on [0," + fmt(horizon) +
                     "]: residual=" + fmt(tail.residual);
        return em;
    }

    if (exp == "chain-analytics") {
        const auto cap = params.value("level_cap", std::uint32_t{10});
        const chain::ChainSpec cs(tables);
        std::ostringstream csv;
        csv << "i,j,p\n";
        for (std::uint32_t i = 0; i <= cap; ++i)
            for (std::uint32_t j = 0; j <= cap; ++j)
                csv << i << ',' << j << ',' << fmt(chain::p_ij(cs, i, j)) << '\n';
        atomic_write(out_dir / "chain_p.csv", csv.str());
        json j{{"levelCap", cap}};
        json drifts = json::array();
        for (std::uint32_t i = 0; i <= cap; ++i) drifts.push_back(chain::drift(cs, i));
        j["drift"] = drifts;
        if (auto c = cs.geometric_c(); c && *c < 1.0)
            j["driftThreshold"] = chain::drift_threshold(cs.order(), *c);
        json exits = json::array();
        for (std::uint32_t i = 0; i <= cap; ++i) exits.push_back(chain::exit_stats(cs, i).mean);
        j["meanExitTime"] = exits;
        write_json(out_dir / "chain_analytics.json", j);
        em.summary = "distance-chain analytics up to level " + std::to_string(cap);
        return em;
    }

    if (exp == "max-process") {
        const auto n = params["n"].get<std::uint64_t>();
        const auto cap = params.value("level_cap", std::uint32_t{16});
        const chain::ChainSpec cs(tables);
        std::ostringstream csv;
        csv << "j,pmf,survival\n";
        for (std::uint32_t j = 1; j <= cap; ++j) {
            const auto md = chain::max_dist(cs, static_cast<double>(n), j);
            csv << j << ',' << fmt(md.pmf) << ',' << fmt(md.survival) << '\n';
        }
        atomic_write(out_dir / "max_process.csv", csv.str());
        const chain::MaxChainMatrix q(cs, cap);
        std::ostringstream qcsv;
        qcsv << "i,j,q\n";
        for (std::uint32_t i = 0; i <= cap; ++i)
            for (std::uint32_t j = 0; j <= cap; ++j)
                qcsv << i << ',' << j << ',' << fmt(q.entry(i, j)) << '\n';
        atomic_write(out_dir / "max_q.csv", qcsv.str());
        json j{{"n", n}, {"levelCap", cap}};
        if (params.contains("moment_order")) {
            const double m = params["moment_order"].get<double>();
            const auto mm = chain::max_moment(cs, n, m);
            j["moment"] = {{"order", m}, {"exact", mm.exact}, {"bound", mm.bound},
                           {"tail", mm.tail}};
        }
        write_json(out_dir / "max_process.json", j);
        em.summary = "running-maximum law at n=" + std::to_string(n);
        return em;
    }

    if (exp == "timescale") {
        const double mu = params["mu"].get<double>();
        const auto j_level = params["j"].get<std::uint32_t>();
        const chain::ChainSpec cs(tables);
        const auto r = chain::timescale_probability(cs, mu, j_level);
        write_json(out_dir / "timescale.json",
                   json{{"mu", mu},
                        {"j", j_level},
                        {"steps", r.steps},
                        {"stay", r.exact_stay},
                        {"atLevel", r.exact_at_level},
                        {"atNext", r.exact_at_next},
                        {"largeJLimit", r.large_j_limit},
                        {"largeNAtLevel", r.large_n_at_level},
                        {"largeNAtNext", r.large_n_at_next}});
        em.summary = "exit time-scale probe j=" + std::to_string(j_level) +
                     ": stay=" + fmt(r.exact_stay);
        return em;
    }

    if (exp == "simulate") {
        mc::SimConfig sc;
        sc.seed = seed;
        sc.replicas = params["replicas"].get<std::uint64_t>();
        sc.threads = opts.threads;
        sc.track_full = params.value("track_full", false);
        const std::string scheme = params.value("scheme", "discrete");
        if (scheme == "continuous") {
            sc.scheme = mc::Scheme::Continuous;
            sc.horizon_time = params["t"].get<double>();
        } else {
            sc.scheme = mc::Scheme::Discrete;
            sc.horizon_steps = params["steps"].get<std::uint64_t>();
        }
        json summary{{"seed", sc.seed},
                     {"specHash", spec_hash(spec)},
                     {"replicas", sc.replicas},
                     {"scheme", scheme}};
        const std::string estimate = params.value("estimate", "paths");
        if (estimate == "return-time") {
            const auto est = mc::estimate_return_time(tables, sc);
            summary["censoringFraction"] = est.censoring_fraction;
            if (est.uncensored.count > 0) {
                summary["returnTime"] = {{"count", est.uncensored.count},
                                         {"mean", est.uncensored.mean},
                                         {"variance", est.uncensored.variance}};
            }
            if (params.value("csv", true)) {
                std::ostringstream csv;
                csv << "replica,time,censored\n";
                for (std::size_t i = 0; i < est.samples.size(); ++i)
                    csv << i << ',' << fmt(est.samples[i]) << ',' << int(est.censored[i])
                        << '\n';
                atomic_write(out_dir / "simulate.csv", csv.str());
            }
        } else if (estimate == "last-exit") {
            const auto radius = params.value("R", std::uint32_t{0});
            const auto est = mc::estimate_last_exit(tables, sc, radius);
            summary["latePresenceFraction"] = est.late_presence_fraction;
            summary["lastExit"] = {{"mean", est.stats.mean}, {"variance", est.stats.variance}};
            summary["ballOccupation"] = {{"mean", est.occupation.mean}};
            if (params.value("csv", true)) {
                std::ostringstream csv;
                csv << "replica,last_exit,ball_occupation\n";
                for (std::size_t i = 0; i < est.samples.size(); ++i)
                    csv << i << ',' << fmt(est.samples[i]) << ','
                        << fmt(est.occupation_samples[i]) << '\n';
                atomic_write(out_dir / "simulate.csv", csv.str());
            }
        } else {
            const auto paths = mc::simulate(tables, sc);
            if (params.value("csv", true)) {
                std::ostringstream csv;
                csv << "replica,end_time,jumps,end_distance,max_distance";
                if (sc.track_full) csv << ",end_position";
                csv << '\n';
                for (const auto& p : paths) {
                    csv << p.replica << ',' << fmt(p.end_time) << ',' << p.jumps << ','
                        << p.end_distance << ',' << p.max_distance;
                    if (sc.track_full) csv << ",\"" << p.end_position << '"';
                    csv << '\n';
                }
                atomic_write(out_dir / "simulate.csv", csv.str());
            }
            std::vector<double> dists(paths.size());
            for (std::size_t i = 0; i < paths.size(); ++i) dists[i] = paths[i].end_distance;
            const auto stats = mc::EmpiricalStats::from_samples(dists);
            summary["endDistance"] = {{"mean", stats.mean},
                                      {"variance", stats.variance},
                                      {"min", stats.min},
                                      {"max", stats.max}};
        }
        write_json(out_dir / "simulate.json", summary);
        em.summary = "simulated " + std::to_string(sc.replicas) + " replicas (" + scheme +
                     ", " + estimate + ")";
        return em;
    }

    if (exp == "occupation") {
        mc::SimConfig sc;
        sc.seed = seed;
        sc.replicas = params["replicas"].get<std::uint64_t>();
        sc.threads = opts.threads;
        sc.scheme = mc::Scheme::Continuous;
        const double t = params["t"].get<double>();
        sc.horizon_time = t;
        std::vector<mc::SupportPoint> support;
        if (params.contains("support")) {
            for (const auto& e : params["support"]) {
                support.push_back({group::GroupElement::parse(spec.order,
                                                              e.at("element").get<std::string>()),
                                   e.value("value", 1.0)});
            }
        } else {
            support.push_back({group::GroupElement::origin(spec.order), 1.0});
        }
        const auto res = mc::occupation_statistic(tables, support, t, sc);
        if (params.value("csv", false)) {
            std::ostringstream csv;
            csv << "replica,statistic\n";
            for (std::size_t i = 0; i < res.samples.size(); ++i)
                csv << i << ',' << fmt(res.samples[i]) << '\n';
            atomic_write(out_dir / "occupation_samples.csv", csv.str());
        }
        const auto stats = mc::EmpiricalStats::from_samples(res.samples);
        write_json(out_dir / "occupation.json",
                   json{{"seed", sc.seed},
                        {"specHash", spec_hash(spec)},
                        {"replicas", sc.replicas},
                        {"t", t},
                        {"ksExp1", res.ks_exp1},
                        {"normalizer", res.normalizer},
                        {"mean", stats.mean},
                        {"variance", stats.variance}});
        em.summary = "occupation statistic at t=" + fmt(t) + ": KS(exp1)=" + fmt(res.ks_exp1);
        return em;
    }

    throw ValidationError("unknown experiment: " + exp);
}

} // namespace

int run(const json& config, const Options& opts) {
    const auto diagnostics = validate(config);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) std::cerr << "config error: " << d << '\n';
        return kExitValidation;
    }
    try {
        const Emitted em = dispatch(config, opts, fs::path(opts.out_dir));
        if (!opts.quiet) std::cout << em.summary << '\n';
        return em.certificate_failure ? kExitCertificate : kExitOk;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DivergenceError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const UnsupportedSpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

int run_file(const std::string& config_path, const std::string& experiment, const Options& opts) {
    json config;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config error: cannot open " << config_path << '\n';
            return kExitValidation;
        }
        try {
            in >> config;
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitValidation;
        }
    }
    if (!experiment.empty()) {
        if (config.contains("experiment") &&
            config["experiment"].get<std::string>() != experiment) {
            std::cerr << "config error: experiment field '" << config["experiment"]
                      << "' does not match subcommand '" << experiment << "'\n";
            return kExitValidation;
        }
        config["experiment"] = experiment;
    }
    return run(config, opts);
}

} // namespace hrw::cli
