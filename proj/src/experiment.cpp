#include "cmj/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <openssl/evp.h>

#include "cmj/ancestry.hpp"
#include "cmj/coupling.hpp"
#include "cmj/errors.hpp"
#include "cmj/immigration.hpp"
#include "cmj/nonlinear_sim.hpp"
#include "cmj/parallel.hpp"
#include "cmj/stats.hpp"

namespace cmj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported by name.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

    bool has(const std::string& k) { seen_.insert(k); return j_.contains(k); }

    double num(const std::string& k, double def) {
        if (!has(k)) return def;
        return as_num(j_.at(k), field(k));
    }
    std::optional<double> opt_num(const std::string& k) {
        if (!has(k) || j_.at(k).is_null()) return std::nullopt;
        return as_num(j_.at(k), field(k));
    }
    std::uint64_t count(const std::string& k, std::uint64_t def) {
        if (!has(k)) return def;
        return as_count(j_.at(k), field(k));
    }
    std::optional<std::uint64_t> opt_count(const std::string& k) {
        if (!has(k) || j_.at(k).is_null()) return std::nullopt;
        return as_count(j_.at(k), field(k));
    }
    std::string str(const std::string& k, std::string def) {
        if (!has(k)) return def;
        if (!j_.at(k).is_string()) throw ConfigError(field(k) + ": expected a string");
        return j_.at(k).get<std::string>();
    }
    bool flag(const std::string& k, bool def) {
        if (!has(k)) return def;
        if (!j_.at(k).is_boolean()) throw ConfigError(field(k) + ": expected true or false");
        return j_.at(k).get<bool>();
    }
    std::vector<double> nums(const std::string& k) {
        std::vector<double> out;
        if (!has(k)) return out;
        const auto& a = j_.at(k);
        if (!a.is_array()) throw ConfigError(field(k) + ": expected an array of numbers");
        for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_num(a[i], field(k) + "[" + std::to_string(i) + "]"));
        return out;
    }
    const json* sub(const std::string& k) {
        if (!has(k)) return nullptr;
        return &j_.at(k);
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError(field(item.key()) + ": unknown or unused field");
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    static double as_num(const json& v, const std::string& f) {
        if (!v.is_number()) throw ConfigError(f + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(f + ": must be finite");
        return x;
    }
    static std::uint64_t as_count(const json& v, const std::string& f) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
        if (v.is_number_float()) {
            const double x = v.get<double>();
            if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
        }
        throw ConfigError(f + ": expected a non-negative integer");
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// two numeric columns, header and blank lines skipped
void read_table_csv(const fs::path& file, const std::string& f, std::vector<double>& xs, std::vector<double>& ys) {
    std::ifstream in(file);
    if (!in) throw ConfigError(f + ": cannot open " + file.string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        double a = 0.0, b = 0.0;
        char comma = 0;
        std::istringstream ss(line);
        if (!(ss >> a >> comma >> b) || comma != ',') {
            if (xs.empty()) continue;  // header
            throw ConfigError(f + ": unreadable row '" + line + "' in " + file.string());
        }
        xs.push_back(a);
        ys.push_back(b);
    }
    if (xs.empty()) throw ConfigError(f + ": no rows in " + file.string());
}

void read_table(Reader& r, const fs::path& base, std::vector<double>& ages, std::vector<double>& values) {
    const std::string csv = r.str("csv", "");
    ages = r.nums("ages");
    values = r.nums("values");
    if (!csv.empty()) {
        if (!ages.empty() || !values.empty())
            throw ConfigError(r.field("csv") + ": give either csv or ages/values, not both");
        fs::path p(csv);
        if (p.is_relative()) p = base / p;
        read_table_csv(p, r.field("csv"), ages, values);
    }
}

RateBlock parse_rate(const json& j, const fs::path& base) {
    Reader r(j, "model.tau");
    RateBlock b;
    b.family = r.str("family", b.family);
    const auto& f = b.family;
    if (f == "constant" || f == "window" || f == "exp_decay") b.rate = r.num("rate", b.rate);
    if (f == "window") {
        b.from = r.num("from", b.from);
        b.to = r.num("to", b.to);
    }
    if (f == "exp_decay") b.decay = r.num("decay", b.decay);
    if (f == "renewal") {
        b.shape = r.num("shape", b.shape);
        b.scale = r.num("scale", b.scale);
        b.max_births = r.count("max_births", b.max_births);
    }
    if (f == "tabulated") read_table(r, base, b.ages, b.values);
    if (f == "atoms") b.ages = r.nums("ages");
    r.finish();
    return b;
}

InitialBlock parse_initial(const json& j, const fs::path& base) {
    Reader r(j, "model.g");
    InitialBlock b;
    b.family = r.str("family", b.family);
    if (b.family == "exponential") b.rate = r.num("rate", b.rate);
    if (b.family == "uniform") b.width = r.num("width", b.width);
    if (b.family == "tabulated") read_table(r, base, b.ages, b.values);
    r.finish();
    return b;
}

RuleBlock parse_rule(const json& j) {
    Reader r(j, "model.C");
    RuleBlock b;
    b.rule = r.str("rule", b.rule);
    if (b.rule == "constant") b.c = r.num("c", b.c);
    if (b.rule == "immunity" || b.rule == "lockdown") b.K = r.num("K", b.K);
    if (b.rule == "lockdown") {
        b.kappa = r.num("kappa", b.kappa);
        b.theta = r.num("theta", b.theta);
    }
    b.lipschitz = r.opt_num("lipschitz");
    r.finish();
    return b;
}

bool is_one_of(const std::string& s, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (s == n) return true;
    return false;
}

// rebrand library errors with the config field they came from
template <class F>
auto with_field(const std::string& f, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(f + ": " + e.what());
    }
}

bool needs_solution(const std::string& kind) {
    return is_one_of(kind, {"solve", "nonlinear", "couple", "chains", "convergence"});
}

json rate_json(const RateBlock& b) {
    json j{{"family", b.family}};
    if (b.family == "constant") j["rate"] = b.rate;
    else if (b.family == "window") j.update({{"rate", b.rate}, {"from", b.from}, {"to", b.to}});
    else if (b.family == "exp_decay") j.update({{"rate", b.rate}, {"decay", b.decay}});
    else if (b.family == "renewal")
        j.update({{"shape", b.shape}, {"scale", b.scale}, {"max_births", b.max_births}});
    else if (b.family == "tabulated") j.update({{"ages", b.ages}, {"values", b.values}});
    else if (b.family == "atoms") j["ages"] = b.ages;
    return j;
}

json initial_json(const InitialBlock& b) {
    json j{{"family", b.family}};
    if (b.family == "exponential") j["rate"] = b.rate;
    else if (b.family == "uniform") j["width"] = b.width;
    else if (b.family == "tabulated") j.update({{"ages", b.ages}, {"values", b.values}});
    return j;
}

json rule_json(const RuleBlock& b) {
    json j{{"rule", b.rule}};
    if (b.rule == "constant") j["c"] = b.c;
    else if (b.rule == "immunity") j["K"] = b.K;
    else if (b.rule == "lockdown") j.update({{"K", b.K}, {"kappa", b.kappa}, {"theta", b.theta}});
    if (b.lipschitz) j["lipschitz"] = *b.lipschitz;
    return j;
}

// Everything the runners need, built once from a validated config.
struct Model {
    BirthProcessSpec spec;
    InitialAgeDensity g;
    InteractionRule C;
};

Model build_model(const ExperimentConfig& c) {
    auto spec = make_birth_process(c.tau);
    auto g = make_initial_density(c.g);
    if (c.numeric.A_max) {
        const auto base = g;
        g = InitialAgeDensity::custom([base](double a) { return base(a); },
                                      [base](Rng& r) { return base.sample(r); }, *c.numeric.A_max);
    }
    return {std::move(spec), std::move(g), make_rule(c.C)};
}

NoiseKey replicate_key(std::uint64_t seed, int N, std::uint64_t r) {
    return NoiseKey::replicate(mix_key(seed, static_cast<std::uint64_t>(N)), r);
}

std::vector<double> report_grid(double T, double step) {
    const auto n = static_cast<std::size_t>(std::floor(T / step + 1e-9));
    std::vector<double> ts;
    for (std::size_t k = 0; k <= n; ++k) ts.push_back(std::min(T, step * static_cast<double>(k)));
    if (T - ts.back() > 1e-9 * T) ts.push_back(T);
    return ts;
}

std::string num_tag(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class F>
void write_file(const fs::path& p, F&& fill) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ResourceError("cannot write " + p.string());
    fill(os);
    if (!os) throw ResourceError("write failed: " + p.string());
}

void write_json(const fs::path& p, const json& j) {
    write_file(p, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

double mass_at(const AgePath& path, double t) {
    const auto& b = *path.kept_births;
    return static_cast<double>(std::upper_bound(b.begin(), b.end(), t) - b.begin()) / path.n_ancestors;
}

json mean_se_json(std::span<const double> xs) {
    const auto m = mean_se(xs);
    return {{"mean", m.mean}, {"se", m.se}, {"n", m.n}};
}

// ---- runners -------------------------------------------------------------

void run_solve(const ExperimentConfig& c, const Model& m, const fs::path& dir) {
    const auto sol = solve_nonlinear(m.spec, m.g, m.C, c.numeric.T, c.numeric.dt);
    write_file(dir / "pde.csv", [&](std::ostream& os) { sol.write_csv(os); });
    write_file(dir / "pde.bin", [&](std::ostream& os) { sol.write_binary(os); });
    json s{{"steps", sol.steps()},
           {"dt", sol.dt()},
           {"horizon", sol.horizon()},
           {"residual", sol.residual()},
           {"gronwall_margin", gronwall_margin(sol)},
           {"mass_T", mass(sol, sol.horizon())},
           {"boundary_T", sol.boundary().back()}};
    write_json(dir / "summary.json", s);
}

void run_simulate(const ExperimentConfig& c, const Model& m, const fs::path& dir, unsigned threads) {
    const auto grid = report_grid(c.numeric.T, c.numeric.report_step);
    json summary = json::object();
    for (int N : c.run.N) {
        std::optional<InteractingResult> first;
        std::vector<double> events(c.run.replicates);
        auto masses = parallel_map<std::vector<double>>(c.run.replicates, threads, [&](std::size_t r) {
            SimOptions o;
            o.record_forest = r == 0 && c.run.export_forest;
            auto res = simulate_interacting(N, m.spec, m.g, m.C, c.numeric.T, replicate_key(c.run.seed, N, r), o);
            std::vector<double> row;
            for (double t : grid) row.push_back(mass_at(res.path, t));
            events[r] = static_cast<double>(res.events);
            if (r == 0) first = std::move(res);
            return row;
        });
        const std::string tag = "N" + std::to_string(N);
        write_file(dir / ("mass_" + tag + ".csv"), [&](std::ostream& os) {
            os << "t,mean_mass,se\n";
            for (std::size_t k = 0; k < grid.size(); ++k) {
                std::vector<double> xs;
                for (const auto& row : masses) xs.push_back(row[k]);
                const auto ms = mean_se(xs);
                os << num_tag(grid[k]) << ',' << g17(ms.mean) << ',' << g17(ms.se) << '\n';
            }
        });
        const double qs[] = {0.1, 0.5, 0.9};
        write_file(dir / ("path_" + tag + "_r0.csv"),
                   [&](std::ostream& os) { write_path_csv(os, first->path, c.numeric.report_step, qs); });
        if (c.run.export_forest)
            write_file(dir / ("forest_" + tag + "_r0.csv"), [&](std::ostream& os) { write_forest(os, first->forest); });
        std::vector<double> mass_T;
        for (const auto& row : masses) mass_T.push_back(row.back());
        summary[std::to_string(N)] = {{"replicates", c.run.replicates},
                                      {"mass_T", mean_se_json(mass_T)},
                                      {"events", mean_se_json(events)}};
    }
    write_json(dir / "summary.json", summary);
}

void run_nonlinear(const ExperimentConfig& c, const Model& m, const fs::path& dir, unsigned threads) {
    const auto sol = solve_nonlinear(m.spec, m.g, m.C, c.numeric.T, c.numeric.dt);
    const std::vector<double> times = c.run.times.empty() ? std::vector<double>{c.numeric.T} : c.run.times;
    const double h = c.numeric.h.value_or(0.05);
    const auto est = estimate_mean_age_density(m.spec, m.g, m.C, sol, c.run.M, h, times, c.run.seed, threads);
    json per_t = json::array();
    for (const auto& e : est) {
        write_file(dir / ("density_t" + num_tag(e.time) + ".csv"), [&](std::ostream& os) {
            os << "age_lo,age_hi,density,se,u_mid\n";
            const auto& v = e.density.values();
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double lo = h * static_cast<double>(k);
                os << num_tag(lo) << ',' << num_tag(lo + h) << ',' << g17(v[k]) << ','
                   << g17(e.standard_error[k]) << ',' << g17(eval_u(sol, e.time, lo + 0.5 * h)) << '\n';
            }
        });
        const auto cmp = compare_with_solution(e, sol);
        per_t.push_back({{"t", e.time},
                         {"l1", cmp.l1},
                         {"se_sum", cmp.se_sum},
                         {"bin_term", cmp.bin_term},
                         {"bound", cmp.bound()},
                         {"within", cmp.within()},
                         {"mean_size", e.mean_size},
                         {"size_se", e.size_se},
                         {"pde_mass", mass(sol, e.time)}});
    }
    if (c.run.export_forest) {
        const auto tree = simulate_nonlinear_tree(m.spec, m.g, m.C, sol, c.numeric.T, NoiseKey::replicate(c.run.seed, 0));
        write_file(dir / "tree_r0.csv", [&](std::ostream& os) { write_forest(os, tree); });
    }
    write_json(dir / "summary.json", {{"trees", c.run.M}, {"h", h}, {"times", per_t}});
}

void run_couple(const ExperimentConfig& c, const Model& m, const fs::path& dir, unsigned threads) {
    const auto sol = solve_nonlinear(m.spec, m.g, m.C, c.numeric.T, c.numeric.dt);
    const int N = c.run.N.front();
    const double T = c.numeric.T;
    struct Row {
        DominationReport rep;
        double tau_stop;
        std::uint64_t immigrants, discrepancy;
        std::size_t interacting, nonlinear;
        LabelCounts born;
    };
    std::optional<CoupledResult> first;
    const auto rows = parallel_map<Row>(c.run.replicates, threads, [&](std::size_t r) {
        auto res = simulate_coupled(N, m.spec, m.g, m.C, sol, c.run.eta, T, replicate_key(c.run.seed, N, r),
                                    c.numeric.eps_grid);
        Row row{check_domination(res),
                res.tau_stop,
                res.audit.empty() ? 0 : res.audit.back().immigrant_count,
                res.audit.empty() ? 0 : res.audit.back().discrepancy,
                res.interacting.kept_count(T),
                res.nonlinear.kept_count(T),
                res.born};
        if (r == 0) first = std::move(res);
        return row;
    });
    std::size_t with_pre = 0, certified_pre = 0;
    write_file(dir / "runs.csv", [&](std::ostream& os) {
        os << "replicate,precondition,prohorov_T,certified,first_violation,tau_stop,immigrants_T,discrepancy_T,"
              "forest_discrepancy,counters_match,interacting_size_T,nonlinear_size_T,born_11,born_10,born_01,"
              "born_dagger,born_star\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& x = rows[r];
            if (x.rep.precondition) {
                ++with_pre;
                if (x.rep.certified) ++certified_pre;
            }
            os << r << ',' << x.rep.precondition << ',' << g17(x.rep.prohorov_T) << ',' << x.rep.certified << ','
               << (x.rep.first_violation ? std::to_string(*x.rep.first_violation) : std::string("-1")) << ','
               << g17(x.tau_stop) << ',' << x.immigrants << ',' << x.discrepancy << ',' << x.rep.forest_discrepancy
               << ',' << x.rep.counters_match_forests << ',' << x.interacting << ',' << x.nonlinear << ','
               << x.born.both << ',' << x.born.only_interacting << ',' << x.born.only_nonlinear << ','
               << x.born.dagger << ',' << x.born.star << '\n';
        }
    });
    write_file(dir / "audit_r0.csv", [&](std::ostream& os) { write_audit_csv(os, *first); });
    if (c.run.export_forest) {
        write_file(dir / "interacting_r0.csv", [&](std::ostream& os) { write_forest(os, first->interacting); });
        write_file(dir / "nonlinear_r0.csv", [&](std::ostream& os) { write_forest(os, first->nonlinear); });
    }
    write_json(dir / "summary.json", {{"N", N},
                                      {"eta", c.run.eta},
                                      {"lipschitz", m.C.lipschitz()},
                                      {"runs", rows.size()},
                                      {"precondition_runs", with_pre},
                                      {"certified_precondition_runs", certified_pre},
                                      {"domination_holds", certified_pre == with_pre}});
}

void run_immigration(const ExperimentConfig& c, const Model& m, const fs::path& dir, unsigned threads) {
    ImmigrationParams p;
    p.N = c.run.N.front();
    p.eta = c.run.eta;
    p.lipschitz = m.C.lipschitz();
    p.horizon = c.numeric.T;
    std::optional<ImmigrationResult> first;
    const auto runs = parallel_map<std::array<double, 5>>(c.run.replicates, threads, [&](std::size_t r) {
        auto res = simulate_immigration(p, m.spec, m.g, replicate_key(c.run.seed, p.N, r));
        const double T = p.horizon;
        std::array<double, 5> row{static_cast<double>(res.immigrants.at(T)), static_cast<double>(res.left.at(T)),
                                  static_cast<double>(res.dominating.at(T)), static_cast<double>(res.planted),
                                  static_cast<double>(res.dominating_planted)};
        if (r == 0) first = std::move(res);
        return row;
    });
    write_file(dir / "runs.csv", [&](std::ostream& os) {
        os << "replicate,immigrants_T,left_T,dominating_T,planted,dominating_planted\n";
        for (std::size_t r = 0; r < runs.size(); ++r)
            os << r << ',' << runs[r][0] << ',' << runs[r][1] << ',' << runs[r][2] << ',' << runs[r][3] << ','
               << runs[r][4] << '\n';
    });
    write_file(dir / "path_r0.csv", [&](std::ostream& os) { write_immigration_csv(os, *first); });

    const double EZ = expected_tree_size(m.spec, p.horizon);
    const std::uint64_t n = c.run.chain_steps.value_or(static_cast<std::uint64_t>(p.N));
    const auto chain_key = NoiseKey(mix_key(c.run.seed, 0x636861696eULL));
    const auto sn = parallel_map<double>(c.run.replicates, threads, [&](std::size_t r) {
        return simulate_dominating_chain(p.eta, p.lipschitz, p.N, n, m.spec, p.horizon,
                                         NoiseKey::replicate(chain_key.value(), r))
            .back();
    });
    write_file(dir / "chain.csv", [&](std::ostream& os) {
        os << "replicate,S_n\n";
        for (std::size_t r = 0; r < sn.size(); ++r) os << r << ',' << g17(sn[r]) << '\n';
    });
    const auto ms = mean_se(sn);
    const double bound = chain_bound(p.eta, p.lipschitz, p.N, EZ, n);
    json s{{"N", p.N},
           {"eta", p.eta},
           {"lipschitz", p.lipschitz},
           {"horizon", p.horizon},
           {"expected_tree_size", EZ},
           {"chain", {{"n", n}, {"mean", ms.mean}, {"se", ms.se}, {"bound", bound},
                      {"within", ms.mean <= bound + 3.0 * ms.se}}}};
    std::vector<double> I;
    for (const auto& r : runs) I.push_back(r[0]);
    s["immigrants_T"] = mean_se_json(I);
    if (c.run.replicates >= 100) {
        const auto tail = estimate_tail(p, m.spec, m.g, c.run.eps, p.horizon, c.run.replicates, c.run.seed, threads);
        s["tail"] = {{"eps", c.run.eps}, {"p", tail.p.estimate}, {"lo", tail.p.lo}, {"hi", tail.p.hi},
                     {"hits", tail.hits}, {"replicates", tail.replicates}};
    } else {
        s["tail"] = nullptr;
    }
    write_json(dir / "summary.json", s);
}

void run_chains(const ExperimentConfig& c, const Model& m, const fs::path& dir) {
    const auto sol = solve_nonlinear(m.spec, m.g, m.C, c.numeric.T, c.numeric.dt);
    const int N = c.run.N.front();
    const double T = c.numeric.T;
    const auto res = simulate_interacting(N, m.spec, m.g, m.C, T, replicate_key(c.run.seed, N, 0));
    const auto chains = empirical_chain_measure(res.forest, T);
    write_file(dir / "chains.csv", [&](std::ostream& os) { write_chains_csv(os, chains); });

    // limit chains restarted from the empirical T_1 of the first M chains with T_1 > 0
    std::vector<WeightedChain> sampled;
    Rng rng(mix_key(c.run.seed, 0x6b65726e656cULL));
    for (const auto& ch : chains) {
        if (sampled.size() >= c.run.M) break;
        if (!(ch.times.front() > 0.0)) continue;
        sampled.push_back({1.0 / static_cast<double>(N), sample_chain(sol, ch.times.front(), rng).times});
    }
    write_file(dir / "sampled_chains.csv", [&](std::ostream& os) { write_chains_csv(os, sampled); });

    auto mean_len = [](const std::vector<WeightedChain>& v, bool positive_only) {
        std::vector<double> k;
        for (const auto& ch : v)
            if (!positive_only || ch.times.front() > 0.0) k.push_back(static_cast<double>(ch.times.size()));
        return mean_se_json(k);
    };

    json fits = json::array();
    const std::vector<double> centres = c.run.times.empty() ? std::vector<double>{0.5 * T} : c.run.times;
    for (double t : centres) {
        const double lo = std::max(t - c.run.window, 1e-12), hi = std::min(t + c.run.window, T);
        const auto fit = delay_goodness_of_fit(res.forest, sol, m.C, lo, hi);
        write_file(dir / ("delays_t" + num_tag(t) + ".csv"), [&](std::ostream& os) {
            os << "edge_lo,edge_hi,observed,expected\n";
            for (std::size_t k = 0; k < fit.observed.size(); ++k)
                os << g17(fit.edges[k]) << ',' << g17(fit.edges[k + 1]) << ',' << fit.observed[k] << ','
                   << g17(fit.expected[k]) << '\n';
        });
        fits.push_back({{"t", t}, {"lo", lo}, {"hi", hi}, {"nodes", fit.nodes}, {"chi2", fit.test.statistic},
                        {"dof", fit.test.dof}, {"p_value", fit.test.p_value}});
    }

    json norm = json::array();
    for (double t : report_grid(T, c.numeric.report_step)) {
        if (!(t > 0.0)) continue;
        norm.push_back({{"t", t}, {"kernel_mass", kernel_mass(sol, m.C, t)}});
    }
    write_json(dir / "summary.json", {{"N", N},
                                      {"chains", chains.size()},
                                      {"empirical_length", mean_len(chains, true)},
                                      {"sampled_length", mean_len(sampled, false)},
                                      {"delay_fits", fits},
                                      {"kernel_normalization", norm}});
}

void run_convergence(const ExperimentConfig& c, const Model& m, const fs::path& dir, unsigned threads) {
    const auto sol = solve_nonlinear(m.spec, m.g, m.C, c.numeric.T, c.numeric.dt);
    std::vector<ConvergenceSample> samples;
    for (int N : c.run.N) {
        ConvergenceSample s{N, parallel_map<double>(c.run.replicates, threads, [&](std::size_t r) {
                                SimOptions o;
                                o.record_forest = false;
                                const auto res = simulate_interacting(N, m.spec, m.g, m.C, c.numeric.T,
                                                                      replicate_key(c.run.seed, N, r), o);
                                return sup_prohorov(res.path, sol, c.numeric.report_step, c.numeric.eps_grid);
                            })};
        samples.push_back(std::move(s));
    }
    write_file(dir / "results.csv", [&](std::ostream& os) {
        os << "N,replicate,sup_distance\n";
        for (const auto& s : samples)
            for (std::size_t r = 0; r < s.sup_distances.size(); ++r)
                os << s.N << ',' << r << ',' << g17(s.sup_distances[r]) << '\n';
    });
    const auto table = convergence_report(samples);
    write_file(dir / "rate_table.csv", [&](std::ostream& os) {
        os << "N,replicates,median,q25,q75\n";
        for (const auto& row : table.rows)
            os << row.N << ',' << row.replicates << ',' << g17(row.median) << ',' << g17(row.q25) << ','
               << g17(row.q75) << '\n';
    });
    bool decreasing = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        decreasing = decreasing && table.rows[i].median < table.rows[i - 1].median;
    write_json(dir / "summary.json", {{"slope", table.slope}, {"medians_strictly_decreasing", decreasing}});
}

}  // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
    Reader top(j, "");
    ExperimentConfig c;
    c.kind = top.str("kind", c.kind);
    if (const json* model = top.sub("model")) {
        Reader r(*model, "model");
        if (const json* t = r.sub("tau")) c.tau = parse_rate(*t, base_dir);
        if (const json* g = r.sub("g")) c.g = parse_initial(*g, base_dir);
        if (const json* C = r.sub("C")) c.C = parse_rule(*C);
        r.finish();
    }
    if (const json* num = top.sub("numeric")) {
        Reader r(*num, "numeric");
        auto& n = c.numeric;
        n.T = r.num("T", n.T);
        n.dt = r.num("dt", n.dt);
        n.A_max = r.opt_num("A_max");
        n.eps_grid = r.num("eps_grid", n.eps_grid);
        n.h = r.opt_num("h");
        n.report_step = r.num("report_step", n.report_step);
        r.finish();
    }
    if (const json* run = top.sub("run")) {
        Reader r(*run, "run");
        auto& u = c.run;
        if (r.has("N")) {
            const auto& a = run->at("N");
            const auto list = a.is_array() ? a : json::array({a});
            u.N.clear();
            for (std::size_t i = 0; i < list.size(); ++i) {
                const auto& v = list[i];
                if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > 100'000'000)
                    throw ConfigError("run.N[" + std::to_string(i) + "]: expected an integer in [1, 1e8]");
                u.N.push_back(static_cast<int>(v.get<std::int64_t>()));
            }
        }
        u.replicates = r.count("replicates", u.replicates);
        u.seed = r.count("seed", u.seed);
        u.eta = r.num("eta", u.eta);
        u.M = r.count("M", u.M);
        if (r.has("times")) u.times = r.nums("times");
        u.window = r.num("window", u.window);
        u.eps = r.num("eps", u.eps);
        u.chain_steps = r.opt_count("chain_steps");
        u.export_forest = r.flag("export_forest", u.export_forest);
        r.finish();
    }
    top.finish();
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json dump_config(const ExperimentConfig& c) {
    json numeric{{"T", c.numeric.T},
                 {"dt", c.numeric.dt},
                 {"eps_grid", c.numeric.eps_grid},
                 {"report_step", c.numeric.report_step}};
    if (c.numeric.A_max) numeric["A_max"] = *c.numeric.A_max;
    if (c.numeric.h) numeric["h"] = *c.numeric.h;
    json run{{"N", c.run.N},          {"replicates", c.run.replicates}, {"seed", c.run.seed},
             {"eta", c.run.eta},      {"M", c.run.M},                   {"times", c.run.times},
             {"window", c.run.window}, {"eps", c.run.eps},              {"export_forest", c.run.export_forest}};
    if (c.run.chain_steps) run["chain_steps"] = *c.run.chain_steps;
    return {{"kind", c.kind},
            {"model", {{"tau", rate_json(c.tau)}, {"g", initial_json(c.g)}, {"C", rule_json(c.C)}}},
            {"numeric", numeric},
            {"run", run}};
}

BirthProcessSpec make_birth_process(const RateBlock& b) {
    return with_field("model.tau", [&] {
        if (b.family == "constant") return BirthProcessSpec::constant_rate(b.rate);
        if (b.family == "window") return BirthProcessSpec::window_rate(b.rate, b.from, b.to);
        if (b.family == "exp_decay") return BirthProcessSpec::exp_decay_rate(b.rate, b.decay);
        if (b.family == "tabulated") return BirthProcessSpec::tabulated_rate(b.ages, b.values);
        if (b.family == "renewal") return BirthProcessSpec::renewal(b.shape, b.scale, b.max_births);
        if (b.family == "atoms") return BirthProcessSpec::finite_atoms(b.ages);
        throw ConfigError("family: unknown '" + b.family + "'");
    });
}

InitialAgeDensity make_initial_density(const InitialBlock& b) {
    return with_field("model.g", [&] {
        if (b.family == "exponential") return InitialAgeDensity::exponential(b.rate);
        if (b.family == "uniform") return InitialAgeDensity::uniform(b.width);
        if (b.family == "tabulated") return InitialAgeDensity::tabulated(b.ages, b.values);
        throw ConfigError("family: unknown '" + b.family + "'");
    });
}

InteractionRule make_rule(const RuleBlock& b) {
    auto rule = with_field("model.C", [&] {
        if (b.rule == "constant") return InteractionRule::constant(b.c);
        if (b.rule == "immunity") return InteractionRule::immunity(b.K);
        if (b.rule == "lockdown") return InteractionRule::lockdown(b.K, b.kappa, b.theta);
        throw ConfigError("rule: unknown '" + b.rule + "'");
    });
    if (b.lipschitz) return with_field("model.C.lipschitz", [&] { return rule.with_lipschitz(*b.lipschitz); });
    return rule;
}

void validate_config(const ExperimentConfig& c) {
    if (std::find(std::begin(kKinds), std::end(kKinds), c.kind) == std::end(kKinds))
        throw ConfigError("kind: unknown experiment kind '" + c.kind + "'");

    const auto model = build_model(c);
    const auto& n = c.numeric;
    const auto& r = c.run;
    if (!(n.T > 0.0)) throw ConfigError("numeric.T: must be positive");
    if (!(n.dt > 0.0)) throw ConfigError("numeric.dt: must be positive");
    if (n.A_max && !(*n.A_max > 0.0)) throw ConfigError("numeric.A_max: must be positive");
    if (!(n.eps_grid > 0.0)) throw ConfigError("numeric.eps_grid: must be positive");
    if (n.h && !(*n.h > 0.0)) throw ConfigError("numeric.h: must be positive");
    if (!(n.report_step > 0.0)) throw ConfigError("numeric.report_step: must be positive");

    if (needs_solution(c.kind)) {
        if (!model.spec.has_density())
            throw ConfigError("model.tau.family: '" + c.kind + "' needs a birth intensity, not atoms");
        const double steps = n.T / n.dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
            throw ConfigError("numeric.dt: T must be a whole number of steps");
        const double limit = 1e-2 * std::min(1.0, 1.0 / model.spec.sup_bound());
        if (n.dt > limit * (1.0 + 1e-12))
            throw ConfigError("numeric.dt: must be ≤ 1e-2·min(1, 1/sup τ) = " + g17(limit));
    }

    if (r.N.empty()) throw ConfigError("run.N: empty list");
    if (r.replicates < 1) throw ConfigError("run.replicates: must be ≥ 1");
    if (!(r.eta >= 0.0 && r.eta <= 1.0)) throw ConfigError("run.eta: must lie in [0,1]");
    if (r.M < 1) throw ConfigError("run.M: must be ≥ 1");
    for (std::size_t i = 0; i < r.times.size(); ++i)
        if (!(r.times[i] >= 0.0 && r.times[i] <= n.T))
            throw ConfigError("run.times[" + std::to_string(i) + "]: must lie in [0, T]");
    if (!(r.window > 0.0)) throw ConfigError("run.window: must be positive");
    if (!(r.eps > 0.0)) throw ConfigError("run.eps: must be positive");
    if (r.chain_steps && *r.chain_steps < 1) throw ConfigError("run.chain_steps: must be ≥ 1");

    if (c.kind == "couple") {
        if (!std::isfinite(model.C.lipschitz()))
            throw ConfigError("model.C.rule: the coupling needs a finite Lipschitz constant");
        if (!(r.eta > 0.0)) throw ConfigError("run.eta: the coupling needs η > 0");
    }
    if (c.kind == "immigration" && !std::isfinite(model.C.lipschitz()))
        throw ConfigError("model.C.lipschitz: immigration needs a finite constant");
    if (c.kind == "chains")
        for (std::size_t i = 0; i < r.times.size(); ++i)
            if (!(r.times[i] > 0.0)) throw ConfigError("run.times[" + std::to_string(i) + "]: must be positive");
    if (c.kind == "convergence") {
        std::set<int> distinct(r.N.begin(), r.N.end());
        if (distinct.size() < 3) throw ConfigError("run.N: convergence needs at least 3 distinct values");
        if (r.replicates < 30) throw ConfigError("run.replicates: convergence needs at least 30");
    }
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw ResourceError("sha256: digest failed");
    std::string out;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

void run_experiment(const ExperimentConfig& c, const fs::path& out, unsigned threads) {
    validate_config(c);
    if (fs::exists(out) && !fs::is_empty(out) && !fs::exists(out / "manifest.json"))
        throw ConfigError("--out: " + out.string() + " exists and does not hold a previous run");
    fs::path stage = out;
    stage += ".partial";
    fs::remove_all(stage);
    fs::create_directories(stage);
    try {
        const auto model = build_model(c);
        const unsigned th = resolve_threads(threads);
        if (c.kind == "solve") run_solve(c, model, stage);
        else if (c.kind == "simulate") run_simulate(c, model, stage, th);
        else if (c.kind == "nonlinear") run_nonlinear(c, model, stage, th);
        else if (c.kind == "couple") run_couple(c, model, stage, th);
        else if (c.kind == "immigration") run_immigration(c, model, stage, th);
        else if (c.kind == "chains") run_chains(c, model, stage);
        else run_convergence(c, model, stage, th);

        const json cfg = dump_config(c);
        json manifest{{"version", std::string(kVersion)},
                      {"boost", BOOST_LIB_VERSION},
                      {"compiler", __VERSION__},
                      {"kind", c.kind},
                      {"seed", c.run.seed},
                      {"config_sha256", sha256_hex(cfg.dump())},
                      {"config", cfg}};
        write_json(stage / "manifest.json", manifest);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(stage, ec);
        throw;
    }
    fs::remove_all(out);
    fs::rename(stage, out);
}

double sup_prohorov(const AgePath& path, const PdeSolution& sol, double step, double eps_grid) {
    if (path.horizon > sol.horizon() * (1.0 + 1e-12)) throw ConfigError("sup_prohorov: path outlives the solution");
    double worst = 0.0;
    for (double t : report_grid(path.horizon, step))
        worst = std::max(worst, prohorov_upper(age_measure_at(path, t), sol.slice(t), eps_grid));
    return worst;
}

RateTable convergence_report(std::span<const ConvergenceSample> samples) {
    std::map<int, const ConvergenceSample*> byN;
    for (const auto& s : samples) {
        if (s.sup_distances.size() < 30)
            throw ConfigError("convergence_report: N=" + std::to_string(s.N) + " has " +
                              std::to_string(s.sup_distances.size()) + " replicates, need ≥ 30");
        if (!byN.emplace(s.N, &s).second)
            throw ConfigError("convergence_report: N=" + std::to_string(s.N) + " given twice");
    }
    if (byN.size() < 3) throw ConfigError("convergence_report: need at least 3 values of N");
    RateTable t;
    std::vector<double> lx, ly;
    for (const auto& [N, s] : byN) {
        const auto& d = s->sup_distances;
        RateRow row{N, median(d), quantile(d, 0.25), quantile(d, 0.75), d.size()};
        t.rows.push_back(row);
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(row.median));
    }
    t.slope = ols_slope(lx, ly);
    return t;
}

}  // namespace cmj
