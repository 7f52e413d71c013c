#include "khinchin/cli.hpp"

#include "khinchin/haagerup.hpp"
#include "khinchin/lemma_lab.hpp"
#include "khinchin/parallel.hpp"
#include "khinchin/report.hpp"
#include "khinchin/schur.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace khinchin::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240527;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_decimal(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
    return v;
}

Rational parse_rational_flag(const std::string& flag, const std::string& text) {
    try {
        return parse_rational(trim(text));
    } catch (const std::invalid_argument&) {
        throw UsageError("--" + flag + ": expected a rational such as 1/2, got '" + text + "'");
    }
}

struct Options {
    std::string rho0 = "0";
    int L = 1;
    double p = 3.0;
    std::string weights;
    int n = 6;
    int trials = 500;
    std::uint64_t seed = kDefaultSeed;
    double tol = quad::kHaagerupTol;
    std::string format = "json";
    std::string out;
    std::uint64_t budget = 0;
    // Subcommand-specific.
    std::string claim;
    std::string a;
    double s = 2.0;
    std::string function = "haagerup";
    double s_min = 1.0;
    double s_max = 20.0;
    int points = 20;
};

Limits limits_of(const Options& o) {
    Limits limits;
    if (o.budget > 0) limits.max_atoms = limits.max_evaluations = o.budget;
    return limits;
}

SymmetricAtomLaw law_of(const Options& o) {
    const Rational rho0 = parse_rational_flag("rho0", o.rho0);
    if (rho0 < 0 || rho0 > 1) throw UsageError("--rho0 must lie in [0, 1]");
    if (o.L < 1) throw UsageError("--L must be >= 1");
    return make_step_law({rho0, o.L});
}

WeightVector weights_of(const Options& o, const char* fallback = nullptr) {
    if (o.weights.empty() && fallback) return parse_weights(fallback);
    if (o.weights.empty()) throw UsageError("--weights is required");
    return parse_weights(o.weights);
}

// Output of a subcommand: verdicts, or a preformatted table.
struct Output {
    std::vector<VerdictReport> reports;
    std::optional<std::string> table_csv;
    std::optional<std::string> table_json;
};

// Every given flag must be in `allowed`.
void restrict_flags(const CLI::App& sub, const std::string& what, const std::set<std::string>& allowed) {
    static const char* common[] = {"--format", "--out", "--budget"};
    for (const auto* opt : sub.get_options()) {
        if (opt->count() == 0) continue;
        const std::string name = opt->get_name();
        if (name.rfind("--", 0) != 0) continue;
        if (allowed.count(name) || std::find(std::begin(common), std::end(common), name) != std::end(common) ||
            name == "--claim") {
            continue;
        }
        throw UsageError(name + " is not used by " + what);
    }
}

Output run_constants(const Options& o) {
    if (o.n < 1 || o.n > 12) throw UsageError("--n must be in 1..12");
    if (!(o.p >= 1.0)) throw UsageError("--p must be >= 1");
    const auto law = law_of(o);
    Output out;
    if (!o.weights.empty()) {
        std::vector<SymmetricAtomLaw> laws(weights_of(o).size(), law);
        out.reports.push_back(schur::comparison_verify(weights_of(o), laws, o.p, limits_of(o)));
        return out;
    }
    const auto ratios = schur::equal_weight_ratios(law, o.p, o.n, limits_of(o));
    const double g = gaussian_norm(o.p);
    bool increasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] >= ratios[i - 1] - 1e-12;
    VerdictReport r;
    r.claim = "equal-weight-ratios";
    r.params["p"] = o.p;
    r.params["L"] = o.L;
    r.params["rho0"] = to_fraction_string(parse_rational_flag("rho0", o.rho0));
    r.params["n"] = o.n;
    r.margin = g - *std::max_element(ratios.begin(), ratios.end());
    r.pass = increasing && r.margin >= -schur::kMarginTolerance;
    r.witness = OrderedJson{{"gaussian_norm", g}, {"sigma", sigma_of(law)}, {"ratios", ratios}, {"increasing", increasing}};
    out.reports.push_back(std::move(r));
    return out;
}

Output run_table1() {
    Output out;
    out.reports.push_back(lemma::verify_slope_table());
    out.reports.push_back(lemma::verify_tangent_values());
    out.table_csv = lemma::slope_table_csv(lemma::slope_table());
    return out;
}

std::vector<double> lower_bound_grid() { return {1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0}; }

Output run_verify(const Options& o, const CLI::App& sub) {
    using Handler = std::function<void(Output&)>;
    struct Claim {
        std::set<std::string> flags;
        Handler handler;
    };
    const std::map<std::string, Claim> claims = {
        {"two-point",
         {{"--a"},
          [&](Output& out) {
              if (o.a.empty()) throw UsageError("--a is required for two-point");
              const Rational a = parse_rational_flag("a", o.a);
              if (!(a > 0 && a < 1)) throw UsageError("--a must lie in (0, 1)");
              out.reports.push_back(lemma::verify_two_point(a));
          }}},
        {"two-point-grid",
         {{"--n"},
          [&](Output& out) {
              const int den = sub.count("--n") ? o.n : 100;
              if (den < 2 || den > 10000) throw UsageError("--n must be in 2..10000");
              for (int k = 1; k < den; ++k) {
                  Rational a(k, den);
                  a.canonicalize();
                  out.reports.push_back(lemma::verify_two_point(a));
              }
          }}},
        {"gaussian-comparison",
         {{"--L"}, [&](Output& out) { out.reports.push_back(lemma::verify_claim(o.L)); }}},
        {"slope-table", {{}, [&](Output& out) { out.reports.push_back(lemma::verify_slope_table()); }}},
        {"tangent-values", {{}, [&](Output& out) { out.reports.push_back(lemma::verify_tangent_values()); }}},
        {"h-checkpoints", {{}, [&](Output& out) { out.reports.push_back(lemma::verify_h_checkpoints()); }}},
        {"cone-membership", {{}, [&](Output& out) { out.reports.push_back(lemma::verify_cone_suite()); }}},
        {"schur",
         {{"--rho0", "--L", "--p", "--n", "--trials", "--seed"},
          [&](Output& out) {
              const auto law = law_of(o);
              const auto v = schur::majorization_sample_test(o.n, law, o.p, o.trials, o.seed, limits_of(o));
              OrderedJson params = {{"n", o.n}, {"p", o.p}, {"trials", o.trials}, {"seed", o.seed}};
              out.reports.push_back(schur::schur_report(v, law, std::move(params)));
          }}},
        {"ostrowski",
         {{"--weights", "--rho0", "--L", "--p"},
          [&](Output& out) {
              const auto law = law_of(o);
              const auto v = schur::ostrowski_check(weights_of(o), law, o.p, std::nullopt, limits_of(o));
              OrderedJson params = {{"p", o.p}, {"weights", o.weights}};
              auto r = schur::schur_report(v, law, std::move(params));
              r.claim = "ostrowski";
              out.reports.push_back(std::move(r));
          }}},
        {"comparison",
         {{"--weights", "--rho0", "--L", "--p"},
          [&](Output& out) {
              const auto w = weights_of(o);
              std::vector<SymmetricAtomLaw> laws(w.size(), law_of(o));
              out.reports.push_back(schur::comparison_verify(w, laws, o.p, limits_of(o)));
          }}},
        {"l1l2",
         {{"--weights", "--rho0", "--L"},
          [&](Output& out) { out.reports.push_back(haagerup::l1l2_verdict(law_of(o), weights_of(o), limits_of(o))); }}},
        {"am-gm",
         {{"--weights", "--rho0", "--L", "--tol"},
          [&](Output& out) {
              out.reports.push_back(haagerup::am_gm_chain(law_of(o), weights_of(o), o.tol, limits_of(o)));
          }}},
        {"representation",
         {{"--weights", "--rho0", "--L", "--tol"},
          [&](Output& out) {
              out.reports.push_back(
                  haagerup::representation_check(law_of(o), weights_of(o), 1e-6, o.tol, limits_of(o)));
          }}},
        {"F-lower-bound",
         {{"--rho0", "--L", "--tol"},
          [&](Output& out) {
              const auto grid = lower_bound_grid();
              out.reports.push_back(haagerup::verify_F_lower_bound(law_of(o), grid, o.tol, limits_of(o)));
          }}},
        {"concavity",
         {{"--L", "--s", "--tol"},
          [&](Output& out) {
              std::vector<Rational> grid;
              for (int k = 0; k <= 8; ++k) {
                  grid.emplace_back(8 + k, 16);
                  grid.back().canonicalize();
              }
              out.reports.push_back(haagerup::concavity_in_rho0(o.L, o.s, grid, o.tol, limits_of(o)));
          }}},
        {"p0", {{}, [&](Output& out) { out.reports.push_back(haagerup::verify_p0()); }}},
    };
    const auto it = claims.find(o.claim);
    if (it == claims.end()) {
        std::string names;
        for (const auto& [name, claim] : claims) names += (names.empty() ? "" : ", ") + name;
        throw UsageError("unknown claim '" + o.claim + "'; expected one of: " + names);
    }
    restrict_flags(sub, "claim " + o.claim, it->second.flags);
    Output out;
    it->second.handler(out);
    return out;
}

Output run_haagerup(const Options& o) {
    Options local = o;
    if (local.rho0 == "0") local.rho0 = "1/2";
    const auto law = law_of(local);
    const auto w = weights_of(local, "1,1");
    const auto limits = limits_of(o);
    Output out;
    const auto grid = lower_bound_grid();
    out.reports.push_back(haagerup::verify_F_lower_bound(law, grid, o.tol, limits));
    out.reports.push_back(haagerup::l1l2_verdict(law, w, limits));
    out.reports.push_back(haagerup::am_gm_chain(law, w, o.tol, limits));
    out.reports.push_back(haagerup::representation_check(law, w, 1e-6, o.tol, limits));

    const auto haa2 = haagerup::F_haagerup(2.0, o.tol, limits);
    VerdictReport two;
    two.claim = "F-haagerup-at-2";
    two.params["s"] = 2;
    two.margin = 1e-6 - std::abs(haa2.value - 1.0 / std::numbers::sqrt2);
    two.pass = two.margin >= 0.0;
    two.witness = OrderedJson{{"value", haa2.value}, {"err", haa2.abs_error}};
    out.reports.push_back(std::move(two));

    std::vector<double> s_grid;
    for (int k = 0; k < 20; ++k) s_grid.push_back(1.0 + k);
    const auto rows = haagerup::sweep_F(std::nullopt, s_grid, o.tol, limits);
    VerdictReport mono;
    mono.claim = "F-haagerup-monotone";
    mono.params["s_min"] = 1;
    mono.params["s_max"] = 20;
    mono.params["points"] = 20;
    mono.margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        mono.margin = std::min(mono.margin, rows[i].value - rows[i - 1].value + rows[i].error + rows[i - 1].error);
    }
    mono.pass = mono.margin >= 0.0;
    OrderedJson values = OrderedJson::array();
    for (const auto& r : rows) values.push_back(r.value);
    mono.witness = OrderedJson{{"values", values}};
    out.reports.push_back(std::move(mono));
    out.reports.push_back(haagerup::verify_p0());
    return out;
}

Output run_necessity(const Options& o) {
    Output out;
    const bool all = o.claim.empty();
    if (!all && o.claim != "rho-half" && o.claim != "rho-p3" && o.claim != "sqrt2-minus-1") {
        throw UsageError("unknown necessity claim '" + o.claim + "'; expected rho-half, rho-p3 or sqrt2-minus-1");
    }
    if (all || o.claim == "rho-half") out.reports.push_back(schur::necessity_rho_half().report);
    if (all || o.claim == "rho-p3") out.reports.push_back(schur::necessity_rho_p3().report);
    if (all || o.claim == "sqrt2-minus-1") {
        if (o.L < 1) throw UsageError("--L must be >= 1");
        out.reports.push_back(haagerup::necessity_sqrt2_minus_1(o.L));
    }
    return out;
}

Output run_sweep(const Options& o) {
    if (o.function != "haagerup" && o.function != "F") throw UsageError("--function must be haagerup or F");
    if (!(o.s_min >= 1.0) || !(o.s_max >= o.s_min)) throw UsageError("need 1 <= --s-min <= --s-max");
    if (o.points < 1 || o.points > 10000) throw UsageError("--points must be in 1..10000");
    std::vector<double> grid;
    for (int k = 0; k < o.points; ++k) {
        grid.push_back(o.points == 1 ? o.s_min : o.s_min + (o.s_max - o.s_min) * k / (o.points - 1));
    }
    std::optional<SymmetricAtomLaw> law;
    if (o.function == "F") law = law_of(o);
    const auto rows = haagerup::sweep_F(law, grid, o.tol, limits_of(o));
    Output out;
    out.table_csv = haagerup::sweep_csv(rows);
    OrderedJson json = OrderedJson::array();
    for (const auto& r : rows) {
        json.push_back({{"s", round12(r.s)}, {"F_value", round12(r.value)}, {"err", round12(r.error)}});
    }
    out.table_json = json.dump(2) + "\n";
    return out;
}

void add_law_flags(CLI::App* sub, Options& o) {
    sub->add_option("--rho0", o.rho0, "mass at zero, rational");
    sub->add_option("--L", o.L, "support size of the step law");
}

}  // namespace

WeightVector parse_weights(std::string_view text) {
    if (trim(text).empty()) throw UsageError("weights: empty list");
    std::vector<Scalar> entries;
    std::size_t start = 0;
    int index = 1;
    while (true) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const std::string entry = trim(piece);
        const std::string where = "weights: entry " + std::to_string(index) + " at offset " + std::to_string(start);
        if (entry.empty()) throw UsageError(where + " is empty");
        if (entry.find_first_of(".eE") != std::string::npos) {
            const auto v = parse_decimal(entry);
            if (!v) throw UsageError(where + " is malformed: '" + entry + "'");
            entries.push_back(Scalar::real(*v));
        } else {
            try {
                entries.emplace_back(parse_rational(entry));
            } catch (const std::invalid_argument&) {
                throw UsageError(where + " is malformed: '" + entry + "'");
            }
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
        ++index;
    }
    return WeightVector(std::move(entries));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Exact and certified checks of Khinchin-type moment inequalities"};
    app.require_subcommand(1);

    auto add_output_flags = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--out", o.out, "write the report here instead of standard output");
        sub->add_option("--budget", o.budget, "cap on enumeration atoms and integrand evaluations");
    };

    auto* constants = app.add_subcommand("constants", "equal-weight ratios N_p/N_2 or one comparison");
    add_law_flags(constants, o);
    constants->add_option("--p", o.p);
    constants->add_option("--n", o.n);
    constants->add_option("--weights", o.weights);
    add_output_flags(constants);

    auto* table1 = app.add_subcommand("table1", "slopes theta_{L,b} against their tabulated lower bounds");
    add_output_flags(table1);

    auto* verify = app.add_subcommand("verify", "run one named claim");
    verify->add_option("--claim", o.claim)->required();
    verify->add_option("--a", o.a);
    add_law_flags(verify, o);
    verify->add_option("--p", o.p);
    verify->add_option("--weights", o.weights);
    verify->add_option("--n", o.n);
    verify->add_option("--trials", o.trials);
    verify->add_option("--seed", o.seed);
    verify->add_option("--tol", o.tol);
    verify->add_option("--s", o.s);
    add_output_flags(verify);

    auto* haa = app.add_subcommand("haagerup", "L1-L2 comparison suite for one law");
    add_law_flags(haa, o);
    haa->add_option("--weights", o.weights);
    haa->add_option("--tol", o.tol);
    add_output_flags(haa);

    auto* necessity = app.add_subcommand("necessity", "thresholds on rho0 beyond which the inequalities fail");
    necessity->add_option("--claim", o.claim);
    necessity->add_option("--L", o.L);
    add_output_flags(necessity);

    auto* sweep = app.add_subcommand("sweep", "F_Haa(s) or F(s) on a uniform grid of s");
    sweep->add_option("--function", o.function);
    add_law_flags(sweep, o);
    sweep->add_option("--s-min", o.s_min);
    sweep->add_option("--s-max", o.s_max);
    sweep->add_option("--points", o.points);
    sweep->add_option("--tol", o.tol);
    add_output_flags(sweep);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    try {
        if (const char* env = std::getenv("KHINCHIN_LAB_THREADS")) {
            const auto v = parse_decimal(env);
            if (!v || *v < 1 || *v != std::floor(*v) || *v > 1024) {
                throw UsageError("KHINCHIN_LAB_THREADS must be an integer in 1..1024");
            }
            set_worker_threads(static_cast<unsigned>(*v));
        }
        if (!(o.tol > 0.0)) throw UsageError("--tol must be positive");

        Output result;
        if (constants->parsed()) {
            result = run_constants(o);
        } else if (table1->parsed()) {
            result = run_table1();
        } else if (verify->parsed()) {
            result = run_verify(o, *verify);
        } else if (haa->parsed()) {
            result = run_haagerup(o);
        } else if (necessity->parsed()) {
            result = run_necessity(o);
        } else {
            result = run_sweep(o);
        }

        std::string text;
        if (o.format == "csv") {
            text = result.table_csv ? *result.table_csv : render_csv(result.reports);
        } else {
            text = result.table_json ? *result.table_json : render_json(result.reports);
        }
        if (o.out.empty()) {
            out << text;
        } else {
            std::ofstream file(o.out, std::ios::binary | std::ios::trunc);
            if (!file) throw UsageError("cannot write to " + o.out);
            file << text;
            file.close();
            if (!file) throw UsageError("cannot write to " + o.out);
        }

        std::vector<std::string> failing;
        for (const auto& r : result.reports) {
            if (!r.pass) failing.push_back(r.claim);
        }
        if (failing.empty()) return 0;
        err << "failing claims:";
        for (const auto& name : failing) err << ' ' << name;
        err << '\n';
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::length_error& e) {
        err << "budget exhausted: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace khinchin::cli
