// collectiva: batch analysis of label sequences and model files.
// Exit codes: 0 analysis completed, 2 input or configuration error,
// 3 capacity exceeded, 1 anything else.

#include "collectiva/battery.hpp"
#include "collectiva/collectives.hpp"
#include "collectiva/complexity.hpp"
#include "collectiva/io.hpp"
#include "collectiva/marginals.hpp"
#include "collectiva/padic.hpp"
#include "collectiva/signed_prob.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <new>

namespace {

using namespace collectiva;
using Json = io::Json;

constexpr const char* schema_version = "1.0.0";

struct Options {
    std::vector<std::string> inputs;
    std::string format;
    std::uint64_t seed = 0;
    std::uint64_t window = 0;
    double eps = 0.01;
    std::uint64_t prime = 2;
    std::string rules = "identity,primes,after:10";
    std::string out;
    std::string csv;
    // command specific
    std::string codec = "deflate";
    std::size_t block = 128;
    double significance = 0.01;
    std::string tests;
    std::string subset;
    std::string label;
    long precision = 0;
    std::string function = "x^2";
    std::string schedule = "1,2,4,8,16,32,64,128,256";
    std::string space;
    std::size_t samples = 0;
    std::size_t length = 10000;
    std::size_t min_length = 1000;
    std::string emit;
};

struct Report {
    std::string command;
    Json config = Json::object();
    Json payload = Json::object();
    std::vector<std::string> warnings;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string render(const Report& r) {
    Json j;
    j["schema_version"] = schema_version;
    j["command"] = r.command;
    j["config"] = r.config;
    j["generated_at"] = utc_now();
    j["payload"] = r.payload;
    j["warnings"] = r.warnings;
    return j.dump(2) + "\n";
}

Json rat(const Rational& q) { return to_string(q); }
double dbl(const Rational& q) { return q.convert_to<double>(); }

Json rats(const std::vector<Rational>& v) {
    Json a = Json::array();
    for (const auto& q : v) a.push_back(rat(q));
    return a;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 18)
        throw input_error("bad " + what + " '" + s + "'");
    return std::stoull(s);
}

/// Table-size cap shared by signed convolution and marginal feasibility.
std::size_t table_cap() {
    const char* v = std::getenv("COLLECTIVA_MAX_MEM");
    if (!v) return marginals::default_support_cap;
    const auto cap = parse_size(v, "COLLECTIVA_MAX_MEM");
    if (cap == 0) throw input_error("COLLECTIVA_MAX_MEM must be positive");
    return cap;
}

io::Format resolve_format(const Options& o, const std::string& path) {
    if (!o.format.empty()) return io::parse_format(o.format);
    const auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".bin" || ext == ".raw") return io::Format::raw;
    if (ext == ".csv") return io::Format::csv;
    return io::Format::ascii;
}

const std::string& single_input(const Options& o) {
    if (o.inputs.size() != 1) throw input_error("expected exactly one input file");
    return o.inputs.front();
}

void base_config(Report& r, const Options& o) {
    r.config["inputs"] = o.inputs;
    r.config["seed"] = o.seed;
}

TrialSequence load_sequence(Report& r, const Options& o) {
    const auto& path = single_input(o);
    const auto fmt = resolve_format(o, path);
    r.config["format"] = io::to_string(fmt);
    return io::read_sequence(path, fmt);
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string s;
    auto line = [&](const std::vector<std::string>& f) {
        for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + f[i];
        s += "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    io::write_file_atomic(path, s);
}

std::string fmt_double(double v) { return Json(v).dump(); }

std::vector<collectives::PlaceSelectionRule> parse_family(const std::string& spec, const LabelAlphabet& alphabet, std::uint64_t seed) {
    std::vector<collectives::PlaceSelectionRule> family;
    for (const auto& s : split_list(spec)) family.push_back(collectives::make_rule(s, alphabet, seed));
    if (family.empty()) throw input_error("empty selection family");
    return family;
}

Json sequence_summary(const TrialSequence& x) {
    return {{"length", x.size()}, {"alphabet", x.alphabet().labels()}};
}

// ---------------------------------------------------------------------------

void cmd_stabilize(const Options& o, Report& r) {
    base_config(r, o);
    auto x = load_sequence(r, o);
    const std::uint64_t w = o.window ? o.window : collectives::default_window(x.size());
    r.config["window"] = w;
    r.config["eps"] = o.eps;
    auto trace = collectives::frequencies(x, collectives::stabilization_checkpoints(x.size(), w));
    auto v = collectives::detect_stabilization(trace, w, o.eps);
    if (w >= x.size()) r.warnings.push_back("window covers the whole sequence");

    Json cps = Json::array();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < trace.checkpoints().size(); ++k) {
        Json counts = Json::array(), freqs = Json::array();
        std::vector<std::string> row{std::to_string(trace.checkpoints()[k])};
        for (Label a = 0; a < trace.labels(); ++a) {
            counts.push_back(trace.count(k, a));
            freqs.push_back(rat(trace.frequency(k, a)));
            row.push_back(fmt_double(dbl(trace.frequency(k, a))));
        }
        cps.push_back({{"N", trace.checkpoints()[k]}, {"counts", counts}, {"frequencies", freqs}});
        rows.push_back(std::move(row));
    }
    Json labels = Json::array();
    for (Label a = 0; a < v.labels.size(); ++a) {
        const auto& l = v.labels[a];
        labels.push_back({{"label", x.alphabet().name(a)},
                          {"stabilized", l.stabilized},
                          {"estimate", rat(l.estimate)},
                          {"estimate_value", dbl(l.estimate)},
                          {"oscillation", rat(l.oscillation)},
                          {"oscillation_value", dbl(l.oscillation)}});
    }
    r.payload["sequence"] = sequence_summary(x);
    r.payload["checkpoints"] = cps;
    r.payload["verdict"] = {{"stabilized", v.stabilized},
                            {"window", v.window},
                            {"epsilon", v.epsilon},
                            {"window_checkpoints", v.window_checkpoints},
                            {"labels", labels}};
    if (!o.csv.empty()) {
        std::vector<std::string> header{"N"};
        for (const auto& l : x.alphabet().labels()) header.push_back("nu_" + l);
        write_csv(o.csv, header, rows);
    }
}

Json rule_reports(const collectives::RandomnessReport& rep, const LabelAlphabet& alphabet) {
    (void)alphabet;
    Json rules = Json::array();
    for (const auto& rr : rep.rules) {
        Json j{{"name", rr.name},
               {"length", rr.length},
               {"frequencies", rats(rr.frequencies)},
               {"max_deviation", rat(rr.max_deviation)},
               {"max_deviation_value", dbl(rr.max_deviation)},
               {"status", collectives::to_string(rr.status)}};
        j["seed"] = rr.seed ? Json(*rr.seed) : Json(nullptr);
        rules.push_back(std::move(j));
    }
    return rules;
}

void selection_config(Report& r, const Options& o) {
    base_config(r, o);
    r.config["rules"] = o.rules;
    r.config["eps"] = o.eps;
    r.config["min_length"] = o.min_length;
}

void cmd_select(const Options& o, Report& r) {
    selection_config(r, o);
    auto x = load_sequence(r, o);
    auto family = parse_family(o.rules, x.alphabet(), o.seed);
    auto rep = collectives::randomness_check(x, family, o.eps, o.min_length);
    r.payload["sequence"] = sequence_summary(x);
    r.payload["base_frequencies"] = rats(rep.base_frequencies);
    Json rules = rule_reports(rep, x.alphabet());
    for (std::size_t i = 0; i < family.size(); ++i) {
        auto pos = collectives::selected_positions(family[i], x);
        pos.resize(std::min<std::size_t>(pos.size(), 16));
        rules[i]["first_positions"] = pos;
    }
    r.payload["rules"] = rules;
}

void cmd_randomness(const Options& o, Report& r) {
    selection_config(r, o);
    auto x = load_sequence(r, o);
    auto family = parse_family(o.rules, x.alphabet(), o.seed);
    auto rep = collectives::randomness_check(x, family, o.eps, o.min_length);
    r.payload["sequence"] = sequence_summary(x);
    r.payload["base_frequencies"] = rats(rep.base_frequencies);
    r.payload["rules"] = rule_reports(rep, x.alphabet());
    r.payload["epsilon"] = rep.epsilon;
    r.payload["min_length"] = rep.min_length;
    r.payload["passes"] = rep.passes;
    for (const auto& rr : rep.rules)
        if (rr.status == collectives::RuleStatus::inconclusive)
            r.warnings.push_back("rule " + rr.name + " selected fewer than " + std::to_string(o.min_length) + " trials");
}

void cmd_mix(const Options& o, Report& r) {
    base_config(r, o);
    r.config["subset"] = o.subset;
    auto x = load_sequence(r, o);
    const std::uint64_t w = o.window ? o.window : collectives::default_window(x.size());
    r.config["window"] = w;
    r.config["eps"] = o.eps;
    std::vector<Label> subset;
    for (const auto& name : split_list(o.subset)) subset.push_back(x.alphabet().index_of(name));
    if (subset.empty()) throw input_error("--subset names no labels");
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());

    auto xe = collectives::mix(x, subset);
    const auto cps = collectives::stabilization_checkpoints(x.size(), w);
    auto tx = collectives::frequencies(x, cps);
    auto te = collectives::frequencies(xe, cps);
    bool additive = true;
    for (std::size_t k = 0; k < cps.size(); ++k)
        if (te.frequency(k, 1) != tx.frequency_of(k, subset)) additive = false;
    auto fp = collectives::frequency_probability(x, subset, w, o.eps);

    Json names = Json::array();
    for (auto a : subset) names.push_back(x.alphabet().name(a));
    std::uint64_t ones = 0;
    for (auto b : xe.data()) ones += b;
    r.payload["sequence"] = sequence_summary(x);
    r.payload["subset"] = names;
    r.payload["mixed"] = {{"length", xe.size()}, {"ones", ones}};
    r.payload["additivity"] = {{"holds", additive}, {"checkpoints", cps.size()}};
    r.payload["frequency_probability"] = {{"exists", fp.exists},
                                          {"estimate", rat(fp.estimate)},
                                          {"final_frequency", rat(fp.final_frequency)},
                                          {"final_frequency_value", dbl(fp.final_frequency)},
                                          {"oscillation", rat(fp.oscillation)}};
}

void cmd_complexity(const Options& o, Report& r) {
    base_config(r, o);
    r.config["codec"] = o.codec;
    auto codec = complexity::make_codec(o.codec);
    auto x = load_sequence(r, o);
    const auto bits = x.bits();
    auto k = complexity::estimate_K(bits, *codec);
    auto kc = complexity::estimate_K_conditional(bits, bits.size(), *codec);
    auto lengths = complexity::dyadic_lengths(bits.size());
    auto dips = complexity::martin_lof_dip_scan(bits, lengths, *codec);
    if (lengths.empty() || lengths.back() != bits.size()) lengths.push_back(bits.size());
    auto curve = complexity::complexity_rate_curve(bits, lengths, *codec);
    if (bits.size() < 1024) r.warnings.push_back("below about 1 kbit the codec container overhead dominates the rate");

    Json cj = Json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : curve) {
        cj.push_back({{"n", p.n}, {"bits", p.bits}, {"rate", p.rate}});
        rows.push_back({std::to_string(p.n), std::to_string(p.bits), fmt_double(p.rate)});
    }
    r.payload["sequence"] = sequence_summary(x);
    r.payload["codec"] = codec->name();
    r.payload["estimate"] = {{"n", k.n}, {"bits", k.bits}, {"header_bits", k.header_bits}, {"rate", k.rate()}};
    r.payload["conditional"] = {{"n", kc.n}, {"bits", kc.bits}, {"rate", kc.rate()}};
    r.payload["rate_curve"] = cj;
    r.payload["dip_lengths_scanned"] = complexity::dyadic_lengths(bits.size());
    r.payload["dips"] = dips;
    if (!o.csv.empty()) write_csv(o.csv, {"n", "bits", "rate"}, rows);
}

void cmd_battery(const Options& o, Report& r) {
    base_config(r, o);
    r.config["block"] = o.block;
    r.config["significance"] = o.significance;
    r.config["tests"] = o.tests.empty() ? "all" : o.tests;
    auto x = load_sequence(r, o);
    auto all = complexity::default_battery(o.block);
    std::vector<complexity::RandomnessTest> chosen;
    if (o.tests.empty()) {
        chosen = all;
    } else {
        for (const auto& name : split_list(o.tests)) {
            auto it = std::find_if(all.begin(), all.end(), [&](const auto& t) { return t.name == name; });
            if (it == all.end()) {
                std::string msg = "unknown test '" + name + "'; available:";
                for (const auto& t : all) msg += " " + t.name;
                throw input_error(msg);
            }
            chosen.push_back(*it);
        }
    }
    auto rep = complexity::run_battery(x.bits(), chosen, o.significance);
    Json res = Json::array();
    for (const auto& t : rep.results) {
        res.push_back({{"name", t.name},
                       {"skipped", t.skipped},
                       {"statistic", t.skipped ? Json(nullptr) : Json(t.statistic)},
                       {"p_value", t.p_value ? Json(*t.p_value) : Json(nullptr)},
                       {"passed", t.passed},
                       {"null_distribution", t.null_distribution}});
        if (t.skipped) r.warnings.push_back("test " + t.name + " skipped: input shorter than its minimum length");
    }
    r.payload["sequence"] = sequence_summary(x);
    r.payload["results"] = res;
    r.payload["significance"] = rep.significance;
    r.payload["passed"] = rep.passed;
}

Json pmf_json(const marginals::JointPMF<Rational>& p) {
    Json mass = Json::array();
    for (std::size_t i = 0; i < p.support_size(); ++i) mass.push_back({p.tuple_at(i), rat(p.at_index(i))});
    return {{"observables", p.observables()}, {"mass", mass}};
}

marginals::MarginalFamily<Rational> load_family(Report& r, const Options& o, std::optional<io::MarginalInput>* full = nullptr) {
    const auto& path = single_input(o);
    const auto text = io::read_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool json = o.format.empty() ? first != std::string::npos && text[first] == '{' : false;
    if (!o.format.empty() && o.format != "csv") throw input_error("marginal tables are read as csv or JSON (omit --format for JSON)");
    r.config["format"] = json ? "json" : "csv";
    if (!json) return io::parse_family_csv(text);
    auto in = io::parse_marginal_json(text);
    auto fam = in.family;
    if (full) *full = std::move(in);
    return fam;
}

void cmd_marginal(const Options& o, Report& r) {
    base_config(r, o);
    const auto cap = table_cap();
    r.config["max_table_entries"] = cap;
    std::optional<io::MarginalInput> in;
    auto family = load_family(r, o, &in);
    const char* kind = !in ? "family" : in->triple ? "correlations" : in->source_joint ? "joint" : "family";
    r.payload["input_kind"] = kind;
    Json members = Json::array();
    for (const auto& m : family) members.push_back(m.observables());
    r.payload["members"] = members;

    marginals::FeasibilityVerdict<Rational> verdict;
    if (in && in->triple) {
        auto bb = marginals::boole_bell_value(*in->triple);
        r.payload["boole_bell"] = {{"facet", bb.facet},
                                   {"value", rat(bb.value)},
                                   {"bound", rat(bb.bound)},
                                   {"violated", bb.violated},
                                   {"facets_checked", bb.facets_checked}};
        verdict = marginals::joint_exists(*in->triple);
    } else {
        verdict = marginals::joint_exists(family, cap);
    }
    Json f{{"feasible", verdict.feasible}};
    f["witness"] = verdict.witness ? pmf_json(*verdict.witness) : Json(nullptr);
    f["violated"] = verdict.violated ? Json{{"name", verdict.violated->name},
                                            {"value", verdict.violated->value},
                                            {"bound", verdict.violated->bound}}
                                     : Json(nullptr);
    if (verdict.witness) {
        Rational worst = 0;
        for (const auto& m : family)
            worst = std::max(worst, marginals::max_deviation(marginals::marginalize(*verdict.witness, m.observables()), m));
        f["witness_max_deviation"] = rat(worst);
    }
    r.payload["feasibility"] = f;
}

void cmd_consistency(const Options& o, Report& r) {
    base_config(r, o);
    auto family = load_family(r, o);
    auto ns = marginals::check_no_signaling(family);
    auto kc = marginals::kolmogorov_consistency(family);
    Json nsv = Json::array();
    for (const auto& v : ns.violations)
        nsv.push_back({{"first", v.first}, {"second", v.second}, {"observables", v.observables}, {"deviation", rat(v.deviation)}});
    Json kcv = Json::array();
    for (const auto& v : kc.violations)
        kcv.push_back({{"kind", v.kind == marginals::ConsistencyViolation::Kind::permutation ? "permutation" : "projection"},
                       {"larger", v.larger},
                       {"smaller", v.smaller},
                       {"larger_observables", family[v.larger].observables()},
                       {"smaller_observables", family[v.smaller].observables()},
                       {"deviation", v.deviation}});
    Json members = Json::array();
    for (const auto& m : family) members.push_back(m.observables());
    r.payload["members"] = members;
    r.payload["no_signaling"] = {{"consistent", ns.consistent}, {"violations", nsv}};
    r.payload["kolmogorov"] = {{"consistent", kc.consistent}, {"violations", kcv}};
}

Json expansion_json(const padic::PAdicExpansion& e) {
    if (e.zero) return {{"zero", true}, {"valuation", nullptr}, {"digits", Json::array()}};
    return {{"zero", false}, {"valuation", e.valuation}, {"digits", e.digits}};
}

Json convergence_json(const padic::ConvergenceReport& rep) {
    Json pj{{"stabilized", rep.padic.stabilized},
            {"precision_m", rep.padic.precision_m},
            {"min_valuation", rep.padic.min_valuation ? Json(*rep.padic.min_valuation) : Json(nullptr)},
            {"diameter", rep.padic.diameter}};
    pj["estimate"] = rep.padic.estimate ? expansion_json(*rep.padic.estimate) : Json(nullptr);
    pj["reconstructed_limit"] = rep.padic.reconstructed_limit ? rat(*rep.padic.reconstructed_limit) : Json(nullptr);
    return {{"real",
             {{"stabilized", rep.real.stabilized},
              {"oscillation", rat(rep.real.oscillation)},
              {"estimate", rat(rep.real.estimate)},
              {"estimate_value", dbl(rep.real.estimate)}}},
            {"padic", pj},
            {"outcome", padic::to_string(rep.outcome)}};
}

void cmd_padic(const Options& o, Report& r) {
    base_config(r, o);
    const padic::PAdicContext ctx0(o.prime);
    const long m = o.precision > 0 ? o.precision : padic::precision_for(o.eps, ctx0);
    const padic::PAdicContext ctx(o.prime, static_cast<std::size_t>(std::max<long>(m, 1)));
    r.config["prime"] = o.prime;
    r.config["eps"] = o.eps;
    r.config["precision"] = m;
    std::vector<Rational> seq;
    std::optional<TrialSequence> full;
    Label full_label = 0;
    if (!o.label.empty()) {
        r.config["label"] = o.label;
        full = load_sequence(r, o);
        full_label = full->alphabet().index_of(o.label);
        const auto cps = collectives::stabilization_checkpoints(full->size(), collectives::default_window(full->size()));
        seq = padic::frequency_trace(*full, full_label, cps);
        r.payload["source"] = "sequence";
        r.payload["checkpoints"] = cps;
    } else {
        const auto& path = single_input(o);
        if (!o.format.empty() && o.format == "raw") throw input_error("raw input needs --label");
        r.config["format"] = o.format.empty() ? "csv" : o.format;
        seq = io::parse_rationals(io::read_file(path));
        r.payload["source"] = "rationals";
    }
    const std::size_t w = o.window ? o.window : std::max<std::size_t>(2, seq.size() / 10);
    r.config["window"] = w;
    auto rep = padic::compare_convergence(seq, ctx, w, o.eps, m);
    r.payload["length"] = rep.length;
    r.payload["window"] = rep.window;
    r.payload.update(convergence_json(rep));
    if (full) {
        // every N in the final tenth of the sequence, judged on its own and never merged
        const std::size_t tail = std::min<std::size_t>(full->size(), std::max<std::size_t>(2, full->size() / 10) + 1);
        auto fr = padic::compare_convergence(padic::frequency_tail(*full, full_label, tail), ctx, tail - 1, o.eps, m);
        Json fj{{"length", full->size()}, {"window", fr.window}};
        fj.update(convergence_json(fr));
        r.payload["full_sequence"] = fj;
        if (fr.outcome != rep.outcome)
            r.warnings.push_back("checkpoint and full-sequence verdicts disagree; both are reported");
    }
    Json ex{{"last", expansion_json(padic::padic_expand(seq.back(), ctx))}};
    if (rep.padic.reconstructed_limit) ex["limit"] = expansion_json(padic::padic_expand(*rep.padic.reconstructed_limit, ctx));
    r.payload["expansions"] = ex;
}

void cmd_signed(const Options& o, Report& r) {
    base_config(r, o);
    const auto cap = table_cap();
    r.config["max_table_entries"] = cap;
    r.config["function"] = o.function;
    r.config["schedule"] = o.schedule;
    r.config["samples"] = o.samples;
    std::optional<io::SignedInput> in;
    if (!o.space.empty()) {
        if (!o.inputs.empty()) throw input_error("give either --space or an input file, not both");
        const auto& b = signed_prob::bundled_signed_space(o.space);
        in.emplace(io::SignedInput{b.name, b.space, b.variable});
        r.config["space"] = o.space;
    } else {
        in.emplace(io::parse_signed_json(io::read_file(single_input(o))));
    }
    const auto& space = in->space;
    auto f = signed_prob::make_test_function(o.function);
    std::vector<std::size_t> schedule;
    for (const auto& s : split_list(o.schedule)) schedule.push_back(parse_size(s, "schedule entry"));

    auto diag = space.validate();
    auto jd = space.jordan();
    Json sp{{"name", in->name},
            {"atoms", space.sample_space().atoms()},
            {"weights", rats(space.weights())},
            {"variable", rats(in->variable)}};
    r.payload["space"] = sp;
    r.payload["diagnostics"] = {{"total", rat(diag.total)},
                                {"total_variation", rat(diag.total_variation)},
                                {"negative_atoms", diag.negative_atoms}};
    r.payload["jordan"] = {{"positive", rats(jd.positive)}, {"negative", rats(jd.negative)}};

    if (space.size() <= 20) {
        std::uint64_t negative = 0;
        bool holds = true;
        const std::uint64_t full = space.sample_space().full().mask();
        for (std::uint64_t mask = 0; mask <= full; ++mask) {
            const finite::Event a(mask);
            if (space.probability(a) < 0) {
                ++negative;
                if (!(space.probability(space.sample_space().complement(a)) > 1)) holds = false;
            }
        }
        r.payload["complement_law"] = {{"checked", true}, {"negative_events", negative}, {"holds", holds}};
    } else {
        r.payload["complement_law"] = {{"checked", false}, {"negative_events", nullptr}, {"holds", nullptr}};
        r.warnings.push_back("complement law not enumerated above 20 atoms");
    }

    auto table = signed_prob::weak_lln_check(space, in->variable, f, schedule, cap);
    Json rows = Json::array();
    std::vector<std::vector<std::string>> csv;
    for (const auto& row : table.rows) {
        rows.push_back({{"n", row.n},
                        {"expected", row.expected},
                        {"error", row.error},
                        {"expected_exact", row.expected_exact ? rat(*row.expected_exact) : Json(nullptr)},
                        {"error_exact", row.error_exact ? rat(*row.error_exact) : Json(nullptr)},
                        {"total_variation", rat(row.total_variation)},
                        {"total_mass", rat(row.total_mass)}});
        csv.push_back({std::to_string(row.n), fmt_double(row.expected), fmt_double(row.error),
                       fmt_double(dbl(row.total_variation))});
    }
    r.payload["weak_lln"] = {{"function", table.function},
                             {"mean", rat(table.mean)},
                             {"rows", rows},
                             {"decreasing", table.decreasing}};
    for (const auto& w : table.warnings) r.warnings.push_back(w);
    if (o.samples > 0) {
        Json est = Json::array();
        for (auto n : schedule)
            est.push_back({{"n", n},
                           {"estimate", signed_prob::jordan_importance_estimate(space, in->variable, f, n, o.samples, o.seed)}});
        r.payload["importance_estimates"] = est;
    }
    if (!o.csv.empty()) write_csv(o.csv, {"n", "expected", "error", "total_variation"}, csv);
}

void cmd_ville(const Options& o, Report& r) {
    r.config["seed"] = o.seed;
    r.config["rules"] = o.rules;
    r.config["length"] = o.length;
    r.config["eps"] = o.eps;
    auto family = parse_family(o.rules, LabelAlphabet::binary(), o.seed);
    try {
        auto x = collectives::ville_generator(family, o.length, o.eps);
        auto c = collectives::check_ville(x, family);
        Json rules = Json::array();
        for (std::size_t i = 0; i < family.size(); ++i)
            rules.push_back({{"name", c.rule_deviation[i].first},
                             {"length", c.rule_length[i]},
                             {"deviation", c.rule_deviation[i].second},
                             {"within_eps", c.rule_deviation[i].second <= o.eps}});
        std::uint64_t ones = 0;
        for (auto b : x.data()) ones += b;
        r.payload["constructed"] = true;
        r.payload["length"] = x.size();
        r.payload["ones"] = ones;
        r.payload["min_running_mean"] = c.min_running_mean;
        r.payload["floor_holds"] = c.floor_holds;
        r.payload["rules"] = rules;
        r.payload["unit_interval_point"] = collectives::seq_to_unit_interval(x);
        if (!o.emit.empty()) {
            std::string s;
            for (auto b : x.data()) s.push_back(b ? '1' : '0');
            io::write_file_atomic(o.emit, s + "\n");
        }
    } catch (const construction_failure& e) {
        r.payload["constructed"] = false;
        r.payload["length"] = o.length;
        r.payload["failure"] = e.what();
        r.warnings.push_back(e.what());
    }
}

// ---------------------------------------------------------------------------

struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&, Report&);
    CLI::App* app = nullptr;
};

int run(int argc, char** argv) {
    CLI::App app{"collectiva: frequency, randomness, complexity, marginal, signed and p-adic analysis"};
    app.require_subcommand(1);
    Options o;
    std::vector<Command> commands{
        {"stabilize", "frequency traces at logarithmic checkpoints and a stabilization verdict", cmd_stabilize},
        {"select", "subsequence frequencies under place selection rules", cmd_select},
        {"mix", "mix a label subset into a binary sequence and check additivity", cmd_mix},
        {"randomness", "pass/fail of a selection family against eps", cmd_randomness},
        {"complexity", "compression upper bounds on complexity, rate curve and dips", cmd_complexity},
        {"battery", "statistical test battery", cmd_battery},
        {"marginal", "joint-distribution existence for a marginal or correlation table", cmd_marginal},
        {"consistency", "no-signaling and finite Kolmogorov consistency of a marginal family", cmd_consistency},
        {"padic", "real versus p-adic stabilization of a rational sequence", cmd_padic},
        {"signed", "signed probability diagnostics and the weak law of large numbers", cmd_signed},
        {"ville", "construct and check a Ville-type sequence", cmd_ville},
    };
    for (auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        c.app = sub;
        const std::string n = c.name;
        if (n != "ville" && n != "signed") sub->add_option("input", o.inputs, "input file")->required();
        if (n == "signed") sub->add_option("input", o.inputs, "signed space JSON file");
        sub->add_option("--format", o.format, "raw | ascii | csv (default from the file extension)");
        sub->add_option("--seed", o.seed, "64-bit seed");
        sub->add_option("--window", o.window, "stabilization window (trials; elements for padic)");
        sub->add_option("--eps", o.eps, "tolerance");
        sub->add_option("--prime", o.prime, "prime p");
        sub->add_option("--rules", o.rules, "selection family: name[:param],...");
        sub->add_option("--out", o.out, "report path (default: stdout)");
        if (n == "stabilize" || n == "complexity" || n == "signed") sub->add_option("--csv", o.csv, "CSV export path");
        if (n == "complexity") sub->add_option("--codec", o.codec, "deflate | arith0");
        if (n == "battery") {
            sub->add_option("--block", o.block, "block frequency block size");
            sub->add_option("--significance", o.significance, "p-value threshold");
            sub->add_option("--tests", o.tests, "subset of tests, comma separated");
        }
        if (n == "mix") sub->add_option("--subset", o.subset, "labels to merge, comma separated")->required();
        if (n == "select" || n == "randomness") sub->add_option("--min-length", o.min_length, "minimum subsequence length");
        if (n == "padic") {
            sub->add_option("--precision", o.precision, "p-adic precision m (default from --eps)");
            sub->add_option("--label", o.label, "read a label sequence and analyze this label's frequencies");
        }
        if (n == "signed") {
            sub->add_option("--space", o.space, "bundled space name");
            sub->add_option("--function", o.function, "x, x^k, poly:c0,c1,..., gauss, logistic");
            sub->add_option("--schedule", o.schedule, "N values, comma separated");
            sub->add_option("--samples", o.samples, "importance samples per N (0: skip)");
        }
        if (n == "ville") {
            sub->add_option("--length", o.length, "sequence length");
            sub->add_option("--emit", o.emit, "write the sequence as ascii");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (!(o.eps > 0)) throw input_error("--eps must be positive");
    for (auto& c : commands) {
        if (!c.app->parsed()) continue;
        Report r;
        r.command = c.name;
        c.run(o, r);
        const auto text = render(r);
        if (o.out.empty())
            std::cout << text;
        else
            io::write_file_atomic(o.out, text);
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const capacity_error& e) {
        std::cerr << "capacity exceeded: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "capacity exceeded: out of memory\n";
        return 3;
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
