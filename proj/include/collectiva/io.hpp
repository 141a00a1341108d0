#pragma once

// Readers for label sequences, rational lists, marginal families and signed
// spaces, and an atomic file writer.

#include "collectiva/core.hpp"
#include "collectiva/marginals.hpp"
#include "collectiva/sequence.hpp"
#include "collectiva/signed_prob.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace collectiva::io {

enum class Format { raw, ascii, csv };

inline Format parse_format(const std::string& s) {
    if (s == "raw") return Format::raw;
    if (s == "ascii") return Format::ascii;
    if (s == "csv") return Format::csv;
    throw input_error("unknown format '" + s + "' (available: raw, ascii, csv)");
}

inline const char* to_string(Format f) {
    switch (f) {
        case Format::raw: return "raw";
        case Format::ascii: return "ascii";
        default: return "csv";
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw input_error("error while reading '" + path + "'");
    return ss.str();
}

/// Writes to a temporary sibling and renames it over `path`.
inline void write_file_atomic(const std::string& path, const std::string& data) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw input_error("cannot write '" + tmp.string() + "'");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw input_error("cannot write '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw input_error("cannot move report into '" + path + "'");
    }
}

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

/// Labels over {"0","1"} use the binary alphabet; anything else is sorted.
inline TrialSequence from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw input_error("empty sequence");
    std::set<std::string> distinct(tokens.begin(), tokens.end());
    static const std::set<std::string> bits{"0", "1"};
    std::vector<std::string> labels;
    if (std::includes(bits.begin(), bits.end(), distinct.begin(), distinct.end()))
        labels = {"0", "1"};
    else
        labels.assign(distinct.begin(), distinct.end());
    if (labels.size() < 2) labels.push_back(labels.front() + "'");  // a constant sequence still has a complement label
    LabelAlphabet alphabet(labels);
    std::vector<Label> data;
    data.reserve(tokens.size());
    for (const auto& t : tokens) data.push_back(alphabet.index_of(t));
    return TrialSequence(std::move(alphabet), std::move(data));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace detail

/// raw: one trial per bit, most significant bit first.
/// ascii: one trial per non-whitespace character.
/// csv: labels separated by commas or line breaks.
inline TrialSequence parse_sequence(const std::string& bytes, Format format) {
    switch (format) {
        case Format::raw: {
            if (bytes.empty()) throw input_error("empty sequence");
            std::vector<Label> data;
            data.reserve(bytes.size() * 8);
            for (unsigned char b : bytes)
                for (int k = 7; k >= 0; --k) data.push_back((b >> k) & 1U);
            return TrialSequence(LabelAlphabet::binary(), std::move(data));
        }
        case Format::ascii: {
            std::vector<std::string> tokens;
            for (char c : bytes) {
                if (detail::is_space(c)) continue;
                if (static_cast<unsigned char>(c) < 0x21 || static_cast<unsigned char>(c) > 0x7e)
                    throw input_error("non-printable byte in ascii sequence");
                tokens.emplace_back(1, c);
            }
            return detail::from_tokens(tokens);
        }
        default: {
            std::vector<std::string> tokens;
            for (const auto& line : detail::lines(bytes))
                for (auto& t : detail::split(line, ',')) {
                    if (t.empty()) throw input_error("empty field in csv sequence");
                    tokens.push_back(std::move(t));
                }
            return detail::from_tokens(tokens);
        }
    }
}

inline TrialSequence read_sequence(const std::string& path, Format format) {
    return parse_sequence(read_file(path), format);
}

/// Rationals ("n/d" or decimal), separated by commas or line breaks.
inline std::vector<Rational> parse_rationals(const std::string& text) {
    std::vector<Rational> out;
    for (const auto& line : detail::lines(text))
        for (const auto& t : detail::split(line, ',')) out.push_back(parse_rational(t));
    if (out.empty()) throw input_error("no rationals in input");
    return out;
}

// ---------------------------------------------------------------------------
// Marginal families

using Json = nlohmann::ordered_json;

inline Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed JSON: ") + e.what());
    }
}

inline Rational json_rational(const Json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) return parse_rational(v.dump());
    throw input_error("expected a number or an \"n/d\" string, got " + v.dump());
}

inline long json_long(const Json& v) {
    if (!v.is_number_integer()) throw input_error("expected an integer value, got " + v.dump());
    return v.get<long>();
}

struct FamilyEntry {
    std::vector<std::string> observables;
    std::map<std::vector<long>, Rational> mass;
};

namespace detail {

/// Ranges default to every value seen for an observable anywhere in the family.
inline marginals::MarginalFamily<Rational> build_family(const std::vector<FamilyEntry>& entries,
                                                        std::map<std::string, std::vector<long>> ranges) {
    std::map<std::string, std::set<long>> seen;
    for (const auto& e : entries)
        for (const auto& [tuple, m] : e.mass)
            for (std::size_t i = 0; i < tuple.size(); ++i) seen[e.observables[i]].insert(tuple[i]);
    for (auto& [name, values] : seen)
        if (!ranges.count(name)) ranges[name] = std::vector<long>(values.begin(), values.end());
    marginals::MarginalFamily<Rational> fam;
    for (const auto& e : entries) {
        std::vector<std::vector<long>> r;
        for (const auto& o : e.observables) {
            if (!ranges.count(o)) throw input_error("observable '" + o + "' has no values");
            r.push_back(ranges.at(o));
        }
        marginals::JointPMF<Rational> pmf(e.observables, r);
        for (const auto& [tuple, m] : e.mass) {
            if (tuple.size() != e.observables.size()) throw input_error("value tuple arity differs from its observable set");
            for (std::size_t i = 0; i < tuple.size(); ++i)
                if (!std::binary_search(pmf.ranges()[i].begin(), pmf.ranges()[i].end(), tuple[i]))
                    throw input_error("value " + std::to_string(tuple[i]) + " outside the range of '" + e.observables[i] + "'");
            pmf.at(tuple) += m;
        }
        pmf.validate();
        fam.push_back(std::move(pmf));
    }
    return fam;
}

inline std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

}  // namespace detail

/// Rows "observable_set, value_tuple, mass" with space-separated names and
/// values, e.g. "a1 a2, 1 -1, 1/4". Rows with the same observable set form
/// one member; an optional header row starting with "observable" is skipped.
inline marginals::MarginalFamily<Rational> parse_family_csv(const std::string& text) {
    std::vector<FamilyEntry> entries;
    std::map<std::vector<std::string>, std::size_t> index;
    std::size_t row = 0;
    for (const auto& line : detail::lines(text)) {
        ++row;
        if (row == 1 && line.rfind("observable", 0) == 0) continue;
        auto f = detail::split(line, ',');
        if (f.size() != 3) throw input_error("row " + std::to_string(row) + ": expected 3 fields");
        auto obs = detail::words(f[0]);
        std::vector<long> tuple;
        for (const auto& v : detail::words(f[1])) {
            try {
                std::size_t used = 0;
                tuple.push_back(std::stol(v, &used));
                if (used != v.size()) throw std::invalid_argument(v);
            } catch (const std::exception&) {
                throw input_error("row " + std::to_string(row) + ": bad value '" + v + "'");
            }
        }
        if (obs.empty() || obs.size() != tuple.size())
            throw input_error("row " + std::to_string(row) + ": value tuple arity differs from its observable set");
        auto [it, fresh] = index.emplace(obs, entries.size());
        if (fresh) entries.push_back({obs, {}});
        auto& mass = entries[it->second].mass;
        if (mass.count(tuple)) throw input_error("row " + std::to_string(row) + ": repeated value tuple");
        mass[tuple] = parse_rational(f[2]);
    }
    if (entries.empty()) throw input_error("empty marginal table");
    return detail::build_family(entries, {});
}

inline FamilyEntry parse_pmf_json(const Json& j) {
    if (!j.is_object() || !j.contains("observables") || !j.contains("mass"))
        throw input_error("pmf needs \"observables\" and \"mass\"");
    FamilyEntry e;
    for (const auto& o : j.at("observables")) {
        if (!o.is_string()) throw input_error("observable names must be strings");
        e.observables.push_back(o.get<std::string>());
    }
    for (const auto& row : j.at("mass")) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_array())
            throw input_error("mass rows are [[values...], mass]");
        std::vector<long> t;
        for (const auto& v : row[0]) t.push_back(json_long(v));
        if (e.mass.count(t)) throw input_error("repeated value tuple in pmf");
        e.mass[t] = json_rational(row[1]);
    }
    return e;
}

inline std::map<std::string, std::vector<long>> parse_ranges_json(const Json& j) {
    std::map<std::string, std::vector<long>> r;
    if (!j.contains("ranges")) return r;
    for (const auto& [name, values] : j.at("ranges").items()) {
        std::vector<long> v;
        for (const auto& x : values) v.push_back(json_long(x));
        r[name] = std::move(v);
    }
    return r;
}

/// One of three JSON shapes:
///   {"correlations": {"E12": .., "E23": .., "E13": .., "means": [..]}}
///   {"marginals": [pmf, ...], "ranges": {...}}
///   {"joint": pmf, "export": [[names...], ...]}   (default export: all pairs)
struct MarginalInput {
    std::optional<marginals::CorrelationTriple<Rational>> triple;
    marginals::MarginalFamily<Rational> family;
    std::optional<marginals::JointPMF<Rational>> source_joint;
};

inline MarginalInput parse_marginal_json(const std::string& text) {
    const Json j = parse_json(text);
    if (!j.is_object()) throw input_error("marginal input must be a JSON object");
    MarginalInput in;
    if (j.contains("correlations")) {
        const auto& c = j.at("correlations");
        marginals::CorrelationTriple<Rational> t;
        for (const char* k : {"E12", "E23", "E13"})
            if (!c.contains(k)) throw input_error(std::string("correlations need ") + k);
        t.e12 = json_rational(c.at("E12"));
        t.e23 = json_rational(c.at("E23"));
        t.e13 = json_rational(c.at("E13"));
        if (c.contains("means")) {
            const auto& m = c.at("means");
            if (!m.is_array() || m.size() != 3) throw input_error("means must list three values");
            t.means = std::array<Rational, 3>{json_rational(m[0]), json_rational(m[1]), json_rational(m[2])};
        }
        t.validate();
        in.triple = t;
        in.family = t.to_family();
        return in;
    }
    const auto ranges = parse_ranges_json(j);
    if (j.contains("marginals")) {
        std::vector<FamilyEntry> entries;
        for (const auto& m : j.at("marginals")) entries.push_back(parse_pmf_json(m));
        if (entries.empty()) throw input_error("empty marginal family");
        in.family = detail::build_family(entries, ranges);
        return in;
    }
    if (j.contains("joint")) {
        auto fam = detail::build_family({parse_pmf_json(j.at("joint"))}, ranges);
        in.source_joint = fam.front();
        const auto& obs = in.source_joint->observables();
        std::vector<std::vector<std::string>> subsets;
        if (j.contains("export")) {
            for (const auto& s : j.at("export")) subsets.push_back(s.get<std::vector<std::string>>());
        } else {
            for (std::size_t a = 0; a < obs.size(); ++a)
                for (std::size_t b = a + 1; b < obs.size(); ++b) subsets.push_back({obs[a], obs[b]});
        }
        if (subsets.empty()) throw input_error("joint has fewer than two observables to export");
        for (const auto& s : subsets) in.family.push_back(marginals::marginalize(*in.source_joint, s));
        return in;
    }
    throw input_error("marginal input needs \"correlations\", \"marginals\" or \"joint\"");
}

// ---------------------------------------------------------------------------
// Signed spaces

struct SignedInput {
    std::string name;
    signed_prob::SignedProbabilitySpace<Rational> space;
    std::vector<Rational> variable;
};

/// {"weights": {"atom": "n/d", ...}, "variable": {"atom": value, ...}}.
/// Atom order is file order; the variable defaults to 0, 1, 2, ... .
inline SignedInput parse_signed_json(const std::string& text, std::string name = "file") {
    const Json j = parse_json(text);
    if (!j.is_object() || !j.contains("weights") || !j.at("weights").is_object() || j.at("weights").empty())
        throw input_error("signed space needs a nonempty \"weights\" object");
    std::vector<std::string> atoms;
    std::vector<Rational> w;
    for (const auto& [atom, v] : j.at("weights").items()) {
        atoms.push_back(atom);
        w.push_back(json_rational(v));
    }
    if (atoms.size() > finite::max_atoms) throw capacity_error("signed space limited to 64 atoms");
    std::vector<Rational> a;
    for (std::size_t i = 0; i < atoms.size(); ++i) a.emplace_back(static_cast<long>(i));
    if (j.contains("variable")) {
        const auto& var = j.at("variable");
        if (!var.is_object()) throw input_error("\"variable\" must map atoms to values");
        for (const auto& [atom, v] : var.items()) {
            auto it = std::find(atoms.begin(), atoms.end(), atom);
            if (it == atoms.end()) throw input_error("variable names unknown atom '" + atom + "'");
            a[static_cast<std::size_t>(it - atoms.begin())] = json_rational(v);
        }
    }
    return {std::move(name), signed_prob::SignedProbabilitySpace<Rational>(finite::SampleSpace(atoms), std::move(w)),
            std::move(a)};
}

}  // namespace collectiva::io
