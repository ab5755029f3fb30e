#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <ocmt/csv.hpp>
#include <ocmt/experiment.hpp>

namespace ocmt {

/// Flat `key = value` file; '#' starts a comment; lists are comma separated.
class KeyValueConfig
{
public:
    static KeyValueConfig parse(std::istream& in)
    {
        KeyValueConfig cfg;
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const auto body = detail::trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string_view::npos) throw ParseError("config: expected 'key = value'", row, 0);
            const std::string key(detail::trim(body.substr(0, eq)));
            const std::string value(detail::trim(body.substr(eq + 1)));
            if (key.empty()) throw ParseError("config: empty key", row, 0);
            if (cfg.values_.count(key) != 0) throw ParseError("config: duplicate key '" + key + "'", row, 0);
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static KeyValueConfig read(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config file '" + path + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& get(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) throw DomainError("config: missing key '" + key + "'");
        return it->second;
    }

    std::vector<std::string> list(const std::string& key) const
    {
        std::vector<std::string> out;
        for (auto item : detail::split_commas(get(key))) out.emplace_back(detail::trim(item));
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

namespace detail {

inline long long parse_integer(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw DomainError("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& key, const std::string& v)
{
    const auto d = parse_double(v);
    if (!d) throw DomainError("config: '" + key + "' expects a number, got '" + v + "'");
    return *d;
}

inline bool parse_flag(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DomainError("config: '" + key + "' expects true/false, got '" + v + "'");
}

} // namespace detail

inline WeightLabel parse_weight_label(const std::string& v)
{
    if (v == "none") return WeightLabel::kNone;
    if (v == "light") return WeightLabel::kLight;
    if (v == "heavy") return WeightLabel::kHeavy;
    throw DomainError("unknown weight scheme '" + v + "' (expected none, light or heavy)");
}

inline FitTarget parse_fit(const std::string& v)
{
    if (v == "low" || v == "0.3" || v == "0.30") return FitTarget::kLow;
    if (v == "high" || v == "0.5" || v == "0.50") return FitTarget::kHigh;
    throw DomainError("unknown fit target '" + v + "' (expected low or high)");
}

inline CalibrationDesign parse_calibration_design(const std::string& v)
{
    if (v == "stable") return CalibrationDesign::kStable;
    if (v == "instability") return CalibrationDesign::kInstability;
    throw DomainError("unknown calibration design '" + v + "' (expected stable or instability)");
}

/**
 * A simulation campaign: the cartesian product of the N, T, dynamic,
 * instability and fit lists, each experiment scored by the same cells.
 *
 * Keys: seed (required), R, N, T, dynamic, instability, fit, methods,
 * weights, p, delta, folds, nu, mmax, threads, calibration.
 */
struct SimulationPlan
{
    std::uint64_t seed = 0;
    Index R = 2000;
    std::vector<Index> N{20};
    std::vector<Index> T{100};
    std::vector<bool> dynamic{false};
    std::vector<bool> instability{false};
    std::vector<FitTarget> fit{FitTarget::kLow};
    std::vector<std::string> methods{"ocmt"};
    std::vector<WeightLabel> weights{WeightLabel::kNone};
    SelectorSettings selectors;
    unsigned threads = 0;
    CalibrationDesign calibration = CalibrationSettings{}.design;

    static SimulationPlan from(const KeyValueConfig& cfg)
    {
        static const char* known[] = {"seed", "R", "N", "T", "dynamic", "instability", "fit", "methods",
                                      "weights", "p", "delta", "folds", "nu", "mmax", "threads", "calibration"};
        for (const auto& [key, value] : cfg.values()) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) throw DomainError("config: unknown key '" + key + "'");
        }
        SimulationPlan plan;
        if (!cfg.has("seed")) throw DomainError("config: 'seed' is required");
        plan.seed = static_cast<std::uint64_t>(detail::parse_integer("seed", cfg.get("seed")));
        if (cfg.has("R")) plan.R = detail::parse_integer("R", cfg.get("R"));
        auto ints = [&](const char* key, std::vector<Index>& dst) {
            if (!cfg.has(key)) return;
            dst.clear();
            for (const auto& v : cfg.list(key)) dst.push_back(detail::parse_integer(key, v));
        };
        auto flags = [&](const char* key, std::vector<bool>& dst) {
            if (!cfg.has(key)) return;
            dst.clear();
            for (const auto& v : cfg.list(key)) dst.push_back(detail::parse_flag(key, v));
        };
        ints("N", plan.N);
        ints("T", plan.T);
        flags("dynamic", plan.dynamic);
        flags("instability", plan.instability);
        if (cfg.has("fit")) {
            plan.fit.clear();
            for (const auto& v : cfg.list("fit")) plan.fit.push_back(parse_fit(v));
        }
        if (cfg.has("methods")) plan.methods = cfg.list("methods");
        if (cfg.has("weights")) {
            plan.weights.clear();
            for (const auto& v : cfg.list("weights")) plan.weights.push_back(parse_weight_label(v));
        }
        if (cfg.has("p")) plan.selectors.ocmt.p = detail::parse_real("p", cfg.get("p"));
        if (cfg.has("delta")) plan.selectors.ocmt.delta = detail::parse_real("delta", cfg.get("delta"));
        if (cfg.has("folds")) plan.selectors.lasso.folds = detail::parse_integer("folds", cfg.get("folds"));
        if (cfg.has("nu")) plan.selectors.boost.nu = detail::parse_real("nu", cfg.get("nu"));
        if (cfg.has("mmax")) plan.selectors.boost.m_max = detail::parse_integer("mmax", cfg.get("mmax"));
        if (cfg.has("calibration")) plan.calibration = parse_calibration_design(cfg.get("calibration"));
        if (cfg.has("threads")) plan.threads = static_cast<unsigned>(detail::parse_integer("threads", cfg.get("threads")));
        plan.validate();
        return plan;
    }

    void validate() const
    {
        if (R < 1) throw DomainError("config: R must be at least 1");
        if (N.empty() || T.empty() || dynamic.empty() || instability.empty() || fit.empty() || methods.empty()) {
            throw DomainError("config: every list must be non-empty");
        }
        for (const auto& d : experiments()) d.validate();
        (void)make_cells(methods, weights);
        selectors.boost.validate();
        if (selectors.lasso.folds < 2) throw DomainError("config: folds must be at least 2");
    }

    std::vector<DgpConfig> experiments() const
    {
        std::vector<DgpConfig> out;
        for (Index n : N) {
            for (Index t : T) {
                for (bool inst : instability) {
                    for (bool dyn : dynamic) {
                        for (FitTarget f : fit) {
                            DgpConfig d;
                            d.N = n;
                            d.T = t;
                            d.dynamic = dyn;
                            d.instability = inst;
                            d.fit = f;
                            d.R = R;
                            d.master_seed = seed;
                            out.push_back(d);
                        }
                    }
                }
            }
        }
        return out;
    }
};

} // namespace ocmt
