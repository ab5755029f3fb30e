// Command-line driver: simulate | select | forecast | evaluate.
//
// Exit codes: 0 success, 1 invalid input or flags, 2 numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <ocmt/ocmt.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ocmt;

namespace {

/// Input problems (bad flags, files, values) as opposed to numerical ones.
class UsageError : public Error
{
public:
    using Error::Error;
};

std::string num(double v) { return detail::format_double(v); }

std::string join(const std::vector<std::string>& items, const char* sep = ",")
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

json version_info()
{
    return {{"ocmt", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__}};
}

void prepare_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + dir + "'");
    const fs::path probe = fs::path(dir) / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw UsageError("output directory '" + dir + "' is not writable");
    }
    fs::remove(probe, ec);
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path.string() + "'");
    return f;
}

void write_manifest(const fs::path& path, const json& m)
{
    auto f = open_out(path);
    f << m.dump(2) << "\n";
}

// -------------------------------------------------------------------------
// simulate
// -------------------------------------------------------------------------

struct SimulateArgs
{
    std::string config;
    std::string out;
    unsigned threads = 0;
    std::string table = "long";
};

json plan_json(const SimulationPlan& plan)
{
    json j;
    j["seed"] = plan.seed;
    j["R"] = plan.R;
    j["N"] = plan.N;
    j["T"] = plan.T;
    j["dynamic"] = plan.dynamic;
    j["instability"] = plan.instability;
    std::vector<std::string> fit;
    for (auto f : plan.fit) fit.emplace_back(to_string(f));
    j["fit"] = fit;
    j["methods"] = plan.methods;
    std::vector<std::string> w;
    for (auto l : plan.weights) w.emplace_back(to_string(l));
    j["weights"] = w;
    j["p"] = plan.selectors.ocmt.p;
    j["delta"] = plan.selectors.ocmt.delta;
    j["folds"] = plan.selectors.lasso.folds;
    j["nu"] = plan.selectors.boost.nu;
    j["mmax"] = plan.selectors.boost.m_max;
    j["calibration"] = to_string(plan.calibration);
    return j;
}

std::string experiment_label(const DgpConfig& c)
{
    std::ostringstream s;
    s << "N=" << c.N << " T=" << c.T << (c.dynamic ? " dynamic" : " static") << " " << to_string(c.fit)
      << (c.instability ? " instability" : " stable");
    return s.str();
}

/// Rows grouped as the published tables: one panel per instability flag,
/// methods down the side, one column block (khat, TPR, FPR, MSFE) per
/// experiment, then the average over the panel's experiments.
void write_paper_table(std::ostream& out, const std::vector<ExperimentSummary>& runs)
{
    for (bool inst : {false, true}) {
        std::vector<const ExperimentSummary*> panel;
        for (const auto& r : runs) {
            if (r.config.instability == inst) panel.push_back(&r);
        }
        if (panel.empty()) continue;
        out << (inst ? "Panel B: with parameter instabilities\n" : "Panel A: without parameter instabilities\n");
        out << std::left << std::setw(32) << "method/protocol/weights";
        for (const auto* r : panel) out << " | " << std::setw(29) << experiment_label(r->config);
        if (panel.size() > 1) out << " | " << std::setw(29) << "average";
        out << "\n" << std::setw(32) << "";
        for (std::size_t e = 0; e < panel.size() + (panel.size() > 1 ? 1 : 0); ++e) {
            out << " | " << std::right << std::setw(6) << "khat" << std::setw(7) << "TPR" << std::setw(7) << "FPR"
                << std::setw(9) << "MSFE" << std::left;
        }
        out << "\n";
        const std::size_t n_cells = panel.front()->cells.size();
        for (std::size_t c = 0; c < n_cells; ++c) {
            out << std::setw(32) << panel.front()->cells[c].cell.label();
            double k = 0, tp = 0, fp = 0, ms = 0;
            for (const auto* r : panel) {
                const auto& cs = r->cells[c];
                out << " | " << std::right << std::fixed << std::setprecision(2) << std::setw(6) << cs.khat
                    << std::setw(7) << cs.tpr << std::setw(7) << cs.fpr << std::setw(9) << cs.msfe << std::left;
                k += cs.khat;
                tp += cs.tpr;
                fp += cs.fpr;
                ms += cs.msfe;
            }
            if (panel.size() > 1) {
                const double n = static_cast<double>(panel.size());
                out << " | " << std::right << std::setw(6) << k / n << std::setw(7) << tp / n << std::setw(7)
                    << fp / n << std::setw(9) << ms / n << std::left;
            }
            out << std::defaultfloat << "\n";
        }
        out << "\n";
    }
}

int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv)
{
    if (a.table != "long" && a.table != "paper") throw UsageError("--table must be long or paper");
    SimulationPlan plan;
    try {
        plan = SimulationPlan::from(KeyValueConfig::read(a.config));
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (a.threads > 0) plan.threads = a.threads;
    prepare_dir(a.out);
    const auto cells = make_cells(plan.methods, plan.weights);
    RunOptions options;
    options.threads = plan.threads;
    options.calibration.design = plan.calibration;

    std::vector<ExperimentSummary> runs;
    // tau_u is shared between the stable and unstable variants of a design.
    std::map<std::tuple<Index, Index, bool, int>, TauCalibration> calibrations;
    for (const auto& cfg : plan.experiments()) {
        const auto key = std::make_tuple(cfg.N, cfg.T, cfg.dynamic, static_cast<int>(cfg.fit));
        RunOptions o = options;
        if (auto it = calibrations.find(key); it != calibrations.end()) o.fixed_calibration = it->second;
        std::cerr << "[simulate] " << experiment_label(cfg) << "\n";
        runs.push_back(run_experiment(cfg, cells, plan.selectors, o));
        calibrations.emplace(key, runs.back().calibration);
        for (const auto& rec : runs.back().records) {
            if (!rec.ok) {
                std::cerr << "[simulate] replication " << rec.replication << " excluded for "
                          << cells[rec.cell].label() << ": " << rec.error << "\n";
            }
        }
    }

    {
        auto f = open_out(fs::path(a.out) / "summary.csv");
        f << "method,protocol,weights,N,T,dynamic,instability,fit,khat,tpr,fpr,msfe,successes,failures,tau_u\n";
        for (const auto& r : runs) {
            for (const auto& cs : r.cells) {
                f << cs.cell.method << "," << to_string(cs.cell.protocol) << "," << to_string(cs.cell.weights) << ","
                  << r.config.N << "," << r.config.T << "," << (r.config.dynamic ? 1 : 0) << ","
                  << (r.config.instability ? 1 : 0) << "," << to_string(r.config.fit) << "," << num(cs.khat) << ","
                  << num(cs.tpr) << "," << num(cs.fpr) << "," << num(cs.msfe) << "," << cs.successes << ","
                  << cs.failures << "," << num(r.calibration.tau_u) << "\n";
            }
        }
    }
    {
        auto f = open_out(fs::path(a.out) / "replications.csv");
        f << "experiment,replication,method,protocol,weights,ok,khat,tpr,fpr,forecast,realized,squared_error,error\n";
        for (std::size_t e = 0; e < runs.size(); ++e) {
            for (const auto& rec : runs[e].records) {
                const auto& c = cells[rec.cell];
                std::string err = rec.error;
                for (char& ch : err) {
                    if (ch == ',' || ch == '\n') ch = ';';
                }
                f << e << "," << rec.replication << "," << c.method << "," << to_string(c.protocol) << ","
                  << to_string(c.weights) << "," << (rec.ok ? 1 : 0) << "," << num(rec.khat) << "," << num(rec.tpr)
                  << "," << num(rec.fpr) << "," << num(rec.forecast) << "," << num(rec.realized) << ","
                  << num(rec.squared_error) << "," << err << "\n";
            }
        }
    }
    if (a.table == "paper") {
        auto f = open_out(fs::path(a.out) / "table.txt");
        write_paper_table(f, runs);
    }

    json m;
    m["command"] = argv;
    m["subcommand"] = "simulate";
    m["version"] = version_info();
    m["config_file"] = a.config;
    m["plan"] = plan_json(plan);
    m["table"] = a.table;
    m["seed_rule"] = {{"replication", "derive_seed(seed, 0x5EED, r)"},
                      {"calibration", "derive_seed(seed, 0xCA11B, 0)"},
                      {"cross_validation", "derive_seed(replication seed, 0xC5, 0)"}};
    json exps = json::array();
    for (std::size_t e = 0; e < runs.size(); ++e) {
        const auto& r = runs[e];
        exps.push_back({{"index", e},
                        {"N", r.config.N},
                        {"T", r.config.T},
                        {"dynamic", r.config.dynamic},
                        {"instability", r.config.instability},
                        {"fit", to_string(r.config.fit)},
                        {"tau_u", r.calibration.tau_u},
                        {"tau_eta", r.calibration.tau_eta},
                        {"calibration_r_squared", r.calibration.r_squared},
                        {"failures", r.failures}});
    }
    m["experiments"] = exps;
    m["outputs"] = a.table == "paper" ? json{"summary.csv", "replications.csv", "table.txt"}
                                      : json{"summary.csv", "replications.csv"};
    write_manifest(fs::path(a.out) / "manifest.json", m);
    return 0;
}

// -------------------------------------------------------------------------
// select / forecast: shared data and selector flags
// -------------------------------------------------------------------------

struct DataArgs
{
    std::string data;
    std::string target;
    bool intercept = false;
    std::vector<std::string> conditioning;
    std::string timestamp;
};

struct SelectorArgs
{
    std::string method = "ocmt";
    double p = 0.05;
    double delta = 1.0;
    bool hac = false;
    Index folds = 10;
    std::optional<std::uint64_t> seed;
    double nu = 0.5;
    Index mmax = 500;
};

void add_data_flags(CLI::App* app, DataArgs& d)
{
    app->add_option("--data", d.data, "Input CSV with a header row")->required();
    app->add_option("--target", d.target, "Target column")->required();
    app->add_flag("--intercept", d.intercept, "Add an intercept to the conditioning set");
    app->add_option("--conditioning", d.conditioning, "Conditioning columns (always included)")->delimiter(',');
    app->add_option("--timestamp", d.timestamp, "Integer timestamp column, excluded from the covariates");
}

void add_selector_flags(CLI::App* app, SelectorArgs& s)
{
    app->add_option("--method", s.method, "ocmt | lasso | alasso | boosting (forecast also: *-ls)");
    app->add_option("--p", s.p, "OCMT nominal size");
    app->add_option("--delta", s.delta, "OCMT critical value exponent");
    app->add_flag("--hac", s.hac, "OCMT with Newey-West standard errors");
    app->add_option("--folds", s.folds, "Lasso cross-validation folds");
    app->add_option("--seed", s.seed, "Seed for the cross-validation fold assignment");
    app->add_option("--nu", s.nu, "Boosting step size");
    app->add_option("--mmax", s.mmax, "Boosting iteration cap");
}

LabeledDataset load(const DataArgs& d)
{
    std::optional<std::string> ts;
    if (!d.timestamp.empty()) ts = d.timestamp;
    try {
        return load_csv(d.data, d.target, d.conditioning, d.intercept, ts);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    } catch (const DimensionError& e) {
        throw UsageError(e.what());
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
}

SelectorSpec make_spec(const SelectorArgs& s, const MethodCell& cell)
{
    if (cell.tag == SelectorTag::kOracle) throw UsageError("the oracle needs known signals; it is only available in simulate");
    const bool stochastic = cell.tag == SelectorTag::kLasso || cell.tag == SelectorTag::kAdaptiveLasso;
    if (stochastic && !s.seed) throw UsageError("--seed is required for " + cell.method);
    SelectorSpec spec;
    spec.tag = cell.tag;
    spec.ocmt.p = s.p;
    spec.ocmt.delta = s.delta;
    spec.ocmt.hac = s.hac;
    spec.lasso.folds = s.folds;
    spec.lasso.seed = s.seed.value_or(0);
    spec.boost.nu = s.nu;
    spec.boost.m_max = s.mmax;
    try {
        spec.boost.validate();
        if (s.folds < 2) throw DomainError("--folds must be at least 2");
        if (!(s.p > 0.0 && s.p < 1.0)) throw DomainError("--p must lie in (0, 1)");
        if (!(s.delta > 0.0)) throw DomainError("--delta must be positive");
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return spec;
}

json selector_json(const SelectorArgs& s)
{
    json j{{"method", s.method}, {"p", s.p}, {"delta", s.delta}, {"hac", s.hac}, {"folds", s.folds},
           {"nu", s.nu},         {"mmax", s.mmax}};
    j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
    return j;
}

json data_json(const DataArgs& d)
{
    return {{"data", d.data}, {"target", d.target}, {"intercept", d.intercept},
            {"conditioning", d.conditioning}, {"timestamp", d.timestamp}};
}

// -------------------------------------------------------------------------
// select
// -------------------------------------------------------------------------

struct SelectArgs
{
    DataArgs data;
    SelectorArgs selector;
    std::string out;
};

int run_select(const SelectArgs& a, const std::vector<std::string>& argv)
{
    MethodCell cell;
    try {
        cell = parse_method(a.selector.method);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const auto spec = make_spec(a.selector, cell);
    const auto ds = load(a.data);
    const SelectionResult s = spec.select(ds.data);

    std::ostringstream table;
    table << "column,selected" << (s.t_stats ? ",t_stat" : "") << (s.coefficients ? ",coefficient" : "") << "\n";
    for (Index i = 0; i < ds.data.N(); ++i) {
        table << ds.x_names[static_cast<std::size_t>(i)] << "," << (s.included[static_cast<std::size_t>(i)] ? 1 : 0);
        if (s.t_stats) table << "," << num((*s.t_stats)(i));
        if (s.coefficients) table << "," << num((*s.coefficients)(i));
        table << "\n";
    }
    std::vector<std::string> chosen;
    for (Index i : s.selected_indices()) chosen.push_back(ds.x_names[static_cast<std::size_t>(i)]);

    std::cout << "# selected (" << chosen.size() << "): " << join(chosen, " ") << "\n";
    if (s.critical_value) std::cout << "# critical value: " << num(*s.critical_value) << "\n";
    std::cout << table.str();

    if (!a.out.empty()) {
        prepare_dir(a.out);
        open_out(fs::path(a.out) / "selection.csv") << table.str();
        json m;
        m["command"] = argv;
        m["subcommand"] = "select";
        m["version"] = version_info();
        m["input"] = data_json(a.data);
        m["selector"] = selector_json(a.selector);
        m["selected"] = chosen;
        json diag = json::object();
        for (const auto& [k, v] : s.diagnostics) diag[k] = v;
        m["diagnostics"] = diag;
        m["outputs"] = {"selection.csv"};
        write_manifest(fs::path(a.out) / "manifest.json", m);
    }
    return 0;
}

// -------------------------------------------------------------------------
// forecast
// -------------------------------------------------------------------------

struct ForecastArgs
{
    DataArgs data;
    SelectorArgs selector;
    std::string protocol = "none";
    std::string weights = "none";
    Index first_origin = 0;
    std::string out;
};

Protocol parse_protocol(const std::string& p)
{
    if (p == "none") return Protocol::kNoWeighting;
    if (p == "est-weighted") return Protocol::kSelectUnweightedEstimateWeighted;
    if (p == "both-weighted") return Protocol::kSelectAndEstimateWeighted;
    throw UsageError("--protocol must be none, est-weighted or both-weighted");
}

int run_forecast(const ForecastArgs& a, const std::vector<std::string>& argv)
{
    MethodCell cell;
    WeightLabel label = WeightLabel::kNone;
    try {
        cell = parse_method(a.selector.method);
        label = parse_weight_label(a.weights);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const Protocol protocol = parse_protocol(a.protocol);
    if (cell.estimator == Estimator::kNative && protocol == Protocol::kSelectUnweightedEstimateWeighted) {
        throw UsageError(cell.method + " uses its own coefficients; est-weighted needs " + cell.method + "-ls");
    }
    const auto spec = make_spec(a.selector, cell);
    const auto ds = load(a.data);
    const Index total = ds.data.T();
    // Expanding window: fit rows [0, origin), forecast row origin.
    const Index first = a.first_origin > 0 ? a.first_origin : total - 1;
    if (first < 1 || first >= total) {
        throw UsageError("--first-origin must lie in [1, " + std::to_string(total - 1) + "]");
    }
    const auto grid = standard_grid(label);

    std::ostringstream table;
    table << "period,forecast,realized,khat\n";
    std::vector<double> errors;
    for (Index origin = first; origin < total; ++origin) {
        std::optional<std::vector<std::int64_t>> stamps;
        if (ds.data.timestamps()) {
            stamps.emplace(ds.data.timestamps()->begin(), ds.data.timestamps()->begin() + origin);
        }
        TimeSeriesDataset fit(ds.data.y().head(origin), ds.data.X().topRows(origin), ds.data.Z().topRows(origin),
                              stamps);
        NextObservation next{ds.data.Z().row(origin).transpose(), ds.data.X().row(origin).transpose(),
                             ds.data.y()(origin)};
        ForecastRecord rec;
        try {
            rec = grid_forecast(fit, next, protocol, spec, grid, cell.estimator);
        } catch (const Error& e) {
            throw Error("forecast origin " + std::to_string(origin) + ": " + e.what());
        }
        double khat = 0.0;
        for (const auto& lf : rec.per_lambda) khat += static_cast<double>(lf.selection.count());
        khat /= static_cast<double>(rec.per_lambda.size());
        const std::int64_t period = ds.data.timestamps() ? (*ds.data.timestamps())[static_cast<std::size_t>(origin)]
                                                          : static_cast<std::int64_t>(origin + 1);
        table << period << "," << num(rec.point_forecast) << "," << num(*rec.realized) << "," << num(khat) << "\n";
        errors.push_back(*rec.realized - rec.point_forecast);
    }
    std::cout << table.str();
    const double m = msfe(Eigen::Map<const VectorXd>(errors.data(), static_cast<Index>(errors.size())));
    std::cerr << "[forecast] " << errors.size() << " forecasts, MSFE " << num(m) << "\n";

    if (!a.out.empty()) {
        prepare_dir(a.out);
        open_out(fs::path(a.out) / "forecasts.csv") << table.str();
        json j;
        j["command"] = argv;
        j["subcommand"] = "forecast";
        j["version"] = version_info();
        j["input"] = data_json(a.data);
        j["selector"] = selector_json(a.selector);
        j["protocol"] = a.protocol;
        j["weights"] = a.weights;
        j["lambda_grid"] = grid.grid();
        j["first_origin"] = first;
        j["forecasts"] = errors.size();
        j["msfe"] = m;
        j["outputs"] = {"forecasts.csv"};
        write_manifest(fs::path(a.out) / "manifest.json", j);
    }
    return 0;
}

// -------------------------------------------------------------------------
// evaluate
// -------------------------------------------------------------------------

struct EvaluateArgs
{
    std::string metric;
    std::string a;
    std::string b;
    std::string realized;
    std::string series = "series";
    Index horizon = 1;
    bool drop_last_term = false;
    std::string data;
    std::vector<std::string> signals;
    std::vector<std::string> signs;
    std::string out;
};

/// Column `name` of a CSV, split by the optional series column.
std::vector<VectorXd> read_panel(const std::string& path, const std::string& name, const std::string& series)
{
    CsvTable t;
    try {
        t = read_csv_file(path);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    const auto col = t.find(name);
    if (!col) throw UsageError("'" + path + "' has no column '" + name + "'");
    const auto scol = t.find(series);
    std::map<double, std::vector<double>> groups;
    std::vector<double> order;
    for (const auto& row : t.rows) {
        const double key = scol ? row[*scol] : 0.0;
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(row[*col]);
    }
    std::vector<VectorXd> out;
    for (double key : order) {
        const auto& v = groups[key];
        out.push_back(Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size())));
    }
    if (out.empty()) throw UsageError("'" + path + "' has no rows");
    return out;
}

std::vector<VectorXd> errors_of(const std::vector<VectorXd>& f, const std::vector<VectorXd>& y)
{
    if (f.size() != y.size()) throw UsageError("forecast and realized files have different series counts");
    std::vector<VectorXd> e;
    for (std::size_t l = 0; l < f.size(); ++l) {
        if (f[l].size() != y[l].size()) throw UsageError("series " + std::to_string(l) + ": forecast and realized lengths differ");
        e.push_back(y[l] - f[l]);
    }
    return e;
}

VectorXd stack(const std::vector<VectorXd>& parts)
{
    Index n = 0;
    for (const auto& p : parts) n += p.size();
    VectorXd out(n);
    Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.size()) = p;
        at += p.size();
    }
    return out;
}

int run_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv)
{
    std::ostringstream row;
    json inputs;
    if (a.metric == "irc") {
        if (a.data.empty() || a.signals.empty()) throw UsageError("irc needs --data and --signals");
        CsvTable t;
        try {
            t = read_csv_file(a.data);
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        }
        MatrixXd x(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size()));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            for (std::size_t c = 0; c < t.header.size(); ++c) x(static_cast<Index>(r), static_cast<Index>(c)) = t.rows[r][c];
        }
        std::vector<Index> idx;
        for (const auto& s : a.signals) {
            const auto c = t.find(s);
            if (!c) throw UsageError("'" + a.data + "' has no column '" + s + "'");
            idx.push_back(static_cast<Index>(*c));
        }
        VectorXd signs = VectorXd::Ones(static_cast<Index>(idx.size()));
        if (!a.signs.empty()) {
            if (a.signs.size() != idx.size()) throw UsageError("--signs needs one entry per signal");
            for (std::size_t j = 0; j < a.signs.size(); ++j) {
                if (a.signs[j] == "+" || a.signs[j] == "1") continue;
                if (a.signs[j] == "-" || a.signs[j] == "-1") {
                    signs(static_cast<Index>(j)) = -1.0;
                    continue;
                }
                throw UsageError("--signs entries must be + or -");
            }
        }
        const auto r = irc_check(x, idx, signs);
        row << "metric,lhs,satisfied\nirc," << num(r.lhs) << "," << (r.satisfied ? 1 : 0) << "\n";
        inputs = {{"data", a.data}, {"signals", a.signals}, {"signs", a.signs}};
    } else {
        if (a.a.empty() || a.realized.empty()) throw UsageError(a.metric + " needs --a and --realized");
        const auto y = read_panel(a.realized, "realized", a.series);
        const auto fa = read_panel(a.a, "forecast", a.series);
        inputs = {{"a", a.a}, {"b", a.b}, {"realized", a.realized}, {"series", a.series}};
        if (a.metric == "msfe") {
            const double ma = msfe(stack(errors_of(fa, y)));
            row << "metric,a" << (a.b.empty() ? "" : ",b") << "\nmsfe," << num(ma);
            if (!a.b.empty()) row << "," << num(msfe(stack(errors_of(read_panel(a.b, "forecast", a.series), y))));
            row << "\n";
        } else if (a.metric == "dm") {
            if (a.b.empty()) throw UsageError("dm needs --b");
            if (a.horizon < 1) throw UsageError("--horizon must be at least 1");
            const auto fb = read_panel(a.b, "forecast", a.series);
            const auto panel = LossPanel::from_errors(errors_of(fa, y), errors_of(fb, y), a.horizon);
            row << "metric,statistic,horizon,forecasts\ndm," << num(panel_dm(panel)) << "," << a.horizon << ","
                << panel.total() << "\n";
            inputs["horizon"] = a.horizon;
        } else if (a.metric == "pt" || a.metric == "mdfa") {
            if (!a.b.empty()) throw UsageError(a.metric + " scores one forecast; drop --b");
            DirectionPanel panel{y, fa};
            try {
                panel.check();
            } catch (const DimensionError& e) {
                throw UsageError(e.what());
            }
            if (a.metric == "pt") {
                row << "metric,statistic,last_term\npt," << num(pt_test(panel, !a.drop_last_term)) << ","
                    << (a.drop_last_term ? 0 : 1) << "\n";
            } else {
                row << "metric,value\nmdfa," << num(mdfa(panel)) << "\n";
            }
        } else {
            throw UsageError("--metric must be msfe, dm, pt, mdfa or irc");
        }
    }
    std::cout << row.str();
    if (!a.out.empty()) {
        prepare_dir(a.out);
        open_out(fs::path(a.out) / (a.metric + ".csv")) << row.str();
        json m;
        m["command"] = argv;
        m["subcommand"] = "evaluate";
        m["version"] = version_info();
        m["metric"] = a.metric;
        m["inputs"] = inputs;
        m["outputs"] = {a.metric + ".csv"};
        write_manifest(fs::path(a.out) / "manifest.json", m);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"OCMT variable selection, forecasting and Monte Carlo experiments"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo campaign from a key = value config");
    simulate->add_option("--config", sim.config, "Campaign config file")->required();
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_option("--threads", sim.threads, "Worker threads (OCMT_THREADS overrides)");
    simulate->add_option("--table", sim.table, "Extra table layout: long | paper");

    SelectArgs sel;
    auto* select = app.add_subcommand("select", "Select covariates from a CSV");
    add_data_flags(select, sel.data);
    add_selector_flags(select, sel.selector);
    select->add_option("--out", sel.out, "Write selection.csv and manifest.json here");

    ForecastArgs fc;
    auto* forecast = app.add_subcommand("forecast", "One-step-ahead forecasts from a CSV");
    add_data_flags(forecast, fc.data);
    add_selector_flags(forecast, fc.selector);
    forecast->add_option("--protocol", fc.protocol, "none | est-weighted | both-weighted");
    forecast->add_option("--weights", fc.weights, "none | light | heavy");
    forecast->add_option("--first-origin", fc.first_origin,
                         "Forecast every row from this 0-based row on, fitting on the rows before it "
                         "(default: the last row only)");
    forecast->add_option("--out", fc.out, "Write forecasts.csv and manifest.json here");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Forecast and selection metrics");
    evaluate->add_option("--metric", ev.metric, "msfe | dm | pt | mdfa | irc")->required();
    evaluate->add_option("--a", ev.a, "CSV with a 'forecast' column");
    evaluate->add_option("--b", ev.b, "Competing CSV with a 'forecast' column");
    evaluate->add_option("--realized", ev.realized, "CSV with a 'realized' column");
    evaluate->add_option("--series", ev.series, "Series id column for panels");
    evaluate->add_option("--horizon", ev.horizon, "Forecast horizon (dm)");
    evaluate->add_flag("--drop-last-term", ev.drop_last_term, "pt: drop the O(1/T^2) variance term");
    evaluate->add_option("--data", ev.data, "irc: covariate CSV");
    evaluate->add_option("--signals", ev.signals, "irc: signal columns")->delimiter(',');
    evaluate->add_option("--signs", ev.signs, "irc: coefficient signs (+/-)")->delimiter(',');
    evaluate->add_option("--out", ev.out, "Write <metric>.csv and manifest.json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (*simulate) return run_simulate(sim, args);
        if (*select) return run_select(sel, args);
        if (*forecast) return run_forecast(fc, args);
        if (*evaluate) return run_evaluate(ev, args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
