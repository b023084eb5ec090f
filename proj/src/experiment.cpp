#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "repeatr/engine.hpp"
#include "repeatr/estimators.hpp"
#include "repeatr/parallel.hpp"
#include "repeatr/permtest.hpp"
#include "repeatr/random.hpp"
#include "repeatr/simulate.hpp"
#include "repeatr/theory.hpp"

namespace repeatr {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::resolved() const {
    ExperimentConfig out = *this;
    const bool batch = scenario.batch != BatchKind::None;
    if (out.subject_grid.empty()) {
        if (batch) {
            out.subject_grid = {20};
        } else {
            out.subject_grid = {5, 10, 15, 20, 25, 30, 35, 40};
        }
    }
    if (out.statistics.empty()) {
        if (batch) {
            for (const auto& strategy : MultiBatchStrategy::all()) out.statistics.push_back(strategy.name());
        } else if (is_multivariate(scenario.model)) {
            out.statistics = {"dtilde", "drs", "fingerprint", "pca-icc", "i2c2"};
        } else {
            out.statistics = {"dtilde", "drs", "fingerprint", "icc", "f", std::string(kParametricFTest)};
        }
    }
    out.scenario.subjects = out.subject_grid.front();
    return out;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); };
    if (subject_grid.empty()) fail("n: grid is empty");
    for (auto n : subject_grid) {
        if (n < 2) fail("n: every grid value must be at least 2");
        auto probe = scenario;
        probe.subjects = n;
        probe.validate();
    }
    if (statistics.empty()) fail("statistics: list is empty");
    for (const auto& name : statistics) {
        if (name == kParametricFTest) {
            if (scenario.dimension != 1) fail("statistics: f-test needs univariate data (l = 1)");
            continue;
        }
        auto spec = StatisticSpec::parse(name, metric);
        if ((spec.kind == StatisticKind::Icc || spec.kind == StatisticKind::F) && scenario.dimension != 1) {
            fail("statistics: " + name + " needs univariate data (l = 1); use pca-icc");
        }
        if (spec.kind == StatisticKind::PcaIcc && scenario.dimension < 2) {
            fail("statistics: pca-icc needs multivariate data (l >= 2)");
        }
    }
    if (iterations < 1) fail("iterations: must be positive");
    if (replications < 1) fail("B: must be positive");
    if (!(alpha > 0 && alpha < 1)) fail("alpha: must lie in (0, 1)");
}

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> parse_list(const std::string& key, const std::string& value) {
    std::string body = value;
    if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') throw Error(ErrorKind::ConfigError, key + ": unterminated list");
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
        throw Error(ErrorKind::ConfigError, key + ": expected a number, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw Error(ErrorKind::ConfigError, key + ": expected a non-negative integer, got '" + value + "'");
    }
    return out;
}

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

ExperimentConfig parse_experiment_config(std::string_view text) {
    ExperimentConfig cfg;
    std::stringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError,
                        "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(std::string_view(stripped).substr(0, eq));
        const auto value = trim(std::string_view(stripped).substr(eq + 1));
        auto& sc = cfg.scenario;
        if (key == "model") sc.model = parse_model_kind(value);
        else if (key == "sigma2") sc.sigma2 = parse_real(key, value);
        else if (key == "sigma_mu2") sc.sigma_mu2 = parse_real(key, value);
        else if (key == "rho") sc.rho = parse_real(key, value);
        else if (key == "l") sc.dimension = parse_count(key, value);
        else if (key == "s") sc.sessions = parse_count(key, value);
        else if (key == "batch") sc.batch = parse_batch_kind(value);
        else if (key == "seed") sc.seed = parse_count(key, value);
        else if (key == "n") {
            cfg.subject_grid.clear();
            for (const auto& item : parse_list(key, value)) cfg.subject_grid.push_back(parse_count(key, item));
        } else if (key == "statistics") cfg.statistics = parse_list(key, value);
        else if (key == "iterations") cfg.iterations = parse_count(key, value);
        else if (key == "B") cfg.replications = parse_count(key, value);
        else if (key == "alpha") cfg.alpha = parse_real(key, value);
        else if (key == "metric") cfg.metric = parse_metric(value);
        else throw Error(ErrorKind::ConfigError, key + ": unknown key");
    }
    // Range checks name the field before grid/statistic defaults kick in.
    auto probe = cfg.scenario;
    probe.subjects = std::max<std::size_t>(2, probe.subjects);
    probe.validate();
    auto out = cfg.resolved();
    out.validate();
    return out;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str());
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const auto& sc = cfg.scenario;
    out << "model = " << to_string(sc.model) << '\n'
        << "sigma2 = " << format_real(sc.sigma2) << '\n'
        << "sigma_mu2 = " << format_real(sc.sigma_mu2) << '\n'
        << "rho = " << format_real(sc.rho) << '\n'
        << "l = " << sc.dimension << '\n'
        << "s = " << sc.sessions << '\n'
        << "batch = " << to_string(sc.batch) << '\n'
        << "seed = " << sc.seed << '\n'
        << "n = [";
    for (std::size_t k = 0; k < cfg.subject_grid.size(); ++k) {
        out << (k ? ", " : "") << cfg.subject_grid[k];
    }
    out << "]\nstatistics = [";
    for (std::size_t k = 0; k < cfg.statistics.size(); ++k) {
        out << (k ? ", " : "") << cfg.statistics[k];
    }
    out << "]\n"
        << "iterations = " << cfg.iterations << '\n'
        << "B = " << cfg.replications << '\n'
        << "alpha = " << format_real(cfg.alpha) << '\n'
        << "metric = " << to_string(cfg.metric) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

EstimateSummary summarize(std::vector<double> values) {
    EstimateSummary out;
    if (values.empty()) return out;
    const auto count = static_cast<double>(values.size());
    double sum = 0;
    for (double v : values) sum += v;
    out.mean = sum / count;
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = values.size() > 1 ? std::sqrt(ss / (count - 1)) : 0.0;
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double h = (count - 1) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    out.q05 = quantile(0.05);
    out.q25 = quantile(0.25);
    out.q50 = quantile(0.50);
    out.q75 = quantile(0.75);
    out.q95 = quantile(0.95);
    return out;
}

const PowerCurve& ExperimentResult::curve(std::string_view statistic) const {
    for (const auto& c : curves) {
        if (c.statistic == statistic) return c;
    }
    throw Error(ErrorKind::ConfigError, "no curve for statistic '" + std::string(statistic) + "'");
}

namespace {

struct CellOutcome {
    std::vector<double> estimates;
    std::vector<double> p_values;
};

CellOutcome run_cell(const ExperimentConfig& cfg, std::size_t subjects, std::size_t iteration) {
    auto scenario = cfg.scenario;
    scenario.subjects = subjects;
    const auto cell_seed = derive_seed(scenario.seed, {subjects, iteration});
    auto panel = generate(scenario, derive_seed(cell_seed, {UINT64_MAX}));

    std::vector<StatisticSpec> specs;
    std::vector<std::size_t> spec_slot;
    CellOutcome out;
    out.estimates.resize(cfg.statistics.size());
    out.p_values.resize(cfg.statistics.size());
    for (std::size_t k = 0; k < cfg.statistics.size(); ++k) {
        const auto& name = cfg.statistics[k];
        if (name == kParametricFTest) {
            out.estimates[k] = icc_anova(panel).detail.at("F");
            out.p_values[k] = parametric_f_test(panel);
            continue;
        }
        specs.push_back(StatisticSpec::parse(name, cfg.metric));
        spec_slot.push_back(k);
    }
    if (!specs.empty()) {
        PanelEngine engine(std::move(panel));
        auto results = permutation_tests(engine, specs, cfg.replications, cell_seed, 1);
        for (std::size_t j = 0; j < results.size(); ++j) {
            out.estimates[spec_slot[j]] = results[j].observed;
            out.p_values[spec_slot[j]] = results[j].p_value;
        }
    }
    return out;
}

} // namespace

ExperimentResult run_power_experiment(const ExperimentConfig& input, std::size_t threads) {
    const auto cfg = input.resolved();
    cfg.validate();
    const auto grid = cfg.subject_grid.size();
    const auto iters = cfg.iterations;

    std::vector<CellOutcome> cells(grid * iters);
    parallel_for(cells.size(), threads, [&](std::size_t k) {
        cells[k] = run_cell(cfg, cfg.subject_grid[k / iters], k % iters);
    });

    ExperimentResult result;
    result.config = cfg;
    for (std::size_t j = 0; j < cfg.statistics.size(); ++j) {
        const auto& name = cfg.statistics[j];
        PowerCurve curve{name, {}};
        auto& estimates = result.estimates[name];
        auto& p_values = result.p_values[name];
        for (std::size_t g = 0; g < grid; ++g) {
            std::vector<double> est(iters);
            std::vector<double> ps(iters);
            std::size_t rejections = 0;
            for (std::size_t it = 0; it < iters; ++it) {
                const auto& cell = cells[g * iters + it];
                est[it] = cell.estimates[j];
                ps[it] = cell.p_values[j];
                if (ps[it] <= cfg.alpha) ++rejections;
            }
            const double rate = static_cast<double>(rejections) / static_cast<double>(iters);
            curve.points.push_back({cfg.subject_grid[g], iters, rate,
                                    std::sqrt(rate * (1 - rate) / static_cast<double>(iters)),
                                    summarize(est)});
            estimates.push_back(std::move(est));
            p_values.push_back(std::move(ps));
        }
        result.curves.push_back(std::move(curve));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

nlohmann::ordered_json population_json(const ScenarioConfig& sc) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    if (sc.batch != BatchKind::None || is_lognormal(sc.model)) return out;
    const double icc = sc.sigma_mu2 / (sc.sigma_mu2 + sc.sigma2);
    if (sc.model == ModelKind::GaussianAnova) {
        out["icc"] = icc;
        out["discriminability"] = discr_from_icc(icc);
    } else {
        auto pop = ManovaPopulation::compound_symmetric(sc.dimension, sc.sigma2, sc.sigma_mu2, sc.rho);
        out["trace_icc"] = trace_icc(pop);
        out["discriminability_approx"] = discr_approx_manova(pop);
    }
    return out;
}

} // namespace

std::string result_to_json(const ExperimentResult& result) {
    const auto& cfg = result.config;
    const auto& sc = cfg.scenario;
    nlohmann::ordered_json doc;
    doc["config"] = {
        {"model", to_string(sc.model)},   {"sigma2", sc.sigma2},
        {"sigma_mu2", sc.sigma_mu2},      {"rho", sc.rho},
        {"l", sc.dimension},              {"s", sc.sessions},
        {"batch", to_string(sc.batch)},   {"seed", sc.seed},
        {"n", cfg.subject_grid},          {"statistics", cfg.statistics},
        {"iterations", cfg.iterations},   {"B", cfg.replications},
        {"alpha", cfg.alpha},             {"metric", to_string(cfg.metric)},
    };
    doc["population"] = population_json(sc);
    auto& curves = doc["curves"] = nlohmann::ordered_json::array();
    for (const auto& curve : result.curves) {
        nlohmann::ordered_json c;
        c["statistic"] = curve.statistic;
        auto& points = c["points"] = nlohmann::ordered_json::array();
        for (const auto& p : curve.points) {
            points.push_back({
                {"n", p.subjects},
                {"iterations", p.iterations},
                {"power", p.rejection_rate},
                {"power_se", p.se},
                {"estimate",
                 {{"mean", p.estimates.mean},
                  {"sd", p.estimates.sd},
                  {"q05", p.estimates.q05},
                  {"q25", p.estimates.q25},
                  {"q50", p.estimates.q50},
                  {"q75", p.estimates.q75},
                  {"q95", p.estimates.q95}}},
            });
        }
        curves.push_back(std::move(c));
    }
    return doc.dump(2) + "\n";
}

std::string result_to_csv(const ExperimentResult& result) {
    std::ostringstream out;
    out << "statistic,n,field,value\n";
    for (const auto& curve : result.curves) {
        for (const auto& p : curve.points) {
            const std::pair<const char*, double> fields[] = {
                {"iterations", static_cast<double>(p.iterations)},
                {"power", p.rejection_rate},
                {"power_se", p.se},
                {"mean", p.estimates.mean},
                {"sd", p.estimates.sd},
                {"q05", p.estimates.q05},
                {"q25", p.estimates.q25},
                {"q50", p.estimates.q50},
                {"q75", p.estimates.q75},
                {"q95", p.estimates.q95},
            };
            for (const auto& [field, value] : fields) {
                out << curve.statistic << ',' << p.subjects << ',' << field << ',' << format_real(value)
                    << '\n';
            }
        }
    }
    return out.str();
}

} // namespace repeatr
