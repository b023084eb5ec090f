// Command-line front end. Each subcommand parses flags, calls the library
// and serializes what comes back; no statistics are computed here.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "repeatr/core.hpp"
#include "repeatr/engine.hpp"
#include "repeatr/estimators.hpp"
#include "repeatr/metrics.hpp"
#include "repeatr/permtest.hpp"
#include "repeatr/simulate.hpp"
#include "repeatr/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace repeatr;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitCompute = 2;

std::string number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

std::size_t default_threads() {
    if (const char* env = std::getenv("REPEATR_THREADS")) {
        try {
            const auto value = std::stoul(env);
            if (value > 0) return value;
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

int report_error(const std::string& kind, const std::string& message, int code) {
    ordered_json err = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << err.dump() << '\n';
    return code;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateOptions {
    std::string input;
    std::string metric = "euclidean";
    std::vector<std::string> stats{"all"};
    bool pca = false;
    std::string format = "json";
};

const std::vector<std::string> kEstimateNames{"dhat", "dtilde",  "drs",    "fingerprint",
                                              "icc",  "i2c2",    "pca-icc"};

std::vector<std::string> expand_stats(const std::vector<std::string>& requested,
                                      const MeasurementSet& ms, bool pca) {
    std::vector<std::string> out;
    for (const auto& name : requested) {
        if (name == "all") {
            for (const auto& n : kEstimateNames) {
                if (n == "icc" && ms.features() != 1 && !pca) continue;
                if (n == "pca-icc" && ms.features() < 2) continue;
                out.push_back(n);
            }
        } else if (std::find(kEstimateNames.begin(), kEstimateNames.end(), name) !=
                   kEstimateNames.end()) {
            out.push_back(name);
        } else {
            throw Error(ErrorKind::ConfigError, "stats: unknown statistic '" + name + "'");
        }
    }
    std::vector<std::string> unique;
    for (const auto& n : out) {
        if (std::find(unique.begin(), unique.end(), n) == unique.end()) unique.push_back(n);
    }
    return unique;
}

RepeatabilityEstimate estimate_one(const std::string& name, const MeasurementSet& ms,
                                   const CombinedDistanceMatrix* dm, bool pca) {
    if (name == "dhat") return sample_discriminability(*dm);
    if (name == "dtilde") return rank_discriminability(*dm);
    if (name == "drs") {
        if (ms.sessions() == 2) return ranksum_discriminability(*dm, 0, 1);
        return multibatch_estimate(*dm, {Pairing::AllBatches, RankBase::Drs});
    }
    if (name == "fingerprint") return fingerprint_index(*dm, 0, 1);
    if (name == "icc") return pca && ms.features() > 1 ? pca_icc(ms) : icc_anova(ms);
    if (name == "i2c2") return i2c2_moments(ms);
    return pca_icc(ms);
}

int cmd_estimate(const EstimateOptions& opt) {
    const auto ms = load_measurements(opt.input);
    const auto metric = parse_metric(opt.metric);
    const auto names = expand_stats(opt.stats, ms, opt.pca);
    if (opt.format != "json" && opt.format != "csv") {
        throw Error(ErrorKind::ConfigError, "out: expected json or csv");
    }

    std::optional<CombinedDistanceMatrix> dm;
    for (const auto& name : names) {
        if (name == "dhat" || name == "dtilde" || name == "drs" || name == "fingerprint") {
            dm = pairwise_distances(ms, metric);
            break;
        }
    }

    std::vector<std::pair<std::string, RepeatabilityEstimate>> results;
    for (const auto& name : names) {
        results.emplace_back(name, estimate_one(name, ms, dm ? &*dm : nullptr, opt.pca));
    }

    if (opt.format == "csv") {
        std::cout << "statistic,field,value\n";
        for (const auto& [name, est] : results) {
            std::cout << name << ",value," << number(est.value) << '\n';
            for (const auto& [field, v] : est.detail) {
                std::cout << name << ',' << field << ',' << number(v) << '\n';
            }
        }
        return 0;
    }

    ordered_json out;
    ordered_json details = ordered_json::object();
    for (const auto& [name, est] : results) {
        out[name] = est.value;
        if (!est.detail.empty()) {
            ordered_json d = ordered_json::object();
            for (const auto& [field, v] : est.detail) d[field] = v;
            details[name] = d;
        }
    }
    out["details"] = details;
    out["metric"] = to_string(metric);
    out["subjects"] = ms.subjects();
    out["sessions"] = ms.sessions();
    out["features"] = ms.features();
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

struct TestOptions {
    std::string input;
    std::string stat = "dtilde";
    std::string metric = "euclidean";
    std::size_t replications = kDefaultReplications;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::size_t threads = 1;
};

int cmd_test(const TestOptions& opt) {
    if (!(opt.alpha > 0 && opt.alpha < 1)) {
        throw Error(ErrorKind::ConfigError, "alpha: must lie in (0, 1)");
    }
    const auto ms = load_measurements(opt.input);
    const auto metric = parse_metric(opt.metric);

    ordered_json out;
    if (opt.stat == kParametricFTest) {
        const double p = parametric_f_test(ms);
        out = {{"statistic", opt.stat},
               {"observed", icc_anova(ms).detail.at("F")},
               {"p_value", p},
               {"alpha", opt.alpha},
               {"reject", p <= opt.alpha}};
    } else {
        const auto spec = StatisticSpec::parse(opt.stat, metric);
        const auto result = permutation_test(ms, spec, opt.replications, opt.seed, opt.threads);
        out = {{"statistic", result.statistic},
               {"metric", to_string(metric)},
               {"observed", result.observed},
               {"p_value", result.p_value},
               {"B", result.replications},
               {"seed", result.seed},
               {"alpha", opt.alpha},
               {"reject", result.p_value <= opt.alpha}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::string config;
    std::string out_dir = "results";
    std::size_t threads = 1;
};

int cmd_simulate(const SimulateOptions& opt) {
    const auto cfg = load_experiment_config(opt.config).resolved();
    cfg.validate();
    const auto result = run_power_experiment(cfg, opt.threads);

    const fs::path dir(opt.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "out: cannot create " + dir.string());

    const auto json_path = dir / "power.json";
    const auto csv_path = dir / "power.csv";
    const auto cfg_path = dir / "config.resolved";
    write_file(json_path, result_to_json(result));
    write_file(csv_path, result_to_csv(result));
    write_file(cfg_path, format_experiment_config(cfg));

    ordered_json out = {{"artifacts", {json_path.string(), csv_path.string(), cfg_path.string()}},
                        {"seed", cfg.scenario.seed}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// theory
// ---------------------------------------------------------------------------

struct TheoryOptions {
    std::string curve = "d-icc";
    std::optional<double> from;
    std::optional<double> to;
    double step = 0.01;
    std::size_t dimension = 10;
    double rho = 0.1;
    double total_variance = 1.0;
    double h1 = 10;
    double h2 = 10;
    std::optional<double> dispersion;
    double d = 0.6;
    std::size_t n_min = 2;
    std::size_t n_max = 40;
};

std::vector<double> grid(double from, double to, double step) {
    if (!(step > 0) || !(to >= from)) {
        throw Error(ErrorKind::DomainError, "grid: need step > 0 and to >= from");
    }
    const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
    std::vector<double> xs(count);
    for (std::size_t k = 0; k < count; ++k) xs[k] = from + static_cast<double>(k) * step;
    // Land exactly on the endpoint when the step divides the range.
    if (std::abs(xs.back() - to) < 1e-9 * std::max(1.0, std::abs(to))) xs.back() = to;
    return xs;
}

int cmd_theory(const TheoryOptions& opt) {
    std::ostringstream out;
    if (opt.curve == "d-icc") {
        out << "icc,discriminability\n";
        for (double x : grid(opt.from.value_or(0), opt.to.value_or(1), opt.step)) {
            out << number(x) << ',' << number(discr_from_icc(x)) << '\n';
        }
    } else if (opt.curve == "manova-approx") {
        if (!(opt.total_variance > 0)) {
            throw Error(ErrorKind::DomainError, "total-variance: must be > 0");
        }
        out << "trace_icc,discriminability,l,rho,sigma2,sigma_mu2\n";
        for (double v : grid(opt.from.value_or(0), opt.to.value_or(0.99), opt.step)) {
            const double sigma_mu2 = v * opt.total_variance;
            const double sigma2 = opt.total_variance - sigma_mu2;
            const auto pop =
                ManovaPopulation::compound_symmetric(opt.dimension, sigma2, sigma_mu2, opt.rho);
            out << number(v) << ',' << number(discr_approx_manova(pop)) << ',' << opt.dimension
                << ',' << number(opt.rho) << ',' << number(sigma2) << ',' << number(sigma_mu2)
                << '\n';
        }
    } else if (opt.curve == "bounds") {
        const double h1 = opt.dispersion.value_or(opt.h1);
        const double h2 = opt.dispersion.value_or(opt.h2);
        out << "trace_icc,lower,upper,h1,h2\n";
        for (double v : grid(opt.from.value_or(0), opt.to.value_or(0.99), opt.step)) {
            const auto [lo, hi] = discr_bounds(v, h1, h2);
            out << number(v) << ',' << number(lo) << ',' << number(hi) << ',' << number(h1) << ','
                << number(h2) << '\n';
        }
    } else if (opt.curve == "fingerprint") {
        if (opt.n_min < 2 || opt.n_max < opt.n_min) {
            throw Error(ErrorKind::DomainError, "n: need 2 <= n-min <= n-max");
        }
        out << "n,fingerprint,d,rho\n";
        for (std::size_t n = opt.n_min; n <= opt.n_max; ++n) {
            out << n << ',' << number(fingerprint_from_discr(opt.d, opt.rho, n)) << ','
                << number(opt.d) << ',' << number(opt.rho) << '\n';
        }
    } else {
        throw Error(ErrorKind::ConfigError,
                    "curve: expected d-icc, manova-approx, bounds or fingerprint");
    }
    // Only emit once the whole grid evaluated, so a domain error leaves
    // stdout empty.
    std::cout << out.str();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeatability statistics, permutation tests and simulations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "repeatr 0.1.0");

    EstimateOptions est;
    auto* estimate = app.add_subcommand("estimate", "Compute repeatability estimates of a panel");
    estimate->add_option("input", est.input, "Long-format CSV (subject,session,f1,...)")->required();
    estimate->add_option("--metric", est.metric, "euclidean or one-minus-pearson")
        ->capture_default_str();
    estimate->add_option("--stats", est.stats, "dhat,dtilde,drs,fingerprint,icc,i2c2,pca-icc,all")
        ->delimiter(',')
        ->capture_default_str();
    estimate->add_flag("--pca", est.pca, "Use first principal component scores for icc");
    estimate->add_option("--out", est.format, "json or csv")->capture_default_str();

    TestOptions tst;
    tst.threads = default_threads();
    auto* test = app.add_subcommand("test", "Permutation test against exchangeability");
    test->add_option("input", tst.input, "Long-format CSV")->required();
    test->add_option("--stat", tst.stat,
                     "dhat, dtilde, drs, fingerprint, icc, f, i2c2, pca-icc (optionally "
                     "with :first-last, :all-batches, :first-rest), or f-test")
        ->capture_default_str();
    test->add_option("--metric", tst.metric)->capture_default_str();
    test->add_option("-B,--replications", tst.replications, "Monte Carlo permutations")
        ->capture_default_str();
    test->add_option("--seed", tst.seed)->capture_default_str();
    test->add_option("--alpha", tst.alpha)->capture_default_str();
    test->add_option("--threads", tst.threads, "Worker threads (default: $REPEATR_THREADS)");

    SimulateOptions sim;
    sim.threads = default_threads();
    auto* simulate = app.add_subcommand("simulate", "Run a power experiment from a config file");
    simulate->add_option("config", sim.config, "key = value experiment config")->required();
    simulate->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
    simulate->add_option("--threads", sim.threads, "Worker threads (default: $REPEATR_THREADS)");

    TheoryOptions th;
    auto* theory = app.add_subcommand("theory", "Evaluate population curves as CSV");
    theory->add_option("--curve", th.curve, "d-icc, manova-approx, bounds or fingerprint")
        ->capture_default_str();
    theory->add_option("--from", th.from, "Grid start");
    theory->add_option("--to", th.to, "Grid end");
    theory->add_option("--step", th.step)->capture_default_str();
    theory->add_option("--dimension,-l", th.dimension)->capture_default_str();
    theory->add_option("--rho", th.rho)->capture_default_str();
    theory->add_option("--total-variance", th.total_variance, "sigma2 + sigma_mu2")
        ->capture_default_str();
    theory->add_option("--h1", th.h1)->capture_default_str();
    theory->add_option("--h2", th.h2)->capture_default_str();
    theory->add_option("--dispersion", th.dispersion, "Sets h1 = h2");
    theory->add_option("--d", th.d, "Discriminability for the fingerprint curve")
        ->capture_default_str();
    theory->add_option("--n-min", th.n_min)->capture_default_str();
    theory->add_option("--n-max", th.n_max)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what(), kExitValidation);
    }

    try {
        if (*estimate) return cmd_estimate(est);
        if (*test) return cmd_test(tst);
        if (*simulate) return cmd_simulate(sim);
        return cmd_theory(th);
    } catch (const Error& e) {
        return report_error(std::string(to_string(e.kind())), e.what(),
                            is_validation_error(e.kind()) ? kExitValidation : kExitCompute);
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what(), kExitCompute);
    }
}
