#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "levy/app/commands.hpp"
#include "levy/validation/suites.hpp"

namespace {

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kConfig = 2,
    kData = 3,
    kFilter = 4,
    kValidation = 5,
};

struct Overrides {
    std::string config;
    std::string data;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> particles;
    std::optional<unsigned> threads;
};

levy::app::RunConfig load(const Overrides& o, levy::app::Mode mode) {
    levy::app::RunConfig cfg = o.config.empty() ? levy::app::RunConfig{} : levy::app::load_config(o.config);
    cfg.mode = mode;
    if (!o.data.empty()) cfg.io.data = o.data;
    if (!o.out.empty()) cfg.io.out = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.particles) cfg.smc.particles = *o.particles;
    if (o.threads) cfg.smc.threads = *o.threads;
    levy::app::finalize(cfg);
    return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "configuration file");
    cmd->add_option("--out", o.out, "output CSV path (sidecars share its stem)");
    cmd->add_option("--seed", o.seed, "master seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Levy-driven state space models: simulation, particle filtering and validation"};
    app.require_subcommand(1);

    Overrides o;
    auto* sim = app.add_subcommand("simulate", "forward-simulate a skeleton and noisy observations");
    add_common(sim, o);

    auto* filt = app.add_subcommand("filter", "run the marginal particle filter over a tick CSV");
    add_common(filt, o);
    filt->add_option("--data", o.data, "tick CSV with header time,value");
    filt->add_option("--particles", o.particles, "number of particles");
    filt->add_option("--threads", o.threads, "worker threads");

    std::string suite = "all";
    std::uint64_t vseed = levy::validation::ValidationOptions{}.seed;
    auto* val = app.add_subcommand("validate", "run validation suites and print a CSV report");
    val->add_option("--suite", suite, "suite name or 'all'");
    val->add_option("--seed", vseed, "seed for the Monte Carlo suites");
    val->add_option("--config", o.config, "ignored; accepted for a uniform interface");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) {
            const auto res = levy::app::cmd_simulate(load(o, levy::app::Mode::Simulate));
            std::cout << "wrote " << res.paths.main.string() << ", " << res.paths.observations.string() << ", "
                      << res.paths.sidecar.string() << '\n';
        } else if (*filt) {
            const auto cfg = load(o, levy::app::Mode::Filter);
            if (cfg.io.data.empty()) throw levy::app::ConfigError("filter needs --data or io.data");
            const auto ticks = levy::app::load_ticks(cfg.io.data);
            const auto res = levy::app::cmd_filter(cfg, ticks);
            std::cout << "log_evidence = " << levy::app::format_double(res.output.log_evidence) << '\n'
                      << "wrote " << res.paths.main.string() << ", " << res.paths.sigma2.string() << ", "
                      << res.paths.sidecar.string() << '\n';
        } else if (*val) {
            std::vector<levy::validation::CheckResult> all;
            const levy::validation::ValidationOptions opts{vseed};
            if (suite == "all") {
                for (const auto& name : levy::validation::suite_names()) {
                    auto r = levy::validation::run_suite(name, opts);
                    all.insert(all.end(), r.begin(), r.end());
                }
            } else {
                all = levy::validation::run_suite(suite, opts);
            }
            std::cout << levy::validation::format_report(all);
            for (const auto& r : all)
                if (!r.pass) return kValidation;
        }
    } catch (const levy::validation::UnknownSuite& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const levy::app::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const levy::app::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const levy::FilterFailure& e) {
        std::cerr << "filter failure: " << e.what() << '\n';
        return kFilter;
    } catch (const levy::DegenerateObservation& e) {
        std::cerr << "filter failure: " << e.what() << '\n';
        return kFilter;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}
