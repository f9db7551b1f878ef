#include "levy/app/commands.hpp"

#include <fstream>
#include <sstream>

namespace levy::app {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    return out;
}

std::filesystem::path require_out(const RunConfig& config) {
    if (config.io.out.empty()) throw ConfigError("config: io.out (or --out) is required");
    return config.io.out;
}

}  // namespace

OutputPaths output_paths(const std::filesystem::path& out) {
    const auto stem = out.parent_path() / out.stem();
    return {out, stem.string() + ".obs.csv", stem.string() + ".sigma2.csv", stem.string() + ".meta"};
}

std::vector<std::string> state_names(const RunConfig& config) {
    if (config.model.theta) return {"x", "xdot"};
    std::vector<std::string> names;
    for (int i = 0; i < config.state_dim(); ++i) names.push_back("x" + std::to_string(i + 1));
    return names;
}

SimulateResult cmd_simulate(const RunConfig& config) {
    const auto out = require_out(config);
    const StableParams params = stable_params(config);
    const SystemMatrices sys = system_matrices(config);
    const ObservationModel obs{config.observation.h, config.observation.kappa_v};

    SimulateResult res;
    res.paths = output_paths(out);
    const double t_end = config.simulate.t_end;
    const auto steps = config.simulate.steps;
    if (config.simulate.irregular) {
        Rng time_rng = make_rng(split_key(config.seed, 2));
        res.times = irregular_times(t_end, t_end / static_cast<double>(steps), time_rng);
    } else {
        res.times.resize(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k)
            res.times[k] = t_end * static_cast<double>(k) / static_cast<double>(steps);
    }

    Rng rng = make_rng(split_key(config.seed, 1));
    ForwardOptions opts;
    opts.marks = config.simulate.explicit_marks ? MarkMode::Explicit : MarkMode::Marginalised;
    res.states = forward_simulate(sys, params, config.model.approx, res.times, config.simulate.x0, rng, opts);
    Rng obs_rng = make_rng(split_key(config.seed, 3));
    res.observations = observe(res.states, params, obs, obs_rng);

    {
        auto f = open_out(res.paths.main);
        f << "time";
        for (const auto& n : state_names(config)) f << ',' << n;
        f << '\n';
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            f << format_double(res.times[i]);
            for (Eigen::Index k = 0; k < res.states[i].size(); ++k) f << ',' << format_double(res.states[i](k));
            f << '\n';
        }
    }
    {
        auto f = open_out(res.paths.observations);
        const auto m = obs.obs_dim();
        if (m == 1) {
            f << "time,value\n";
        } else {
            f << "time";
            for (int k = 0; k < m; ++k) f << ",y" << k + 1;
            f << '\n';
        }
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            f << format_double(res.times[i]);
            for (int k = 0; k < m; ++k) f << ',' << format_double(res.observations[i](k));
            f << '\n';
        }
    }
    {
        RunConfig meta = config;
        meta.mode = Mode::Simulate;
        open_out(res.paths.sidecar) << serialize_config(meta);
    }
    return res;
}

std::vector<Observation> observations_from_ticks(const TickSeries& ticks) {
    std::vector<Observation> obs;
    obs.reserve(ticks.size());
    for (const auto& t : ticks.records) {
        Vector y(1);
        y << t.value;
        obs.push_back({t.time, y});
    }
    return obs;
}

FilterRunResult cmd_filter(const RunConfig& config, const TickSeries& data) {
    const auto out = require_out(config);
    if (config.observation.h.rows() != 1)
        throw ConfigError("config: tick data is scalar, observation.h must have one row");
    FilterConfig fc = filter_config(config);
    try {
        fc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    FilterRunResult res;
    res.paths = output_paths(out);
    const auto obs = observations_from_ticks(data);
    res.output = run_filter(obs, fc);

    auto names = state_names(config);
    names.push_back("mu");
    {
        auto f = open_out(res.paths.main);
        f << "time";
        for (const auto& n : names) f << ",mean_" << n << ",q05_" << n << ",q95_" << n;
        f << ",ess,resampled\n";
        for (const auto& step : res.output.steps) {
            f << format_double(step.time);
            for (const auto& s : step.state)
                f << ',' << format_double(s.mean) << ',' << format_double(s.q05) << ',' << format_double(s.q95);
            f << ',' << format_double(step.ess) << ',' << (step.resampled ? 1 : 0) << '\n';
        }
    }
    double sigma2_mean = 0.0;
    bool mean_finite = !res.output.sigma2_mixture.empty();
    {
        auto f = open_out(res.paths.sigma2);
        f << "weight,shape,scale\n";
        for (const auto& c : res.output.sigma2_mixture) {
            f << format_double(c.weight) << ',' << format_double(c.shape) << ',' << format_double(c.scale) << '\n';
            if (c.shape > 1.0) sigma2_mean += c.weight * c.scale / (c.shape - 1.0);
            else mean_finite = false;
        }
    }
    {
        RunConfig meta = config;
        meta.mode = Mode::Filter;
        auto f = open_out(res.paths.sidecar);
        f << serialize_config(meta) << "\n[result]\n";
        f << "observations = " << res.output.steps.size() << '\n';
        f << "log_evidence = " << format_double(res.output.log_evidence) << '\n';
        if (mean_finite) f << "sigma2_posterior_mean = " << format_double(sigma2_mean) << '\n';
        f << "regularized_updates = " << res.output.regularized_updates << '\n';
    }
    return res;
}

}  // namespace levy::app
