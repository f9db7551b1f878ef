#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "levy/app/config.hpp"
#include "levy/app/ticks.hpp"

namespace levy::app {

/// Output files sit next to io.out: the main CSV at io.out itself, with
/// sidecars sharing its stem.
struct OutputPaths {
    std::filesystem::path main;
    std::filesystem::path observations;  ///< simulate only: <stem>.obs.csv
    std::filesystem::path sigma2;        ///< filter only: <stem>.sigma2.csv
    std::filesystem::path sidecar;       ///< <stem>.meta
};

OutputPaths output_paths(const std::filesystem::path& out);

std::vector<std::string> state_names(const RunConfig& config);

struct SimulateResult {
    OutputPaths paths;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> observations;
};

/// Forward-simulate a skeleton and noisy observations of it. Writes
/// time,<state names> to io.out, time,value (or time,y1..yM) observations and
/// a sidecar holding the full configuration.
SimulateResult cmd_simulate(const RunConfig& config);

struct FilterRunResult {
    OutputPaths paths;
    FilterOutput output;
};

std::vector<Observation> observations_from_ticks(const TickSeries& ticks);

/// Run the marginal particle filter over the ticks and write per-time
/// summaries, the sigma_W^2 posterior mixture and a sidecar with the
/// configuration plus a [result] section.
FilterRunResult cmd_filter(const RunConfig& config, const TickSeries& data);

}  // namespace levy::app
