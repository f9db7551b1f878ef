#pragma once

// Irregularly sampled scalar series stored as CSV with header "time,value".

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "levy/random.hpp"

namespace levy::app {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Tick {
    double time;   ///< seconds
    double value;
};

/// Strictly ascending times, finite values, arbitrary gaps.
struct TickSeries {
    std::vector<Tick> records;

    std::size_t size() const noexcept { return records.size(); }
};

TickSeries parse_ticks(std::string_view text);
/// Only the "csv" format is supported. Errors carry the 1-based line number.
TickSeries load_ticks(const std::filesystem::path& path, std::string_view format = "csv");

/// Shortest round-trip decimal formatting, so save -> load is bit-identical.
std::string format_ticks(const TickSeries& series);
void save_ticks(const std::filesystem::path& path, const TickSeries& series);

/// Arrival times on (0, t_end] with iid exponential gaps of the given mean,
/// starting from 0. Stands in for real tick timestamps.
std::vector<double> irregular_times(double t_end, double mean_gap, Rng& rng);

}  // namespace levy::app
