#include "levy/app/ticks.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "levy/app/config.hpp"

namespace levy::app {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw DataError("line " + std::to_string(line) + ": " + msg);
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double field(std::string_view s, std::size_t line, const char* name) {
    s = strip(s);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        fail(line, std::string("non-numeric ") + name + " '" + std::string(s) + "'");
    if (!std::isfinite(x)) fail(line, std::string("non-finite ") + name);
    return x;
}

}  // namespace

TickSeries parse_ticks(std::string_view text) {
    TickSeries out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const std::string_view line = strip(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (!header) {
            if (line != "time,value") fail(line_no, "missing header 'time,value'");
            header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) fail(line_no, "expected two comma-separated fields");
        const double t = field(line.substr(0, comma), line_no, "time");
        const double v = field(line.substr(comma + 1), line_no, "value");
        if (!out.records.empty() && !(t > out.records.back().time))
            fail(line_no, "non-ascending time " + format_double(t));
        out.records.push_back({t, v});
    }
    if (!header) fail(1, "missing header 'time,value'");
    return out;
}

TickSeries load_ticks(const std::filesystem::path& path, std::string_view format) {
    if (format != "csv") throw DataError("unsupported tick format '" + std::string(format) + "'");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_ticks(ss.str());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_ticks(const TickSeries& series) {
    std::string out = "time,value\n";
    out.reserve(32 * series.size() + 16);
    char buf[64];
    for (const auto& r : series.records) {
        auto res = std::to_chars(buf, buf + sizeof buf, r.time);
        out.append(buf, res.ptr);
        out.push_back(',');
        res = std::to_chars(buf, buf + sizeof buf, r.value);
        out.append(buf, res.ptr);
        out.push_back('\n');
    }
    return out;
}

void save_ticks(const std::filesystem::path& path, const TickSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_ticks(series);
}

std::vector<double> irregular_times(double t_end, double mean_gap, Rng& rng) {
    if (!(t_end > 0.0 && mean_gap > 0.0)) throw std::invalid_argument("t_end and mean_gap must be positive");
    std::exponential_distribution<double> gap(1.0 / mean_gap);
    std::vector<double> times{0.0};
    for (double t = gap(rng); t <= t_end; t += gap(rng))
        if (t > times.back()) times.push_back(t);
    return times;
}

}  // namespace levy::app
