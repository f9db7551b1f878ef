#include "levy/app/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace levy::app {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(std::string_view s, std::size_t line) {
    s = trim(s);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        fail(line, "expected a number, got '" + std::string(s) + "'");
    return x;
}

std::uint64_t parse_uint(std::string_view s, std::size_t line) {
    s = trim(s);
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        fail(line, "expected a nonnegative integer, got '" + std::string(s) + "'");
    return x;
}

bool parse_bool(std::string_view s, std::size_t line) {
    s = trim(s);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    fail(line, "expected true or false, got '" + std::string(s) + "'");
}

std::vector<double> parse_row(std::string_view s, std::size_t line) {
    std::vector<double> row;
    std::string buf(s);
    for (char& ch : buf)
        if (ch == ',') ch = ' ';
    std::istringstream in(buf);
    std::string tok;
    while (in >> tok) row.push_back(parse_double(tok, line));
    return row;
}

Matrix parse_matrix(std::string_view s, std::size_t line) {
    std::vector<std::vector<double>> rows;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(';', start);
        const auto part = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        auto row = parse_row(part, line);
        if (!row.empty()) rows.push_back(std::move(row));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    if (rows.empty()) fail(line, "empty matrix");
    const auto cols = rows.front().size();
    if (rows.size() > static_cast<std::size_t>(kMaxDim) || cols > static_cast<std::size_t>(kMaxDim))
        fail(line, "matrix larger than " + std::to_string(kMaxDim) + " x " + std::to_string(kMaxDim));
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) fail(line, "ragged matrix rows");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Vector parse_vector(std::string_view s, std::size_t line) {
    const auto row = parse_row(s, line);
    if (row.empty()) fail(line, "empty vector");
    if (row.size() > static_cast<std::size_t>(kMaxDim)) fail(line, "vector too long");
    Vector v(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) v(static_cast<Eigen::Index>(i)) = row[i];
    return v;
}

ApproximationCase parse_case(std::string_view s, std::size_t line) {
    s = trim(s);
    if (s == "truncated") return ApproximationCase::TruncatedOnly;
    if (s == "full") return ApproximationCase::FullGaussianResidual;
    if (s == "partial") return ApproximationCase::PartialGaussianResidual;
    fail(line, "case must be truncated, full or partial");
}

Mode parse_mode(std::string_view s, std::size_t line) {
    s = trim(s);
    if (s == "simulate") return Mode::Simulate;
    if (s == "filter") return Mode::Filter;
    if (s == "validate") return Mode::Validate;
    fail(line, "mode must be simulate, filter or validate");
}

std::string format_vector(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += format_double(v(i));
    }
    return out;
}

std::string format_matrix(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) out += "; ";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += format_double(m(i, j));
        }
    }
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Simulate: return "simulate";
        case Mode::Filter: return "filter";
        case Mode::Validate: return "validate";
    }
    return "?";
}

std::string_view to_string(ApproximationCase approx) {
    switch (approx) {
        case ApproximationCase::TruncatedOnly: return "truncated";
        case ApproximationCase::FullGaussianResidual: return "full";
        case ApproximationCase::PartialGaussianResidual: return "partial";
    }
    return "?";
}

int RunConfig::state_dim() const { return model.theta ? 2 : static_cast<int>(model.h.size()); }

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    bool saw_theta = false, saw_a = false, saw_h = false;

    using Setter = std::function<void(std::string_view, std::size_t)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"mode", [&](auto v, auto l) { cfg.mode = parse_mode(v, l); }},
        {"seed", [&](auto v, auto l) { cfg.seed = parse_uint(v, l); }},
        {"model.alpha", [&](auto v, auto l) { cfg.model.alpha = parse_double(v, l); }},
        {"model.mu_w", [&](auto v, auto l) { cfg.model.mu_w = parse_double(v, l); }},
        {"model.sigma_w", [&](auto v, auto l) { cfg.model.sigma_w = parse_double(v, l); }},
        {"model.c", [&](auto v, auto l) { cfg.model.c = parse_double(v, l); }},
        {"model.case", [&](auto v, auto l) { cfg.model.approx = parse_case(v, l); }},
        {"model.theta", [&](auto v, auto l) { cfg.model.theta = parse_double(v, l); saw_theta = true; }},
        {"model.a", [&](auto v, auto l) { cfg.model.a = parse_matrix(v, l); saw_a = true; }},
        {"model.h", [&](auto v, auto l) { cfg.model.h = parse_vector(v, l); saw_h = true; }},
        {"observation.h", [&](auto v, auto l) { cfg.observation.h = parse_matrix(v, l); }},
        {"observation.kappa_v",
         [&](auto v, auto l) { cfg.observation.kappa_v = parse_matrix(v, l); }},
        {"prior.alpha_w", [&](auto v, auto l) { cfg.prior.alpha_w = parse_double(v, l); }},
        {"prior.beta_w", [&](auto v, auto l) { cfg.prior.beta_w = parse_double(v, l); }},
        {"prior.kappa_w", [&](auto v, auto l) { cfg.prior.kappa_w = parse_double(v, l); }},
        {"prior.mu_prior_mean", [&](auto v, auto l) { cfg.prior.mu_prior_mean = parse_double(v, l); }},
        {"prior.x0", [&](auto v, auto l) { cfg.prior.x0 = parse_vector(v, l); }},
        {"prior.kappa_x0", [&](auto v, auto l) { cfg.prior.kappa_x0 = parse_double(v, l); }},
        {"smc.particles", [&](auto v, auto l) { cfg.smc.particles = parse_uint(v, l); }},
        {"smc.threshold", [&](auto v, auto l) { cfg.smc.threshold = parse_double(v, l); }},
        {"smc.marginalize", [&](auto v, auto l) { cfg.smc.marginalize = parse_bool(v, l); }},
        {"smc.threads", [&](auto v, auto l) { cfg.smc.threads = static_cast<unsigned>(parse_uint(v, l)); }},
        {"smc.t0", [&](auto v, auto l) { cfg.smc.t0 = parse_double(v, l); }},
        {"simulate.t_end", [&](auto v, auto l) { cfg.simulate.t_end = parse_double(v, l); }},
        {"simulate.steps", [&](auto v, auto l) { cfg.simulate.steps = parse_uint(v, l); }},
        {"simulate.irregular", [&](auto v, auto l) { cfg.simulate.irregular = parse_bool(v, l); }},
        {"simulate.x0", [&](auto v, auto l) { cfg.simulate.x0 = parse_vector(v, l); }},
        {"simulate.explicit_marks", [&](auto v, auto l) { cfg.simulate.explicit_marks = parse_bool(v, l); }},
        {"io.data", [&](auto v, auto) { cfg.io.data = std::string(trim(v)); }},
        {"io.out", [&](auto v, auto) { cfg.io.out = std::string(trim(v)); }},
    };
    static const std::set<std::string, std::less<>> sections = {"", "model", "observation", "prior",
                                                                "smc", "simulate", "io"};

    std::string section;
    bool skipping = false;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            skipping = name == "result";
            if (!skipping && !sections.contains(name)) fail(line_no, "unknown section [" + std::string(name) + "]");
            section = std::string(name);
            continue;
        }
        if (skipping) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        const auto key = std::string(trim(line.substr(0, eq)));
        const auto full = section.empty() ? key : section + "." + key;
        const auto it = setters.find(full);
        if (it == setters.end()) fail(line_no, "unknown key '" + full + "'");
        if (!seen.insert(full).second) fail(line_no, "duplicate key '" + full + "'");
        it->second(line.substr(eq + 1), line_no);
    }

    if (saw_theta && (saw_a || saw_h)) throw ConfigError("config: give either model.theta or model.a and model.h");
    if (saw_a != saw_h) throw ConfigError("config: model.a and model.h must be given together");
    if (saw_a) cfg.model.theta.reset();
    finalize(cfg);
    return cfg;
}

void finalize(RunConfig& cfg) {
    try {
        const SystemMatrices sys = system_matrices(cfg);
        const int p = sys.dim();
        (void)stable_params(cfg);
        if (cfg.observation.h.size() == 0) {
            cfg.observation.h = Matrix::Zero(1, p + 1);
            cfg.observation.h(0, 0) = 1.0;
        }
        const auto m = cfg.observation.h.rows();
        if (cfg.observation.kappa_v.size() == 0) cfg.observation.kappa_v = 0.01 * Matrix::Identity(m, m);
        if (cfg.observation.kappa_v.size() == 1 && m > 1)
            cfg.observation.kappa_v = cfg.observation.kappa_v(0, 0) * Matrix::Identity(m, m);
        ObservationModel{cfg.observation.h, cfg.observation.kappa_v}.validate(sys.dim() + 1);
        if (cfg.prior.x0.size() == 0) cfg.prior.x0 = Vector::Zero(p);
        if (cfg.simulate.x0.size() == 0) cfg.simulate.x0 = Vector::Zero(p);
        if (cfg.prior.x0.size() != p) throw ConfigError("config: prior.x0 has wrong dimension");
        if (cfg.simulate.x0.size() != p) throw ConfigError("config: simulate.x0 has wrong dimension");
        if (!(cfg.simulate.t_end > 0.0)) throw ConfigError("config: simulate.t_end must be positive");
        if (cfg.simulate.steps < 1) throw ConfigError("config: simulate.steps must be at least 1");
        IGPrior{cfg.prior.alpha_w, cfg.prior.beta_w, cfg.prior.kappa_w}.validate();
        if (!(cfg.prior.kappa_x0 >= 0.0)) throw ConfigError("config: prior.kappa_x0 must be nonnegative");
        if (cfg.smc.particles < 2) throw ConfigError("config: smc.particles must be at least 2");
        if (!(cfg.smc.threshold > 0.0 && cfg.smc.threshold <= 1.0))
            throw ConfigError("config: smc.threshold must lie in (0, 1]");
        if (cfg.smc.threads < 1) throw ConfigError("config: smc.threads must be at least 1");
        if (cfg.mode == Mode::Filter) filter_config(cfg).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    auto kv = [&](std::string_view k, const std::string& v) { out << k << " = " << v << '\n'; };
    kv("mode", std::string(to_string(c.mode)));
    kv("seed", std::to_string(c.seed));
    out << "\n[model]\n";
    kv("alpha", format_double(c.model.alpha));
    kv("mu_w", format_double(c.model.mu_w));
    kv("sigma_w", format_double(c.model.sigma_w));
    kv("c", format_double(c.model.c));
    kv("case", std::string(to_string(c.model.approx)));
    if (c.model.theta) {
        kv("theta", format_double(*c.model.theta));
    } else {
        kv("a", format_matrix(c.model.a));
        kv("h", format_vector(c.model.h));
    }
    out << "\n[observation]\n";
    kv("h", format_matrix(c.observation.h));
    kv("kappa_v", format_matrix(c.observation.kappa_v));
    out << "\n[prior]\n";
    kv("alpha_w", format_double(c.prior.alpha_w));
    kv("beta_w", format_double(c.prior.beta_w));
    kv("kappa_w", format_double(c.prior.kappa_w));
    kv("mu_prior_mean", format_double(c.prior.mu_prior_mean));
    kv("x0", format_vector(c.prior.x0));
    kv("kappa_x0", format_double(c.prior.kappa_x0));
    out << "\n[smc]\n";
    kv("particles", std::to_string(c.smc.particles));
    kv("threshold", format_double(c.smc.threshold));
    kv("marginalize", c.smc.marginalize ? "true" : "false");
    kv("threads", std::to_string(c.smc.threads));
    if (c.smc.t0) kv("t0", format_double(*c.smc.t0));
    out << "\n[simulate]\n";
    kv("t_end", format_double(c.simulate.t_end));
    kv("steps", std::to_string(c.simulate.steps));
    kv("irregular", c.simulate.irregular ? "true" : "false");
    kv("x0", format_vector(c.simulate.x0));
    kv("explicit_marks", c.simulate.explicit_marks ? "true" : "false");
    out << "\n[io]\n";
    kv("data", c.io.data);
    kv("out", c.io.out);
    return out.str();
}

StableParams stable_params(const RunConfig& c) {
    return {c.model.alpha, c.model.mu_w, c.model.sigma_w, c.model.c};
}

SystemMatrices system_matrices(const RunConfig& c) {
    if (c.model.theta) return SystemMatrices::langevin(LangevinParams{*c.model.theta});
    return SystemMatrices::general(c.model.a, c.model.h);
}

FilterConfig filter_config(const RunConfig& c) {
    FilterConfig f;
    f.n_particles = c.smc.particles;
    f.approx = c.model.approx;
    f.resample_threshold = c.smc.threshold;
    f.params = stable_params(c);
    f.sys = system_matrices(c);
    f.obs = {c.observation.h, c.observation.kappa_v};
    f.prior = {c.prior.alpha_w, c.prior.beta_w, c.prior.kappa_w};
    f.mu_prior_mean = c.prior.mu_prior_mean;
    f.x0 = c.prior.x0;
    f.kappa_x0 = c.prior.kappa_x0;
    f.marginalize = c.smc.marginalize;
    f.t0 = c.smc.t0;
    f.seed = c.seed;
    f.threads = c.smc.threads;
    return f;
}

}  // namespace levy::app
