#pragma once

// Named validation suites. Each suite returns one CheckResult per check; the
// caller decides how to report them.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace levy::validation {

class UnknownSuite : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CheckResult {
    std::string suite;
    std::string name;
    double statistic;
    double tolerance;
    bool pass;
};

struct ValidationOptions {
    std::uint64_t seed = 20240917;
};

/// compensation, theorem2, ks, kalman, conjugacy, closed_forms, evidence,
/// filtering, determinism, cases
const std::vector<std::string>& suite_names();

/// Throws UnknownSuite (listing the valid names) for anything else.
std::vector<CheckResult> run_suite(std::string_view name, const ValidationOptions& options = {});

/// CSV with header suite,name,statistic,tolerance,pass.
std::string format_report(const std::vector<CheckResult>& results);

}  // namespace levy::validation
