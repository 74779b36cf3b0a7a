#pragma once

#include <string>
#include <vector>

namespace coklab {

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<std::string> suites;  // suites that ran
    std::vector<CheckResult> checks;
    long failures = 0;
};

std::vector<std::string> verify_suite_names();

// Runs the named suite, or every suite for "all" / "". Unknown selectors
// throw std::invalid_argument.
VerifyReport run_verify_suite(const std::string& selector = "all");

// Serialized JSON with the documented stable key order.
std::string verify_json(const VerifyReport& rep);

}  // namespace coklab
