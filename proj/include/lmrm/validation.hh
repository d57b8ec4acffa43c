// Apache License, Version 2.0, refer to LICENSE.txt
//
// Self-check suites behind `lmrm validate`. Each check compares a closed form
// or quadrature result with an independent reference.

#pragma once

#include <string>
#include <vector>

namespace lmrm {

struct CheckResult {
  std::string suite;
  std::string name;
  double error;      // observed discrepancy (or z-score for Monte Carlo checks)
  double tolerance;  // pass iff error <= tolerance
  bool passed;
  std::string detail;
};

std::vector<std::string> validation_suites();
bool is_validation_suite(const std::string& name);

// Runs one suite ("levy", "eppf", "gradients" or "oracle").
std::vector<CheckResult> run_validation_suite(const std::string& name);

std::string format_check_report(const std::vector<CheckResult>& checks);

}  // namespace lmrm
