#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace opnc {

enum class Fault { None, Table1, Bout };
Fault parse_fault(const std::string& s);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the invariant suite. A fault mutates one protocol constant before the
// checks that depend on it.
std::vector<CheckResult> run_verify(Fault fault = Fault::None, std::uint64_t seed = 1);

// "check,status,detail" rows.
void print_report(std::ostream& os, const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace opnc
