#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Check reports shared by every verification suite.  Each row names the law
// it checks (a stable slug, the traceability column), the model element it
// was evaluated on, and a human-readable witness: exact values for the exact
// suites, residual/tolerance pairs for the numeric ones.

namespace folia {

struct CheckRow {
  std::string law;
  std::string subject;
  bool pass = true;
  std::string detail;
};

struct CheckReport {
  std::string suite;
  std::string model;
  std::vector<CheckRow> rows;

  void add(std::string law, std::string subject, bool pass, std::string detail = "");
  void merge(const CheckReport& other);
  bool all_pass() const;
  size_t failures() const;
};

// fixed-format double rendering so reports are byte-identical across runs
std::string format_double(double x);

void write_csv(const CheckReport& report, std::ostream& out);
std::string to_json_string(const CheckReport& report);

}  // namespace folia
