#include "folia/report.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace folia {

void CheckReport::add(std::string law, std::string subject, bool pass, std::string detail) {
  rows.push_back({std::move(law), std::move(subject), pass, std::move(detail)});
}

void CheckReport::merge(const CheckReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

bool CheckReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

size_t CheckReport::failures() const {
  size_t k = 0;
  for (const auto& r : rows)
    if (!r.pass) ++k;
  return k;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {
std::string csv_escape(const std::string& s) {
  bool needs_quote = s.find_first_of(",\"\n") != std::string::npos;
  if (!needs_quote) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += "\"";
  return out;
}
}  // namespace

void write_csv(const CheckReport& report, std::ostream& out) {
  out << "suite,model,law,subject,pass,detail\n";
  for (const auto& r : report.rows) {
    out << csv_escape(report.suite) << ',' << csv_escape(report.model) << ','
        << csv_escape(r.law) << ',' << csv_escape(r.subject) << ','
        << (r.pass ? "pass" : "FAIL") << ',' << csv_escape(r.detail) << '\n';
  }
}

std::string to_json_string(const CheckReport& report) {
  nlohmann::json j;
  j["suite"] = report.suite;
  j["model"] = report.model;
  j["all_pass"] = report.all_pass();
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    j["rows"].push_back({{"law", r.law},
                         {"subject", r.subject},
                         {"pass", r.pass},
                         {"detail", r.detail}});
  }
  return j.dump(2);
}

}  // namespace folia
