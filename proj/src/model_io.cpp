#include "folia/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace folia {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("model file: " + what);
}

Rational parse_rational(const json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    try {
      return Rational(j.get<std::string>());
    } catch (const std::exception&) {
      fail("bad rational literal '" + j.get<std::string>() + "'");
    }
  }
  fail("rational coefficients must be integers or strings like \"1/2\"");
}

std::string rational_str(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

LieFrameModel parse_frame(const json& j) {
  const int n = j.at("n").get<int>();
  const int p = j.at("p").get<int>();
  if (n <= 0 || p < 0 || p > n) fail("frame model needs 0 <= p <= n, n > 0");
  Tensor3<Rational> c(n);
  for (const auto& b : j.value("brackets", json::array())) {
    if (!b.is_array() || b.size() != 4) fail("each bracket must be [a, b, k, coeff]");
    const int a = b[0].get<int>(), bb = b[1].get<int>(), k = b[2].get<int>();
    for (int idx : {a, bb, k})
      if (idx < 0 || idx >= n) fail("bracket index out of range");
    if (a == bb) fail("bracket [a, a, k] is identically zero");
    const Rational coeff = parse_rational(b[3]);
    c(a, bb, k) = coeff;
    c(bb, a, k) = -coeff;
  }
  return LieFrameModel::make(n, p, std::move(c), j.value("name", std::string()));
}

TransverseSplit parse_split(const json& j) {
  TransverseSplit s;
  s.first = j.at("first").get<std::vector<int>>();
  s.second = j.at("second").get<std::vector<int>>();
  return s;
}

std::vector<TrigPolyField> parse_metric_block(const json& j, int dim, int nvars,
                                              const char* label) {
  std::vector<TrigPolyField> block(static_cast<size_t>(dim) * dim,
                                   TrigPolyField(nvars));
  if (j.is_string()) {
    if (j.get<std::string>() != "identity") fail(std::string(label) + ": unknown block literal");
    for (int i = 0; i < dim; ++i)
      block[static_cast<size_t>(i) * dim + i] = TrigPolyField::constant(nvars, 1.0);
    return block;
  }
  if (!j.is_array()) fail(std::string(label) + ": expected \"identity\" or an entry list");
  for (const auto& e : j) {
    const int i = e.at("i").get<int>(), jj = e.at("j").get<int>();
    if (i < 0 || jj < 0 || i >= dim || jj >= dim || i > jj)
      fail(std::string(label) + ": entries must have 0 <= i <= j < block dim");
    TrigPolyField f(nvars);
    for (const auto& t : e.at("terms")) {
      auto freq = t.at("freq").get<std::vector<int>>();
      if (static_cast<int>(freq.size()) != nvars)
        fail(std::string(label) + ": frequency length must equal n");
      if (t.contains("cos")) f.add_cos(freq, t["cos"].get<double>());
      if (t.contains("sin")) f.add_sin(freq, t["sin"].get<double>());
    }
    block[static_cast<size_t>(i) * dim + jj] = f;
    block[static_cast<size_t>(jj) * dim + i] = f;
  }
  return block;
}

CoordFoliatedTorus parse_torus(const json& j) {
  CoordFoliatedTorus m;
  m.p = j.at("p").get<int>();
  m.q = j.at("q").get<int>();
  if (m.p <= 0 || m.q <= 0) fail("torus model needs p >= 1 and q >= 1");
  m.epsilon = j.value("epsilon", 1.0);
  m.name = j.value("name", std::string());
  m.gf = parse_metric_block(j.at("gf"), m.p, m.n(), "gf");
  m.gp = parse_metric_block(j.at("gp"), m.q, m.n(), "gp");
  return m;
}

PhiBundleSpec parse_phi(const json& j) {
  PhiBundleSpec phi;
  for (const auto& t : j) {
    const std::string kind = t.at("kind").get<std::string>();
    PhiTerm term;
    if (kind == "sym")
      term.symmetric = true;
    else if (kind != "ext")
      fail("phi summand kind must be \"ext\" or \"sym\"");
    term.k = t.at("k").get<int>();
    term.multiplicity = t.value("multiplicity", 1);
    if (term.k < 0 || term.multiplicity <= 0) fail("phi summand needs k >= 0, multiplicity >= 1");
    phi.terms.push_back(term);
  }
  if (phi.terms.empty()) fail("phi list must not be empty when present");
  return phi;
}

json metric_block_json(const std::vector<TrigPolyField>& block, int dim) {
  bool ident = true;
  for (int i = 0; i < dim && ident; ++i)
    for (int jj = 0; jj < dim && ident; ++jj) {
      const auto terms = block[static_cast<size_t>(i) * dim + jj].terms();
      if (i == jj) {
        ident = terms.size() == 1 && terms[0].sin_coeff == 0 && terms[0].cos_coeff == 1.0 &&
                std::all_of(terms[0].freq.begin(), terms[0].freq.end(),
                            [](int f) { return f == 0; });
      } else {
        ident = terms.empty();
      }
    }
  if (ident) return json("identity");
  json out = json::array();
  for (int i = 0; i < dim; ++i)
    for (int jj = i; jj < dim; ++jj) {
      const auto terms = block[static_cast<size_t>(i) * dim + jj].terms();
      if (terms.empty()) continue;
      json entry{{"i", i}, {"j", jj}, {"terms", json::array()}};
      for (const auto& t : terms) {
        json term{{"freq", t.freq}};
        if (t.cos_coeff != 0) term["cos"] = t.cos_coeff;
        if (t.sin_coeff != 0) term["sin"] = t.sin_coeff;
        entry["terms"].push_back(term);
      }
      out.push_back(entry);
    }
  return out;
}

}  // namespace

ModelFile parse_model_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  ModelFile m;
  m.kind = j.at("kind").get<std::string>();
  try {
    if (m.kind == "frame") {
      m.frame = parse_frame(j);
      if (j.contains("split")) m.split = parse_split(j["split"]);
    } else if (m.kind == "torus") {
      m.torus = parse_torus(j);
      if (j.contains("phi")) m.phi = parse_phi(j["phi"]);
    } else {
      fail("kind must be \"frame\" or \"torus\"");
    }
  } catch (const json::exception& e) {
    fail(std::string("missing or mistyped field: ") + e.what());
  }
  return m;
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str());
}

std::string model_file_to_json(const ModelFile& m) {
  json j;
  j["kind"] = m.kind;
  if (m.kind == "frame") {
    if (!m.frame) fail("frame model missing");
    const auto& fm = *m.frame;
    j["name"] = fm.name;
    j["n"] = fm.n;
    j["p"] = fm.p;
    json brackets = json::array();
    for (int a = 0; a < fm.n; ++a)
      for (int b = a + 1; b < fm.n; ++b)
        for (int k = 0; k < fm.n; ++k)
          if (fm.c(a, b, k) != 0)
            brackets.push_back(json::array({a, b, k, rational_str(fm.c(a, b, k))}));
    j["brackets"] = brackets;
    if (m.split) j["split"] = {{"first", m.split->first}, {"second", m.split->second}};
  } else if (m.kind == "torus") {
    if (!m.torus) fail("torus model missing");
    const auto& tm = *m.torus;
    j["name"] = tm.name;
    j["p"] = tm.p;
    j["q"] = tm.q;
    j["epsilon"] = tm.epsilon;
    j["gf"] = metric_block_json(tm.gf, tm.p);
    j["gp"] = metric_block_json(tm.gp, tm.q);
    if (!m.phi.is_trivial()) {
      json phi = json::array();
      for (const auto& t : m.phi.terms)
        phi.push_back({{"kind", t.symmetric ? "sym" : "ext"},
                       {"k", t.k},
                       {"multiplicity", t.multiplicity}});
      j["phi"] = phi;
    }
  } else {
    fail("kind must be \"frame\" or \"torus\"");
  }
  return j.dump(2) + "\n";
}

void save_model_file(const ModelFile& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << model_file_to_json(m);
}

}  // namespace folia
