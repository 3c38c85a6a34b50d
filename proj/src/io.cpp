#include "rwlab/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace rwlab {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- readers

const Json& need(const Json& o, const std::string& key, const std::string& at) {
  if (!o.contains(key)) throw ConfigError(at + "/" + key, "is required");
  return o.at(key);
}

void check_object(const Json& o, const std::set<std::string>& allowed, const std::string& at) {
  if (!o.is_object()) throw ConfigError(at, "must be an object");
  for (const auto& [k, v] : o.items())
    if (!allowed.count(k)) throw ConfigError(at + "/" + k, "unknown key");
}

double get_num(const Json& v, const std::string& at) {
  if (!v.is_number()) throw ConfigError(at, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(at, "must be finite");
  return x;
}

std::int64_t get_int(const Json& v, const std::string& at) {
  if (!v.is_number_integer()) throw ConfigError(at, "must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    throw ConfigError(at, "out of range");
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const Json& v, const std::string& at) {
  if (!v.is_number_integer()) throw ConfigError(at, "must be a nonnegative integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto x = v.get<std::int64_t>();
  if (x < 0) throw ConfigError(at, "must be a nonnegative integer");
  return static_cast<std::uint64_t>(x);
}

std::size_t get_count(const Json& v, const std::string& at) { return static_cast<std::size_t>(get_u64(v, at)); }

std::string get_str(const Json& v, const std::string& at) {
  if (!v.is_string()) throw ConfigError(at, "must be a string");
  return v.get<std::string>();
}

bool get_bool(const Json& v, const std::string& at) {
  if (!v.is_boolean()) throw ConfigError(at, "must be a boolean");
  return v.get<bool>();
}

const Json& get_array(const Json& v, const std::string& at) {
  if (!v.is_array()) throw ConfigError(at, "must be an array");
  return v;
}

std::vector<double> get_num_list(const Json& v, const std::string& at) {
  std::vector<double> out;
  for (std::size_t i = 0; i < get_array(v, at).size(); ++i) out.push_back(get_num(v[i], at + "/" + std::to_string(i)));
  return out;
}

IntVec get_int_list(const Json& v, const std::string& at) {
  IntVec out;
  for (std::size_t i = 0; i < get_array(v, at).size(); ++i) out.push_back(get_int(v[i], at + "/" + std::to_string(i)));
  return out;
}

Exponent get_exponent(const Json& v, const std::string& at) {
  const IntVec e = get_int_list(v, at);
  if (e.size() != 2) throw ConfigError(at, "must have two entries");
  return {e[0], e[1]};
}

std::vector<std::vector<long>> get_rows(const Json& v, const std::string& at) {
  std::vector<std::vector<long>> rows;
  for (std::size_t i = 0; i < get_array(v, at).size(); ++i) {
    const IntVec r = get_int_list(v[i], at + "/" + std::to_string(i));
    rows.emplace_back(r.begin(), r.end());
  }
  if (rows.empty()) throw ConfigError(at, "must be a nonempty matrix");
  for (const auto& r : rows)
    if (r.size() != rows.size()) throw ConfigError(at, "must be square");
  return rows;
}

Json rows_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (!m(i, j).fits_slong_p()) throw InvalidArgument("pair_to_json: entry exceeds 64 bits");
      r.push_back(m(i, j).get_si());
    }
    rows.push_back(r);
  }
  return rows;
}

std::string part_name(FieldPart p) {
  switch (p) {
    case FieldPart::Whole: return "whole";
    case FieldPart::Bounded: return "bounded";
    case FieldPart::Tail: return "tail";
  }
  return "whole";
}

IidSpec iid_from_json(const Json& j, const std::string& at) {
  check_object(j, {"kind", "law", "level", "part", "cut"}, at);
  IidSpec s;
  try {
    s.law = base_law_from_string(get_str(need(j, "law", at), at + "/law"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(at + "/law", e.what());
  }
  if (j.contains("level")) s.level = get_num(j["level"], at + "/level");
  if (s.law == BaseLaw::TruncatedGaussian && !(s.level > 0.0)) throw ConfigError(at + "/level", "must be positive");
  if (j.contains("part")) {
    const std::string p = get_str(j["part"], at + "/part");
    if (p == "whole") s.part = FieldPart::Whole;
    else if (p == "bounded") s.part = FieldPart::Bounded;
    else if (p == "tail") s.part = FieldPart::Tail;
    else throw ConfigError(at + "/part", "must be whole, bounded or tail");
  }
  if (j.contains("cut")) s.cut = get_num(j["cut"], at + "/cut");
  return s;
}

Json iid_json(const IidSpec& s) {
  return {{"kind", "iid"}, {"law", to_string(s.law)}, {"level", s.level}, {"part", part_name(s.part)}, {"cut", s.cut}};
}

}  // namespace

// ---------------------------------------------------------------- configs

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"fclt",   "variance_ladder", "variance_lln", "orthogonality",
                                             "erdos_taylor", "newman_wright", "moricz", "tightness",
                                             "transient_variance", "truncation_ladder"};
  return k;
}

Json law_to_json(const IncrementLaw& law) {
  Json atoms = Json::array();
  for (const auto& a : law.atoms()) atoms.push_back({{"site", a.site}, {"prob", a.prob}});
  return {{"dimension", law.dimension()}, {"atoms", atoms}};
}

IncrementLaw law_from_json(const Json& j, const std::string& at) {
  check_object(j, {"preset", "dimension", "atoms"}, at);
  const std::size_t d = get_count(need(j, "dimension", at), at + "/dimension");
  if (d == 0 || d > 4) throw ConfigError(at + "/dimension", "must be in [1, 4]");
  try {
    if (j.contains("preset")) {
      if (j.contains("atoms")) throw ConfigError(at, "give either preset or atoms");
      const std::string p = get_str(j["preset"], at + "/preset");
      if (p == "simple") return IncrementLaw::simple(d);
      if (p == "lazy") return IncrementLaw::lazy(d);
      throw ConfigError(at + "/preset", "must be simple or lazy");
    }
    const Json& atoms = get_array(need(j, "atoms", at), at + "/atoms");
    std::vector<Atom> out;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string ai = at + "/atoms/" + std::to_string(i);
      check_object(atoms[i], {"site", "prob"}, ai);
      Atom a{get_int_list(need(atoms[i], "site", ai), ai + "/site"), get_num(need(atoms[i], "prob", ai), ai + "/prob")};
      if (a.site.size() != d) throw ConfigError(ai + "/site", "dimension mismatch");
      out.push_back(std::move(a));
    }
    return IncrementLaw(d, std::move(out));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(at, e.what());
  }
}

Json pair_to_json(const MatrixPair& p) { return {{"a1", rows_json(p.a1())}, {"a2", rows_json(p.a2())}}; }

MatrixPair pair_from_json(const Json& j, const std::string& at) {
  check_object(j, {"a1", "a2", "name"}, at);
  const auto a1 = get_rows(need(j, "a1", at), at + "/a1");
  const auto a2 = get_rows(need(j, "a2", at), at + "/a2");
  try {
    return MatrixPair(IntMatrix::from_rows(a1), IntMatrix::from_rows(a2));
  } catch (const InvalidArgument& e) {
    throw ConfigError(at, e.what());
  }
}

Json scenery_to_json(const SceneryModel& s) {
  if (const auto* iid = std::get_if<IidSpec>(&s)) return iid_json(*iid);
  if (const auto* ma = std::get_if<MovingAverageSpec>(&s)) {
    Json co = Json::array();
    for (const auto& [q, a] : ma->coefficients) co.push_back({{"q", {q[0], q[1]}}, {"a", a}});
    return {{"kind", "moving_average"}, {"base", iid_json(ma->base)}, {"coefficients", co}};
  }
  const auto& t = std::get<ToralSpec>(s);
  Json f = Json::array();
  for (const auto& [k, c] : t.f.coefficients()) f.push_back({k, c.real(), c.imag()});
  return {{"kind", "toral"}, {"pair", pair_to_json(*t.pair)}, {"f", f}, {"modulus", t.modulus}};
}

SceneryModel scenery_from_json(const Json& j, const fs::path& base_dir, const std::string& at) {
  if (!j.is_object()) throw ConfigError(at, "must be an object");
  const std::string kind = get_str(need(j, "kind", at), at + "/kind");
  if (kind == "iid") return iid_from_json(j, at);
  if (kind == "moving_average") {
    check_object(j, {"kind", "base", "coefficients"}, at);
    MovingAverageSpec ma;
    ma.base = iid_from_json(need(j, "base", at), at + "/base");
    const Json& co = get_array(need(j, "coefficients", at), at + "/coefficients");
    if (co.empty()) throw ConfigError(at + "/coefficients", "must be nonempty");
    for (std::size_t i = 0; i < co.size(); ++i) {
      const std::string ci = at + "/coefficients/" + std::to_string(i);
      check_object(co[i], {"q", "a"}, ci);
      const Exponent q = get_exponent(need(co[i], "q", ci), ci + "/q");
      if (ma.coefficients.count(q)) throw ConfigError(ci + "/q", "duplicate offset");
      ma.coefficients[q] = get_num(need(co[i], "a", ci), ci + "/a");
    }
    return ma;
  }
  if (kind == "toral") {
    check_object(j, {"kind", "pair", "pair_file", "f", "modulus"}, at);
    std::shared_ptr<const MatrixPair> pair;
    if (j.contains("pair") == j.contains("pair_file")) throw ConfigError(at, "give exactly one of pair and pair_file");
    if (j.contains("pair")) {
      pair = std::make_shared<const MatrixPair>(pair_from_json(j["pair"], at + "/pair"));
    } else {
      fs::path file = get_str(j["pair_file"], at + "/pair_file");
      if (file.is_relative()) file = base_dir / file;
      std::ifstream in(file);
      if (!in) throw ConfigError(at + "/pair_file", "cannot open " + file.string());
      std::stringstream ss;
      ss << in.rdbuf();
      pair = std::make_shared<const MatrixPair>(pair_from_json(parse_json_text(ss.str()), at + "/pair_file"));
    }
    const Json& f = get_array(need(j, "f", at), at + "/f");
    TrigPolynomial::Coefficients coef;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::string fi = at + "/f/" + std::to_string(i);
      if (!f[i].is_array() || f[i].size() != 3) throw ConfigError(fi, "must be [k-vector, re, im]");
      const IntVec k = get_int_list(f[i][0], fi + "/0");
      if (coef.count(k)) throw ConfigError(fi + "/0", "duplicate frequency");
      coef[k] = {get_num(f[i][1], fi + "/1"), get_num(f[i][2], fi + "/2")};
    }
    ToralSpec t{pair, [&] {
                  try {
                    return TrigPolynomial(pair->rho(), coef);
                  } catch (const InvalidArgument& e) {
                    throw ConfigError(at + "/f", e.what());
                  }
                }()};
    if (j.contains("modulus")) t.modulus = get_u64(j["modulus"], at + "/modulus");
    if (t.modulus < 3 || t.modulus >= (std::uint64_t{1} << 62) || !is_probable_prime(t.modulus))
      throw ConfigError(at + "/modulus", "must be a prime below 2^62");
    return t;
  }
  throw ConfigError(at + "/kind", "must be iid, moving_average or toral");
}

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "line " + std::to_string(line) + ", column " + std::to_string(col) + ": JSON syntax error");
  }
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  check_object(j, {"experiment", "walk", "scenery", "n", "t_grid", "m_sceneries", "n_omegas", "seed", "threads",
                   "empirical_c0", "tolerance", "n_ladder", "p_set", "windows", "lambda_grid", "delta_ladder",
                   "epsilon", "stride", "k_max", "g0", "g0_coef", "radii", "description"},
               "");
  ExperimentConfig c;
  c.experiment = get_str(need(j, "experiment", ""), "/experiment");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end()) throw ConfigError("/experiment", "unknown experiment");
  if (j.contains("walk")) c.law = law_from_json(j["walk"]);
  if (j.contains("scenery")) c.scenery = scenery_from_json(j["scenery"], base_dir);
  if (j.contains("n")) c.n = get_count(j["n"], "/n");
  if (j.contains("t_grid")) {
    c.t_grid = get_num_list(j["t_grid"], "/t_grid");
    for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
      const std::string ti = "/t_grid/" + std::to_string(i);
      if (!(c.t_grid[i] > 0.0 && c.t_grid[i] <= 1.0)) throw ConfigError(ti, "must lie in (0, 1]");
      if (i > 0 && !(c.t_grid[i] > c.t_grid[i - 1])) throw ConfigError(ti, "t_grid must be strictly increasing");
    }
  }
  if (j.contains("m_sceneries")) c.m_sceneries = get_count(j["m_sceneries"], "/m_sceneries");
  if (j.contains("n_omegas")) c.n_omegas = get_count(j["n_omegas"], "/n_omegas");
  if (j.contains("seed")) c.seed = get_u64(j["seed"], "/seed");
  if (j.contains("threads")) c.threads = get_count(j["threads"], "/threads");
  if (j.contains("empirical_c0")) c.empirical_c0 = get_bool(j["empirical_c0"], "/empirical_c0");
  if (j.contains("tolerance")) {
    const Json& t = j["tolerance"];
    check_object(t, {"ks_p_min", "omega_fraction", "corr_max", "identity_z", "se_factor", "lln_lo", "lln_hi",
                     "cross_fraction", "ma_rel_tol"},
                 "/tolerance");
    const std::pair<const char*, double*> fields[] = {
        {"ks_p_min", &c.tol.ks_p_min},     {"omega_fraction", &c.tol.omega_fraction}, {"corr_max", &c.tol.corr_max},
        {"identity_z", &c.tol.identity_z}, {"se_factor", &c.tol.se_factor},           {"lln_lo", &c.tol.lln_lo},
        {"lln_hi", &c.tol.lln_hi},         {"cross_fraction", &c.tol.cross_fraction}, {"ma_rel_tol", &c.tol.ma_rel_tol}};
    for (const auto& [k, dst] : fields)
      if (t.contains(k)) *dst = get_num(t[k], std::string("/tolerance/") + k);
  }
  if (j.contains("n_ladder")) {
    c.n_ladder.clear();
    const Json& a = get_array(j["n_ladder"], "/n_ladder");
    for (std::size_t i = 0; i < a.size(); ++i) {
      c.n_ladder.push_back(get_count(a[i], "/n_ladder/" + std::to_string(i)));
      if (c.n_ladder.back() < 2 || c.n_ladder.back() > kMaxCountedSteps)
        throw ConfigError("/n_ladder/" + std::to_string(i), "must be in [2, 2^31]");
      if (i > 0 && c.n_ladder[i] <= c.n_ladder[i - 1]) throw ConfigError("/n_ladder/" + std::to_string(i), "must be increasing");
    }
  }
  if (j.contains("p_set")) {
    c.p_set.clear();
    const Json& a = get_array(j["p_set"], "/p_set");
    for (std::size_t i = 0; i < a.size(); ++i) c.p_set.push_back(get_int_list(a[i], "/p_set/" + std::to_string(i)));
  } else {
    c.p_set = {IntVec(c.law.dimension(), 0)};
  }
  for (std::size_t i = 0; i < c.p_set.size(); ++i)
    if (c.p_set[i].size() != c.law.dimension()) throw ConfigError("/p_set/" + std::to_string(i), "dimension mismatch");
  if (j.contains("windows")) {
    const auto w = get_num_list(j["windows"], "/windows");
    if (w.size() != 4) throw ConfigError("/windows", "must have four entries A < B < C < D");
    std::copy(w.begin(), w.end(), c.windows.begin());
  }
  if (j.contains("lambda_grid")) c.lambda_grid = get_num_list(j["lambda_grid"], "/lambda_grid");
  if (j.contains("delta_ladder")) c.delta_ladder = get_num_list(j["delta_ladder"], "/delta_ladder");
  if (j.contains("epsilon")) c.epsilon = get_num(j["epsilon"], "/epsilon");
  if (j.contains("stride")) c.stride = get_count(j["stride"], "/stride");
  if (j.contains("k_max")) c.k_max = get_count(j["k_max"], "/k_max");
  if (j.contains("g0")) c.g0 = get_str(j["g0"], "/g0");
  if (j.contains("g0_coef")) c.g0_coef = get_num(j["g0_coef"], "/g0_coef");
  if (j.contains("radii")) c.radii = get_int_list(j["radii"], "/radii");

  const bool ladder = c.experiment == "variance_ladder" || c.experiment == "variance_lln" ||
                      c.experiment == "orthogonality" || c.experiment == "erdos_taylor";
  if (ladder && c.n_ladder.size() < 2) throw ConfigError("/n_ladder", "needs at least two entries for " + c.experiment);
  try {
    validate(c);
  } catch (const InvalidArgument& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(parse_json_text(ss.str()), file.parent_path());
}

Json config_to_json(const ExperimentConfig& c) {
  Json p = Json::array();
  for (const auto& v : c.p_set) p.push_back(v);
  return {{"experiment", c.experiment},
          {"walk", law_to_json(c.law)},
          {"scenery", scenery_to_json(c.scenery)},
          {"n", c.n},
          {"t_grid", c.t_grid},
          {"m_sceneries", c.m_sceneries},
          {"n_omegas", c.n_omegas},
          {"seed", c.seed},
          {"threads", c.threads},
          {"empirical_c0", c.empirical_c0},
          {"tolerance",
           {{"ks_p_min", c.tol.ks_p_min},
            {"omega_fraction", c.tol.omega_fraction},
            {"corr_max", c.tol.corr_max},
            {"identity_z", c.tol.identity_z},
            {"se_factor", c.tol.se_factor},
            {"lln_lo", c.tol.lln_lo},
            {"lln_hi", c.tol.lln_hi},
            {"cross_fraction", c.tol.cross_fraction},
            {"ma_rel_tol", c.tol.ma_rel_tol}}},
          {"n_ladder", c.n_ladder},
          {"p_set", p},
          {"windows", c.windows},
          {"lambda_grid", c.lambda_grid},
          {"delta_ladder", c.delta_ladder},
          {"epsilon", c.epsilon},
          {"stride", c.stride},
          {"k_max", c.k_max},
          {"g0", c.g0},
          {"g0_coef", c.g0_coef},
          {"radii", c.radii}};
}

std::string canonical_dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string out;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------- CSV / SVG

CsvTable& CsvTable::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw InvalidArgument("CsvTable: row width mismatch");
  rows_.push_back(std::move(cells));
  return *this;
}

std::string CsvTable::num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

namespace {

std::string fmt(const char* f, double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    if (ch == '<') o += "&lt;";
    else if (ch == '>') o += "&gt;";
    else if (ch == '&') o += "&amp;";
    else o += ch;
  }
  return o;
}

}  // namespace

std::string svg_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_x) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  auto tx = [&](double x) { return log_x ? std::log2(x) : x; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_x && s.x[i] <= 0)) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  o += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
  o += "<line x1=\"" + fmt("%.1f", L) + "\" y1=\"" + fmt("%.1f", H - B) + "\" x2=\"" + fmt("%.1f", W - R) + "\" y2=\"" +
       fmt("%.1f", H - B) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + fmt("%.1f", L) + "\" y1=\"" + fmt("%.1f", T) + "\" x2=\"" + fmt("%.1f", L) + "\" y2=\"" +
       fmt("%.1f", H - B) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    const double xp = L + (W - L - R) * k / 4.0, yp = H - B - (H - T - B) * k / 4.0;
    o += "<text x=\"" + fmt("%.1f", xp) + "\" y=\"" + fmt("%.1f", H - B + 15) + "\" text-anchor=\"middle\">" +
         (log_x ? "2^" + fmt("%.3g", xv) : fmt("%.4g", xv)) + "</text>\n";
    o += "<text x=\"" + fmt("%.1f", L - 5) + "\" y=\"" + fmt("%.1f", yp + 4) + "\" text-anchor=\"end\">" + fmt("%.4g", yv) +
         "</text>\n";
  }
  o += "<text x=\"" + fmt("%.1f", (L + W - R) / 2) + "\" y=\"" + fmt("%.1f", H - 12) + "\" text-anchor=\"middle\">" +
       xml_escape(x_label) + "</text>\n";
  o += "<text x=\"15\" y=\"" + fmt("%.1f", (T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       fmt("%.1f", (T + H - B) / 2) + ")\">" + xml_escape(y_label) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i]) || (log_x && series[s].x[i] <= 0)) continue;
      pts += fmt("%.2f", px(series[s].x[i])) + "," + fmt("%.2f", py(series[s].y[i])) + " ";
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    const double ly = T + 15.0 * static_cast<double>(s);
    o += "<line x1=\"" + fmt("%.1f", W - R + 10) + "\" y1=\"" + fmt("%.1f", ly) + "\" x2=\"" + fmt("%.1f", W - R + 30) +
         "\" y2=\"" + fmt("%.1f", ly) + "\" stroke=\"" + col + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + fmt("%.1f", W - R + 35) + "\" y=\"" + fmt("%.1f", ly + 4) + "\">" + xml_escape(series[s].name) +
         "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

// ---------------------------------------------------------------- reports

Json to_json(const FcltReport& r) {
  Json om = Json::array();
  for (const auto& o : r.omegas)
    om.push_back({{"omega_seed", o.omega_seed},
                  {"ks_d", o.ks_d},
                  {"ks_p", o.ks_p},
                  {"ks_p_exact", o.ks_p_exact},
                  {"empirical_var", o.empirical_var},
                  {"exact_var", o.exact_var},
                  {"target_var", o.target_var},
                  {"covariance", o.covariance},
                  {"exact_covariance", o.exact_covariance},
                  {"max_abs_corr", o.max_abs_corr},
                  {"exact_max_abs_corr", o.exact_max_abs_corr},
                  {"var_y1", o.var_y1},
                  {"var_y1_se", o.var_y1_se},
                  {"exact_var_y1", o.exact_var_y1},
                  {"identity_z", o.identity_z},
                  {"ks_pass", o.ks_pass},
                  {"corr_pass", o.corr_pass}});
  return {{"mode", r.mode},
          {"c0", r.c0},
          {"c0_label", r.c0_empirical ? "C0(empirical)" : "C0"},
          {"sigma2", r.sigma2},
          {"n", r.n},
          {"m", r.m},
          {"t_grid", r.t_grid},
          {"omegas", om},
          {"ks_pass_fraction", r.ks_pass_fraction},
          {"corr_pass_fraction", r.corr_pass_fraction},
          {"identity_pass_fraction", r.identity_pass_fraction},
          {"pooled_var_y1", r.pooled_var_y1},
          {"pooled_var_y1_se", r.pooled_var_y1_se},
          {"exact_mean_var_y1", r.exact_mean_var_y1},
          {"ks_ok", r.ks_ok},
          {"corr_ok", r.corr_ok},
          {"identity_ok", r.identity_ok},
          {"pass", r.pass}};
}

Json to_json(const LlnTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n}, {"p", r.p}, {"mean", r.mean}, {"sd", r.sd}, {"min", r.min}, {"max", r.max}});
  return {{"c0", t.c0}, {"n_omegas", t.n_omegas}, {"rows", rows}, {"trend", t.trend}};
}

Json to_json(const OrthogonalityTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) rows.push_back({{"n", r.n}, {"p", r.p}, {"mean", r.mean}, {"sd", r.sd}});
  return {{"normalization", t.normalization},
          {"windows", t.windows},
          {"rows", rows},
          {"decreasing_fraction", t.decreasing_fraction},
          {"mean_decreasing", t.mean_decreasing},
          {"witness_checks", t.witness_checks},
          {"witness_violations", t.witness_violations}};
}

namespace {
Json margin_rows(const std::vector<MarginRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"lambda", r.lambda}, {"k", r.k}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"margin", r.margin},
                   {"se", r.se}, {"violation", r.violation}});
  return out;
}
}  // namespace

Json to_json(const NewmanWrightReport& r) {
  return {{"norm", r.norm}, {"n", r.n}, {"m", r.m}, {"rows", margin_rows(r.rows)},
          {"worst_margin_se", r.worst_margin_se}, {"pass", r.pass}};
}

Json to_json(const MoriczReport& r) {
  return {{"status", r.status},
          {"g0", r.g0},
          {"g0_coef", r.g0_coef},
          {"c_max", kMoriczCmax},
          {"superadditive", r.superadditive},
          {"hypothesis_holds", r.hypothesis_holds},
          {"worst_hypothesis_ratio", r.worst_hypothesis_ratio},
          {"windows_checked", r.windows_checked},
          {"rows", margin_rows(r.rows)},
          {"worst_relative_margin", r.worst_relative_margin},
          {"pass", r.pass}};
}

Json to_json(const TightnessTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) rows.push_back({{"delta", r.delta}, {"prob", r.prob}, {"prob_fine", r.prob_fine}});
  return {{"n", t.n},          {"stride", t.stride},         {"epsilon", t.epsilon},
          {"rows", rows},      {"decreasing", t.decreasing}, {"decreasing_fine", t.decreasing_fine},
          {"max_stride_gap", t.max_stride_gap}, {"pass", t.pass}};
}

Json to_json(const ErdosTaylorTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n}, {"mean_ratio", r.mean_ratio}, {"q10", r.q10}, {"q50", r.q50}, {"q90", r.q90},
                    {"mean_power", r.mean_power}});
  return {{"rows", rows}, {"target", t.target}, {"closer_at_end", t.closer_at_end}, {"power_decreasing", t.power_decreasing}};
}

Json to_json(const TransientReport& r) {
  return {{"n", r.n},
          {"m", r.m},
          {"mc_mean", r.mc_mean},
          {"mc_se", r.mc_se},
          {"series_value", r.series_value},
          {"series_tail", r.series_tail},
          {"series_se", r.series_se},
          {"finite_n_bias", r.finite_n_bias},
          {"combined_error", r.combined_error},
          {"difference", r.difference},
          {"within", r.within},
          {"ratio_at_least_one", r.ratio_at_least_one}};
}

// ---------------------------------------------------------------- dispatch

namespace {

std::shared_ptr<const WalkModel> walk_ptr(const ExperimentConfig& c) {
  return std::make_shared<const WalkModel>(build_walk_model(c.law));
}

std::string p_label(const IntVec& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
  return s + ")";
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& c) {
  ExperimentOutput out;
  const std::string& e = c.experiment;
  if (e == "fclt") {
    const FcltReport r = run_fclt(c);
    out.payload = to_json(r);
    out.pass = r.pass;
    CsvTable inc({"omega", "increment", "ks_d", "ks_p", "ks_p_exact", "empirical_var", "exact_var", "target_var"});
    CsvTable om({"omega", "max_abs_corr", "exact_max_abs_corr", "var_y1", "var_y1_se", "exact_var_y1", "identity_z"});
    for (std::size_t i = 0; i < r.omegas.size(); ++i) {
      const auto& o = r.omegas[i];
      for (std::size_t k = 0; k < o.exact_var.size(); ++k)
        inc.row({CsvTable::num(std::uint64_t{i}), CsvTable::num(std::uint64_t{k}),
                 k < o.ks_d.size() ? CsvTable::num(o.ks_d[k]) : "", k < o.ks_p.size() ? CsvTable::num(o.ks_p[k]) : "",
                 k < o.ks_p_exact.size() ? CsvTable::num(o.ks_p_exact[k]) : "", CsvTable::num(o.empirical_var[k]),
                 CsvTable::num(o.exact_var[k]), CsvTable::num(o.target_var[k])});
      om.row({CsvTable::num(std::uint64_t{i}), CsvTable::num(o.max_abs_corr), CsvTable::num(o.exact_max_abs_corr),
              CsvTable::num(o.var_y1), CsvTable::num(o.var_y1_se), CsvTable::num(o.exact_var_y1), CsvTable::num(o.identity_z)});
    }
    out.csv = {{"increments.csv", inc.str()}, {"omegas.csv", om.str()}};
  } else if (e == "variance_ladder") {
    const auto pts = variance_ladder(c, c.n_ladder);
    const bool degenerate = std::abs(spectral_density(c.scenery).at_zero()) < 1e-12;
    bool dec = true;
    Json rows = Json::array();
    CsvTable t({"n", "pooled_var", "se", "exact_mean"});
    Series s1{"pooled Var Y_n(1)", {}, {}}, s2{"exact mean", {}, {}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0 && !(pts[i].pooled_var < pts[i - 1].pooled_var)) dec = false;
      rows.push_back({{"n", pts[i].n}, {"pooled_var", pts[i].pooled_var}, {"se", pts[i].se}, {"exact_mean", pts[i].exact_mean}});
      t.row({CsvTable::num(std::uint64_t{pts[i].n}), CsvTable::num(pts[i].pooled_var), CsvTable::num(pts[i].se),
             CsvTable::num(pts[i].exact_mean)});
      s1.x.push_back(static_cast<double>(pts[i].n));
      s1.y.push_back(pts[i].pooled_var);
      s2.x.push_back(static_cast<double>(pts[i].n));
      s2.y.push_back(pts[i].exact_mean);
    }
    out.pass = !degenerate || dec;
    out.payload = {{"mode", degenerate ? "degenerate-variance" : "normal"}, {"rows", rows}, {"decreasing", dec}, {"pass", out.pass}};
    out.csv = {{"variance_ladder.csv", t.str()}};
    out.svg = {{"variance_ladder.svg", svg_chart("Var Y_n(1) along n", "n", "variance", {s1, s2}, true)}};
  } else if (e == "variance_lln") {
    const LlnTable t = track_variance_lln(walk_ptr(c), c.n_ladder, c.p_set, c.n_omegas, c.seed, c.threads);
    out.payload = to_json(t);
    bool in_band = true;
    std::vector<Series> ser(c.p_set.size());
    CsvTable csv({"n", "p", "mean", "sd", "min", "max"});
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      const std::size_t b = i % c.p_set.size();
      ser[b].name = "p=" + p_label(r.p);
      ser[b].x.push_back(static_cast<double>(r.n));
      ser[b].y.push_back(r.mean);
      if (r.n == c.n_ladder.back() && !(r.mean >= c.tol.lln_lo && r.mean <= c.tol.lln_hi)) in_band = false;
      csv.row({CsvTable::num(std::uint64_t{r.n}), "\"" + p_label(r.p) + "\"", CsvTable::num(r.mean), CsvTable::num(r.sd),
               CsvTable::num(r.min), CsvTable::num(r.max)});
    }
    out.pass = in_band;
    out.payload["in_band"] = in_band;
    out.payload["pass"] = in_band;
    out.csv = {{"variance_lln.csv", csv.str()}};
    out.svg = {{"variance_lln.svg", svg_chart("V_n(p) / (C0 n ln n)", "n", "ratio", ser, true)}};
  } else if (e == "orthogonality") {
    const auto t = check_increment_orthogonality(walk_ptr(c), c.n_ladder, c.windows, c.p_set, c.n_omegas, c.seed, c.threads);
    out.payload = to_json(t);
    bool ok = t.witness_violations == 0;
    for (double f : t.decreasing_fraction)
      if (f < c.tol.cross_fraction) ok = false;
    std::vector<Series> ser(c.p_set.size());
    CsvTable csv({"n", "p", "mean", "sd"});
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      ser[i % c.p_set.size()].name = "p=" + p_label(r.p);
      ser[i % c.p_set.size()].x.push_back(static_cast<double>(r.n));
      ser[i % c.p_set.size()].y.push_back(r.mean);
      csv.row({CsvTable::num(std::uint64_t{r.n}), "\"" + p_label(r.p) + "\"", CsvTable::num(r.mean), CsvTable::num(r.sd)});
    }
    out.pass = ok;
    out.payload["pass"] = ok;
    out.csv = {{"orthogonality.csv", csv.str()}};
    out.svg = {{"orthogonality.svg", svg_chart("cross-window count / " + t.normalization, "n", "normalized count", ser, true)}};
  } else if (e == "erdos_taylor") {
    const auto t = track_erdos_taylor(walk_ptr(c), c.n_ladder, c.n_omegas, c.seed, c.threads);
    out.payload = to_json(t);
    out.pass = t.closer_at_end && t.power_decreasing;
    out.payload["pass"] = out.pass;
    CsvTable csv({"n", "mean_ratio", "q10", "q50", "q90", "mean_power"});
    Series s{"mean sup w_n / (ln n)^2", {}, {}}, target{"1/pi", {}, {}};
    for (const auto& r : t.rows) {
      csv.row({CsvTable::num(std::uint64_t{r.n}), CsvTable::num(r.mean_ratio), CsvTable::num(r.q10), CsvTable::num(r.q50),
               CsvTable::num(r.q90), CsvTable::num(r.mean_power)});
      s.x.push_back(static_cast<double>(r.n));
      s.y.push_back(r.mean_ratio);
      target.x.push_back(static_cast<double>(r.n));
      target.y.push_back(t.target);
    }
    out.csv = {{"erdos_taylor.csv", csv.str()}};
    out.svg = {{"erdos_taylor.svg", svg_chart("maximal local time ratio", "n", "ratio", {s, target}, true)}};
  } else if (e == "newman_wright" || e == "moricz") {
    const auto walk = walk_ptr(c);
    Json per = Json::array();
    bool ok = true;
    CsvTable csv({"omega", "lambda_or_b", "k", "lhs", "rhs", "margin", "se", "violation"});
    for (std::size_t i = 0; i < c.n_omegas; ++i) {
      const WalkPath path = sample_path(walk, c.n, omega_seed(c.seed, i));
      std::vector<MarginRow> rows;
      if (e == "newman_wright") {
        const auto r = check_newman_wright(c.scenery, path, c.n, c.lambda_grid, c.m_sceneries, scenery_seed(c.seed, i, 0),
                                           c.tol.se_factor);
        per.push_back(to_json(r));
        ok = ok && r.pass;
        rows = r.rows;
      } else {
        const auto* iid = std::get_if<IidSpec>(&c.scenery);
        if (!iid) throw ConfigError("/scenery", "moricz needs an i.i.d. scenery");
        const auto r = check_moricz(*iid, path, c.n, c.g0, c.g0_coef, c.m_sceneries, scenery_seed(c.seed, i, 0), c.tol.se_factor);
        per.push_back(to_json(r));
        ok = ok && r.pass;
        rows = r.rows;
      }
      for (const auto& r : rows)
        csv.row({CsvTable::num(std::uint64_t{i}), CsvTable::num(r.lambda), CsvTable::num(std::uint64_t{r.k}),
                 CsvTable::num(r.lhs), CsvTable::num(r.rhs), CsvTable::num(r.margin), CsvTable::num(r.se),
                 r.violation ? "1" : "0"});
    }
    out.pass = ok;
    out.payload = {{"omegas", per}, {"pass", ok}};
    out.csv = {{e + ".csv", csv.str()}};
  } else if (e == "tightness") {
    const auto t = estimate_tightness_modulus(c, c.delta_ladder, c.epsilon);
    out.payload = to_json(t);
    out.pass = t.pass;
    CsvTable csv({"delta", "prob", "prob_fine"});
    Series s1{"stride " + std::to_string(t.stride), {}, {}}, s2{"stride " + std::to_string(t.stride / 2), {}, {}};
    for (const auto& r : t.rows) {
      csv.row({CsvTable::num(r.delta), CsvTable::num(r.prob), CsvTable::num(r.prob_fine)});
      s1.x.insert(s1.x.begin(), r.delta);
      s1.y.insert(s1.y.begin(), r.prob);
      s2.x.insert(s2.x.begin(), r.delta);
      s2.y.insert(s2.y.begin(), r.prob_fine);
    }
    out.csv = {{"tightness.csv", csv.str()}};
    out.svg = {{"tightness.svg", svg_chart("P(modulus >= eps)", "delta", "probability", {s1, s2}, true)}};
  } else if (e == "transient_variance") {
    const auto r = transient_variance_check(c.scenery, walk_ptr(c), c.n, c.n_omegas, c.seed, c.k_max, c.threads);
    out.payload = to_json(r);
    out.pass = r.within && r.ratio_at_least_one;
    out.payload["pass"] = out.pass;
  } else if (e == "truncation_ladder") {
    const auto* t = std::get_if<ToralSpec>(&c.scenery);
    if (!t) throw ConfigError("/scenery", "truncation_ladder needs a toral scenery");
    const auto rows = truncation_ladder(t->pair, t->f, c.radii);
    Json jr = Json::array();
    CsvTable csv({"radius", "terms", "residual_norm_sq", "phi0"});
    bool mono = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (i > 0 && r.residual_norm_sq > rows[i - 1].residual_norm_sq) mono = false;
      jr.push_back({{"radius", r.radius}, {"terms", r.terms}, {"residual_norm_sq", r.residual_norm_sq}, {"phi0", r.phi0}});
      csv.row({std::to_string(r.radius), CsvTable::num(std::uint64_t{r.terms}), CsvTable::num(r.residual_norm_sq),
               CsvTable::num(r.phi0)});
    }
    out.pass = mono;
    out.payload = {{"rows", jr}, {"pass", mono}};
    out.csv = {{"truncation_ladder.csv", csv.str()}};
  } else {
    throw ConfigError("/experiment", "unknown experiment");
  }
  out.payload["experiment"] = e;
  return out;
}

// ---------------------------------------------------------------- catalog

const std::vector<CatalogEntry>& experiment_catalog() {
  static const std::vector<CatalogEntry> cat = {
      {"fclt-iid", "fclt", "quenched FCLT for i.i.d. sceneries, sigma^2 = (pi sqrt det Sigma)^-1", "fclt-iid.json", "~1 min"},
      {"fclt-ma", "fclt", "moving-average fields, sigma^2 = |sum a_q|^2 (pi sqrt det Sigma)^-1", "fclt-ma.json", "~30 s"},
      {"fclt-ma-degenerate", "variance_ladder", "moving averages with sum a_q = 0 have vanishing variance",
       "fclt-ma-degenerate.json", "~1 min"},
      {"fclt-toral", "fclt", "quenched FCLT for totally ergodic Z^2 toral actions", "fclt-toral.json", "~90 s"},
      {"variance-lln", "variance_lln", "self-intersection law of large numbers V_n(p) ~ C0 n ln n", "variance-lln.json",
       "~15 s"},
      {"orthogonality", "orthogonality", "asymptotic orthogonality of cross-window counts", "orthogonality.json", "~15 s"},
      {"erdos-taylor", "erdos_taylor", "maximal local time ~ (ln n)^2 / pi for the planar simple walk",
       "erdos-taylor.json", "~5 s"},
      {"newman-wright", "newman_wright", "maximal inequality for centered associated variables", "newman-wright.json",
       "~1 s"},
      {"moricz", "moricz", "maximal fourth moment from a super-additive bound, C_max = (1 - 2^-1/4)^-4", "moricz.json",
       "~1 s"},
      {"tightness", "tightness", "modulus of continuity of Y_n", "tightness.json", "~2 s"},
      {"transient-variance", "transient_variance", "transient variance as a Green-type series", "transient-variance.json",
       "~5 s"},
      {"truncation-ladder", "truncation_ladder", "spectral density control under trigonometric truncation",
       "truncation-ladder.json", "~1 s"},
  };
  return cat;
}

Json catalog_to_json() {
  Json a = Json::array();
  for (const auto& e : experiment_catalog())
    a.push_back({{"id", e.id}, {"experiment", e.experiment}, {"anchor", e.anchor}, {"fixture", e.fixture}, {"budget", e.budget}});
  return {{"catalog", a}};
}

std::vector<CatalogEntry> catalog_from_json(const Json& j) {
  check_object(j, {"catalog"}, "");
  const Json& a = get_array(need(j, "catalog", ""), "/catalog");
  std::vector<CatalogEntry> out;
  const auto& kinds = experiment_kinds();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string at = "/catalog/" + std::to_string(i);
    check_object(a[i], {"id", "experiment", "anchor", "fixture", "budget"}, at);
    CatalogEntry e{get_str(need(a[i], "id", at), at + "/id"), get_str(need(a[i], "experiment", at), at + "/experiment"),
                   get_str(need(a[i], "anchor", at), at + "/anchor"), get_str(need(a[i], "fixture", at), at + "/fixture"),
                   get_str(need(a[i], "budget", at), at + "/budget")};
    if (std::find(kinds.begin(), kinds.end(), e.experiment) == kinds.end()) throw ConfigError(at + "/experiment", "unknown experiment");
    if (e.anchor.empty()) throw ConfigError(at + "/anchor", "must be nonempty");
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------- manifest

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json write_run(const ExperimentConfig& c, const ExperimentOutput& out, const fs::path& out_dir,
               const std::string& started_utc, const std::string& finished_utc) {
  fs::create_directories(out_dir);
  const Json cfg = config_to_json(c);
  const std::string config_hash = sha256_hex(canonical_dump(cfg));
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (out_dir / name).string());
    f << content;
  };
  std::vector<std::string> files = {"report.json"};
  const Json report = {{"experiment", c.experiment}, {"config_hash", config_hash}, {"pass", out.pass}, {"payload", out.payload}};
  write("report.json", report.dump(2) + "\n");
  for (const auto& [name, content] : out.csv) {
    write(name, content);
    files.push_back(name);
  }
  for (const auto& [name, content] : out.svg) {
    write(name, content);
    files.push_back(name);
  }
  Json manifest = {{"artifact", "rwlab"},
                   {"artifact_version", RWLAB_VERSION},
                   {"experiment", c.experiment},
                   {"config_hash", config_hash},
                   {"master_seed", c.seed},
                   {"config", cfg},
                   {"payload_sha256", sha256_hex(canonical_dump(out.payload))},
                   {"pass", out.pass},
                   {"outputs", files},
                   {"started_utc", started_utc},
                   {"finished_utc", finished_utc}};
  write("manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace rwlab
