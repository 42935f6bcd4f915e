#include "hhme/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace hhme {

namespace {

bool nearly_integral(double x) {
  return std::abs(x - std::nearbyint(x)) <= 1e-6 * std::max(1.0, std::abs(x));
}

double mean_of(const std::vector<double>& v, const std::vector<std::uint8_t>& label,
               int s, std::int64_t count) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (label[i] == s) sum += v[i];
  return sum / static_cast<double>(count);
}

double var_of(const std::vector<double>& v, const std::vector<std::uint8_t>& label,
              int s, std::int64_t count) {
  const double m = mean_of(v, label, s, count);
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (label[i] == s) {
      const double d = v[i] - m;
      ss += d * d;
    }
  return ss / static_cast<double>(count - 1);
}

}  // namespace

ValidatedParameterSet validate(const ParameterSet& p) {
  if (p.n < 2) throw ValidationError("n must be >= 2");
  if (!(p.S_y > 0.0)) throw ValidationError("S_y must be positive");
  if (!(p.S_x > 0.0)) throw ValidationError("S_x must be positive");
  if (p.S_y2 < 0.0) throw ValidationError("S_y2 must be nonnegative");
  if (p.S_x2 < 0.0) throw ValidationError("S_x2 must be nonnegative");
  if (!(std::abs(p.rho) <= 1.0)) throw ValidationError("rho out of range [-1, 1]");
  if (!(std::abs(p.rho2) <= 1.0)) throw ValidationError("rho2 out of range [-1, 1]");
  if (p.mu_x == 0.0)
    throw ValidationError("mu_x must be nonzero for ratio estimation");
  if (!(p.W2 >= 0.0 && p.W2 <= 1.0)) throw ValidationError("W2 out of range [0, 1]");
  if (!(p.k >= 1.0)) throw ValidationError("k must be >= 1");
  if (p.errors.sigma_u_sq < 0.0) throw ValidationError("sigma_u_sq must be nonnegative");
  if (p.errors.sigma_v_sq < 0.0) throw ValidationError("sigma_v_sq must be nonnegative");
  if (p.errors.sigma_u2_sq < 0.0) throw ValidationError("sigma_u2_sq must be nonnegative");
  if (p.errors.sigma_v2_sq < 0.0) throw ValidationError("sigma_v2_sq must be nonnegative");
  if (p.N) {
    if (*p.N < p.n) throw ValidationError("N must be >= n");
    const double nd = static_cast<double>(*p.N);
    if (!nearly_integral(p.W2 * nd))
      throw ValidationError("W2 * N must be integral for a finite population");
    if (!nearly_integral((1.0 - p.W2) * nd))
      throw ValidationError("(1 - W2) * N must be integral for a finite population");
  }
  if (!std::isfinite(p.mu_y) || !std::isfinite(p.mu_x))
    throw ValidationError("mu_y and mu_x must be finite");
  return ValidatedParameterSet(p, p.mu_y / p.mu_x);
}

// --- FinitePopulation -------------------------------------------------------

double FinitePopulation::ybar() const {
  double sum = 0.0;
  for (double v : y_true) sum += v;
  return sum / static_cast<double>(size());
}

double FinitePopulation::xbar() const {
  double sum = 0.0;
  for (double v : x_true) sum += v;
  return sum / static_cast<double>(size());
}

double FinitePopulation::stratum_ybar(int s) const {
  const std::int64_t cnt = (s == 1) ? N1 : N2;
  if (cnt < 1) throw ValidationError("empty stratum has no mean");
  return mean_of(y_true, stratum, s, cnt);
}

double FinitePopulation::stratum_xbar(int s) const {
  const std::int64_t cnt = (s == 1) ? N1 : N2;
  if (cnt < 1) throw ValidationError("empty stratum has no mean");
  return mean_of(x_true, stratum, s, cnt);
}

double FinitePopulation::stratum_var_y(int s) const {
  const std::int64_t cnt = (s == 1) ? N1 : N2;
  if (cnt < 2) throw ValidationError("stratum variance needs at least 2 units");
  return var_of(y_true, stratum, s, cnt);
}

double FinitePopulation::stratum_var_x(int s) const {
  const std::int64_t cnt = (s == 1) ? N1 : N2;
  if (cnt < 2) throw ValidationError("stratum variance needs at least 2 units");
  return var_of(x_true, stratum, s, cnt);
}

void FinitePopulation::check() const {
  if (x_true.size() != y_true.size() || x_true.size() != stratum.size())
    throw ValidationError("population arrays must have equal length");
  if (N1 + N2 != size()) throw ValidationError("N1 + N2 must equal N");
  std::int64_t c1 = 0, c2 = 0;
  for (std::uint8_t s : stratum) {
    if (s == 1)
      ++c1;
    else if (s == 2)
      ++c2;
    else
      throw ValidationError("stratum labels must be 1 or 2");
  }
  if (c1 != N1 || c2 != N2)
    throw ValidationError("stratum label counts disagree with N1/N2");
  if (size() < 1) throw ValidationError("population must be nonempty");
}

// --- SampleRealization ------------------------------------------------------

namespace {
double simple_mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}
}  // namespace

double SampleRealization::ybar1() const { return simple_mean(y_obs_resp); }
double SampleRealization::xbar1() const { return simple_mean(x_obs_resp); }
double SampleRealization::ybar2r() const { return simple_mean(y_obs_sub); }
double SampleRealization::xbar2r() const { return simple_mean(x_obs_sub); }

// --- Flat TOML config -------------------------------------------------------

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // %.17g round-trips; trim to the shortest representation that still does
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(shorter, shorter + std::string(shorter).size(), back);
    if (back == v) return shorter;
  }
  return buf;
}

double parse_number(const std::string& value, const std::string& key, int line) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw ValidationError("config line " + std::to_string(line) + ": key '" + key +
                          "' has a non-numeric value '" + value + "'");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ParameterSet parse_params(const std::string& text) {
  ParameterSet p;
  bool seen[14] = {};
  // required scalar fields and their targets
  struct Field {
    const char* key;
    double* target;
  };
  const Field fields[] = {
      {"W2", &p.W2},
      {"k", &p.k},
      {"mu_y", &p.mu_y},
      {"mu_x", &p.mu_x},
      {"S_y", &p.S_y},
      {"S_x", &p.S_x},
      {"rho", &p.rho},
      {"S_y2", &p.S_y2},
      {"S_x2", &p.S_x2},
      {"rho2", &p.rho2},
      {"sigma_u_sq", &p.errors.sigma_u_sq},
      {"sigma_v_sq", &p.errors.sigma_v_sq},
      {"sigma_u2_sq", &p.errors.sigma_u2_sq},
      {"sigma_v2_sq", &p.errors.sigma_v2_sq},
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool have_n = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string entry = trim(raw);
    if (entry.empty()) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(line) +
                            ": expected 'key = value'");
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    if (key == "n") {
      p.n = static_cast<std::int64_t>(std::llround(parse_number(value, key, line)));
      have_n = true;
      continue;
    }
    if (key == "N") {
      p.N = static_cast<std::int64_t>(std::llround(parse_number(value, key, line)));
      continue;
    }
    if (key == "mu_y2") {
      p.mu_y2 = parse_number(value, key, line);
      continue;
    }
    if (key == "mu_x2") {
      p.mu_x2 = parse_number(value, key, line);
      continue;
    }
    bool matched = false;
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (key == fields[i].key) {
        *fields[i].target = parse_number(value, key, line);
        seen[i] = true;
        matched = true;
        break;
      }
    }
    if (!matched)
      throw ValidationError("config line " + std::to_string(line) +
                            ": unknown key '" + key + "'");
  }
  if (!have_n) throw ValidationError("config is missing required key 'n'");
  const char* required[] = {"W2", "k", "mu_y", "mu_x", "S_y", "S_x", "rho"};
  for (const char* req : required)
    for (std::size_t i = 0; i < std::size(fields); ++i)
      if (std::string(req) == fields[i].key && !seen[i])
        throw ValidationError(std::string("config is missing required key '") +
                              req + "'");
  return p;
}

ParameterSet load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_params(buf.str());
}

std::string to_toml(const ParameterSet& p) {
  std::ostringstream out;
  out << "n = " << p.n << "\n";
  if (p.N) out << "N = " << *p.N << "\n";
  out << "W2 = " << format_double(p.W2) << "\n";
  out << "k = " << format_double(p.k) << "\n";
  out << "mu_y = " << format_double(p.mu_y) << "\n";
  out << "mu_x = " << format_double(p.mu_x) << "\n";
  out << "S_y = " << format_double(p.S_y) << "\n";
  out << "S_x = " << format_double(p.S_x) << "\n";
  out << "rho = " << format_double(p.rho) << "\n";
  out << "S_y2 = " << format_double(p.S_y2) << "\n";
  out << "S_x2 = " << format_double(p.S_x2) << "\n";
  out << "rho2 = " << format_double(p.rho2) << "\n";
  if (p.mu_y2) out << "mu_y2 = " << format_double(*p.mu_y2) << "\n";
  if (p.mu_x2) out << "mu_x2 = " << format_double(*p.mu_x2) << "\n";
  out << "sigma_u_sq = " << format_double(p.errors.sigma_u_sq) << "\n";
  out << "sigma_v_sq = " << format_double(p.errors.sigma_v_sq) << "\n";
  out << "sigma_u2_sq = " << format_double(p.errors.sigma_u2_sq) << "\n";
  out << "sigma_v2_sq = " << format_double(p.errors.sigma_v2_sq) << "\n";
  return out.str();
}

void save_params(const ParameterSet& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write config file: " + path);
  out << to_toml(p);
}

}  // namespace hhme
