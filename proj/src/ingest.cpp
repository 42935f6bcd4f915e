#include "hhme/ingest.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hhme::ingest {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
  double out = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || cell.empty())
    throw ValidationError("row " + std::to_string(row) + ", column '" + col +
                          "': non-numeric value '" + cell + "'");
  return out;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // divisor (count - 1)
  std::int64_t count = 0;
};

template <class Pred>
MeanVar mean_var(const std::vector<double>& v, const Pred& keep) {
  MeanVar mv;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep(i)) {
      mv.mean += v[i];
      ++mv.count;
    }
  if (mv.count == 0) return mv;
  mv.mean /= static_cast<double>(mv.count);
  if (mv.count < 2) return mv;
  double ss = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep(i)) {
      const double d = v[i] - mv.mean;
      ss += d * d;
    }
  mv.var = ss / static_cast<double>(mv.count - 1);
  return mv;
}

}  // namespace

PairedDataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("dataset is empty");

  const std::vector<std::string> header = split_csv_line(line);
  const std::array<std::string, 5> wanted = {"y_true", "x_true", "y_meas",
                                             "x_meas", "stratum"};
  std::array<std::size_t, 5> col{};
  for (std::size_t w = 0; w < wanted.size(); ++w) {
    bool found = false;
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == wanted[w]) {
        col[w] = c;
        found = true;
        break;
      }
    if (!found)
      throw ValidationError("dataset is missing column '" + wanted[w] + "'");
  }

  PairedDataset data;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
    data.y_true.push_back(parse_cell(cells[col[0]], row, "y_true"));
    data.x_true.push_back(parse_cell(cells[col[1]], row, "x_true"));
    data.y_meas.push_back(parse_cell(cells[col[2]], row, "y_meas"));
    data.x_meas.push_back(parse_cell(cells[col[3]], row, "x_meas"));
    const double s = parse_cell(cells[col[4]], row, "stratum");
    if (s != 1.0 && s != 2.0)
      throw ValidationError("row " + std::to_string(row) +
                            ", column 'stratum': label must be 1 or 2");
    data.stratum.push_back(static_cast<std::uint8_t>(s));
  }
  if (data.size() < 3) throw ValidationError("dataset needs at least 3 rows");
  return data;
}

PairedDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

IngestResult estimate_parameters(const PairedDataset& data, double k,
                                 std::optional<double> W2_override) {
  const std::int64_t n = data.size();
  if (n < 3) throw ValidationError("dataset needs at least 3 rows");
  if (k < 1.0) throw ValidationError("k must be >= 1");

  const auto all = [](std::size_t) { return true; };
  const auto in_stratum = [&](int s) {
    return [&, s](std::size_t i) { return data.stratum[i] == s; };
  };

  std::int64_t n2 = 0;
  for (std::uint8_t s : data.stratum)
    if (s == 2) ++n2;
  const std::int64_t n1 = n - n2;

  IngestResult out;
  ParameterSet& p = out.params;
  p.n = n;
  p.k = k;
  p.W2 = W2_override ? *W2_override
                     : static_cast<double>(n2) / static_cast<double>(n);

  const MeanVar ty = mean_var(data.y_true, all);
  const MeanVar tx = mean_var(data.x_true, all);
  p.mu_y = ty.mean;
  p.mu_x = tx.mean;
  p.S_y = std::sqrt(ty.var);
  p.S_x = std::sqrt(tx.var);
  if (ty.var > 0.0 && tx.var > 0.0) {
    double sxy = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
      sxy += (data.x_true[static_cast<std::size_t>(i)] - tx.mean) *
             (data.y_true[static_cast<std::size_t>(i)] - ty.mean);
    sxy /= static_cast<double>(n - 1);
    p.rho = sxy / (p.S_x * p.S_y);
  }

  // error variances: per-stratum sample variance of (measured - true)
  const auto error_var = [&](const std::vector<double>& meas,
                             const std::vector<double>& truth, int s,
                             std::int64_t count, const char* what) {
    if (count == 0) return 0.0;
    if (count < 2)
      throw ValidationError(std::string("stratum ") + (s == 1 ? "1" : "2") +
                            " needs at least 2 rows to estimate " + what);
    std::vector<double> diff;
    diff.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < n; ++i)
      if (data.stratum[static_cast<std::size_t>(i)] == s)
        diff.push_back(meas[static_cast<std::size_t>(i)] -
                       truth[static_cast<std::size_t>(i)]);
    return mean_var(diff, [](std::size_t) { return true; }).var;
  };
  p.errors.sigma_u_sq = error_var(data.y_meas, data.y_true, 1, n1, "sigma_u_sq");
  p.errors.sigma_v_sq = error_var(data.x_meas, data.x_true, 1, n1, "sigma_v_sq");
  p.errors.sigma_u2_sq = error_var(data.y_meas, data.y_true, 2, n2, "sigma_u2_sq");
  p.errors.sigma_v2_sq = error_var(data.x_meas, data.x_true, 2, n2, "sigma_v2_sq");

  if (n2 > 0) {
    const MeanVar y2 = mean_var(data.y_true, in_stratum(2));
    const MeanVar x2 = mean_var(data.x_true, in_stratum(2));
    p.mu_y2 = y2.mean;
    p.mu_x2 = x2.mean;
    p.S_y2 = std::sqrt(y2.var);
    p.S_x2 = std::sqrt(x2.var);
    if (y2.var > 0.0 && x2.var > 0.0) {
      double sxy2 = 0.0;
      for (std::int64_t i = 0; i < n; ++i)
        if (data.stratum[static_cast<std::size_t>(i)] == 2)
          sxy2 += (data.x_true[static_cast<std::size_t>(i)] - x2.mean) *
                  (data.y_true[static_cast<std::size_t>(i)] - y2.mean);
      sxy2 /= static_cast<double>(n2 - 1);
      p.rho2 = sxy2 / (p.S_x2 * p.S_y2);
    }
  }

  // indirect route: subtract the pooled error variance from the measured
  // variance; must stay positive to be a usable variance estimate
  const double sigma_u_pooled =
      mean_var([&] {
        std::vector<double> d(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
          d[static_cast<std::size_t>(i)] =
              data.y_meas[static_cast<std::size_t>(i)] -
              data.y_true[static_cast<std::size_t>(i)];
        return d;
      }(), all)
          .var;
  const double sigma_v_pooled =
      mean_var([&] {
        std::vector<double> d(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
          d[static_cast<std::size_t>(i)] =
              data.x_meas[static_cast<std::size_t>(i)] -
              data.x_true[static_cast<std::size_t>(i)];
        return d;
      }(), all)
          .var;
  out.S_y_sq_direct = ty.var;
  out.S_x_sq_direct = tx.var;
  out.S_y_sq_indirect = mean_var(data.y_meas, all).var - sigma_u_pooled;
  out.S_x_sq_indirect = mean_var(data.x_meas, all).var - sigma_v_pooled;
  if (sigma_u_pooled > 0.0 && out.S_y_sq_indirect <= 0.0)
    throw ValidationError(
        "error variance exceeds observed variance of y (indirect route)");
  if (sigma_v_pooled > 0.0 && out.S_x_sq_indirect <= 0.0)
    throw ValidationError(
        "error variance exceeds observed variance of x (indirect route)");
  return out;
}

}  // namespace hhme::ingest
