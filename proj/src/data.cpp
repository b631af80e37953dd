#include "localmax/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "localmax/rng.hpp"

namespace localmax {

Matrix Standardization::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw ConfigError("standardization: feature count mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(i, j) = std[j] > 0.0 ? (x(i, j) - mean[j]) / std[j] : 0.0;
  return out;
}

Standardization fit_standardization(const Matrix& x) {
  if (x.rows() == 0) throw ConfigError("standardization: empty matrix");
  Standardization s;
  const std::size_t n = x.rows(), f = x.cols();
  s.mean.assign(f, 0.0);
  s.std.assign(f, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) s.mean[j] += x(i, j);
  for (auto& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x(i, j) - s.mean[j];
      s.std[j] += d * d;
    }
  for (std::size_t j = 0; j < f; ++j) {
    const double sd = std::sqrt(s.std[j] / static_cast<double>(n));
    // Relative test so that floating-point residue on a constant column is
    // still treated as zero variance.
    s.std[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 0.0;
  }
  return s;
}

Matrix gmm_centers(const GmmConfig& cfg) {
  if (cfg.grid.empty()) throw ConfigError("gmm: grid must be nonempty");
  const std::size_t g = cfg.grid.size();
  Matrix c(g * g, 2);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j) {
      c(i * g + j, 0) = cfg.grid[i];
      c(i * g + j, 1) = cfg.grid[j];
    }
  return c;
}

Dataset sample_gmm(const GmmConfig& cfg, std::size_t n, std::uint64_t seed,
                   std::vector<std::size_t>* component) {
  if (!(cfg.sigma >= 0.0)) throw ConfigError("gmm: sigma must be non-negative");
  if (n == 0) throw ConfigError("gmm: n must be at least 1");
  const Matrix centers = gmm_centers(cfg);
  Rng rng(substream_seed(seed, "gmm"));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.x = Matrix(n, 2);
  ds.feature_names = {"x1", "x2"};
  if (component) component->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(rng() % centers.rows());
    if (component) (*component)[i] = k;
    for (std::size_t j = 0; j < 2; ++j) ds.x(i, j) = centers(k, j) + cfg.sigma * normal(rng);
  }
  return ds;
}

Matrix sample_uniform_background(const Box& box, std::size_t n, const Matrix& centers,
                                 double min_dist, std::uint64_t seed) {
  const std::size_t d = box.lo.size();
  if (d == 0 || box.hi.size() != d) throw ConfigError("background: malformed bounds");
  if (!centers.empty() && centers.cols() != d)
    throw ConfigError("background: centers dimension does not match bounds");
  for (std::size_t j = 0; j < d; ++j)
    if (!(box.lo[j] < box.hi[j])) throw ConfigError("background: empty bounds");
  Rng rng(substream_seed(seed, "background"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(n, d);
  std::vector<double> p(d);
  std::size_t accepted = 0, proposed = 0;
  const double min_sq = min_dist * min_dist;
  while (accepted < n) {
    ++proposed;
    for (std::size_t j = 0; j < d; ++j) p[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * unit(rng);
    bool ok = true;
    for (std::size_t c = 0; ok && c < centers.rows(); ++c) {
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = p[j] - centers(c, j);
        sq += t * t;
      }
      ok = sq >= min_sq;
    }
    if (ok) {
      std::copy(p.begin(), p.end(), out.row(accepted).begin());
      ++accepted;
    } else if (proposed >= 10000 && accepted * 1000 < proposed) {
      throw ConfigError("background: rejection rate above 0.999; min_dist infeasible for bounds");
    }
  }
  return out;
}

std::vector<double> sample_point_set(std::size_t m, double lo, double hi, double min_gap,
                                     std::uint64_t seed) {
  if (m == 0 || !(lo < hi)) throw ConfigError("point set: need m >= 1 and lo < hi");
  if (min_gap * static_cast<double>(m - 1) >= hi - lo)
    throw ConfigError("point set: min_gap too large for the interval");
  Rng rng(substream_seed(seed, "points"));
  // Sample m sorted uniforms on the slack, then spread by min_gap.
  const double slack = (hi - lo) - min_gap * static_cast<double>(m - 1);
  std::uniform_real_distribution<double> unit(0.0, slack);
  std::vector<double> u(m);
  for (auto& v : u) v = unit(rng);
  std::sort(u.begin(), u.end());
  for (std::size_t i = 0; i < m; ++i) u[i] += lo + min_gap * static_cast<double>(i);
  for (std::size_t i = 1; i < m; ++i)
    if (!(u[i] > u[i - 1])) u[i] = std::nextafter(u[i - 1], hi);
  return u;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& target_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_fields(line);
  for (auto& h : header) h = trim(h);

  std::optional<std::size_t> target_idx;
  if (target_column) {
    auto it = std::find(header.begin(), header.end(), *target_column);
    if (it == header.end())
      throw ParseError(path.string() + ": target column '" + *target_column + "' not found");
    target_idx = static_cast<std::size_t>(it - header.begin());
  }

  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (!target_idx || j != *target_idx) ds.feature_names.push_back(header[j]);

  std::vector<double> values, targets;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string cell = trim(fields[j]);
      double v = 0.0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(path.string() + ": row " + std::to_string(line_no) + ", column '" +
                         header[j] + "': not a finite number ('" + cell + "')");
      if (target_idx && j == *target_idx)
        targets.push_back(v);
      else
        values.push_back(v);
    }
    ++rows;
  }
  ds.x = Matrix(rows, ds.feature_names.size());
  std::copy(values.begin(), values.end(), ds.x.values().begin());
  if (target_idx) ds.targets = std::move(targets);
  return ds;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& rows) {
  if (header.size() != rows.cols()) throw ConfigError("write_csv: header/column count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, rows(i, j), std::chars_format::general, 17);
      if (j) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::vector<std::string> header = ds.feature_names;
  if (header.size() != ds.dim()) {
    header.clear();
    for (std::size_t j = 0; j < ds.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
  }
  if (!ds.targets) {
    write_csv(path, header, ds.x);
    return;
  }
  header.push_back("target");
  Matrix all(ds.size(), ds.dim() + 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) all(i, j) = ds.x(i, j);
    all(i, ds.dim()) = (*ds.targets)[i];
  }
  write_csv(path, header, all);
}

std::pair<Dataset, Dataset> split_standardize(const Dataset& ds, double train_fraction,
                                              std::uint64_t seed,
                                              std::vector<std::string>* warnings) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split: train_fraction must lie in (0,1)");
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw ConfigError("split: train or test part would be empty");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(substream_seed(seed, "split"));
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng() % i)]);

  auto take = [&](std::size_t first, std::size_t count) {
    Dataset part;
    part.feature_names = ds.feature_names;
    std::span<const std::size_t> sel(idx.data() + first, count);
    part.x = select_rows(ds.x, sel);
    if (ds.targets) {
      std::vector<double> t;
      for (auto i : sel) t.push_back((*ds.targets)[i]);
      part.targets = std::move(t);
    }
    return part;
  };
  Dataset train = take(0, n_train);
  Dataset test = take(n_train, n - n_train);

  const Standardization stats = fit_standardization(train.x);
  for (std::size_t j = 0; j < stats.std.size(); ++j)
    if (stats.std[j] == 0.0 && warnings) {
      const std::string name = j < ds.feature_names.size() ? ds.feature_names[j] : std::to_string(j);
      warnings->push_back("feature '" + name + "' is constant on the train split; mapped to 0");
    }
  train.x = stats.apply(train.x);
  test.x = stats.apply(test.x);
  train.standardization = stats;
  test.standardization = stats;
  return {std::move(train), std::move(test)};
}

} // namespace localmax
