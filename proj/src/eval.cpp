#include "localmax/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "localmax/hash.hpp"
#include "localmax/kernels.hpp"
#include "localmax/rng.hpp"

namespace localmax {

using nlohmann::json;

double auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw ConfigError("auc: both score lists must be nonempty");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  for (const auto& it : all)
    if (std::isnan(it.score)) throw NumericError("auc: NaN score");
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  // Ranks are 1-based; tied blocks share their average rank (a half-integer,
  // exact in double).
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].positive) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

std::string to_string(Score s) { return s == Score::c ? "c" : "h"; }

Score score_from_string(const std::string& s) {
  if (s == "c") return Score::c;
  if (s == "h" || s == "h_unary") return Score::h_unary;
  throw ConfigError("unknown score '" + s + "' (expected c or h)");
}

std::vector<double> score_points(const QuadModel& model, Score score, const Matrix& x) {
  return score == Score::c ? classifier_scores(model.c, x) : comparator_unary_batch(model.h, x);
}

json EvalReport::to_json() const {
  json c = json::object();
  for (const auto& [k, v] : counts) c[k] = v;
  return json{{"protocol", protocol},
              {"metrics", metrics},
              {"seed", seed},
              {"counts", c},
              {"config_hash", config_hash}};
}

std::string model_fingerprint(const QuadModel& model) {
  Fnv1a h;
  for (const Network* n : {&model.c, &model.h, &model.g_c, &model.g_h}) h.update(n->state_hash());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.digest()));
  return buf;
}

EvalReport one_class_eval(const QuadModel& model, Score score, const Matrix& pos_test,
                          const Matrix& neg_test) {
  if (pos_test.cols() != model.dim || neg_test.cols() != model.dim)
    throw ConfigError("one_class_eval: test set dimension does not match the model");
  const auto sp = score_points(model, score, pos_test);
  const auto sn = score_points(model, score, neg_test);
  EvalReport r;
  r.protocol = "one-class";
  r.metrics = json{{"score", to_string(score)}, {"auc", auc(sp, sn)}};
  r.counts = {{"positive", pos_test.rows()}, {"negative", neg_test.rows()}};
  r.config_hash = model_fingerprint(model);
  return r;
}

EvalReport one_class_eval(const QuadModel& model, Score score, const Dataset& pos_test,
                          const Dataset& neg_test) {
  if (pos_test.standardization != model.standardization ||
      neg_test.standardization != model.standardization)
    throw ConfigError("one_class_eval: test sets were not standardized with the model's training statistics");
  return one_class_eval(model, score, pos_test.x, neg_test.x);
}

NoiseSweep noise_sweep(const QuadModel& model, const Matrix& test_points,
                       std::span<const double> sigmas, std::uint64_t seed,
                       const Matrix* noise_source) {
  if (sigmas.empty()) throw ConfigError("noise_sweep: sigma list is empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] >= 0.0)) throw ConfigError("noise_sweep: sigmas must be non-negative");
    if (i && sigmas[i] < sigmas[i - 1]) throw ConfigError("noise_sweep: sigmas must be sorted");
  }
  const Matrix& base = noise_source ? *noise_source : test_points;
  if (base.cols() != model.dim || test_points.cols() != model.dim)
    throw ConfigError("noise_sweep: point dimension does not match the model");

  const auto pos_c = score_points(model, Score::c, test_points);
  const auto pos_h = score_points(model, Score::h_unary, test_points);

  NoiseSweep out;
  const std::uint64_t stream = substream_seed(seed, "noise");
  json rows = json::array();
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    Rng rng(task_seed(stream, k));
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix noisy = base;
    for (double& v : noisy.values()) v += sigmas[k] * normal(rng);
    NoisePoint p;
    p.sigma = sigmas[k];
    p.auc_c = auc(pos_c, score_points(model, Score::c, noisy));
    p.auc_h = auc(pos_h, score_points(model, Score::h_unary, noisy));
    out.rows.push_back(p);
    rows.push_back({{"sigma", p.sigma}, {"auc_c", p.auc_c}, {"auc_h", p.auc_h}});
  }
  out.report.protocol = noise_source ? "noise-sweep/all-classes" : "noise-sweep/in-class";
  out.report.metrics = json{{"rows", rows}};
  out.report.seed = seed;
  out.report.counts = {{"positive", test_points.rows()}, {"negative", base.rows()},
                       {"sigmas", sigmas.size()}};
  out.report.config_hash = model_fingerprint(model);
  return out;
}

Matrix noise_sweep_table(const NoiseSweep& sweep) {
  Matrix t(sweep.rows.size(), 3);
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    t(i, 0) = sweep.rows[i].sigma;
    t(i, 1) = sweep.rows[i].auc_c;
    t(i, 2) = sweep.rows[i].auc_h;
  }
  return t;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("pearson: need two equal-length vectors");
  const auto pair = kernels::center_pair(x, y);
  std::vector<std::size_t> identity(x.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return kernels::permuted_correlation(pair, identity);
}

PermutationTest permutation_test(std::span<const double> x, std::span<const double> y,
                                 std::size_t permutations, std::uint64_t seed) {
  if (permutations < 1) throw ConfigError("permutation_test: need at least one permutation");
  const auto pair = kernels::center_pair(x, y);
  std::vector<std::size_t> identity(x.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  PermutationTest t;
  t.r = kernels::permuted_correlation(pair, identity);
  t.permutations = permutations;
  // A permutation ties the observed statistic when it matches up to rounding.
  const double threshold = std::abs(t.r) * (1.0 - 1e-12);
  const std::size_t exceed =
      kernels::permutation_exceedances(pair, permutations, substream_seed(seed, "permutation"), threshold);
  t.p_value = static_cast<double>(1 + exceed) / static_cast<double>(permutations + 1);
  return t;
}

namespace {

void check_correlation_inputs(const Matrix& points, std::span<const double> targets,
                              std::size_t permutations) {
  if (points.rows() < 3) throw ConfigError("local_correlation: need at least 3 points");
  if (targets.size() != points.rows())
    throw ConfigError("local_correlation: targets are not aligned with the points");
  if (permutations < 1000) throw ConfigError("local_correlation: need at least 1000 permutations");
}

CorrelationResult finish(std::vector<double> score_side, std::vector<double> target_side,
                         std::size_t permutations, std::uint64_t seed, const std::string& protocol,
                         const std::string& orientation, std::size_t n) {
  CorrelationResult r;
  const auto t = permutation_test(score_side, target_side, permutations, seed);
  r.r = t.r;
  r.p_value = t.p_value;
  r.permutations = permutations;
  r.score_side = std::move(score_side);
  r.target_side = std::move(target_side);
  r.report.protocol = protocol;
  r.report.metrics = json{{"pearson_r", r.r}, {"p_value", r.p_value}, {"permutations", permutations},
                          {"p_value_method", "two-sided permutation, add-one"}};
  if (!orientation.empty()) r.report.metrics["pair_orientation"] = orientation;
  r.report.seed = seed;
  r.report.counts = {{"points", n}, {"permutations", permutations}};
  return r;
}

} // namespace

CorrelationResult local_correlation(std::span<const double> scores, const Matrix& points,
                                    std::span<const double> targets, CorrelationMode mode,
                                    std::size_t permutations, std::uint64_t seed) {
  check_correlation_inputs(points, targets, permutations);
  if (scores.size() != points.rows())
    throw ConfigError("local_correlation: scores are not aligned with the points");
  if (mode == CorrelationMode::standard)
    return finish({scores.begin(), scores.end()}, {targets.begin(), targets.end()}, permutations,
                  seed, "correlation/standard", "", points.rows());

  auto nn = kernels::nearest_neighbors(points);
  std::vector<double> ds(points.rows()), dt(points.rows());
  for (std::size_t i = 0; i < nn.size(); ++i) {
    ds[i] = scores[i] - scores[nn[i]];
    dt[i] = targets[i] - targets[nn[i]];
  }
  auto r = finish(std::move(ds), std::move(dt), permutations, seed, "correlation/local", "",
                  points.rows());
  r.neighbors = std::move(nn);
  return r;
}

CorrelationResult local_correlation(const Network& h, const Matrix& points,
                                    std::span<const double> targets, std::size_t permutations,
                                    std::uint64_t seed) {
  check_correlation_inputs(points, targets, permutations);
  auto nn = kernels::nearest_neighbors(points);
  const Matrix neighbors = select_rows(points, nn);
  auto hs = comparator_batch(h, points, neighbors);
  std::vector<double> dt(points.rows());
  for (std::size_t i = 0; i < nn.size(); ++i) dt[i] = targets[i] - targets[nn[i]];
  auto r = finish(std::move(hs), std::move(dt), permutations, seed, "correlation/local-h",
                  "h(point, nearest_neighbor)", points.rows());
  r.neighbors = std::move(nn);
  return r;
}

const std::array<std::array<double, 2>, 8>& compass_directions() {
  static const double s = std::sqrt(0.5);
  static const std::array<std::array<double, 2>, 8> dirs{{
      {0.0, 1.0}, {s, s}, {1.0, 0.0}, {s, -s}, {0.0, -1.0}, {-s, -s}, {-1.0, 0.0}, {-s, s}}};
  return dirs;
}

FieldExport grid_field_export(const QuadModel& model, const FieldBounds& b, std::size_t resolution) {
  if (model.dim != 2) throw ConfigError("grid_field_export: model must be two-dimensional");
  if (resolution < 16) throw ConfigError("grid_field_export: resolution must be at least 16");
  if (!(b.x_lo < b.x_hi && b.y_lo < b.y_hi)) throw ConfigError("grid_field_export: empty bounds");

  const std::size_t R = resolution;
  const double dx = (b.x_hi - b.x_lo) / static_cast<double>(R - 1);
  const double dy = (b.y_hi - b.y_lo) / static_cast<double>(R - 1);
  Matrix grid(R * R, 2);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j) {
      grid(i * R + j, 0) = b.x_lo + dx * static_cast<double>(i);
      grid(i * R + j, 1) = b.y_lo + dy * static_cast<double>(j);
    }

  FieldExport out;
  out.step = std::min(dx, dy);
  const auto c = classifier_scores(model.c, grid);
  out.heatmap = Matrix(R * R, 3);
  for (std::size_t k = 0; k < R * R; ++k) {
    out.heatmap(k, 0) = grid(k, 0);
    out.heatmap(k, 1) = grid(k, 1);
    out.heatmap(k, 2) = c[k];
  }

  const auto& dirs = compass_directions();
  Matrix probes(R * R * 8, 2), anchors(R * R * 8, 2);
  for (std::size_t k = 0; k < R * R; ++k)
    for (std::size_t q = 0; q < 8; ++q) {
      const std::size_t row = k * 8 + q;
      anchors(row, 0) = grid(k, 0);
      anchors(row, 1) = grid(k, 1);
      probes(row, 0) = grid(k, 0) + out.step * dirs[q][0];
      probes(row, 1) = grid(k, 1) + out.step * dirs[q][1];
    }
  const auto hv = comparator_batch(model.h, probes, anchors);
  out.quiver = Matrix(R * R, 4);
  for (std::size_t k = 0; k < R * R; ++k) {
    std::size_t best = 0;
    for (std::size_t q = 1; q < 8; ++q)
      if (hv[k * 8 + q] > hv[k * 8 + best]) best = q;
    out.quiver(k, 0) = grid(k, 0);
    out.quiver(k, 1) = grid(k, 1);
    out.quiver(k, 2) = dirs[best][0];
    out.quiver(k, 3) = dirs[best][1];
  }
  return out;
}

double center_dominance(const Network& h, std::span<const double> center, double step) {
  if (center.size() != 2) throw ConfigError("center_dominance: two-dimensional centers only");
  Matrix a(8, 2), p(8, 2);
  const auto& dirs = compass_directions();
  for (std::size_t q = 0; q < 8; ++q) {
    a(q, 0) = center[0];
    a(q, 1) = center[1];
    p(q, 0) = center[0] + step * dirs[q][0];
    p(q, 1) = center[1] + step * dirs[q][1];
  }
  const auto v = comparator_batch(h, a, p);
  return std::accumulate(v.begin(), v.end(), 0.0) / 8.0;
}

json ModeCoverage::to_json() const {
  return json{{"center_scores", center_scores},
              {"covered", covered},
              {"centers", center_scores.size()},
              {"auc_c", auc_c},
              {"mean_h_diag", mean_h_diag}};
}

ModeCoverage mode_coverage(const QuadModel& model, const Matrix& centers, const Matrix& heldout,
                           const Matrix& background) {
  ModeCoverage m;
  m.center_scores = classifier_scores(model.c, centers);
  m.covered = static_cast<std::size_t>(
      std::count_if(m.center_scores.begin(), m.center_scores.end(), [](double v) { return v > 0.5; }));
  m.auc_c = auc(classifier_scores(model.c, heldout), classifier_scores(model.c, background));
  const auto diag = comparator_unary_batch(model.h, heldout);
  m.mean_h_diag = std::accumulate(diag.begin(), diag.end(), 0.0) / static_cast<double>(diag.size());
  return m;
}

} // namespace localmax
