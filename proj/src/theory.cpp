#include <algorithm>
#include <cmath>
#include <random>

#include "localmax/errors.hpp"
#include "localmax/rng.hpp"
#include "localmax/theory.hpp"

namespace localmax {

using nlohmann::json;

namespace {

double frobenius_sq(const Matrix& w) {
  double s = 0.0;
  for (double v : w.values()) s += v * v;
  return s;
}

// y = W x
void apply(const Matrix& w, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w(r, c) * x[c];
}

// y = W^T x
void apply_t(const Matrix& w, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += w(r, c) * x[r];
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<const Matrix*> affine_weights(const Network& net) {
  std::vector<const Matrix*> out;
  for (const auto& l : net.layers)
    if (l.spec.kind == LayerKind::affine) out.push_back(&l.weight);
  return out;
}

std::size_t widest(const Network& net) {
  std::size_t q = 0;
  for (const auto& l : net.layers)
    if (l.spec.kind == LayerKind::affine) q = std::max({q, l.spec.in_dim, l.spec.out_dim});
  return q;
}

} // namespace

double spectral_norm(const Matrix& w, double tol, std::size_t max_iterations) {
  if (w.rows() == 0 || w.cols() == 0) throw ConfigError("spectral_norm: empty matrix");
  if (frobenius_sq(w) == 0.0) throw ConfigError("spectral_norm: zero weight matrix");
  for (double v : w.values())
    if (!std::isfinite(v)) throw NumericError("spectral_norm: non-finite weight");

  // Fixed pseudo-random start so the result is reproducible; a random vector
  // is almost surely not orthogonal to the top singular vector.
  Rng rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss;
  std::vector<double> v(w.cols()), wv, wtwv;
  for (auto& x : v) x = gauss(rng);
  double nv = norm(v);
  for (auto& x : v) x /= nv;

  double sigma_sq = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    apply(w, v, wv);
    apply_t(w, wv, wtwv);
    double rayleigh = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) rayleigh += v[i] * wtwv[i];
    double residual = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = wtwv[i] - rayleigh * v[i];
      residual += d * d;
    }
    sigma_sq = rayleigh;
    const double n = norm(wtwv);
    if (n == 0.0) break;
    if (std::sqrt(residual) <= tol * std::max(rayleigh, 1e-300)) break;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = wtwv[i] / n;
  }
  return std::sqrt(std::max(sigma_sq, 0.0));
}

SpectralTerms spectral_terms(const Network& net) {
  SpectralTerms t;
  const auto weights = affine_weights(net);
  if (weights.empty()) throw ConfigError("spectral_complexity: network has no affine layers");
  for (const Matrix* w : weights) {
    const double s = spectral_norm(*w);
    const double s2 = s * s;
    t.norm_product *= s2;
    t.ratio_sum += frobenius_sq(*w) / s2;
  }
  t.complexity = t.norm_product * t.ratio_sum;
  return t;
}

double spectral_complexity(const Network& net) { return spectral_terms(net).complexity; }

void MarginRiskConfig::validate() const {
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw ConfigError("margin risk: margins must be nonnegative");
  if (!(eps > 0.0)) throw ConfigError("margin risk: eps must be positive");
  if (samples == 0) throw ConfigError("margin risk: need at least one neighborhood sample");
  if (!(domain_radius > 0.0)) throw ConfigError("margin risk: domain radius must be positive");
}

double margin_empirical_risk(const Network& v, const Network& f, const Matrix& data,
                             const MarginRiskConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t d = data.cols();
  if (data.rows() == 0) throw ConfigError("margin risk: empty data");
  if (v.in_dim() != d || f.in_dim() != d || v.out_dim() != 1 || f.out_dim() != 1)
    throw ConfigError("margin risk: v and f must map the data dimension to a scalar");

  const Matrix fx = predict(f, data);
  const Matrix vx = predict(v, data);
  const std::uint64_t stream = substream_seed(seed, "margin");
  std::size_t fired = 0;
  Matrix ball(cfg.samples, d);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    Rng rng(task_seed(stream, i));
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    for (std::size_t k = 0; k < cfg.samples; ++k) {
      double n2 = 0.0;
      auto row = ball.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = gauss(rng);
        n2 += row[j] * row[j];
      }
      const double radius = cfg.eps * std::pow(unif(rng), 1.0 / static_cast<double>(d));
      const double scale = n2 > 0.0 ? radius / std::sqrt(n2) : 0.0;
      for (std::size_t j = 0; j < d; ++j) row[j] = data(i, j) + scale * row[j];
    }
    const Matrix vn = predict(v, ball);
    double best = vx(i, 0); // x itself belongs to its neighborhood
    for (std::size_t k = 0; k < cfg.samples; ++k) best = std::max(best, vn(k, 0));
    const bool not_dominant = vx(i, 0) < best - cfg.gamma1;
    const bool not_positive = fx(i, 0) - cfg.gamma2 <= 0.0;
    if (not_dominant || not_positive) ++fired;
  }
  return static_cast<double>(fired) / static_cast<double>(data.rows());
}

json BoundProxy::to_json() const {
  return json{{"r", r},
              {"s", s},
              {"q1", q1},
              {"q2", q2},
              {"complexity_v", complexity_v},
              {"complexity_f", complexity_f},
              {"value_term", value_term},
              {"classifier_term", classifier_term},
              {"bracket", bracket},
              {"log_term", log_term},
              {"proxy", proxy},
              {"constant", 1.0}};
}

BoundProxy bound_penalty_proxy(const Network& v, const Network& f, double domain_radius,
                               double gamma1, double gamma2, std::size_t m, double delta) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw ConfigError("bound proxy: margins must be positive");
  if (m < 2) throw ConfigError("bound proxy: need m >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("bound proxy: delta must lie in (0, 1)");
  if (!(domain_radius > 0.0)) throw ConfigError("bound proxy: domain radius must be positive");

  BoundProxy b;
  b.r = affine_weights(v).size();
  b.s = affine_weights(f).size();
  b.q1 = widest(v);
  b.q2 = widest(f);
  b.complexity_v = spectral_complexity(v);
  b.complexity_f = spectral_complexity(f);
  const double r = static_cast<double>(b.r), s = static_cast<double>(b.s);
  const double q1 = static_cast<double>(b.q1), q2 = static_cast<double>(b.q2);
  b.value_term = r * r * q1 * std::log(r * q1) * b.complexity_v / (gamma1 * gamma1);
  b.classifier_term = s * s * q2 * std::log(s * q2) * b.complexity_f / (gamma2 * gamma2);
  b.bracket = domain_radius * domain_radius * (b.value_term + b.classifier_term);
  const double md = static_cast<double>(m);
  b.log_term = std::log(md / delta);
  b.proxy = std::sqrt((b.bracket + b.log_term) / md);
  return b;
}

} // namespace localmax
