#include <algorithm>
#include <cmath>
#include <limits>

#include "localmax/errors.hpp"
#include "localmax/theory.hpp"

namespace localmax {

using nlohmann::json;

double PiecewiseLinear1D::operator()(double x) const {
  const auto idx = static_cast<std::size_t>(
      std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin());
  return slopes[idx] * x + intercepts[idx];
}

double PiecewiseLinear1D::max_gap() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    const double t = breakpoints[i];
    const double left = slopes[i] * t + intercepts[i];
    const double right = slopes[i + 1] * t + intercepts[i + 1];
    worst = std::max(worst, std::abs(left - right) / std::max(1.0, std::abs(left)));
  }
  return worst;
}

void PiecewiseLinear1D::validate() const {
  if (slopes.size() != breakpoints.size() + 1 || intercepts.size() != slopes.size())
    throw InternalError("piecewise: need breakpoints + 1 pieces");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1]))
      throw InternalError("piecewise: breakpoints must be strictly increasing");
  if (continuous && max_gap() >= 1e-9) throw InternalError("piecewise: discontinuity at a breakpoint");
}

MaxNetConstruction construct_max_net(std::span<const double> points) {
  const std::size_t m = points.size();
  if (m == 0) throw ConfigError("construct_max_net: point set is empty");
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(points[i])) throw ConfigError("construct_max_net: non-finite point");
    if (i && !(points[i] > points[i - 1]))
      throw ConfigError("construct_max_net: points must be strictly increasing (duplicate or unsorted)");
  }

  PiecewiseLinear1D f;
  // Left ray through (x_1, 1) with slope +1.
  f.slopes.push_back(1.0);
  f.intercepts.push_back(1.0 - points[0]);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = points[i], b = points[i + 1];
    const double gap = b - a;
    f.breakpoints.push_back(a);
    f.slopes.push_back(-2.0 / gap); // (a, 1) down to (mid, 0)
    f.intercepts.push_back(1.0 + 2.0 * a / gap);
    f.breakpoints.push_back(0.5 * (a + b));
    f.slopes.push_back(2.0 / gap); // (mid, 0) up to (b, 1)
    f.intercepts.push_back(1.0 - 2.0 * b / gap);
  }
  f.breakpoints.push_back(points[m - 1]);
  f.slopes.push_back(-1.0);
  f.intercepts.push_back(points[m - 1] + 1.0);
  f.continuous = true;

  // v(x) = 1 - relu(x_1 - x) + sum_j c_j relu(x - t_j): one unit for the left
  // ray plus one per breakpoint, 2m in total.
  const std::size_t k = f.breakpoints.size(); // 2m - 1
  const std::size_t hidden = k + 1;
  std::vector<LayerSpec> specs{LayerSpec::affine(1, hidden), LayerSpec::relu(hidden),
                               LayerSpec::affine(hidden, 1)};
  Network net = init_network(specs, 0);
  Layer& in = net.layers[0];
  Layer& out = net.layers[2];
  in.weight(0, 0) = -1.0;
  in.bias[0] = points[0];
  out.weight(0, 0) = -1.0;
  for (std::size_t j = 0; j < k; ++j) {
    in.weight(j + 1, 0) = 1.0;
    in.bias[j + 1] = -f.breakpoints[j];
    out.weight(0, j + 1) = j == 0 ? f.slopes[1] : f.slopes[j + 1] - f.slopes[j];
  }
  out.bias[0] = 1.0;
  return {std::move(net), std::move(f)};
}

double evaluate_1d(const Network& net, double x) {
  if (net.in_dim() != 1 || net.out_dim() != 1) throw ConfigError("evaluate_1d: network must map R -> R");
  Matrix b(1, 1, x);
  return predict(net, b)(0, 0);
}

namespace {

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

double representative(double lo, double hi) {
  if (std::isinf(lo) && std::isinf(hi)) return 0.0;
  if (std::isinf(lo)) return hi - 1.0;
  if (std::isinf(hi)) return lo + 1.0;
  return 0.5 * (lo + hi);
}

} // namespace

PiecewiseLinear1D extract_pieces(const Network& net) {
  if (net.in_dim() != 1 || net.out_dim() != 1)
    throw ConfigError("extract_pieces: network must have one input and one output");
  for (const auto& l : net.layers)
    if (l.spec.kind != LayerKind::affine && l.spec.kind != LayerKind::relu)
      throw ConfigError("extract_pieces: unsupported layer kind " + to_string(l.spec.kind) +
                        " (affine and relu only)");

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> bps;                              // region boundaries
  std::vector<std::vector<Line>> regions{{Line{1.0, 0.0}}}; // per region, per unit

  for (const auto& layer : net.layers) {
    if (layer.spec.kind == LayerKind::affine) {
      for (auto& units : regions) {
        std::vector<Line> next(layer.spec.out_dim);
        for (std::size_t o = 0; o < next.size(); ++o) {
          double s = 0.0, c = layer.bias[o];
          for (std::size_t k = 0; k < units.size(); ++k) {
            s += layer.weight(o, k) * units[k].slope;
            c += layer.weight(o, k) * units[k].intercept;
          }
          next[o] = {s, c};
        }
        units = std::move(next);
      }
      continue;
    }
    // ReLU: split every region at the zero crossings of its units, then
    // resolve each unit's sign on each sub-region.
    std::vector<double> new_bps;
    std::vector<std::vector<Line>> new_regions;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const double lo = r == 0 ? -inf : bps[r - 1];
      const double hi = r == bps.size() ? inf : bps[r];
      std::vector<double> cuts;
      for (const auto& u : regions[r]) {
        if (u.slope == 0.0) continue;
        const double z = -u.intercept / u.slope;
        if (z > lo && z < hi) cuts.push_back(z);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      double sub_lo = lo;
      for (std::size_t ci = 0; ci <= cuts.size(); ++ci) {
        const double sub_hi = ci < cuts.size() ? cuts[ci] : hi;
        const double x = representative(sub_lo, sub_hi);
        std::vector<Line> units = regions[r];
        for (auto& u : units)
          if (!(u.slope * x + u.intercept > 0.0)) u = {0.0, 0.0};
        new_regions.push_back(std::move(units));
        if (ci < cuts.size()) new_bps.push_back(cuts[ci]);
        sub_lo = sub_hi;
      }
      if (r < bps.size()) new_bps.push_back(bps[r]);
    }
    bps = std::move(new_bps);
    regions = std::move(new_regions);
  }

  PiecewiseLinear1D f;
  f.slopes.push_back(regions[0][0].slope);
  f.intercepts.push_back(regions[0][0].intercept);
  for (std::size_t r = 1; r < regions.size(); ++r) {
    const Line& u = regions[r][0];
    if (std::abs(u.slope - f.slopes.back()) < 1e-9) continue; // collinear: same piece
    f.breakpoints.push_back(bps[r - 1]);
    f.slopes.push_back(u.slope);
    f.intercepts.push_back(u.intercept);
  }
  f.continuous = true;
  return f;
}

std::vector<double> scan_grid(double lo, double hi, double step, std::span<const double> extra) {
  if (!(step > 0.0) || !(hi > lo)) throw ConfigError("scan_grid: need step > 0 and hi > lo");
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  std::vector<double> xs;
  xs.reserve(n + 1 + extra.size());
  for (std::size_t i = 0; i <= n; ++i) xs.push_back(lo + step * static_cast<double>(i));
  xs.insert(xs.end(), extra.begin(), extra.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

std::vector<double> grid_local_maxima(const std::function<double(double)>& f,
                                      std::span<const double> xs) {
  std::vector<double> values(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) values[i] = f(xs[i]);
  std::vector<double> maxima;
  for (std::size_t i = 1; i + 1 < xs.size(); ++i)
    if (values[i] > values[i - 1] && values[i] > values[i + 1]) maxima.push_back(xs[i]);
  return maxima;
}

json PieceClaim::to_json() const {
  return json{{"claim", claim},       {"m", m},           {"pieces", pieces},
              {"required", required}, {"premise", premise}, {"passed", passed},
              {"status", status}};
}

std::vector<PieceClaim> count_pieces_lower_bound_check(std::span<const double> points,
                                                       const Network& net, double tol) {
  const std::size_t m = points.size();
  if (m == 0) throw ConfigError("piece check: point set is empty");
  for (std::size_t i = 1; i < m; ++i)
    if (!(points[i] > points[i - 1])) throw ConfigError("piece check: points must be strictly increasing");

  const std::size_t pieces = extract_pieces(net).pieces();
  double min_gap = 1.0;
  for (std::size_t i = 1; i < m; ++i) min_gap = std::min(min_gap, points[i] - points[i - 1]);
  const double probe = min_gap / 200.0;
  auto v = [&](double x) { return evaluate_1d(net, x); };

  auto finish = [&](PieceClaim c) {
    c.m = m;
    c.pieces = pieces;
    if (!c.premise) {
      c.passed = true;
      c.status = "vacuous";
    } else {
      c.passed = pieces >= c.required;
      c.status = c.passed ? "passed" : "failed";
    }
    return c;
  };

  PieceClaim maxima;
  maxima.claim = "local-maxima";
  maxima.required = 2 * m;
  maxima.premise = true;
  for (double x : points) {
    const double vx = v(x);
    if (!(vx > v(x - probe) && vx > v(x + probe))) maxima.premise = false;
  }

  // Indicator premise: ~1 on the points, ~0 at two probes inside every gap
  // and at one probe within distance 1 outside each end.
  PieceClaim indicator;
  indicator.claim = "indicator";
  indicator.required = 3 * m + 1;
  indicator.premise = true;
  for (double x : points)
    if (std::abs(v(x) - 1.0) > tol) indicator.premise = false;
  auto zeros_in = [&](double lo, double hi) {
    std::size_t count = 0;
    constexpr int kProbes = 200;
    for (int k = 1; k < kProbes; ++k) {
      const double x = lo + (hi - lo) * k / kProbes;
      if (std::abs(v(x)) <= tol) ++count;
    }
    return count;
  };
  for (std::size_t i = 0; i + 1 < m && indicator.premise; ++i)
    if (zeros_in(points[i], points[i + 1]) < 2) indicator.premise = false;
  if (indicator.premise && (zeros_in(points[0] - 1.0, points[0]) < 1 ||
                            zeros_in(points[m - 1], points[m - 1] + 1.0) < 1))
    indicator.premise = false;

  return {finish(maxima), finish(indicator)};
}

} // namespace localmax
