#include "localmax/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "localmax/checkpoint.hpp"
#include "localmax/data.hpp"
#include "localmax/errors.hpp"
#include "localmax/eval.hpp"
#include "localmax/rng.hpp"
#include "localmax/theory.hpp"
#include "localmax/trainer.hpp"

namespace localmax::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("write failed: " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

// Outputs are staged in <out>.partial and moved into place once the command
// has succeeded.
class RunDir {
public:
  RunDir(fs::path out, bool force) : final_(std::move(out)) {
    if (final_.empty()) throw ConfigError("--out is required");
    if (fs::exists(final_) && !force && !(fs::is_directory(final_) && fs::is_empty(final_)))
      throw ConfigError("output directory " + final_.string() + " exists (pass --force to replace it)");
    staging_ = final_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }

  fs::path operator/(const std::string& name) const { return staging_ / name; }

  void commit() {
    fs::remove_all(final_);
    fs::rename(staging_, final_);
  }

private:
  fs::path final_;
  fs::path staging_;
};

// Flag-backed settings that can also come from a JSON config. A flag given on
// the command line wins over the file; the file wins over the default.
class Settings {
public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& key, T& var, const std::string& help) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = app->add_option(flag, var, help)->capture_default_str();
    items_.push_back({key, opt, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
    return opt;
  }

  template <class T>
  CLI::Option* add_list(CLI::App* app, const std::string& key, std::vector<T>& var, const std::string& help) {
    return add(app, key, var, help)->delimiter(',');
  }

  /// Keys of `file` outside `extra` must be known settings.
  void apply(const json& file, std::initializer_list<std::string> extra = {}) {
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      const bool known =
          key == "subcommand" || std::find(extra.begin(), extra.end(), key) != extra.end() ||
          std::any_of(items_.begin(), items_.end(), [&](const Item& it) { return it.key == key; });
      if (!known) throw ConfigError("unknown config key '" + key + "'");
    }
    for (auto& it : items_) {
      if (it.opt->count() > 0 || !file.contains(it.key)) continue;
      try {
        it.from(file.at(it.key));
      } catch (const json::exception& e) {
        throw ConfigError("config key '" + it.key + "': " + e.what());
      }
    }
  }

  json echo(const std::string& subcommand) const {
    json j{{"subcommand", subcommand}};
    for (const auto& it : items_) j[it.key] = it.to();
    return j;
  }

private:
  struct Item {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> from;
    std::function<json()> to;
  };
  std::vector<Item> items_;
};

// State shared by every subcommand.
struct Common {
  std::string config;
  std::string out;
  bool force = false;
  int verbose = 0;
};

void add_common(CLI::App* app, Common& c, bool needs_out) {
  app->add_option("--config", c.config, "JSON config; flags override its values")->check(CLI::ExistingFile);
  auto* out = app->add_option("--out", c.out, "output directory");
  if (needs_out) out->required();
  app->add_flag("--force", c.force, "replace an existing output directory");
  app->add_flag("--verbose", c.verbose, "progress on stderr");
}

json load_config(const Common& c) { return c.config.empty() ? json::object() : read_json(c.config); }

Network pick_network(const fs::path& path, const std::string& which) {
  if (path.empty()) throw ConfigError("missing network checkpoint path");
  const auto file = read_checkpoint(path);
  if (file.kind == "network") return load_network(path);
  QuadModel m = load_quad_model(path);
  if (which == "c") return m.c;
  if (which == "h") return m.h;
  if (which == "g_c") return m.g_c;
  if (which == "g_h") return m.g_h;
  throw ConfigError("--net must be one of c, h, g_c, g_h (got '" + which + "')");
}

// CSV rows mapped into the model's input space.
Dataset load_for_model(const QuadModel& model, const std::string& path,
                       const std::optional<std::string>& target = std::nullopt) {
  if (path.empty()) throw ConfigError("missing CSV path");
  Dataset ds = load_csv(path, target);
  if (ds.x.cols() != model.dim)
    throw ConfigError(path + ": expected " + std::to_string(model.dim) + " feature columns, found " +
                      std::to_string(ds.x.cols()));
  if (model.standardization) {
    ds.x = model.standardization->apply(ds.x);
    ds.standardization = model.standardization;
  }
  return ds;
}

Matrix single_column(std::span<const double> a) {
  Matrix m(a.size(), 1);
  for (std::size_t i = 0; i < a.size(); ++i) m(i, 0) = a[i];
  return m;
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  Settings settings;
  std::uint64_t seed = 0;
  std::string data;
  std::string target;
  std::size_t n = 4096;
  double sigma = 0.01;
  std::vector<double> grid = GmmConfig{}.grid;
  std::size_t heldout = 512;
  std::size_t background = 512;
  double min_dist = 0.1;
  std::size_t checkpoint_every = 50;
  std::optional<std::string> variant;
  std::optional<std::size_t> epochs;
  std::string resume;
};

void setup_train(CLI::App* app, TrainArgs& a) {
  add_common(app, a.common, true);
  auto& s = a.settings;
  s.add(app, "seed", a.seed, "root seed");
  s.add(app, "data", a.data, "training CSV; empty samples the GMM grid");
  s.add(app, "target", a.target, "CSV column excluded from the features");
  s.add(app, "n", a.n, "GMM sample count");
  s.add(app, "sigma", a.sigma, "GMM component std");
  s.add_list(app, "grid", a.grid, "GMM per-axis center coordinates");
  s.add(app, "heldout", a.heldout, "GMM held-out positives for metrics");
  s.add(app, "background", a.background, "GMM uniform background points for metrics");
  s.add(app, "min_dist", a.min_dist, "background distance to every center");
  s.add(app, "checkpoint_every", a.checkpoint_every, "epochs between checkpoints (0: none)");
  app->add_option("--variant", a.variant, "full, c_only, h_only, shared_gc or shared_gh");
  app->add_option("--epochs", a.epochs, "outer iterations T");
  app->add_option("--resume", a.resume, "train-state checkpoint to continue from")->check(CLI::ExistingFile);
}

int do_train(TrainArgs& a) {
  const json file = load_config(a.common);
  a.settings.apply(file, {"train"});
  TrainConfig cfg = train_config_from_json(file.value("train", json::object()));
  if (a.variant) cfg.variant = variant_from_string(*a.variant);
  if (a.epochs) cfg.epochs = *a.epochs;
  cfg.seed = a.seed;
  cfg.validate();

  json resolved = a.settings.echo("train");
  resolved["train"] = train_config_to_json(cfg);
  RunDir dir(a.common.out, a.common.force);
  write_json(dir / "config.json", resolved);

  const bool gmm = a.data.empty();
  GmmConfig g;
  g.grid = a.grid;
  g.sigma = a.sigma;
  g.n = a.n;
  g.seed = a.seed;
  Dataset ds = gmm ? sample_gmm(g, a.n, substream_seed(a.seed, "synth"))
                   : load_csv(a.data, a.target.empty() ? std::nullopt : std::optional(a.target));
  const Standardization stats = fit_standardization(ds.x);
  const Matrix x = stats.apply(ds.x);

  fs::create_directories(dir / "checkpoints");
  std::ofstream log(dir / "log.jsonl", std::ios::binary);
  auto on_epoch = [&](const TrainState& st, const std::vector<PhaseLog>& phases) {
    for (const auto& p : phases) log << phase_log_to_json(p).dump() << '\n';
    log.flush();
    if (a.common.verbose) {
      std::cerr << "epoch " << st.epochs_done;
      for (const auto& p : phases) std::cerr << ' ' << to_string(p.player) << '=' << p.loss.total;
      std::cerr << '\n';
    }
    if (a.checkpoint_every && st.epochs_done % a.checkpoint_every == 0) {
      TrainState copy = st;
      copy.model.standardization = stats;
      save_train_state(dir / ("checkpoints/epoch_" + std::to_string(st.epochs_done) + ".ckpt"), copy, cfg);
    }
  };

  TrainResult result;
  try {
    if (!a.resume.empty()) {
      TrainState st = load_train_state(a.resume);
      result = resume_training(x, cfg, std::move(st), on_epoch);
    } else {
      result = cfg.variant == Variant::full ? train(x, cfg, on_epoch) : train_variant(x, cfg, on_epoch);
    }
  } catch (const TrainingDiverged& e) {
    TrainState last = e.last_good();
    last.model.standardization = stats;
    save_train_state(dir / "checkpoints/last_good.ckpt", last, cfg);
    log.close();
    dir.commit();
    throw;
  }
  log.close();

  QuadModel model = result.state.model;
  model.standardization = stats;
  save_quad_model(dir / "model.ckpt", model);
  {
    TrainState final_state = result.state;
    final_state.model.standardization = stats;
    save_train_state(dir / "checkpoints/final.ckpt", final_state, cfg);
  }

  json metrics{{"protocol", "train"},
               {"variant", to_string(cfg.variant)},
               {"seed", a.seed},
               {"epochs", result.state.epochs_done},
               {"lr_halvings", result.state.lr_halvings},
               {"model_fingerprint", model_fingerprint(model)},
               {"train_state_hash", train_state_hash(result.state)}};
  json last = json::object();
  for (const auto& p : result.log)
    if (p.epoch == result.state.epochs_done) last[to_string(p.player)] = phase_log_to_json(p);
  metrics["final_losses"] = last;

  double gap = 0.0;
  const Matrix gh = predict(model.g_h, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) d2 += (x(i, j) - gh(i, j)) * (x(i, j) - gh(i, j));
    gap += std::sqrt(d2);
  }
  metrics["mean_gh_distance"] = gap / static_cast<double>(x.rows());

  if (gmm) {
    const Matrix centers = gmm_centers(g);
    const Dataset held = sample_gmm(g, a.heldout, substream_seed(a.seed, "heldout"));
    const double lo = *std::min_element(g.grid.begin(), g.grid.end()) - 0.5;
    const double hi = *std::max_element(g.grid.begin(), g.grid.end()) + 0.5;
    const Matrix bg = sample_uniform_background(Box{{lo, lo}, {hi, hi}}, a.background, centers,
                                                a.min_dist, substream_seed(a.seed, "eval"));
    metrics["gmm"] = mode_coverage(model, stats.apply(centers), stats.apply(held.x), stats.apply(bg)).to_json();
  }
  write_json(dir / "metrics.json", metrics);
  dir.commit();
  emit(metrics);
  return 0;
}

// ---------------------------------------------------------------- eval

struct OneClassArgs {
  Common common;
  Settings settings;
  std::string checkpoint, pos, neg, score = "c";
};

void setup_oneclass(CLI::App* app, OneClassArgs& a) {
  add_common(app, a.common, true);
  a.settings.add(app, "checkpoint", a.checkpoint, "trained model");
  a.settings.add(app, "pos", a.pos, "CSV of in-class test points");
  a.settings.add(app, "neg", a.neg, "CSV of out-of-class test points");
  a.settings.add(app, "score", a.score, "c or h (h applied to (x, x))");
}

int do_oneclass(OneClassArgs& a) {
  a.settings.apply(load_config(a.common));
  RunDir dir(a.common.out, a.common.force);
  write_json(dir / "config.json", a.settings.echo("eval-oneclass"));
  const QuadModel model = load_quad_model(a.checkpoint);
  const auto report =
      one_class_eval(model, score_from_string(a.score), load_for_model(model, a.pos), load_for_model(model, a.neg));
  write_json(dir / "metrics.json", report.to_json());
  dir.commit();
  emit(report.to_json());
  return 0;
}

struct NoiseArgs {
  Common common;
  Settings settings;
  std::string checkpoint, pos;
  std::vector<double> sigmas{0.0, 0.1, 0.2, 0.5, 1.0};
  std::uint64_t seed = 0;
};

void setup_noise(CLI::App* app, NoiseArgs& a) {
  add_common(app, a.common, true);
  a.settings.add(app, "checkpoint", a.checkpoint, "trained model");
  a.settings.add(app, "pos", a.pos, "CSV of in-class test points");
  a.settings.add_list(app, "sigmas", a.sigmas, "noise levels, comma separated");
  a.settings.add(app, "seed", a.seed, "root seed");
}

int do_noise(NoiseArgs& a) {
  a.settings.apply(load_config(a.common));
  RunDir dir(a.common.out, a.common.force);
  write_json(dir / "config.json", a.settings.echo("eval-noise"));
  const QuadModel model = load_quad_model(a.checkpoint);
  const Dataset test = load_for_model(model, a.pos);
  const auto sweep = noise_sweep(model, test.x, a.sigmas, substream_seed(a.seed, "eval"));
  write_csv(dir / "noise.csv", {"sigma", "auc_c", "auc_h"}, noise_sweep_table(sweep));
  write_json(dir / "metrics.json", sweep.report.to_json());
  dir.commit();
  emit(sweep.report.to_json());
  return 0;
}

struct CorrelationArgs {
  Common common;
  Settings settings;
  std::string checkpoint, points, target, score = "c", mode = "local";
  std::size_t permutations = 1000;
  std::uint64_t seed = 0;
};

void setup_correlation(CLI::App* app, CorrelationArgs& a) {
  add_common(app, a.common, true);
  a.settings.add(app, "checkpoint", a.checkpoint, "trained model");
  a.settings.add(app, "points", a.points, "CSV of points with a target column");
  a.settings.add(app, "target", a.target, "name of the target column");
  a.settings.add(app, "score", a.score, "c, h (unary) or pair (h on point and nearest neighbor)");
  a.settings.add(app, "mode", a.mode, "local or standard");
  a.settings.add(app, "permutations", a.permutations, "permutation count B");
  a.settings.add(app, "seed", a.seed, "root seed");
}

int do_correlation(CorrelationArgs& a) {
  a.settings.apply(load_config(a.common));
  if (a.target.empty()) throw ConfigError("--target is required");
  RunDir dir(a.common.out, a.common.force);
  write_json(dir / "config.json", a.settings.echo("eval-correlation"));
  const QuadModel model = load_quad_model(a.checkpoint);
  const Dataset ds = load_for_model(model, a.points, a.target);
  const std::uint64_t seed = substream_seed(a.seed, "eval");
  CorrelationResult r;
  if (a.score == "pair") {
    if (a.mode != "local") throw ConfigError("--score pair requires --mode local");
    r = local_correlation(model.h, ds.x, *ds.targets, a.permutations, seed);
  } else {
    CorrelationMode mode;
    if (a.mode == "local") mode = CorrelationMode::local;
    else if (a.mode == "standard") mode = CorrelationMode::standard;
    else throw ConfigError("--mode must be local or standard");
    const auto scores = score_points(model, score_from_string(a.score), ds.x);
    r = local_correlation(scores, ds.x, *ds.targets, mode, a.permutations, seed);
  }
  Matrix table(r.score_side.size(), 2);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    table(i, 0) = r.score_side[i];
    table(i, 1) = r.target_side[i];
  }
  write_csv(dir / "correlation.csv", {"score", "target"}, table);
  write_json(dir / "metrics.json", r.report.to_json());
  dir.commit();
  emit(r.report.to_json());
  return 0;
}

struct FieldArgs {
  Common common;
  Settings settings;
  std::string checkpoint;
  std::size_t resolution = 64;
  std::vector<double> bounds{-2.0, 2.0, -2.0, 2.0};
};

void setup_field(CLI::App* app, FieldArgs& a) {
  add_common(app, a.common, true);
  a.settings.add(app, "checkpoint", a.checkpoint, "trained 2-D model");
  a.settings.add(app, "resolution", a.resolution, "grid points per axis (>= 16)");
  a.settings.add_list(app, "bounds", a.bounds, "x_lo,x_hi,y_lo,y_hi in model input space");
}

int do_field(FieldArgs& a) {
  a.settings.apply(load_config(a.common));
  if (a.bounds.size() != 4) throw ConfigError("--bounds takes four numbers");
  RunDir dir(a.common.out, a.common.force);
  write_json(dir / "config.json", a.settings.echo("export-field"));
  const QuadModel model = load_quad_model(a.checkpoint);
  const FieldBounds b{a.bounds[0], a.bounds[1], a.bounds[2], a.bounds[3]};
  const FieldExport f = grid_field_export(model, b, a.resolution);
  write_csv(dir / "heatmap.csv", {"x1", "x2", "c"}, f.heatmap);
  write_csv(dir / "quiver.csv", {"x1", "x2", "u1", "u2"}, f.quiver);
  const json metrics{{"protocol", "export-field"},
                     {"resolution", a.resolution},
                     {"bounds", a.bounds},
                     {"step", f.step},
                     {"model_fingerprint", model_fingerprint(model)}};
  write_json(dir / "metrics.json", metrics);
  dir.commit();
  emit(metrics);
  return 0;
}

// ---------------------------------------------------------------- theory

// Theory reports go to stdout; with --out they are also written as a run
// directory.
int finish_report(const Common& c, const json& config, const json& report,
                  const std::function<void(const RunDir&)>& extra = {}) {
  if (!c.out.empty()) {
    RunDir dir(c.out, c.force);
    write_json(dir / "config.json", config);
    if (extra) extra(dir);
    write_json(dir / "metrics.json", report);
    dir.commit();
  }
  emit(report);
  return 0;
}

struct ConstructArgs {
  Common common;
  Settings settings;
  std::vector<double> points;
  bool verify = false;
};

int do_construct(ConstructArgs& a) {
  a.settings.apply(load_config(a.common));
  std::vector<double> pts = a.points;
  if (pts.empty()) throw ConfigError("--points is required");
  const auto built = construct_max_net(pts);
  const std::size_t m = pts.size();
  json report{{"protocol", "theory-construct"},
              {"points", pts},
              {"hidden_units", built.net.layers[0].spec.out_dim},
              {"pieces", built.function.pieces()}};
  if (a.verify) {
    double gap = 1.0;
    for (std::size_t i = 1; i < m; ++i) gap = std::min(gap, pts[i] - pts[i - 1]);
    const auto xs = scan_grid(pts.front() - 1.0, pts.back() + 1.0, gap / 100.0, pts);
    const auto maxima = grid_local_maxima([&](double x) { return evaluate_1d(built.net, x); }, xs);
    const auto extracted = extract_pieces(built.net);
    json claims = json::array();
    bool claims_ok = true;
    for (const auto& c : count_pieces_lower_bound_check(pts, built.net)) {
      claims.push_back(c.to_json());
      claims_ok = claims_ok && c.passed;
    }
    report["maxima"] = maxima;
    report["extracted_pieces"] = extracted.pieces();
    report["claims"] = claims;
    report["passed"] = built.function.pieces() == 2 * m && extracted.pieces() == 2 * m &&
                       maxima == pts && claims_ok;
  }
  json config = a.settings.echo("theory construct");
  config["verify"] = a.verify;
  return finish_report(a.common, config, report,
                       [&](const RunDir& dir) { save_network(dir / "net.ckpt", built.net, "value"); });
}

struct NetArgs {
  Common common;
  Settings settings;
  std::string network;
  std::string net = "c";
};

void setup_net(CLI::App* app, NetArgs& a) {
  add_common(app, a.common, false);
  a.settings.add(app, "network", a.network, "network or quad-model checkpoint");
  a.settings.add(app, "net", a.net, "player to read from a quad-model checkpoint: c, h, g_c, g_h");
}

int do_extract(NetArgs& a, const std::string& name) {
  a.settings.apply(load_config(a.common));
  const Network net = pick_network(a.network, a.net);
  const auto f = extract_pieces(net);
  const json report{{"protocol", "theory-extract"},
                    {"pieces", f.pieces()},
                    {"breakpoints", f.breakpoints},
                    {"slopes", f.slopes},
                    {"intercepts", f.intercepts}};
  return finish_report(a.common, a.settings.echo(name), report);
}

int do_complexity(NetArgs& a, const std::string& name) {
  a.settings.apply(load_config(a.common));
  const Network net = pick_network(a.network, a.net);
  const auto t = spectral_terms(net);
  const json report{{"protocol", "theory-complexity"},
                    {"norm_product", t.norm_product},
                    {"ratio_sum", t.ratio_sum},
                    {"complexity", t.complexity}};
  return finish_report(a.common, a.settings.echo(name), report);
}

struct BoundArgs {
  Common common;
  Settings settings;
  std::string v, f, net_v = "h", net_f = "c", data;
  double domain_radius = 1.0, gamma1 = 0.1, gamma2 = 0.1, delta = 0.05, eps = 0.05;
  std::size_t m = 1000, samples = 256;
  std::uint64_t seed = 0;
};

void setup_pair(CLI::App* app, BoundArgs& a) {
  add_common(app, a.common, false);
  a.settings.add(app, "v", a.v, "value network checkpoint");
  a.settings.add(app, "f", a.f, "classifier network checkpoint");
  a.settings.add(app, "net_v", a.net_v, "player for v when reading a quad-model");
  a.settings.add(app, "net_f", a.net_f, "player for f when reading a quad-model");
  a.settings.add(app, "domain_radius", a.domain_radius, "domain radius B");
  a.settings.add(app, "gamma1", a.gamma1, "value margin");
  a.settings.add(app, "gamma2", a.gamma2, "classifier margin");
}

int do_bound(BoundArgs& a, const std::string& name) {
  a.settings.apply(load_config(a.common));
  const auto b = bound_penalty_proxy(pick_network(a.v, a.net_v), pick_network(a.f, a.net_f),
                                     a.domain_radius, a.gamma1, a.gamma2, a.m, a.delta);
  json report = b.to_json();
  report["protocol"] = "theory-bound";
  return finish_report(a.common, a.settings.echo(name), report);
}

int do_margin(BoundArgs& a, const std::string& name) {
  a.settings.apply(load_config(a.common));
  const Network v = pick_network(a.v, a.net_v);
  const Network f = pick_network(a.f, a.net_f);
  const Dataset ds = load_csv(a.data);
  MarginRiskConfig cfg{a.gamma1, a.gamma2, a.eps, a.samples, a.domain_radius};
  const double risk = margin_empirical_risk(v, f, ds.x, cfg, substream_seed(a.seed, "eval"));
  const json report{{"protocol", "theory-margin"}, {"risk", risk}, {"n", ds.x.rows()}};
  return finish_report(a.common, a.settings.echo(name), report);
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  Settings settings;
  std::uint64_t seed = 0;
  std::size_t n = 4096;
  double sigma = 0.01;
  std::vector<double> grid = GmmConfig{}.grid;
  double min_dist = 0.1;
  std::size_t m = 8;
  double lo = 0.0, hi = 1.0, min_gap = 0.05;
};

int do_synth(SynthArgs& a, const std::string& kind) {
  a.settings.apply(load_config(a.common));
  RunDir dir(a.common.out, a.common.force);
  const json config = a.settings.echo("synth " + kind);
  write_json(dir / "config.json", config);
  const std::uint64_t seed = substream_seed(a.seed, "synth");
  GmmConfig g;
  g.grid = a.grid;
  g.sigma = a.sigma;
  g.seed = a.seed;
  json manifest{{"generator", kind}, {"seed", a.seed}, {"config", config}};
  if (kind == "gmm") {
    std::vector<std::size_t> comp;
    const Dataset ds = sample_gmm(g, a.n, seed, &comp);
    Matrix rows(ds.x.rows(), 3);
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      rows(i, 0) = ds.x(i, 0);
      rows(i, 1) = ds.x(i, 1);
      rows(i, 2) = static_cast<double>(comp[i]);
    }
    write_csv(dir / "data.csv", {"x1", "x2", "component"}, rows);
    manifest["files"] = {"data.csv"};
    manifest["rows"] = rows.rows();
  } else if (kind == "background") {
    const double lo = *std::min_element(g.grid.begin(), g.grid.end()) - 0.5;
    const double hi = *std::max_element(g.grid.begin(), g.grid.end()) + 0.5;
    const Matrix bg = sample_uniform_background(Box{{lo, lo}, {hi, hi}}, a.n, gmm_centers(g), a.min_dist, seed);
    write_csv(dir / "background.csv", {"x1", "x2"}, bg);
    manifest["files"] = {"background.csv"};
    manifest["rows"] = bg.rows();
  } else {
    const auto pts = sample_point_set(a.m, a.lo, a.hi, a.min_gap, seed);
    write_csv(dir / "points.csv", {"x"}, single_column(pts));
    manifest["files"] = {"points.csv"};
    manifest["rows"] = pts.size();
  }
  write_json(dir / "manifest.json", manifest);
  dir.commit();
  emit(manifest);
  return 0;
}

int dispatch(CLI::App& app, const std::function<void()>& parse) {
  try {
    parse();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  return -1;
}

} // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Local-maxima learning: training, evaluation protocols, theory checks"};
  app.require_subcommand(1);

  TrainArgs train_args;
  setup_train(app.add_subcommand("train", "train the four networks (or an ablation variant)"), train_args);

  OneClassArgs oneclass_args;
  setup_oneclass(app.add_subcommand("eval-oneclass", "one-class AUC of c or h"), oneclass_args);
  NoiseArgs noise_args;
  setup_noise(app.add_subcommand("eval-noise", "AUC against noisy copies of the test points"), noise_args);
  CorrelationArgs corr_args;
  setup_correlation(app.add_subcommand("eval-correlation", "local correlation with a target"), corr_args);
  FieldArgs field_args;
  setup_field(app.add_subcommand("export-field", "c heatmap and h quiver over a 2-D grid"), field_args);

  CLI::App* theory = app.add_subcommand("theory", "constructive and complexity checks");
  theory->require_subcommand(1);
  ConstructArgs construct_args;
  {
    CLI::App* sub = theory->add_subcommand("construct", "ReLU net whose local maxima are the given points");
    add_common(sub, construct_args.common, false);
    construct_args.settings.add_list(sub, "points", construct_args.points, "sorted distinct reals");
    sub->add_flag("--verify", construct_args.verify, "scan for maxima and check the piece counts");
  }
  NetArgs extract_args, complexity_args;
  setup_net(theory->add_subcommand("extract", "linear pieces of a 1-D ReLU network"), extract_args);
  setup_net(theory->add_subcommand("complexity", "spectral complexity of a network"), complexity_args);
  BoundArgs bound_args, margin_args;
  {
    CLI::App* sub = theory->add_subcommand("bound", "generalization penalty proxy");
    setup_pair(sub, bound_args);
    bound_args.settings.add(sub, "m", bound_args.m, "sample count");
    bound_args.settings.add(sub, "delta", bound_args.delta, "confidence parameter");
  }
  {
    CLI::App* sub = theory->add_subcommand("margin", "empirical margin risk");
    setup_pair(sub, margin_args);
    margin_args.settings.add(sub, "data", margin_args.data, "CSV of points");
    margin_args.settings.add(sub, "eps", margin_args.eps, "neighborhood radius");
    margin_args.settings.add(sub, "samples", margin_args.samples, "neighborhood samples K");
    margin_args.settings.add(sub, "seed", margin_args.seed, "root seed");
  }

  CLI::App* synth = app.add_subcommand("synth", "synthetic datasets");
  synth->require_subcommand(1);
  SynthArgs gmm_args, bg_args, points_args;
  {
    CLI::App* sub = synth->add_subcommand("gmm", "samples from the Gaussian grid");
    add_common(sub, gmm_args.common, true);
    gmm_args.settings.add(sub, "seed", gmm_args.seed, "root seed");
    gmm_args.settings.add(sub, "n", gmm_args.n, "sample count");
    gmm_args.settings.add(sub, "sigma", gmm_args.sigma, "component std");
    gmm_args.settings.add_list(sub, "grid", gmm_args.grid, "per-axis center coordinates");
  }
  {
    CLI::App* sub = synth->add_subcommand("background", "uniform points away from the grid centers");
    add_common(sub, bg_args.common, true);
    bg_args.settings.add(sub, "seed", bg_args.seed, "root seed");
    bg_args.settings.add(sub, "n", bg_args.n, "point count");
    bg_args.settings.add_list(sub, "grid", bg_args.grid, "per-axis center coordinates");
    bg_args.settings.add(sub, "min_dist", bg_args.min_dist, "distance to every center");
  }
  {
    CLI::App* sub = synth->add_subcommand("points", "sorted 1-D point set with a minimum gap");
    add_common(sub, points_args.common, true);
    points_args.settings.add(sub, "seed", points_args.seed, "root seed");
    points_args.settings.add(sub, "m", points_args.m, "point count");
    points_args.settings.add(sub, "lo", points_args.lo, "interval start");
    points_args.settings.add(sub, "hi", points_args.hi, "interval end");
    points_args.settings.add(sub, "min_gap", points_args.min_gap, "minimum spacing");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (const int code = dispatch(app, [&] { app.parse(reversed); }); code >= 0) return code;

  try {
    if (app.got_subcommand("train")) return do_train(train_args);
    if (app.got_subcommand("eval-oneclass")) return do_oneclass(oneclass_args);
    if (app.got_subcommand("eval-noise")) return do_noise(noise_args);
    if (app.got_subcommand("eval-correlation")) return do_correlation(corr_args);
    if (app.got_subcommand("export-field")) return do_field(field_args);
    if (theory->parsed()) {
      if (theory->got_subcommand("construct")) return do_construct(construct_args);
      if (theory->got_subcommand("extract")) return do_extract(extract_args, "theory extract");
      if (theory->got_subcommand("complexity")) return do_complexity(complexity_args, "theory complexity");
      if (theory->got_subcommand("bound")) return do_bound(bound_args, "theory bound");
      if (theory->got_subcommand("margin")) return do_margin(margin_args, "theory margin");
    }
    if (synth->parsed()) {
      if (synth->got_subcommand("gmm")) return do_synth(gmm_args, "gmm");
      if (synth->got_subcommand("background")) return do_synth(bg_args, "background");
      if (synth->got_subcommand("points")) return do_synth(points_args, "points");
    }
    throw InternalError("unhandled subcommand");
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

} // namespace localmax::cli
