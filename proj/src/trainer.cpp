#include "localmax/trainer.hpp"

#include <cmath>
#include <numeric>

#include "localmax/checkpoint.hpp"
#include "localmax/hash.hpp"
#include "localmax/rng.hpp"

namespace localmax {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
  case Variant::full: return "full";
  case Variant::c_only: return "c_only";
  case Variant::h_only: return "h_only";
  case Variant::shared_gc: return "shared_gc";
  case Variant::shared_gh: return "shared_gh";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  for (auto v : {Variant::full, Variant::c_only, Variant::h_only, Variant::shared_gc,
                 Variant::shared_gh})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + s + "' (expected full, c_only, h_only, shared_gc, shared_gh)");
}

std::string to_string(Player p) {
  switch (p) {
  case Player::g_c: return "g_c";
  case Player::c: return "c";
  case Player::g_h: return "g_h";
  case Player::h: return "h";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (!(lambda >= 0.0)) throw ConfigError("train: lambda must be non-negative");
  if (!(adam.lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("train: Adam betas must lie in [0,1)");
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"lambda", cfg.lambda},
              {"variant", to_string(cfg.variant)},
              {"symmetric", cfg.symmetric},
              {"seed", cfg.seed},
              {"shuffle", cfg.shuffle},
              {"adam",
               {{"lr", cfg.adam.lr},
                {"beta1", cfg.adam.beta1},
                {"beta2", cfg.adam.beta2},
                {"eps", cfg.adam.eps}}},
              {"discriminator", model_options_to_json(cfg.discriminator)},
              {"generator", model_options_to_json(cfg.generator)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  try {
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("variant")) cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("symmetric")) cfg.symmetric = j.at("symmetric").get<bool>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shuffle")) cfg.shuffle = j.at("shuffle").get<bool>();
    if (j.contains("adam")) {
      const auto& a = j.at("adam");
      if (a.contains("lr")) cfg.adam.lr = a.at("lr").get<double>();
      if (a.contains("beta1")) cfg.adam.beta1 = a.at("beta1").get<double>();
      if (a.contains("beta2")) cfg.adam.beta2 = a.at("beta2").get<double>();
      if (a.contains("eps")) cfg.adam.eps = a.at("eps").get<double>();
    }
    if (j.contains("discriminator")) cfg.discriminator = model_options_from_json(j.at("discriminator"));
    if (j.contains("generator")) cfg.generator = model_options_from_json(j.at("generator"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json phase_log_to_json(const PhaseLog& log) {
  return json{{"epoch", log.epoch},
              {"player", to_string(log.player)},
              {"total", log.loss.total},
              {"steps", log.steps},
              {"parts",
               {{"positive", log.loss.positive_term},
                {"product", log.loss.product_term},
                {"distance", log.loss.distance_term}}}};
}

namespace {

TrainState fresh_state(std::size_t dim, const TrainConfig& cfg) {
  TrainState s;
  s.model = build_quad_model(dim, cfg.discriminator, cfg.generator, substream_seed(cfg.seed, "model"));
  s.adam[static_cast<int>(Player::g_c)] = AdamState::for_network(s.model.g_c, cfg.adam);
  s.adam[static_cast<int>(Player::c)] = AdamState::for_network(s.model.c, cfg.adam);
  s.adam[static_cast<int>(Player::g_h)] = AdamState::for_network(s.model.g_h, cfg.adam);
  s.adam[static_cast<int>(Player::h)] = AdamState::for_network(s.model.h, cfg.adam);
  s.rng = serialize_rng(Rng(substream_seed(cfg.seed, "train")));
  return s;
}

Network& player_net(QuadModel& m, Player p) {
  switch (p) {
  case Player::g_c: return m.g_c;
  case Player::c: return m.c;
  case Player::g_h: return m.g_h;
  case Player::h: return m.h;
  }
  throw InternalError("bad player");
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.total) && std::isfinite(l.positive_term) &&
         std::isfinite(l.product_term) && std::isfinite(l.distance_term);
}

} // namespace

Trainer::Trainer(Matrix data, TrainConfig cfg) : data_(std::move(data)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (data_.rows() == 0) throw ConfigError("train: dataset is empty");
  for (double v : data_.values())
    if (!std::isfinite(v)) throw NumericError("train: dataset has non-finite entries");
  state_ = fresh_state(data_.cols(), cfg_);
}

Trainer::Trainer(Matrix data, TrainConfig cfg, TrainState resume)
    : data_(std::move(data)), cfg_(std::move(cfg)), state_(std::move(resume)) {
  cfg_.validate();
  if (data_.rows() == 0) throw ConfigError("train: dataset is empty");
  if (state_.model.dim != data_.cols())
    throw ConfigError("train: checkpoint dimension does not match the dataset");
}

std::vector<Player> Trainer::phases() const {
  switch (cfg_.variant) {
  case Variant::full: return {Player::g_c, Player::c, Player::g_h, Player::h};
  case Variant::c_only: return {Player::g_c, Player::c};
  case Variant::h_only: return {Player::g_h, Player::h};
  case Variant::shared_gc: return {Player::g_c, Player::c, Player::h};
  case Variant::shared_gh: return {Player::g_h, Player::c, Player::h};
  }
  return {};
}

std::size_t Trainer::batches_per_epoch() const {
  return (data_.rows() + cfg_.batch_size - 1) / cfg_.batch_size;
}

PhaseLog Trainer::run_phase(Player player, const std::vector<Matrix>& batches) {
  QuadModel& m = state_.model;
  LossSettings settings;
  settings.lambda = cfg_.lambda;
  settings.symmetric = cfg_.symmetric;
  if (cfg_.variant == Variant::c_only) settings.coupling.h_factor = false;
  if (cfg_.variant == Variant::h_only) settings.coupling.c_factor = false;

  Objective objective{};
  const Network* gen = nullptr;
  switch (player) {
  case Player::g_c: objective = Objective::generator_c; gen = &m.g_c; break;
  case Player::c:
    objective = Objective::classifier;
    gen = cfg_.variant == Variant::shared_gh ? &m.g_h : &m.g_c;
    break;
  case Player::g_h: objective = Objective::generator_h; gen = &m.g_h; break;
  case Player::h:
    objective = Objective::comparator;
    gen = cfg_.variant == Variant::shared_gc ? &m.g_c : &m.g_h;
    break;
  }

  Network& trained = player_net(m, player);
  AdamState& adam = state_.adam[static_cast<int>(player)];
  PhaseLog log;
  log.epoch = state_.epochs_done + 1;
  log.player = player;
  for (const Matrix& xb : batches) {
    auto r = evaluate_objective(objective, xb, m.c, m.h, *gen, settings, true);
    if (!finite(r.loss))
      throw NumericError("non-finite " + to_string(player) + " loss in epoch " +
                         std::to_string(log.epoch));
    adam_step(trained, r.grad, adam);
    for (const auto& t : r.traces) commit_running_stats(trained, t);
    log.loss.total += r.loss.total;
    log.loss.positive_term += r.loss.positive_term;
    log.loss.product_term += r.loss.product_term;
    log.loss.distance_term += r.loss.distance_term;
    ++log.steps;
  }
  const double inv = 1.0 / static_cast<double>(log.steps);
  log.loss.total *= inv;
  log.loss.positive_term *= inv;
  log.loss.product_term *= inv;
  log.loss.distance_term *= inv;
  return log;
}

std::vector<PhaseLog> Trainer::try_epoch() {
  Rng rng = deserialize_rng(state_.rng);
  std::vector<std::size_t> order(data_.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg_.shuffle)
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
  state_.rng = serialize_rng(rng);

  std::vector<Matrix> batches;
  for (std::size_t first = 0; first < order.size(); first += cfg_.batch_size) {
    const std::size_t count = std::min(cfg_.batch_size, order.size() - first);
    batches.push_back(select_rows(data_, std::span<const std::size_t>(order.data() + first, count)));
  }

  std::vector<PhaseLog> logs;
  for (Player p : phases()) {
    logs.push_back(run_phase(p, batches));
    if (observer_) observer_(p, state_);
  }
  state_.epochs_done += 1;
  return logs;
}

std::vector<PhaseLog> Trainer::run_epoch() {
  const TrainState snapshot = state_;
  try {
    return try_epoch();
  } catch (const NumericError& first) {
    state_ = snapshot;
    if (state_.lr_halvings > 0)
      throw TrainingDiverged(std::string("training diverged again after halving the learning rate: ") +
                                 first.what(),
                             snapshot);
    state_.lr_halvings += 1;
    for (auto& a : state_.adam) a.hyper.lr *= 0.5;
    const TrainState halved = state_;
    try {
      return try_epoch();
    } catch (const NumericError& second) {
      state_ = halved;
      throw TrainingDiverged(std::string("training diverged twice: ") + second.what(), snapshot);
    }
  }
}

TrainResult resume_training(const Matrix& data, const TrainConfig& cfg, TrainState state,
                            const EpochCallback& on_epoch) {
  Trainer trainer(data, cfg, std::move(state));
  TrainResult result;
  while (trainer.state().epochs_done < cfg.epochs) {
    auto logs = trainer.run_epoch();
    if (on_epoch) on_epoch(trainer.state(), logs);
    result.log.insert(result.log.end(), logs.begin(), logs.end());
  }
  result.state = trainer.state();
  return result;
}

TrainResult train(const Matrix& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  Trainer trainer(data, cfg);
  return resume_training(data, cfg, trainer.state(), on_epoch);
}

TrainResult train_variant(const Matrix& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.variant == Variant::full)
    throw ConfigError("train_variant: use train() for the full variant");
  return train(data, cfg, on_epoch);
}

void save_train_state(const std::filesystem::path& path, const TrainState& state,
                      const TrainConfig& cfg) {
  json adam = json::array();
  for (const auto& a : state.adam) adam.push_back(adam_to_json(a));
  json payload{{"model", quad_model_to_json(state.model)},
               {"adam", std::move(adam)},
               {"rng", state.rng},
               {"epochs_done", state.epochs_done},
               {"lr_halvings", state.lr_halvings},
               {"config", train_config_to_json(cfg)}};
  json header{{"dim", state.model.dim}, {"epochs_done", state.epochs_done},
              {"variant", to_string(cfg.variant)}};
  write_checkpoint(path, "train-state", header, payload);
}

TrainState load_train_state(const std::filesystem::path& path, TrainConfig* cfg) {
  auto file = read_checkpoint(path);
  if (file.kind != "train-state")
    throw CheckpointError(path.string() + " holds a '" + file.kind + "' checkpoint, not a training state");
  try {
    TrainState s;
    s.model = quad_model_from_json(file.payload.at("model"));
    const auto& adam = file.payload.at("adam");
    if (adam.size() != 4) throw CheckpointError("training state must hold four optimizer states");
    for (std::size_t i = 0; i < 4; ++i) s.adam[i] = adam_from_json(adam[i]);
    s.rng = file.payload.at("rng").get<std::string>();
    deserialize_rng(s.rng);
    s.epochs_done = file.payload.at("epochs_done").get<std::size_t>();
    s.lr_halvings = file.payload.at("lr_halvings").get<std::size_t>();
    if (cfg) *cfg = train_config_from_json(file.payload.at("config"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
}

std::uint64_t train_state_hash(const TrainState& state) {
  Fnv1a h;
  for (const Network* n : {&state.model.c, &state.model.h, &state.model.g_c, &state.model.g_h})
    h.update(n->state_hash());
  for (const auto& a : state.adam) {
    for (const auto& t : a.first) h.update(std::span<const double>(t));
    for (const auto& t : a.second) h.update(std::span<const double>(t));
    h.update(a.step);
  }
  h.update(state.rng);
  h.update(static_cast<std::uint64_t>(state.epochs_done));
  return h.digest();
}

} // namespace localmax
