#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "localmax/adam.hpp"
#include "localmax/losses.hpp"
#include "localmax/models.hpp"

namespace localmax {

/// full: the four-player schedule.
/// c_only: G_c and c, with the h factor of L_C replaced by 1.
/// h_only: G_h and h, with the c factor of L_H replaced by 1.
/// shared_gc / shared_gh: c and h both fed by the one named generator.
enum class Variant { full, c_only, h_only, shared_gc, shared_gh };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class Player { g_c = 0, c = 1, g_h = 2, h = 3 };

std::string to_string(Player p);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double lambda = 1.0;
  Variant variant = Variant::full;
  bool symmetric = false;
  std::uint64_t seed = 0;
  bool shuffle = true;
  AdamHyper adam;
  ModelOptions discriminator;
  ModelOptions generator;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Mean loss over the mini-batches of one phase.
struct PhaseLog {
  std::size_t epoch = 0; // 1-based outer iteration
  Player player = Player::c;
  LossBreakdown loss;
  std::size_t steps = 0;
};

nlohmann::json phase_log_to_json(const PhaseLog& log);

/// Everything needed to resume training bit-exactly.
struct TrainState {
  QuadModel model;
  std::array<AdamState, 4> adam; // indexed by Player
  std::string rng;               // data-order generator
  std::size_t epochs_done = 0;
  std::size_t lr_halvings = 0;
};

/// Thrown when training diverges twice; carries the last finite state.
class TrainingDiverged : public NumericError {
public:
  TrainingDiverged(const std::string& what, TrainState last_good)
      : NumericError(what), last_good_(std::move(last_good)) {}
  const TrainState& last_good() const { return last_good_; }

private:
  TrainState last_good_;
};

/// The interleaved schedule: each outer iteration runs one full epoch per
/// phase, in the order G_c, c, G_h, h (restricted to the variant's players),
/// over the same shuffled mini-batch sequence.
class Trainer {
public:
  Trainer(Matrix data, TrainConfig cfg);
  Trainer(Matrix data, TrainConfig cfg, TrainState resume);

  /// Runs one outer iteration. On a non-finite loss the iteration is rolled
  /// back, every learning rate is halved and the iteration retried; a second
  /// divergence throws TrainingDiverged.
  std::vector<PhaseLog> run_epoch();

  /// Called after every completed phase with the state at that point.
  using PhaseObserver = std::function<void(Player, const TrainState&)>;
  void set_phase_observer(PhaseObserver observer) { observer_ = std::move(observer); }

  const TrainState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  std::vector<Player> phases() const;
  std::size_t batches_per_epoch() const;

private:
  std::vector<PhaseLog> try_epoch();
  PhaseLog run_phase(Player player, const std::vector<Matrix>& batches);

  Matrix data_;
  TrainConfig cfg_;
  TrainState state_;
  PhaseObserver observer_;
};

struct TrainResult {
  TrainState state;
  std::vector<PhaseLog> log;
};

using EpochCallback = std::function<void(const TrainState&, const std::vector<PhaseLog>&)>;

TrainResult train(const Matrix& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Same as train() but rejects Variant::full.
TrainResult train_variant(const Matrix& data, const TrainConfig& cfg,
                          const EpochCallback& on_epoch = {});

/// Continues a saved state up to cfg.epochs.
TrainResult resume_training(const Matrix& data, const TrainConfig& cfg, TrainState state,
                            const EpochCallback& on_epoch = {});

void save_train_state(const std::filesystem::path& path, const TrainState& state,
                      const TrainConfig& cfg);
TrainState load_train_state(const std::filesystem::path& path, TrainConfig* cfg = nullptr);

/// Fingerprint of every network parameter, running statistic and optimizer
/// moment in the state.
std::uint64_t train_state_hash(const TrainState& state);

} // namespace localmax
