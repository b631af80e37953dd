#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "localmax/checkpoint.hpp"
#include "localmax/data.hpp"
#include "localmax/trainer.hpp"

using namespace localmax;

namespace {

TrainConfig small_config(std::size_t epochs, Variant v = Variant::full) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.variant = v;
  cfg.seed = 5;
  cfg.discriminator.hidden = {8, 4};
  cfg.generator.hidden = {8, 4};
  return cfg;
}

Matrix gmm_data(std::size_t n) {
  GmmConfig g;
  return sample_gmm(g, n, 3).x;
}

std::array<std::uint64_t, 4> hashes(const QuadModel& m) {
  return {m.g_c.state_hash(), m.c.state_hash(), m.g_h.state_hash(), m.h.state_hash()};
}

} // namespace

TEST(Trainer, PhaseIsolationAndStepAccounting) {
  const Matrix x = gmm_data(100); // ceil(100/32) = 4 batches
  Trainer t(x, small_config(1));
  EXPECT_EQ(t.batches_per_epoch(), 4u);
  auto before = hashes(t.state().model);
  std::vector<Player> seen;
  t.set_phase_observer([&](Player p, const TrainState& st) {
    const auto after = hashes(st.model);
    for (int i = 0; i < 4; ++i) {
      if (i == static_cast<int>(p)) EXPECT_NE(after[i], before[i]) << to_string(p);
      else EXPECT_EQ(after[i], before[i]) << "phase " << to_string(p) << " touched player " << i;
    }
    before = after;
    seen.push_back(p);
  });
  const auto logs = t.run_epoch();
  EXPECT_EQ(seen, (std::vector<Player>{Player::g_c, Player::c, Player::g_h, Player::h}));
  std::size_t steps = 0;
  for (const auto& l : logs) steps += l.steps;
  EXPECT_EQ(steps, 4u * 4u);
  for (const auto& a : t.state().adam) EXPECT_EQ(a.step, 4u);
}

TEST(Trainer, SingleBatchGivesFourSteps) {
  const Matrix x = gmm_data(20);
  TrainConfig cfg = small_config(1);
  cfg.batch_size = 64;
  const auto r = train(x, cfg);
  ASSERT_EQ(r.log.size(), 4u);
  for (const auto& l : r.log) EXPECT_EQ(l.steps, 1u);
}

TEST(Trainer, VariantSchedules) {
  const Matrix x = gmm_data(40);
  auto players = [&](Variant v) {
    Trainer t(x, small_config(1, v));
    return t.phases();
  };
  EXPECT_EQ(players(Variant::c_only), (std::vector<Player>{Player::g_c, Player::c}));
  EXPECT_EQ(players(Variant::h_only), (std::vector<Player>{Player::g_h, Player::h}));
  EXPECT_EQ(players(Variant::shared_gc), (std::vector<Player>{Player::g_c, Player::c, Player::h}));
  EXPECT_EQ(players(Variant::shared_gh), (std::vector<Player>{Player::g_h, Player::c, Player::h}));
  EXPECT_THROW(train_variant(x, small_config(1)), ConfigError);

  // Untrained players keep their initial weights.
  const auto c_only = train_variant(x, small_config(2, Variant::c_only));
  const auto init = Trainer(x, small_config(2, Variant::c_only)).state().model;
  EXPECT_EQ(c_only.state.model.h, init.h);
  EXPECT_EQ(c_only.state.model.g_h, init.g_h);
  EXPECT_NE(c_only.state.model.c, init.c);
}

TEST(Trainer, SharedVariantDiffersFromFull) {
  const Matrix x = gmm_data(64);
  const auto full = train(x, small_config(2));
  const auto shared = train_variant(x, small_config(2, Variant::shared_gc));
  EXPECT_NE(train_state_hash(full.state), train_state_hash(shared.state));
}

TEST(Trainer, Deterministic) {
  const Matrix x = gmm_data(80);
  const auto a = train(x, small_config(3));
  const auto b = train(x, small_config(3));
  EXPECT_EQ(train_state_hash(a.state), train_state_hash(b.state));
  EXPECT_EQ(a.state.model, b.state.model);
}

TEST(Trainer, ResumeMatchesUninterrupted) {
  const Matrix x = gmm_data(80);
  testutil::TempDir dir("resume");
  const auto whole = train(x, small_config(4));

  const auto part = train(x, small_config(2));
  save_train_state(dir / "k.ckpt", part.state, small_config(2));
  TrainConfig saved_cfg;
  TrainState loaded = load_train_state(dir / "k.ckpt", &saved_cfg);
  EXPECT_EQ(saved_cfg.epochs, 2u);
  const auto rest = resume_training(x, small_config(4), loaded);
  EXPECT_EQ(rest.state.epochs_done, 4u);
  EXPECT_EQ(train_state_hash(rest.state), train_state_hash(whole.state));
}

TEST(Trainer, TruncatedCheckpointRejected) {
  const Matrix x = gmm_data(40);
  testutil::TempDir dir("trunc");
  const auto r = train(x, small_config(1));
  save_train_state(dir / "s.ckpt", r.state, small_config(1));
  const auto size = std::filesystem::file_size(dir / "s.ckpt");
  std::filesystem::resize_file(dir / "s.ckpt", size / 2);
  EXPECT_THROW(load_train_state(dir / "s.ckpt"), CheckpointError);
}

TEST(Trainer, DivergenceThrowsWithLastGoodState) {
  Matrix x(40, 2, 1e300);
  for (std::size_t i = 0; i < x.rows(); i += 2) x(i, 0) = -1e300;
  Trainer t(x, small_config(1));
  const auto start = train_state_hash(t.state());
  try {
    t.run_epoch();
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.last_good().epochs_done, 0u);
    EXPECT_EQ(train_state_hash(e.last_good()), start);
  }
}

TEST(Trainer, ConfigValidationAndJson) {
  TrainConfig bad = small_config(0);
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small_config(1);
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = small_config(1);
  bad.lambda = -1;
  EXPECT_THROW(bad.validate(), ConfigError);

  TrainConfig cfg = small_config(7, Variant::shared_gh);
  cfg.symmetric = true;
  cfg.adam.lr = 3e-4;
  const TrainConfig back = train_config_from_json(train_config_to_json(cfg));
  EXPECT_EQ(train_config_to_json(back), train_config_to_json(cfg));
  EXPECT_THROW(variant_from_string("everything"), ConfigError);
}

TEST(Trainer, GeneratorStaysNearData) {
  const Matrix x = gmm_data(256);
  const auto r = train(x, small_config(5));
  const Matrix g = predict(r.state.model.g_h, x);
  double mean = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) mean += std::hypot(x(i, 0) - g(i, 0), x(i, 1) - g(i, 1));
  mean /= static_cast<double>(x.rows());
  EXPECT_TRUE(std::isfinite(mean));
  EXPECT_LT(mean, 3.0 * std::sqrt(2.0)); // grid diameter
}
