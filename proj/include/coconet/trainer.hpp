#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coconet/data.hpp"
#include "coconet/discrepancy.hpp"
#include "coconet/encoders.hpp"
#include "coconet/loco.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"

namespace coconet::train {

struct DatasetSpec {
  std::string type = "synth";  // synth | mvds | cifar
  std::string path;            // mvds / cifar input file
  std::size_t samples = 1000;  // synth sample count
  data::SynthSpec synth;
};

// Field names mirror the JSON config document one to one.
struct TrainConfig {
  std::string objective = "coco";  // coco | loco | gloco
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 1e-4;
  double tau = 0.07;
  int p = 1;
  std::size_t slices = 64;
  std::string metric = "gswd";  // kl | wd | swd | gswd
  std::string family = "neural";
  std::size_t critic_steps = 5;
  std::size_t critic_hidden = 64;
  double clip = 0.01;
  std::size_t batch_size = 128;
  double lr_omega = 0.03;
  double lr_theta = 0.03;
  double lr_critic = 1e-3;
  std::string optimizer = "sgd";
  std::size_t epochs = 20;
  std::string negatives_source = "bank";
  std::size_t negatives_k = 256;
  double bank_momentum = 0.5;
  std::uint64_t seed = 1;
  std::size_t c1 = 64;
  std::size_t c2 = 32;
  std::size_t map_h = 4;
  std::size_t map_w = 4;
  std::size_t hidden_omega = 128;
  std::size_t hidden_theta = 128;
  DatasetSpec dataset;

  void validate() const;
  bool gloco_active() const;
  bool loco_active() const { return objective != "gloco"; }
};

std::string to_json_string(const TrainConfig& config);
TrainConfig train_config_from_json_string(const std::string& text);
TrainConfig load_train_config(const std::string& path);

data::MultiViewDataset load_dataset(const DatasetSpec& spec);

struct MetricsRow {
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  double loss_total = 0.0;
  double loss_loco = 0.0;
  double loss_gloco = 0.0;
  double gswd_mean_pairwise = 0.0;
  double critic_value = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

// Alternating critic / encoder training. One owner thread mutates all
// state; the phases are public so tests can assert which parameter groups
// each one touches.
class Trainer {
 public:
  Trainer(TrainConfig config, data::MultiViewDataset dataset);

  const TrainConfig& config() const { return config_; }
  const data::MultiViewDataset& dataset() const { return *dataset_; }
  enc::EncoderStack& encoders() { return *encoders_; }
  metrics::MetricState& metric_state() { return *metric_; }
  loco::MemoryBanks& banks() { return banks_; }
  Rng& rng() { return rng_; }
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t step_in_epoch() const { return step_in_epoch_; }
  std::uint64_t global_step() const { return global_step_; }
  std::size_t batches_per_epoch() const { return batcher_.batches_per_epoch(); }
  const std::vector<MetricsRow>& history() const { return history_; }

  struct LossBreakdown {
    Tensor total;
    double loco_value = 0.0;
    double gloco_value = 0.0;
    std::vector<Tensor> h_detached;  // phase-2 embeddings, for logging only
  };

  // Builds the objective on the active tape. With gamma = 0 (or in loco
  // mode) the global term is skipped entirely, so the returned node is the
  // local loss itself and the op sequence matches a loco-only trainer.
  LossBreakdown total_loss(const enc::FeaturePack& pack, const std::vector<std::size_t>& ids);

  // Phase 1: critic ascent on frozen encodings; returns the post-phase
  // mean pairwise discrepancy (0 when no adversarial critic is active).
  double run_critic_phase(const data::MultiViewBatch& batch);
  // Phase 2: one descent step on the total objective with the critic frozen.
  LossBreakdown run_descent_phase(const data::MultiViewBatch& batch);
  // Phase 3: momentum update of both banks from post-step features.
  void update_banks(const data::MultiViewBatch& batch);

  MetricsRow train_step(const data::MultiViewBatch& batch);
  MetricsRow step();  // next batch in the schedule

  // Full run: config echo, per-epoch checkpoints, metrics CSV.
  void train(const std::string& out_dir);

  ParamGroup omega_group() const { return encoders_->omega_params(); }
  ParamGroup theta_group() const;
  ParamGroup critic_group() const { return metric_->critic_params(); }

  // Checkpoint access.
  void restore_counters(std::uint64_t epoch, std::uint64_t step_in_epoch,
                        std::uint64_t global_step);
  Optimizer& omega_optimizer() { return opt_omega_; }
  Optimizer& theta_optimizer() { return opt_theta_; }
  Optimizer& critic_optimizer() { return opt_critic_; }

 private:
  std::vector<Tensor> batch_inputs(const data::MultiViewBatch& batch) const;
  std::vector<Tensor> encode_views_detached(const data::MultiViewBatch& batch);
  double log_gloco_value(const std::vector<Tensor>& views);

  TrainConfig config_;
  std::shared_ptr<data::MultiViewDataset> dataset_;  // stable address for the batcher
  Rng rng_;
  std::optional<enc::EncoderStack> encoders_;
  std::optional<metrics::MetricState> metric_;
  loco::MemoryBanks banks_;
  data::Minibatcher batcher_;
  Optimizer opt_omega_;
  Optimizer opt_theta_;
  Optimizer opt_critic_;
  std::uint64_t epoch_ = 0;
  std::uint64_t step_in_epoch_ = 0;
  std::uint64_t global_step_ = 0;
  std::vector<MetricsRow> history_;
};

// Binary checkpoint: "CCNT" magic, little-endian u32 version, u64 tensor
// count, then named f64 tensors and the trailing u64 generator state.
void checkpoint_save(Trainer& trainer, const std::string& path);
Trainer checkpoint_load(const std::string& path);
Trainer checkpoint_load(const std::string& path, data::MultiViewDataset dataset);

}  // namespace coconet::train
