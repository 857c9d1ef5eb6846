#include "coconet/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "coconet/io.hpp"
#include "coconet/ops.hpp"

namespace coconet::train {

namespace o = coconet::ops;

void TrainConfig::validate() const {
  if (objective != "coco" && objective != "loco" && objective != "gloco") {
    throw std::invalid_argument("config: unknown objective '" + objective + "'");
  }
  if (objective != "gloco") {
    loco::LossConfig lc;
    lc.alpha = alpha;
    lc.beta = beta;
    lc.source = loco::negatives_source_from_string(negatives_source);
    lc.k = negatives_k;
    lc.validate();
  }
  if (objective == "gloco" && gamma == 0.0) {
    throw std::invalid_argument("config: gloco objective needs a nonzero gamma");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
  if (!(lr_omega > 0.0) || !(lr_theta > 0.0) || !(lr_critic > 0.0)) {
    throw std::invalid_argument("config: learning rates must be positive");
  }
  if (batch_size < 2) throw std::invalid_argument("config: batch size must be at least 2");
  if (!(bank_momentum >= 0.0 && bank_momentum < 1.0)) {
    throw std::invalid_argument("config: bank momentum must be in [0, 1)");
  }
  metrics::MetricSpec ms;
  ms.kind = metrics::metric_kind_from_string(metric);
  ms.family = metrics::family_from_string(family);
  ms.p = p;
  ms.slices = slices;
  ms.validate();
  optimizer_kind_from_string(optimizer);
  if (c1 == 0 || c2 == 0 || map_h == 0 || map_w == 0) {
    throw std::invalid_argument("config: encoder dims must be positive");
  }
}

bool TrainConfig::gloco_active() const {
  return objective == "gloco" || (objective == "coco" && gamma != 0.0);
}

data::MultiViewDataset load_dataset(const DatasetSpec& spec) {
  if (spec.type == "synth") {
    return data::synth_generate(spec.synth, spec.samples);
  }
  if (spec.type == "mvds") {
    return data::load_mvds(spec.path);
  }
  if (spec.type == "cifar") {
    data::CifarBatch batch = data::load_cifar_binary(spec.path);
    return data::split_views(batch.images, 32, 32, std::move(batch.labels));
  }
  throw std::invalid_argument("dataset: unknown type '" + spec.type + "'");
}

std::string metrics_csv_header() {
  return "epoch,step,loss_total,loss_loco,loss_gloco,gswd_mean_pairwise,critic_value";
}

std::string metrics_csv_row(const MetricsRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(row.epoch),
                static_cast<unsigned long long>(row.step), row.loss_total, row.loss_loco,
                row.loss_gloco, row.gswd_mean_pairwise, row.critic_value);
  return buf;
}

namespace {

metrics::MetricSpec metric_spec_of(const TrainConfig& config) {
  metrics::MetricSpec spec;
  spec.kind = metrics::metric_kind_from_string(config.metric);
  spec.family = metrics::family_from_string(config.family);
  spec.p = config.p;
  spec.slices = config.slices;
  spec.critic_hidden = config.critic_hidden;
  spec.clip = config.clip;
  return spec;
}

enc::EncoderConfig encoder_config_of(const TrainConfig& config,
                                     const data::MultiViewDataset& dataset) {
  enc::EncoderConfig ec;
  for (const auto& view : dataset.views) ec.view_dims.push_back(view.dim);
  ec.c1 = config.c1;
  ec.c2 = config.c2;
  ec.map_h = config.map_h;
  ec.map_w = config.map_w;
  ec.hidden_omega = config.hidden_omega;
  ec.hidden_theta = config.hidden_theta;
  return ec;
}

void assert_finite(const std::string& name, const Tensor& t, std::uint64_t step) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("train: non-finite value in tensor '" + name + "' at step " +
                               std::to_string(step));
    }
  }
}

constexpr std::uint64_t kLogStreamTag = 0x106'600DULL;

}  // namespace

Trainer::Trainer(TrainConfig config, data::MultiViewDataset dataset)
    : config_(std::move(config)),
      dataset_(std::make_shared<data::MultiViewDataset>(std::move(dataset))),
      rng_(config_.seed),
      banks_(),
      batcher_(*dataset_, config_.batch_size, config_.seed),
      opt_omega_(optimizer_kind_from_string(config_.optimizer), config_.lr_omega),
      opt_theta_(optimizer_kind_from_string(config_.optimizer), config_.lr_theta),
      opt_critic_(optimizer_kind_from_string(config_.optimizer), config_.lr_critic) {
  config_.validate();
  dataset_->validate();
  // Fixed initialization order: encoders, metric critics, banks.
  encoders_.emplace(encoder_config_of(config_, *dataset_), rng_);
  metric_.emplace(metric_spec_of(config_), config_.c1, dataset_->num_views(), rng_);
  banks_ = loco::MemoryBanks(dataset_->num_views(), dataset_->num_samples, config_.c1, rng_);
}

std::vector<Tensor> Trainer::batch_inputs(const data::MultiViewBatch& batch) const {
  std::vector<Tensor> inputs;
  inputs.reserve(batch.views.size());
  for (std::size_t m = 0; m < batch.views.size(); ++m) {
    inputs.emplace_back(Shape{batch.size(), dataset_->views[m].dim}, batch.views[m], false);
  }
  return inputs;
}

std::vector<Tensor> Trainer::encode_views_detached(const data::MultiViewBatch& batch) {
  // No active tape: plain forward values.
  auto inputs = batch_inputs(batch);
  std::vector<Tensor> views;
  views.reserve(inputs.size());
  for (std::size_t m = 0; m < inputs.size(); ++m) {
    views.push_back(encoders_->encode_view(m, inputs[m]).h);
  }
  return views;
}

ParamGroup Trainer::theta_group() const {
  // The fusion network feeds only the factor-contrast term; leave it out of
  // the stepped group when that term is absent.
  const bool cf_active = config_.loco_active() && config_.alpha > 0.0;
  if (cf_active) return encoders_->theta_params();
  ParamGroup group;
  for (auto& p : encoders_->theta_params()) {
    if (p.name.rfind("cfnet", 0) != 0) group.push_back(p);
  }
  return group;
}

Trainer::LossBreakdown Trainer::total_loss(const enc::FeaturePack& pack,
                                           const std::vector<std::size_t>& ids) {
  LossBreakdown out;
  Tensor loco_term, gloco_term;
  if (config_.loco_active()) {
    loco::LossConfig lc;
    lc.alpha = config_.alpha;
    lc.beta = config_.beta;
    lc.source = loco::negatives_source_from_string(config_.negatives_source);
    lc.k = config_.negatives_k;
    loco_term = loco::loco_loss(pack.h, pack.cf, ids, lc, config_.tau, &banks_, &rng_);
    out.loco_value = loco_term.value();
  }
  if (config_.gloco_active()) {
    gloco_term = metric_->loss(pack.h);
    out.gloco_value = gloco_term.value();
  }
  if (config_.objective == "gloco") {
    out.total = o::mul_scalar(gloco_term, config_.gamma);
  } else if (!gloco_term.defined()) {
    // gamma = 0: the objective is literally the local term, no extra node.
    out.total = loco_term;
  } else {
    out.total = o::add(loco_term, o::mul_scalar(gloco_term, config_.gamma));
  }
  return out;
}

double Trainer::run_critic_phase(const data::MultiViewBatch& batch) {
  if (!config_.gloco_active() || !metric_->adversarial()) return 0.0;
  std::vector<Tensor> views = encode_views_detached(batch);
  if (config_.critic_steps == 0) return metric_->mean_pairwise(views);
  double value = 0.0;
  for (std::size_t t = 0; t < config_.critic_steps; ++t) {
    value = metric_->ascend(views, opt_critic_);
  }
  return value;
}

Trainer::LossBreakdown Trainer::run_descent_phase(const data::MultiViewBatch& batch) {
  auto inputs = batch_inputs(batch);
  ParamGroup omega = omega_group();
  ParamGroup theta = theta_group();
  ParamGroup critic = critic_group();
  zero_grads(omega);
  zero_grads(theta);
  set_requires_grad(critic, false);

  LossBreakdown breakdown;
  {
    Tape tape;
    TapeScope scope(tape);
    enc::FeaturePack pack;
    for (std::size_t m = 0; m < inputs.size(); ++m) {
      enc::ViewEncoding e = encoders_->encode_view(m, inputs[m]);
      pack.z.push_back(e.z);
      pack.h.push_back(e.h);
    }
    if (config_.loco_active()) encoders_->fuse_complementarity_factor(pack);

    for (std::size_t m = 0; m < pack.h.size(); ++m) {
      assert_finite("view" + std::to_string(m) + "/h", pack.h[m], global_step_ + 1);
    }
    if (pack.cf.defined()) assert_finite("cf", pack.cf, global_step_ + 1);

    breakdown = total_loss(pack, batch.ids);
    assert_finite("loss_total", breakdown.total, global_step_ + 1);
    for (auto& h : pack.h) breakdown.h_detached.push_back(Tensor(h.shape(), h.values(), false));

    tape.backward(breakdown.total);
  }
  opt_omega_.step(omega);
  opt_theta_.step(theta);
  return breakdown;
}

void Trainer::update_banks(const data::MultiViewBatch& batch) {
  // Post-step features: a fresh no-grad forward with the updated encoders.
  auto inputs = batch_inputs(batch);
  enc::FeaturePack pack = encoders_->encode_batch(inputs);
  for (std::size_t m = 0; m < pack.h.size(); ++m) {
    std::vector<std::size_t> rows(batch.ids.size());
    for (std::size_t i = 0; i < batch.ids.size(); ++i) rows[i] = banks_.h_row(m, batch.ids[i]);
    banks_.h.update(rows, pack.h[m], config_.bank_momentum);
  }
  banks_.cf.update(batch.ids, pack.cf, config_.bank_momentum);
}

double Trainer::log_gloco_value(const std::vector<Tensor>& views) {
  // Logging-only evaluation; draws come from a derived stream so the
  // training trajectory is untouched.
  if (!metric_->adversarial()) {
    Rng log_rng = Rng::derive(config_.seed ^ kLogStreamTag, global_step_);
    metric_->resample_slices(log_rng);
  }
  return metric_->loss(views).value();
}

MetricsRow Trainer::train_step(const data::MultiViewBatch& batch) {
  if (config_.gloco_active()) metric_->resample_slices(rng_);
  const double critic_value = run_critic_phase(batch);
  LossBreakdown breakdown = run_descent_phase(batch);
  update_banks(batch);

  const double pairs =
      static_cast<double>(dataset_->num_views() * (dataset_->num_views() - 1) / 2);
  MetricsRow row;
  row.epoch = epoch_ + 1;
  row.step = global_step_ + 1;
  row.loss_loco = breakdown.loco_value;
  row.loss_gloco =
      config_.gloco_active() ? breakdown.gloco_value : log_gloco_value(breakdown.h_detached);
  row.loss_total = breakdown.total.value();
  row.gswd_mean_pairwise = row.loss_gloco / pairs;
  row.critic_value = critic_value;
  return row;
}

MetricsRow Trainer::step() {
  if (step_in_epoch_ >= batches_per_epoch()) {
    ++epoch_;
    step_in_epoch_ = 0;
  }
  data::MultiViewBatch batch = batcher_.batch(epoch_, step_in_epoch_);
  MetricsRow row = train_step(batch);
  ++step_in_epoch_;
  ++global_step_;
  history_.push_back(row);
  return row;
}

void Trainer::train(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("train: cannot create output directory " + out_dir);

  {
    std::ofstream cfg(out_dir + "/config.json");
    if (!cfg) throw std::runtime_error("train: cannot write " + out_dir + "/config.json");
    cfg << to_json_string(config_) << '\n';
  }
  checkpoint_save(*this, out_dir + "/epoch_0.ckpt");

  std::ofstream csv(out_dir + "/metrics.csv");
  if (!csv) throw std::runtime_error("train: cannot write " + out_dir + "/metrics.csv");
  csv << metrics_csv_header() << '\n';
  for (std::size_t e = 1; e <= config_.epochs; ++e) {
    for (std::size_t b = 0; b < batches_per_epoch(); ++b) {
      csv << metrics_csv_row(step()) << '\n';
    }
    csv.flush();
    checkpoint_save(*this, out_dir + "/epoch_" + std::to_string(e) + ".ckpt");
  }
  if (!csv) throw std::runtime_error("train: write failed for " + out_dir + "/metrics.csv");
}

void Trainer::restore_counters(std::uint64_t epoch, std::uint64_t step_in_epoch,
                               std::uint64_t global_step) {
  epoch_ = epoch;
  step_in_epoch_ = step_in_epoch;
  global_step_ = global_step;
}

// ---------------------------------------------------------------------------
// Checkpoint format

namespace {

constexpr char kCkptMagic[4] = {'C', 'C', 'N', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

Tensor scalar_tensor(double v) { return Tensor::scalar(v); }

Tensor string_tensor(const std::string& text) {
  std::vector<double> chars(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    chars[i] = static_cast<double>(static_cast<unsigned char>(text[i]));
  }
  return Tensor(Shape{text.size()}, std::move(chars), false);
}

std::string string_from_tensor(const Tensor& t) {
  std::string text(t.numel(), '\0');
  for (std::size_t i = 0; i < t.numel(); ++i) {
    text[i] = static_cast<char>(static_cast<unsigned char>(t.values()[i]));
  }
  return text;
}

void append_optimizer_state(std::vector<NamedParam>& out, const std::string& group,
                            const Optimizer& opt) {
  out.push_back({"opt/" + group + "/steps", scalar_tensor(static_cast<double>(opt.step_count()))});
  for (const auto& [name, m] : opt.first_moments()) {
    out.push_back({"opt/" + group + "/m/" + name, Tensor(Shape{m.size()}, m, false)});
  }
  for (const auto& [name, v] : opt.second_moments()) {
    out.push_back({"opt/" + group + "/v/" + name, Tensor(Shape{v.size()}, v, false)});
  }
}

// Fixed enumeration order; save -> load -> save must be byte-identical.
std::vector<NamedParam> checkpoint_tensors(Trainer& trainer) {
  std::vector<NamedParam> out;
  for (auto& p : trainer.encoders().all_params()) out.push_back(p);
  auto& metric = trainer.metric_state();
  if (metric.adversarial()) {
    for (auto& p : metric.critic_params()) out.push_back(p);
  } else if (metric.spec().kind == metrics::MetricKind::Swd ||
             metric.spec().kind == metrics::MetricKind::Gswd) {
    out.push_back({"metric/theta", metric.defining_function().theta});
  }
  out.push_back({"bank/h", trainer.banks().h.storage()});
  out.push_back({"bank/cf", trainer.banks().cf.storage()});
  append_optimizer_state(out, "omega", trainer.omega_optimizer());
  append_optimizer_state(out, "theta", trainer.theta_optimizer());
  append_optimizer_state(out, "critic", trainer.critic_optimizer());
  out.push_back({"meta/epoch", scalar_tensor(static_cast<double>(trainer.epoch()))});
  out.push_back(
      {"meta/step_in_epoch", scalar_tensor(static_cast<double>(trainer.step_in_epoch()))});
  out.push_back({"meta/global_step", scalar_tensor(static_cast<double>(trainer.global_step()))});
  out.push_back({"meta/config_json", string_tensor(to_json_string(trainer.config()))});
  return out;
}

}  // namespace

void checkpoint_save(Trainer& trainer, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  const auto tensors = checkpoint_tensors(trainer);
  out.write(kCkptMagic, sizeof(kCkptMagic));
  io::write_le<std::uint32_t>(out, kCkptVersion);
  io::write_le<std::uint64_t>(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > 0xFFFF) throw std::logic_error("checkpoint: tensor name too long");
    io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) io::write_le<std::uint64_t>(out, d);
    io::write_f64_array(out, tensor.values());
  }
  io::write_le<std::uint64_t>(out, trainer.rng().state());
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

namespace {

struct RawCheckpoint {
  std::map<std::string, Tensor> tensors;
  std::vector<std::string> order;
  std::uint64_t rng_state = 0;
};

RawCheckpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 4) != std::string(kCkptMagic, 4)) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kCkptVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                             " in " + path);
  }
  RawCheckpoint raw;
  const auto count = io::read_le<std::uint64_t>(in);
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto name_len = io::read_le<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("checkpoint: truncated tensor name in " + path);
    const auto rank = io::read_le<std::uint8_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = io::read_le<std::uint64_t>(in);
    auto values = io::read_f64_array(in, shape_numel(shape));
    raw.order.push_back(name);
    raw.tensors.emplace(name, Tensor(std::move(shape), std::move(values), false));
  }
  raw.rng_state = io::read_le<std::uint64_t>(in);
  return raw;
}

void restore_optimizer(const RawCheckpoint& raw, const std::string& group, Optimizer& opt) {
  const std::string prefix = "opt/" + group + "/";
  const auto steps_it = raw.tensors.find(prefix + "steps");
  if (steps_it == raw.tensors.end()) {
    throw std::runtime_error("checkpoint: missing optimizer state for group " + group);
  }
  std::map<std::string, std::vector<double>> m, v;
  for (const auto& [name, tensor] : raw.tensors) {
    if (name.rfind(prefix + "m/", 0) == 0) {
      m[name.substr(prefix.size() + 2)] = tensor.values();
    } else if (name.rfind(prefix + "v/", 0) == 0) {
      v[name.substr(prefix.size() + 2)] = tensor.values();
    }
  }
  opt.restore(static_cast<std::uint64_t>(steps_it->second.value()), std::move(m), std::move(v));
}

Trainer load_from_raw(const RawCheckpoint& raw, data::MultiViewDataset dataset) {
  const auto cfg_it = raw.tensors.find("meta/config_json");
  if (cfg_it == raw.tensors.end()) {
    throw std::runtime_error("checkpoint: missing config snapshot");
  }
  TrainConfig config = train_config_from_json_string(string_from_tensor(cfg_it->second));
  Trainer trainer(config, std::move(dataset));

  // Overwrite every live parameter tensor from the file.
  std::size_t restored = 0;
  for (auto& p : checkpoint_tensors(trainer)) {
    if (p.name.rfind("opt/", 0) == 0 || p.name.rfind("meta/", 0) == 0) continue;
    const auto it = raw.tensors.find(p.name);
    if (it == raw.tensors.end()) {
      throw std::runtime_error("checkpoint: missing tensor '" + p.name + "'");
    }
    if (it->second.shape() != p.tensor.shape()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + p.name + "'");
    }
    p.tensor.values() = it->second.values();
    ++restored;
  }
  (void)restored;

  restore_optimizer(raw, "omega", trainer.omega_optimizer());
  restore_optimizer(raw, "theta", trainer.theta_optimizer());
  restore_optimizer(raw, "critic", trainer.critic_optimizer());

  const auto need = [&](const char* name) {
    const auto it = raw.tensors.find(name);
    if (it == raw.tensors.end()) {
      throw std::runtime_error(std::string("checkpoint: missing tensor '") + name + "'");
    }
    return static_cast<std::uint64_t>(it->second.value());
  };
  trainer.restore_counters(need("meta/epoch"), need("meta/step_in_epoch"),
                           need("meta/global_step"));
  trainer.rng().set_state(raw.rng_state);
  return trainer;
}

}  // namespace

Trainer checkpoint_load(const std::string& path) {
  RawCheckpoint raw = read_checkpoint(path);
  const auto cfg_it = raw.tensors.find("meta/config_json");
  if (cfg_it == raw.tensors.end()) {
    throw std::runtime_error("checkpoint: missing config snapshot");
  }
  TrainConfig config = train_config_from_json_string(string_from_tensor(cfg_it->second));
  return load_from_raw(raw, load_dataset(config.dataset));
}

Trainer checkpoint_load(const std::string& path, data::MultiViewDataset dataset) {
  return load_from_raw(read_checkpoint(path), std::move(dataset));
}

}  // namespace coconet::train
