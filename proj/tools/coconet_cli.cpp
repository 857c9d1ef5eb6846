#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "coconet/data.hpp"
#include "coconet/discrepancy.hpp"
#include "coconet/gradcheck.hpp"
#include "coconet/ops.hpp"
#include "coconet/probe.hpp"
#include "coconet/trainer.hpp"

namespace {

using namespace coconet;
using Json = nlohmann::ordered_json;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, beta, gamma;
  std::optional<std::size_t> epochs;
  std::optional<std::string> metric, family, objective;
};

void apply(const Overrides& ov, train::TrainConfig& config) {
  if (ov.seed) config.seed = *ov.seed;
  if (ov.alpha) config.alpha = *ov.alpha;
  if (ov.beta) config.beta = *ov.beta;
  if (ov.gamma) config.gamma = *ov.gamma;
  if (ov.epochs) config.epochs = *ov.epochs;
  if (ov.metric) config.metric = *ov.metric;
  if (ov.family) config.family = *ov.family;
  if (ov.objective) config.objective = *ov.objective;
}

int run_gen_data(const std::string& out, const std::string& cifar_path,
                 const data::SynthSpec& synth, std::size_t samples) {
  data::MultiViewDataset ds;
  if (!cifar_path.empty()) {
    data::CifarBatch batch = data::load_cifar_binary(cifar_path);
    ds = data::split_views(batch.images, 32, 32, std::move(batch.labels));
  } else {
    ds = data::synth_generate(synth, samples);
  }
  data::save_mvds(ds, out);
  std::cout << "wrote " << out << ": " << ds.num_views() << " views, " << ds.num_samples
            << " samples\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir, const Overrides& ov) {
  train::TrainConfig config =
      config_path.empty() ? train::TrainConfig{} : train::load_train_config(config_path);
  apply(ov, config);
  train::Trainer trainer(config, train::load_dataset(config.dataset));
  trainer.train(out_dir);
  std::cout << "trained " << config.epochs << " epochs ("
            << trainer.global_step() << " steps); outputs in " << out_dir << "\n";
  return 0;
}

Json probe_to_json(const probe::ProbeResult& result, const probe::ProbeConfig& config,
                   std::uint64_t seed) {
  Json j;
  j["accuracy"] = result.accuracy;
  j["macro_f1"] = result.macro_f1;
  j["per_class_f1"] = result.per_class_f1;
  Json c;
  c["kind"] = config.kind;
  c["epochs"] = config.epochs;
  c["lr"] = config.lr;
  c["window"] = config.window;
  c["hidden"] = config.hidden;
  c["seed"] = seed;
  j["config"] = c;
  return j;
}

int run_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& out_dir, probe::ProbeConfig probe_config, std::uint64_t seed) {
  train::Trainer trainer = data_path.empty()
                               ? train::checkpoint_load(checkpoint)
                               : train::checkpoint_load(checkpoint, data::load_mvds(data_path));
  probe::FeatureMatrix features = probe::extract_features(trainer.encoders(), trainer.dataset());
  probe::ProbeResult result = probe::probe_train_eval(features, probe_config, seed);
  Json j = probe_to_json(result, probe_config, seed);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/probe.json");
    if (!out) throw std::runtime_error("eval: cannot write " + out_dir + "/probe.json");
    out << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

Tensor single_view_samples(const std::string& path) {
  data::MultiViewDataset ds = data::load_mvds(path);
  if (ds.num_views() != 1) {
    throw std::runtime_error("metric: " + path + " must hold a single view, has " +
                             std::to_string(ds.num_views()));
  }
  return Tensor(Shape{ds.num_samples, ds.views[0].dim}, ds.view_data[0], false);
}

int run_metric(const std::string& kind, const std::string& family, int p, std::size_t slices,
               std::size_t critic_steps, std::uint64_t seed, const std::string& file_a,
               const std::string& file_b) {
  metrics::EmpiricalDist P(single_view_samples(file_a));
  metrics::EmpiricalDist Q(single_view_samples(file_b));
  Rng rng(seed);
  double value = 0.0;
  if (kind == "kl") {
    value = metrics::gaussian_kl(P, Q).value();
  } else if (kind == "wd") {
    metrics::DualCritic critic = metrics::make_dual_critic(P.dim(), 64, 0.01, rng);
    value = metrics::dual_wd(P, Q, critic, critic_steps, 1e-3);
  } else {
    metrics::DefiningFunction fn;
    if (kind == "swd" || family == "linear") {
      fn = metrics::make_linear_slices(P.dim(), slices, rng);
    } else if (family == "poly") {
      fn = metrics::make_odd_poly3_slices(P.dim(), slices, rng);
    } else {
      fn = metrics::make_neural_critic(P.dim(), 64, slices, rng);
      Optimizer opt(OptimizerKind::Sgd, 1e-3);
      for (std::size_t t = 0; t < critic_steps; ++t) {
        metrics::critic_ascent_step(P, Q, fn, opt, p);
      }
    }
    value = metrics::gswd(P, Q, fn, p).value();
  }
  std::printf("%.17g\n", value);
  return 0;
}

// Finite-difference suite over the primitives and the composite losses.
int run_grad_check(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  std::string where;
  auto track = [&](const char* tag, const gradcheck::Report& report) {
    if (report.max_rel_err > worst) {
      worst = report.max_rel_err;
      where = std::string(tag) + " at " + report.worst;
    }
    std::printf("  %-22s %10.3e over %zu entries\n", tag, report.max_rel_err, report.checked);
  };

  auto rand_tensor = [&](Shape shape, double lo, double hi) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v), true);
  };

  {
    Tensor a = rand_tensor({4, 3}, -2, 2);
    Tensor b = rand_tensor({3, 5}, -2, 2);
    track("matmul+relu+norm", gradcheck::compare(
                                  [&] {
                                    return ops::mean(ops::pow(
                                        ops::l2_normalize(ops::relu(ops::matmul(a, b))), 2.0));
                                  },
                                  {{"a", a}, {"b", b}}));
  }
  {
    Tensor x = rand_tensor({6}, 0.2, 3.0);
    track("log-exp-abs", gradcheck::compare(
                             [&] {
                               return ops::sum(ops::log(ops::add_scalar(
                                   ops::abs(ops::exp(ops::mul_scalar(x, 0.5))), 0.1)));
                             },
                             {{"x", x}}));
  }
  {
    // Sliced distance between two small clouds (fixed slices).
    Tensor p = rand_tensor({6, 3}, -1, 1);
    Tensor q = rand_tensor({6, 3}, 0, 2);
    Rng slice_rng(seed ^ 0x51ceULL);
    metrics::DefiningFunction fn = metrics::make_linear_slices(3, 8, slice_rng);
    track("gswd-linear", gradcheck::compare(
                             [&] {
                               return metrics::gswd(metrics::EmpiricalDist(p),
                                                    metrics::EmpiricalDist(q), fn, 1);
                             },
                             {{"p", p}, {"q", q}}));
  }
  {
    Tensor p = rand_tensor({8, 2}, -1, 1);
    Tensor q = rand_tensor({8, 2}, 0.5, 2.5);
    track("gaussian-kl", gradcheck::compare(
                             [&] {
                               return metrics::gaussian_kl(metrics::EmpiricalDist(p),
                                                           metrics::EmpiricalDist(q));
                             },
                             {{"p", p}, {"q", q}}));
  }
  {
    Tensor logits = rand_tensor({5, 4}, -2, 2);
    track("softmax-xent", gradcheck::compare(
                              [&] {
                                return ops::softmax_cross_entropy(logits, {0, 1, 2, 3, 1});
                              },
                              {{"logits", logits}}));
  }

  std::printf("max relative error: %.6e (%s)\n", worst, where.c_str());
  return worst < 1e-4 ? 0 : 2;
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              std::vector<double> values, std::size_t epochs, std::size_t jobs,
              const Overrides& ov) {
  train::TrainConfig base =
      config_path.empty() ? train::TrainConfig{} : train::load_train_config(config_path);
  apply(ov, base);
  base.epochs = epochs;
  if (values.empty()) values = {1e-6, 1e-4, 1e-2, 1.0, 1e2};

  struct Cell {
    double alpha, beta, gamma;
    double accuracy = 0.0, macro_f1 = 0.0;
  };
  std::vector<Cell> cells;
  for (double a : values) {
    for (double b : values) cells.push_back({a, b, base.gamma});
  }
  for (double g : values) cells.push_back({base.alpha, base.beta, g});

  data::MultiViewDataset dataset = train::load_dataset(base.dataset);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      train::TrainConfig config = base;
      config.alpha = cells[i].alpha;
      config.beta = cells[i].beta;
      config.gamma = cells[i].gamma;
      train::Trainer trainer(config, dataset);
      for (std::size_t e = 0; e < config.epochs; ++e) {
        for (std::size_t s = 0; s < trainer.batches_per_epoch(); ++s) trainer.step();
      }
      probe::FeatureMatrix features =
          probe::extract_features(trainer.encoders(), trainer.dataset());
      probe::ProbeConfig pc;
      probe::ProbeResult result = probe::probe_train_eval(features, pc, config.seed);
      cells[i].accuracy = result.accuracy;
      cells[i].macro_f1 = result.macro_f1;
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, jobs);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(out_dir + "/sweep.csv");
  if (!csv) throw std::runtime_error("sweep: cannot write " + out_dir + "/sweep.csv");
  csv << "alpha,beta,gamma,accuracy,macro_f1\n";
  char buf[160];
  for (const auto& cell : cells) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g", cell.alpha, cell.beta,
                  cell.gamma, cell.accuracy, cell.macro_f1);
    csv << buf << '\n';
  }
  std::cout << "wrote " << out_dir << "/sweep.csv (" << cells.size() << " cells)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coconet: multi-view representation learning lab"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a dataset file");
  std::string gen_out, gen_cifar;
  data::SynthSpec synth;
  std::size_t gen_samples = 1000;
  std::size_t gen_view_dim = 32;
  gen->add_option("--out", gen_out, "output .mvds path")->required();
  gen->add_option("--cifar", gen_cifar, "CIFAR-10 binary batch to convert");
  gen->add_option("--samples", gen_samples, "synthetic sample count");
  gen->add_option("--classes", synth.classes, "synthetic class count");
  gen->add_option("--views", synth.num_views, "synthetic view count");
  gen->add_option("--latent-dim", synth.latent_dim, "latent dimension");
  gen->add_option("--view-dim", gen_view_dim, "per-view dimensionality");
  gen->add_option("--noise", synth.noise_scale, "per-view noise scale");
  gen->add_option("--shared-scale", synth.shared_scale, "class-center spread");
  gen->add_option("--seed", synth.seed, "generator seed");

  // train
  auto* tr = app.add_subcommand("train", "train from a JSON config");
  std::string tr_config, tr_out = "run";
  Overrides ov;
  tr->add_option("--config", tr_config, "JSON config path");
  tr->add_option("--out", tr_out, "output directory");
  tr->add_option("--seed", ov.seed, "seed override");
  tr->add_option("--alpha", ov.alpha, "alpha override");
  tr->add_option("--beta", ov.beta, "beta override");
  tr->add_option("--gamma", ov.gamma, "gamma override");
  tr->add_option("--epochs", ov.epochs, "epoch override");
  tr->add_option("--metric", ov.metric, "metric override (kl|wd|swd|gswd)");
  tr->add_option("--family", ov.family, "gswd family override (linear|poly|neural)");
  tr->add_option("--objective", ov.objective, "objective override (coco|loco|gloco)");

  // eval
  auto* ev = app.add_subcommand("eval", "probe a checkpoint");
  std::string ev_ckpt, ev_data, ev_out;
  probe::ProbeConfig probe_config;
  std::uint64_t ev_seed = 7;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint path")->required();
  ev->add_option("--data", ev_data, "dataset .mvds (defaults to the checkpoint's dataset)");
  ev->add_option("--out", ev_out, "output directory for probe.json");
  ev->add_option("--probe", probe_config.kind, "probe kind (linear|mlp)");
  ev->add_option("--probe-epochs", probe_config.epochs, "probe epochs");
  ev->add_option("--probe-lr", probe_config.lr, "probe learning rate");
  ev->add_option("--window", probe_config.window, "trailing epochs averaged");
  ev->add_option("--seed", ev_seed, "split seed");

  // metric
  auto* me = app.add_subcommand("metric", "discrepancy between two sample files");
  std::string me_kind = "swd", me_family = "poly", me_a, me_b;
  int me_p = 1;
  std::size_t me_slices = 64, me_steps = 100;
  std::uint64_t me_seed = 1;
  me->add_option("--kind", me_kind, "kl|wd|swd|gswd")
      ->check(CLI::IsMember({"kl", "wd", "swd", "gswd"}));
  me->add_option("--p", me_p, "Wasserstein order")->check(CLI::IsMember({1, 2}));
  me->add_option("--slices", me_slices, "slice count L");
  me->add_option("--family", me_family, "gswd family (linear|poly|neural)");
  me->add_option("--critic-steps", me_steps, "adversarial steps (wd / neural gswd)");
  me->add_option("--seed", me_seed, "slice seed");
  me->add_option("a", me_a, "first sample file")->required();
  me->add_option("b", me_b, "second sample file")->required();

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient suite");
  std::uint64_t gc_seed = 17;
  gc->add_option("--seed", gc_seed, "trial seed");

  // sweep
  auto* sw = app.add_subcommand("sweep", "alpha/beta/gamma grid with probe scores");
  std::string sw_config, sw_out = "sweep";
  std::vector<double> sw_values;
  std::size_t sw_epochs = 3, sw_jobs = 2;
  sw->add_option("--config", sw_config, "JSON config path");
  sw->add_option("--out", sw_out, "output directory");
  sw->add_option("--values", sw_values, "grid values (default 1e-6,1e-4,1e-2,1,1e2)");
  sw->add_option("--epochs", sw_epochs, "epochs per cell");
  sw->add_option("--jobs", sw_jobs, "parallel workers");
  sw->add_option("--seed", ov.seed, "seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << std::flush;
      return 0;
    }
    std::cerr << e.what() << "\n" << app.help() << std::flush;
    return 1;
  }

  try {
    if (gen->parsed()) {
      synth.view_dims.assign(synth.num_views, gen_view_dim);
      return run_gen_data(gen_out, gen_cifar, synth, gen_samples);
    }
    if (tr->parsed()) return run_train(tr_config, tr_out, ov);
    if (ev->parsed()) return run_eval(ev_ckpt, ev_data, ev_out, probe_config, ev_seed);
    if (me->parsed()) {
      return run_metric(me_kind, me_family, me_p, me_slices, me_steps, me_seed, me_a, me_b);
    }
    if (gc->parsed()) return run_grad_check(gc_seed);
    if (sw->parsed()) return run_sweep(sw_config, sw_out, sw_values, sw_epochs, sw_jobs, ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
