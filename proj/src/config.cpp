#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coconet/trainer.hpp"

namespace coconet::train {

using Json = nlohmann::ordered_json;

namespace {

Json dataset_to_json(const DatasetSpec& spec) {
  Json j;
  j["type"] = spec.type;
  j["path"] = spec.path;
  j["samples"] = spec.samples;
  Json s;
  s["latent_dim"] = spec.synth.latent_dim;
  s["classes"] = spec.synth.classes;
  s["num_views"] = spec.synth.num_views;
  s["view_dims"] = spec.synth.view_dims;
  s["shared_scale"] = spec.synth.shared_scale;
  s["within_scale"] = spec.synth.within_scale;
  s["noise_scale"] = spec.synth.noise_scale;
  s["identity_maps"] = spec.synth.identity_maps;
  s["nonlinearity"] = spec.synth.nonlinearity;
  s["seed"] = spec.synth.seed;
  j["synth"] = s;
  return j;
}

template <typename T>
void read_into(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

DatasetSpec dataset_from_json(const Json& j) {
  DatasetSpec spec;
  read_into(j, "type", spec.type);
  read_into(j, "path", spec.path);
  read_into(j, "samples", spec.samples);
  if (j.contains("synth")) {
    const Json& s = j.at("synth");
    read_into(s, "latent_dim", spec.synth.latent_dim);
    read_into(s, "classes", spec.synth.classes);
    read_into(s, "num_views", spec.synth.num_views);
    read_into(s, "view_dims", spec.synth.view_dims);
    read_into(s, "shared_scale", spec.synth.shared_scale);
    read_into(s, "within_scale", spec.synth.within_scale);
    read_into(s, "noise_scale", spec.synth.noise_scale);
    read_into(s, "identity_maps", spec.synth.identity_maps);
    read_into(s, "nonlinearity", spec.synth.nonlinearity);
    read_into(s, "seed", spec.synth.seed);
  }
  return spec;
}

}  // namespace

std::string to_json_string(const TrainConfig& config) {
  Json j;
  j["objective"] = config.objective;
  j["alpha"] = config.alpha;
  j["beta"] = config.beta;
  j["gamma"] = config.gamma;
  j["tau"] = config.tau;
  j["p"] = config.p;
  j["slices"] = config.slices;
  j["metric"] = config.metric;
  j["family"] = config.family;
  j["critic_steps"] = config.critic_steps;
  j["critic_hidden"] = config.critic_hidden;
  j["clip"] = config.clip;
  j["batch_size"] = config.batch_size;
  j["lr_omega"] = config.lr_omega;
  j["lr_theta"] = config.lr_theta;
  j["lr_critic"] = config.lr_critic;
  j["optimizer"] = config.optimizer;
  j["epochs"] = config.epochs;
  j["negatives_source"] = config.negatives_source;
  j["negatives_k"] = config.negatives_k;
  j["bank_momentum"] = config.bank_momentum;
  j["seed"] = config.seed;
  j["c1"] = config.c1;
  j["c2"] = config.c2;
  j["map_h"] = config.map_h;
  j["map_w"] = config.map_w;
  j["hidden_omega"] = config.hidden_omega;
  j["hidden_theta"] = config.hidden_theta;
  j["dataset"] = dataset_to_json(config.dataset);
  return j.dump(2);
}

TrainConfig train_config_from_json_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  TrainConfig config;
  read_into(j, "objective", config.objective);
  read_into(j, "alpha", config.alpha);
  read_into(j, "beta", config.beta);
  read_into(j, "gamma", config.gamma);
  read_into(j, "tau", config.tau);
  read_into(j, "p", config.p);
  read_into(j, "slices", config.slices);
  read_into(j, "metric", config.metric);
  read_into(j, "family", config.family);
  read_into(j, "critic_steps", config.critic_steps);
  read_into(j, "critic_hidden", config.critic_hidden);
  read_into(j, "clip", config.clip);
  read_into(j, "batch_size", config.batch_size);
  read_into(j, "lr_omega", config.lr_omega);
  read_into(j, "lr_theta", config.lr_theta);
  read_into(j, "lr_critic", config.lr_critic);
  read_into(j, "optimizer", config.optimizer);
  read_into(j, "epochs", config.epochs);
  read_into(j, "negatives_source", config.negatives_source);
  read_into(j, "negatives_k", config.negatives_k);
  read_into(j, "bank_momentum", config.bank_momentum);
  read_into(j, "seed", config.seed);
  read_into(j, "c1", config.c1);
  read_into(j, "c2", config.c2);
  read_into(j, "map_h", config.map_h);
  read_into(j, "map_w", config.map_w);
  read_into(j, "hidden_omega", config.hidden_omega);
  read_into(j, "hidden_theta", config.hidden_theta);
  if (j.contains("dataset")) config.dataset = dataset_from_json(j.at("dataset"));
  return config;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return train_config_from_json_string(buf.str());
}

}  // namespace coconet::train
