#include "coconet/discrepancy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coconet/ops.hpp"

namespace coconet::metrics {

namespace o = coconet::ops;

EmpiricalDist::EmpiricalDist(Tensor t) : samples(std::move(t)) {
  if (!samples.defined() || (samples.rank() != 1 && samples.rank() != 2) || samples.dim(0) == 0) {
    throw std::invalid_argument("empirical distribution: need a nonempty 1-D or 2-D sample array");
  }
  for (double v : samples.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("empirical distribution: non-finite sample");
  }
}

Family family_from_string(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "poly") return Family::OddPoly3;
  if (s == "neural") return Family::NeuralCritic;
  throw std::invalid_argument("unknown defining-function family: " + s);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Linear: return "linear";
    case Family::OddPoly3: return "poly";
    default: return "neural";
  }
}

std::size_t odd_poly3_feature_count(std::size_t dim) {
  // Monomials x_a x_b x_c with a <= b <= c: C(dim + 2, 3).
  return dim * (dim + 1) * (dim + 2) / 6;
}

Tensor odd_poly3_features(const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("odd_poly3_features: expected 2-D samples");
  const std::size_t d = x.dim(1);
  std::vector<Tensor> cols;
  cols.reserve(odd_poly3_feature_count(d));
  std::vector<Tensor> base(d);
  for (std::size_t a = 0; a < d; ++a) base[a] = o::gather_cols(x, {a});
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      Tensor ab = o::mul(base[a], base[b]);
      for (std::size_t c = b; c < d; ++c) {
        cols.push_back(o::mul(ab, base[c]));
      }
    }
  }
  return o::concat(cols, 1);
}

Tensor DefiningFunction::project_all(const Tensor& samples) const {
  if (samples.rank() != 2 || samples.dim(1) != input_dim) {
    throw std::invalid_argument("defining function: expected samples of width " +
                                std::to_string(input_dim) + ", got " + shape_str(samples.shape()));
  }
  switch (family) {
    case Family::Linear: return o::matmul(samples, theta);
    case Family::OddPoly3: return o::matmul(odd_poly3_features(samples), theta);
    default: return critic.forward(samples);
  }
}

ParamGroup DefiningFunction::params(const std::string& prefix) const {
  ParamGroup group;
  if (family == Family::NeuralCritic) {
    critic.collect(group, prefix);
  } else {
    group.push_back({prefix + "/theta", theta});
  }
  return group;
}

void DefiningFunction::renormalize_slice_weights() {
  if (family != Family::NeuralCritic) return;
  Tensor& w = const_cast<Tensor&>(critic.layers.back().weight);
  auto& values = w.values();
  const std::size_t in = w.dim(0), out = w.dim(1);
  for (std::size_t j = 0; j < out; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < in; ++i) sq += values[i * out + j] * values[i * out + j];
    const double r = std::sqrt(sq);
    if (std::fabs(r - 1.0) <= 1e-12) continue;
    const double inv = 1.0 / (r + o::kNormEps);
    for (std::size_t i = 0; i < in; ++i) values[i * out + j] *= inv;
  }
}

namespace {

Tensor unit_columns(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> theta(rows * cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double sq = 0.0;
    std::vector<double> col(rows);
    for (auto& v : col) {
      v = rng.normal();
      sq += v * v;
    }
    const double inv = 1.0 / (std::sqrt(sq) + o::kNormEps);
    for (std::size_t i = 0; i < rows; ++i) theta[i * cols + j] = col[i] * inv;
  }
  return Tensor(Shape{rows, cols}, std::move(theta), false);
}

}  // namespace

DefiningFunction make_linear_slices(std::size_t dim, std::size_t slices, Rng& rng) {
  if (slices == 0) throw std::invalid_argument("defining function: need at least one slice");
  DefiningFunction fn;
  fn.family = Family::Linear;
  fn.input_dim = dim;
  fn.slices = slices;
  fn.theta = unit_columns(dim, slices, rng);
  return fn;
}

DefiningFunction make_odd_poly3_slices(std::size_t dim, std::size_t slices, Rng& rng) {
  if (slices == 0) throw std::invalid_argument("defining function: need at least one slice");
  DefiningFunction fn;
  fn.family = Family::OddPoly3;
  fn.input_dim = dim;
  fn.slices = slices;
  fn.theta = unit_columns(odd_poly3_feature_count(dim), slices, rng);
  return fn;
}

DefiningFunction make_neural_critic(std::size_t dim, std::size_t hidden, std::size_t slices,
                                    Rng& rng) {
  if (slices == 0) throw std::invalid_argument("defining function: need at least one slice");
  DefiningFunction fn;
  fn.family = Family::NeuralCritic;
  fn.input_dim = dim;
  fn.slices = slices;
  fn.critic = nn::Mlp({dim, hidden, slices}, rng);
  // Unit-norm slice weights from the start, so the per-step renormalization
  // is stationary at initialization.
  auto& w = fn.critic.layers.back().weight;
  auto& values = w.values();
  for (std::size_t j = 0; j < slices; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < hidden; ++i) sq += values[i * slices + j] * values[i * slices + j];
    const double inv = 1.0 / (std::sqrt(sq) + o::kNormEps);
    for (std::size_t i = 0; i < hidden; ++i) values[i * slices + j] *= inv;
  }
  return fn;
}

namespace {

std::vector<std::size_t> argsort(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

}  // namespace

Tensor wasserstein_1d(const Tensor& a, const Tensor& b, int p) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw std::invalid_argument("wasserstein_1d: expected 1-D sample vectors");
  }
  if (a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("wasserstein_1d: sample counts differ (" +
                                std::to_string(a.dim(0)) + " vs " + std::to_string(b.dim(0)) +
                                "); resampling is the caller's job");
  }
  if (p != 1 && p != 2) throw std::invalid_argument("wasserstein_1d: order p must be 1 or 2");

  Tensor sa = o::gather_rows(a, argsort(a.values()));
  Tensor sb = o::gather_rows(b, argsort(b.values()));
  Tensor gaps = o::abs(o::sub(sa, sb));
  if (p == 1) return o::mean(gaps);
  return o::pow(o::mean(o::pow(gaps, 2.0)), 0.5);
}

CouplingProblem CouplingProblem::from_points(const Tensor& x, const Tensor& y, int p) {
  if (x.dim(0) != y.dim(0)) {
    throw std::invalid_argument("coupling: sample counts differ");
  }
  const std::size_t n = x.dim(0);
  const std::size_t d = x.rank() == 2 ? x.dim(1) : 1;
  const std::size_t dy = y.rank() == 2 ? y.dim(1) : 1;
  if (d != dy) throw std::invalid_argument("coupling: sample dimensions differ");
  CouplingProblem problem;
  problem.n = n;
  problem.cost.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x.values()[i * d + k] - y.values()[j * d + k];
        sq += diff * diff;
      }
      const double dist = std::sqrt(sq);
      problem.cost[i * n + j] = p == 1 ? dist : std::pow(dist, static_cast<double>(p));
    }
  }
  return problem;
}

ExactCoupling ot_oracle_exact(const CouplingProblem& problem) {
  const std::size_t n = problem.n;
  if (n == 0 || n > 10) {
    throw std::invalid_argument("ot_oracle_exact: test-scale oracle handles 1 <= n <= 10");
  }
  if (problem.cost.size() != n * n) {
    throw std::invalid_argument("ot_oracle_exact: cost matrix size mismatch");
  }
  const std::size_t full = std::size_t{1} << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full, inf);
  std::vector<std::size_t> choice(full, n);
  dp[0] = 0.0;
  for (std::size_t mask = 1; mask < full; ++mask) {
    const std::size_t row = static_cast<std::size_t>(std::popcount(mask)) - 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const double cand = dp[mask ^ (std::size_t{1} << j)] + problem.cost[row * n + j];
      if (cand < dp[mask]) {
        dp[mask] = cand;
        choice[mask] = j;
      }
    }
  }
  ExactCoupling out;
  out.assignment.resize(n);
  std::size_t mask = full - 1;
  for (std::size_t row = n; row-- > 0;) {
    const std::size_t j = choice[mask];
    out.assignment[row] = j;
    mask ^= std::size_t{1} << j;
  }
  out.cost = dp[full - 1] / static_cast<double>(n);
  return out;
}

Tensor project(const EmpiricalDist& dist, const DefiningFunction& fn, std::size_t slice) {
  if (slice >= fn.slices) throw std::out_of_range("project: slice index out of range");
  Tensor all = fn.project_all(dist.samples);
  return o::reshape(o::gather_cols(all, {slice}), {all.dim(0)});
}

Tensor gswd(const EmpiricalDist& P, const EmpiricalDist& Q, const DefiningFunction& fn, int p) {
  if (P.count() != Q.count()) {
    throw std::invalid_argument("gswd: sample counts differ");
  }
  const std::size_t n = P.count();
  Tensor pa = fn.project_all(P.samples);
  Tensor qa = fn.project_all(Q.samples);
  Tensor total;
  for (std::size_t l = 0; l < fn.slices; ++l) {
    Tensor pl = o::reshape(o::gather_cols(pa, {l}), {n});
    Tensor ql = o::reshape(o::gather_cols(qa, {l}), {n});
    Tensor w = wasserstein_1d(pl, ql, p);
    total = total.defined() ? o::add(total, w) : w;
  }
  return o::mul_scalar(total, 1.0 / static_cast<double>(fn.slices));
}

namespace {

Tensor detached(const Tensor& t) {
  return Tensor(t.shape(), t.values(), false);
}

}  // namespace

double critic_ascent_step(const EmpiricalDist& P, const EmpiricalDist& Q, DefiningFunction& fn,
                          Optimizer& opt, int p) {
  if (fn.family != Family::NeuralCritic) {
    throw std::invalid_argument("critic_ascent_step: defining function is not a neural critic");
  }
  EmpiricalDist cp(detached(P.samples));
  EmpiricalDist cq(detached(Q.samples));
  if (opt.learning_rate() == 0.0) return gswd(cp, cq, fn, p).value();
  ParamGroup params = fn.params();
  set_requires_grad(params, true);
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor value = gswd(cp, cq, fn, p);
    tape.backward(value);
    opt.ascent_step(params);
  }
  fn.renormalize_slice_weights();
  return gswd(cp, cq, fn, p).value();
}

void DualCritic::clamp_weights() {
  for (auto& layer : net.layers) {
    for (auto* t : {const_cast<Tensor*>(&layer.weight), const_cast<Tensor*>(&layer.bias)}) {
      for (auto& v : t->values()) v = std::clamp(v, -clip, clip);
    }
  }
}

DualCritic make_dual_critic(std::size_t dim, std::size_t hidden, double clip, Rng& rng,
                            const std::string& name) {
  DualCritic critic;
  critic.net = nn::Mlp({dim, hidden, 1}, rng);
  critic.clip = clip;
  critic.name = name;
  // Positive hidden biases keep relu units alive under clipping.
  for (auto& v : critic.net.layers.front().bias.values()) v = clip;
  critic.clamp_weights();
  return critic;
}

Tensor dual_gap(const EmpiricalDist& P, const EmpiricalDist& Q, const DualCritic& critic) {
  Tensor fp = critic.net.forward(P.samples);
  Tensor fq = critic.net.forward(Q.samples);
  return o::sub(o::mean(fp), o::mean(fq));
}

double dual_wd(const EmpiricalDist& P, const EmpiricalDist& Q, DualCritic& critic,
               std::size_t steps, double lr) {
  EmpiricalDist cp(detached(P.samples));
  EmpiricalDist cq(detached(Q.samples));
  ParamGroup params = critic.params();
  set_requires_grad(params, true);
  Optimizer opt(OptimizerKind::Sgd, lr);
  for (std::size_t t = 0; t < steps; ++t) {
    Tape tape;
    TapeScope scope(tape);
    Tensor gap = dual_gap(cp, cq, critic);
    tape.backward(gap);
    opt.ascent_step(params);
    critic.clamp_weights();
  }
  return dual_gap(cp, cq, critic).value();
}

Tensor gaussian_kl(const EmpiricalDist& P, const EmpiricalDist& Q) {
  if (P.samples.rank() != 2 || Q.samples.rank() != 2) {
    throw std::invalid_argument("gaussian_kl: expected 2-D sample arrays");
  }
  if (P.dim() != Q.dim()) throw std::invalid_argument("gaussian_kl: sample dimensions differ");
  for (const auto* d : {&P, &Q}) {
    if (d->count() <= d->dim()) {
      throw std::invalid_argument("gaussian_kl: need more samples than dimensions");
    }
  }
  constexpr double kVarFloor = 1e-6;
  auto moments = [](const Tensor& x) {
    Tensor mu = o::mean_axis(x, 0);
    Tensor raw = o::sub(o::mean_axis(o::mul(x, x), 0), o::mul(mu, mu));
    Tensor var = o::add_scalar(o::relu(o::add_scalar(raw, -kVarFloor)), kVarFloor);
    return std::pair{mu, var};
  };
  auto [mp, vp] = moments(P.samples);
  auto [mq, vq] = moments(Q.samples);
  Tensor log_ratio = o::mul_scalar(o::log(o::div(vq, vp)), 0.5);
  Tensor quad = o::div(o::add(vp, o::pow(o::sub(mp, mq), 2.0)), o::mul_scalar(vq, 2.0));
  return o::sum(o::add_scalar(o::add(log_ratio, quad), -0.5));
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "kl") return MetricKind::GaussianKl;
  if (s == "wd") return MetricKind::DualWd;
  if (s == "swd") return MetricKind::Swd;
  if (s == "gswd") return MetricKind::Gswd;
  throw std::invalid_argument("unknown metric kind: " + s);
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::GaussianKl: return "kl";
    case MetricKind::DualWd: return "wd";
    case MetricKind::Swd: return "swd";
    default: return "gswd";
  }
}

void MetricSpec::validate() const {
  if (p != 1 && p != 2) throw std::invalid_argument("metric: order p must be 1 or 2");
  if (slices == 0) throw std::invalid_argument("metric: slice count must be >= 1");
}

MetricState::MetricState(MetricSpec spec, std::size_t dim, std::size_t num_views, Rng& rng)
    : spec_(spec), dim_(dim), num_views_(num_views) {
  spec_.validate();
  switch (spec_.kind) {
    case MetricKind::Swd:
      fn_ = make_linear_slices(dim, spec_.slices, rng);
      break;
    case MetricKind::Gswd:
      if (spec_.family == Family::Linear) {
        fn_ = make_linear_slices(dim, spec_.slices, rng);
      } else if (spec_.family == Family::OddPoly3) {
        fn_ = make_odd_poly3_slices(dim, spec_.slices, rng);
      } else {
        fn_ = make_neural_critic(dim, spec_.critic_hidden, spec_.slices, rng);
      }
      break;
    case MetricKind::DualWd:
      for (std::size_t i = 0; i < num_views; ++i) {
        for (std::size_t j = i + 1; j < num_views; ++j) {
          const std::string name =
              "critic/pair" + std::to_string(i) + "_" + std::to_string(j);
          duals_.emplace(std::make_pair(i, j),
                         make_dual_critic(dim, spec_.critic_hidden, spec_.clip, rng, name));
        }
      }
      break;
    case MetricKind::GaussianKl:
      break;
  }
}

bool MetricState::adversarial() const {
  return spec_.kind == MetricKind::DualWd ||
         (spec_.kind == MetricKind::Gswd && spec_.family == Family::NeuralCritic);
}

void MetricState::resample_slices(Rng& rng) {
  if (spec_.kind == MetricKind::Swd) {
    fn_ = make_linear_slices(dim_, spec_.slices, rng);
  } else if (spec_.kind == MetricKind::Gswd && spec_.family == Family::Linear) {
    fn_ = make_linear_slices(dim_, spec_.slices, rng);
  } else if (spec_.kind == MetricKind::Gswd && spec_.family == Family::OddPoly3) {
    fn_ = make_odd_poly3_slices(dim_, spec_.slices, rng);
  }
}

Tensor MetricState::pair_value(const Tensor& a, const Tensor& b) {
  return pair_value_indexed(0, 1, a, b);
}

Tensor MetricState::pair_value_indexed(std::size_t i, std::size_t j, const Tensor& a,
                                       const Tensor& b) {
  EmpiricalDist P(a), Q(b);
  switch (spec_.kind) {
    case MetricKind::GaussianKl: return gaussian_kl(P, Q);
    case MetricKind::DualWd: {
      auto it = duals_.find({i, j});
      if (it == duals_.end()) throw std::logic_error("metric: no critic for this view pair");
      return dual_gap(P, Q, it->second);
    }
    default: return gswd(P, Q, fn_, spec_.p);
  }
}

Tensor MetricState::loss(const std::vector<Tensor>& views) {
  if (views.size() < 2) {
    throw std::invalid_argument("gloco: need at least two views, got " +
                                std::to_string(views.size()));
  }
  Tensor total;
  for (std::size_t i = 0; i < views.size(); ++i) {
    for (std::size_t j = i + 1; j < views.size(); ++j) {
      Tensor v = pair_value_indexed(i, j, views[i], views[j]);
      total = total.defined() ? o::add(total, v) : v;
    }
  }
  return total;
}

double MetricState::ascend(const std::vector<Tensor>& views, Optimizer& opt) {
  if (!adversarial()) return 0.0;
  std::vector<Tensor> frozen;
  frozen.reserve(views.size());
  for (const auto& v : views) frozen.push_back(detached(v));
  ParamGroup params = critic_params();
  set_requires_grad(params, true);
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor value = loss(frozen);
    tape.backward(value);
    opt.ascent_step(params);
  }
  if (spec_.kind == MetricKind::Gswd) {
    fn_.renormalize_slice_weights();
  } else {
    for (auto& [key, critic] : duals_) critic.clamp_weights();
  }
  return mean_pairwise(frozen);
}

double MetricState::mean_pairwise(const std::vector<Tensor>& views) {
  const double pairs = static_cast<double>(views.size() * (views.size() - 1) / 2);
  std::vector<Tensor> frozen;
  frozen.reserve(views.size());
  for (const auto& v : views) frozen.push_back(detached(v));
  return loss(frozen).value() / pairs;
}

ParamGroup MetricState::critic_params() const {
  ParamGroup group;
  if (spec_.kind == MetricKind::Gswd && spec_.family == Family::NeuralCritic) {
    group = fn_.params();
  } else if (spec_.kind == MetricKind::DualWd) {
    for (const auto& [key, critic] : duals_) {
      ParamGroup g = critic.params();
      group.insert(group.end(), g.begin(), g.end());
    }
  }
  return group;
}

Tensor gloco_loss(const std::vector<Tensor>& views, MetricState& state) {
  return state.loss(views);
}

}  // namespace coconet::metrics
