#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coconet/nn.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"
#include "coconet/tensor.hpp"

namespace coconet::metrics {

// Rows are draws from one distribution; 1-D sample vectors are accepted
// where a projection has already been applied.
struct EmpiricalDist {
  Tensor samples;  // {n, d} or {n}

  explicit EmpiricalDist(Tensor t);
  std::size_t count() const { return samples.dim(0); }
  std::size_t dim() const { return samples.rank() == 2 ? samples.dim(1) : 1; }
};

enum class Family { Linear, OddPoly3, NeuralCritic };

Family family_from_string(const std::string& s);
std::string to_string(Family family);

// One-dimensional projection family ge(., theta). Linear and odd-poly
// families are linear in theta and therefore exactly degree-one homogeneous
// in it; the neural critic is a free network and exempt from that identity.
struct DefiningFunction {
  Family family = Family::Linear;
  std::size_t input_dim = 0;
  std::size_t slices = 1;  // L
  Tensor theta;            // {feature_dim, L}, unit-norm columns (linear / poly)
  nn::Mlp critic;          // neural family only

  // All slice projections at once: {n, L}. Differentiable in samples and
  // parameters.
  Tensor project_all(const Tensor& samples) const;

  ParamGroup params(const std::string& prefix = "critic") const;

  // Rescales each slice's final-layer weight column to unit norm (neural
  // family). Columns already unit within 1e-12 are left bit-identical, so a
  // zero-learning-rate ascent is a no-op.
  void renormalize_slice_weights();
};

std::size_t odd_poly3_feature_count(std::size_t dim);
// All monomials x_a*x_b*x_c with a <= b <= c (an odd function of x), on tape.
Tensor odd_poly3_features(const Tensor& x);

DefiningFunction make_linear_slices(std::size_t dim, std::size_t slices, Rng& rng);
DefiningFunction make_odd_poly3_slices(std::size_t dim, std::size_t slices, Rng& rng);
DefiningFunction make_neural_critic(std::size_t dim, std::size_t hidden, std::size_t slices,
                                    Rng& rng);

// Order-p Wasserstein distance between equal-count 1-D sample sets via the
// sorted coupling; gradients flow through the sort permutation frozen at
// forward time.
Tensor wasserstein_1d(const Tensor& a, const Tensor& b, int p);

struct CouplingProblem {
  std::size_t n = 0;
  std::vector<double> cost;  // n*n entries of c(x_i, y_j)^p

  static CouplingProblem from_points(const Tensor& x, const Tensor& y, int p);
};

struct ExactCoupling {
  double cost = 0.0;  // (W_p)^p under equal 1/n weights
  std::vector<std::size_t> assignment;
};

// Exact minimum over all couplings of equal-weight empirical measures
// (a permutation optimum) by dynamic programming over column subsets.
// Test-scale oracle: n <= 10.
ExactCoupling ot_oracle_exact(const CouplingProblem& problem);

Tensor project(const EmpiricalDist& dist, const DefiningFunction& fn, std::size_t slice);

// Monte Carlo estimate (1/L) * sum_l W_p of the sliced projections. SWD is
// this with the linear family.
Tensor gswd(const EmpiricalDist& P, const EmpiricalDist& Q, const DefiningFunction& fn, int p);

// One gradient-ascent step on the GSWD estimate w.r.t. the critic only
// (samples are detached); returns the post-step estimate.
double critic_ascent_step(const EmpiricalDist& P, const EmpiricalDist& Q, DefiningFunction& fn,
                          Optimizer& opt, int p);

// Kantorovich dual critic with elementwise weight clipping.
struct DualCritic {
  nn::Mlp net;  // d -> hidden -> 1
  double clip = 0.01;
  std::string name = "dual";

  ParamGroup params() const { ParamGroup g; net.collect(g, name); return g; }
  void clamp_weights();
};

DualCritic make_dual_critic(std::size_t dim, std::size_t hidden, double clip, Rng& rng,
                            const std::string& name = "dual");

// mean critic(P) - mean critic(Q), on tape.
Tensor dual_gap(const EmpiricalDist& P, const EmpiricalDist& Q, const DualCritic& critic);

// Maximizes the clipped-critic gap for `steps` ascent steps and returns the
// achieved gap.
double dual_wd(const EmpiricalDist& P, const EmpiricalDist& Q, DualCritic& critic,
               std::size_t steps, double lr);

// Closed-form KL between diagonal-covariance Gaussians moment-matched to
// the two sample sets (variances floored at 1e-6); differentiable w.r.t.
// the samples. Requires n > d.
Tensor gaussian_kl(const EmpiricalDist& P, const EmpiricalDist& Q);

enum class MetricKind { GaussianKl, DualWd, Swd, Gswd };

MetricKind metric_kind_from_string(const std::string& s);
std::string to_string(MetricKind kind);

struct MetricSpec {
  MetricKind kind = MetricKind::Gswd;
  Family family = Family::NeuralCritic;  // gswd projection family
  int p = 1;
  std::size_t slices = 64;
  std::size_t critic_hidden = 64;
  double clip = 0.01;  // dual-wd weight clipping

  void validate() const;
};

// Materialized metric: holds the slice parameters / critics so that one
// evaluation is a deterministic pure function and adversarial parameters
// persist across steps. Critics are created eagerly for a fixed view count.
class MetricState {
 public:
  MetricState(MetricSpec spec, std::size_t dim, std::size_t num_views, Rng& rng);

  const MetricSpec& spec() const { return spec_; }
  bool adversarial() const;

  // Fresh slice draw for the non-adversarial sliced families; no-op
  // otherwise.
  void resample_slices(Rng& rng);

  Tensor pair_value(const Tensor& a, const Tensor& b);

  // Sum over view pairs i < j (Eq-style double sum); requires >= 2 views.
  Tensor loss(const std::vector<Tensor>& views);

  // One ascent step of every critic on the pairwise sum (samples detached);
  // returns the post-step mean pairwise value. No-op for non-adversarial
  // metrics.
  double ascend(const std::vector<Tensor>& views, Optimizer& opt);

  double mean_pairwise(const std::vector<Tensor>& views);

  ParamGroup critic_params() const;
  DefiningFunction& defining_function() { return fn_; }
  std::map<std::pair<std::size_t, std::size_t>, DualCritic>& dual_critics() { return duals_; }

 private:
  Tensor pair_value_indexed(std::size_t i, std::size_t j, const Tensor& a, const Tensor& b);

  MetricSpec spec_;
  std::size_t dim_;
  std::size_t num_views_;
  DefiningFunction fn_;  // swd / gswd
  std::map<std::pair<std::size_t, std::size_t>, DualCritic> duals_;
};

// Eq-style global consistency loss over all view pairs.
Tensor gloco_loss(const std::vector<Tensor>& views, MetricState& state);

}  // namespace coconet::metrics
