#include "coconet/loco.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "coconet/ops.hpp"

namespace coconet::loco {

namespace o = coconet::ops;

void ScoreConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("score: temperature must be positive");
}

Tensor score(const Tensor& a, const Tensor& b, double tau) {
  ScoreConfig{tau}.validate();
  if (a.rank() != 1 || b.rank() != 1 || a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("score: expected two vectors of equal length");
  }
  Tensor cos = o::dot(o::l2_normalize(a), o::l2_normalize(b));
  return o::exp(o::mul_scalar(cos, 1.0 / tau));
}

Tensor contrastive_loss(const Tensor& positive_scores, const Tensor& negative_scores) {
  if (positive_scores.rank() != 1) {
    throw std::invalid_argument("contrastive_loss: positive scores must be 1-D");
  }
  if (negative_scores.rank() != 2 || negative_scores.dim(0) != positive_scores.dim(0) ||
      negative_scores.dim(1) == 0) {
    throw std::invalid_argument("contrastive_loss: need at least one negative per positive");
  }
  Tensor denom = o::add(positive_scores, o::sum_axis(negative_scores, 1));
  return o::mean(o::sub(o::log(denom), o::log(positive_scores)));
}

Bank::Bank(std::size_t rows, std::size_t dim, Rng& rng) {
  std::vector<double> values(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      values[i * dim + j] = rng.normal();
      sq += values[i * dim + j] * values[i * dim + j];
    }
    const double inv = 1.0 / (std::sqrt(sq) + o::kNormEps);
    for (std::size_t j = 0; j < dim; ++j) values[i * dim + j] *= inv;
  }
  storage_ = Tensor(Shape{rows, dim}, std::move(values), false);
}

void Bank::update(const std::vector<std::size_t>& ids, const Tensor& features, double momentum) {
  if (features.rank() != 2 || features.dim(0) != ids.size() || features.dim(1) != dim()) {
    throw std::invalid_argument("bank_update: features must be ids x dim");
  }
  // momentum 1 degenerates to renormalizing the old row; still well defined
  if (!(momentum >= 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("bank_update: momentum must be in [0, 1]");
  }
  auto& rows_data = storage_.values();
  const auto& feat = features.values();
  const std::size_t d = dim();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows()) {
      throw std::out_of_range("bank_update: id " + std::to_string(ids[i]) + " out of " +
                              std::to_string(rows()));
    }
    double* row = rows_data.data() + ids[i] * d;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = momentum * row[j] + (1.0 - momentum) * feat[i * d + j];
      sq += row[j] * row[j];
    }
    const double inv = 1.0 / (std::sqrt(sq) + o::kNormEps);
    for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
  }
}

namespace {

// k distinct values from [0, total) \ excluded via a partial Fisher-Yates.
std::vector<std::size_t> sample_excluding(std::size_t total,
                                          const std::vector<std::size_t>& excluded, std::size_t k,
                                          Rng& rng) {
  std::vector<std::size_t> pool;
  pool.reserve(total);
  for (std::size_t v = 0; v < total; ++v) {
    bool skip = false;
    for (std::size_t e : excluded) skip = skip || v == e;
    if (!skip) pool.push_back(v);
  }
  if (k > pool.size()) {
    throw std::invalid_argument("bank: requested " + std::to_string(k) + " negatives from " +
                                std::to_string(pool.size()) + " candidates");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::vector<std::size_t> Bank::sample_negatives(std::size_t exclude, std::size_t k,
                                                Rng& rng) const {
  if (k >= rows()) {
    throw std::invalid_argument("bank: cannot sample " + std::to_string(k) +
                                " distinct negatives from " + std::to_string(rows()) + " rows");
  }
  return sample_excluding(rows(), {exclude}, k, rng);
}

Tensor Bank::lookup(const std::vector<std::size_t>& ids) const {
  const std::size_t d = dim();
  std::vector<double> out(ids.size() * d);
  const auto& src = storage_.values();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows()) throw std::out_of_range("bank: lookup id out of range");
    std::copy(src.begin() + ids[i] * d, src.begin() + (ids[i] + 1) * d, out.begin() + i * d);
  }
  return Tensor(Shape{ids.size(), d}, std::move(out), false);
}

MemoryBanks::MemoryBanks(std::size_t views, std::size_t samples, std::size_t dim, Rng& rng)
    : num_views(views), num_samples(samples), h(views * samples, dim, rng),
      cf(samples, dim, rng) {}

std::vector<std::size_t> MemoryBanks::sample_h_negatives(std::size_t exclude, std::size_t k,
                                                         Rng& rng) const {
  std::vector<std::size_t> excluded(num_views);
  for (std::size_t q = 0; q < num_views; ++q) excluded[q] = h_row(q, exclude);
  return sample_excluding(h.rows(), excluded, k, rng);
}

NegativesSource negatives_source_from_string(const std::string& s) {
  if (s == "minibatch") return NegativesSource::Minibatch;
  if (s == "bank") return NegativesSource::Bank;
  throw std::invalid_argument("unknown negatives source: " + s);
}

std::string to_string(NegativesSource source) {
  return source == NegativesSource::Minibatch ? "minibatch" : "bank";
}

void LossConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0)) {
    throw std::invalid_argument("loco: alpha and beta must be nonnegative and not both zero");
  }
  if (source == NegativesSource::Bank && k == 0) {
    throw std::invalid_argument("loco: bank mode needs k >= 1 negatives");
  }
}

namespace {

// Row-wise scores exp(<anchors_i, negatives_{i,j}> / tau) against per-row
// constant negative blocks: anchors {n, d}, negatives {n*k, d} -> {n, k}.
Tensor per_row_negative_scores(const Tensor& anchors, const Tensor& negatives, std::size_t k,
                               double tau) {
  const std::size_t n = anchors.dim(0);
  std::vector<std::size_t> repeat(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) repeat[i * k + j] = i;
  }
  Tensor tiled = o::gather_rows(anchors, repeat);               // {n*k, d}
  Tensor dots = o::sum_axis(o::mul(tiled, negatives), 1);        // {n*k}
  return o::exp(o::mul_scalar(o::reshape(dots, {n, k}), 1.0 / tau));
}

// Mask constant: 1 everywhere except zeros at (i, cols excluded for i).
Tensor exclusion_mask(std::size_t n, std::size_t cols,
                      const std::function<bool(std::size_t, std::size_t)>& excluded) {
  std::vector<double> mask(n * cols, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (excluded(i, j)) mask[i * cols + j] = 0.0;
    }
  }
  return Tensor(Shape{n, cols}, std::move(mask), false);
}

}  // namespace

Tensor loco_loss(const std::vector<Tensor>& view_features, const Tensor& cf,
                 const std::vector<std::size_t>& ids, const LossConfig& config, double tau,
                 const MemoryBanks* banks, Rng* rng) {
  config.validate();
  ScoreConfig{tau}.validate();
  const std::size_t M = view_features.size();
  if (M == 0) throw std::invalid_argument("loco: no views");
  if (M < 2 && config.beta > 0.0) {
    throw std::invalid_argument("loco: cross-view term needs at least two views");
  }
  const std::size_t n = cf.dim(0);
  if (ids.size() != n) throw std::invalid_argument("loco: ids must match the batch");
  for (const auto& h : view_features) {
    if (h.rank() != 2 || h.dim(0) != n || h.dim(1) != cf.dim(1)) {
      throw std::invalid_argument("loco: view features must be n x C1, aligned with cf");
    }
  }
  const bool bank_mode = config.source == NegativesSource::Bank;
  if (bank_mode && (banks == nullptr || rng == nullptr)) {
    throw std::invalid_argument("loco: bank mode needs banks and a generator");
  }
  if (!bank_mode && n < 2) {
    throw std::invalid_argument("loco: minibatch negatives need a batch of at least 2");
  }

  const double inv_tau = 1.0 / tau;
  Tensor cf_n = o::l2_normalize(cf);
  std::vector<Tensor> h_n;
  h_n.reserve(M);
  for (const auto& h : view_features) h_n.push_back(o::l2_normalize(h));

  // Bank negatives are drawn up front in a fixed order so the draw sequence
  // does not depend on which terms are active.
  Tensor cf_negatives;  // {n*k, C1}
  Tensor h_negatives;   // {n*k, C1}
  const std::size_t k = config.k;
  if (bank_mode) {
    std::vector<std::size_t> cf_rows_idx, h_rows_idx;
    cf_rows_idx.reserve(n * k);
    h_rows_idx.reserve(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t row : banks->cf.sample_negatives(ids[i], k, *rng)) {
        cf_rows_idx.push_back(row);
      }
      for (std::size_t row : banks->sample_h_negatives(ids[i], k, *rng)) {
        h_rows_idx.push_back(row);
      }
    }
    cf_negatives = banks->cf.lookup(cf_rows_idx);
    h_negatives = banks->h.lookup(h_rows_idx);
  }

  Tensor term1;  // complementarity-factor contrast
  if (config.alpha > 0.0) {
    for (std::size_t m = 0; m < M; ++m) {
      Tensor pos = o::exp(o::mul_scalar(o::sum_axis(o::mul(h_n[m], cf_n), 1), inv_tau));
      Tensor neg_sum;
      if (bank_mode) {
        neg_sum = o::sum_axis(per_row_negative_scores(h_n[m], cf_negatives, k, tau), 1);
      } else {
        Tensor scores = o::exp(o::mul_scalar(o::matmul(h_n[m], o::transpose(cf_n)), inv_tau));
        Tensor mask = exclusion_mask(n, n, [](std::size_t i, std::size_t j) { return i == j; });
        neg_sum = o::sum_axis(o::mul(scores, mask), 1);
      }
      Tensor piece = o::sum(o::sub(o::log(o::add(pos, neg_sum)), o::log(pos)));
      term1 = term1.defined() ? o::add(term1, piece) : piece;
    }
  }

  Tensor term2;  // cross-view contrast
  if (config.beta > 0.0) {
    Tensor all_views = bank_mode ? Tensor() : o::concat(h_n, 0);  // {M*n, C1}
    for (std::size_t m = 0; m < M; ++m) {
      Tensor neg_sum;
      if (bank_mode) {
        neg_sum = o::sum_axis(per_row_negative_scores(h_n[m], h_negatives, k, tau), 1);
      } else {
        Tensor scores = o::exp(o::mul_scalar(o::matmul(h_n[m], o::transpose(all_views)), inv_tau));
        Tensor mask = exclusion_mask(
            n, M * n, [n](std::size_t i, std::size_t j) { return j % n == i; });
        neg_sum = o::sum_axis(o::mul(scores, mask), 1);
      }
      for (std::size_t t = 0; t < M; ++t) {
        if (t == m) continue;
        Tensor pos = o::exp(o::mul_scalar(o::sum_axis(o::mul(h_n[m], h_n[t]), 1), inv_tau));
        Tensor piece = o::sum(o::sub(o::log(o::add(pos, neg_sum)), o::log(pos)));
        term2 = term2.defined() ? o::add(term2, piece) : piece;
      }
    }
  }

  if (term1.defined() && term2.defined()) {
    return o::add(o::mul_scalar(term1, config.alpha), o::mul_scalar(term2, config.beta));
  }
  if (term1.defined()) return o::mul_scalar(term1, config.alpha);
  return o::mul_scalar(term2, config.beta);
}

}  // namespace coconet::loco
