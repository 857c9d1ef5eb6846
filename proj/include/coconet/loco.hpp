#pragma once

#include <cstdint>
#include <vector>

#include "coconet/rng.hpp"
#include "coconet/tensor.hpp"

namespace coconet::loco {

struct ScoreConfig {
  double tau = 0.07;
  void validate() const;
};

// Eq-7 style pair score exp(cos(a, b) / tau) for two vectors, on tape. The
// cosine normalizes internally with a 1e-12 norm floor.
Tensor score(const Tensor& a, const Tensor& b, double tau);

// -mean_i log(pos_i / (pos_i + sum_j negs_ij)) with pos {n} and negs {n,k};
// inputs are already score values. Throws when no negatives are given.
Tensor contrastive_loss(const Tensor& positive_scores, const Tensor& negative_scores);

// Unit-norm per-row feature cache updated with momentum; never on the tape.
class Bank {
 public:
  Bank() = default;
  Bank(std::size_t rows, std::size_t dim, Rng& rng);  // seeded random unit rows

  std::size_t rows() const { return storage_.dim(0); }
  std::size_t dim() const { return storage_.dim(1); }
  const Tensor& storage() const { return storage_; }
  Tensor& storage() { return storage_; }

  // row <- normalize(momentum * row + (1 - momentum) * feature)
  void update(const std::vector<std::size_t>& ids, const Tensor& features, double momentum);

  // k distinct row ids != exclude, uniform under the caller's generator.
  std::vector<std::size_t> sample_negatives(std::size_t exclude, std::size_t k, Rng& rng) const;

  // Copies the given rows into a fresh constant tensor {ids.size(), dim}.
  Tensor lookup(const std::vector<std::size_t>& ids) const;

 private:
  Tensor storage_;
};

// The two caches of §-style training: per-(view, sample) high-level rows
// (view m, sample i at row m*N+i) and per-sample complementarity factors.
struct MemoryBanks {
  std::size_t num_views = 0;
  std::size_t num_samples = 0;
  Bank h;   // (M*N) x C1
  Bank cf;  // N x C1

  MemoryBanks() = default;
  MemoryBanks(std::size_t views, std::size_t samples, std::size_t dim, Rng& rng);

  std::size_t h_row(std::size_t view, std::size_t id) const { return view * num_samples + id; }

  // k distinct h-bank rows whose sample id differs from exclude (any view).
  std::vector<std::size_t> sample_h_negatives(std::size_t exclude, std::size_t k, Rng& rng) const;
};

enum class NegativesSource { Minibatch, Bank };

NegativesSource negatives_source_from_string(const std::string& s);
std::string to_string(NegativesSource source);

struct LossConfig {
  double alpha = 1.0;
  double beta = 0.5;
  NegativesSource source = NegativesSource::Bank;
  std::size_t k = 256;  // bank-mode negatives per anchor

  void validate() const;
};

// Complementarity-aware contrastive loss over M views:
//   term 1 (weight alpha): h_i^m vs CF_i against other samples' factors;
//   term 2 (weight beta):  h_i^m vs h_i^t (t != m) against all views of
//                          other samples.
// Negatives come from the banks (constants) or the minibatch
// (differentiable) per the config. Bank sampling draws from `rng` in a
// fixed order independent of alpha/beta. Sums over samples and views.
Tensor loco_loss(const std::vector<Tensor>& view_features, const Tensor& cf,
                 const std::vector<std::size_t>& ids, const LossConfig& config, double tau,
                 const MemoryBanks* banks = nullptr, Rng* rng = nullptr);

}  // namespace coconet::loco
