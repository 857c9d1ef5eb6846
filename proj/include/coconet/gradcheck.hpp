#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "coconet/tensor.hpp"

namespace coconet::gradcheck {

// Central-finite-difference comparison against the tape gradients. The
// loss builder must be a pure, deterministic function of the given leaves
// (fix any slice seeds before calling). Independent of the backward rules
// it checks: the numeric side only re-evaluates forward values.

struct Report {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "leaf[i]" of the worst element
};

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

inline Report compare(const std::function<Tensor()>& build_loss,
                      std::vector<std::pair<std::string, Tensor>> leaves, double h = 1e-5) {
  Report report;

  std::vector<std::vector<double>> analytic(leaves.size());
  {
    Tape tape;
    TapeScope scope(tape);
    for (auto& [name, leaf] : leaves) leaf.zero_grad();
    Tensor loss = build_loss();
    tape.backward(loss);
    for (std::size_t li = 0; li < leaves.size(); ++li) {
      auto& leaf = leaves[li].second;
      analytic[li] = leaf.has_grad() ? leaf.grad() : std::vector<double>(leaf.numel(), 0.0);
      leaf.zero_grad();
    }
  }

  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li].second;
    for (std::size_t i = 0; i < leaf.numel(); ++i) {
      const double saved = leaf.values()[i];
      leaf.values()[i] = saved + h;
      const double up = build_loss().value();
      leaf.values()[i] = saved - h;
      const double down = build_loss().value();
      leaf.values()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = rel_err(analytic[li][i], numeric);
      ++report.checked;
      if (err > report.max_rel_err) {
        report.max_rel_err = err;
        report.worst = leaves[li].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace coconet::gradcheck
