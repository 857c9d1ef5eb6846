#include "coconet/encoders.hpp"

#include <stdexcept>
#include <string>

#include "coconet/ops.hpp"

namespace coconet::enc {

EncoderStack::EncoderStack(EncoderConfig config, Rng& rng) : config_(std::move(config)) {
  if (config_.view_dims.empty()) {
    throw std::invalid_argument("encoders: at least one view required");
  }
  for (std::size_t m = 0; m < config_.num_views(); ++m) {
    f_omega_.emplace_back(
        std::vector<std::size_t>{config_.view_dims[m], config_.hidden_omega, config_.map_size()},
        rng);
    f_theta_.emplace_back(
        std::vector<std::size_t>{config_.map_size(), config_.hidden_theta, config_.c1}, rng);
  }
  cfnet_ = nn::Linear(config_.fused_dim(), config_.c1, rng);
}

ViewEncoding EncoderStack::encode_view(std::size_t view, const Tensor& rows) const {
  if (view >= config_.num_views()) {
    throw std::out_of_range("encoders: view " + std::to_string(view) + " out of range");
  }
  if (rows.rank() != 2 || rows.dim(1) != config_.view_dims[view]) {
    throw std::invalid_argument("encoders: view " + std::to_string(view) + " expects width " +
                                std::to_string(config_.view_dims[view]) + ", got " +
                                shape_str(rows.shape()));
  }
  ViewEncoding out;
  out.z = ops::relu(f_omega_[view].forward(rows));
  out.h = ops::l2_normalize(f_theta_[view].forward(out.z));
  return out;
}

FeaturePack EncoderStack::encode_batch(const std::vector<Tensor>& view_rows) const {
  if (view_rows.size() != config_.num_views()) {
    throw std::invalid_argument("encoders: expected " + std::to_string(config_.num_views()) +
                                " views, got " + std::to_string(view_rows.size()));
  }
  FeaturePack pack;
  for (std::size_t m = 0; m < view_rows.size(); ++m) {
    ViewEncoding e = encode_view(m, view_rows[m]);
    pack.z.push_back(e.z);
    pack.h.push_back(e.h);
  }
  fuse_complementarity_factor(pack);
  return pack;
}

void EncoderStack::fuse_complementarity_factor(FeaturePack& pack) const {
  const std::size_t M = config_.num_views();
  const std::size_t c1 = config_.c1, c2 = config_.c2, hw = config_.spatial();
  if (pack.h.size() != M || pack.z.size() != M) {
    throw std::invalid_argument("encoders: feature pack does not cover all views");
  }
  for (const auto& z : pack.z) {
    if (z.dim(1) != hw * c2) {
      throw std::invalid_argument("encoders: mixed spatial sizes in low-level maps");
    }
  }

  pack.syncretic_h = ops::concat(pack.h, 1);  // {n, M*C1}

  // Reorder the view-major concat of maps into cell-major channels:
  // target column (s, m, c) <- view m, cell s, channel c.
  Tensor zcat = ops::concat(pack.z, 1);  // {n, M*hw*C2}
  std::vector<std::size_t> to_cell_major(M * hw * c2);
  for (std::size_t s = 0; s < hw; ++s) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t c = 0; c < c2; ++c) {
        to_cell_major[s * M * c2 + m * c2 + c] = m * hw * c2 + s * c2 + c;
      }
    }
  }
  pack.syncretic_z = ops::gather_cols(zcat, to_cell_major);  // {n, hw*M*C2}

  // Tile the syncretic vector over cells and append each cell's map
  // channels: columns [0, M*C1) repeat per cell, the map block advances.
  Tensor all = ops::concat({pack.syncretic_h, pack.syncretic_z}, 1);
  std::vector<std::size_t> fuse_idx(hw * M * (c1 + c2));
  std::size_t w = 0;
  for (std::size_t s = 0; s < hw; ++s) {
    for (std::size_t j = 0; j < M * c1; ++j) fuse_idx[w++] = j;
    for (std::size_t j = 0; j < M * c2; ++j) fuse_idx[w++] = M * c1 + s * M * c2 + j;
  }
  pack.fused = ops::gather_cols(all, fuse_idx);  // {n, hw*M*(C1+C2)}

  pack.cf = ops::l2_normalize(ops::relu(cfnet_.forward(pack.fused)));
}

ParamGroup EncoderStack::omega_params() const {
  ParamGroup group;
  for (std::size_t m = 0; m < f_omega_.size(); ++m) {
    f_omega_[m].collect(group, "view" + std::to_string(m) + "/omega");
  }
  return group;
}

ParamGroup EncoderStack::theta_params() const {
  ParamGroup group;
  for (std::size_t m = 0; m < f_theta_.size(); ++m) {
    f_theta_[m].collect(group, "view" + std::to_string(m) + "/theta");
  }
  cfnet_.collect(group, "cfnet");
  return group;
}

ParamGroup EncoderStack::all_params() const {
  ParamGroup group = omega_params();
  ParamGroup theta = theta_params();
  group.insert(group.end(), theta.begin(), theta.end());
  return group;
}

}  // namespace coconet::enc
