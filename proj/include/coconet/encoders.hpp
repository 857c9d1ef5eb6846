#pragma once

#include <cstddef>
#include <vector>

#include "coconet/nn.hpp"
#include "coconet/optim.hpp"
#include "coconet/rng.hpp"
#include "coconet/tensor.hpp"

namespace coconet::enc {

struct EncoderConfig {
  std::vector<std::size_t> view_dims;  // input dimensionality per view
  std::size_t c1 = 64;                 // high-level vector size
  std::size_t c2 = 32;                 // low-level map channels
  std::size_t map_h = 4;
  std::size_t map_w = 4;
  std::size_t hidden_omega = 128;
  std::size_t hidden_theta = 128;

  std::size_t num_views() const { return view_dims.size(); }
  std::size_t spatial() const { return map_h * map_w; }
  std::size_t map_size() const { return spatial() * c2; }
  std::size_t fused_dim() const { return spatial() * num_views() * (c1 + c2); }
};

struct ViewEncoding {
  Tensor z;  // {n, h*w*C2}, cell-major rows of the low-level map
  Tensor h;  // {n, C1}, unit L2 rows
};

// Everything derived from one encoded batch. Channel layout of the fused
// embedding at spatial cell s: the M*C1 syncretic vector (tiled over cells)
// followed by the M*C2 syncretic map channels of cell s.
struct FeaturePack {
  std::vector<Tensor> z;  // per view {n, h*w*C2}
  std::vector<Tensor> h;  // per view {n, C1}
  Tensor syncretic_h;     // {n, M*C1}
  Tensor syncretic_z;     // {n, h*w*M*C2}
  Tensor fused;           // {n, h*w*M*(C1+C2)}
  Tensor cf;              // {n, C1}, unit L2 rows
};

// Per-view feature extractors f_omega (input -> low-level map) and mappers
// f_theta (map -> unit-norm high-level vector), plus the fusion network
// projecting the combined embedding to the complementarity factor.
class EncoderStack {
 public:
  EncoderStack(EncoderConfig config, Rng& rng);

  const EncoderConfig& config() const { return config_; }

  ViewEncoding encode_view(std::size_t view, const Tensor& rows) const;

  // Concatenates high- and low-level features of all views, tiles the
  // syncretic vector across cells, and projects to the C1-dim factor.
  // Differentiable end to end.
  FeaturePack encode_batch(const std::vector<Tensor>& view_rows) const;
  void fuse_complementarity_factor(FeaturePack& pack) const;

  ParamGroup omega_params() const;  // feature extractors
  ParamGroup theta_params() const;  // mappers + fusion network
  ParamGroup all_params() const;

 private:
  EncoderConfig config_;
  std::vector<nn::Mlp> f_omega_;
  std::vector<nn::Mlp> f_theta_;
  nn::Linear cfnet_;
};

}  // namespace coconet::enc
