// SPDX-License-Identifier: Apache-2.0

#include "rigidock/iegmn.hpp"

#include <cmath>
#include <stdexcept>

#include "rigidock/geometry.hpp"

namespace rigidock {

void ModelConfig::validate() const {
  auto require = [](bool ok, const char *what) {
    if (!ok)
      throw std::invalid_argument(std::string("model config: ") + what);
  };
  require(hidden_dim > 0, "hidden_dim must be positive");
  require(residue_embed_dim > 0, "residue_embed_dim must be positive");
  require(num_layers >= 1, "num_layers must be at least 1");
  require(leaky_slope >= 0, "leaky_slope must be nonnegative");
  require(eta >= 0 && eta <= 1, "eta must lie in [0, 1]");
  require(beta >= 0 && beta <= 1, "beta must lie in [0, 1]");
  require(sigma_msg > 0, "sigma_msg must be positive");
  require(num_heads >= 1, "num_heads must be at least 1");
  require(num_neighbors >= 1, "num_neighbors must be positive");
}

void to_json(nlohmann::json &j, const ModelConfig &c) {
  j = nlohmann::json {
    { "hidden_dim", c.hidden_dim },
    { "residue_embed_dim", c.residue_embed_dim },
    { "num_layers", c.num_layers },
    { "share_layers", c.share_layers },
    { "leaky_slope", c.leaky_slope },
    { "eta", c.eta },
    { "beta", c.beta },
    { "sigma_msg", c.sigma_msg },
    { "layer_norm_h", c.layer_norm_h },
    { "mean_coordinate_update", c.mean_coordinate_update },
    { "num_heads", c.num_heads },
    { "num_neighbors", c.num_neighbors },
  };
}

void from_json(const nlohmann::json &j, ModelConfig &c) {
  ModelConfig d;
  c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
  c.residue_embed_dim = j.value("residue_embed_dim", d.residue_embed_dim);
  c.num_layers = j.value("num_layers", d.num_layers);
  c.share_layers = j.value("share_layers", d.share_layers);
  c.leaky_slope = j.value("leaky_slope", d.leaky_slope);
  c.eta = j.value("eta", d.eta);
  c.beta = j.value("beta", d.beta);
  c.sigma_msg = j.value("sigma_msg", d.sigma_msg);
  c.layer_norm_h = j.value("layer_norm_h", d.layer_norm_h);
  c.mean_coordinate_update
      = j.value("mean_coordinate_update", d.mean_coordinate_update);
  c.num_heads = j.value("num_heads", d.num_heads);
  c.num_neighbors = j.value("num_neighbors", d.num_neighbors);
}

std::string layer_prefix(const ModelConfig &cfg, int layer) {
  const int stored = cfg.share_layers && layer > 1 ? 1 : layer;
  return "iegmn.layer" + std::to_string(stored) + ".";
}

namespace {

MatrixXd normal_matrix(Rng &rng, Eigen::Index rows, Eigen::Index cols,
                       double stddev) {
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      m(r, c) = stddev * standard_normal(rng);
  return m;
}

void add_linear(ParamStore &ps, Rng &rng, const std::string &name,
                Eigen::Index in, Eigen::Index out, double gain,
                bool zero = false) {
  ps.add(name + ".w", zero ? MatrixXd::Zero(out, in)
                           : normal_matrix(rng, out, in,
                                           gain / std::sqrt(double(in))));
  ps.add(name + ".b", MatrixXd::Zero(out, 1));
}

ad::Tensor linear(const BoundParams &p, const std::string &name,
                  const ad::Tensor &x) {
  return ad::add_colwise(ad::matmul(p[name + ".w"], x), p[name + ".b"]);
}

// Linear -> LeakyReLU -> Linear.
ad::Tensor mlp(const BoundParams &p, const std::string &name,
               const ad::Tensor &x, double slope) {
  return linear(p, name + ".l2",
                ad::leaky_relu(linear(p, name + ".l1", x), slope));
}

}  // namespace

ParamStore init_params(const ModelConfig &cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParamStore ps;
  const Eigen::Index d = cfg.hidden_dim;
  const double he = std::sqrt(2.0);

  ps.add("iegmn.embed",
         normal_matrix(rng, cfg.residue_embed_dim, kNumResidueTypes, 1.0));
  add_linear(ps, rng, "iegmn.input", cfg.node_feature_dim(), d, 1.0);

  const int stored_layers = cfg.share_layers ? std::min(cfg.num_layers, 2)
                                             : cfg.num_layers;
  for (int l = 0; l < stored_layers; ++l) {
    const std::string pre = "iegmn.layer" + std::to_string(l) + ".";
    add_linear(ps, rng, pre + "phi_e.l1", 2 * d + 1 + kEdgeFeatureDim, d, he);
    add_linear(ps, rng, pre + "phi_e.l2", d, d, 1.0);
    add_linear(ps, rng, pre + "phi_x.l1", d, d, he);
    add_linear(ps, rng, pre + "phi_x.l2", d, 1, 1.0, /*zero=*/true);
    add_linear(ps, rng, pre + "phi_h.l1", 3 * d + cfg.node_feature_dim(), d,
               he);
    add_linear(ps, rng, pre + "phi_h.l2", d, d, 1.0);
    ps.add(pre + "W", normal_matrix(rng, d, d, 1.0 / std::sqrt(double(d))));
    add_linear(ps, rng, pre + "psi_q", d, d, 1.0);
    add_linear(ps, rng, pre + "psi_k", d, d, 1.0);
    ps.add(pre + "ln.gain", MatrixXd::Ones(d, 1));
    ps.add(pre + "ln.bias", MatrixXd::Zero(d, 1));
  }

  add_linear(ps, rng, "keypoint.phi", d, d, he);
  ps.add("keypoint.heads",
         normal_matrix(rng, cfg.num_heads * d, d, 1.0 / std::sqrt(double(d))));
  return ps;
}

void jitter_params(ParamStore &params, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  for (const auto &name: params.names()) {
    MatrixXd &w = params.at(name);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) += stddev * standard_normal(rng);
  }
}

GraphContext make_context(const BoundParams &p, const ModelConfig &cfg,
                          const ProteinGraph &g, const Eigen::Matrix3Xd &x) {
  if (x.cols() != g.num_nodes())
    throw ShapeError("make_context: coordinate count differs from graph");
  ad::Tape &tape = p.tape();
  GraphContext c;
  c.graph = &g;
  c.x0 = tape.constant(x);
  ad::Tensor emb = ad::gather_cols(p["iegmn.embed"], g.residue_types);
  if (g.surface.rows() != kNumSurfaceFeatures || g.surface.cols() != x.cols())
    throw ShapeError("make_context: surface features must be 5 x n");
  c.node_feats = ad::concat_rows({ emb, tape.constant(g.surface) });
  c.edge_feats = tape.constant(g.edge_feats);
  (void)cfg;
  return c;
}

GraphState initial_state(const BoundParams &p, const ModelConfig &cfg,
                         const GraphContext &c) {
  (void)cfg;
  return { c.x0, linear(p, "iegmn.input", c.node_feats) };
}

ad::Tensor cross_attention(const BoundParams &p, const std::string &prefix,
                           const ad::Tensor &h_query,
                           const ad::Tensor &h_key) {
  ad::Tensor q = linear(p, prefix + "psi_q", h_query);
  ad::Tensor k = linear(p, prefix + "psi_k", h_key);
  return ad::softmax_rows(ad::matmul(ad::transpose(q), k));
}

namespace {

struct IntraResult {
  ad::Tensor messages;  // d x E
  ad::Tensor coord_update;  // 3 x n
};

IntraResult intra_messages(const BoundParams &p, const ModelConfig &cfg,
                           const std::string &prefix, const GraphContext &c,
                           const GraphState &s) {
  const ProteinGraph &g = *c.graph;
  const Eigen::Index n = g.num_nodes();
  ad::Tensor xi = ad::gather_cols(s.z, g.dst);
  ad::Tensor xj = ad::gather_cols(s.z, g.src);
  ad::Tensor diff = xi - xj;
  ad::Tensor kernel
      = ad::exp((-1.0 / cfg.sigma_msg) * ad::colwise_squared_norm(diff));
  ad::Tensor in = ad::concat_rows({ ad::gather_cols(s.h, g.dst),
                                    ad::gather_cols(s.h, g.src), kernel,
                                    c.edge_feats });
  IntraResult r;
  r.messages = mlp(p, prefix + "phi_e", in, cfg.leaky_slope);
  ad::Tensor coef = mlp(p, prefix + "phi_x", r.messages, cfg.leaky_slope);
  ad::Tensor weighted = ad::mul_rowwise(diff, coef);
  r.coord_update = cfg.mean_coordinate_update
                       ? ad::scatter_mean_cols(weighted, g.dst, n)
                       : ad::scatter_sum_cols(weighted, g.dst, n);
  return r;
}

GraphState update_graph(const BoundParams &p, const ModelConfig &cfg,
                        const std::string &prefix, const GraphContext &c,
                        const GraphState &s, const IntraResult &intra,
                        const ad::Tensor &cross) {
  const ProteinGraph &g = *c.graph;
  const Eigen::Index n = g.num_nodes();
  GraphState out;
  out.z = (cfg.eta * c.x0 + (1.0 - cfg.eta) * s.z) + intra.coord_update;

  ad::Tensor m_i = ad::scatter_mean_cols(intra.messages, g.dst, n);
  ad::Tensor in = ad::concat_rows({ s.h, m_i, cross, c.node_feats });
  ad::Tensor h = (1.0 - cfg.beta) * s.h
                 + cfg.beta * mlp(p, prefix + "phi_h", in, cfg.leaky_slope);
  if (cfg.layer_norm_h)
    h = ad::layer_norm_cols(h, p[prefix + "ln.gain"], p[prefix + "ln.bias"]);
  out.h = h;
  return out;
}

}  // namespace

std::pair<GraphState, GraphState>
layer_forward(const BoundParams &p, const ModelConfig &cfg,
              const std::string &prefix, const GraphContext &c1,
              const GraphState &s1, const GraphContext &c2,
              const GraphState &s2) {
  const Eigen::Index d = cfg.hidden_dim;
  if (s1.h.rows() != d || s2.h.rows() != d)
    throw ShapeError("layer_forward: feature rows differ from hidden_dim");
  if (s1.z.rows() != 3 || s2.z.rows() != 3 || s1.z.cols() != s1.h.cols()
      || s2.z.cols() != s2.h.cols())
    throw ShapeError("layer_forward: coordinate/feature column mismatch");

  const IntraResult intra1 = intra_messages(p, cfg, prefix, c1, s1);
  const IntraResult intra2 = intra_messages(p, cfg, prefix, c2, s2);

  ad::Tensor a12 = cross_attention(p, prefix, s1.h, s2.h);  // n1 x n2
  ad::Tensor a21 = cross_attention(p, prefix, s2.h, s1.h);  // n2 x n1
  if (cfg.cross_coordinate_leak) {
    // Deliberately non-invariant: mixes raw cross-graph distances in.
    ad::Tensor d12 = ad::pairwise_squared_distance(s1.z, s2.z);
    a12 = ad::softmax_rows(ad::log(a12) - 0.01 * d12);
    a21 = ad::softmax_rows(ad::log(a21) - 0.01 * ad::transpose(d12));
  }
  const ad::Tensor &w = p[prefix + "W"];
  ad::Tensor mu1 = ad::matmul(ad::matmul(w, s2.h), ad::transpose(a12));
  ad::Tensor mu2 = ad::matmul(ad::matmul(w, s1.h), ad::transpose(a21));

  return { update_graph(p, cfg, prefix, c1, s1, intra1, mu1),
           update_graph(p, cfg, prefix, c2, s2, intra2, mu2) };
}

std::pair<GraphState, GraphState>
iegmn_forward(const BoundParams &p, const ModelConfig &cfg,
              const ProteinGraph &g1, const Eigen::Matrix3Xd &x1,
              const ProteinGraph &g2, const Eigen::Matrix3Xd &x2) {
  const GraphContext c1 = make_context(p, cfg, g1, x1);
  const GraphContext c2 = make_context(p, cfg, g2, x2);
  GraphState s1 = initial_state(p, cfg, c1);
  GraphState s2 = initial_state(p, cfg, c2);
  for (int l = 0; l < cfg.num_layers; ++l) {
    auto [n1, n2]
        = layer_forward(p, cfg, layer_prefix(cfg, l), c1, s1, c2, s2);
    s1 = n1;
    s2 = n2;
  }
  return { s1, s2 };
}

}  // namespace rigidock
