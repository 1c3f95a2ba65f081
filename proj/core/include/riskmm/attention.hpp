#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskmm/grid.hpp"

namespace riskmm {

/// Numerically stable softmax (per-row maximum subtracted).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// Sinusoidal embeddings of the grid-cell center coordinates: x fills the
/// first C/2 channels, y the rest, alternating sin/cos with geometrically
/// spaced frequencies. Rows follow the row-major cell flattening.
Eigen::MatrixXd position_embedding(const GridSpec& spec, int model_dim);

/// Same construction over integer timestep indices 0..steps-1.
Eigen::MatrixXd time_embedding(int steps, int model_dim);

struct AttentionParams {
  int num_heads = 1;
  int model_dim = 0;                // C
  std::vector<Eigen::MatrixXd> Wq;  // per head, (C/num_heads) x C
  std::vector<Eigen::MatrixXd> Wk;
  std::vector<Eigen::MatrixXd> Wv;
  Eigen::MatrixXd W_out;            // C x C

  int head_dim() const { return model_dim / num_heads; }
  void validate() const;  // ConfigError / ShapeError / NumericError
};

struct TemporalParams {
  AttentionParams attn;
  Eigen::MatrixXd mlp_w;  // C x C pre-transform
  Eigen::VectorXd mlp_b;  // C

  void validate() const;
};

struct TemporalOutput {
  Eigen::VectorXd fused;         // C
  Eigen::MatrixXd head_weights;  // num_heads x T_his, rows sum to 1
};

/// Self-attention over one cell's feature history (rows oldest to newest),
/// read out at the newest timestep. Each row is first mapped through
/// relu(mlp_w * (f + p) + mlp_b) with its timestep embedding p.
TemporalOutput temporal_self_attention(const Eigen::MatrixXd& history,
                                       const Eigen::MatrixXd& time_embeddings,
                                       const TemporalParams& params);

/// Dense store of one C x C bilinear weight per ordered agent pair (i, j).
struct PairwiseWeights {
  int agent_count = 0;
  std::vector<Eigen::MatrixXd> mats;  // row-major over (i, j)

  const Eigen::MatrixXd& at(int i, int j) const;
  void validate(int model_dim) const;  // ConfigError on missing/misshaped
};

struct AgentFusionParams {
  Eigen::MatrixXd Wq;  // C x C shared projections
  Eigen::MatrixXd Wk;
  Eigen::MatrixXd Wv;

  void validate() const;
};

struct AgentFusionOutput {
  Eigen::MatrixXd fused;    // N x C
  Eigen::MatrixXd weights;  // N x N, rows sum to 1
};

/// Pairwise-bilinear fusion: agent i attends over agents j with logits
/// q_i^T W_ij k_j, softmax across j, output sum of weighted v_j.
AgentFusionOutput agent_cross_fusion(const Eigen::MatrixXd& agent_features,
                                     const PairwiseWeights& pairwise,
                                     const AgentFusionParams& params);

struct RiskAttentionOutput {
  Eigen::MatrixXd risk_features;  // N x C attention read-outs
  RiskMap risk_map;               // head-averaged attention weights
};

/// Multi-head cross-attention from each vehicle's occupied cell (query:
/// cell feature + its position embedding) over all flattened cells (keys:
/// features + embeddings, values: features).
RiskAttentionOutput risk_cross_attention(const FeatureGrid& features,
                                         std::span<const CellIndex> vehicle_cells,
                                         const AttentionParams& params,
                                         const Eigen::MatrixXd& pos_embed);

}  // namespace riskmm
