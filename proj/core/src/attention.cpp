#include "riskmm/attention.hpp"

#include <cmath>
#include <string>

#include "riskmm/errors.hpp"

namespace riskmm {

namespace {

void fill_sinusoids(Eigen::MatrixXd& out, int row, double pos, int offset,
                    int half) {
  for (int j = 0; j < half; ++j) {
    const double freq = std::pow(100.0, -2.0 * (j / 2) / half);
    out(row, offset + j) = (j % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
  }
}

void check_model_dim(int model_dim) {
  if (model_dim < 2 || model_dim % 2 != 0)
    throw ConfigError("embedding dimension must be a positive even number");
}

/// One multi-head attention read-out for a single query over `keys`/`values`
/// rows. Returns the W_out-projected output and per-head weights.
struct HeadReadout {
  Eigen::VectorXd out;
  Eigen::MatrixXd weights;  // num_heads x rows
};

HeadReadout multi_head_readout(const Eigen::VectorXd& query,
                               const Eigen::MatrixXd& keys,
                               const Eigen::MatrixXd& values,
                               const AttentionParams& p) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim()));
  Eigen::VectorXd concat(p.model_dim);
  Eigen::MatrixXd weights(p.num_heads, keys.rows());
  for (int h = 0; h < p.num_heads; ++h) {
    const Eigen::VectorXd q = p.Wq[h] * query;
    const Eigen::MatrixXd K = keys * p.Wk[h].transpose();
    const Eigen::MatrixXd V = values * p.Wv[h].transpose();
    const Eigen::VectorXd w = softmax(K * q * scale);
    weights.row(h) = w.transpose();
    concat.segment(h * p.head_dim(), p.head_dim()) = V.transpose() * w;
  }
  return {p.W_out * concat, std::move(weights)};
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw ShapeError("softmax over empty logits");
  if (!logits.allFinite()) throw NumericError("softmax logits must be finite");
  const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

Eigen::MatrixXd position_embedding(const GridSpec& spec, int model_dim) {
  check_model_dim(model_dim);
  spec.validate();
  const int half = model_dim / 2;
  Eigen::MatrixXd out(spec.cell_count(), model_dim);
  for (int k = 0; k < spec.cell_count(); ++k) {
    const Vec2 center = cell_to_world(spec.unflatten(k), spec);
    fill_sinusoids(out, k, center.x, 0, half);
    fill_sinusoids(out, k, center.y, half, half);
  }
  return out;
}

Eigen::MatrixXd time_embedding(int steps, int model_dim) {
  check_model_dim(model_dim);
  if (steps < 1) throw ShapeError("need at least one timestep");
  const int half = model_dim / 2;
  Eigen::MatrixXd out(steps, model_dim);
  for (int t = 0; t < steps; ++t) {
    fill_sinusoids(out, t, static_cast<double>(t), 0, half);
    fill_sinusoids(out, t, static_cast<double>(t), half, half);
  }
  return out;
}

void AttentionParams::validate() const {
  if (num_heads < 1) throw ConfigError("num_heads must be positive");
  if (model_dim < 1 || model_dim % num_heads != 0)
    throw ConfigError("model_dim must be a positive multiple of num_heads");
  const auto check_set = [&](const std::vector<Eigen::MatrixXd>& mats,
                             const char* name) {
    if (static_cast<int>(mats.size()) != num_heads)
      throw ConfigError(std::string(name) + " must have one matrix per head");
    for (const Eigen::MatrixXd& m : mats) {
      if (m.rows() != head_dim() || m.cols() != model_dim)
        throw ShapeError(std::string(name) + " matrices must be head_dim x model_dim");
      if (!m.allFinite()) throw NumericError("attention parameters must be finite");
    }
  };
  check_set(Wq, "Wq");
  check_set(Wk, "Wk");
  check_set(Wv, "Wv");
  if (W_out.rows() != model_dim || W_out.cols() != model_dim)
    throw ShapeError("W_out must be model_dim x model_dim");
  if (!W_out.allFinite()) throw NumericError("attention parameters must be finite");
}

void TemporalParams::validate() const {
  attn.validate();
  if (mlp_w.rows() != attn.model_dim || mlp_w.cols() != attn.model_dim ||
      mlp_b.size() != attn.model_dim)
    throw ShapeError("temporal pre-transform must be model_dim x model_dim");
  if (!mlp_w.allFinite() || !mlp_b.allFinite())
    throw NumericError("temporal parameters must be finite");
}

TemporalOutput temporal_self_attention(const Eigen::MatrixXd& history,
                                       const Eigen::MatrixXd& time_embeddings,
                                       const TemporalParams& params) {
  params.validate();
  if (history.rows() < 1) throw ShapeError("history must have at least one step");
  if (history.cols() != params.attn.model_dim)
    throw ShapeError("history feature dimension does not match model_dim");
  if (time_embeddings.rows() != history.rows() ||
      time_embeddings.cols() != history.cols())
    throw ShapeError("time embeddings must match the history shape");
  if (!history.allFinite() || !time_embeddings.allFinite())
    throw NumericError("temporal inputs must be finite");

  const Eigen::MatrixXd pre =
      (((history + time_embeddings) * params.mlp_w.transpose()).rowwise() +
       params.mlp_b.transpose())
          .cwiseMax(0.0);
  const HeadReadout r = multi_head_readout(pre.row(pre.rows() - 1).transpose(),
                                           pre, pre, params.attn);
  return {r.out, r.weights};
}

const Eigen::MatrixXd& PairwiseWeights::at(int i, int j) const {
  return mats[static_cast<std::size_t>(i) * agent_count + j];
}

void PairwiseWeights::validate(int model_dim) const {
  if (mats.size() != static_cast<std::size_t>(agent_count) * agent_count)
    throw ConfigError("pairwise weights must cover every ordered agent pair");
  for (const Eigen::MatrixXd& m : mats) {
    if (m.rows() != model_dim || m.cols() != model_dim)
      throw ConfigError("pairwise weight matrices must be model_dim x model_dim");
    if (!m.allFinite()) throw NumericError("pairwise weights must be finite");
  }
}

void AgentFusionParams::validate() const {
  if (Wq.rows() == 0 || Wq.rows() != Wq.cols() || Wk.rows() != Wq.rows() ||
      Wk.cols() != Wq.cols() || Wv.rows() != Wq.rows() || Wv.cols() != Wq.cols())
    throw ShapeError("fusion projections must be square and equally sized");
  if (!Wq.allFinite() || !Wk.allFinite() || !Wv.allFinite())
    throw NumericError("fusion parameters must be finite");
}

AgentFusionOutput agent_cross_fusion(const Eigen::MatrixXd& agent_features,
                                     const PairwiseWeights& pairwise,
                                     const AgentFusionParams& params) {
  params.validate();
  const int n = static_cast<int>(agent_features.rows());
  if (n < 1) throw ShapeError("need at least one agent");
  const int dim = static_cast<int>(agent_features.cols());
  if (dim != params.Wq.rows())
    throw ShapeError("agent feature dimension does not match projections");
  if (pairwise.agent_count != n) throw ConfigError("pairwise weights sized for wrong agent count");
  pairwise.validate(dim);
  if (!agent_features.allFinite()) throw NumericError("agent features must be finite");

  const Eigen::MatrixXd Q = agent_features * params.Wq.transpose();
  const Eigen::MatrixXd K = agent_features * params.Wk.transpose();
  const Eigen::MatrixXd V = agent_features * params.Wv.transpose();

  AgentFusionOutput out;
  out.fused.resize(n, dim);
  out.weights.resize(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd logits(n);
    for (int j = 0; j < n; ++j)
      logits[j] = Q.row(i) * pairwise.at(i, j) * K.row(j).transpose();
    const Eigen::VectorXd w = softmax(logits);
    out.weights.row(i) = w.transpose();
    out.fused.row(i) = (V.transpose() * w).transpose();
  }
  return out;
}

RiskAttentionOutput risk_cross_attention(const FeatureGrid& features,
                                         std::span<const CellIndex> vehicle_cells,
                                         const AttentionParams& params,
                                         const Eigen::MatrixXd& pos_embed) {
  params.validate();
  features.validate();
  if (features.channels() != params.model_dim)
    throw ShapeError("feature channels must equal model_dim");
  const Eigen::MatrixXd& flat = features.values();
  if (pos_embed.rows() != flat.rows() || pos_embed.cols() != flat.cols())
    throw ShapeError("position embedding must match flattened features");
  if (!pos_embed.allFinite()) throw NumericError("position embedding must be finite");

  const Eigen::MatrixXd keys = flat + pos_embed;
  const int n = static_cast<int>(vehicle_cells.size());

  RiskAttentionOutput out;
  out.risk_features.resize(n, params.model_dim);
  out.risk_map.height = features.height();
  out.risk_map.width = features.width();
  out.risk_map.weights.resize(n, flat.rows());
  for (int v = 0; v < n; ++v) {
    const CellIndex c = vehicle_cells[v];
    if (c.row < 0 || c.row >= features.height())
      throw OutOfGrid('y', c.row, 0, features.height() - 1);
    if (c.col < 0 || c.col >= features.width())
      throw OutOfGrid('x', c.col, 0, features.width() - 1);
    const int k = c.row * features.width() + c.col;
    const Eigen::VectorXd query = (flat.row(k) + pos_embed.row(k)).transpose();
    const HeadReadout r = multi_head_readout(query, keys, flat, params);
    out.risk_features.row(v) = r.out.transpose();
    out.risk_map.weights.row(v) = r.weights.colwise().mean();
  }
  return out;
}

}  // namespace riskmm
