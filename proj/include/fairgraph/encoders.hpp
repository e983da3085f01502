#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/dense_net.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

enum class Family { kTransD, kRating, kDot };

Family parse_family(const std::string& name);
const char* to_string(Family family);

enum class Slot { kHead, kTail };

template <typename Real>
struct EmbedPass {
  std::vector<NodeId> nodes;
  typename BatchNorm<Real>::Pass norm;
  Slot slot = Slot::kHead;
  bool valid = false;
};

// Embedding-lookup encoder plus one score function and its edge loss.
//
// The base embedding of a node (the input to the sensitive-attribute filters)
// is its lookup row, batch-normalized per slot for the rating family. Scores
// are computed from slot embeddings that may already have been filtered.
template <typename Real>
class EdgeModel {
 public:
  EdgeModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng);
  virtual ~EdgeModel() = default;

  virtual Family family() const = 0;
  size_t dim() const { return dim_; }
  size_t num_nodes() const { return embeddings_.value.rows(); }
  size_t num_relations() const { return num_relations_; }

  virtual Matrix<Real> embed(std::span<const NodeId> nodes, Slot slot, Mode mode,
                             EmbedPass<Real>* pass);
  virtual void embed_backward(EmbedPass<Real>& pass, const Matrix<Real>& grad);

  // Score of each triple given its head/tail slot embeddings (row-aligned).
  virtual std::vector<Real> score(std::span<const Triple> triples, const Matrix<Real>& head,
                                  const Matrix<Real>& tail) const = 0;

  // Mean per-edge loss over `positives`. `negatives` holds ratio rows per
  // positive; head/tail hold positives' rows first, then negatives'. When the
  // gradient outputs are given they receive d(loss)/d(rows) and the model's
  // own parameter gradients are accumulated.
  virtual double edge_loss(std::span<const Triple> positives, std::span<const Triple> negatives,
                           const Matrix<Real>& head, const Matrix<Real>& tail,
                           Matrix<Real>* d_head, Matrix<Real>* d_tail);

  virtual bool uses_negatives() const { return true; }

  virtual ParamRefs<Real> parameters();
  virtual TensorRefs<Real> tensors();
  void zero_grad() { zero_grads(parameters()); }

  Parameter<Real>& embeddings() { return embeddings_; }
  const Parameter<Real>& embeddings() const { return embeddings_; }

 protected:
  // d(score)/d(rows) given upstream d(loss)/d(score); accumulates parameter grads.
  virtual void score_backward(std::span<const Triple> triples, const Matrix<Real>& head,
                              const Matrix<Real>& tail, std::span<const Real> d_score,
                              Matrix<Real>& d_head, Matrix<Real>& d_tail) = 0;

  size_t dim_;
  size_t num_relations_;
  Parameter<Real> embeddings_;
};

// z_u^T z_v with the margin loss.
template <typename Real>
class DotModel final : public EdgeModel<Real> {
 public:
  DotModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng)
      : EdgeModel<Real>(num_nodes, num_relations, dim, rng) {}

  Family family() const override { return Family::kDot; }
  std::vector<Real> score(std::span<const Triple> triples, const Matrix<Real>& head,
                          const Matrix<Real>& tail) const override;

 protected:
  void score_backward(std::span<const Triple> triples, const Matrix<Real>& head,
                      const Matrix<Real>& tail, std::span<const Real> d_score,
                      Matrix<Real>& d_head, Matrix<Real>& d_tail) override;
};

// TransD: each node and relation also carries a projection vector; a node in
// a triple is encoded as (r_p v_p^T + I) v and the score is
// -|| enc_head + r - enc_tail ||_2, trained with the margin loss.
template <typename Real>
class TransDModel final : public EdgeModel<Real> {
 public:
  TransDModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng);

  Family family() const override { return Family::kTransD; }
  std::vector<Real> score(std::span<const Triple> triples, const Matrix<Real>& head,
                          const Matrix<Real>& tail) const override;

  // (r_p v_p^T + I) v for `node` in the given role of `triple`, with v taken
  // from `base` (the node's possibly filtered embedding).
  std::vector<Real> encode(NodeId node, RelationId relation, std::span<const Real> base) const;

  ParamRefs<Real> parameters() override;
  TensorRefs<Real> tensors() override;

  Parameter<Real>& node_projections() { return node_proj_; }
  Parameter<Real>& relation_embeddings() { return relation_; }
  Parameter<Real>& relation_projections() { return relation_proj_; }

 protected:
  void score_backward(std::span<const Triple> triples, const Matrix<Real>& head,
                      const Matrix<Real>& tail, std::span<const Real> d_score,
                      Matrix<Real>& d_head, Matrix<Real>& d_tail) override;

 private:
  Parameter<Real> node_proj_;
  Parameter<Real> relation_;
  Parameter<Real> relation_proj_;
};

// Bilinear rating model: logits z_u^T Q_r z_v with Q_r = a_r1 P1 + a_r2 P2,
// p(r | u, v) = softmax over ratings, loss -log p(r). Lookup embeddings pass
// through a per-slot batch normalization.
template <typename Real>
class RatingModel final : public EdgeModel<Real> {
 public:
  RatingModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng);

  Family family() const override { return Family::kRating; }
  bool uses_negatives() const override { return false; }

  Matrix<Real> embed(std::span<const NodeId> nodes, Slot slot, Mode mode,
                     EmbedPass<Real>* pass) override;
  void embed_backward(EmbedPass<Real>& pass, const Matrix<Real>& grad) override;

  // log p(r | u, v) for each triple.
  std::vector<Real> score(std::span<const Triple> triples, const Matrix<Real>& head,
                          const Matrix<Real>& tail) const override;
  double edge_loss(std::span<const Triple> positives, std::span<const Triple> negatives,
                   const Matrix<Real>& head, const Matrix<Real>& tail, Matrix<Real>* d_head,
                   Matrix<Real>* d_tail) override;

  // Row-wise bilinear logits over all ratings.
  Matrix<Real> logits(const Matrix<Real>& head, const Matrix<Real>& tail) const;
  // Row-wise softmax of logits.
  Matrix<Real> distribution(const Matrix<Real>& head, const Matrix<Real>& tail) const;

  ParamRefs<Real> parameters() override;
  TensorRefs<Real> tensors() override;

  Parameter<Real>& basis(size_t i) { return i == 0 ? basis1_ : basis2_; }
  Parameter<Real>& coefficients() { return coeff_; }

 protected:
  void score_backward(std::span<const Triple>, const Matrix<Real>&, const Matrix<Real>&,
                      std::span<const Real>, Matrix<Real>&, Matrix<Real>&) override;

 private:
  BatchNorm<Real>& norm(Slot slot) { return slot == Slot::kHead ? head_norm_ : tail_norm_; }

  Parameter<Real> basis1_;
  Parameter<Real> basis2_;
  Parameter<Real> coeff_;  // |R| x 2
  BatchNorm<Real> head_norm_;
  BatchNorm<Real> tail_norm_;
};

template <typename Real>
std::unique_ptr<EdgeModel<Real>> make_model(Family family, size_t num_nodes, size_t num_relations,
                                            size_t dim, Rng& rng);

// ---------------------------------------------------------------------------
// Single-instance scoring helpers.

template <typename Real>
std::vector<Real> transd_encode(const TransDModel<Real>& model, NodeId node, const Triple& triple,
                                Slot role);

template <typename Real>
Real transd_score(const TransDModel<Real>& model, const Triple& triple);

// Softmax over ratings of the bilinear forms z_u^T Q_r z_v.
std::vector<double> rating_distribution(std::span<const double> head, std::span<const double> tail,
                                        const Matrix<double>& basis1, const Matrix<double>& basis2,
                                        const Matrix<double>& coefficients);

// -log p(rating).
double rating_loss(std::span<const double> distribution, size_t rating);

// sum_r p(r) * value(r).
double expected_rating(std::span<const double> distribution, std::span<const double> values);

double dot_score(std::span<const double> head, std::span<const double> tail);

}  // namespace fairgraph
