#include "fairgraph/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "fairgraph/error.hpp"
#include "fairgraph/kernels.hpp"
#include "fairgraph/losses.hpp"

namespace fairgraph {

Family parse_family(const std::string& name) {
  if (name == "transd") return Family::kTransD;
  if (name == "rating") return Family::kRating;
  if (name == "dot") return Family::kDot;
  fail(ErrorCode::kConfig, "unknown model family '" + name + "' (transd | rating | dot)");
}

const char* to_string(Family family) {
  switch (family) {
    case Family::kTransD: return "transd";
    case Family::kRating: return "rating";
    case Family::kDot: return "dot";
  }
  return "?";
}

namespace {

template <typename Real>
void fill_normal(Matrix<Real>& m, double stddev, Rng& rng) {
  for (Real& v : m.values()) v = static_cast<Real>(stddev * rng.normal());
}

template <typename Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename Real>
void check_rows(std::span<const Triple> triples, const Matrix<Real>& head, const Matrix<Real>& tail,
                size_t dim) {
  require_shape(head, triples.size(), dim, "head embeddings");
  require_shape(tail, triples.size(), dim, "tail embeddings");
}

}  // namespace

// ---------------------------------------------------------------------------
// EdgeModel

template <typename Real>
EdgeModel<Real>::EdgeModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng)
    : dim_(dim), num_relations_(num_relations), embeddings_("embeddings", num_nodes, dim) {
  if (dim == 0) fail(ErrorCode::kConfig, "embedding dimension must be positive");
  fill_normal(embeddings_.value, 1.0 / std::sqrt(static_cast<double>(dim)), rng);
}

template <typename Real>
Matrix<Real> EdgeModel<Real>::embed(std::span<const NodeId> nodes, Slot slot, Mode,
                                    EmbedPass<Real>* pass) {
  Matrix<Real> out(nodes.size(), dim_);
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] >= num_nodes()) fail(ErrorCode::kIndex, "node id out of range");
    const auto src = embeddings_.value.row(nodes[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  if (pass) {
    pass->nodes.assign(nodes.begin(), nodes.end());
    pass->slot = slot;
    pass->valid = true;
  }
  return out;
}

template <typename Real>
void EdgeModel<Real>::embed_backward(EmbedPass<Real>& pass, const Matrix<Real>& grad) {
  if (!pass.valid) fail(ErrorCode::kState, "embedding backward without a forward pass");
  require_shape(grad, pass.nodes.size(), dim_, "embedding gradient");
  for (size_t i = 0; i < pass.nodes.size(); ++i) {
    auto dst = embeddings_.grad.row(pass.nodes[i]);
    const auto src = grad.row(i);
    for (size_t j = 0; j < dim_; ++j) dst[j] += src[j];
  }
  pass.valid = false;
}

template <typename Real>
double EdgeModel<Real>::edge_loss(std::span<const Triple> positives,
                                  std::span<const Triple> negatives, const Matrix<Real>& head,
                                  const Matrix<Real>& tail, Matrix<Real>* d_head,
                                  Matrix<Real>* d_tail) {
  const size_t b = positives.size();
  if (b == 0) fail(ErrorCode::kUsage, "edge loss on an empty batch");
  if (negatives.empty() || negatives.size() % b != 0) {
    fail(ErrorCode::kUsage, "margin loss needs the same positive number of negatives per edge");
  }
  const size_t m = negatives.size() / b;
  std::vector<Triple> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  const std::vector<Real> s = score(all, head, tail);

  std::vector<Real> d_score(all.size(), Real(0));
  double total = 0.0;
  const double per_term = 1.0 / static_cast<double>(b * m);
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < m; ++j) {
      const size_t neg = b + i * m + j;
      const double hinge = 1.0 - static_cast<double>(s[i]) + static_cast<double>(s[neg]);
      if (hinge > 0.0) {
        total += hinge;
        d_score[i] -= static_cast<Real>(per_term);
        d_score[neg] += static_cast<Real>(per_term);
      }
    }
  }
  if (d_head && d_tail) {
    d_head->resize(all.size(), dim_);
    d_tail->resize(all.size(), dim_);
    score_backward(all, head, tail, d_score, *d_head, *d_tail);
  }
  return total * per_term;
}

template <typename Real>
ParamRefs<Real> EdgeModel<Real>::parameters() {
  return {&embeddings_};
}

template <typename Real>
TensorRefs<Real> EdgeModel<Real>::tensors() {
  return {{"embeddings", &embeddings_.value}};
}

// ---------------------------------------------------------------------------
// DotModel

template <typename Real>
std::vector<Real> DotModel<Real>::score(std::span<const Triple> triples, const Matrix<Real>& head,
                                        const Matrix<Real>& tail) const {
  check_rows(triples, head, tail, this->dim_);
  std::vector<Real> out(triples.size());
  kernels::row_dot(head, tail, std::span<Real>(out));
  return out;
}

template <typename Real>
void DotModel<Real>::score_backward(std::span<const Triple> triples, const Matrix<Real>& head,
                                    const Matrix<Real>& tail, std::span<const Real> d_score,
                                    Matrix<Real>& d_head, Matrix<Real>& d_tail) {
  for (size_t n = 0; n < triples.size(); ++n) {
    const Real g = d_score[n];
    for (size_t j = 0; j < this->dim_; ++j) {
      d_head(n, j) = g * tail(n, j);
      d_tail(n, j) = g * head(n, j);
    }
  }
}

// ---------------------------------------------------------------------------
// TransDModel

template <typename Real>
TransDModel<Real>::TransDModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng)
    : EdgeModel<Real>(num_nodes, num_relations, dim, rng),
      node_proj_("node_projections", num_nodes, dim),
      relation_("relations", num_relations, dim),
      relation_proj_("relation_projections", num_relations, dim) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  fill_normal(node_proj_.value, stddev, rng);
  fill_normal(relation_.value, stddev, rng);
  fill_normal(relation_proj_.value, stddev, rng);
}

template <typename Real>
std::vector<Real> TransDModel<Real>::encode(NodeId node, RelationId relation,
                                            std::span<const Real> base) const {
  const auto vp = node_proj_.value.row(node);
  const auto rp = relation_proj_.value.row(relation);
  const Real proj = dot<Real>(vp, base);
  std::vector<Real> out(base.begin(), base.end());
  for (size_t j = 0; j < out.size(); ++j) out[j] += rp[j] * proj;
  return out;
}

template <typename Real>
std::vector<Real> TransDModel<Real>::score(std::span<const Triple> triples,
                                           const Matrix<Real>& head,
                                           const Matrix<Real>& tail) const {
  check_rows(triples, head, tail, this->dim_);
  std::vector<Real> out(triples.size());
  const size_t d = this->dim_;
  for (size_t n = 0; n < triples.size(); ++n) {
    const Triple& t = triples[n];
    const auto rp = relation_proj_.value.row(t.relation);
    const auto rv = relation_.value.row(t.relation);
    const Real hp = dot<Real>(node_proj_.value.row(t.head), head.row(n));
    const Real tp = dot<Real>(node_proj_.value.row(t.tail), tail.row(n));
    Real sq = 0;
    for (size_t j = 0; j < d; ++j) {
      const Real delta = head(n, j) + rp[j] * hp + rv[j] - tail(n, j) - rp[j] * tp;
      sq += delta * delta;
    }
    out[n] = -std::sqrt(sq);
  }
  return out;
}

template <typename Real>
void TransDModel<Real>::score_backward(std::span<const Triple> triples, const Matrix<Real>& head,
                                       const Matrix<Real>& tail, std::span<const Real> d_score,
                                       Matrix<Real>& d_head, Matrix<Real>& d_tail) {
  const size_t d = this->dim_;
  std::vector<Real> delta(d);
  for (size_t n = 0; n < triples.size(); ++n) {
    const Triple& t = triples[n];
    const auto rp = relation_proj_.value.row(t.relation);
    const auto rv = relation_.value.row(t.relation);
    const auto hproj = node_proj_.value.row(t.head);
    const auto tproj = node_proj_.value.row(t.tail);
    const Real hp = dot<Real>(hproj, head.row(n));
    const Real tp = dot<Real>(tproj, tail.row(n));
    Real sq = 0;
    for (size_t j = 0; j < d; ++j) {
      delta[j] = head(n, j) + rp[j] * hp + rv[j] - tail(n, j) - rp[j] * tp;
      sq += delta[j] * delta[j];
    }
    const Real norm = std::sqrt(sq);
    auto dh = d_head.row(n);
    auto dt = d_tail.row(n);
    if (norm == Real(0) || d_score[n] == Real(0)) {
      std::fill(dh.begin(), dh.end(), Real(0));
      std::fill(dt.begin(), dt.end(), Real(0));
      continue;
    }
    // g = d(loss)/d(delta); d(delta)/d(enc_head) = I, d(delta)/d(enc_tail) = -I
    const Real scale = -d_score[n] / norm;
    Real rp_dot_g = 0;
    for (size_t j = 0; j < d; ++j) rp_dot_g += rp[j] * delta[j] * scale;

    auto g_rv = relation_.grad.row(t.relation);
    auto g_rp = relation_proj_.grad.row(t.relation);
    auto g_hproj = node_proj_.grad.row(t.head);
    auto g_tproj = node_proj_.grad.row(t.tail);
    for (size_t j = 0; j < d; ++j) {
      const Real g = delta[j] * scale;
      g_rv[j] += g;
      dh[j] = g + hproj[j] * rp_dot_g;
      dt[j] = -g - tproj[j] * rp_dot_g;
      g_hproj[j] += head(n, j) * rp_dot_g;
      g_tproj[j] -= tail(n, j) * rp_dot_g;
      g_rp[j] += (hp - tp) * g;
    }
  }
}

template <typename Real>
ParamRefs<Real> TransDModel<Real>::parameters() {
  return {&this->embeddings_, &node_proj_, &relation_, &relation_proj_};
}

template <typename Real>
TensorRefs<Real> TransDModel<Real>::tensors() {
  return {{"embeddings", &this->embeddings_.value},
          {"transd.node_projections", &node_proj_.value},
          {"transd.relations", &relation_.value},
          {"transd.relation_projections", &relation_proj_.value}};
}

// ---------------------------------------------------------------------------
// RatingModel

template <typename Real>
RatingModel<Real>::RatingModel(size_t num_nodes, size_t num_relations, size_t dim, Rng& rng)
    : EdgeModel<Real>(num_nodes, num_relations, dim, rng),
      basis1_("rating.basis1", dim, dim),
      basis2_("rating.basis2", dim, dim),
      coeff_("rating.coefficients", num_relations, 2),
      head_norm_(dim),
      tail_norm_(dim) {
  if (num_relations < 2) fail(ErrorCode::kConfig, "rating model needs at least 2 ratings");
  fill_normal(basis1_.value, 1.0 / static_cast<double>(dim), rng);
  fill_normal(basis2_.value, 1.0 / static_cast<double>(dim), rng);
  for (Real& v : coeff_.value.values()) v = static_cast<Real>(rng.uniform(-1.0, 1.0));
}

template <typename Real>
Matrix<Real> RatingModel<Real>::embed(std::span<const NodeId> nodes, Slot slot, Mode mode,
                                      EmbedPass<Real>* pass) {
  Matrix<Real> lookup = EdgeModel<Real>::embed(nodes, slot, mode, pass);
  return norm(slot).forward(lookup, mode, pass ? &pass->norm : nullptr);
}

template <typename Real>
void RatingModel<Real>::embed_backward(EmbedPass<Real>& pass, const Matrix<Real>& grad) {
  const Matrix<Real> through = norm(pass.slot).backward(pass.norm, grad);
  EdgeModel<Real>::embed_backward(pass, through);
}

template <typename Real>
Matrix<Real> RatingModel<Real>::logits(const Matrix<Real>& head, const Matrix<Real>& tail) const {
  const size_t d = this->dim_;
  const size_t r_count = this->num_relations_;
  if (head.cols() != d || tail.cols() != d || head.rows() != tail.rows()) {
    fail(ErrorCode::kShape, "rating logits: embedding shape mismatch");
  }
  Matrix<Real> out(head.rows(), r_count);
  std::vector<Real> p1t(d);
  std::vector<Real> p2t(d);
  for (size_t n = 0; n < head.rows(); ++n) {
    for (size_t i = 0; i < d; ++i) {
      Real a = 0;
      Real b = 0;
      for (size_t j = 0; j < d; ++j) {
        a += basis1_.value(i, j) * tail(n, j);
        b += basis2_.value(i, j) * tail(n, j);
      }
      p1t[i] = a;
      p2t[i] = b;
    }
    Real u1 = 0;
    Real u2 = 0;
    for (size_t i = 0; i < d; ++i) {
      u1 += head(n, i) * p1t[i];
      u2 += head(n, i) * p2t[i];
    }
    for (size_t r = 0; r < r_count; ++r) out(n, r) = coeff_.value(r, 0) * u1 + coeff_.value(r, 1) * u2;
  }
  return out;
}

template <typename Real>
Matrix<Real> RatingModel<Real>::distribution(const Matrix<Real>& head,
                                             const Matrix<Real>& tail) const {
  Matrix<Real> l = logits(head, tail);
  Matrix<Real> out(l.rows(), l.cols());
  for (size_t n = 0; n < l.rows(); ++n) softmax_row<Real>(l.row(n), out.row(n));
  return out;
}

template <typename Real>
std::vector<Real> RatingModel<Real>::score(std::span<const Triple> triples,
                                           const Matrix<Real>& head,
                                           const Matrix<Real>& tail) const {
  check_rows(triples, head, tail, this->dim_);
  const Matrix<Real> l = logits(head, tail);
  std::vector<Real> out(triples.size());
  for (size_t n = 0; n < triples.size(); ++n) {
    const auto row = l.row(n);
    const Real top = *std::max_element(row.begin(), row.end());
    Real sum = 0;
    for (Real v : row) sum += std::exp(v - top);
    out[n] = row[triples[n].relation] - top - std::log(sum);
  }
  return out;
}

template <typename Real>
double RatingModel<Real>::edge_loss(std::span<const Triple> positives, std::span<const Triple>,
                                    const Matrix<Real>& head, const Matrix<Real>& tail,
                                    Matrix<Real>* d_head, Matrix<Real>* d_tail) {
  const size_t b = positives.size();
  if (b == 0) fail(ErrorCode::kUsage, "edge loss on an empty batch");
  if (head.rows() < b || tail.rows() < b) fail(ErrorCode::kShape, "rating loss: too few rows");
  const size_t d = this->dim_;
  const size_t r_count = this->num_relations_;
  std::vector<int32_t> labels(b);
  for (size_t n = 0; n < b; ++n) {
    if (positives[n].relation >= r_count) fail(ErrorCode::kIndex, "unknown rating relation");
    labels[n] = static_cast<int32_t>(positives[n].relation);
  }
  Matrix<Real> h(b, d);
  Matrix<Real> t(b, d);
  std::copy(head.data(), head.data() + b * d, h.data());
  std::copy(tail.data(), tail.data() + b * d, t.data());
  const Matrix<Real> l = logits(h, t);
  Matrix<Real> d_logits;
  const double total = softmax_cross_entropy(l, labels, 1.0 / static_cast<double>(b),
                                             d_head ? &d_logits : nullptr);
  if (d_head && d_tail) {
    d_head->resize(head.rows(), d);
    d_tail->resize(tail.rows(), d);
    std::vector<Real> p1t(d), p2t(d), p1h(d), p2h(d);
    for (size_t n = 0; n < b; ++n) {
      Real du1 = 0;
      Real du2 = 0;
      for (size_t r = 0; r < r_count; ++r) {
        du1 += d_logits(n, r) * coeff_.value(r, 0);
        du2 += d_logits(n, r) * coeff_.value(r, 1);
      }
      for (size_t i = 0; i < d; ++i) {
        Real a = 0, bb = 0, c = 0, e = 0;
        for (size_t j = 0; j < d; ++j) {
          a += basis1_.value(i, j) * t(n, j);
          bb += basis2_.value(i, j) * t(n, j);
          c += basis1_.value(j, i) * h(n, j);
          e += basis2_.value(j, i) * h(n, j);
        }
        p1t[i] = a;
        p2t[i] = bb;
        p1h[i] = c;
        p2h[i] = e;
      }
      const Real u1 = dot<Real>(h.row(n), p1t);
      const Real u2 = dot<Real>(h.row(n), p2t);
      for (size_t r = 0; r < r_count; ++r) {
        coeff_.grad(r, 0) += d_logits(n, r) * u1;
        coeff_.grad(r, 1) += d_logits(n, r) * u2;
      }
      for (size_t i = 0; i < d; ++i) {
        for (size_t j = 0; j < d; ++j) {
          const Real outer = h(n, i) * t(n, j);
          basis1_.grad(i, j) += du1 * outer;
          basis2_.grad(i, j) += du2 * outer;
        }
        (*d_head)(n, i) = du1 * p1t[i] + du2 * p2t[i];
        (*d_tail)(n, i) = du1 * p1h[i] + du2 * p2h[i];
      }
    }
  }
  return total / static_cast<double>(b);
}

template <typename Real>
void RatingModel<Real>::score_backward(std::span<const Triple>, const Matrix<Real>&,
                                       const Matrix<Real>&, std::span<const Real>, Matrix<Real>&,
                                       Matrix<Real>&) {
  fail(ErrorCode::kUsage, "rating model is trained through its log-likelihood loss");
}

template <typename Real>
ParamRefs<Real> RatingModel<Real>::parameters() {
  ParamRefs<Real> out = {&this->embeddings_, &basis1_, &basis2_, &coeff_};
  for (auto* p : head_norm_.parameters()) out.push_back(p);
  for (auto* p : tail_norm_.parameters()) out.push_back(p);
  return out;
}

template <typename Real>
TensorRefs<Real> RatingModel<Real>::tensors() {
  TensorRefs<Real> out = {{"embeddings", &this->embeddings_.value},
                          {"rating.basis1", &basis1_.value},
                          {"rating.basis2", &basis2_.value},
                          {"rating.coefficients", &coeff_.value}};
  for (auto& t : head_norm_.tensors("rating.head_norm.")) out.push_back(t);
  for (auto& t : tail_norm_.tensors("rating.tail_norm.")) out.push_back(t);
  return out;
}

// ---------------------------------------------------------------------------

template <typename Real>
std::unique_ptr<EdgeModel<Real>> make_model(Family family, size_t num_nodes, size_t num_relations,
                                            size_t dim, Rng& rng) {
  switch (family) {
    case Family::kTransD:
      return std::make_unique<TransDModel<Real>>(num_nodes, num_relations, dim, rng);
    case Family::kRating:
      return std::make_unique<RatingModel<Real>>(num_nodes, num_relations, dim, rng);
    case Family::kDot:
      return std::make_unique<DotModel<Real>>(num_nodes, num_relations, dim, rng);
  }
  fail(ErrorCode::kConfig, "unknown model family");
}

template <typename Real>
std::vector<Real> transd_encode(const TransDModel<Real>& model, NodeId node, const Triple& triple,
                                Slot role) {
  const NodeId expected = role == Slot::kHead ? triple.head : triple.tail;
  if (node != expected) fail(ErrorCode::kUsage, "transd_encode: node does not fill that role");
  return model.encode(node, triple.relation, model.embeddings().value.row(node));
}

template <typename Real>
Real transd_score(const TransDModel<Real>& model, const Triple& triple) {
  Matrix<Real> head(1, model.dim());
  Matrix<Real> tail(1, model.dim());
  const auto& table = model.embeddings().value;
  std::copy(table.row(triple.head).begin(), table.row(triple.head).end(), head.row(0).begin());
  std::copy(table.row(triple.tail).begin(), table.row(triple.tail).end(), tail.row(0).begin());
  const Triple triples[1] = {triple};
  return model.score(triples, head, tail)[0];
}

std::vector<double> rating_distribution(std::span<const double> head, std::span<const double> tail,
                                        const Matrix<double>& basis1, const Matrix<double>& basis2,
                                        const Matrix<double>& coefficients) {
  const size_t d = head.size();
  if (tail.size() != d) fail(ErrorCode::kShape, "rating distribution: dimension mismatch");
  require_shape(basis1, d, d, "basis1");
  require_shape(basis2, d, d, "basis2");
  if (coefficients.rows() < 2 || coefficients.cols() != 2) {
    fail(ErrorCode::kShape, "rating coefficients must be |R| x 2 with |R| >= 2");
  }
  double u1 = 0.0;
  double u2 = 0.0;
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d; ++j) {
      u1 += head[i] * basis1(i, j) * tail[j];
      u2 += head[i] * basis2(i, j) * tail[j];
    }
  }
  std::vector<double> logits(coefficients.rows());
  for (size_t r = 0; r < logits.size(); ++r) logits[r] = coefficients(r, 0) * u1 + coefficients(r, 1) * u2;
  std::vector<double> out(logits.size());
  softmax_row<double>(logits, out);
  return out;
}

double rating_loss(std::span<const double> distribution, size_t rating) {
  if (rating >= distribution.size()) {
    fail(ErrorCode::kIndex, "rating index " + std::to_string(rating) + " out of range");
  }
  return -std::log(distribution[rating]);
}

double expected_rating(std::span<const double> distribution, std::span<const double> values) {
  if (distribution.size() != values.size()) fail(ErrorCode::kShape, "expected rating: size mismatch");
  double total = 0.0;
  for (size_t r = 0; r < values.size(); ++r) total += distribution[r] * values[r];
  return total;
}

double dot_score(std::span<const double> head, std::span<const double> tail) {
  if (head.size() != tail.size()) fail(ErrorCode::kShape, "dot score: dimension mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < head.size(); ++i) acc += head[i] * tail[i];
  return acc;
}

#define FAIRGRAPH_INSTANTIATE(Real)                                                              \
  template class EdgeModel<Real>;                                                                \
  template class DotModel<Real>;                                                                 \
  template class TransDModel<Real>;                                                              \
  template class RatingModel<Real>;                                                              \
  template std::unique_ptr<EdgeModel<Real>> make_model<Real>(Family, size_t, size_t, size_t, Rng&); \
  template std::vector<Real> transd_encode(const TransDModel<Real>&, NodeId, const Triple&, Slot); \
  template Real transd_score(const TransDModel<Real>&, const Triple&);

FAIRGRAPH_INSTANTIATE(float)
FAIRGRAPH_INSTANTIATE(double)
#undef FAIRGRAPH_INSTANTIATE

}  // namespace fairgraph
