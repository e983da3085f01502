#include "fairgraph/fairness.hpp"

#include <algorithm>
#include <cmath>

#include "fairgraph/error.hpp"
#include "fairgraph/losses.hpp"

namespace fairgraph {

std::vector<size_t> mask_members(Mask mask) {
  std::vector<size_t> out;
  for (size_t k = 0; k < kMaxAttributes; ++k) {
    if (mask_has(mask, k)) out.push_back(k);
  }
  return out;
}

std::string mask_to_string(Mask mask) {
  std::string out = "{";
  bool first = true;
  for (size_t k : mask_members(mask)) {
    if (!first) out += ",";
    out += std::to_string(k);
    first = false;
  }
  return out + "}";
}

Mask MaskDistribution::sample(Rng& rng) const {
  if (num_attributes == 0 || num_attributes > kMaxAttributes) {
    fail(ErrorCode::kConfig, "mask distribution needs 1..64 attributes");
  }
  Mask mask = 0;
  for (size_t k = 0; k < num_attributes; ++k) {
    if (rng.bernoulli(p)) mask |= Mask{1} << k;
  }
  return mask;
}

std::vector<Mask> choose_heldout_masks(size_t num_attributes, double fraction, uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) fail(ErrorCode::kConfig, "held-out fraction must lie in [0, 1)");
  if (fraction == 0.0) return {};
  if (num_attributes == 0 || num_attributes > 20) {
    fail(ErrorCode::kConfig, "held-out combinations are enumerated for 1..20 attributes");
  }
  const Mask space = Mask{1} << num_attributes;
  const auto count = std::max<size_t>(
      1, static_cast<size_t>(std::llround(fraction * static_cast<double>(space))));
  std::vector<Mask> candidates;
  for (Mask m = 1; m < space; ++m) candidates.push_back(m);
  if (count >= candidates.size()) fail(ErrorCode::kConfig, "held-out fraction leaves no mask to train on");
  Rng rng(seed);
  rng.shuffle(candidates);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

DenseNetConfig filter_net_config(size_t dim, const FilterArchitecture& arch) {
  if (arch.layers == 0) fail(ErrorCode::kConfig, "filter needs at least one layer");
  auto config = DenseNetConfig::mlp(dim, arch.hidden ? arch.hidden : 2 * dim, dim, arch.layers);
  config.leaky_slope = arch.leaky_slope;
  return config;
}

DenseNetConfig discriminator_net_config(size_t dim, size_t classes,
                                        const DiscriminatorArchitecture& arch) {
  if (arch.layers == 0) fail(ErrorCode::kConfig, "discriminator needs at least one layer");
  auto config = DenseNetConfig::mlp(dim, arch.hidden ? arch.hidden : 2 * dim, classes, arch.layers);
  config.leaky_slope = arch.leaky_slope;
  config.dropout = arch.dropout;
  return config;
}

// ---------------------------------------------------------------------------

template <typename Real>
FilterBank<Real>::FilterBank(size_t num_attributes, size_t dim, const FilterArchitecture& arch,
                             Rng& rng) {
  if (num_attributes == 0 || num_attributes > kMaxAttributes) {
    fail(ErrorCode::kConfig, "filter bank needs 1..64 attributes");
  }
  const auto config = filter_net_config(dim, arch);
  for (size_t k = 0; k < num_attributes; ++k) filters_.emplace_back(config, rng);
}

template <typename Real>
FilterBank<Real>::FilterBank(std::vector<DenseNet<Real>> filters) : filters_(std::move(filters)) {
  if (filters_.empty()) fail(ErrorCode::kConfig, "filter bank needs at least one filter");
  for (const auto& f : filters_) {
    if (f.config().input_width() != f.config().output_width() ||
        f.config().input_width() != filters_.front().config().input_width()) {
      fail(ErrorCode::kShape, "filters must map R^d to R^d with a shared d");
    }
  }
}

template <typename Real>
ParamRefs<Real> FilterBank<Real>::parameters() {
  ParamRefs<Real> out;
  for (auto& f : filters_) {
    for (auto* p : f.parameters()) out.push_back(p);
  }
  return out;
}

template <typename Real>
TensorRefs<Real> FilterBank<Real>::tensors() {
  TensorRefs<Real> out;
  for (size_t k = 0; k < filters_.size(); ++k) {
    for (auto& t : filters_[k].tensors("filter" + std::to_string(k) + ".")) out.push_back(t);
  }
  return out;
}

template <typename Real>
DiscriminatorBank<Real>::DiscriminatorBank(size_t dim, std::span<const size_t> cardinalities,
                                           const DiscriminatorArchitecture& arch, Rng& rng) {
  if (cardinalities.empty()) fail(ErrorCode::kConfig, "discriminator bank needs attributes");
  for (size_t classes : cardinalities) {
    if (classes < 2) fail(ErrorCode::kConfig, "each attribute needs at least 2 classes");
    nets_.emplace_back(discriminator_net_config(dim, classes, arch), rng);
  }
}

template <typename Real>
ParamRefs<Real> DiscriminatorBank<Real>::parameters() {
  ParamRefs<Real> out;
  for (auto& n : nets_) {
    for (auto* p : n.parameters()) out.push_back(p);
  }
  return out;
}

template <typename Real>
TensorRefs<Real> DiscriminatorBank<Real>::tensors() {
  TensorRefs<Real> out;
  for (size_t k = 0; k < nets_.size(); ++k) {
    for (auto& t : nets_[k].tensors("discriminator" + std::to_string(k) + ".")) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------

template <typename Real>
Matrix<Real> compose(const Matrix<Real>& base, FilterBank<Real>& filters, Mask mask, Mode mode,
                     Rng* rng, ComposePass<Real>* pass) {
  const auto members = mask_members(mask);
  for (size_t k : members) {
    if (k >= filters.size()) fail(ErrorCode::kIndex, "mask selects a filter that does not exist");
  }
  if (pass) {
    pass->mask = mask;
    pass->passes.assign(members.size(), {});
    pass->valid = true;
  }
  if (members.empty()) return base;

  Matrix<Real> out;
  for (size_t i = 0; i < members.size(); ++i) {
    Matrix<Real> y = filters.filter(members[i]).forward(base, mode, rng, pass ? &pass->passes[i] : nullptr);
    if (i == 0) {
      out = std::move(y);
    } else {
      for (size_t j = 0; j < out.size(); ++j) out.data()[j] += y.data()[j];
    }
  }
  if (members.size() > 1) {
    const Real inv = Real(1) / static_cast<Real>(members.size());
    for (Real& v : out.values()) v *= inv;
  }
  return out;
}

template <typename Real>
Matrix<Real> compose_backward(FilterBank<Real>& filters, ComposePass<Real>& pass,
                              const Matrix<Real>& upstream) {
  if (!pass.valid) fail(ErrorCode::kState, "compose backward without a forward pass");
  pass.valid = false;
  const auto members = mask_members(pass.mask);
  if (members.empty()) return upstream;
  Matrix<Real> scaled = upstream;
  if (members.size() > 1) {
    const Real inv = Real(1) / static_cast<Real>(members.size());
    for (Real& v : scaled.values()) v *= inv;
  }
  Matrix<Real> d_base;
  for (size_t i = 0; i < members.size(); ++i) {
    Matrix<Real> g = filters.filter(members[i]).backward(pass.passes[i], scaled);
    if (i == 0) {
      d_base = std::move(g);
    } else {
      for (size_t j = 0; j < d_base.size(); ++j) d_base.data()[j] += g.data()[j];
    }
  }
  return d_base;
}

template <typename Real>
AdversaryOutcome adversarial_term(const Matrix<Real>& z, const Matrix<int32_t>& labels,
                                  DiscriminatorBank<Real>& discriminators, Mask mask, Mode mode,
                                  Rng* rng, double scale, double weight, Matrix<Real>* d_z) {
  AdversaryOutcome outcome;
  outcome.correct.assign(discriminators.size(), 0);
  outcome.seen.assign(discriminators.size(), 0);
  if (labels.rows() != z.rows() || labels.cols() != discriminators.size()) {
    fail(ErrorCode::kShape, "adversarial term: labels must be rows x K");
  }
  if (d_z) d_z->resize(z.rows(), z.cols());
  for (size_t k : mask_members(mask)) {
    if (k >= discriminators.size()) fail(ErrorCode::kIndex, "mask selects a missing discriminator");
    auto& net = discriminators.discriminator(k);
    std::vector<int32_t> target(z.rows());
    for (size_t i = 0; i < z.rows(); ++i) target[i] = labels(i, k);
    typename DenseNet<Real>::Pass pass;
    const Matrix<Real> logits = net.forward(z, mode, rng, d_z ? &pass : nullptr);
    Matrix<Real> d_logits;
    Matrix<Real> probs;
    // cross entropy is -log p; the term is +log p
    const double ce = softmax_cross_entropy(logits, target, -scale * weight,
                                            d_z ? &d_logits : nullptr, &probs);
    outcome.value -= scale * ce;
    for (size_t i = 0; i < z.rows(); ++i) {
      const auto row = probs.row(i);
      const auto best = static_cast<int32_t>(std::max_element(row.begin(), row.end()) - row.begin());
      outcome.correct[k] += best == target[i];
    }
    outcome.seen[k] += z.rows();
    if (d_z) {
      const Matrix<Real> g = net.backward(pass, d_logits);
      for (size_t j = 0; j < g.size(); ++j) d_z->data()[j] += g.data()[j];
    }
  }
  return outcome;
}

Matrix<int32_t> label_matrix(const AttributeTable& attributes, std::span<const NodeId> nodes) {
  Matrix<int32_t> out(nodes.size(), attributes.num_attributes());
  for (size_t i = 0; i < nodes.size(); ++i) {
    const auto values = attributes.values(nodes[i]);
    std::copy(values.begin(), values.end(), out.row(i).begin());
  }
  return out;
}

namespace {

template <typename Real>
Matrix<Real> gather(const Matrix<Real>& m, std::span<const size_t> rows) {
  Matrix<Real> out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

template <typename Real>
void scatter(const Matrix<Real>& src, std::span<const size_t> rows, Matrix<Real>& dst) {
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(src.row(i).begin(), src.row(i).end(), dst.row(rows[i]).begin());
  }
}

std::vector<size_t> rows_to_filter(const AttributeTable* attributes, std::span<const NodeId> nodes) {
  std::vector<size_t> rows;
  if (!attributes) return rows;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (attributes->has(nodes[i])) rows.push_back(i);
  }
  return rows;
}

// Base embeddings of one slot with the selected rows composed.
template <typename Real>
struct FilteredSlot {
  Matrix<Real> values;
  EmbedPass<Real> embed_pass;
  ComposePass<Real> compose_pass;
  std::vector<size_t> rows;
};

template <typename Real>
FilteredSlot<Real> filtered_slot(EdgeModel<Real>& model, FilterBank<Real>* filters,
                                 const AttributeTable* attributes, std::span<const NodeId> nodes,
                                 Slot slot, Mask mask, Mode mode, Rng* rng, bool record) {
  FilteredSlot<Real> out;
  out.values = model.embed(nodes, slot, mode, record ? &out.embed_pass : nullptr);
  if (filters && mask != 0) {
    out.rows = rows_to_filter(attributes, nodes);
    if (!out.rows.empty()) {
      const Matrix<Real> base = gather(out.values, out.rows);
      const Matrix<Real> composed =
          compose(base, *filters, mask, mode, rng, record ? &out.compose_pass : nullptr);
      scatter(composed, out.rows, out.values);
    }
  }
  return out;
}

template <typename Real>
void filtered_slot_backward(EdgeModel<Real>& model, FilterBank<Real>* filters,
                            FilteredSlot<Real>& slot, const Matrix<Real>& grad) {
  Matrix<Real> d_base = grad;
  if (!slot.rows.empty()) {
    const Matrix<Real> d_composed = gather(grad, slot.rows);
    const Matrix<Real> d_rows = compose_backward(*filters, slot.compose_pass, d_composed);
    scatter(d_rows, slot.rows, d_base);
  }
  model.embed_backward(slot.embed_pass, d_base);
}

}  // namespace

template <typename Real>
Matrix<Real> slot_embeddings(EdgeModel<Real>& model, FilterBank<Real>* filters,
                             const AttributeTable* attributes, std::span<const NodeId> nodes,
                             Slot slot, Mask mask, Mode mode) {
  return filtered_slot(model, filters, attributes, nodes, slot, mask, mode, nullptr, false).values;
}

template <typename Real>
CombinedLossValue combined_loss(EdgeModel<Real>& model, FilterBank<Real>* filters,
                                DiscriminatorBank<Real>* discriminators,
                                const AttributeTable* attributes,
                                std::span<const Triple> positives,
                                std::span<const Triple> negatives, Mask mask, double lambda,
                                Mode mode, Rng* rng, bool backward) {
  const size_t b = positives.size();
  if (b == 0) fail(ErrorCode::kUsage, "combined loss on an empty batch");
  if (lambda < 0.0) fail(ErrorCode::kConfig, "lambda must be non-negative");

  std::vector<Triple> all(positives.begin(), positives.end());
  if (model.uses_negatives()) all.insert(all.end(), negatives.begin(), negatives.end());
  std::vector<NodeId> heads(all.size());
  std::vector<NodeId> tails(all.size());
  for (size_t i = 0; i < all.size(); ++i) {
    heads[i] = all[i].head;
    tails[i] = all[i].tail;
  }

  auto head = filtered_slot(model, filters, attributes, heads, Slot::kHead, mask, mode, rng, backward);
  auto tail = filtered_slot(model, filters, attributes, tails, Slot::kTail, mask, mode, rng, backward);

  CombinedLossValue result;
  Matrix<Real> d_head;
  Matrix<Real> d_tail;
  const std::span<const Triple> negs =
      model.uses_negatives() ? negatives : std::span<const Triple>{};
  result.edge = model.edge_loss(positives, negs, head.values, tail.values,
                                backward ? &d_head : nullptr, backward ? &d_tail : nullptr);

  if (discriminators && attributes && mask != 0) {
    // Sensitive nodes of the positive edges, head slot first.
    std::vector<NodeId> nodes;
    std::vector<std::pair<Slot, size_t>> origin;
    for (size_t i = 0; i < b; ++i) {
      if (attributes->has(positives[i].head)) {
        nodes.push_back(positives[i].head);
        origin.emplace_back(Slot::kHead, i);
      }
      if (attributes->has(positives[i].tail)) {
        nodes.push_back(positives[i].tail);
        origin.emplace_back(Slot::kTail, i);
      }
    }
    if (!nodes.empty()) {
      Matrix<Real> z(nodes.size(), model.dim());
      for (size_t i = 0; i < nodes.size(); ++i) {
        const auto& src = origin[i].first == Slot::kHead ? head.values : tail.values;
        std::copy(src.row(origin[i].second).begin(), src.row(origin[i].second).end(), z.row(i).begin());
      }
      const Matrix<int32_t> labels = label_matrix(*attributes, nodes);
      Matrix<Real> d_z;
      result.adversary = adversarial_term(z, labels, *discriminators, mask, mode, rng,
                                          1.0 / static_cast<double>(b), lambda,
                                          backward ? &d_z : nullptr);
      result.adversarial = result.adversary.value;
      if (backward) {
        for (size_t i = 0; i < nodes.size(); ++i) {
          auto dst = origin[i].first == Slot::kHead ? d_head.row(origin[i].second)
                                                    : d_tail.row(origin[i].second);
          const auto src = d_z.row(i);
          for (size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      }
    }
  }
  result.total = result.edge + lambda * result.adversarial;

  if (backward) {
    filtered_slot_backward(model, filters, head, d_head);
    filtered_slot_backward(model, filters, tail, d_tail);
  }
  return result;
}

#define FAIRGRAPH_INSTANTIATE(Real)                                                               \
  template class FilterBank<Real>;                                                                \
  template class DiscriminatorBank<Real>;                                                         \
  template Matrix<Real> compose(const Matrix<Real>&, FilterBank<Real>&, Mask, Mode, Rng*,         \
                                ComposePass<Real>*);                                              \
  template Matrix<Real> compose_backward(FilterBank<Real>&, ComposePass<Real>&,                   \
                                         const Matrix<Real>&);                                    \
  template AdversaryOutcome adversarial_term(const Matrix<Real>&, const Matrix<int32_t>&,         \
                                             DiscriminatorBank<Real>&, Mask, Mode, Rng*, double,  \
                                             double, Matrix<Real>*);                              \
  template CombinedLossValue combined_loss(EdgeModel<Real>&, FilterBank<Real>*,                   \
                                           DiscriminatorBank<Real>*, const AttributeTable*,       \
                                           std::span<const Triple>, std::span<const Triple>,      \
                                           Mask, double, Mode, Rng*, bool);                       \
  template Matrix<Real> slot_embeddings(EdgeModel<Real>&, FilterBank<Real>*,                      \
                                        const AttributeTable*, std::span<const NodeId>, Slot,     \
                                        Mask, Mode);

FAIRGRAPH_INSTANTIATE(float)
FAIRGRAPH_INSTANTIATE(double)
#undef FAIRGRAPH_INSTANTIATE

}  // namespace fairgraph
