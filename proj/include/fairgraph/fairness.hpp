#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/attributes.hpp"
#include "fairgraph/dense_net.hpp"
#include "fairgraph/encoders.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

// Attribute subset S as a bit set; bit k selects attribute k (0-based).
using Mask = uint64_t;

inline constexpr size_t kMaxAttributes = 64;

inline bool mask_has(Mask mask, size_t k) { return (mask >> k) & 1U; }
inline Mask full_mask(size_t k_count) {
  return k_count >= 64 ? ~Mask{0} : (Mask{1} << k_count) - 1;
}
std::vector<size_t> mask_members(Mask mask);
std::string mask_to_string(Mask mask);

// K independent Bernoulli(p) inclusions.
struct MaskDistribution {
  size_t num_attributes = 1;
  double p = 0.5;

  Mask sample(Rng& rng) const;
};

// Picks round(fraction * 2^K) (at least one when fraction > 0) distinct
// non-empty masks uniformly at random.
std::vector<Mask> choose_heldout_masks(size_t num_attributes, double fraction, uint64_t seed);

struct FilterArchitecture {
  size_t layers = 2;
  size_t hidden = 0;  // 0: twice the embedding dimension
  double leaky_slope = 0.01;
};

struct DiscriminatorArchitecture {
  size_t layers = 4;
  size_t hidden = 0;  // 0: twice the embedding dimension
  double dropout = 0.0;
  double leaky_slope = 0.01;
};

DenseNetConfig filter_net_config(size_t dim, const FilterArchitecture& arch);
DenseNetConfig discriminator_net_config(size_t dim, size_t classes,
                                        const DiscriminatorArchitecture& arch);

// One filter f_k : R^d -> R^d per sensitive attribute.
template <typename Real>
class FilterBank {
 public:
  FilterBank(size_t num_attributes, size_t dim, const FilterArchitecture& arch, Rng& rng);
  FilterBank(std::vector<DenseNet<Real>> filters);

  size_t size() const { return filters_.size(); }
  size_t dim() const { return filters_.front().config().input_width(); }
  DenseNet<Real>& filter(size_t k) { return filters_.at(k); }
  const DenseNet<Real>& filter(size_t k) const { return filters_.at(k); }

  ParamRefs<Real> parameters(size_t k) { return filters_.at(k).parameters(); }
  ParamRefs<Real> parameters();
  TensorRefs<Real> tensors();

 private:
  std::vector<DenseNet<Real>> filters_;
};

// One classifier D_k : R^d -> logits over A_k per sensitive attribute.
template <typename Real>
class DiscriminatorBank {
 public:
  DiscriminatorBank(size_t dim, std::span<const size_t> cardinalities,
                    const DiscriminatorArchitecture& arch, Rng& rng);

  size_t size() const { return nets_.size(); }
  DenseNet<Real>& discriminator(size_t k) { return nets_.at(k); }
  const DenseNet<Real>& discriminator(size_t k) const { return nets_.at(k); }

  ParamRefs<Real> parameters(size_t k) { return nets_.at(k).parameters(); }
  ParamRefs<Real> parameters();
  TensorRefs<Real> tensors();

 private:
  std::vector<DenseNet<Real>> nets_;
};

template <typename Real>
struct ComposePass {
  Mask mask = 0;
  std::vector<typename DenseNet<Real>::Pass> passes;
  bool valid = false;
};

// Mean of f_k(base) over k in S; S = {} returns `base` unchanged.
template <typename Real>
Matrix<Real> compose(const Matrix<Real>& base, FilterBank<Real>& filters, Mask mask, Mode mode,
                     Rng* rng, ComposePass<Real>* pass = nullptr);

// Accumulates filter gradients; returns d/d(base).
template <typename Real>
Matrix<Real> compose_backward(FilterBank<Real>& filters, ComposePass<Real>& pass,
                              const Matrix<Real>& upstream);

struct AdversaryOutcome {
  double value = 0.0;  // scale * sum_rows sum_{k in S} log D_k(z, a^k)
  std::vector<size_t> correct;  // per attribute, argmax hits
  std::vector<size_t> seen;     // per attribute, rows scored
};

// Sum over rows of sum_{k in S} log softmax(D_k(z))[true class], times
// `scale`. `labels` is rows x K. With `d_z`, the gradient of `weight * value`
// w.r.t. z is written there and weight-scaled discriminator gradients are
// accumulated.
template <typename Real>
AdversaryOutcome adversarial_term(const Matrix<Real>& z, const Matrix<int32_t>& labels,
                                  DiscriminatorBank<Real>& discriminators, Mask mask, Mode mode,
                                  Rng* rng, double scale, double weight = 1.0,
                                  Matrix<Real>* d_z = nullptr);

struct CombinedLossValue {
  double edge = 0.0;
  double adversarial = 0.0;  // mean per edge of sum_k log D_k(true class)
  double total = 0.0;        // edge + lambda * adversarial
  AdversaryOutcome adversary;
};

// Adversarially regularized per-edge loss, averaged over the batch. Nodes of
// the attribute table's sensitive type are replaced by their composed
// embeddings in every slot; the adversarial term scores the sensitive nodes
// of the positive edges only. With `backward`, gradients are accumulated into
// the model and the filters (and, as a by-product, the discriminators).
template <typename Real>
CombinedLossValue combined_loss(EdgeModel<Real>& model, FilterBank<Real>* filters,
                                DiscriminatorBank<Real>* discriminators,
                                const AttributeTable* attributes,
                                std::span<const Triple> positives,
                                std::span<const Triple> negatives, Mask mask, double lambda,
                                Mode mode, Rng* rng, bool backward);

// Slot embeddings for `nodes`, with sensitive-type nodes composed under
// `mask` (no filters: plain base embeddings).
template <typename Real>
Matrix<Real> slot_embeddings(EdgeModel<Real>& model, FilterBank<Real>* filters,
                             const AttributeTable* attributes, std::span<const NodeId> nodes,
                             Slot slot, Mask mask, Mode mode);

Matrix<int32_t> label_matrix(const AttributeTable& attributes, std::span<const NodeId> nodes);

}  // namespace fairgraph
