#include "fairgraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fairgraph/error.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

SyntheticGraph make_synthetic(const SyntheticConfig& config) {
  if (config.users < 2 || config.items < 2 || config.attributes == 0) {
    fail(ErrorCode::kConfig, "synthetic graph needs >= 2 users, >= 2 items and >= 1 attribute");
  }
  if (config.edges_per_user == 0 || config.edges_per_user > config.items) {
    fail(ErrorCode::kConfig, "edges per user must lie in [1, items]");
  }
  Rng rng(config.seed);
  const size_t n_u = config.users;
  const size_t n_i = config.items;
  const size_t k_count = config.attributes;
  const size_t l = config.latent_dim;

  GraphBuilder builder;
  prepare_builder(builder, TripleFormat::kBipartiteEdge);
  const NodeType user_type = *builder.peek().find_type("user");
  const NodeType item_type = *builder.peek().find_type("item");
  for (size_t u = 0; u < n_u; ++u) builder.intern_node(user_type, "u" + std::to_string(u));
  for (size_t i = 0; i < n_i; ++i) builder.intern_node(item_type, "i" + std::to_string(i));
  const RelationId rel = *builder.peek().find_relation("interacts");

  auto normals = [&](size_t rows, size_t cols) {
    std::vector<double> m(rows * cols);
    for (double& v : m) v = rng.normal();
    return m;
  };
  std::vector<int32_t> attrs(n_u * k_count);
  for (int32_t& a : attrs) a = rng.bernoulli(0.5) ? 1 : 0;
  const auto x = normals(n_u, l);
  const auto y = normals(n_i, l);
  const auto w = normals(n_i, k_count);
  const double latent_norm = l > 0 ? config.latent_scale / std::sqrt(static_cast<double>(l)) : 0.0;

  std::vector<double> key(n_i);
  std::vector<size_t> order(n_i);
  for (size_t u = 0; u < n_u; ++u) {
    for (size_t i = 0; i < n_i; ++i) {
      double logit = 0.0;
      for (size_t j = 0; j < l; ++j) logit += x[u * l + j] * y[i * l + j];
      logit *= latent_norm;
      for (size_t k = 0; k < k_count; ++k) {
        logit += config.signal * (2.0 * attrs[u * k_count + k] - 1.0) * w[i * k_count + k];
      }
      double g = rng.uniform();
      while (g <= 0.0) g = rng.uniform();
      key[i] = logit - std::log(-std::log(g));
    }
    std::iota(order.begin(), order.end(), size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.edges_per_user),
                      order.end(), [&](size_t a, size_t b) { return key[a] > key[b]; });
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.edges_per_user));
    for (size_t e = 0; e < config.edges_per_user; ++e) {
      builder.add_edge(Triple{static_cast<NodeId>(u), rel, static_cast<NodeId>(n_u + order[e])});
    }
  }

  SyntheticGraph out{std::move(builder).build(), {}};
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> categories;
  for (size_t k = 0; k < k_count; ++k) {
    names.push_back("attr" + std::to_string(k));
    categories.push_back({"0", "1"});
  }
  out.attributes = AttributeTable(out.graph.num_nodes(), user_type, names, categories);
  for (size_t u = 0; u < n_u; ++u) {
    out.attributes.set(static_cast<NodeId>(u), std::span<const int32_t>(attrs.data() + u * k_count, k_count));
  }
  return out;
}

}  // namespace fairgraph
