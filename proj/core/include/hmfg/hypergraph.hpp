#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmfg/kernels.hpp"

namespace hmfg {

/// Edge set of one k-uniform layer. Edges are stored sorted (each edge's
/// vertices ascending, edges lexicographic) in a flat array with stride k.
class HypergraphLayer {
 public:
  HypergraphLayer(int k, std::vector<std::vector<int>> edges);
  /// Takes an already canonical flat edge array (used by the sampler).
  static HypergraphLayer from_sorted(int k, std::vector<int> flat_edges);

  int cardinality() const { return k_; }
  std::size_t edge_count() const { return edges_.size() / static_cast<std::size_t>(k_); }
  std::span<const int> edge(std::size_t e) const {
    return {edges_.data() + e * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  /// Order-insensitive membership test.
  bool contains(std::span<const int> vertices) const;

 private:
  HypergraphLayer() = default;
  void canonicalize();

  int k_ = 2;
  std::vector<int> edges_;
};

bool operator==(const HypergraphLayer& a, const HypergraphLayer& b);

/// Vertices are 0-based. alphas[i] is the graphon coordinate vertex i was
/// sampled at.
class MultiLayerHypergraph {
 public:
  MultiLayerHypergraph(int vertex_count, std::vector<double> alphas,
                       std::vector<HypergraphLayer> layers);

  int vertex_count() const { return n_; }
  std::size_t depth() const { return layers_.size(); }
  const HypergraphLayer& layer(std::size_t d) const { return layers_.at(d); }
  const std::vector<HypergraphLayer>& layers() const { return layers_; }
  const std::vector<double>& alphas() const { return alphas_; }
  std::vector<int> cardinalities() const;

  bool operator==(const MultiLayerHypergraph&) const = default;

 private:
  int n_;
  std::vector<double> alphas_;
  std::vector<HypergraphLayer> layers_;
};

enum class AlphaMode { uniform, grid };

/// Samples every candidate k_d-subset independently with probability W_d at
/// its coordinates: vertex coordinates are shared across layers, every
/// non-singleton subset coordinate is a fresh uniform per candidate edge.
/// `uniform` draws i.i.d. vertex coordinates and sorts them ascending so
/// vertex order matches graphon position; `grid` uses (i + 0.5)/N.
MultiLayerHypergraph sample(const MultiLayerHypergraphon& hypergraphon, int vertex_count,
                            std::uint64_t seed, AlphaMode alpha_mode);

/// Ordered (k-1)-tuples m of distinct vertices with {m} + {vertex} an edge
/// of the layer; each edge contributes (k-1)! tuples.
std::vector<std::vector<int>> incident_tuples(const MultiLayerHypergraph& graph, int vertex,
                                              std::size_t layer);

/// Per layer and vertex, the ids of incident edges.
class Incidence {
 public:
  explicit Incidence(const MultiLayerHypergraph& graph);

  std::span<const std::uint32_t> edges(std::size_t layer, int vertex) const {
    return incident_[layer][static_cast<std::size_t>(vertex)];
  }

 private:
  std::vector<std::vector<std::vector<std::uint32_t>>> incident_;
};

/// {"N":..., "alphas":[...], "layers":[{"k":..., "edges":[[v,...],...]},...]}
std::string to_json(const MultiLayerHypergraph& graph);
MultiLayerHypergraph hypergraph_from_json(const std::string& text);

}  // namespace hmfg
