#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hmfg {

class MultiLayerHypergraph;

/// Non-empty proper subsets of {0, ..., k-1} as bitmasks, in the canonical
/// coordinate order used by every kernel: singletons first (vertex
/// coordinates), then pairs, then larger subsets, each size group in
/// lexicographic order of its sorted elements. There are 2^k - 2 of them.
const std::vector<std::uint32_t>& subset_coordinates(int k);

/// Relabels vertices by `perm` (a permutation of 0..k-1): entry S of the
/// result is coords[perm(S)].
std::vector<double> permute_coordinates(int k, std::span<const double> coords,
                                        std::span<const int> perm);

enum class MarginalMode { analytic, monte_carlo };

struct MarginalOptions {
  std::size_t samples = 4096;
  std::uint64_t seed = 0;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// One k-uniform hypergraphon layer: a symmetric kernel on [0,1]^(2^k - 2)
/// with values in [0,1]. `vertex_marginal` integrates out every
/// non-singleton coordinate.
class HypergraphonLayer {
 public:
  using Kernel = std::function<double(std::span<const double>)>;

  /// `analytic_marginal` maps the k vertex coordinates to the integral of
  /// the kernel over the remaining coordinates. Without it the layer uses
  /// Monte Carlo marginalization.
  HypergraphonLayer(int k, Kernel kernel, Kernel analytic_marginal = {},
                    MarginalOptions options = {}, std::string name = "custom");

  int cardinality() const { return k_; }
  std::size_t coordinate_count() const { return subset_coordinates(k_).size(); }
  const std::string& name() const { return name_; }
  MarginalMode marginal_mode() const { return mode_; }
  const MarginalOptions& marginal_options() const { return options_; }
  bool has_analytic_marginal() const { return static_cast<bool>(analytic_); }

  double operator()(std::span<const double> coords) const;

  double vertex_marginal(std::span<const double> vertex_coords) const;
  double analytic_marginal(std::span<const double> vertex_coords) const;
  /// Seeded per vertex-coordinate set (order-insensitive), so repeated and
  /// permuted calls return bitwise-identical estimates.
  MonteCarloEstimate monte_carlo_marginal(std::span<const double> vertex_coords) const;

  /// Copy of this layer using the requested marginalization route.
  HypergraphonLayer with_marginal_mode(MarginalMode mode,
                                       MarginalOptions options) const;

 private:
  int k_;
  Kernel kernel_;
  Kernel analytic_;
  MarginalOptions options_;
  MarginalMode mode_;
  std::string name_;
};

class MultiLayerHypergraphon {
 public:
  explicit MultiLayerHypergraphon(std::vector<HypergraphonLayer> layers);

  std::size_t depth() const { return layers_.size(); }
  const HypergraphonLayer& layer(std::size_t d) const { return layers_.at(d); }
  const std::vector<HypergraphonLayer>& layers() const { return layers_; }
  std::vector<int> cardinalities() const;
  int max_cardinality() const;

 private:
  std::vector<HypergraphonLayer> layers_;
};

using KernelParams = std::map<std::string, double>;

/// Built-in layers: unif2, rank2, flat2(p), ind3(p), unif3, inv_unif3,
/// block3(p), plus rank3 = 1 - a1*a2*a3 and flat3(p). Missing p defaults
/// to 0.5. Throws std::invalid_argument on unknown names, unknown
/// parameters or p outside [0,1].
HypergraphonLayer builtin(const std::string& name, const KernelParams& params = {},
                          MarginalOptions options = {});

std::vector<std::string> builtin_names();

/// k-dimensional tensor of shape M^k, stored row-major with the first
/// index most significant.
class VertexKernelGrid {
 public:
  VertexKernelGrid(int k, int resolution);
  VertexKernelGrid(int k, int resolution, std::vector<double> values);

  int cardinality() const { return k_; }
  int resolution() const { return m_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::size_t flat_index(std::span<const int> index) const;
  double at(std::span<const int> index) const { return values_[flat_index(index)]; }
  double at(std::initializer_list<int> index) const;
  void set(std::span<const int> index, double value) { values_[flat_index(index)] = value; }

  /// Writes every entry at every permutation of `index`.
  void set_symmetric(std::span<const int> index, double value);

 private:
  int k_;
  int m_;
  std::vector<double> values_;
};

/// Evaluates the vertex marginal at interval midpoints (i + 0.5)/M. Only
/// sorted index tuples are evaluated; the rest are copies, so the result is
/// exactly permutation-symmetric.
VertexKernelGrid discretize(const HypergraphonLayer& layer, int resolution,
                            int threads = 1);

/// {0,1} adjacency tensor of layer `layer_index` (0-based) with M = N.
VertexKernelGrid step_hypergraphon(const MultiLayerHypergraph& graph,
                                   std::size_t layer_index);

/// Mean over entries whose indices are pairwise distinct.
double layer_density(const VertexKernelGrid& grid);

/// CSV with columns i1,...,ik,value (0-based indices).
void write_grid_csv(std::ostream& out, const VertexKernelGrid& grid);

}  // namespace hmfg
