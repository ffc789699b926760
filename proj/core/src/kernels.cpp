#include "hmfg/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "hmfg/csv.hpp"
#include "hmfg/hypergraph.hpp"
#include "hmfg/parallel.hpp"
#include "hmfg/random.hpp"

namespace hmfg {

namespace {

constexpr int kMaxCardinality = 16;

std::vector<std::uint32_t> build_subsets(int k) {
  std::vector<std::uint32_t> subsets;
  const std::uint32_t full = (1u << k) - 1u;
  for (std::uint32_t mask = 1; mask < full; ++mask) subsets.push_back(mask);
  auto sorted_elements = [](std::uint32_t mask) {
    std::vector<int> elements;
    for (int b = 0; mask; ++b, mask >>= 1)
      if (mask & 1u) elements.push_back(b);
    return elements;
  };
  std::sort(subsets.begin(), subsets.end(), [&](std::uint32_t a, std::uint32_t b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    return sorted_elements(a) < sorted_elements(b);
  });
  return subsets;
}

void check_cardinality(int k) {
  if (k < 2 || k > kMaxCardinality)
    throw std::invalid_argument("hyperedge cardinality must be in [2, " +
                                std::to_string(kMaxCardinality) + "], got " +
                                std::to_string(k));
}

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

double max_of(std::span<const double> c, int n) {
  return *std::max_element(c.begin(), c.begin() + n);
}

bool all_at_most(std::span<const double> c, std::size_t first, std::size_t last,
                 double bound) {
  for (std::size_t i = first; i < last; ++i)
    if (!(c[i] <= bound)) return false;
  return true;
}

bool same_block(std::span<const double> c) {
  const bool low = c[0] <= 0.5 && c[1] <= 0.5 && c[2] <= 0.5;
  const bool high = c[0] > 0.5 && c[1] > 0.5 && c[2] > 0.5;
  return low || high;
}

double param_or(const KernelParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

const std::vector<std::uint32_t>& subset_coordinates(int k) {
  check_cardinality(k);
  // built on first use per k; large k are expensive and rarely needed
  static std::array<std::once_flag, kMaxCardinality + 1> once;
  static std::array<std::vector<std::uint32_t>, kMaxCardinality + 1> table;
  std::call_once(once[k], [k] { table[k] = build_subsets(k); });
  return table[k];
}

std::vector<double> permute_coordinates(int k, std::span<const double> coords,
                                        std::span<const int> perm) {
  const auto& subsets = subset_coordinates(k);
  if (coords.size() != subsets.size() || perm.size() != static_cast<std::size_t>(k))
    throw std::invalid_argument("permute_coordinates: size mismatch");
  std::vector<std::size_t> position(1u << k, 0);
  for (std::size_t s = 0; s < subsets.size(); ++s) position[subsets[s]] = s;
  std::vector<double> out(coords.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::uint32_t image = 0;
    for (int b = 0; b < k; ++b)
      if (subsets[s] & (1u << b)) image |= 1u << perm[b];
    out[s] = coords[position[image]];
  }
  return out;
}

// ---------------------------------------------------------------------------
// HypergraphonLayer

HypergraphonLayer::HypergraphonLayer(int k, Kernel kernel, Kernel analytic_marginal,
                                     MarginalOptions options, std::string name)
    : k_(k),
      kernel_(std::move(kernel)),
      analytic_(std::move(analytic_marginal)),
      options_(options),
      mode_(analytic_ ? MarginalMode::analytic : MarginalMode::monte_carlo),
      name_(std::move(name)) {
  check_cardinality(k);
  if (!kernel_) throw std::invalid_argument("hypergraphon layer needs a kernel");
  if (options_.samples == 0)
    throw std::invalid_argument("Monte Carlo sample count must be positive");
}

double HypergraphonLayer::operator()(std::span<const double> coords) const {
  if (coords.size() != coordinate_count())
    throw std::invalid_argument("kernel expects " + std::to_string(coordinate_count()) +
                                " coordinates, got " + std::to_string(coords.size()));
  return kernel_(coords);
}

double HypergraphonLayer::vertex_marginal(std::span<const double> vertex_coords) const {
  if (mode_ == MarginalMode::analytic) return analytic_marginal(vertex_coords);
  return monte_carlo_marginal(vertex_coords).mean;
}

double HypergraphonLayer::analytic_marginal(std::span<const double> vertex_coords) const {
  if (vertex_coords.size() != static_cast<std::size_t>(k_))
    throw std::invalid_argument("vertex_marginal expects k coordinates");
  if (!analytic_) throw std::logic_error("layer '" + name_ + "' has no analytic marginal");
  return analytic_(vertex_coords);
}

MonteCarloEstimate HypergraphonLayer::monte_carlo_marginal(
    std::span<const double> vertex_coords) const {
  if (vertex_coords.size() != static_cast<std::size_t>(k_))
    throw std::invalid_argument("vertex_marginal expects k coordinates");
  std::vector<double> coords(coordinate_count());
  std::copy(vertex_coords.begin(), vertex_coords.end(), coords.begin());
  if (coords.size() == static_cast<std::size_t>(k_)) return {kernel_(coords), 0.0};

  std::vector<double> sorted(vertex_coords.begin(), vertex_coords.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t cell = 0;
  for (double v : sorted) cell = splitmix64(cell ^ std::bit_cast<std::uint64_t>(v));
  Engine engine(derive_seed(options_.seed, {cell}));

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < options_.samples; ++s) {
    for (std::size_t c = static_cast<std::size_t>(k_); c < coords.size(); ++c)
      coords[c] = uniform01(engine);
    const double v = kernel_(coords);
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(options_.samples);
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, n > 1 ? std::sqrt(var / (n - 1)) : 0.0};
}

HypergraphonLayer HypergraphonLayer::with_marginal_mode(MarginalMode mode,
                                                        MarginalOptions options) const {
  if (mode == MarginalMode::analytic && !analytic_)
    throw std::invalid_argument("layer '" + name_ + "' has no analytic marginal");
  if (options.samples == 0)
    throw std::invalid_argument("Monte Carlo sample count must be positive");
  HypergraphonLayer copy = *this;
  copy.mode_ = mode;
  copy.options_ = options;
  return copy;
}

// ---------------------------------------------------------------------------
// MultiLayerHypergraphon

MultiLayerHypergraphon::MultiLayerHypergraphon(std::vector<HypergraphonLayer> layers)
    : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("hypergraphon needs at least one layer");
}

std::vector<int> MultiLayerHypergraphon::cardinalities() const {
  std::vector<int> ks;
  for (const auto& l : layers_) ks.push_back(l.cardinality());
  return ks;
}

int MultiLayerHypergraphon::max_cardinality() const {
  int k = 0;
  for (const auto& l : layers_) k = std::max(k, l.cardinality());
  return k;
}

// ---------------------------------------------------------------------------
// Built-ins

std::vector<std::string> builtin_names() {
  return {"unif2", "rank2", "flat2", "ind3", "unif3", "inv_unif3", "block3", "rank3", "flat3"};
}

HypergraphonLayer builtin(const std::string& name, const KernelParams& params,
                          MarginalOptions options) {
  const bool takes_p = name == "flat2" || name == "flat3" || name == "ind3" ||
                       name == "block3";
  for (const auto& [key, value] : params) {
    if (key != "p" || !takes_p)
      throw std::invalid_argument("kernel '" + name + "' has no parameter '" + key + "'");
    if (!(value >= 0.0 && value <= 1.0))
      throw std::invalid_argument("kernel parameter p must lie in [0,1]");
  }
  const double p = param_or(params, "p", 0.5);
  using K = HypergraphonLayer::Kernel;
  using C = std::span<const double>;

  if (name == "unif2") {
    K f = [](C c) { return 1.0 - max_of(c, 2); };
    return {2, f, f, options, name};
  }
  if (name == "rank2") {
    K f = [](C c) { return 1.0 - c[0] * c[1]; };
    return {2, f, f, options, name};
  }
  if (name == "flat2" || name == "flat3") {
    K f = [p](C) { return p; };
    return {name == "flat2" ? 2 : 3, f, f, options, name};
  }
  if (name == "ind3") {
    K f = [p](C c) { return all_at_most(c, 3, 6, p) ? 1.0 : 0.0; };
    K m = [p](C) { return p * p * p; };
    return {3, f, m, options, name};
  }
  if (name == "unif3") {
    K f = [](C c) { return 1.0 - max_of(c, 3); };
    return {3, f, f, options, name};
  }
  if (name == "inv_unif3") {
    K f = [](C c) { return 1.0 - std::max({1.0 - c[0], 1.0 - c[1], 1.0 - c[2]}); };
    return {3, f, f, options, name};
  }
  if (name == "block3") {
    K f = [p](C c) { return same_block(c) && all_at_most(c, 3, 6, p) ? 1.0 : 0.0; };
    K m = [p](C c) { return same_block(c) ? p * p * p : 0.0; };
    return {3, f, m, options, name};
  }
  if (name == "rank3") {
    K f = [](C c) { return 1.0 - c[0] * c[1] * c[2]; };
    return {3, f, f, options, name};
  }
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

// ---------------------------------------------------------------------------
// VertexKernelGrid

VertexKernelGrid::VertexKernelGrid(int k, int resolution)
    : VertexKernelGrid(k, resolution,
                       std::vector<double>(resolution >= 1 ? ipow(resolution, k) : 0, 0.0)) {}

VertexKernelGrid::VertexKernelGrid(int k, int resolution, std::vector<double> values)
    : k_(k), m_(resolution), values_(std::move(values)) {
  check_cardinality(k);
  if (resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
  if (values_.size() != ipow(resolution, k))
    throw std::invalid_argument("grid value count does not match M^k");
}

std::size_t VertexKernelGrid::flat_index(std::span<const int> index) const {
  if (index.size() != static_cast<std::size_t>(k_))
    throw std::invalid_argument("grid index has wrong arity");
  std::size_t flat = 0;
  for (int i : index) {
    if (i < 0 || i >= m_) throw std::out_of_range("grid index out of range");
    flat = flat * static_cast<std::size_t>(m_) + static_cast<std::size_t>(i);
  }
  return flat;
}

double VertexKernelGrid::at(std::initializer_list<int> index) const {
  return at(std::span<const int>(index.begin(), index.size()));
}

void VertexKernelGrid::set_symmetric(std::span<const int> index, double value) {
  std::vector<int> perm(index.begin(), index.end());
  std::sort(perm.begin(), perm.end());
  do {
    values_[flat_index(perm)] = value;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

namespace {

// All non-decreasing k-tuples over [0, m).
std::vector<std::vector<int>> sorted_tuples(int k, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(k, 0);
  while (true) {
    out.push_back(t);
    int pos = k - 1;
    while (pos >= 0 && t[pos] == m - 1) --pos;
    if (pos < 0) break;
    ++t[pos];
    for (int j = pos + 1; j < k; ++j) t[j] = t[pos];
  }
  return out;
}

}  // namespace

VertexKernelGrid discretize(const HypergraphonLayer& layer, int resolution, int threads) {
  VertexKernelGrid grid(layer.cardinality(), resolution);
  const int k = layer.cardinality();
  const auto tuples = sorted_tuples(k, resolution);
  std::vector<double> cell_values(tuples.size());
  parallel_for(tuples.size(), threads, [&](std::size_t n) {
    std::vector<double> coords(k);
    for (int j = 0; j < k; ++j) coords[j] = (tuples[n][j] + 0.5) / resolution;
    cell_values[n] = layer.vertex_marginal(coords);
  });
  for (std::size_t n = 0; n < tuples.size(); ++n) grid.set_symmetric(tuples[n], cell_values[n]);
  return grid;
}

VertexKernelGrid step_hypergraphon(const MultiLayerHypergraph& graph, std::size_t layer_index) {
  if (layer_index >= graph.depth())
    throw std::out_of_range("layer index " + std::to_string(layer_index) +
                            " out of range for " + std::to_string(graph.depth()) + " layers");
  const auto& layer = graph.layer(layer_index);
  VertexKernelGrid grid(layer.cardinality(), graph.vertex_count());
  for (std::size_t e = 0; e < layer.edge_count(); ++e) grid.set_symmetric(layer.edge(e), 1.0);
  return grid;
}

double layer_density(const VertexKernelGrid& grid) {
  const int k = grid.cardinality();
  const int m = grid.resolution();
  if (m < k) return 0.0;
  std::vector<int> idx(k, 0);
  double sum = 0.0;
  std::size_t count = 0;
  const auto values = grid.values();
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    std::size_t rest = flat;
    for (int j = k - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rest % m);
      rest /= m;
    }
    bool distinct = true;
    for (int a = 0; a < k && distinct; ++a)
      for (int b = a + 1; b < k; ++b)
        if (idx[a] == idx[b]) {
          distinct = false;
          break;
        }
    if (!distinct) continue;
    sum += values[flat];
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

void write_grid_csv(std::ostream& out, const VertexKernelGrid& grid) {
  const int k = grid.cardinality();
  const int m = grid.resolution();
  std::vector<std::string> row;
  for (int j = 1; j <= k; ++j) row.push_back("i" + std::to_string(j));
  row.push_back("value");
  csv::write_row(out, row);
  const auto values = grid.values();
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    row.assign(k + 1, {});
    std::size_t rest = flat;
    for (int j = k - 1; j >= 0; --j) {
      row[j] = std::to_string(rest % m);
      rest /= m;
    }
    row[k] = csv::format_double(values[flat]);
    csv::write_row(out, row);
  }
}

}  // namespace hmfg
