#include "hmfg/hypergraph.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "hmfg/random.hpp"

namespace hmfg {

namespace {

bool lex_less(std::span<const int> a, std::span<const int> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

HypergraphLayer::HypergraphLayer(int k, std::vector<std::vector<int>> edges) : k_(k) {
  if (k < 2) throw std::invalid_argument("layer cardinality must be >= 2");
  edges_.reserve(edges.size() * static_cast<std::size_t>(k));
  for (auto& e : edges) {
    if (e.size() != static_cast<std::size_t>(k))
      throw std::invalid_argument("edge with " + std::to_string(e.size()) +
                                  " vertices in a " + std::to_string(k) + "-uniform layer");
    std::sort(e.begin(), e.end());
    if (std::adjacent_find(e.begin(), e.end()) != e.end())
      throw std::invalid_argument("edge has repeated vertices");
    edges_.insert(edges_.end(), e.begin(), e.end());
  }
  canonicalize();
}

HypergraphLayer HypergraphLayer::from_sorted(int k, std::vector<int> flat_edges) {
  HypergraphLayer layer;
  layer.k_ = k;
  layer.edges_ = std::move(flat_edges);
  return layer;
}

void HypergraphLayer::canonicalize() {
  const std::size_t count = edge_count();
  std::vector<std::size_t> order(count);
  for (std::size_t e = 0; e < count; ++e) order[e] = e;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return lex_less(edge(a), edge(b)); });
  std::vector<int> sorted;
  sorted.reserve(edges_.size());
  for (std::size_t e : order) {
    auto span = edge(e);
    if (!sorted.empty() &&
        std::equal(span.begin(), span.end(), sorted.end() - k_))
      throw std::invalid_argument("duplicate edge in layer");
    sorted.insert(sorted.end(), span.begin(), span.end());
  }
  edges_ = std::move(sorted);
}

bool HypergraphLayer::contains(std::span<const int> vertices) const {
  if (vertices.size() != static_cast<std::size_t>(k_)) return false;
  std::vector<int> key(vertices.begin(), vertices.end());
  std::sort(key.begin(), key.end());
  std::size_t lo = 0, hi = edge_count();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (lex_less(edge(mid), key))
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo < edge_count() && std::equal(key.begin(), key.end(), edge(lo).begin());
}

bool operator==(const HypergraphLayer& a, const HypergraphLayer& b) {
  if (a.cardinality() != b.cardinality() || a.edge_count() != b.edge_count()) return false;
  for (std::size_t e = 0; e < a.edge_count(); ++e) {
    auto x = a.edge(e), y = b.edge(e);
    if (!std::equal(x.begin(), x.end(), y.begin())) return false;
  }
  return true;
}

MultiLayerHypergraph::MultiLayerHypergraph(int vertex_count, std::vector<double> alphas,
                                           std::vector<HypergraphLayer> layers)
    : n_(vertex_count), alphas_(std::move(alphas)), layers_(std::move(layers)) {
  if (n_ < 0) throw std::invalid_argument("vertex count must be nonnegative");
  if (alphas_.empty()) {
    alphas_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) alphas_[i] = (i + 0.5) / n_;
  }
  if (alphas_.size() != static_cast<std::size_t>(n_))
    throw std::invalid_argument("alphas must have one entry per vertex");
  for (double a : alphas_)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha outside [0,1]");
  for (const auto& layer : layers_)
    for (std::size_t e = 0; e < layer.edge_count(); ++e)
      for (int v : layer.edge(e))
        if (v < 0 || v >= n_)
          throw std::invalid_argument("edge vertex " + std::to_string(v) +
                                      " outside [0, N)");
}

std::vector<int> MultiLayerHypergraph::cardinalities() const {
  std::vector<int> ks;
  for (const auto& l : layers_) ks.push_back(l.cardinality());
  return ks;
}

MultiLayerHypergraph sample(const MultiLayerHypergraphon& hypergraphon, int vertex_count,
                            std::uint64_t seed, AlphaMode alpha_mode) {
  if (vertex_count < hypergraphon.max_cardinality())
    throw std::invalid_argument("vertex count " + std::to_string(vertex_count) +
                                " is below the largest layer cardinality " +
                                std::to_string(hypergraphon.max_cardinality()));
  const std::size_t n = static_cast<std::size_t>(vertex_count);
  std::vector<double> alphas(n);
  if (alpha_mode == AlphaMode::uniform) {
    Engine engine(derive_seed(seed, {0}));
    for (auto& a : alphas) a = uniform01(engine);
    std::sort(alphas.begin(), alphas.end());
  } else {
    for (std::size_t i = 0; i < n; ++i) alphas[i] = (static_cast<double>(i) + 0.5) / vertex_count;
  }

  std::vector<HypergraphLayer> layers;
  for (std::size_t d = 0; d < hypergraphon.depth(); ++d) {
    const auto& kernel = hypergraphon.layer(d);
    const int k = kernel.cardinality();
    const auto& subsets = subset_coordinates(k);
    Engine engine(derive_seed(seed, {1, d}));
    std::vector<double> coords(subsets.size());
    std::vector<int> edge(k);
    for (int j = 0; j < k; ++j) edge[j] = j;
    std::vector<int> flat;
    while (true) {
      for (int j = 0; j < k; ++j) coords[j] = alphas[edge[j]];
      for (std::size_t c = k; c < coords.size(); ++c) coords[c] = uniform01(engine);
      if (uniform01(engine) < kernel(coords)) flat.insert(flat.end(), edge.begin(), edge.end());
      // next k-subset in lexicographic order
      int pos = k - 1;
      while (pos >= 0 && edge[pos] == vertex_count - k + pos) --pos;
      if (pos < 0) break;
      ++edge[pos];
      for (int j = pos + 1; j < k; ++j) edge[j] = edge[j - 1] + 1;
    }
    layers.push_back(HypergraphLayer::from_sorted(k, std::move(flat)));
  }
  return MultiLayerHypergraph(vertex_count, std::move(alphas), std::move(layers));
}

std::vector<std::vector<int>> incident_tuples(const MultiLayerHypergraph& graph, int vertex,
                                              std::size_t layer_index) {
  if (vertex < 0 || vertex >= graph.vertex_count())
    throw std::out_of_range("vertex out of range");
  const auto& layer = graph.layer(layer_index);
  std::vector<std::vector<int>> tuples;
  for (std::size_t e = 0; e < layer.edge_count(); ++e) {
    auto edge = layer.edge(e);
    if (std::find(edge.begin(), edge.end(), vertex) == edge.end()) continue;
    std::vector<int> others;
    for (int v : edge)
      if (v != vertex) others.push_back(v);
    do {
      tuples.push_back(others);
    } while (std::next_permutation(others.begin(), others.end()));
  }
  return tuples;
}

Incidence::Incidence(const MultiLayerHypergraph& graph) {
  incident_.resize(graph.depth());
  for (std::size_t d = 0; d < graph.depth(); ++d) {
    auto& per_vertex = incident_[d];
    per_vertex.resize(static_cast<std::size_t>(graph.vertex_count()));
    const auto& layer = graph.layer(d);
    for (std::size_t e = 0; e < layer.edge_count(); ++e)
      for (int v : layer.edge(e)) per_vertex[v].push_back(static_cast<std::uint32_t>(e));
  }
}

std::string to_json(const MultiLayerHypergraph& graph) {
  nlohmann::json doc;
  doc["N"] = graph.vertex_count();
  doc["alphas"] = graph.alphas();
  doc["layers"] = nlohmann::json::array();
  for (const auto& layer : graph.layers()) {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t e = 0; e < layer.edge_count(); ++e) {
      auto edge = layer.edge(e);
      edges.push_back(std::vector<int>(edge.begin(), edge.end()));
    }
    doc["layers"].push_back({{"k", layer.cardinality()}, {"edges", std::move(edges)}});
  }
  return doc.dump();
}

MultiLayerHypergraph hypergraph_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    const int n = doc.at("N").get<int>();
    std::vector<double> alphas = doc.contains("alphas") ? doc.at("alphas").get<std::vector<double>>()
                                                        : std::vector<double>{};
    std::vector<HypergraphLayer> layers;
    for (const auto& l : doc.at("layers"))
      layers.emplace_back(l.at("k").get<int>(),
                          l.at("edges").get<std::vector<std::vector<int>>>());
    return MultiLayerHypergraph(n, std::move(alphas), std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid hypergraph JSON: ") + e.what());
  }
}

}  // namespace hmfg
