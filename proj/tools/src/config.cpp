#include "config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace hmfg::cli {

using nlohmann::json;

namespace {

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

std::string join(const std::string& path, const std::string& key) { return path + "/" + escape_token(key); }
std::string join(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
  throw ConfigError("invalid_config", message, path);
}

void require_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) invalid(path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) invalid(join(path, key), "unknown key '" + key + "'");
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path, double lo = -std::numeric_limits<double>::infinity(),
              double hi = std::numeric_limits<double>::infinity()) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double v = j.get<double>();
  if (!(v >= lo && v <= hi)) {
    std::ostringstream msg;
    msg << "value " << v << " outside [" << lo << ", " << hi << "]";
    invalid(path, msg.str());
  }
  return v;
}

long long integer(const json& j, const std::string& path, long long lo, long long hi) {
  if (!j.is_number_integer()) invalid(path, "expected an integer");
  long long v = 0;
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<long long>::max())) invalid(path, "integer too large");
    v = static_cast<long long>(u);
  } else {
    v = j.get<long long>();
  }
  if (v < lo || v > hi)
    invalid(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

std::uint64_t seed(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    invalid(path, "seed must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) invalid(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> per_layer(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path, 0.0)};
  if (!j.is_array() || j.empty()) invalid(path, "expected a number or a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], join(path, i), 0.0));
  return out;
}

AlphaMode alpha_mode(const json& j, const std::string& path) {
  const auto s = string(j, path);
  if (s == "uniform") return AlphaMode::uniform;
  if (s == "grid") return AlphaMode::grid;
  invalid(path, "alpha_mode must be 'uniform' or 'grid'");
}

void parse_rumor(const json& p, const std::string& path, RumorParams& r) {
  require_object(p, path, {"tau", "gain", "cost", "initial_aware", "horizon", "aware_threshold", "aware_level"});
  if (auto v = find(p, "tau")) r.tau = per_layer(*v, join(path, "tau"));
  if (auto v = find(p, "gain")) r.gain = per_layer(*v, join(path, "gain"));
  if (auto v = find(p, "cost")) r.cost = per_layer(*v, join(path, "cost"));
  if (auto v = find(p, "initial_aware")) r.initial_aware = number(*v, join(path, "initial_aware"), 0.0, 1.0);
  if (auto v = find(p, "horizon")) r.horizon = static_cast<int>(integer(*v, join(path, "horizon"), 1, 100000));
  if (auto v = find(p, "aware_threshold"); v && !v->is_null())
    r.aware_threshold = number(*v, join(path, "aware_threshold"), 0.0, 1.0);
  if (auto v = find(p, "aware_level")) r.aware_level = number(*v, join(path, "aware_level"), 0.0, 1.0);
}

void parse_sis(const json& p, const std::string& path, SisParams& s) {
  require_object(p, path, {"tau", "recovery", "cost_precaution", "cost_infection", "initial_infected", "horizon"});
  if (auto v = find(p, "tau")) s.tau = per_layer(*v, join(path, "tau"));
  if (auto v = find(p, "recovery")) s.recovery = number(*v, join(path, "recovery"), 0.0, 1.0);
  if (auto v = find(p, "cost_precaution")) s.cost_precaution = number(*v, join(path, "cost_precaution"), 0.0);
  if (auto v = find(p, "cost_infection")) s.cost_infection = number(*v, join(path, "cost_infection"), 0.0);
  if (auto v = find(p, "initial_infected")) s.initial_infected = number(*v, join(path, "initial_infected"), 0.0, 1.0);
  if (auto v = find(p, "horizon")) s.horizon = static_cast<int>(integer(*v, join(path, "horizon"), 1, 100000));
}

json per_layer_json(const std::vector<double>& v) { return v.size() == 1 ? json(v[0]) : json(v); }

}  // namespace

const char* to_string(AlphaMode mode) { return mode == AlphaMode::uniform ? "uniform" : "grid"; }
const char* to_string(SolverMethod method) { return method == SolverMethod::omd ? "omd" : "fixed_point"; }
const char* to_string(ProblemKind kind) { return kind == ProblemKind::sis ? "sis" : "rumor"; }

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "", {"version", "game", "layers", "grid", "solver", "simulation", "sample", "output", "meta"});
  auto v = find(doc, "version");
  if (!v) invalid("/version", "missing required key 'version'");
  if (integer(*v, "/version", 0, 1000) != kConfigVersion)
    invalid("/version", "unsupported config version (expected " + std::to_string(kConfigVersion) + ")");

  ExperimentConfig c;

  auto game = find(doc, "game");
  if (!game) invalid("/game", "missing required key 'game'");
  require_object(*game, "/game", {"problem", "params"});
  auto problem = find(*game, "problem");
  if (!problem) invalid("/game/problem", "missing required key 'problem'");
  const auto name = string(*problem, "/game/problem");
  const json empty = json::object();
  const json& params = find(*game, "params") ? (*game)["params"] : empty;
  if (name == "rumor") {
    c.problem = ProblemKind::rumor;
    parse_rumor(params, "/game/params", c.rumor);
  } else if (name == "sis") {
    c.problem = ProblemKind::sis;
    parse_sis(params, "/game/params", c.sis);
  } else if (name == "custom") {
    invalid("/game/problem", "custom problems are only available through the library API");
  } else {
    invalid("/game/problem", "unknown problem '" + name + "' (expected rumor or sis)");
  }

  auto layers = find(doc, "layers");
  if (!layers) invalid("/layers", "missing required key 'layers'");
  if (!layers->is_array() || layers->empty()) invalid("/layers", "expected a non-empty array of layers");
  for (std::size_t d = 0; d < layers->size(); ++d) {
    const auto path = join("/layers", d);
    const auto& l = (*layers)[d];
    require_object(l, path, {"name", "params"});
    auto n = find(l, "name");
    if (!n) invalid(join(path, "name"), "missing required key 'name'");
    LayerSpec spec;
    spec.name = string(*n, join(path, "name"));
    if (auto p = find(l, "params")) {
      if (!p->is_object()) invalid(join(path, "params"), "expected an object");
      for (const auto& [key, value] : p->items())
        spec.params[key] = number(value, join(join(path, "params"), key));
    }
    try {
      builtin(spec.name, spec.params);
    } catch (const std::invalid_argument& e) {
      invalid(path, e.what());
    }
    c.layers.push_back(std::move(spec));
  }

  if (auto g = find(doc, "grid")) {
    require_object(*g, "/grid", {"M", "marginal_mode", "marginal_samples", "marginal_seed"});
    if (auto x = find(*g, "M")) c.grid.resolution = static_cast<int>(integer(*x, "/grid/M", 1, 100000));
    if (auto x = find(*g, "marginal_mode")) {
      const auto s = string(*x, "/grid/marginal_mode");
      if (s == "analytic") c.grid.marginal_mode = MarginalMode::analytic;
      else if (s == "monte_carlo") c.grid.marginal_mode = MarginalMode::monte_carlo;
      else invalid("/grid/marginal_mode", "marginal_mode must be 'analytic' or 'monte_carlo'");
    }
    if (auto x = find(*g, "marginal_samples"))
      c.grid.marginal_samples = static_cast<std::size_t>(integer(*x, "/grid/marginal_samples", 1, 1LL << 32));
    if (auto x = find(*g, "marginal_seed")) c.grid.marginal_seed = seed(*x, "/grid/marginal_seed");
  }

  if (auto s = find(doc, "solver")) {
    require_object(*s, "/solver", {"method", "iterations", "damping", "tolerance", "learning_rate", "temperature"});
    if (auto x = find(*s, "method")) {
      const auto m = string(*x, "/solver/method");
      if (m == "fixed_point") c.solver.method = SolverMethod::fixed_point;
      else if (m == "omd") c.solver.method = SolverMethod::omd;
      else invalid("/solver/method", "method must be 'fixed_point' or 'omd'");
    }
    if (auto x = find(*s, "iterations")) c.solver.iterations = static_cast<int>(integer(*x, "/solver/iterations", 1, 10000000));
    if (auto x = find(*s, "damping")) {
      c.solver.damping = number(*x, "/solver/damping", 0.0, 1.0);
      if (c.solver.damping >= 1.0) invalid("/solver/damping", "damping must lie in [0, 1)");
    }
    if (auto x = find(*s, "tolerance")) c.solver.tolerance = number(*x, "/solver/tolerance", 0.0);
    if (auto x = find(*s, "learning_rate")) {
      c.solver.learning_rate = number(*x, "/solver/learning_rate", 0.0);
      if (c.solver.learning_rate <= 0.0) invalid("/solver/learning_rate", "learning_rate must be positive");
    }
    if (auto x = find(*s, "temperature")) {
      c.solver.temperature = number(*x, "/solver/temperature", 0.0);
      if (c.solver.temperature <= 0.0) invalid("/solver/temperature", "temperature must be positive");
    }
  }

  int max_k = 2;
  for (const auto& l : c.layers) max_k = std::max(max_k, builtin(l.name, l.params).cardinality());

  if (auto s = find(doc, "simulation")) {
    require_object(*s, "/simulation", {"N_list", "realizations", "seed", "alpha_mode", "equilibrium"});
    if (auto x = find(*s, "N_list")) {
      if (!x->is_array() || x->empty()) invalid("/simulation/N_list", "expected a non-empty array of agent counts");
      c.simulation.sizes.clear();
      for (std::size_t i = 0; i < x->size(); ++i)
        c.simulation.sizes.push_back(static_cast<int>(integer((*x)[i], join("/simulation/N_list", i), max_k, 1000000)));
    }
    if (auto x = find(*s, "realizations"))
      c.simulation.realizations = static_cast<int>(integer(*x, "/simulation/realizations", 2, 10000000));
    if (auto x = find(*s, "seed")) c.simulation.seed = seed(*x, "/simulation/seed");
    if (auto x = find(*s, "alpha_mode")) c.simulation.alpha_mode = alpha_mode(*x, "/simulation/alpha_mode");
    if (auto x = find(*s, "equilibrium"); x && !x->is_null()) c.simulation.equilibrium = string(*x, "/simulation/equilibrium");
  } else {
    for (int n : c.simulation.sizes)
      if (n < max_k) invalid("/simulation/N_list", "agent count below the largest layer cardinality");
  }

  if (auto s = find(doc, "sample")) {
    require_object(*s, "/sample", {"N", "seed", "alpha_mode"});
    if (auto x = find(*s, "N")) c.sample.vertices = static_cast<int>(integer(*x, "/sample/N", max_k, 1000000));
    if (auto x = find(*s, "seed")) c.sample.seed = seed(*x, "/sample/seed");
    if (auto x = find(*s, "alpha_mode")) c.sample.alpha_mode = alpha_mode(*x, "/sample/alpha_mode");
  } else if (c.sample.vertices < max_k) {
    invalid("/sample/N", "vertex count below the largest layer cardinality");
  }

  if (auto o = find(doc, "output")) {
    require_object(*o, "/output", {"dir"});
    if (auto x = find(*o, "dir")) c.output_dir = string(*x, "/output/dir");
  }

  try {
    build_problem(c);
  } catch (const std::invalid_argument& e) {
    invalid("/game/params", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("io_error", "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("parse_error", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json game;
  if (c.problem == ProblemKind::rumor) {
    const auto& r = c.rumor;
    game = {{"problem", "rumor"},
            {"params",
             {{"tau", per_layer_json(r.tau)},
              {"gain", per_layer_json(r.gain)},
              {"cost", per_layer_json(r.cost)},
              {"initial_aware", r.initial_aware},
              {"horizon", r.horizon},
              {"aware_threshold", r.aware_threshold ? json(*r.aware_threshold) : json(nullptr)},
              {"aware_level", r.aware_level}}}};
  } else {
    const auto& s = c.sis;
    game = {{"problem", "sis"},
            {"params",
             {{"tau", per_layer_json(s.tau)},
              {"recovery", s.recovery},
              {"cost_precaution", s.cost_precaution},
              {"cost_infection", s.cost_infection},
              {"initial_infected", s.initial_infected},
              {"horizon", s.horizon}}}};
  }
  json layers = json::array();
  for (const auto& l : c.layers) {
    json params = json::object();
    for (const auto& [k, v] : l.params) params[k] = v;
    layers.push_back({{"name", l.name}, {"params", params}});
  }
  return {{"version", kConfigVersion},
          {"game", game},
          {"layers", layers},
          {"grid",
           {{"M", c.grid.resolution},
            {"marginal_mode", c.grid.marginal_mode == MarginalMode::analytic ? "analytic" : "monte_carlo"},
            {"marginal_samples", c.grid.marginal_samples},
            {"marginal_seed", c.grid.marginal_seed}}},
          {"solver",
           {{"method", to_string(c.solver.method)},
            {"iterations", c.solver.iterations},
            {"damping", c.solver.damping},
            {"tolerance", c.solver.tolerance},
            {"learning_rate", c.solver.learning_rate},
            {"temperature", c.solver.temperature}}},
          {"simulation",
           {{"N_list", c.simulation.sizes},
            {"realizations", c.simulation.realizations},
            {"seed", c.simulation.seed},
            {"alpha_mode", to_string(c.simulation.alpha_mode)},
            {"equilibrium", c.simulation.equilibrium.empty() ? json(nullptr) : json(c.simulation.equilibrium)}}},
          {"sample",
           {{"N", c.sample.vertices}, {"seed", c.sample.seed}, {"alpha_mode", to_string(c.sample.alpha_mode)}}},
          {"output", {{"dir", c.output_dir}}}};
}

MultiLayerHypergraphon build_hypergraphon(const ExperimentConfig& c) {
  MarginalOptions options{c.grid.marginal_samples, c.grid.marginal_seed};
  std::vector<HypergraphonLayer> layers;
  for (const auto& l : c.layers) {
    auto layer = builtin(l.name, l.params, options);
    if (c.grid.marginal_mode == MarginalMode::monte_carlo)
      layer = layer.with_marginal_mode(MarginalMode::monte_carlo, options);
    layers.push_back(std::move(layer));
  }
  return MultiLayerHypergraphon(std::move(layers));
}

MfgProblem build_problem(const ExperimentConfig& c) {
  std::vector<int> cards;
  for (const auto& l : c.layers) cards.push_back(builtin(l.name, l.params).cardinality());
  return c.problem == ProblemKind::rumor ? rumor_problem(c.rumor, cards) : sis_problem(c.sis, cards);
}

}  // namespace hmfg::cli
