#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvnet/errors.hpp"
#include "tvnet/network.hpp"
#include "tvnet/panel.hpp"
#include "tvnet/pipeline.hpp"

namespace tvnet {

/// How the triple set is given in a run config.
struct TripleSpec {
  enum class Kind { explicit_list, all_pairs, within } kind = Kind::all_pairs;
  struct Item {
    nlohmann::json i, l;  // series name or 0-based column index
    std::size_t k = 0;
  };
  std::vector<Item> items;
  std::size_t max_lag = 1;

  /// Resolves names against the panel header.
  [[nodiscard]] std::vector<LagTriple> resolve(const std::vector<std::string>& names) const {
    auto index = [&](const nlohmann::json& v) -> std::size_t {
      if (v.is_number_integer()) {
        const auto x = v.get<long long>();
        if (x < 0 || static_cast<std::size_t>(x) >= names.size())
          throw ConfigError("series index " + std::to_string(x) + " is out of range");
        return static_cast<std::size_t>(x);
      }
      const auto s = v.get<std::string>();
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == s) return i;
      throw ConfigError("series '" + s + "' is not in the input header");
    };
    std::vector<LagTriple> out;
    const std::size_t p = names.size();
    switch (kind) {
      case Kind::explicit_list:
        for (const auto& it : items) out.push_back({index(it.i), index(it.l), it.k});
        break;
      case Kind::all_pairs:
        for (std::size_t k = 1; k <= max_lag; ++k)
          for (std::size_t i = 0; i < p; ++i)
            for (std::size_t l = 0; l < p; ++l)
              if (i != l) out.push_back({i, l, k});
        break;
      case Kind::within:
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t k = 1; k <= max_lag; ++k) out.push_back({i, i, k});
        break;
    }
    if (out.empty()) throw ConfigError("the triple specification selects no triples");
    return out;
  }
};

struct SimulationSettings {
  std::size_t n = 500;
  std::size_t reps = 200;
  std::vector<double> nominal{0.90, 0.95};
  bool trend = true;
  bool white_noise = false;
  std::vector<double> fnr_grid;
};

/// A validated run configuration. Every key is documented in the README.
struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output = "tvnet-out";
  TripleSpec triples;
  NullCurve null = NullCurve::constant(0.0);
  std::vector<double> snapshots;  // empty: every domain point
  PipelineConfig pipeline;
  SimulationSettings simulation;
};

namespace detail {

/// Flattens nested objects into dotted keys; arrays and scalars are leaves,
/// except under keys that take an object value.
inline void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out,
                    const std::set<std::string>& object_leaves) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object() && !object_leaves.contains(key)) {
      flatten(*it, key, out, object_leaves);
    } else {
      if (out.contains(key)) throw ConfigError("config key '" + key + "' is given twice");
      out[key] = *it;
    }
  }
}

inline NullCurve parse_null(const nlohmann::json& v) {
  if (v.is_number()) return NullCurve::constant(v.get<double>());
  if (!v.is_object() || v.size() != 1) throw ConfigError("null must be a number or an object with one of constant, affine, table");
  if (v.contains("constant")) return NullCurve::constant(v.at("constant").get<double>());
  if (v.contains("affine")) {
    const auto a = v.at("affine").get<std::vector<double>>();
    if (a.size() != 2) throw ConfigError("null.affine takes [intercept, slope]");
    return NullCurve::affine(a[0], a[1]);
  }
  if (v.contains("table")) {
    const auto& t = v.at("table");
    return NullCurve::table(t.at("t").get<std::vector<double>>(), t.at("value").get<std::vector<double>>());
  }
  throw ConfigError("unknown null kind");
}

inline TripleSpec parse_triples(const nlohmann::json& v) {
  TripleSpec ts;
  if (v.is_array()) {
    ts.kind = TripleSpec::Kind::explicit_list;
    for (const auto& e : v) {
      if (!e.is_array() || e.size() != 3) throw ConfigError("each triple is [series, series, lag]");
      const auto k = e[2].get<long long>();
      if (k < 0) throw ConfigError("lags must be non-negative");
      ts.items.push_back({e[0], e[1], static_cast<std::size_t>(k)});
    }
    return ts;
  }
  if (v.is_object() && v.size() == 1) {
    const bool pairs = v.contains("all_pairs");
    if (!pairs && !v.contains("within")) throw ConfigError("triples object must be {all_pairs: K} or {within: K}");
    ts.kind = pairs ? TripleSpec::Kind::all_pairs : TripleSpec::Kind::within;
    const auto k = (pairs ? v.at("all_pairs") : v.at("within")).get<long long>();
    if (k < 1) throw ConfigError("maximum lag must be at least 1");
    ts.max_lag = static_cast<std::size_t>(k);
    return ts;
  }
  throw ConfigError("triples must be a list of [series, series, lag] or {all_pairs: K} or {within: K}");
}

inline Variant parse_variant(const std::string& s) {
  if (s == "red") return Variant::reduced;
  if (s == "diff") return Variant::plain;
  if (s == "plugin") return Variant::plugin;
  throw ConfigError("algorithm must be one of red, diff, plugin (got '" + s + "')");
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

inline bool is_auto(const nlohmann::json& v) { return v.is_string() && v.get<std::string>() == "auto"; }

}  // namespace detail

/// Builds a RunConfig from a JSON document. Keys may be nested objects or
/// dotted paths; unknown keys are errors.
inline RunConfig parse_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, nlohmann::json> kv;
  detail::flatten(doc, "", kv, {"null", "triples", "simulate.null"});
  RunConfig rc;
  auto& pc = rc.pipeline;
  std::set<std::string> used;
  auto take = [&](const std::string& key) -> const nlohmann::json* {
    const auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  try {
    if (auto v = take("input")) rc.input = v->get<std::string>();
    if (auto v = take("output")) rc.output = v->get<std::string>();
    if (auto v = take("algorithm")) pc.algorithm = detail::parse_variant(v->get<std::string>());
    if (auto v = take("triples")) rc.triples = detail::parse_triples(*v);
    if (auto v = take("null")) rc.null = detail::parse_null(*v);
    if (auto v = take("snapshots")) rc.snapshots = v->get<std::vector<double>>();
    if (auto v = take("boot.alpha")) pc.alpha = v->get<double>();
    if (auto v = take("boot.B")) pc.B = v->get<std::size_t>();
    if (auto v = take("boot.seed")) pc.seed = v->get<std::uint64_t>();
    if (auto v = take("threads")) pc.threads = v->get<std::size_t>();
    if (auto v = take("bands.b"); v && !detail::is_auto(*v)) pc.bandwidths = detail::scalar_or_list<double>(*v);
    if (auto v = take("bands.ratio_floor")) pc.ratio_floor = v->get<double>();
    if (auto v = take("diff.h"); v && !detail::is_auto(*v)) pc.h = v->get<long>();
    if (auto v = take("diff.h_tilde"); v && !detail::is_auto(*v)) pc.h_tilde = v->get<long>();
    if (auto v = take("kernel.r")) pc.check.r = v->get<double>();
    if (auto v = take("kernel.delta")) pc.check.delta = v->get<double>();
    if (auto v = take("lrv.m"); v && !detail::is_auto(*v)) pc.m = detail::scalar_or_list<long>(*v);
    if (auto v = take("lrv.eta"); v && !detail::is_auto(*v)) pc.eta = v->get<double>();
    if (auto v = take("lrv.weights")) {
      const auto s = v->get<std::string>();
      if (s == "epanechnikov") pc.lrv_weights = LrvWeights::epanechnikov;
      else if (s == "kernel") pc.lrv_weights = LrvWeights::fourth_order;
      else throw ConfigError("lrv.weights must be epanechnikov or kernel");
    }
    if (auto v = take("boot.w"); v && !detail::is_auto(*v)) pc.w = v->get<long>();
    if (auto v = take("plugin.tau"); v && !detail::is_auto(*v)) pc.tau = detail::scalar_or_list<double>(*v);
    if (auto v = take("tune.b_mult")) pc.grids.b_mult = v->get<std::vector<double>>();
    if (auto v = take("tune.w_mult")) pc.grids.w_mult = v->get<std::vector<double>>();
    if (auto v = take("tune.eta_mult")) pc.grids.eta_mult = v->get<std::vector<double>>();
    if (auto v = take("tune.m_mult")) pc.grids.m_mult = v->get<std::vector<double>>();
    if (auto v = take("tune.tau_mult")) pc.grids.tau_mult = v->get<std::vector<double>>();
    auto& sim = rc.simulation;
    if (auto v = take("simulate.n")) sim.n = v->get<std::size_t>();
    if (auto v = take("simulate.reps")) sim.reps = v->get<std::size_t>();
    if (auto v = take("simulate.nominal")) sim.nominal = detail::scalar_or_list<double>(*v);
    if (auto v = take("simulate.trend")) sim.trend = v->get<bool>();
    if (auto v = take("simulate.white_noise")) sim.white_noise = v->get<bool>();
    if (auto v = take("simulate.fnr_grid")) sim.fnr_grid = v->get<std::vector<double>>();
    if (auto v = take("simulate.null")) rc.null = detail::parse_null(*v);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  for (const auto& [key, value] : kv)
    if (!used.contains(key)) throw ConfigError("unknown config key '" + key + "'");

  if (!(pc.alpha > 0.0 && pc.alpha < 1.0)) throw ConfigError("boot.alpha must lie in (0, 1)");
  if (pc.B < 100) throw ConfigError("boot.B must be at least 100");
  if (!(pc.ratio_floor > 0.0 && pc.ratio_floor <= 1.0)) throw ConfigError("bands.ratio_floor must lie in (0, 1]");
  for (double b : pc.bandwidths)
    if (!(b > 0.0 && b < 0.5)) throw ConfigError("bands.b values must lie in (0, 1/2)");
  for (double v : rc.simulation.nominal)
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("simulate.nominal levels must lie in (0, 1)");
  for (double t : rc.snapshots)
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("snapshot times must lie in (0, 1)");
  return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  auto rc = parse_config(doc);
  if (!rc.input.empty() && rc.input.is_relative()) rc.input = path.parent_path() / rc.input;
  return rc;
}

}  // namespace tvnet
