#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvnet/config.hpp"
#include "tvnet/io.hpp"
#include "tvnet/network.hpp"
#include "tvnet/pipeline.hpp"
#include "tvnet/simgen.hpp"

// Serialisers for the CLI artifacts. CSV floats carry 17 significant digits.

namespace tvnet::report {

using nlohmann::ordered_json;

inline std::string series_name(const Panel& panel, std::size_t i) { return panel.names()[i]; }

/// curves.csv: t,i,l,k,rho and, when bands exist, gamma_sd,lower,upper.
inline std::string curves_csv(const Panel& panel, const PipelineResult& res) {
  std::ostringstream os;
  const bool bands = !res.band.lower.empty();
  os << "t,i,l,k,rho" << (bands ? ",gamma_sd,lower,upper" : "") << '\n';
  const auto& d = res.curves.domain;
  for (std::size_t z = 0; z < res.curves.triples.size(); ++z) {
    const auto& tr = res.curves.triples[z];
    for (long j = d.first; j <= d.last; ++j) {
      const auto p = static_cast<std::size_t>(j - d.first);
      os << io::fmt(d.t(j)) << ',' << series_name(panel, tr.i) << ',' << series_name(panel, tr.l) << ',' << tr.k
         << ',' << io::fmt(res.curves.curves[z].rho[static_cast<std::size_t>(j - 1)]);
      if (bands)
        os << ',' << io::fmt(res.band.sd[z][p]) << ',' << io::fmt(res.band.lower[z][p]) << ','
           << io::fmt(res.band.upper[z][p]);
      os << '\n';
    }
  }
  return os.str();
}

inline std::string network_json(const Panel& panel, const NetworkSnapshot& snap) {
  ordered_json j;
  j["index"] = snap.index;
  j["t"] = snap.t;
  j["edges"] = ordered_json::array();
  for (const auto& e : snap.edges) {
    ordered_json je;
    je["from"] = series_name(panel, e.from);
    je["to"] = series_name(panel, e.to);
    je["lags"] = e.lags;
    je["max_deviation"] = e.max_deviation;
    j["edges"].push_back(je);
  }
  return j.dump(2) + "\n";
}

inline std::string heatmap_csv(const Panel& panel, const std::vector<HeatmapCell>& cells) {
  std::ostringstream os;
  os << "t,i,l,level,statistic\n";
  for (const auto& c : cells)
    os << io::fmt(c.t) << ',' << series_name(panel, c.i) << ',' << series_name(panel, c.l) << ','
       << io::fmt(c.level) << ',' << io::fmt(c.statistic) << '\n';
  return os.str();
}

inline std::string bootstrap_json(const QuantileResult& q) {
  std::vector<double> s(q.draws);
  std::sort(s.begin(), s.end());
  auto at = [&](double p) { return s[std::min(s.size() - 1, static_cast<std::size_t>(std::floor(p * static_cast<double>(s.size()))))]; };
  double mean = 0.0;
  for (double v : s) mean += v;
  mean /= static_cast<double>(s.size());
  ordered_json j;
  j["r_boot"] = q.r_boot;
  j["alpha"] = q.alpha;
  j["B"] = q.B();
  j["seed"] = q.seed;
  j["draws"] = {{"min", s.front()}, {"q25", at(0.25)}, {"median", at(0.5)}, {"mean", mean},
                {"q75", at(0.75)}, {"q90", at(0.9)}, {"q95", at(0.95)}, {"max", s.back()}};
  return j.dump(2) + "\n";
}

inline ordered_json null_json(const NullCurve& g) {
  switch (g.kind) {
    case NullCurve::Kind::constant: return {{"constant", g.a}};
    case NullCurve::Kind::affine: return {{"affine", {g.a, g.c}}};
    case NullCurve::Kind::table: return {{"table", {{"t", g.grid}, {"value", g.values}}}};
  }
  return {};
}

/// A config document that pins every automatically chosen parameter, so
/// feeding it back reproduces the run.
inline ordered_json resolved_config(const Panel& panel, const RunConfig& rc, const PipelineResult& res) {
  const auto& pc = rc.pipeline;
  ordered_json c;
  c["input"] = rc.input.string();
  c["algorithm"] = to_string(res.algorithm);
  ordered_json triples = ordered_json::array();
  for (const auto& z : res.bands.triples) triples.push_back({series_name(panel, z.i), series_name(panel, z.l), z.k});
  c["triples"] = triples;
  c["null"] = null_json(rc.null);
  if (!rc.snapshots.empty()) c["snapshots"] = rc.snapshots;
  c["boot"] = {{"alpha", pc.alpha}, {"B", pc.B}, {"seed", pc.seed}};
  if (!res.lrv.empty()) c["boot"]["w"] = res.w;
  c["bands"] = {{"b", res.bands.bandwidths}, {"ratio_floor", pc.ratio_floor}};
  c["diff"] = {{"h", res.bands.lags.h}, {"h_tilde", res.bands.lags.h_tilde}};
  c["kernel"] = {{"r", pc.check.r}, {"delta", pc.check.delta}};
  if (!res.lrv.empty())
    c["lrv"] = {{"m", res.m}, {"eta", res.eta},
                {"weights", pc.lrv_weights == LrvWeights::epanechnikov ? "epanechnikov" : "kernel"}};
  if (res.algorithm == Variant::plugin) c["plugin"] = {{"tau", res.tau}};
  return c;
}

inline std::string manifest_json(const Panel& panel, const RunConfig& rc, const PipelineResult& res,
                                 const std::string& command, std::size_t threads) {
  ordered_json j;
  j["command"] = command;
  j["algorithm"] = to_string(res.algorithm);
  j["n"] = panel.n();
  j["series"] = panel.names();
  j["domain"] = {{"first", res.curves.domain.first}, {"last", res.curves.domain.last},
                 {"t_first", res.curves.domain.t(res.curves.domain.first)},
                 {"t_last", res.curves.domain.t(res.curves.domain.last)}};
  j["b"] = res.bands.b;
  j["threads"] = threads;
  if (!res.lrv.empty()) {
    j["r_boot"] = res.quantile.r_boot;
    j["trim"] = res.trim;
    j["lrv_reweighted_points"] = res.clamped;
    j["lrv_floored_points"] = res.floored;
  }
  j["auto_selected"] = {{"bandwidth", rc.pipeline.bandwidths.empty()},
                        {"w", !rc.pipeline.w.has_value()},
                        {"eta", !rc.pipeline.eta.has_value()},
                        {"m", rc.pipeline.m.empty()},
                        {"tau", res.algorithm == Variant::plugin && rc.pipeline.tau.empty()}};
  j["config"] = resolved_config(panel, rc, res);
  return j.dump(2) + "\n";
}

/// GCV tables: one row per (target, candidate).
inline std::string gcv_csv(const Panel& panel, const PipelineResult& res) {
  std::ostringstream os;
  os << "target,bandwidth,gcv,selected\n";
  auto rows = [&](const std::string& name, const GcvResult& g) {
    for (std::size_t c = 0; c < g.grid.size(); ++c)
      os << name << ',' << io::fmt(g.grid[c]) << ',' << (std::isnan(g.score[c]) ? "" : io::fmt(g.score[c])) << ','
         << (g.grid[c] == g.selected ? 1 : 0) << '\n';
  };
  for (std::size_t i = 0; i < res.gcv_tau.size(); ++i) rows("tau:" + series_name(panel, i), res.gcv_tau[i]);
  for (std::size_t z = 0; z < res.gcv_b.size(); ++z) {
    const auto& tr = res.bands.triples[z];
    rows("b:" + series_name(panel, tr.i) + ">" + series_name(panel, tr.l) + "@" + std::to_string(tr.k), res.gcv_b[z]);
  }
  return os.str();
}

inline std::string mv_csv(const PipelineResult& res) {
  std::ostringstream os;
  os << "w,eta,s2,mv,selected\n";
  if (!res.mv) return os.str();
  const auto& mv = *res.mv;
  const std::size_t E = mv.eta_grid.size();
  for (std::size_t a = 0; a < mv.w_grid.size(); ++a)
    for (std::size_t e = 0; e < E; ++e) {
      const double v = mv.mv[a * E + e];
      os << mv.w_grid[a] << ',' << io::fmt(mv.eta_grid[e]) << ',' << io::fmt(mv.s2[a * E + e]) << ','
         << (std::isnan(v) ? "" : io::fmt(v)) << ',' << (a == mv.w_index && e == mv.eta_index ? 1 : 0) << '\n';
    }
  return os.str();
}

inline std::string block_csv(const Panel& panel, const PipelineResult& res) {
  std::ostringstream os;
  os << "triple,m,sd,selected\n";
  for (std::size_t z = 0; z < res.m_selection.size(); ++z) {
    const auto& tr = res.bands.triples[z];
    const auto& s = res.m_selection[z];
    const std::string name = series_name(panel, tr.i) + ">" + series_name(panel, tr.l) + "@" + std::to_string(tr.k);
    for (std::size_t g = 0; g < s.grid.size(); ++g)
      os << name << ',' << s.grid[g] << ',' << (std::isnan(s.sd[g]) ? "" : io::fmt(s.sd[g])) << ','
         << (g == s.index ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::string mc_report_json(const sim::McReport& rep, const RunConfig& rc, std::uint64_t master_seed) {
  ordered_json j;
  j["n"] = rep.n;
  j["replicates"] = rep.reps;
  j["failures"] = rep.failures;
  j["master_seed"] = master_seed;
  j["algorithm"] = to_string(rep.variant);
  j["B"] = rc.pipeline.B;
  j["null"] = null_json(rc.null);
  j["trend"] = rc.simulation.trend;
  j["white_noise"] = rc.simulation.white_noise;
  j["mean_selected"] = {{"b", rep.mean_b}, {"w", rep.mean_w}, {"eta", rep.mean_eta}};
  j["fnr_grid"] = rep.fnr_grid;
  j["levels"] = ordered_json::array();
  for (const auto& lv : rep.levels) {
    ordered_json l;
    l["nominal"] = lv.nominal;
    l["coverage"] = lv.coverage;
    l["width"] = lv.width;
    l["recovery"] = lv.recovery;
    l["decision_accuracy"] = lv.decision_accuracy;
    ordered_json fnr = ordered_json::array();
    for (double v : lv.fnr) fnr.push_back(std::isnan(v) ? ordered_json(nullptr) : ordered_json(v));
    l["fnr"] = fnr;
    j["levels"].push_back(l);
  }
  j["errors"] = rep.errors;
  return j.dump(2) + "\n";
}

}  // namespace tvnet::report
