#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "tvnet/tvnet.hpp"

namespace fs = std::filesystem;
using namespace tvnet;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  bool tune_report = false;
  std::optional<std::size_t> reps;
};

RunConfig prepare(const Options& opt) {
  RunConfig rc = opt.config.empty() ? parse_config(nlohmann::json::object()) : load_config(opt.config);
  if (opt.seed) rc.pipeline.seed = *opt.seed;
  rc.pipeline.threads = opt.threads.value_or(0);
  if (!opt.out.empty()) rc.output = opt.out;
  return rc;
}

void add_tune_tables(io::OutputBundle& out, const Panel& panel, const PipelineResult& res) {
  out.add("tune_gcv.csv", report::gcv_csv(panel, res));
  out.add("tune_mv.csv", report::mv_csv(res));
  out.add("tune_m.csv", report::block_csv(panel, res));
}

/// Design indices for the requested snapshot times, or the whole domain.
std::vector<long> snapshot_indices(const RunConfig& rc, const EvalDomain& d) {
  std::vector<long> idx;
  if (rc.snapshots.empty()) {
    for (long j = d.first; j <= d.last; ++j) idx.push_back(j);
    return idx;
  }
  for (double t : rc.snapshots) {
    const long j = std::lround(t * static_cast<double>(d.n));
    if (!d.contains(j))
      throw DomainError("snapshot time " + io::fmt(t) + " lies outside the evaluation domain [" +
                        io::fmt(d.t(d.first)) + ", " + io::fmt(d.t(d.last)) + "]");
    idx.push_back(j);
  }
  return idx;
}

int run_data_command(const std::string& command, const Options& opt) {
  const RunConfig rc = prepare(opt);
  if (rc.input.empty()) throw ConfigError("config key 'input' is required for " + command);
  const Panel panel = io::read_csv(rc.input);
  panel.validate();
  PipelineConfig pc = rc.pipeline;
  pc.triples = rc.triples.resolve(panel.names());
  pc.bands = command != "estimate";
  const auto res = run_pipeline(panel, pc, FourthOrderKernel{});

  io::OutputBundle out;
  out.add("curves.csv", report::curves_csv(panel, res));
  if (command == "bands" || command == "network" || command == "tune")
    out.add("bootstrap.json", report::bootstrap_json(res.quantile));
  if (command == "network") {
    const NullSpec nulls = NullSpec::uniform(res.band.triples.size(), rc.null);
    const auto snaps = connect(res.band, nulls);
    for (long j : snapshot_indices(rc, res.band.domain))
      out.add("network_" + std::to_string(j) + ".json",
              report::network_json(panel, snaps[static_cast<std::size_t>(j - res.band.domain.first)]));
    auto cells = confidence_heatmap(res.band, res.quantile.draws, nulls);
    out.add("heatmap.csv", report::heatmap_csv(panel, cells));
  }
  if (command == "tune" || opt.tune_report) add_tune_tables(out, panel, res);
  out.add("manifest.json", report::manifest_json(panel, rc, res, command, resolve_threads(pc.threads)));
  out.commit(rc.output);
  std::cerr << command << ": wrote " << out.files().size() << " files to " << rc.output.string() << '\n';
  return 0;
}

int run_simulate(const Options& opt) {
  const RunConfig rc = prepare(opt);
  sim::McConfig mc;
  mc.n = rc.simulation.n;
  mc.reps = opt.reps.value_or(rc.simulation.reps);
  mc.master_seed = rc.pipeline.seed;
  mc.nominal = rc.simulation.nominal;
  mc.null = rc.null;
  mc.fnr_grid = rc.simulation.fnr_grid;
  mc.with_trend = rc.simulation.trend;
  mc.white_noise = rc.simulation.white_noise;
  mc.pipeline = rc.pipeline;
  mc.pipeline.triples = rc.triples.resolve({"y1", "y2", "y3"});
  const auto rep = sim::monte_carlo(mc, FourthOrderKernel{});
  const fs::path target = opt.out.empty() ? fs::path("report.json") : fs::path(opt.out);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  io::write_atomic(target, report::mc_report_json(rep, rc, mc.master_seed));
  std::cerr << "simulate: " << rep.reps - rep.failures << "/" << rep.reps << " replicates, report at "
            << target.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-varying lagged cross-correlation networks with simultaneous confidence bands"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON run configuration");
    sub->add_option("--seed", opt.seed, "bootstrap seed (master seed for simulate)");
    sub->add_option("--threads", opt.threads, "worker threads, 0 = all cores");
    sub->add_option("--out", opt.out, "output directory (report file for simulate)");
  };
  for (const char* name : {"estimate", "bands", "network", "tune"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "estimate" ? "correlation curves only"
                                          : std::string(name) == "bands"  ? "curves and simultaneous bands"
                                          : std::string(name) == "network"
                                              ? "bands, network snapshots and heatmap"
                                              : "tuning-parameter selection tables");
    common(sub);
    sub->add_flag("--tune-report", opt.tune_report, "also write the GCV and minimum-volatility tables");
  }
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation on the built-in design");
  common(simulate);
  simulate->add_option("--reps", opt.reps, "number of replicates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (simulate->parsed()) return run_simulate(opt);
    for (const auto* sub : app.get_subcommands()) return run_data_command(sub->get_name(), opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
