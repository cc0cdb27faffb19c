// me2vrp command line: gen, solve, validate, impact, sweep.
//
// Exit codes: 0 ok / feasible, 2 bad input, 3 infeasible, 4 timeout with no
// incumbent, 5 validation found violations.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "me2vrp/me2vrp.hpp"

using namespace me2vrp;

namespace {

enum Exit { kOk = 0, kBadInput = 2, kInfeasible = 3, kTimeout = 4, kViolations = 5 };

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << text;
}

Instance load_instance(const std::string& path) { return make_instance(instance_spec_from_json(read_json_file(path))); }

struct GenFlags {
  GenParams p;
  int grid = 6;
  std::string out;
  std::string background;
};

int cmd_gen(GenFlags f) {
  f.p.grid_w = f.p.grid_h = f.grid;
  const auto spec = generate_instance(f.p);
  make_instance(spec);
  emit(f.out, to_json(spec).dump(1) + "\n");
  if (!f.background.empty()) write_json_file(f.background, to_json(generate_background(spec, f.p.seed)));
  return kOk;
}

struct SolveFlags {
  std::string instance;
  std::string method = "ccws";
  double time_limit = 60.0;
  long long node_limit = 0;
  std::size_t cluster_cap = 8;
  double sub_time_limit = 10.0;
  long long sub_node_limit = 20000;
  std::string out;
};

int cmd_solve(const SolveFlags& f) {
  const auto inst = load_instance(f.instance);
  const auto t0 = std::chrono::steady_clock::now();
  SolveResult r;
  json diag;
  if (f.method == "exact") {
    SolveOptions o;
    o.time_limit_s = f.time_limit;
    o.node_limit = f.node_limit;
    r = solve_exact(inst, o);
  } else {
    CcwsOptions o;
    o.cluster_cap = f.cluster_cap;
    o.sub.solve.time_limit_s = f.sub_time_limit;
    o.sub.solve.node_limit = f.sub_node_limit;
    try {
      auto c = ccws_solve(inst, o);
      r = c.result;
      diag = to_json(c.diagnostics);
    } catch (const PipelineError& e) {
      // A cluster with no solution of its own leaves nothing to merge.
      std::cerr << "ccws: " << e.what() << '\n';
      r.status = SolveStatus::infeasible;
    }
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  std::cout << "status=" << to_string(r.status) << " objective=" << (r.objective ? std::to_string(*r.objective) : "-")
            << " ms=" << format_number(ms) << '\n';
  if (r.solution) {
    json j = to_json(*r.solution);
    j["status"] = std::string(to_string(r.status));
    j["nodes_explored"] = r.nodes_explored;
    if (!diag.is_null()) j["diagnostics"] = diag;
    if (!f.out.empty()) write_json_file(f.out, j);
  }
  if (r.status == SolveStatus::infeasible) return kInfeasible;
  if (!r.solution) return kTimeout;
  return kOk;
}

int cmd_validate(const std::string& instance, const std::string& solution) {
  const auto inst = load_instance(instance);
  const auto sol = solution_from_json(read_json_file(solution));
  const auto report = validate(inst, sol);
  std::cout << format_report(report);
  return report.feasible ? kOk : kViolations;
}

struct ImpactFlags {
  std::string instance;
  std::string solution;
  std::string background;
  double pce = 1.0;
  double capacity_scale = 1.0;
  std::string out;
};

int cmd_impact(const ImpactFlags& f) {
  const auto inst = load_instance(f.instance);
  const auto sol = solution_from_json(read_json_file(f.solution));
  auto bg = background_from_json(read_json_file(f.background));
  for (auto& l : bg) l.capacity_vph *= f.capacity_scale;
  const auto vol = ep_link_volumes(inst, sol, bg, f.pce);
  const auto r = stt_impact(bg, vol);
  std::ostringstream os;
  os << "from,to,ep_volume_vph,delta_stt_min\n";
  for (std::size_t k = 0; k < bg.size(); ++k) {
    os << bg[k].from << ',' << bg[k].to << ',' << format_number(vol[k]) << ',' << format_number(r.per_link[k]) << '\n';
  }
  os << "# stt_base_min=" << format_number(r.stt_base) << " stt_with_eps_min=" << format_number(r.stt_with_eps)
     << " delta_stt_pct=" << format_number(r.delta_pct) << '\n';
  emit(f.out, os.str());
  return kOk;
}

struct SweepFlags {
  GenParams base;
  int grid = 6;
  std::vector<double> ratios{0.05, 0.25};
  std::vector<double> inventories;
  int seeds = 1;
  std::string method = "ccws";
  double time_limit = 60.0;
  std::string out;
};

int cmd_sweep(const SweepFlags& f) {
  std::vector<SweepCell> cells;
  auto inventories = f.inventories.empty() ? std::vector<double>{f.base.ep_e0_kwh} : f.inventories;
  for (double ratio : f.ratios) {
    for (double inv : inventories) {
      for (int s = 0; s < f.seeds; ++s) {
        SweepCell c;
        c.gen = f.base;
        c.gen.grid_w = c.gen.grid_h = f.grid;
        c.gen.ed_ratio = ratio;
        c.gen.ep_e0_kwh = inv;
        c.gen.seed = f.base.seed + static_cast<std::uint64_t>(s);
        c.method = f.method == "exact" ? Method::exact : Method::ccws;
        c.exact.time_limit_s = f.time_limit;
        cells.push_back(c);
      }
    }
  }
  emit(f.out, format_sweep(sweep(cells)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mobile energy-to-vehicle routing: generate, solve, validate, assess traffic impact"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* g = app.add_subcommand("gen", "Write a synthetic instance");
  g->add_option("--seed", gen.p.seed, "RNG seed");
  g->add_option("--eds", gen.p.n_eds, "Number of EDs")->check(CLI::PositiveNumber);
  g->add_option("--eps", gen.p.n_eps, "Number of EPs")->check(CLI::PositiveNumber);
  g->add_option("--depots", gen.p.n_depots, "Number of depots")->check(CLI::PositiveNumber);
  g->add_option("--ed-ratio", gen.p.ed_ratio, "Energy shortfall per trip mile (kWh/mile)")->check(CLI::NonNegativeNumber);
  g->add_option("--grid", gen.grid, "Grid side in blocks")->check(CLI::Range(2, 1000));
  g->add_option("--window", gen.p.window_min, "Planned start window (min)")->check(CLI::PositiveNumber);
  g->add_option("--max-wait", gen.p.max_wait_min, "Wait tolerance of every ED (min)")->check(CLI::NonNegativeNumber);
  g->add_option("--ep-e0", gen.p.ep_e0_kwh, "EP starting inventory (kWh)")->check(CLI::PositiveNumber);
  g->add_option("-o,--out", gen.out, "Output file (stdout if omitted)");
  g->add_option("--background", gen.background, "Also write background link loads here");

  SolveFlags solve;
  auto* s = app.add_subcommand("solve", "Solve an instance");
  s->add_option("--instance", solve.instance, "Instance file")->required();
  s->add_option("--method", solve.method, "exact or ccws")->check(CLI::IsMember({"exact", "ccws"}));
  s->add_option("--time-limit", solve.time_limit, "Exact solver wall-clock limit (s)")->check(CLI::PositiveNumber);
  s->add_option("--node-limit", solve.node_limit, "Exact solver node budget (0 = none)")->check(CLI::NonNegativeNumber);
  s->add_option("--cluster-cap", solve.cluster_cap, "Largest ccws cluster")->check(CLI::PositiveNumber);
  s->add_option("--sub-time-limit", solve.sub_time_limit, "Per-cluster limit (s)")->check(CLI::PositiveNumber);
  s->add_option("--sub-node-limit", solve.sub_node_limit, "Per-cluster node budget")->check(CLI::NonNegativeNumber);
  s->add_option("-o,--out", solve.out, "Solution file");

  std::string v_instance, v_solution;
  auto* v = app.add_subcommand("validate", "Check a solution against every constraint");
  v->add_option("--instance", v_instance, "Instance file")->required();
  v->add_option("--solution", v_solution, "Solution file")->required();

  ImpactFlags impact;
  auto* im = app.add_subcommand("impact", "Change in background system travel time");
  im->add_option("--instance", impact.instance, "Instance file")->required();
  im->add_option("--solution", impact.solution, "Solution file")->required();
  im->add_option("--background", impact.background, "Link-load file")->required();
  im->add_option("--pce", impact.pce, "Vehicle equivalents per EP traversal")->check(CLI::NonNegativeNumber);
  im->add_option("--capacity-scale", impact.capacity_scale, "Multiply every link capacity")->check(CLI::PositiveNumber);
  im->add_option("-o,--out", impact.out, "CSV file (stdout if omitted)");

  SweepFlags sw;
  auto* sp = app.add_subcommand("sweep", "Service rate and traffic impact over scenario cells");
  sp->add_option("--seed", sw.base.seed, "First seed");
  sp->add_option("--seeds", sw.seeds, "Seeds per cell")->check(CLI::PositiveNumber);
  sp->add_option("--eds", sw.base.n_eds, "Number of EDs")->check(CLI::PositiveNumber);
  sp->add_option("--eps", sw.base.n_eps, "Number of EPs")->check(CLI::PositiveNumber);
  sp->add_option("--grid", sw.grid, "Grid side in blocks")->check(CLI::Range(2, 1000));
  sp->add_option("--ed-ratios", sw.ratios, "E/d ratios to sweep")->delimiter(',');
  sp->add_option("--inventories", sw.inventories, "EP inventories to sweep (kWh)")->delimiter(',');
  sp->add_option("--method", sw.method, "exact or ccws")->check(CLI::IsMember({"exact", "ccws"}));
  sp->add_option("--time-limit", sw.time_limit, "Exact solver limit per cell (s)")->check(CLI::PositiveNumber);
  sp->add_option("-o,--out", sw.out, "CSV file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (s->parsed()) return cmd_solve(solve);
    if (v->parsed()) return cmd_validate(v_instance, v_solution);
    if (im->parsed()) return cmd_impact(impact);
    if (sp->parsed()) return cmd_sweep(sw);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}
