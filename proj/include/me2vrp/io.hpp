#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "me2vrp/ccws.hpp"
#include "me2vrp/experiments.hpp"
#include "me2vrp/model.hpp"

namespace me2vrp {

using json = nlohmann::json;

namespace detail {

inline json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

inline double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

template <typename F>
auto with_schema(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SchemaError(std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(const InstanceSpec& s) {
  json j;
  j["meta"] = {{"T", s.meta.interval_min}, {"h", s.meta.batch}};
  const auto& p = s.params;
  j["params"] = {{"eta_kw", p.transfer.eta_kw},
                 {"efficiency", p.transfer.efficiency},
                 {"ed_capacity_kwh", p.ed_capacity_kwh},
                 {"ed_safety_kwh", p.ed_safety_kwh},
                 {"ep_safety_kwh", p.ep_safety_kwh},
                 {"ed_kwh_per_mile", p.rates.ed_kwh_per_mile},
                 {"ep_kwh_per_mile", p.rates.ep_kwh_per_mile}};
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) j["nodes"].push_back({{"id", n.id}, {"kind", n.kind}});

  const std::size_t n = s.matrix.nodes.size();
  json tt = json::array(), en = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    json rt = json::array(), re = json::array();
    for (std::size_t b = 0; b < n; ++b) {
      rt.push_back(detail::number_or_null(s.matrix.travel_time_min[a * n + b]));
      re.push_back(detail::number_or_null(s.matrix.energy_kwh[a * n + b]));
    }
    tt.push_back(std::move(rt));
    en.push_back(std::move(re));
  }
  j["matrix"] = {{"nodes", s.matrix.nodes}, {"travel_time_min", tt}, {"energy_kwh", en}};

  j["demands"] = json::array();
  for (const auto& d : s.demands) {
    json jd = {{"id", d.id},
               {"route", d.route},
               {"segment_time_min", d.segment_min},
               {"segment_miles", d.segment_miles},
               {"t0_est_min", d.t0_est_min},
               {"max_wait_min", d.max_wait_min},
               {"e0_kwh", d.e0_kwh}};
    if (d.capacity_kwh) jd["capacity_kwh"] = *d.capacity_kwh;
    j["demands"].push_back(std::move(jd));
  }
  j["suppliers"] = json::array();
  for (const auto& e : s.suppliers) {
    j["suppliers"].push_back({{"id", e.id}, {"start_node", e.start_node}, {"e0_kwh", e.e0_kwh}});
  }
  j["links"] = json::array();
  for (const auto& l : s.links) {
    j["links"].push_back({{"from", l.from}, {"to", l.to}, {"time_min", l.time_min}, {"miles", l.miles}});
  }
  return j;
}

namespace detail {

/// Dense {nodes, travel_time_min: [[..]], energy_kwh: [[..]]} or sparse
/// {travel_time_min: [{from, to, value}], energy_kwh: [...]}.
inline NodeMatrix matrix_from_json(const json& m) {
  if (m.contains("nodes")) {
    auto mat = NodeMatrix::over(m.at("nodes").get<std::vector<NodeId>>());
    const std::size_t n = mat.nodes.size();
    const auto& tt = m.at("travel_time_min");
    const auto& en = m.at("energy_kwh");
    if (tt.size() != n || en.size() != n) throw SchemaError("matrix rows do not match its node list");
    for (std::size_t a = 0; a < n; ++a) {
      if (tt[a].size() != n || en[a].size() != n) throw SchemaError("matrix row length mismatch");
      for (std::size_t b = 0; b < n; ++b) {
        mat.travel_time_min[a * n + b] = number_or_nan(tt[a][b]);
        mat.energy_kwh[a * n + b] = number_or_nan(en[a][b]);
      }
    }
    return mat;
  }
  std::set<NodeId> ids;
  for (const char* key : {"travel_time_min", "energy_kwh"}) {
    for (const auto& e : m.at(key)) {
      ids.insert(e.at("from").get<NodeId>());
      ids.insert(e.at("to").get<NodeId>());
    }
  }
  auto mat = NodeMatrix::over({ids.begin(), ids.end()});
  const std::size_t n = mat.nodes.size();
  for (const auto& e : m.at("travel_time_min")) {
    mat.travel_time_min[*mat.index(e.at("from")) * n + *mat.index(e.at("to"))] = e.at("value").get<double>();
  }
  for (const auto& e : m.at("energy_kwh")) {
    mat.energy_kwh[*mat.index(e.at("from")) * n + *mat.index(e.at("to"))] = e.at("value").get<double>();
  }
  return mat;
}

}  // namespace detail

inline InstanceSpec instance_spec_from_json(const json& j) {
  return detail::with_schema("instance", [&] {
    InstanceSpec s;
    if (j.contains("meta")) {
      s.meta.interval_min = j["meta"].value("T", s.meta.interval_min);
      s.meta.batch = j["meta"].value("h", s.meta.batch);
    }
    if (j.contains("params")) {
      const auto& p = j["params"];
      auto& q = s.params;
      q.transfer.eta_kw = p.value("eta_kw", q.transfer.eta_kw);
      q.transfer.efficiency = p.value("efficiency", q.transfer.efficiency);
      q.ed_capacity_kwh = p.value("ed_capacity_kwh", q.ed_capacity_kwh);
      q.ed_safety_kwh = p.value("ed_safety_kwh", q.ed_safety_kwh);
      q.ep_safety_kwh = p.value("ep_safety_kwh", q.ep_safety_kwh);
      q.rates.ed_kwh_per_mile = p.value("ed_kwh_per_mile", q.rates.ed_kwh_per_mile);
      q.rates.ep_kwh_per_mile = p.value("ep_kwh_per_mile", q.rates.ep_kwh_per_mile);
    }
    for (const auto& n : j.at("nodes")) s.nodes.push_back({n.at("id").get<NodeId>(), n.at("kind").get<std::string>()});
    s.matrix = detail::matrix_from_json(j.at("matrix"));
    for (const auto& d : j.at("demands")) {
      DemandSpec ds;
      ds.id = d.at("id").get<EdId>();
      ds.route = d.at("route").get<std::vector<NodeId>>();
      ds.segment_min = d.at("segment_time_min").get<std::vector<double>>();
      ds.segment_miles = d.at("segment_miles").get<std::vector<double>>();
      ds.t0_est_min = d.at("t0_est_min").get<double>();
      ds.max_wait_min = d.at("max_wait_min").get<double>();
      ds.e0_kwh = d.at("e0_kwh").get<double>();
      if (d.contains("capacity_kwh") && !d["capacity_kwh"].is_null()) ds.capacity_kwh = d["capacity_kwh"].get<double>();
      s.demands.push_back(std::move(ds));
    }
    for (const auto& e : j.at("suppliers")) {
      s.suppliers.push_back({e.at("id").get<EpId>(), e.at("start_node").get<NodeId>(),
                             e.value("e0_kwh", 180.0)});
    }
    if (j.contains("links")) {
      for (const auto& l : j["links"]) {
        s.links.push_back({l.at("from").get<NodeId>(), l.at("to").get<NodeId>(), l.at("time_min").get<double>(),
                           l.at("miles").get<double>()});
      }
    }
    return s;
  });
}

inline json to_json(const Action& a) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DepartToServe>) {
          return {{"type", "depart"}, {"ed", x.ed}, {"node", x.node}};
        } else if constexpr (std::is_same_v<T, ServeArc>) {
          return {{"type", "serve"}, {"ed", x.ed}, {"arc", x.arc}, {"e_plus_kwh", x.e_plus_kwh}};
        } else if constexpr (std::is_same_v<T, Continue>) {
          return {{"type", "continue"}, {"ed", x.ed}, {"node", x.node}};
        } else if constexpr (std::is_same_v<T, LocalSwitch>) {
          return {{"type", "local_switch"}, {"from_ed", x.from_ed}, {"to_ed", x.to_ed}, {"node", x.node}};
        } else if constexpr (std::is_same_v<T, DistantSwitch>) {
          return {{"type", "distant_switch"}, {"from_ed", x.from_ed}, {"at_node", x.at_node},
                  {"to_ed", x.to_ed},         {"to_node", x.to_node}};
        } else {
          return {{"type", "return"}, {"ed", x.ed}, {"node", x.node}};
        }
      },
      a);
}

inline Action action_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "depart") return DepartToServe{j.at("ed"), j.at("node")};
  if (type == "serve") {
    if (j.at("arc").get<long long>() < 0) throw SchemaError("negative arc index");
    return ServeArc{j.at("ed"), j.at("arc").get<std::size_t>(), j.at("e_plus_kwh").get<double>()};
  }
  if (type == "continue") return Continue{j.at("ed"), j.at("node")};
  if (type == "local_switch") return LocalSwitch{j.at("from_ed"), j.at("to_ed"), j.at("node")};
  if (type == "distant_switch") return DistantSwitch{j.at("from_ed"), j.at("at_node"), j.at("to_ed"), j.at("to_node")};
  if (type == "return") return ReturnToDepot{j.at("ed"), j.at("node")};
  throw SchemaError("unknown action type '" + type + "'");
}

inline json to_json(const Solution& sol) {
  json j;
  j["objective"] = objective(sol);
  j["waits"] = json::object();
  for (const auto& [ed, w] : sol.waits) j["waits"][std::to_string(ed)] = w;
  j["tours"] = json::array();
  for (const auto& [ep, tour] : sol.tours) {
    json acts = json::array();
    for (const auto& a : tour) acts.push_back(to_json(a));
    j["tours"].push_back({{"ep", ep}, {"actions", std::move(acts)}});
  }
  return j;
}

inline Solution solution_from_json(const json& j) {
  return detail::with_schema("solution", [&] {
    Solution s;
    if (j.contains("waits")) {
      for (const auto& [key, value] : j["waits"].items()) {
        std::size_t used = 0;
        EdId ed = 0;
        try {
          ed = std::stoi(key, &used);
        } catch (const std::logic_error&) {
          used = 0;
        }
        if (used == 0 || used != key.size()) throw SchemaError("wait key '" + key + "' is not an ED id");
        s.waits[ed] = value.get<double>();
      }
    }
    for (const auto& t : j.at("tours")) {
      const EpId ep = t.at("ep").get<EpId>();
      if (s.tours.count(ep)) throw SchemaError("EP " + std::to_string(ep) + " has two tours");
      Tour tour;
      for (const auto& a : t.at("actions")) tour.push_back(action_from_json(a));
      s.tours[ep] = std::move(tour);
    }
    return s;
  });
}

inline json to_json(const CcwsDiagnostics& d) {
  json clusters = json::array();
  for (const auto& c : d.clusters) clusters.push_back({{"id", c.id}, {"eds", c.eds}});
  json statuses = json::array();
  for (auto s : d.sub_statuses) statuses.push_back(std::string(to_string(s)));
  return {{"clusters", clusters},
          {"subproblem_status", statuses},
          {"seed_tours", d.seed_tours},
          {"merges", d.merges},
          {"stage_ms", {{"cluster", d.ms_cluster}, {"subproblems", d.ms_subproblems}, {"merge", d.ms_merge}}}};
}

inline std::vector<LinkLoad> background_from_json(const json& j) {
  return detail::with_schema("background", [&] {
    std::vector<LinkLoad> out;
    for (const auto& l : j.at("links")) {
      LinkLoad x{l.at("from").get<NodeId>(), l.at("to").get<NodeId>(), l.at("free_flow_min").get<double>(),
                 l.at("capacity_vph").get<double>(), l.at("volume_vph").get<double>()};
      if (!(x.capacity_vph > 0.0) || x.volume_vph < 0.0) throw SchemaError("link load needs c > 0 and v >= 0");
      out.push_back(x);
    }
    return out;
  });
}

inline json to_json(const std::vector<LinkLoad>& loads) {
  json links = json::array();
  for (const auto& l : loads) {
    links.push_back({{"from", l.from},
                     {"to", l.to},
                     {"free_flow_min", l.free_flow_min},
                     {"capacity_vph", l.capacity_vph},
                     {"volume_vph", l.volume_vph}});
  }
  return {{"links", links}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << j.dump(1) << '\n';
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// One `feasible=` line, then one line per violation.
inline std::string format_report(const ValidationReport& r) {
  std::ostringstream os;
  os << "feasible=" << (r.feasible ? "true" : "false") << '\n';
  auto field = [](const auto& v) { return v ? std::to_string(*v) : std::string("-"); };
  for (const auto& v : r.violations) {
    os << "constraint=" << v.constraint << " ep=" << field(v.ep) << " ed=" << field(v.ed)
       << " node=" << field(v.node) << " slack=" << format_number(v.slack) << '\n';
  }
  return os.str();
}

inline constexpr const char* kSweepHeader = "cell_id,n_eds,n_eps_dispatched,service_rate,delta_stt_pct,solve_ms,status";

inline std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%zu,%d,%s,%.4f,%.1f,%s\n", r.cell_id, r.n_eds, r.n_eps_dispatched,
                  std::isinf(r.service_rate) ? "inf" : format_number(r.service_rate).c_str(), r.delta_stt_pct,
                  r.solve_ms, r.status.c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace me2vrp
