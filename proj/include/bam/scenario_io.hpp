#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bam/core.hpp"
#include "bam/sim.hpp"

namespace bam {

namespace detail {

using nlohmann::json;

inline json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

template <typename T>
T field(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const std::string& where, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, where, key);
}

inline LinkId parse_link_key(const std::string& s, const std::string& where) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ParseError(where + ": link key '" + s + "' is not i-j");
  try {
    return {std::stoi(s.substr(0, dash)), std::stoi(s.substr(dash + 1))};
  } catch (const std::exception&) {
    throw ParseError(where + ": link key '" + s + "' is not i-j");
  }
}

inline NetworkGraph parse_topology(const json& topo, const std::string& where) {
  NetworkGraph g;
  if (!topo.contains("switches")) throw ParseError(where + ": missing field 'switches'");
  const json& sw = topo.at("switches");
  if (sw.is_number_unsigned()) {
    for (std::size_t i = 0; i < sw.get<std::size_t>(); ++i)
      g.add_switch("sw" + std::to_string(i));
  } else if (sw.is_array()) {
    for (const auto& name : sw) g.add_switch(name.get<std::string>());
  } else {
    throw ParseError(where + ".switches: expected a count or a list of names");
  }
  for (const json& l : field<json>(topo, where, "links")) {
    const auto from = field<SwitchId>(l, where + ".links", "from");
    const auto to = field<SwitchId>(l, where + ".links", "to");
    const Kbps bw = kbps_from_mbps(field<double>(l, where + ".links", "bandwidth_mbps"));
    try {
      g.add_link({from, to}, bw);
      if (field_or<bool>(l, where + ".links", "bidirectional", true))
        g.add_link({to, from}, bw);
    } catch (const ConfigError& e) {
      throw ParseError(where + ".links: " + e.what());
    }
  }
  return g;
}

}  // namespace detail

// Parses a scenario document. Sections: topology (inline object or a path to
// a topology file, resolved relative to the scenario file), paths, class
// table, model selection, workload phases, seeds, duration. Constraints may
// be given as a percentage of the link bandwidth or as absolute Mbps; phase
// intensity as absolute arrival rates or as offered-load multipliers of each
// class constraint.
inline Scenario parse_scenario(const std::filesystem::path& path) {
  using detail::field;
  using detail::field_or;
  using nlohmann::json;

  const json doc = detail::load_json(path);
  const std::string where = path.filename().string();
  Scenario s;

  s.name = field_or<std::string>(doc, where, "name", path.stem().string());
  s.description = field_or<std::string>(doc, where, "description", "");
  s.seed = field_or<std::uint64_t>(doc, where, "seed", 1);
  s.duration = ticks_from_seconds(field<double>(doc, where, "duration_s"));

  // topology
  if (!doc.contains("topology")) throw ParseError(where + ": missing field 'topology'");
  if (doc.at("topology").is_string()) {
    const auto topo_path = path.parent_path() / doc.at("topology").get<std::string>();
    s.graph = detail::parse_topology(detail::load_json(topo_path), topo_path.filename().string());
  } else {
    s.graph = detail::parse_topology(doc.at("topology"), where + ".topology");
  }

  // paths
  const json paths = field_or<json>(doc, where, "paths", json("shortest-hop"));
  if (paths.is_string() && paths.get<std::string>() == "shortest-hop") {
    s.paths = PathTable::shortest_hop(s.graph);
  } else if (paths.is_array()) {
    for (const json& p : paths) {
      const auto hops = field<std::vector<SwitchId>>(p, where + ".paths", "hops");
      if (hops.size() < 2) throw ParseError(where + ".paths: a path needs at least two switches");
      std::vector<LinkId> segs;
      for (std::size_t i = 1; i < hops.size(); ++i) segs.push_back({hops[i - 1], hops[i]});
      try {
        s.paths.add(hops.front(), hops.back(), std::move(segs), s.graph);
      } catch (const ConfigError& e) {
        throw ParseError(where + ".paths: " + e.what());
      }
    }
  } else {
    throw ParseError(where + ".paths: expected \"shortest-hop\" or a list of paths");
  }

  // class table (global; per-link class overrides via link_classes)
  auto parse_classes = [&](const json& arr, const std::string& cw, Kbps lb) {
    std::vector<TrafficClassConfig> classes;
    for (const json& c : arr) {
      TrafficClassConfig tc;
      tc.id = field<ClassId>(c, cw, "id");
      tc.priority = field<int>(c, cw, "priority");
      if (c.contains("bc_mbps"))
        tc.bc = kbps_from_mbps(field<double>(c, cw, "bc_mbps"));
      else
        tc.bc = static_cast<Kbps>(static_cast<double>(lb) *
                                      field<double>(c, cw, "bc_percent") / 100.0 +
                                  0.5);
      tc.sharing = field<double>(c, cw, "sharing_percent") / 100.0;
      classes.push_back(tc);
    }
    return classes;
  };

  const auto default_model_str = field_or<std::string>(doc, where, "model", "atcs");
  const auto default_model = model_from_string(default_model_str);
  if (!default_model) throw ParseError(where + ".model: unknown model '" + default_model_str + "'");

  const json link_models = field_or<json>(doc, where, "link_models", json::object());
  const json link_classes = field_or<json>(doc, where, "link_classes", json::object());
  if (!doc.contains("classes")) throw ParseError(where + ": missing field 'classes'");

  for (const auto& [link, lb] : s.graph.links()) {
    LinkBamConfig cfg;
    cfg.link = link;
    cfg.model = *default_model;
    const std::string key = to_string(link);
    if (link_models.contains(key)) {
      const auto m = model_from_string(link_models.at(key).get<std::string>());
      if (!m) throw ParseError(where + ".link_models." + key + ": unknown model");
      cfg.model = *m;
    }
    if (link_classes.contains(key))
      cfg.classes = parse_classes(link_classes.at(key), where + ".link_classes." + key, lb);
    else
      cfg.classes = parse_classes(doc.at("classes"), where + ".classes", lb);
    try {
      validate_link_config(cfg, lb);
    } catch (const ConfigError& e) {
      throw InvalidScenario(where + ": link " + key + ": " + e.what());
    }
    s.link_configs[link] = std::move(cfg);
  }

  // users
  for (const json& u : field_or<json>(doc, where, "users", json::array())) {
    const auto cls = field<ClassId>(u, where + ".users", "class");
    s.workload.users[cls].push_back(field<std::string>(u, where + ".users", "name"));
  }

  // workload
  if (!doc.contains("workload")) throw ParseError(where + ": missing field 'workload'");
  const json& w = doc.at("workload");
  const std::string ww = where + ".workload";
  s.workload.source = field<SwitchId>(w, ww, "source");
  s.workload.destination = field<SwitchId>(w, ww, "destination");
  const json& demand = field<json>(w, ww, "demand_mbps");
  s.workload.demand_low = kbps_from_mbps(field<double>(demand, ww + ".demand_mbps", "low"));
  s.workload.demand_high = kbps_from_mbps(field<double>(demand, ww + ".demand_mbps", "high"));
  s.workload.mean_holding_s = field<double>(w, ww, "mean_holding_s");

  const json phases = field<json>(w, ww, "phases");
  if (!phases.is_array() || phases.empty())
    throw ParseError(ww + ".phases: expected a non-empty list");

  // Multipliers resolve against the class constraints on the first link of
  // the workload path: lambda = m * BC / (mean demand * mean holding).
  const auto* wpath = s.paths.find(s.workload.source, s.workload.destination);
  if (!wpath) throw InvalidScenario(ww + ": no path for source/destination");
  const auto& first_link_cfg = s.link_configs.at(wpath->front());
  const double mean_demand_kbps =
      static_cast<double>(s.workload.demand_low + s.workload.demand_high) / 2.0;

  for (std::size_t i = 0; i < phases.size(); ++i) {
    const std::string pw = ww + ".phases[" + std::to_string(i) + "]";
    PhaseProfile pp;
    pp.duration = ticks_from_seconds(field<double>(phases[i], pw, "duration_s"));
    const bool has_rate = phases[i].contains("arrival_per_s");
    const bool has_mult = phases[i].contains("load_multiplier");
    if (has_rate == has_mult)
      throw ParseError(pw + ": give exactly one of arrival_per_s / load_multiplier");
    const json& spec = phases[i].at(has_rate ? "arrival_per_s" : "load_multiplier");
    for (const auto& [cls_str, value] : spec.items()) {
      ClassId cls;
      try {
        cls = std::stoi(cls_str);
      } catch (const std::exception&) {
        throw ParseError(pw + ": class key '" + cls_str + "' is not an integer");
      }
      const double v = value.get<double>();
      if (has_rate) {
        pp.arrival_rate[cls] = v;
      } else {
        const auto it = std::find_if(first_link_cfg.classes.begin(), first_link_cfg.classes.end(),
                                     [&](const auto& c) { return c.id == cls; });
        if (it == first_link_cfg.classes.end())
          throw ParseError(pw + ": class " + cls_str + " not in the class table");
        pp.arrival_rate[cls] = v * static_cast<double>(it->bc) /
                               (mean_demand_kbps * s.workload.mean_holding_s);
      }
    }
    s.workload.phases.push_back(std::move(pp));
  }

  // report link defaults to the first link of the workload path
  if (doc.contains("report_link"))
    s.report_link = detail::parse_link_key(doc.at("report_link").get<std::string>(), where);
  else
    s.report_link = wpath->front();

  try {
    s.validate();
  } catch (const Error& e) {
    throw InvalidScenario(where + ": " + e.what());
  }
  return s;
}

// Canonical emitter; parse(emit(s)) reproduces the scenario. Multipliers are
// emitted as the resolved arrival rates.
inline nlohmann::json emit_scenario(const Scenario& s) {
  using nlohmann::json;
  json doc;
  doc["name"] = s.name;
  if (!s.description.empty()) doc["description"] = s.description;
  doc["seed"] = s.seed;
  doc["duration_s"] = seconds_from_ticks(s.duration);

  json topo;
  topo["switches"] = s.graph.switches();
  json links = json::array();
  for (const auto& [id, bw] : s.graph.links()) {
    json l;
    l["from"] = id.from;
    l["to"] = id.to;
    l["bandwidth_mbps"] = mbps_from_kbps(bw);
    l["bidirectional"] = false;
    links.push_back(std::move(l));
  }
  topo["links"] = std::move(links);
  doc["topology"] = std::move(topo);

  json paths = json::array();
  for (const auto& [key, segs] : s.paths.entries()) {
    json p;
    std::vector<SwitchId> hops{key.first};
    for (const auto& seg : segs) hops.push_back(seg.to);
    p["hops"] = hops;
    paths.push_back(std::move(p));
  }
  doc["paths"] = std::move(paths);

  // Class tables are emitted per link; the global section stays for parsers.
  json link_models = json::object();
  json link_classes = json::object();
  for (const auto& [id, cfg] : s.link_configs) {
    const std::string key = to_string(id);
    link_models[key] = to_string(cfg.model);
    json classes = json::array();
    for (const auto& c : cfg.classes) {
      json jc;
      jc["id"] = c.id;
      jc["priority"] = c.priority;
      jc["bc_mbps"] = mbps_from_kbps(c.bc);
      // snapped to 1e-6 so emit/parse round-trips are stable
      jc["sharing_percent"] = std::round(c.sharing * 100.0 * 1e6) / 1e6;
      classes.push_back(std::move(jc));
    }
    link_classes[key] = std::move(classes);
  }
  doc["classes"] = link_classes.begin().value();
  doc["link_models"] = std::move(link_models);
  doc["link_classes"] = std::move(link_classes);

  json users = json::array();
  for (const auto& [cls, names] : s.workload.users)
    for (const auto& name : names) users.push_back({{"name", name}, {"class", cls}});
  if (!users.empty()) doc["users"] = std::move(users);

  json w;
  w["source"] = s.workload.source;
  w["destination"] = s.workload.destination;
  w["demand_mbps"] = {{"low", mbps_from_kbps(s.workload.demand_low)},
                      {"high", mbps_from_kbps(s.workload.demand_high)}};
  w["mean_holding_s"] = s.workload.mean_holding_s;
  json phases = json::array();
  for (const auto& p : s.workload.phases) {
    json jp;
    jp["duration_s"] = seconds_from_ticks(p.duration);
    json rates = json::object();
    for (const auto& [cls, rate] : p.arrival_rate) rates[std::to_string(cls)] = rate;
    jp["arrival_per_s"] = std::move(rates);
    phases.push_back(std::move(jp));
  }
  w["phases"] = std::move(phases);
  doc["workload"] = std::move(w);
  doc["report_link"] = to_string(s.report_link);
  return doc;
}

// ---------------------------------------------------------------------------
// Transparency export: the published class configuration, derivable from the
// scenario document alone. Machine- and human-readable forms.

inline nlohmann::json transparency_json(const Scenario& s) {
  using nlohmann::json;
  json doc;
  doc["scenario"] = s.name;

  // Class parameters are uniform across links in the bundled scenarios, but
  // are published per link to stay truthful when they are not.
  json links = json::object();
  for (const auto& [id, cfg] : s.link_configs) {
    json l;
    l["model"] = to_string(cfg.model);
    l["bandwidth_mbps"] = mbps_from_kbps(s.graph.bandwidth(id));
    json classes = json::array();
    for (const auto& c : cfg.classes) {
      json jc;
      jc["id"] = c.id;
      jc["priority"] = c.priority;
      jc["bc_mbps"] = mbps_from_kbps(c.bc);
      jc["bc_percent_of_link"] =
          100.0 * static_cast<double>(c.bc) / static_cast<double>(s.graph.bandwidth(id));
      jc["sharing_percent"] = c.sharing * 100.0;
      classes.push_back(std::move(jc));
    }
    l["classes"] = std::move(classes);
    links[to_string(id)] = std::move(l);
  }
  doc["links"] = std::move(links);

  std::size_t n_classes = 0;
  if (!s.link_configs.empty()) n_classes = s.link_configs.begin()->second.classes.size();
  doc["traffic_class_count"] = n_classes;

  json users = json::object();
  for (const auto& [cls, names] : s.workload.users) users[std::to_string(cls)] = names;
  doc["user_to_class_mapping"] = std::move(users);
  return doc;
}

inline std::string transparency_text(const Scenario& s) {
  std::ostringstream os;
  os << "Published traffic management configuration - scenario '" << s.name << "'\n";
  std::size_t n_classes = 0;
  if (!s.link_configs.empty()) n_classes = s.link_configs.begin()->second.classes.size();
  os << "Traffic classes: " << n_classes << "\n\n";
  os << "User-to-class mapping:\n";
  if (s.workload.users.empty()) os << "  (none declared)\n";
  for (const auto& [cls, names] : s.workload.users) {
    os << "  TC" << cls << ":";
    for (const auto& n : names) os << " " << n;
    os << "\n";
  }
  os << "\nPer-link configuration (model, class constraints, sharing limits):\n";
  for (const auto& [id, cfg] : s.link_configs) {
    os << "  link " << to_string(id) << ": model=" << to_string(cfg.model)
       << " bandwidth=" << mbps_from_kbps(s.graph.bandwidth(id)) << " Mbps\n";
    for (const auto& c : cfg.classes) {
      char line[160];
      std::snprintf(line, sizeof line,
                    "    TC%d: priority=%d bc=%.2f Mbps (%.2f%% of link) sharing=%.2f%%\n",
                    c.id, c.priority, mbps_from_kbps(c.bc),
                    100.0 * static_cast<double>(c.bc) /
                        static_cast<double>(s.graph.bandwidth(id)),
                    c.sharing * 100.0);
      os << line;
    }
  }
  return os.str();
}

}  // namespace bam
