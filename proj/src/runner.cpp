#include "automarg/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace automarg {

Mode parse_mode(const std::string& s) {
  if (s == "hmc") return Mode::Hmc;
  if (s == "hmc-m") return Mode::HmcM;
  if (s == "hmc-r") return Mode::HmcR;
  throw std::invalid_argument("unknown mode '" + s + "'; expected hmc, hmc-m or hmc-r");
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Hmc: return "hmc";
    case Mode::HmcM: return "hmc-m";
    case Mode::HmcR: return "hmc-r";
  }
  return "?";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("dataset '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> headers;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) headers.push_back(cell);
  }
  if (headers.empty()) throw std::runtime_error("dataset '" + path + "' has no columns");

  Dataset d;
  for (const std::string& h : headers) d.columns[h];
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= headers.size())
        throw std::runtime_error(path + ": row " + std::to_string(row) +
                                 " has more cells than the header");
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size() || cell.empty())
        throw std::runtime_error(path + ": column '" + headers[col] + "' row " +
                                 std::to_string(row) + " is not numeric: '" + cell + "'");
      d.columns[headers[col]].push_back(v);
      ++col;
    }
    if (col != headers.size())
      throw std::runtime_error(path + ": row " + std::to_string(row) +
                               " has fewer cells than the header");
  }
  return d;
}

namespace {

// Columns each model's builder actually reads; extras only get a warning.
std::vector<std::string> schema_columns(const std::string& model) {
  if (model == "eight_schools") return {"y", "sigma"};
  if (model == "repeated_binary_trials") return {"K", "y"};
  if (model == "electric_company") return {"g", "p", "t", "y"};
  if (model == "pulmonary_fibrosis") return {"id", "t", "y"};
  return {};
}

bool reparam_eligible(const GraphicalModel& m, NodeId id) {
  const ModelNode& n = m.node(id);
  if (n.observed || n.family != Family::Normal) return false;
  for (NodeId p : n.parents) {
    const ModelNode& pn = m.node(p);
    if (pn.alive && !pn.observed) return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentReport run(const RunConfig& config) {
  const ZooEntry& entry = zoo_entry(config.model);
  Dataset data;
  if (!config.data_path.empty()) {
    data = load_dataset(config.data_path);
    auto schema = schema_columns(config.model);
    for (const auto& [name, col] : data.columns) {
      bool known = false;
      for (const auto& s : schema) known = known || s == name;
      if (!known)
        std::cerr << "warning: ignoring extra column '" << name << "' in "
                  << config.data_path << "\n";
    }
  } else {
    data = entry.default_data();
  }

  GraphicalModel model = entry.build(data);
  ExperimentReport report;
  report.original_dim = static_cast<int>(model.latent_nodes().size());

  RecoveryStack stack;
  auto t0 = std::chrono::steady_clock::now();
  if (config.mode == Mode::HmcM) {
    MarginalizeOptions opts;
    opts.exempt = config.exempt ? *config.exempt : entry.default_exempt;
    MarginalizeResult res = marginalize(model, opts);
    stack = std::move(res.stack);
    report.transformation_log = std::move(res.log);
  } else if (config.mode == Mode::HmcR) {
    bool any = false;
    for (NodeId id : model.topo_order()) {
      if (reparam_eligible(model, id)) {
        reparam_noncentered(model, id);
        any = true;
      }
    }
    if (!any)
      throw std::invalid_argument(
          "mode hmc-r requires at least one Normal latent whose parameters "
          "depend on another latent; model '" + config.model + "' has none");
  }

  LogDensityFn fn = build_logdensity(model);
  report.reduced_dim = fn.dim();
  report.transform_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (config.explain) {
    for (const ReversalEvent& ev : report.transformation_log)
      std::cerr << "reverse " << model.node(ev.v).name << " -> " << model.node(ev.c).name
                << " [" << ev.pattern << "]\n";
  }

  auto t1 = std::chrono::steady_clock::now();
  std::vector<Trace> traces = run_chains(fn, config.nuts);

  // Recover marginalized variables per draw (hmc-m only).
  std::vector<std::string> recovered_names;
  std::vector<std::vector<std::vector<double>>> recovered;  // chain x draw x var
  if (!stack.empty()) {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it)
      recovered_names.push_back(it->name);
    recovered.resize(traces.size());
    for (std::size_t c = 0; c < traces.size(); ++c) {
      std::mt19937_64 rng(config.nuts.seed + 0x9e3779b97f4a7c15ull + c);
      for (const auto& row : traces[c].draws) {
        Assignment a;
        for (std::size_t v = 0; v < fn.latent_ids().size(); ++v)
          a.set(fn.latent_ids()[v], row[v]);
        Assignment full = recover(model, stack, std::move(a), rng);
        std::vector<double> vals;
        vals.reserve(stack.size());
        for (auto it = stack.rbegin(); it != stack.rend(); ++it)
          vals.push_back(full.get(it->id));
        recovered[c].push_back(std::move(vals));
      }
    }
  }
  report.sampling_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();

  report.ess = summarize(traces, report.sampling_time_s);
  for (const Trace& t : traces) report.total_divergent += t.num_divergent();

  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["model"] = config.model;
  j["mode"] = mode_name(config.mode);
  j["seed"] = config.nuts.seed;
  j["sampler"] = {{"warmup", config.nuts.warmup},
                  {"draws", config.nuts.draws},
                  {"chains", config.nuts.chains},
                  {"max_tree_depth", config.nuts.max_tree_depth},
                  {"target_accept", config.nuts.target_accept}};
  j["original_dim"] = report.original_dim;
  j["reduced_dim"] = report.reduced_dim;
  nlohmann::ordered_json log = nlohmann::ordered_json::array();
  for (const ReversalEvent& ev : report.transformation_log)
    log.push_back({{"parent", model.node(ev.v).name},
                   {"child", model.node(ev.c).name},
                   {"pattern", ev.pattern}});
  j["transformation_log"] = log;
  nlohmann::ordered_json ess_obj;
  for (std::size_t i = 0; i < report.ess.names.size(); ++i)
    ess_obj[report.ess.names[i]] = report.ess.ess[i];
  j["ess"] = ess_obj;
  j["min_ess"] = report.ess.min_ess;
  j["min_ess_variable"] = report.ess.min_ess_name;
  j["divergent"] = report.total_divergent;
  j["wall_time_s"] = report.sampling_time_s;
  j["transform_time_s"] = report.transform_time_s;
  j["min_ess_per_s"] =
      report.sampling_time_s > 0.0 ? report.ess.min_ess / report.sampling_time_s : 0.0;
  report.json = j.dump(2);

  if (!config.out_path.empty()) {
    std::ofstream out(config.out_path);
    if (!out) throw std::runtime_error("cannot write report to '" + config.out_path + "'");
    out << report.json << "\n";
  }

  if (!config.draws_csv_path.empty()) {
    std::ofstream csv(config.draws_csv_path);
    if (!csv)
      throw std::runtime_error("cannot write draws to '" + config.draws_csv_path + "'");
    csv << "chain,draw";
    for (const auto& n : traces[0].names) csv << "," << n;
    for (const auto& n : recovered_names) csv << "," << n;
    csv << "\n";
    for (std::size_t c = 0; c < traces.size(); ++c) {
      for (std::size_t i = 0; i < traces[c].draws.size(); ++i) {
        csv << c << "," << i;
        for (double v : traces[c].draws[i]) csv << "," << format_double(v);
        if (!recovered.empty())
          for (double v : recovered[c][i]) csv << "," << format_double(v);
        csv << "\n";
      }
    }
  }
  return report;
}

}  // namespace automarg
