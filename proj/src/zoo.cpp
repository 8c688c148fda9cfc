#include "automarg/zoo.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace automarg {

const std::vector<double>& Dataset::column(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end())
    throw std::invalid_argument("dataset is missing column '" + name + "'");
  return it->second;
}

std::vector<int> Dataset::int_column(const std::string& name) const {
  const auto& col = column(name);
  std::vector<int> out;
  out.reserve(col.size());
  for (double v : col) {
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
      throw std::invalid_argument("column '" + name + "' must be integer-valued");
    out.push_back(static_cast<int>(r));
  }
  return out;
}

std::size_t Dataset::rows() const {
  return columns.empty() ? 0 : columns.begin()->second.size();
}

GraphicalModel eight_schools(std::span<const double> y, std::span<const double> sigma) {
  if (y.size() != 8 || sigma.size() != 8)
    throw std::invalid_argument("eight_schools requires exactly 8 observations");
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId mu = m.add_node("mu", Family::Normal, {g.constant(0.0), g.constant(25.0)});
  NodeId tau = m.add_node("tau", Family::HalfCauchy, {g.constant(5.0)});
  ExprRef tau2 = g.apply(Op::Square, g.input(tau));
  for (int i = 0; i < 8; ++i) {
    NodeId x = m.add_node("x_" + std::to_string(i + 1), Family::Normal,
                          {g.input(mu), tau2});
    NodeId yi = m.add_node("y_" + std::to_string(i + 1), Family::Normal,
                           {g.input(x), g.constant(sigma[i] * sigma[i])});
    m.observe(yi, y[i]);
  }
  return m;
}

GraphicalModel repeated_binary_trials(std::span<const int> K, std::span<const int> y) {
  if (K.size() != y.size())
    throw std::invalid_argument("repeated_binary_trials: K and y lengths differ");
  for (std::size_t i = 0; i < K.size(); ++i)
    if (y[i] < 0 || y[i] > K[i])
      throw std::invalid_argument("repeated_binary_trials: y out of [0, K] at row " +
                                  std::to_string(i + 1));
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId mm = m.add_node("m", Family::Uniform, {g.constant(0.0), g.constant(1.0)});
  NodeId kappa = m.add_node("kappa", Family::Pareto, {g.constant(1.0), g.constant(1.5)});
  ExprRef alpha = g.apply(Op::Mul, g.input(mm), g.input(kappa));
  ExprRef beta =
      g.apply(Op::Mul, g.apply(Op::Sub, g.constant(1.0), g.input(mm)), g.input(kappa));
  for (std::size_t i = 0; i < K.size(); ++i) {
    NodeId theta =
        m.add_node("theta_" + std::to_string(i + 1), Family::Beta, {alpha, beta});
    NodeId yi = m.add_node("y_" + std::to_string(i + 1), Family::Binomial,
                           {g.constant(double(K[i])), g.input(theta)});
    m.observe(yi, double(y[i]));
  }
  return m;
}

GraphicalModel electric_company(std::span<const int> g_idx, std::span<const int> p_idx,
                                std::span<const int> t, std::span<const double> y) {
  const std::size_t C = y.size();
  if (g_idx.size() != C || p_idx.size() != C || t.size() != C)
    throw std::invalid_argument("electric_company: column lengths differ");
  int G = 0, P = 0;
  for (std::size_t k = 0; k < C; ++k) {
    if (g_idx[k] < 1 || p_idx[k] < 1)
      throw std::invalid_argument("electric_company: indices are 1-based");
    G = std::max(G, g_idx[k]);
    P = std::max(P, p_idx[k]);
  }
  // grade of each pair, consistency-checked across its classes
  std::vector<int> gp(P, 0);
  for (std::size_t k = 0; k < C; ++k) {
    int j = p_idx[k] - 1;
    if (gp[j] != 0 && gp[j] != g_idx[k])
      throw std::invalid_argument("electric_company: pair " + std::to_string(j + 1) +
                                  " spans multiple grades");
    gp[j] = g_idx[k];
  }
  for (int j = 0; j < P; ++j)
    if (gp[j] == 0)
      throw std::invalid_argument("electric_company: pair " + std::to_string(j + 1) +
                                  " has no classes");

  GraphicalModel m;
  ExprGraph& g = m.graph();
  std::vector<NodeId> mu(G), b(G), log_sigma(G), a(P);
  for (int i = 0; i < G; ++i)
    mu[i] = m.add_node("mu_" + std::to_string(i + 1), Family::Normal,
                       {g.constant(0.0), g.constant(1.0)});
  for (int j = 0; j < P; ++j)
    a[j] = m.add_node("a_" + std::to_string(j + 1), Family::Normal,
                      {g.apply(Op::Mul, g.constant(100.0), g.input(mu[gp[j] - 1])),
                       g.constant(1.0)});
  for (int i = 0; i < G; ++i)
    b[i] = m.add_node("b_" + std::to_string(i + 1), Family::Normal,
                      {g.constant(0.0), g.constant(100.0 * 100.0)});
  for (int i = 0; i < G; ++i)
    log_sigma[i] = m.add_node("log_sigma_" + std::to_string(i + 1), Family::Normal,
                              {g.constant(0.0), g.constant(1.0)});
  for (std::size_t k = 0; k < C; ++k) {
    ExprRef mean = g.apply(Op::Add, g.input(a[p_idx[k] - 1]),
                           g.apply(Op::Mul, g.constant(double(t[k])),
                                   g.input(b[g_idx[k] - 1])));
    ExprRef var = g.apply(Op::Square, g.apply(Op::Exp, g.input(log_sigma[g_idx[k] - 1])));
    NodeId yk = m.add_node("y_" + std::to_string(k + 1), Family::Normal, {mean, var});
    m.observe(yk, y[k]);
  }
  return m;
}

GraphicalModel pulmonary_fibrosis(std::span<const int> id, std::span<const double> t,
                                  std::span<const double> y) {
  const std::size_t n = y.size();
  if (id.size() != n || t.size() != n)
    throw std::invalid_argument("pulmonary_fibrosis: column lengths differ");
  int J = 0;
  for (int v : id) {
    if (v < 1) throw std::invalid_argument("pulmonary_fibrosis: ids are 1-based");
    J = std::max(J, v);
  }
  std::vector<bool> seen(J, false);
  for (int v : id) seen[v - 1] = true;
  for (int j = 0; j < J; ++j)
    if (!seen[j])
      throw std::invalid_argument("pulmonary_fibrosis: patient ids must be dense, " +
                                  std::to_string(j + 1) + " unused");

  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId mu_a = m.add_node("mu_alpha", Family::Normal,
                           {g.constant(0.0), g.constant(500.0 * 500.0)});
  NodeId sg_a = m.add_node("sigma_alpha", Family::HalfCauchy, {g.constant(100.0)});
  NodeId mu_b = m.add_node("mu_beta", Family::Normal, {g.constant(0.0), g.constant(9.0)});
  NodeId sg_b = m.add_node("sigma_beta", Family::HalfCauchy, {g.constant(3.0)});
  NodeId sg = m.add_node("sigma", Family::HalfCauchy, {g.constant(100.0)});
  ExprRef var_a = g.apply(Op::Square, g.input(sg_a));
  ExprRef var_b = g.apply(Op::Square, g.input(sg_b));
  ExprRef var_y = g.apply(Op::Square, g.input(sg));
  std::vector<NodeId> alpha(J), beta(J);
  for (int j = 0; j < J; ++j) {
    alpha[j] = m.add_node("alpha_" + std::to_string(j + 1), Family::Normal,
                          {g.input(mu_a), var_a});
    beta[j] = m.add_node("beta_" + std::to_string(j + 1), Family::Normal,
                         {g.input(mu_b), var_b});
  }
  for (std::size_t i = 0; i < n; ++i) {
    int j = id[i] - 1;
    ExprRef mean = g.apply(Op::Add, g.input(alpha[j]),
                           g.apply(Op::Mul, g.constant(t[i]), g.input(beta[j])));
    NodeId yi = m.add_node("y_" + std::to_string(i + 1), Family::Normal, {mean, var_y});
    m.observe(yi, y[i]);
  }
  return m;
}

GraphicalModel electric_micro(double t1, double t2, double y1, double y2) {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId log_sigma =
      m.add_node("log_sigma", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId mu_a = m.add_node("mu_a", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId a = m.add_node("a", Family::Normal,
                        {g.apply(Op::Mul, g.constant(100.0), g.input(mu_a)),
                         g.constant(1.0)});
  NodeId b1 = m.add_node("b_1", Family::Normal,
                         {g.constant(0.0), g.constant(100.0 * 100.0)});
  NodeId b2 = m.add_node("b_2", Family::Normal,
                         {g.constant(0.0), g.constant(100.0 * 100.0)});
  ExprRef var = g.apply(Op::Square, g.apply(Op::Exp, g.input(log_sigma)));
  NodeId yn1 = m.add_node(
      "y_1", Family::Normal,
      {g.apply(Op::Add, g.input(a), g.apply(Op::Mul, g.constant(t1), g.input(b1))), var});
  NodeId yn2 = m.add_node(
      "y_2", Family::Normal,
      {g.apply(Op::Add, g.input(a), g.apply(Op::Mul, g.constant(t2), g.input(b2))), var});
  m.observe(yn1, y1);
  m.observe(yn2, y2);
  return m;
}

GraphicalModel funnel(int n_latent) {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId v = m.add_node("v", Family::Normal, {g.constant(0.0), g.constant(9.0)});
  ExprRef var = g.apply(Op::Exp, g.input(v));
  for (int i = 0; i < n_latent; ++i)
    m.add_node("x_" + std::to_string(i + 1), Family::Normal, {g.constant(0.0), var});
  return m;
}

GraphicalModel quadratic_mean() {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  ExprRef mean = g.apply(Op::Square, g.input(x));
  const double obs[3] = {0.3, -0.1, 0.2};
  for (int i = 0; i < 3; ++i) {
    NodeId y = m.add_node("y_" + std::to_string(i + 1), Family::Normal,
                          {mean, g.constant(1.0)});
    m.observe(y, obs[i]);
  }
  return m;
}

Dataset eight_schools_data() {
  Dataset d;
  d.columns["y"] = {28, 8, -3, 7, -1, 1, 18, 12};
  d.columns["sigma"] = {15, 10, 16, 11, 9, 11, 10, 18};
  return d;
}

Dataset baseball1970_data() {
  Dataset d;
  d.columns["y"] = {18, 17, 16, 15, 14, 14, 13, 12, 11, 11, 10, 10, 10, 10, 10, 9, 8, 7};
  d.columns["K"] = std::vector<double>(18, 45.0);
  return d;
}

namespace {

// Observation columns sampled once from the model's own prior with a fixed
// seed, so the fixture is deterministic and self-consistent.
std::vector<double> prior_scores(const GraphicalModel& m, const std::string& prefix,
                                 std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Assignment a = m.forward_sample(rng, GraphicalModel::ObservedMode::Sample);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(a.get(m.find(prefix + std::to_string(k + 1))));
  return out;
}

}  // namespace

Dataset electric_desk_data() {
  // G=4 grades, P=24 pairs (6 per grade), C=48 classes (treated + control).
  Dataset d;
  auto& g = d.columns["g"];
  auto& p = d.columns["p"];
  auto& t = d.columns["t"];
  for (int pair = 0; pair < 24; ++pair) {
    for (int treat = 0; treat < 2; ++treat) {
      g.push_back(double(pair / 6 + 1));
      p.push_back(double(pair + 1));
      t.push_back(double(treat));
    }
  }
  std::vector<int> gi(48), pi(48), ti(48);
  for (int k = 0; k < 48; ++k) {
    gi[k] = int(g[k]);
    pi[k] = int(p[k]);
    ti[k] = int(t[k]);
  }
  GraphicalModel m = electric_company(gi, pi, ti, std::vector<double>(48, 0.0));
  d.columns["y"] = prior_scores(m, "y_", 48, 20230817);
  return d;
}

Dataset pulmonary_desk_data() {
  // J=20 patients, 3 visits each at t = 0, 6, 12.
  Dataset d;
  auto& id = d.columns["id"];
  auto& t = d.columns["t"];
  for (int j = 0; j < 20; ++j)
    for (int visit = 0; visit < 3; ++visit) {
      id.push_back(double(j + 1));
      t.push_back(6.0 * visit);
    }
  std::vector<int> idi(60);
  for (int i = 0; i < 60; ++i) idi[i] = int(id[i]);
  GraphicalModel m = pulmonary_fibrosis(idi, t, std::vector<double>(60, 0.0));
  d.columns["y"] = prior_scores(m, "y_", 60, 20230818);
  return d;
}

const std::vector<ZooEntry>& zoo_registry() {
  static const std::vector<ZooEntry> registry = {
      {"eight_schools",
       {"mu"},
       [](const Dataset& d) { return eight_schools(d.column("y"), d.column("sigma")); },
       eight_schools_data},
      {"repeated_binary_trials",
       {},
       [](const Dataset& d) {
         return repeated_binary_trials(d.int_column("K"), d.int_column("y"));
       },
       baseball1970_data},
      {"electric_company",
       {"mu_*"},
       [](const Dataset& d) {
         return electric_company(d.int_column("g"), d.int_column("p"), d.int_column("t"),
                                 d.column("y"));
       },
       electric_desk_data},
      {"pulmonary_fibrosis",
       {"mu_alpha", "mu_beta"},
       [](const Dataset& d) {
         return pulmonary_fibrosis(d.int_column("id"), d.column("t"), d.column("y"));
       },
       pulmonary_desk_data},
      {"funnel", {}, [](const Dataset&) { return funnel(); }, [] { return Dataset{}; }},
      {"quadratic_mean",
       {},
       [](const Dataset&) { return quadratic_mean(); },
       [] { return Dataset{}; }},
  };
  return registry;
}

const ZooEntry& zoo_entry(const std::string& name) {
  for (const ZooEntry& e : zoo_registry())
    if (e.name == name) return e;
  std::string known;
  for (const ZooEntry& e : zoo_registry()) known += (known.empty() ? "" : ", ") + e.name;
  throw std::invalid_argument("unknown model '" + name + "'; known models: " + known);
}

}  // namespace automarg
