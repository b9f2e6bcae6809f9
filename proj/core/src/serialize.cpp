#include "wecan/serialize.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "wecan/error.hpp"

namespace wecan {

namespace {

Json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json mat(const RowMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json mat2(const Eigen::Matrix2d& m) { return Json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

Eigen::VectorXd read_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RowMatrix read_mat(const Json& j, Eigen::Index cols) {
  RowMatrix m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto row = j.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw DomainError("ragged matrix in JSON");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Eigen::Matrix2d read_mat2(const Json& j) {
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

template <class T>
void overlay(const Json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> known, const char* what) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw DomainError(std::string("unknown ") + what + " key '" + key + "'");
  }
}

}  // namespace

Json to_json(const ModelParams& p) {
  Json j;
  j["n"] = p.n();
  j["K"] = p.K();
  j["p"] = p.p();
  j["S1"] = vec(p.S1);
  j["R1"] = vec(p.R1);
  j["S2"] = vec(p.S2);
  j["R2"] = vec(p.R2);
  j["U"] = mat(p.U);
  j["V"] = mat(p.V);
  j["Y"] = mat(p.Y);
  j["Lambda"] = mat(p.Lambda);
  j["beta"] = vec(p.beta);
  j["phi"] = vec(p.phi);
  j["Sigma_SR1"] = mat2(p.Sigma_SR1);
  j["Sigma_SR2"] = mat2(p.Sigma_SR2);
  j["Sigma_UV"] = mat2(p.Sigma_UV);
  j["lambda"] = p.lambda;
  j["alpha"] = p.alpha;
  if (p.mix_map.size() > 0) j["mix_map"] = vec(p.mix_map);
  return j;
}

ModelParams params_from_json(const Json& j) {
  const auto p = static_cast<Eigen::Index>(j.at("p").get<std::size_t>());
  ModelParams out;
  out.S1 = read_vec(j.at("S1"));
  out.R1 = read_vec(j.at("R1"));
  out.S2 = read_vec(j.at("S2"));
  out.R2 = read_vec(j.at("R2"));
  out.U = read_mat(j.at("U"), p);
  out.V = read_mat(j.at("V"), p);
  out.Y = read_mat(j.at("Y"), p);
  out.Lambda = read_mat(j.at("Lambda"), p);
  out.beta = read_vec(j.at("beta"));
  out.phi = read_vec(j.at("phi"));
  out.Sigma_SR1 = read_mat2(j.at("Sigma_SR1"));
  out.Sigma_SR2 = read_mat2(j.at("Sigma_SR2"));
  out.Sigma_UV = read_mat2(j.at("Sigma_UV"));
  out.lambda = j.at("lambda").get<double>();
  out.alpha = j.at("alpha").get<double>();
  if (j.contains("mix_map")) out.mix_map = read_vec(j.at("mix_map"));
  out.validate();
  return out;
}

Json to_json(const PriorConfig& pr) {
  return Json{{"p", pr.p},
              {"K_max", pr.K_max},
              {"Psi0_SR1", mat2(pr.Psi0_SR1)},
              {"Psi0_SR2", mat2(pr.Psi0_SR2)},
              {"Psi0_UV", mat2(pr.Psi0_UV)},
              {"nu0_SR1", pr.nu0_SR1},
              {"nu0_SR2", pr.nu0_SR2},
              {"nu0_UV", pr.nu0_UV},
              {"a0", pr.a0},
              {"b0", pr.b0},
              {"a_alpha", pr.a_alpha},
              {"b_alpha", pr.b_alpha},
              {"c0", pr.c0},
              {"d0", pr.d0},
              {"nu0_t", pr.nu0_t},
              {"eta0_t", pr.eta0_t},
              {"alpha0_map", pr.alpha0_map}};
}

PriorConfig prior_from_json(const Json& j, PriorConfig pr) {
  reject_unknown(j,
                 {"p", "K_max", "Psi0_SR1", "Psi0_SR2", "Psi0_UV", "nu0_SR1", "nu0_SR2", "nu0_UV",
                  "a0", "b0", "a_alpha", "b_alpha", "c0", "d0", "nu0_t", "eta0_t", "alpha0_map"},
                 "prior");
  overlay(j, "p", pr.p);
  overlay(j, "K_max", pr.K_max);
  if (j.contains("Psi0_SR1")) pr.Psi0_SR1 = read_mat2(j["Psi0_SR1"]);
  if (j.contains("Psi0_SR2")) pr.Psi0_SR2 = read_mat2(j["Psi0_SR2"]);
  if (j.contains("Psi0_UV")) pr.Psi0_UV = read_mat2(j["Psi0_UV"]);
  overlay(j, "nu0_SR1", pr.nu0_SR1);
  overlay(j, "nu0_SR2", pr.nu0_SR2);
  overlay(j, "nu0_UV", pr.nu0_UV);
  overlay(j, "a0", pr.a0);
  overlay(j, "b0", pr.b0);
  overlay(j, "a_alpha", pr.a_alpha);
  overlay(j, "b_alpha", pr.b_alpha);
  overlay(j, "c0", pr.c0);
  overlay(j, "d0", pr.d0);
  overlay(j, "nu0_t", pr.nu0_t);
  overlay(j, "eta0_t", pr.eta0_t);
  overlay(j, "alpha0_map", pr.alpha0_map);
  pr.validate();
  return pr;
}

Json to_json(const SimConfig& c) {
  return Json{{"n_nodes", c.n_nodes},
              {"n_edges_target", c.n_edges_target},
              {"K_true", c.K_true},
              {"noise_proportion", c.noise_proportion},
              {"p", c.p},
              {"propensity_variance", c.propensity_variance},
              {"propensity_correlation", c.propensity_correlation},
              {"vmf_kappa", c.vmf_kappa},
              {"magnitude_shape", c.magnitude_shape},
              {"magnitude_rate", c.magnitude_rate},
              {"y_radius", c.y_radius},
              {"beta_pool", c.beta_pool},
              {"lambda_magnitude", c.lambda_magnitude},
              {"noise_shape", c.noise_shape},
              {"noise_rate", c.noise_rate},
              {"phi_min", c.phi_min},
              {"phi_max", c.phi_max},
              {"seed", c.seed}};
}

SimConfig sim_config_from_json(const Json& j, SimConfig c) {
  reject_unknown(j,
                 {"n_nodes", "n_edges_target", "K_true", "noise_proportion", "p",
                  "propensity_variance", "propensity_correlation", "vmf_kappa", "magnitude_shape",
                  "magnitude_rate", "y_radius", "beta_pool", "lambda_magnitude", "noise_shape",
                  "noise_rate", "phi_min", "phi_max", "seed"},
                 "simulation");
  overlay(j, "n_nodes", c.n_nodes);
  overlay(j, "n_edges_target", c.n_edges_target);
  overlay(j, "K_true", c.K_true);
  overlay(j, "noise_proportion", c.noise_proportion);
  overlay(j, "p", c.p);
  overlay(j, "propensity_variance", c.propensity_variance);
  overlay(j, "propensity_correlation", c.propensity_correlation);
  overlay(j, "vmf_kappa", c.vmf_kappa);
  overlay(j, "magnitude_shape", c.magnitude_shape);
  overlay(j, "magnitude_rate", c.magnitude_rate);
  overlay(j, "y_radius", c.y_radius);
  overlay(j, "beta_pool", c.beta_pool);
  overlay(j, "lambda_magnitude", c.lambda_magnitude);
  overlay(j, "noise_shape", c.noise_shape);
  overlay(j, "noise_rate", c.noise_rate);
  overlay(j, "phi_min", c.phi_min);
  overlay(j, "phi_max", c.phi_max);
  overlay(j, "seed", c.seed);
  c.validate();
  return c;
}

Json fit_to_json(const FitResult& r, const FitContext& ctx, const FitOptions& options) {
  Json j;
  j["n_nodes"] = ctx.net.n_nodes();
  j["n_edges"] = ctx.net.n_edges();
  j["family"] = std::string(to_string(ctx.family.kind()));
  j["noise_rate"] = ctx.noise.rate();
  j["mixture"] = ctx.mixture == MixtureMode::kSparseFinite ? "sparse_finite" : "dirichlet_map";
  j["K_effective"] = r.K_effective;
  j["icl"] = r.icl;
  j["converged"] = r.converged;
  j["n_outer_iterations"] = r.n_outer_iterations;
  j["seed"] = r.seed;
  j["assignments"] = r.assignments;
  j["cluster_map"] = r.cluster_map;
  j["elbo_trace"] = r.elbo_trace;
  j["t0_mean"] = r.state.mean_t0();
  j["t_mean"] = vec(r.state.mean_t());
  j["params"] = to_json(r.params);
  j["prior"] = to_json(ctx.prior);
  j["options"] = Json{{"seeds", options.seeds},
                      {"seed_base", options.seed_base},
                      {"max_outer", options.max_outer},
                      {"mass_threshold", options.mass_threshold},
                      {"init_scale", options.init_scale},
                      {"init_radius", options.init_radius},
                      {"cg_iters", options.m_step.cg_iters},
                      {"estep_tol", options.e_step.tol},
                      {"estep_max_iter", options.e_step.max_iter}};
  Json restarts = Json::array();
  for (const auto& s : r.restarts) {
    Json e{{"seed", s.seed}, {"ok", s.ok}};
    if (s.ok) {
      e["icl"] = s.icl;
      e["K_effective"] = s.K_effective;
      e["n_outer_iterations"] = s.n_outer_iterations;
      e["converged"] = s.converged;
    } else {
      e["error"] = s.error;
    }
    restarts.push_back(std::move(e));
  }
  j["restarts"] = std::move(restarts);
  return j;
}

FitOptions options_from_json(const Json& j, FitOptions o) {
  reject_unknown(j,
                 {"seeds", "seed_base", "threads", "max_outer", "mass_threshold", "init_scale",
                  "init_radius", "cg_iters", "estep_tol", "estep_max_iter"},
                 "options");
  overlay(j, "seeds", o.seeds);
  overlay(j, "seed_base", o.seed_base);
  overlay(j, "threads", o.threads);
  overlay(j, "max_outer", o.max_outer);
  overlay(j, "mass_threshold", o.mass_threshold);
  overlay(j, "init_scale", o.init_scale);
  overlay(j, "init_radius", o.init_radius);
  overlay(j, "cg_iters", o.m_step.cg_iters);
  overlay(j, "estep_tol", o.e_step.tol);
  overlay(j, "estep_max_iter", o.e_step.max_iter);
  if (o.seeds < 1) throw DomainError("seeds must be >= 1");
  if (o.max_outer < 1) throw DomainError("max_outer must be >= 1");
  if (o.m_step.cg_iters < 1) throw DomainError("cg_iters must be >= 1");
  if (!(o.e_step.tol > 0.0)) throw DomainError("estep_tol must be positive");
  if (!(o.mass_threshold > 0.0)) throw DomainError("mass_threshold must be positive");
  if (!(o.init_scale >= 0.0) || !(o.init_radius >= 0.0))
    throw DomainError("init_scale and init_radius must be non-negative");
  return o;
}

std::vector<ClusterId> assignments_from_fit_json(const Json& j) {
  return j.at("assignments").get<std::vector<ClusterId>>();
}

void write_assignments_csv(std::ostream& out, const Network& net,
                           const std::vector<ClusterId>& assignments) {
  if (assignments.size() != net.n_edges()) throw DomainError("assignment length mismatch");
  out << "edge,sender,receiver,weight,cluster\n" << std::setprecision(17);
  for (std::size_t m = 0; m < assignments.size(); ++m) {
    const Edge& e = net.edge(m);
    out << m + 1 << ',' << net.label(e.sender) << ',' << net.label(e.receiver) << ',' << e.weight
        << ',' << assignments[m] << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<ClusterId>& truth) {
  out << "edge,cluster\n";
  for (std::size_t m = 0; m < truth.size(); ++m) out << m + 1 << ',' << truth[m] << '\n';
}

std::vector<ClusterId> read_truth_csv(std::istream& in) {
  std::vector<ClusterId> out;
  std::string line;
  std::size_t row = 0;
  auto parse = [&](std::string_view s, std::size_t& v) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ParseError(row, "expected a non-negative integer, got '" + std::string(s) + "'");
  };
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (std::exchange(first, false) && line.rfind("edge", 0) == 0) continue;
    ++row;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(row, "expected 2 fields");
    std::size_t edge = 0, cluster = 0;
    parse(std::string_view(line).substr(0, comma), edge);
    parse(std::string_view(line).substr(comma + 1), cluster);
    if (edge != out.size() + 1)
      throw ParseError(row, "edge index " + std::to_string(edge) + " out of order");
    out.push_back(cluster);
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace wecan
