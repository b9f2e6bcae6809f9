#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "wecan/eval.hpp"
#include "wecan/fit.hpp"
#include "wecan/serialize.hpp"
#include "wecan/simgen.hpp"

namespace wecan::cli {

namespace fs = std::filesystem;

namespace {

// Input problems the user can fix by changing the command line or files.
struct UsageError : Error {
  using Error::Error;
};

EdgeListFormat format_for(const std::string& path, const std::string& requested) {
  if (requested == "csv") return EdgeListFormat::kCsv;
  if (requested == "tsv") return EdgeListFormat::kTsv;
  return fs::path(path).extension() == ".tsv" ? EdgeListFormat::kTsv : EdgeListFormat::kCsv;
}

void require_readable(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("cannot read input file '" + path + "'");
}

void check_writable(const std::vector<fs::path>& outputs, bool force) {
  for (const auto& p : outputs) {
    if (!force && fs::exists(p))
      throw UsageError("refusing to overwrite '" + p.string() + "' (use --force)");
    if (p.has_parent_path() && !fs::is_directory(p.parent_path()))
      throw UsageError("output directory '" + p.parent_path().string() + "' does not exist");
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + p.string() + "'");
  return out;
}

void write_json(const fs::path& p, const Json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) {
  return fs::path(prefix + suffix);
}

std::vector<ClusterId> read_labels(const std::string& path) {
  require_readable(path);
  if (fs::path(path).extension() == ".json") return assignments_from_fit_json(read_json_file(path));
  std::ifstream in(path);
  return read_truth_csv(in);
}

struct FitArgs {
  std::string input;
  std::string out;
  std::string family = "normal";
  std::string format = "auto";
  std::string mixture = "sparse";
  std::string config;
  std::size_t kmax = 10;
  std::size_t p = 4;
  std::size_t seeds = 15;
  std::size_t threads = 0;
  std::uint64_t seed_base = 1;
  double noise_rate = 0.0;
  double prior_variance = 0.3;
  bool no_header = false;
  bool force = false;
};

int cmd_fit(const FitArgs& a, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_readable(a.input);
  const fs::path json_path = with_suffix(a.out, ".json");
  const fs::path csv_path = with_suffix(a.out, "_assignments.csv");
  check_writable({json_path, csv_path}, a.force);

  const Network net = load_edge_list(a.input, format_for(a.input, a.format), !a.no_header);

  Json config = Json::object();
  if (!a.config.empty()) {
    require_readable(a.config);
    config = read_json_file(a.config);
    for (const auto& [key, _] : config.items()) {
      static const char* known[] = {"family", "noise_rate", "mixture", "prior_variance", "prior",
                                    "options"};
      if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; }))
        throw UsageError("unknown config key '" + key + "'");
    }
  }
  auto given = [&](const char* flag) { return sub.get_option(flag)->count() > 0; };

  std::string family = config.value("family", a.family);
  if (given("--family")) family = a.family;
  std::string mixture = config.value("mixture", a.mixture);
  if (given("--mixture")) mixture = a.mixture;
  double prior_variance = config.value("prior_variance", a.prior_variance);
  if (given("--prior-variance")) prior_variance = a.prior_variance;

  PriorConfig prior;
  prior.p = a.p;
  prior.K_max = a.kmax;
  const Json prior_json = config.value("prior", Json::object());
  prior = prior_from_json(prior_json, prior);
  if (given("--p")) prior.p = a.p;
  if (given("--kmax")) prior.K_max = a.kmax;
  if (prior_variance > 0.0) {
    // Explicit scale matrices in the config win over the data-scaled ones.
    PriorConfig scaled = data_scaled_prior(prior, net.n_nodes(), prior_variance);
    if (!prior_json.contains("Psi0_SR1")) prior.Psi0_SR1 = scaled.Psi0_SR1;
    if (!prior_json.contains("Psi0_SR2")) prior.Psi0_SR2 = scaled.Psi0_SR2;
    if (!prior_json.contains("Psi0_UV")) prior.Psi0_UV = scaled.Psi0_UV;
  }
  prior.validate();

  FitOptions options;
  options.seeds = a.seeds;
  options.threads = a.threads;
  options.seed_base = a.seed_base;
  options = options_from_json(config.value("options", Json::object()), options);
  if (given("--seeds")) options.seeds = a.seeds;
  if (given("--threads")) options.threads = a.threads;
  if (given("--seed-base")) options.seed_base = a.seed_base;
  if (options.seeds < 1) throw UsageError("--seeds must be >= 1");

  MixtureMode mode;
  if (mixture == "sparse" || mixture == "sparse_finite") mode = MixtureMode::kSparseFinite;
  else if (mixture == "map" || mixture == "dirichlet_map") mode = MixtureMode::kDirichletMap;
  else throw UsageError("unknown mixture '" + mixture + "'");

  double rate = config.value("noise_rate", 0.0);
  if (given("--noise-rate")) rate = a.noise_rate;
  if (rate == 0.0) rate = default_noise_rate(net);
  if (!(rate > 0.0)) throw UsageError("--noise-rate must be positive");

  const FitContext ctx(net, WeightFamily(parse_family(family)), NoiseLaw(rate), prior,
                       ModelVariant{}, mode);
  FitResult result;
  try {
    result = fit(ctx, options);
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& r : e.restarts())
      err << "  seed " << r.seed << ": " << (r.ok ? "ok" : r.error) << '\n';
    return kExitNumerical;
  }

  write_json(json_path, fit_to_json(result, ctx, options));
  {
    auto csv = open_out(csv_path);
    write_assignments_csv(csv, net, result.assignments);
  }
  std::size_t failed = 0;
  for (const auto& r : result.restarts) failed += r.ok ? 0 : 1;
  out << "K_effective " << result.K_effective << '\n'
      << "ICL " << std::setprecision(10) << result.icl << '\n'
      << "seed " << result.seed << " (" << result.n_outer_iterations << " iterations"
      << (result.converged ? "" : ", not converged") << ")\n";
  if (failed > 0) out << failed << " of " << result.restarts.size() << " restarts failed\n";
  if (const std::size_t dup = summarize(net).duplicate_edges; dup > 0)
    out << "duplicate_edges " << dup << " (repeated sender,receiver pairs)\n";
  out << "wrote " << json_path.string() << " and " << csv_path.string() << '\n';
  return kExitOk;
}

struct SimArgs {
  std::string preset = "desk";
  std::string out;
  std::string config;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_nodes;
  std::optional<std::size_t> n_edges;
  bool force = false;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  SimConfig c;
  if (a.preset == "desk") c = desk_preset();
  else if (a.preset == "paper") c = paper_preset();
  else throw UsageError("unknown preset '" + a.preset + "' (expected desk or paper)");
  if (!a.config.empty()) {
    require_readable(a.config);
    c = sim_config_from_json(read_json_file(a.config), c);
  }
  if (a.noise) c.noise_proportion = *a.noise;
  if (a.seed) c.seed = *a.seed;
  if (a.n_nodes) c.n_nodes = *a.n_nodes;
  if (a.n_edges) c.n_edges_target = *a.n_edges;
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }

  const fs::path edges = with_suffix(a.out, "_edges.csv");
  const fs::path truth = with_suffix(a.out, "_truth.csv");
  const fs::path params = with_suffix(a.out, "_params.json");
  const fs::path manifest = with_suffix(a.out, "_manifest.json");
  check_writable({edges, truth, params, manifest}, a.force);

  const Simulation sim = generate(c);
  write_edge_list(sim.network, edges.string(), EdgeListFormat::kCsv, true);
  {
    auto t = open_out(truth);
    write_truth_csv(t, sim.truth);
  }
  Json pj = to_json(sim.params);
  pj["cluster_weights"] = sim.cluster_weights;
  write_json(params, pj);
  std::size_t n_noise = 0;
  for (ClusterId z : sim.truth) n_noise += z == kNoiseCluster ? 1 : 0;
  write_json(manifest, Json{{"preset", a.preset},
                            {"config", to_json(c)},
                            {"seed", c.seed},
                            {"n_nodes", sim.network.n_nodes()},
                            {"n_edges", sim.network.n_edges()},
                            {"n_noise_edges", n_noise},
                            {"files",
                             {{"edges", edges.filename().string()},
                              {"truth", truth.filename().string()},
                              {"params", params.filename().string()}}}});
  out << "n_nodes " << sim.network.n_nodes() << "\nn_edges " << sim.network.n_edges()
      << "\nnoise_edges " << n_noise << "\nwrote " << edges.string() << ", " << truth.string()
      << ", " << params.string() << ", " << manifest.string() << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string truth;
  std::string fit;
  std::string network;
  std::string format = "auto";
  std::string summary_out;
  double cutoff = 1.0;
  bool no_header = false;
  bool force = false;
};

Json record_json(const ClusterRecord& r, const Network& net) {
  auto nodes = [&](const std::vector<NodeCount>& v) {
    Json a = Json::array();
    for (const auto& c : v) a.push_back(Json{{"node", net.label(c.node)}, {"count", c.count}});
    return a;
  };
  return Json{{"label", r.label},           {"n_edges", r.n_edges},
              {"mean_weight", r.mean_weight}, {"sd_weight", r.sd_weight},
              {"top_senders", nodes(r.top_senders)}, {"top_receivers", nodes(r.top_receivers)}};
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  require_readable(a.fit);
  const Json fit_doc = read_json_file(a.fit);
  const std::vector<ClusterId> fitted = assignments_from_fit_json(fit_doc);
  const std::vector<ClusterId> truth = read_labels(a.truth);
  if (truth.size() != fitted.size())
    throw UsageError("length mismatch: truth has " + std::to_string(truth.size()) +
                     " edges, fit has " + std::to_string(fitted.size()));
  if (!a.summary_out.empty() && a.network.empty())
    throw UsageError("--summary-out needs --network");
  if (!a.summary_out.empty()) check_writable({a.summary_out}, a.force);

  const double score = nmi(truth, fitted);
  std::size_t k_eff = 0;
  if (fit_doc.contains("K_effective")) {
    k_eff = fit_doc["K_effective"].get<std::size_t>();
  } else {
    for (ClusterId z : fitted) k_eff = std::max(k_eff, z);
  }
  out << std::fixed << std::setprecision(6) << "NMI " << score << '\n'
      << "K_effective " << k_eff << '\n';

  if (!a.network.empty()) {
    require_readable(a.network);
    const Network net = load_edge_list(a.network, format_for(a.network, a.format), !a.no_header);
    if (net.n_edges() != fitted.size())
      throw UsageError("length mismatch: network has " + std::to_string(net.n_edges()) +
                       " edges, fit has " + std::to_string(fitted.size()));
    const NoiseReport nr = noise_report(fitted, net, a.cutoff);
    out << std::defaultfloat << "noise_edges " << nr.n_noise() << " (" << nr.noise_at_or_below << " with weight <= "
        << a.cutoff << ")\n";
    if (!a.summary_out.empty()) {
      Json clusters = Json::array();
      for (const auto& r : cluster_summary(fitted, net)) clusters.push_back(record_json(r, net));
      Json noise{{"cutoff", nr.cutoff},
                 {"noise_at_or_below", nr.noise_at_or_below},
                 {"noise_above", nr.noise_above},
                 {"structural_at_or_below", nr.structural_at_or_below},
                 {"structural_above", nr.structural_above}};
      noise["mean_noise_weight"] =
          std::isnan(nr.mean_noise_weight) ? Json(nullptr) : Json(nr.mean_noise_weight);
      const NetworkSummary ns = summarize(net);
      write_json(a.summary_out, Json{{"nmi", score},
                                     {"K_effective", k_eff},
                                     {"network",
                                      {{"n_nodes", ns.n_nodes},
                                       {"n_edges", ns.n_edges},
                                       {"distinct_pairs", ns.distinct_pairs},
                                       {"duplicate_edges", ns.duplicate_edges}}},
                                     {"noise", noise},
                                     {"clusters", clusters}});
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge clustering of weighted directed networks with a noise component"};
  app.name("wecan");
  app.require_subcommand(1);

  FitArgs fa;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit the model to an edge list");
  fit_cmd->add_option("edges", fa.input, "Edge list (sender,receiver,weight)")->required();
  fit_cmd->add_option("--out", fa.out, "Output prefix; writes PREFIX.json and PREFIX_assignments.csv")
      ->required();
  fit_cmd->add_option("--family", fa.family, "Weight family")
      ->check(CLI::IsMember({"normal", "lognormal"}))
      ->capture_default_str();
  fit_cmd->add_option("--kmax", fa.kmax, "Cluster budget K_max")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit_cmd->add_option("--p", fa.p, "Latent dimension")->check(CLI::PositiveNumber)->capture_default_str();
  fit_cmd->add_option("--seeds", fa.seeds, "Number of restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit_cmd->add_option("--noise-rate", fa.noise_rate,
                      "Rate of the exponential noise law (default: from the data)")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--mixture", fa.mixture, "Mixture weights: sparse or map")
      ->check(CLI::IsMember({"sparse", "map"}))
      ->capture_default_str();
  fit_cmd->add_option("--prior-variance", fa.prior_variance,
                      "Target variance of the data-scaled inverse-Wishart scales; 0 keeps the "
                      "configured Psi0")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fit_cmd->add_option("--config", fa.config, "JSON config file (see docs/formats.md)");
  fit_cmd->add_option("--threads", fa.threads, "Worker threads for restarts (0 = all cores)")
      ->capture_default_str();
  fit_cmd->add_option("--seed-base", fa.seed_base, "Seed of the first restart")->capture_default_str();
  fit_cmd->add_option("--format", fa.format, "Edge list format")
      ->check(CLI::IsMember({"auto", "csv", "tsv"}))
      ->capture_default_str();
  fit_cmd->add_flag("--no-header", fa.no_header, "The edge list has no header row");
  fit_cmd->add_flag("--force", fa.force, "Overwrite existing outputs");

  SimArgs sa;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic network with known clusters");
  sim_cmd->add_option("--preset", sa.preset, "desk (n=150, M=1200) or paper (n=400, M=7065)")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  sim_cmd->add_option("--noise", sa.noise, "Proportion of noise edges in [0, 1)");
  sim_cmd->add_option("--seed", sa.seed, "Generator seed");
  sim_cmd->add_option("--n-nodes", sa.n_nodes, "Override the node count");
  sim_cmd->add_option("--n-edges", sa.n_edges, "Override the edge count");
  sim_cmd->add_option("--config", sa.config, "JSON overlay of generator settings");
  sim_cmd->add_option("--out", sa.out,
                      "Output prefix; writes PREFIX_edges.csv, PREFIX_truth.csv, "
                      "PREFIX_params.json, PREFIX_manifest.json")
      ->required();
  sim_cmd->add_flag("--force", sa.force, "Overwrite existing outputs");

  EvalArgs ea;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compare a fit with reference labels");
  eval_cmd->add_option("--truth", ea.truth, "Reference labels: truth CSV or fit JSON")->required();
  eval_cmd->add_option("--fit", ea.fit, "Fit JSON written by 'wecan fit'")->required();
  eval_cmd->add_option("--network", ea.network, "Edge list the fit was run on, for summaries");
  eval_cmd->add_option("--format", ea.format, "Edge list format")
      ->check(CLI::IsMember({"auto", "csv", "tsv"}))
      ->capture_default_str();
  eval_cmd->add_flag("--no-header", ea.no_header, "The edge list has no header row");
  eval_cmd->add_option("--cutoff", ea.cutoff, "Weight cutoff for the noise cross-tabulation")
      ->capture_default_str();
  eval_cmd->add_option("--summary-out", ea.summary_out, "Write per-cluster summaries as JSON");
  eval_cmd->add_flag("--force", ea.force, "Overwrite existing outputs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const CLI::App* s : {fit_cmd, sim_cmd, eval_cmd})
      if (s->parsed()) target = s;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* target = &app;
    for (const CLI::App* s : {fit_cmd, sim_cmd, eval_cmd})
      if (s->parsed()) target = s;
    err << target->help();
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fa, *fit_cmd, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sa, out);
    return cmd_eval(ea, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    // UsageError, ParseError, DomainError: bad input files, flags or configs.
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace wecan::cli
