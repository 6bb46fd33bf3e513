// cfdrift: generate synthetic drift data, explain drift in a stream, and run
// the evaluation experiments.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cfdrift/errors.hpp"
#include "cfdrift/evalharness.hpp"
#include "cfdrift/io.hpp"
#include "cfdrift/pipeline.hpp"
#include "cfdrift/synth.hpp"

namespace fs = std::filesystem;
using namespace cfdrift;

namespace {

std::string default_output_dir() {
  if (const char* env = std::getenv("CFDRIFT_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir = default_output_dir();
  std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Flat key=value file mirroring the flags; flags given on the command line win");
  cmd->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  cmd->add_option("-o,--out-dir", c.out_dir, "Output directory (default: $CFDRIFT_OUTPUT_DIR or .)");
}

// Fills options not given on the command line from a flat key=value file.
// Keys are long flag names without the leading dashes.
void apply_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "config") continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
    if (opt == nullptr) throw ValidationError("unknown key '" + item.name + "' in " + path);
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

// ---- generate -------------------------------------------------------------

struct GmmArgs {
  Common common;
  std::size_t d = 2, n_class = 2, n_gauss = 2, n = 500;
  double a = 10.0, sigma = 1.0;
  std::string name = "gmm";
};

int run_generate_gmm(const GmmArgs& g) {
  synth::GmmSpec spec;
  spec.d = g.d;
  spec.n_class = g.n_class;
  spec.n_gauss_per_class = g.n_gauss;
  spec.a = g.a;
  spec.sigma = g.sigma;
  spec.seed = derive_seed(g.common.seed, {0});
  spec.validate();
  const auto model = synth::make_model(spec);
  Rng rng(derive_seed(g.common.seed, {1}));
  const Dataset sampled = model.sample(g.n, rng);
  // Written in stream order: all of bin 1, then bin 2, and so on.
  std::vector<std::size_t> order;
  std::vector<std::size_t> change_points;
  for (int b = 1; b <= sampled.n_bins(); ++b) {
    const auto idx = sampled.indices_in_bin(TimeBin{b});
    if (b > 1) change_points.push_back(order.size());
    order.insert(order.end(), idx.begin(), idx.end());
  }
  std::vector<TimeBin> bins;
  for (auto i : order) bins.push_back(sampled.bin(i));
  const Dataset data(sampled.features().select_rows(order), std::move(bins), sampled.n_bins());
  std::vector<double> i_true(data.size()), c_true(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    i_true[k] = model.identifiability(data.x(k));
    c_true[k] = model.characterizing(data.x(k));
  }
  io::OutputTransaction out(g.common.out_dir);
  out.write(g.name + ".csv", [&](std::ostream& os) { io::write_dataset_csv(os, data); });
  out.write(g.name + "_truth.csv", [&](std::ostream& os) { io::write_ground_truth_csv(os, i_true, c_true); });
  for (const auto& p : out.commit()) std::cout << "wrote " << p.string() << '\n';
  std::cout << "n=" << data.size() << " d=" << data.dimension() << " bins=" << data.n_bins() << '\n';
  std::cout << "change points:";
  for (auto c : change_points) std::cout << ' ' << c;
  std::cout << '\n';
  return 0;
}

struct CheckerArgs {
  Common common;
  int grid = 3, bins = 2;
  std::size_t n_per_bin = 150;
  std::string name = "checkerboard";
};

int run_generate_checkerboard(const CheckerArgs& c) {
  const auto spec = synth::random_checkerboard_spec(c.grid, c.bins, derive_seed(c.common.seed, {0}));
  const auto cb = synth::sample_checkerboard(spec, c.n_per_bin, derive_seed(c.common.seed, {1}));
  io::OutputTransaction out(c.common.out_dir);
  out.write(c.name + ".csv", [&](std::ostream& os) { io::write_dataset_csv(os, cb.data); });
  out.write(c.name + "_truth.csv", [&](std::ostream& os) { io::write_ground_truth_csv(os, cb.i_true, {}, cb.cell); });
  for (const auto& p : out.commit()) std::cout << "wrote " << p.string() << '\n';
  std::cout << "n=" << cb.data.size() << " d=" << cb.data.dimension() << " bins=" << cb.data.n_bins() << '\n';
  for (int b = 0; b < spec.n_bins(); ++b) {
    std::cout << "bin " << b + 1 << " active cells:";
    for (int cell : spec.active_cells_per_bin[static_cast<std::size_t>(b)]) std::cout << ' ' << cell;
    std::cout << '\n';
  }
  std::cout << "changed cells:";
  for (int cell : cb.changed_cells) std::cout << ' ' << cell;
  std::cout << '\n';
  return 0;
}

// ---- explain --------------------------------------------------------------

struct ExplainArgs {
  Common common;
  std::string input;
  std::vector<std::string> drop;
  std::string detector = "oracle";
  std::vector<std::size_t> change_at;
  std::size_t window = 100;
  double threshold = 4.0;
  std::string classifier = "knn";
  std::size_t k = 5;
  std::size_t trees = 10;
  std::string method = "kmeans-resampled";
  std::size_t prototypes_per_bin = 5;
  std::size_t m_draw = 0;
  std::string dissimilarity = "euclidean";
  double p = 2.0;
  std::string omega;
  bool standardize = false;
  std::size_t archive_cap = 0;
  double no_drift_tolerance = 0.05;
  bool pca = false;
  bool oracle_from_t = false;
};

pipeline::StreamConfig stream_config(const ExplainArgs& e, std::size_t dim) {
  pipeline::StreamConfig cfg;
  if (e.detector == "oracle") {
    cfg.detector.kind = pipeline::DetectorConfig::Kind::Oracle;
    cfg.detector.change_points = e.change_at;
  } else if (e.detector == "window") {
    cfg.detector.kind = pipeline::DetectorConfig::Kind::WindowMean;
    cfg.detector.window = e.window;
    cfg.detector.threshold = e.threshold;
  } else {
    throw ValidationError("unknown detector '" + e.detector + "' (expected oracle or window)");
  }
  const auto model = eval::parse_model(e.classifier);
  cfg.classifier.kind =
      model == eval::Model::Knn ? pipeline::ClassifierConfig::Kind::Knn : pipeline::ClassifierConfig::Kind::RandomForest;
  cfg.classifier.knn.k = e.k;
  cfg.classifier.forest.n_trees = e.trees;
  cfg.method = proto::parse_method(e.method);
  cfg.prototypes_per_bin = e.prototypes_per_bin;
  cfg.m_draw = e.m_draw;
  if (e.dissimilarity == "euclidean") {
    cfg.dissimilarity = assign::Dissimilarity::euclidean();
  } else if (e.dissimilarity == "pnorm") {
    cfg.dissimilarity = assign::Dissimilarity::p_norm(e.p);
  } else if (e.dissimilarity == "mahalanobis") {
    if (e.omega.empty()) throw ValidationError("mahalanobis dissimilarity needs --omega");
    const auto t = io::read_table(fs::path(e.omega));
    if (t.values.rows() != dim || t.values.cols() != dim) {
      throw ValidationError("omega must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    }
    cfg.dissimilarity = assign::Dissimilarity::mahalanobis(dim, t.values.data());
  } else {
    throw ValidationError("unknown dissimilarity '" + e.dissimilarity + "'");
  }
  cfg.seed = e.common.seed;
  cfg.standardize = e.standardize;
  cfg.archive_cap_per_bin = e.archive_cap;
  cfg.no_drift_tolerance = e.no_drift_tolerance;
  cfg.validate();
  return cfg;
}

int run_explain(const ExplainArgs& e) {
  if (e.input.empty()) throw ValidationError("--input is required");
  const auto stream = io::read_stream(fs::path(e.input), e.drop);
  if (stream.x.rows() == 0) throw ValidationError("input stream is empty");
  auto cfg = stream_config(e, stream.x.cols());
  if (e.oracle_from_t) {
    if (!stream.t) throw ValidationError("--oracle-from-t needs a 't' column in the input");
    if (!e.change_at.empty()) throw ValidationError("--oracle-from-t and --change-at are exclusive");
    const auto& t = *stream.t;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] != t[i - 1]) cfg.detector.change_points.push_back(i);
    }
  }
  const auto reports = pipeline::explain_stream(stream.x, cfg);

  io::ReportJsonOptions jopts;
  jopts.feature_names = stream.feature_names;
  jopts.pca2d = e.pca;
  io::OutputTransaction out(e.common.out_dir);
  for (const auto& r : reports) {
    const std::string tag = std::to_string(r.event);
    out.write("report_" + tag + ".json", io::report_to_json(r, jopts));
    out.write("pairs_" + tag + ".csv", [&](std::ostream& os) { io::write_pairs_csv(os, r); });
  }
  for (const auto& p : out.commit()) std::cout << "wrote " << p.string() << '\n';
  std::cout << reports.size() << " drift event(s) over " << stream.x.rows() << " samples\n";
  for (const auto& r : reports) {
    std::cout << "event " << r.event << " at position " << r.change_point << ": " << r.characteristic.size()
              << " characteristic samples, mean i " << std::setprecision(4) << r.mean_identifiability << '\n';
    for (const auto& s : r.feature_summary) {
      std::cout << "  " << std::left << std::setw(14) << stream.feature_names[s.feature] << std::right
                << " mean|diff| " << std::setw(10) << s.mean_abs_difference << "  mean diff " << std::setw(10)
                << s.mean_difference << (s.no_drift ? "  (no drift in this feature)" : "") << '\n';
    }
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << '\n';
  }
  return 0;
}

// ---- eval -----------------------------------------------------------------

struct GridArgs {
  Common common;
  std::vector<std::string> configs{"2/2/2"};
  std::vector<std::string> models{"knn"};
  std::vector<std::string> methods{"kmeans-resampled"};
  std::size_t runs = 30, n_train = 500, n_eval = 1500, k = 10, m_draw = 0, threads = 0;
  double a = 10.0, sigma = 1.0;
};

eval::ExperimentGrid make_grid(const GridArgs& g) {
  eval::ExperimentGrid grid;
  grid.configs.clear();
  for (const auto& c : g.configs) grid.configs.push_back(eval::GmmConfig::parse(c));
  grid.models.clear();
  for (const auto& m : g.models) grid.models.push_back(eval::parse_model(m));
  grid.methods.clear();
  for (const auto& m : g.methods) grid.methods.push_back(proto::parse_method(m));
  grid.runs = g.runs;
  grid.n_train = g.n_train;
  grid.n_eval = g.n_eval;
  grid.k = g.k;
  grid.m_draw = g.m_draw;
  grid.a = g.a;
  grid.sigma = g.sigma;
  grid.seed = g.common.seed;
  grid.threads = g.threads;
  grid.validate();
  return grid;
}

void print_table(const eval::ResultTable& t) {
  std::cout << std::left << std::setw(14) << "config" << std::setw(22) << "method" << std::setw(10) << "metric"
            << std::right << std::setw(12) << "mean" << std::setw(12) << "std" << std::setw(6) << "runs" << '\n';
  for (const auto& r : t.rows) {
    std::cout << std::left << std::setw(14) << r.config << std::setw(22) << r.method << std::setw(10) << r.metric
              << std::right << std::fixed << std::setprecision(4) << std::setw(12) << r.cell.mean << std::setw(12)
              << r.cell.std << std::setw(6) << r.cell.runs << '\n'
              << std::defaultfloat;
  }
}

int write_results(const std::string& dir, const eval::ResultTable& t, const std::string& json) {
  io::OutputTransaction out(dir);
  out.write(t.experiment + "_results.csv", [&](std::ostream& os) { io::write_results_csv(os, t); });
  out.write(t.experiment + "_runs.csv", [&](std::ostream& os) { io::write_runs_csv(os, t); });
  out.write(t.experiment + "_results.json", json);
  print_table(t);
  for (const auto& p : out.commit()) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

int run_eval_identifiability(const GridArgs& g) {
  const auto t = eval::eval_identifiability(make_grid(g));
  return write_results(g.common.out_dir, t, io::results_to_json(t));
}

int run_eval_prototypes(const GridArgs& g) {
  const auto t = eval::eval_prototypes(make_grid(g));
  return write_results(g.common.out_dir, t, io::results_to_json(t));
}

struct CheckerEvalArgs {
  Common common;
  std::size_t runs = 30, n_per_bin = 150, prototypes_per_bin = 2, threads = 0, k = 5;
  int grid = 3, bins = 2;
  std::vector<std::string> methods{"kmeans-resampled"};
  std::string model = "knn";
  std::string rule = "presence";
};

int run_eval_checkerboard(const CheckerEvalArgs& c) {
  eval::CheckerboardOptions o;
  o.runs = c.runs;
  o.n_per_bin = c.n_per_bin;
  o.grid = c.grid;
  o.n_bins = c.bins;
  o.methods.clear();
  for (const auto& m : c.methods) o.methods.push_back(proto::parse_method(m));
  o.model = eval::parse_model(c.model);
  o.knn.k = c.k;
  o.prototypes_per_bin = c.prototypes_per_bin;
  o.rule = eval::parse_flag_rule(c.rule);
  o.seed = c.common.seed;
  o.threads = c.threads;
  const auto r = eval::eval_checkerboard(o);
  std::vector<std::string> names;
  for (auto m : o.methods) names.emplace_back(proto::to_string(m));
  write_results(c.common.out_dir, r.table, io::results_to_json(r.table, r.sign_tests, names));
  for (std::size_t k = 0; k < r.sign_tests.size(); ++k) {
    const auto& s = r.sign_tests[k];
    std::cout << names[k] << ": below baseline in " << s.wins << " runs, above in " << s.losses << ", tied "
              << s.ties << "; sign test p = " << s.p_value << '\n';
  }
  return 0;
}

struct BenchArgs {
  Common common;
  std::string input;
  std::string target;
  std::string task = "regression";
  std::vector<std::string> drop;
  std::vector<std::string> models{"knn", "rf"};
  std::size_t runs = 30, threads = 0;
  std::string name;
};

int run_eval_benchmark(const BenchArgs& b) {
  if (b.input.empty()) throw ValidationError("--input is required");
  const auto table = io::read_table(fs::path(b.input), b.drop);
  const std::string target = b.target.empty() ? table.header.back() : b.target;
  const std::size_t tc = table.column(target);
  if (table.header.size() < 2) throw ValidationError("benchmark needs at least one feature column");
  Matrix x(0, table.header.size() - 1);
  std::vector<double> y, row;
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    row.clear();
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != tc) row.push_back(table.values(i, c));
    }
    x.append_row(row);
    y.push_back(table.values(i, tc));
  }
  eval::BenchmarkOptions o;
  o.task = eval::parse_task(b.task);
  o.models.clear();
  for (const auto& m : b.models) o.models.push_back(eval::parse_model(m));
  o.runs = b.runs;
  o.seed = b.common.seed;
  o.threads = b.threads;
  const std::string name = b.name.empty() ? fs::path(b.input).stem().string() : b.name;
  const auto t = eval::eval_benchmark(x, y, o, name);
  return write_results(b.common.out_dir, t, io::results_to_json(t));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain concept drift through characteristic samples and their counterparts"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset and its ground truth");
  generate->require_subcommand(1);

  GmmArgs gmm;
  auto* gen_gmm = generate->add_subcommand("gmm", "Gaussian mixture with drifting component weights");
  add_common(gen_gmm, gmm.common);
  gen_gmm->add_option("--d", gmm.d, "Dimension")->capture_default_str();
  gen_gmm->add_option("--n-class", gmm.n_class, "Number of time bins")->capture_default_str();
  gen_gmm->add_option("--n-gauss", gmm.n_gauss, "Gaussians per class")->capture_default_str();
  gen_gmm->add_option("--n", gmm.n, "Number of samples")->capture_default_str();
  gen_gmm->add_option("--a", gmm.a, "Means are drawn from U[-a, a]^d")->capture_default_str();
  gen_gmm->add_option("--sigma", gmm.sigma, "Component standard deviation")->capture_default_str();
  gen_gmm->add_option("--name", gmm.name, "Output file stem")->capture_default_str();

  CheckerArgs checker;
  auto* gen_cb = generate->add_subcommand("checkerboard", "Checkerboard whose active cells change between bins");
  add_common(gen_cb, checker.common);
  gen_cb->add_option("--grid", checker.grid, "Cells per side")->capture_default_str();
  gen_cb->add_option("--bins", checker.bins, "Number of time bins")->capture_default_str();
  gen_cb->add_option("--n-per-bin", checker.n_per_bin, "Samples per bin")->capture_default_str();
  gen_cb->add_option("--name", checker.name, "Output file stem")->capture_default_str();

  ExplainArgs ex;
  auto* explain = app.add_subcommand("explain", "Run drift explanation over a stream (CSV or NDJSON)");
  add_common(explain, ex.common);
  explain->add_option("-i,--input", ex.input, "Stream file");
  explain->add_option("--drop", ex.drop, "Columns to ignore")->delimiter(',');
  explain->add_option("--detector", ex.detector, "oracle or window")->capture_default_str();
  explain->add_option("--change-at", ex.change_at, "Oracle change points (0-based positions)")->delimiter(',');
  explain->add_option("--window", ex.window, "Window detector size")->capture_default_str();
  explain->add_option("--threshold", ex.threshold, "Window detector threshold")->capture_default_str();
  explain->add_option("--classifier", ex.classifier, "knn or rf")->capture_default_str();
  explain->add_option("--k", ex.k, "Neighbours for k-NN")->capture_default_str();
  explain->add_option("--trees", ex.trees, "Trees for the random forest")->capture_default_str();
  explain->add_option("--method", ex.method, "kmeans-resampled, kmeans-weighted, kmeans-baseline, mean-shift, affinity-propagation")
      ->capture_default_str();
  explain->add_option("--prototypes-per-bin", ex.prototypes_per_bin, "k-means prototypes per time bin")
      ->capture_default_str();
  explain->add_option("--m-draw", ex.m_draw, "Resample size (0: archive size)")->capture_default_str();
  explain->add_option("--dissimilarity", ex.dissimilarity, "euclidean, pnorm or mahalanobis")->capture_default_str();
  explain->add_option("--p", ex.p, "Exponent for pnorm")->capture_default_str();
  explain->add_option("--omega", ex.omega, "CSV with a header row holding the Mahalanobis matrix");
  explain->add_flag("--standardize", ex.standardize, "z-score features with archive statistics");
  explain->add_option("--archive-cap", ex.archive_cap, "Per-bin reservoir cap (0: unbounded)")->capture_default_str();
  explain->add_option("--no-drift-tolerance", ex.no_drift_tolerance, "Fraction of feature range counted as no drift")
      ->capture_default_str();
  explain->add_flag("--oracle-from-t", ex.oracle_from_t, "Place oracle change points where the 't' column changes");
  explain->add_flag("--pca", ex.pca, "Add 2-D PCA coordinates to reported samples");

  auto* evalcmd = app.add_subcommand("eval", "Run an evaluation experiment");
  evalcmd->require_subcommand(1);

  GridArgs ident;
  auto* ev_id = evalcmd->add_subcommand("identifiability", "MSE of estimated identifiability on mixtures");
  GridArgs protos;
  auto* ev_pr = evalcmd->add_subcommand("prototypes", "Analytic i and C at characteristic samples");
  for (auto [cmd, g] : {std::pair{ev_id, &ident}, std::pair{ev_pr, &protos}}) {
    add_common(cmd, g->common);
    cmd->add_option("--configs", g->configs, "Mixture configs d/n_gauss_per_class/n_class")->delimiter(',');
    cmd->add_option("--runs", g->runs, "Repetitions")->capture_default_str();
    cmd->add_option("--n-train", g->n_train, "Training samples per run")->capture_default_str();
    cmd->add_option("--a", g->a, "Mean box half-width")->capture_default_str();
    cmd->add_option("--sigma", g->sigma, "Component standard deviation")->capture_default_str();
    cmd->add_option("--threads", g->threads, "Worker threads (0: all cores)")->capture_default_str();
  }
  ev_id->add_option("--models", ident.models, "knn, rf")->delimiter(',');
  ev_id->add_option("--n-eval", ident.n_eval, "Evaluation samples per distribution")->capture_default_str();
  protos.methods = {"kmeans-resampled", "kmeans-baseline", "affinity-propagation", "mean-shift"};
  ev_pr->add_option("--methods", protos.methods, "Clustering methods")->delimiter(',');
  ev_pr->add_option("--k", protos.k, "k-means prototype count")->capture_default_str();
  ev_pr->add_option("--m-draw", protos.m_draw, "Resample size (0: sample size)")->capture_default_str();

  CheckerEvalArgs cbe;
  auto* ev_cb = evalcmd->add_subcommand("checkerboard", "Cell misclassification against random flagging");
  add_common(ev_cb, cbe.common);
  ev_cb->add_option("--runs", cbe.runs, "Repetitions")->capture_default_str();
  ev_cb->add_option("--n-per-bin", cbe.n_per_bin, "Samples per bin")->capture_default_str();
  ev_cb->add_option("--grid", cbe.grid, "Cells per side")->capture_default_str();
  ev_cb->add_option("--bins", cbe.bins, "Number of time bins")->capture_default_str();
  ev_cb->add_option("--methods", cbe.methods, "Clustering methods")->delimiter(',');
  ev_cb->add_option("--model", cbe.model, "knn or rf")->capture_default_str();
  ev_cb->add_option("--k", cbe.k, "Neighbours for k-NN")->capture_default_str();
  ev_cb->add_option("--prototypes-per-bin", cbe.prototypes_per_bin, "k-means prototypes per bin")->capture_default_str();
  ev_cb->add_option("--rule", cbe.rule, "Cell flagging rule: presence or i-mass")->capture_default_str();
  ev_cb->add_option("--threads", cbe.threads, "Worker threads (0: all cores)")->capture_default_str();

  BenchArgs bench;
  auto* ev_bm = evalcmd->add_subcommand("benchmark", "Identifiability MSE on a relabeled CSV dataset");
  add_common(ev_bm, bench.common);
  ev_bm->add_option("-i,--input", bench.input, "CSV with a header row");
  ev_bm->add_option("--target", bench.target, "Target column (default: last)");
  ev_bm->add_option("--task", bench.task, "regression or classification")->capture_default_str();
  ev_bm->add_option("--drop", bench.drop, "Columns to ignore")->delimiter(',');
  ev_bm->add_option("--models", bench.models, "knn, rf")->delimiter(',');
  ev_bm->add_option("--runs", bench.runs, "Repetitions")->capture_default_str();
  ev_bm->add_option("--threads", bench.threads, "Worker threads (0: all cores)")->capture_default_str();
  ev_bm->add_option("--name", bench.name, "Dataset name in the results (default: file stem)");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::pair<CLI::App*, const Common*> leaves[] = {
        {gen_gmm, &gmm.common}, {gen_cb, &checker.common}, {explain, &ex.common}, {ev_id, &ident.common},
        {ev_pr, &protos.common}, {ev_cb, &cbe.common},     {ev_bm, &bench.common}};
    for (auto [cmd, common] : leaves) {
      if (cmd->parsed()) apply_config(cmd, common->config);
    }
    if (gen_gmm->parsed()) return run_generate_gmm(gmm);
    if (gen_cb->parsed()) return run_generate_checkerboard(checker);
    if (explain->parsed()) return run_explain(ex);
    if (ev_id->parsed()) return run_eval_identifiability(ident);
    if (ev_pr->parsed()) return run_eval_prototypes(protos);
    if (ev_cb->parsed()) return run_eval_checkerboard(cbe);
    if (ev_bm->parsed()) return run_eval_benchmark(bench);
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IngestionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
