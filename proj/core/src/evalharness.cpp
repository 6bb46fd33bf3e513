#include "cfdrift/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"
#include "cfdrift/pipeline.hpp"
#include "cfdrift/random.hpp"

namespace cfdrift::eval {

std::string GmmConfig::label() const {
  return std::to_string(d) + "/" + std::to_string(n_gauss_per_class) + "/" + std::to_string(n_class);
}

GmmConfig GmmConfig::parse(std::string_view label) {
  std::size_t parts[3];
  std::size_t found = 0;
  const char* p = label.data();
  const char* end = label.data() + label.size();
  while (found < 3) {
    auto [next, ec] = std::from_chars(p, end, parts[found]);
    if (ec != std::errc{}) break;
    ++found;
    p = next;
    if (found < 3) {
      if (p == end || *p != '/') break;
      ++p;
    }
  }
  if (found != 3 || p != end) {
    throw ValidationError("bad mixture config '" + std::string(label) + "', expected d/n_gauss_per_class/n_class");
  }
  GmmConfig c{parts[0], parts[1], parts[2]};
  if (c.d < 1 || c.n_gauss_per_class < 1 || c.n_class < 2) {
    throw ValidationError("mixture config '" + std::string(label) + "' needs d >= 1, n_gauss >= 1, n_class >= 2");
  }
  return c;
}

std::string_view to_string(Model m) noexcept {
  return m == Model::Knn ? "knn" : "rf";
}

Model parse_model(std::string_view name) {
  if (name == "knn") return Model::Knn;
  if (name == "rf" || name == "forest" || name == "random-forest") return Model::RandomForest;
  throw ValidationError("unknown model '" + std::string(name) + "' (expected knn or rf)");
}

void ExperimentGrid::validate() const {
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (configs.empty()) throw ValidationError("grid has no configurations");
  if (n_train < 2 || n_eval < 1) throw ValidationError("grid needs n_train >= 2 and n_eval >= 1");
  if (!(a > 0.0) || !(sigma > 0.0)) throw ValidationError("grid needs a > 0 and sigma > 0");
  if (k < 1) throw ValidationError("prototype count must be at least 1");
}

StatCell StatCell::from_values(std::vector<double> values) {
  StatCell c;
  c.runs = values.size();
  if (!values.empty()) {
    c.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - c.mean) * (v - c.mean);
      c.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
  }
  c.values = std::move(values);
  return c;
}

const ResultRow* ResultTable::find(std::string_view config, std::string_view method, std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.config == config && r.method == method && r.metric == metric) return &r;
  }
  return nullptr;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

synth::GmmSpec gmm_spec(const ExperimentGrid& grid, const GmmConfig& c, std::uint64_t seed) {
  synth::GmmSpec s;
  s.d = c.d;
  s.n_gauss_per_class = c.n_gauss_per_class;
  s.n_class = c.n_class;
  s.a = grid.a;
  s.sigma = grid.sigma;
  s.seed = seed;
  return s;
}

std::unique_ptr<timeclf::TimeClassifier> train(Model m, const Dataset& data, const timeclf::KnnConfig& knn,
                                               timeclf::ForestConfig forest, std::uint64_t seed) {
  if (m == Model::Knn) return timeclf::fit_knn(data, knn);
  forest.seed = seed;
  return timeclf::fit_random_forest(data, forest);
}

Matrix uniform_box(std::size_t n, std::size_t d, double a, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-a, a);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out(i, j) = u(rng);
  }
  return out;
}

}  // namespace

ResultTable eval_identifiability(const ExperimentGrid& grid) {
  grid.validate();
  if (grid.models.empty()) throw ValidationError("identifiability grid needs at least one model");
  ResultTable table{"identifiability", {}};
  for (const auto& c : grid.configs) {
    const std::uint64_t cseed = derive_seed(grid.seed, {stable_hash(c.label())});
    // values[model][run]
    std::vector<std::vector<double>> values(grid.models.size(), std::vector<double>(grid.runs));
    parallel_for(grid.runs, grid.threads, [&](std::size_t r) {
      const auto spec = gmm_spec(grid, c, derive_seed(cseed, {r, 0}));
      const auto model = synth::make_model(spec);
      Rng train_rng(derive_seed(cseed, {r, 1}));
      const Dataset train_set = model.sample(grid.n_train, train_rng);

      Matrix eval_x(0, c.d);
      Rng p_rng(derive_seed(cseed, {r, 2}));
      Rng wide_rng(derive_seed(cseed, {r, 3}));
      const auto from_p = model.sample_features(grid.n_eval, p_rng);
      const auto from_wide = model.with_sigma(3.0 * grid.sigma).sample_features(grid.n_eval, wide_rng);
      const auto from_box = uniform_box(grid.n_eval, c.d, grid.a, derive_seed(cseed, {r, 4}));
      for (const Matrix* m : {&from_p, &from_wide, &from_box}) {
        for (std::size_t i = 0; i < m->rows(); ++i) eval_x.append_row(m->row(i));
      }
      std::vector<double> truth(eval_x.rows());
      for (std::size_t i = 0; i < eval_x.rows(); ++i) truth[i] = model.identifiability(eval_x.row(i));

      for (std::size_t mi = 0; mi < grid.models.size(); ++mi) {
        auto clf = train(grid.models[mi], train_set, grid.knn, grid.forest, derive_seed(cseed, {r, 5, mi}));
        const auto est = timeclf::estimate_identifiability(*clf, eval_x);
        values[mi][r] = timeclf::identifiability_mse(est, truth);
      }
    });
    for (std::size_t mi = 0; mi < grid.models.size(); ++mi) {
      table.rows.push_back({c.label(), std::string(to_string(grid.models[mi])), "mse",
                            StatCell::from_values(std::move(values[mi]))});
    }
  }
  return table;
}

ResultTable eval_prototypes(const ExperimentGrid& grid) {
  grid.validate();
  if (grid.methods.empty()) throw ValidationError("prototype grid needs at least one method");
  ResultTable table{"prototypes", {}};
  for (const auto& c : grid.configs) {
    const std::uint64_t cseed = derive_seed(grid.seed, {stable_hash(c.label())});
    const std::size_t nm = grid.methods.size();
    std::vector<std::vector<double>> mean_i(nm, std::vector<double>(grid.runs));
    std::vector<std::vector<double>> mean_c(nm, std::vector<double>(grid.runs));
    parallel_for(grid.runs, grid.threads, [&](std::size_t r) {
      const auto spec = gmm_spec(grid, c, derive_seed(cseed, {r, 0}));
      const auto model = synth::make_model(spec);
      Rng rng(derive_seed(cseed, {r, 1}));
      const Dataset data = model.sample(grid.n_train, rng);
      std::vector<double> truth(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) truth[i] = model.identifiability(data.x(i));

      for (std::size_t mi = 0; mi < nm; ++mi) {
        proto::FindOptions opts;
        opts.method = grid.methods[mi];
        opts.k = grid.k;
        opts.m_draw = grid.m_draw;
        opts.seed = derive_seed(cseed, {r, 2, mi});
        const auto found = proto::find_characteristic_samples(data, truth, opts);
        double si = 0.0, sc = 0.0;
        for (const auto& s : found.samples) {
          si += model.identifiability(s.sample.x);
          sc += model.characterizing(s.sample.x);
        }
        const double n = static_cast<double>(found.samples.size());
        mean_i[mi][r] = si / n;
        mean_c[mi][r] = sc / n;
      }
    });
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const std::string method(proto::to_string(grid.methods[mi]));
      table.rows.push_back({c.label(), method, "mean_i", StatCell::from_values(std::move(mean_i[mi]))});
      table.rows.push_back({c.label(), method, "mean_c", StatCell::from_values(std::move(mean_c[mi]))});
    }
  }
  return table;
}

std::string_view to_string(FlagRule r) noexcept {
  return r == FlagRule::Presence ? "presence" : "i-mass";
}

FlagRule parse_flag_rule(std::string_view name) {
  if (name == "presence") return FlagRule::Presence;
  if (name == "i-mass" || name == "imass") return FlagRule::IMass;
  throw ValidationError("unknown flag rule '" + std::string(name) + "' (expected presence or i-mass)");
}

void CheckerboardOptions::validate() const {
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (n_per_bin < 1) throw ValidationError("n_per_bin must be at least 1");
  if (grid < 1) throw ValidationError("grid must be at least 1");
  if (n_bins < 2) throw ValidationError("checkerboard needs at least two bins");
  if (methods.empty()) throw ValidationError("checkerboard needs at least one method");
  if (prototypes_per_bin < 1) throw ValidationError("prototypes_per_bin must be at least 1");
}

double cell_score(std::span<const int> flagged, std::span<const int> changed, int n_cells) {
  if (n_cells < 1) throw ValidationError("cell score needs at least one cell");
  std::vector<char> f(static_cast<std::size_t>(n_cells), 0), g(static_cast<std::size_t>(n_cells), 0);
  for (int c : flagged) f.at(static_cast<std::size_t>(c)) = 1;
  for (int c : changed) g.at(static_cast<std::size_t>(c)) = 1;
  std::size_t diff = 0;
  for (std::size_t c = 0; c < f.size(); ++c) diff += f[c] != g[c];
  return static_cast<double>(diff) / n_cells;
}

double random_flagging_baseline(std::size_t f, std::size_t g, int n_cells) {
  const double n = n_cells;
  const double fd = static_cast<double>(f), gd = static_cast<double>(g);
  return (fd + gd - 2.0 * fd * gd / n) / n;
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                            static_cast<double>(n) * std::log(2.0);
    p += std::exp(log_term);
  }
  return std::min(1.0, p);
}

CheckerboardResult eval_checkerboard(const CheckerboardOptions& options) {
  options.validate();
  const std::size_t nm = options.methods.size();
  const int n_cells = options.grid * options.grid;
  std::vector<std::vector<double>> scores(nm, std::vector<double>(options.runs));
  std::vector<std::vector<double>> baselines(nm, std::vector<double>(options.runs));

  parallel_for(options.runs, options.threads, [&](std::size_t r) {
    const auto spec = synth::random_checkerboard_spec(options.grid, options.n_bins, derive_seed(options.seed, {r, 0}));
    const auto cb = synth::sample_checkerboard(spec, options.n_per_bin, derive_seed(options.seed, {r, 1}));

    for (std::size_t mi = 0; mi < nm; ++mi) {
      pipeline::StreamConfig cfg;
      cfg.detector.kind = pipeline::DetectorConfig::Kind::Oracle;
      for (int b = 1; b < options.n_bins; ++b) {
        cfg.detector.change_points.push_back(static_cast<std::size_t>(b) * options.n_per_bin);
      }
      cfg.classifier.kind = options.model == Model::Knn ? pipeline::ClassifierConfig::Kind::Knn
                                                         : pipeline::ClassifierConfig::Kind::RandomForest;
      cfg.classifier.knn = options.knn;
      cfg.method = options.methods[mi];
      cfg.prototypes_per_bin = options.prototypes_per_bin;
      cfg.seed = derive_seed(options.seed, {r, 2, mi});
      const auto reports = pipeline::explain_stream(cb.data.features(), cfg);

      std::vector<int> flagged;
      if (!reports.empty()) {
        const auto& rep = reports.back();
        if (options.rule == FlagRule::Presence) {
          for (const auto& s : rep.characteristic) flagged.push_back(synth::checkerboard_cell(s.x, options.grid));
        } else {
          // Reproduce the pipeline's estimate on the archive, then flag cells
          // holding more than an even share of the total estimated i.
          auto clf = train(options.model, cb.data, options.knn, {}, derive_seed(cfg.seed, {rep.event, 11}));
          const auto est = timeclf::estimate_identifiability(*clf, cb.data.features());
          std::vector<double> mass(static_cast<std::size_t>(n_cells), 0.0);
          for (std::size_t i = 0; i < est.size(); ++i) mass[static_cast<std::size_t>(cb.cell[i])] += est[i];
          const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
          for (int c = 0; c < n_cells; ++c) {
            if (total > 0.0 && mass[static_cast<std::size_t>(c)] / total > 1.0 / n_cells) flagged.push_back(c);
          }
        }
      }
      std::sort(flagged.begin(), flagged.end());
      flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
      scores[mi][r] = cell_score(flagged, cb.changed_cells, n_cells);
      baselines[mi][r] = random_flagging_baseline(flagged.size(), cb.changed_cells.size(), n_cells);
    }
  });

  CheckerboardResult out;
  out.table.experiment = "checkerboard";
  const std::string config = std::to_string(options.grid) + "/" + std::to_string(options.n_bins) + "/" +
                             std::to_string(options.n_per_bin);
  for (std::size_t mi = 0; mi < nm; ++mi) {
    SignTest st;
    for (std::size_t r = 0; r < options.runs; ++r) {
      if (scores[mi][r] < baselines[mi][r]) {
        ++st.wins;
      } else if (scores[mi][r] > baselines[mi][r]) {
        ++st.losses;
      } else {
        ++st.ties;
      }
    }
    st.p_value = sign_test_p_value(st.wins, st.losses);
    out.sign_tests.push_back(st);
    const std::string method(proto::to_string(options.methods[mi]));
    out.table.rows.push_back({config, method, "score", StatCell::from_values(std::move(scores[mi]))});
    out.table.rows.push_back({config, method, "baseline", StatCell::from_values(std::move(baselines[mi]))});
  }
  return out;
}

Task parse_task(std::string_view name) {
  if (name == "regression") return Task::Regression;
  if (name == "classification") return Task::Classification;
  throw ValidationError("unknown task '" + std::string(name) + "' (expected regression or classification)");
}

void BenchmarkOptions::validate() const {
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (models.empty()) throw ValidationError("benchmark needs at least one model");
}

ResultTable eval_benchmark(const Matrix& x, std::span<const double> y, const BenchmarkOptions& options,
                           const std::string& name) {
  options.validate();
  if (x.rows() != y.size()) throw ValidationError("benchmark needs one target per row");
  if (x.rows() < 4) throw ValidationError("benchmark needs at least four rows");
  std::vector<long long> labels;
  if (options.task == Task::Classification) {
    labels.reserve(y.size());
    for (double v : y) {
      if (v != std::floor(v)) throw ValidationError("classification labels must be integers");
      labels.push_back(static_cast<long long>(v));
    }
  }
  const std::size_t nmod = options.models.size();
  std::vector<std::vector<double>> values(nmod, std::vector<double>(options.runs));
  parallel_for(options.runs, options.threads, [&](std::size_t r) {
    const std::uint64_t relabel_seed = derive_seed(options.seed, {r, 1});
    const auto rel = options.task == Task::Regression ? synth::relabel_regression(x, y, relabel_seed)
                                                      : synth::relabel_classification(x, labels, relabel_seed);
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(options.seed, {r, 2}));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t half = idx.size() / 2;
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    std::vector<TimeBin> train_bins;
    for (auto i : train_idx) train_bins.push_back(rel.data.bin(i));
    const Dataset train_set(rel.data.features().select_rows(train_idx), std::move(train_bins), 2);
    const Matrix test_x = rel.data.features().select_rows(test_idx);
    std::vector<double> truth;
    for (auto i : test_idx) truth.push_back(rel.i_true[i]);

    for (std::size_t mi = 0; mi < nmod; ++mi) {
      auto clf = train(options.models[mi], train_set, options.knn, options.forest, derive_seed(options.seed, {r, 3, mi}));
      values[mi][r] = timeclf::identifiability_mse(timeclf::estimate_identifiability(*clf, test_x), truth);
    }
  });
  ResultTable table{"benchmark", {}};
  for (std::size_t mi = 0; mi < nmod; ++mi) {
    table.rows.push_back({name, std::string(to_string(options.models[mi])), "mse",
                          StatCell::from_values(std::move(values[mi]))});
  }
  return table;
}

}  // namespace cfdrift::eval
