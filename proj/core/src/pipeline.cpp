#include "cfdrift/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "cfdrift/entropy.hpp"
#include "cfdrift/errors.hpp"

namespace cfdrift::pipeline {

OracleDetector::OracleDetector(std::vector<std::size_t> change_points)
    : change_points_(std::move(change_points)) {
  for (std::size_t i = 0; i < change_points_.size(); ++i) {
    if (change_points_[i] < 1) throw ValidationError("change points must be at least 1");
    if (i > 0 && change_points_[i] <= change_points_[i - 1]) {
      throw ValidationError("change points must be strictly increasing");
    }
  }
}

bool OracleDetector::observe(std::span<const double>) {
  const std::size_t pos = seen_++;
  if (next_ < change_points_.size() && change_points_[next_] == pos) {
    ++next_;
    return true;
  }
  return false;
}

void OracleDetector::reset() {
  seen_ = 0;
  next_ = 0;
}

WindowMeanDetector::WindowMeanDetector(std::size_t window, double threshold)
    : window_(window), threshold_(threshold) {
  if (window_ < 2) throw ValidationError("window detector needs a window of at least 2");
  if (std::isnan(threshold_)) throw ValidationError("window detector threshold is NaN");
}

bool WindowMeanDetector::observe(std::span<const double> x) {
  buffer_.emplace_back(x.begin(), x.end());
  if (buffer_.size() > window_) buffer_.pop_front();
  if (buffer_.size() < window_) return false;

  const std::size_t h = window_ / 2;
  const std::size_t start = buffer_.size() - 2 * h;
  const std::size_t dim = x.size();
  double stat = 0.0;
  for (std::size_t f = 0; f < dim; ++f) {
    auto moments = [&](std::size_t from) {
      double m = 0.0;
      for (std::size_t i = 0; i < h; ++i) m += buffer_[from + i][f];
      m /= static_cast<double>(h);
      double v = 0.0;
      for (std::size_t i = 0; i < h; ++i) v += (buffer_[from + i][f] - m) * (buffer_[from + i][f] - m);
      v = h > 1 ? v / static_cast<double>(h - 1) : 0.0;
      return std::pair{m, v};
    };
    const auto [m1, v1] = moments(start);
    const auto [m2, v2] = moments(start + h);
    const double se = std::sqrt((v1 + v2) / static_cast<double>(h));
    double z = 0.0;
    if (se > 0.0) {
      z = std::abs(m2 - m1) / se;
    } else if (m1 != m2) {
      z = std::numeric_limits<double>::infinity();
    }
    stat = std::max(stat, z);
  }
  last_stat_ = stat;
  if (stat > threshold_) {
    buffer_.clear();
    buffer_.emplace_back(x.begin(), x.end());
    return true;
  }
  return false;
}

void WindowMeanDetector::reset() {
  buffer_.clear();
  last_stat_ = 0.0;
}

std::unique_ptr<DriftDetector> oracle_detector(std::vector<std::size_t> change_points) {
  return std::make_unique<OracleDetector>(std::move(change_points));
}

std::unique_ptr<DriftDetector> window_mean_detector(std::size_t window, double threshold) {
  return std::make_unique<WindowMeanDetector>(window, threshold);
}

void StreamConfig::validate() const {
  if (prototypes_per_bin < 1) throw ValidationError("prototypes_per_bin must be at least 1");
  if (classifier.kind == ClassifierConfig::Kind::Knn && classifier.knn.k < 1) {
    throw ValidationError("k-NN k must be at least 1");
  }
  if (classifier.kind == ClassifierConfig::Kind::RandomForest && classifier.forest.n_trees < 1) {
    throw ValidationError("random forest needs at least one tree");
  }
  if (!(no_drift_tolerance >= 0.0)) throw ValidationError("no_drift_tolerance must be nonnegative");
  if (detector.kind == DetectorConfig::Kind::WindowMean && detector.window < 2) {
    throw ValidationError("window detector needs a window of at least 2");
  }
}

namespace {

std::unique_ptr<DriftDetector> make_detector(const DetectorConfig& cfg) {
  switch (cfg.kind) {
    case DetectorConfig::Kind::Oracle: return oracle_detector(cfg.change_points);
    case DetectorConfig::Kind::WindowMean: return window_mean_detector(cfg.window, cfg.threshold);
  }
  throw ValidationError("unknown detector kind");
}

Matrix standardized(const Matrix& x) {
  Matrix out = x;
  for (std::size_t f = 0; f < x.cols(); ++f) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, f);
    m /= static_cast<double>(x.rows());
    double v = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) v += (x(i, f) - m) * (x(i, f) - m);
    const double sd = std::sqrt(v / static_cast<double>(x.rows()));
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, f) = (x(i, f) - m) * scale;
  }
  return out;
}

}  // namespace

std::vector<FeatureSummary> summarize_report(const ExplanationReport& report, double no_drift_tolerance) {
  const std::size_t d = report.dimension;
  std::vector<double> abs_sum(d, 0.0), sum(d, 0.0);
  std::size_t pairs = 0;
  for (const auto& assoc : report.associations) {
    for (const auto& p : assoc.pairs) {
      if (p.associated.bin == report.characteristic.at(p.characteristic).bin) continue;
      for (std::size_t f = 0; f < d; ++f) {
        abs_sum[f] += std::abs(p.difference[f]);
        sum[f] += p.difference[f];
      }
      ++pairs;
    }
  }
  if (pairs == 0) return {};
  std::vector<FeatureSummary> out(d);
  for (std::size_t f = 0; f < d; ++f) {
    auto& s = out[f];
    s.feature = f;
    s.mean_abs_difference = abs_sum[f] / static_cast<double>(pairs);
    s.mean_difference = sum[f] / static_cast<double>(pairs);
    const double range = f < report.feature_range.size() ? report.feature_range[f] : 0.0;
    s.no_drift = s.mean_abs_difference == 0.0 ||
                 (range > 0.0 && s.mean_abs_difference <= no_drift_tolerance * range);
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureSummary& a, const FeatureSummary& b) {
    return a.mean_abs_difference > b.mean_abs_difference;
  });
  return out;
}

ExplanationReport explain_snapshot(const Archive& archive, const StreamConfig& cfg, std::size_t event,
                                   std::size_t change_point) {
  cfg.validate();
  const Dataset& raw = archive.data;
  if (raw.n_bins() < 2) throw UnsupportedConfigError("explanation needs at least two time bins");
  const Dataset model = cfg.standardize ? raw.with_features(standardized(raw.features())) : raw;

  std::unique_ptr<timeclf::TimeClassifier> clf;
  if (cfg.classifier.kind == ClassifierConfig::Kind::Knn) {
    clf = timeclf::fit_knn(model, cfg.classifier.knn);
  } else {
    auto fc = cfg.classifier.forest;
    fc.seed = derive_seed(cfg.seed, {event, 11});
    clf = timeclf::fit_random_forest(model, fc);
  }
  const auto i_hat = timeclf::estimate_identifiability(*clf, model.features());

  proto::FindOptions find;
  find.method = cfg.method;
  find.m_draw = cfg.m_draw;
  find.k = cfg.prototypes_per_bin * static_cast<std::size_t>(raw.n_bins());
  find.seed = derive_seed(cfg.seed, {event, 12});
  find.mean_shift = cfg.mean_shift;
  find.affinity = cfg.affinity;
  auto found = proto::find_characteristic_samples(model, i_hat, find);
  const auto assignments = assign::associate_all(found.samples, model, cfg.dissimilarity);

  ExplanationReport report;
  report.event = event;
  report.change_point = change_point;
  report.n_bins = raw.n_bins();
  report.n_archived = raw.size();
  report.dimension = raw.dimension();
  report.mean_identifiability = mean_identifiability(i_hat);
  report.warnings = std::move(found.warnings);
  report.feature_range.assign(raw.dimension(), 0.0);
  for (std::size_t f = 0; f < raw.dimension(); ++f) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      lo = std::min(lo, raw.x(i)[f]);
      hi = std::max(hi, raw.x(i)[f]);
    }
    report.feature_range[f] = hi - lo;
  }
  auto describe = [&](std::size_t idx) {
    auto x = raw.x(idx);
    return ReportSample{idx, archive.stream_positions[idx], raw.bin(idx), i_hat[idx],
                        FeatureVector(x.begin(), x.end())};
  };
  for (const auto& c : found.samples) report.characteristic.push_back(describe(c.index));
  for (const auto& a : assignments) {
    BinAssociation ba{a.target, a.total_cost, {}};
    for (const auto& p : a.pairs) {
      ReportPair rp;
      rp.characteristic = p.row;
      rp.associated = describe(p.sample);
      rp.cost = p.cost;
      rp.difference = assign::feature_difference(raw.sample(found.samples[p.row].index), raw.sample(p.sample));
      ba.pairs.push_back(std::move(rp));
    }
    report.associations.push_back(std::move(ba));
  }
  report.feature_summary = summarize_report(report, cfg.no_drift_tolerance);
  return report;
}

DriftExplainer::DriftExplainer(StreamConfig cfg)
    : DriftExplainer(cfg, make_detector(cfg.detector)) {}

DriftExplainer::DriftExplainer(StreamConfig cfg, std::unique_ptr<DriftDetector> detector)
    : cfg_(std::move(cfg)),
      detector_(std::move(detector)),
      reservoir_rng_(derive_seed(cfg_.seed, {0x5eed})) {
  cfg_.validate();
  if (!detector_) throw ValidationError("drift explainer needs a detector");
}

void DriftExplainer::archive(std::span<const double> x) {
  const auto b = static_cast<std::size_t>(current_bin_ - 1);
  if (bin_slots_.size() <= b) {
    bin_slots_.resize(b + 1);
    bin_seen_.resize(b + 1, 0);
  }
  const std::size_t seen = ++bin_seen_[b];
  Entry e{std::vector<double>(x.begin(), x.end()), current_bin_, position_};
  if (cfg_.archive_cap_per_bin == 0 || bin_slots_[b].size() < cfg_.archive_cap_per_bin) {
    bin_slots_[b].push_back(entries_.size());
    entries_.push_back(std::move(e));
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(0, seen - 1);
  const std::size_t j = pick(reservoir_rng_);
  if (j < cfg_.archive_cap_per_bin) entries_[bin_slots_[b][j]] = std::move(e);
}

Archive DriftExplainer::snapshot() const {
  Matrix x(0, dim_);
  std::vector<TimeBin> bins;
  std::vector<std::size_t> positions;
  for (const auto& e : entries_) {
    x.append_row(e.x);
    bins.push_back(TimeBin{e.bin});
    positions.push_back(e.position);
  }
  return {Dataset(std::move(x), std::move(bins), current_bin_), std::move(positions)};
}

std::optional<ExplanationReport> DriftExplainer::explain_pending() {
  if (!pending_) return std::nullopt;
  const auto ev = *pending_;
  pending_.reset();
  return explain_snapshot(snapshot(), cfg_, ev.event, ev.change_point);
}

std::optional<ExplanationReport> DriftExplainer::observe(std::span<const double> x) {
  if (x.empty()) throw ValidationError("stream sample has no features");
  if (dim_ == 0) dim_ = x.size();
  if (x.size() != dim_) {
    throw ValidationError("stream sample has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim_));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("stream sample has a non-finite feature");
  }
  std::optional<ExplanationReport> report;
  if (detector_->observe(x) && !entries_.empty()) {
    report = explain_pending();
    pending_ = PendingEvent{events_++, position_};
    ++current_bin_;
  }
  archive(x);
  ++position_;
  return report;
}

std::optional<ExplanationReport> DriftExplainer::finish() { return explain_pending(); }

std::vector<ExplanationReport> explain_stream(const Matrix& stream, const StreamConfig& cfg) {
  DriftExplainer explainer(cfg);
  std::vector<ExplanationReport> out;
  for (std::size_t i = 0; i < stream.rows(); ++i) {
    try {
      if (auto r = explainer.observe(stream.row(i))) out.push_back(std::move(*r));
    } catch (const StreamError&) {
      throw;
    } catch (const std::exception& e) {
      throw StreamError(i, e.what());
    }
  }
  try {
    if (auto r = explainer.finish()) out.push_back(std::move(*r));
  } catch (const std::exception& e) {
    throw StreamError(stream.rows(), e.what());
  }
  return out;
}

}  // namespace cfdrift::pipeline
