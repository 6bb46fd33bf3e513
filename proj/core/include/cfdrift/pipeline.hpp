#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfdrift/assign.hpp"
#include "cfdrift/proto.hpp"
#include "cfdrift/random.hpp"
#include "cfdrift/timeclf.hpp"
#include "cfdrift/types.hpp"

namespace cfdrift::pipeline {

/// Online drift detector. Decisions depend only on the observed prefix.
class DriftDetector {
 public:
  virtual ~DriftDetector() = default;
  /// Consumes the next sample; true when drift is detected at this sample,
  /// which then opens the new segment.
  virtual bool observe(std::span<const double> x) = 0;
  virtual void reset() = 0;
};

/// Fires exactly at the given 0-based stream positions: position p means the
/// first p samples form the old segment.
class OracleDetector final : public DriftDetector {
 public:
  /// Positions must be strictly increasing and at least 1.
  explicit OracleDetector(std::vector<std::size_t> change_points);
  bool observe(std::span<const double> x) override;
  void reset() override;

 private:
  std::vector<std::size_t> change_points_;
  std::size_t seen_ = 0;
  std::size_t next_ = 0;
};

/// Compares the two halves of the most recent `window` samples; fires when
/// |m₂ − m₁| / √(s₁²/h + s₂²/h) exceeds the threshold in any feature. After
/// firing, the buffer restarts from the triggering sample, so at least one
/// full window passes before the next detection.
class WindowMeanDetector final : public DriftDetector {
 public:
  WindowMeanDetector(std::size_t window, double threshold);
  bool observe(std::span<const double> x) override;
  void reset() override;

  /// Largest per-feature statistic at the last full window (0 before).
  double last_statistic() const noexcept { return last_stat_; }

 private:
  std::size_t window_;
  double threshold_;
  std::deque<std::vector<double>> buffer_;
  double last_stat_ = 0.0;
};

std::unique_ptr<DriftDetector> oracle_detector(std::vector<std::size_t> change_points);
std::unique_ptr<DriftDetector> window_mean_detector(std::size_t window, double threshold);

struct DetectorConfig {
  enum class Kind { Oracle, WindowMean };
  Kind kind = Kind::Oracle;
  std::vector<std::size_t> change_points;
  std::size_t window = 100;
  double threshold = 4.0;
};

struct ClassifierConfig {
  enum class Kind { Knn, RandomForest };
  Kind kind = Kind::Knn;
  timeclf::KnnConfig knn;
  timeclf::ForestConfig forest;  // forest.seed is derived per event
};

struct StreamConfig {
  DetectorConfig detector;
  ClassifierConfig classifier;
  proto::Method method = proto::Method::KMeansResampled;
  std::size_t prototypes_per_bin = 5;
  std::size_t m_draw = 0;  // 0: resample |archive| points
  proto::MeanShiftOptions mean_shift;
  proto::AffinityOptions affinity;
  assign::Dissimilarity dissimilarity;
  std::uint64_t seed = 0;
  bool standardize = false;
  /// Per-bin reservoir cap on archived samples; 0 keeps everything.
  std::size_t archive_cap_per_bin = 0;
  /// A feature counts as drift-free when its mean |difference| is at most
  /// this fraction of its range in the archive.
  double no_drift_tolerance = 0.05;

  void validate() const;
};

struct ReportSample {
  std::size_t archive_index = 0;
  std::size_t stream_position = 0;
  TimeBin bin;
  double i_value = 0.0;
  FeatureVector x;
};

struct ReportPair {
  std::size_t characteristic = 0;  // index into ExplanationReport::characteristic
  ReportSample associated;
  double cost = 0.0;
  std::vector<double> difference;  // associated − characteristic
};

struct BinAssociation {
  TimeBin target;
  double total_cost = 0.0;
  std::vector<ReportPair> pairs;
};

struct FeatureSummary {
  std::size_t feature = 0;
  double mean_abs_difference = 0.0;
  double mean_difference = 0.0;
  bool no_drift = false;
};

struct ExplanationReport {
  std::size_t event = 0;         // 0-based drift event number
  std::size_t change_point = 0;  // stream position of the triggering sample
  int n_bins = 0;
  std::size_t n_archived = 0;
  std::size_t dimension = 0;
  double mean_identifiability = 0.0;
  std::vector<double> feature_range;  // max − min per feature over the archive
  std::vector<ReportSample> characteristic;
  std::vector<BinAssociation> associations;
  std::vector<FeatureSummary> feature_summary;  // ranked, largest first
  std::vector<std::string> warnings;
};

/// Ranks features by mean |difference| over cross-bin pairs (associated bin
/// differs from the characteristic bin). Empty when there are none.
std::vector<FeatureSummary> summarize_report(const ExplanationReport& report, double no_drift_tolerance = 0.05);

/// Archived snapshot used for one explanation.
struct Archive {
  Dataset data;
  std::vector<std::size_t> stream_positions;
};

/// Explains one archived snapshot: trains the time classifier, estimates
/// identifiability, finds characteristic samples and associates them per bin.
ExplanationReport explain_snapshot(const Archive& archive, const StreamConfig& cfg, std::size_t event,
                                   std::size_t change_point);

/// Streaming drift explanation. Each detection closes the current segment and
/// opens a new time bin; the report for a detection is emitted once the
/// segment it opened has closed (at the next detection or at finish()), so
/// every report compares at least two populated bins. The triggering sample
/// belongs to the new bin.
class DriftExplainer {
 public:
  explicit DriftExplainer(StreamConfig cfg);
  DriftExplainer(StreamConfig cfg, std::unique_ptr<DriftDetector> detector);

  /// Throws ValidationError if x has a different dimension than earlier
  /// samples or a non-finite entry.
  std::optional<ExplanationReport> observe(std::span<const double> x);
  std::optional<ExplanationReport> finish();

  Archive snapshot() const;
  std::size_t position() const noexcept { return position_; }
  int current_bin() const noexcept { return current_bin_; }

 private:
  struct Entry {
    std::vector<double> x;
    int bin;
    std::size_t position;
  };
  struct PendingEvent {
    std::size_t event;
    std::size_t change_point;
  };

  std::optional<ExplanationReport> explain_pending();
  void archive(std::span<const double> x);

  StreamConfig cfg_;
  std::unique_ptr<DriftDetector> detector_;
  std::vector<Entry> entries_;
  std::vector<std::vector<std::size_t>> bin_slots_;
  std::vector<std::size_t> bin_seen_;
  Rng reservoir_rng_;
  std::optional<PendingEvent> pending_;
  std::size_t events_ = 0;
  std::size_t position_ = 0;
  std::size_t dim_ = 0;
  int current_bin_ = 1;
};

/// Runs DriftExplainer over a whole stream, including the final flush.
/// Errors are rethrown with the stream position attached.
std::vector<ExplanationReport> explain_stream(const Matrix& stream, const StreamConfig& cfg);

}  // namespace cfdrift::pipeline
