#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfdrift/evalharness.hpp"
#include "cfdrift/pipeline.hpp"
#include "cfdrift/types.hpp"

// CSV dialect: comma separated, '.' decimal point, one header row. Numbers
// are written in shortest round-trip form, so write → read is lossless.
// Row numbers in errors are 1-based file lines; the header is row 1.
namespace cfdrift::io {

std::string format_double(double v);

/// Parses a finite double; throws IngestionError naming row and column.
double parse_double(std::string_view field, std::size_t row, std::string_view column);

/// Numeric table with a header. Columns listed in `drop` are skipped before
/// parsing, so they may hold text.
struct Table {
  std::vector<std::string> header;
  Matrix values;

  /// Throws ValidationError when absent.
  std::size_t column(std::string_view name) const;
};

Table read_table(std::istream& in, std::span<const std::string> drop = {});
Table read_table(const std::filesystem::path& path, std::span<const std::string> drop = {});

/// Feature stream, optionally with a time-bin column named "t".
struct StreamInput {
  Matrix x;
  std::vector<std::string> feature_names;
  std::optional<std::vector<TimeBin>> t;
};

StreamInput read_stream_csv(std::istream& in, std::span<const std::string> drop = {});
/// One JSON array of numbers per line, or an object with an "x" array and an optional integer "t".
StreamInput read_ndjson(std::istream& in);
/// Dispatches on the extension: .ndjson and .jsonl are NDJSON, anything else CSV.
StreamInput read_stream(const std::filesystem::path& path, std::span<const std::string> drop = {});

/// Requires the "t" column; n_bins is the largest label.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_ground_truth_csv(std::ostream& out, std::span<const double> i_true, std::span<const double> c_true = {},
                            std::span<const int> cell = {});

struct ReportJsonOptions {
  std::vector<std::string> feature_names;  // defaults to f0..f{d-1}
  bool pca2d = false;  // adds a 2-D PCA projection of every reported vector
  int indent = 2;
};

std::string report_to_json(const pipeline::ExplanationReport& report, const ReportJsonOptions& options = {});

/// Columns: pair_id, bin, role, features..., i_value, cost. Each pair
/// contributes a characteristic row followed by an associated row.
void write_pairs_csv(std::ostream& out, const pipeline::ExplanationReport& report);

/// Columns: experiment, config, method, metric, mean, std, runs.
void write_results_csv(std::ostream& out, const eval::ResultTable& table);
/// Columns: experiment, config, method, metric, run, value.
void write_runs_csv(std::ostream& out, const eval::ResultTable& table);
/// Rebuilds a table (mean/std recomputed) from write_runs_csv output.
eval::ResultTable read_runs_csv(std::istream& in);

std::string results_to_json(const eval::ResultTable& table,
                            std::span<const eval::SignTest> sign_tests = {},
                            std::span<const std::string> sign_test_methods = {});

/// Stages output files under temporary names and renames them all on
/// commit(). Without a commit the staged files are removed, so a failed run
/// leaves no partial outputs.
class OutputTransaction {
 public:
  explicit OutputTransaction(std::filesystem::path directory);
  ~OutputTransaction();
  OutputTransaction(const OutputTransaction&) = delete;
  OutputTransaction& operator=(const OutputTransaction&) = delete;

  void write(const std::string& name, const std::function<void(std::ostream&)>& fill);
  void write(const std::string& name, const std::string& content);
  /// Final paths, in write order.
  std::vector<std::filesystem::path> commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;  // temp, final
  bool committed_ = false;
};

}  // namespace cfdrift::io
