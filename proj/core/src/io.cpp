#include "cfdrift/io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <array>
#include <map>
#include <tuple>
#include <ostream>
#include <sstream>
#include <system_error>

#include "cfdrift/errors.hpp"

namespace cfdrift::io {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw ValidationError("cannot format number");
  return std::string(buf, end);
}

double parse_double(std::string_view field, std::size_t row, std::string_view column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || end != field.data() + field.size() || !std::isfinite(v)) {
    throw IngestionError(row, "row " + std::to_string(row) + ", column '" + std::string(column) +
                                  "': not a finite number: '" + std::string(field) + "'");
  }
  return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
    std::size_t s = 0;
    while (s < f.size() && (f[s] == ' ' || f[s] == '\t')) ++s;
    f.erase(0, s);
  }
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return in;
}

int to_bin(double v, std::size_t row) {
  if (v != std::floor(v) || v < 1.0 || v > 1e9) {
    throw IngestionError(row, "row " + std::to_string(row) + ": time bin must be a positive integer");
  }
  return static_cast<int>(v);
}

int max_bin(const std::vector<TimeBin>& bins) {
  int n = 0;
  for (auto b : bins) n = std::max(n, b.index);
  return n;
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

Table read_table(std::istream& in, std::span<const std::string> drop) {
  std::string line;
  if (!next_line(in, line)) throw IngestionError(1, "row 1: missing header");
  const auto full_header = split_line(line);
  std::vector<char> keep(full_header.size(), 1);
  for (std::size_t c = 0; c < full_header.size(); ++c) {
    if (std::find(drop.begin(), drop.end(), full_header[c]) != drop.end()) keep[c] = 0;
  }
  Table t;
  for (std::size_t c = 0; c < full_header.size(); ++c) {
    if (keep[c]) t.header.push_back(full_header[c]);
  }
  if (t.header.empty()) throw IngestionError(1, "row 1: no numeric columns left");
  t.values = Matrix(0, t.header.size());
  std::vector<double> row_values(t.header.size());
  std::size_t row = 1;
  while (next_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != full_header.size()) {
      throw IngestionError(row, "row " + std::to_string(row) + ": expected " + std::to_string(full_header.size()) +
                                    " fields, found " + std::to_string(fields.size()));
    }
    std::size_t k = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (keep[c]) row_values[k++] = parse_double(fields[c], row, full_header[c]);
    }
    t.values.append_row(row_values);
  }
  return t;
}

Table read_table(const fs::path& path, std::span<const std::string> drop) {
  auto in = open_input(path);
  return read_table(in, drop);
}

StreamInput read_stream_csv(std::istream& in, std::span<const std::string> drop) {
  auto table = read_table(in, drop);
  StreamInput s;
  auto it = std::find(table.header.begin(), table.header.end(), "t");
  if (it == table.header.end()) {
    s.feature_names = std::move(table.header);
    s.x = std::move(table.values);
    return s;
  }
  const std::size_t tc = static_cast<std::size_t>(it - table.header.begin());
  if (table.header.size() < 2) throw IngestionError(1, "row 1: no feature columns");
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != tc) s.feature_names.push_back(table.header[c]);
  }
  s.x = Matrix(0, s.feature_names.size());
  std::vector<TimeBin> bins;
  std::vector<double> buf(s.feature_names.size());
  for (std::size_t i = 0; i < table.values.rows(); ++i) {
    std::size_t k = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != tc) buf[k++] = table.values(i, c);
    }
    s.x.append_row(buf);
    bins.push_back(TimeBin{to_bin(table.values(i, tc), i + 2)});
  }
  s.t = std::move(bins);
  return s;
}

StreamInput read_ndjson(std::istream& in) {
  StreamInput s;
  std::vector<TimeBin> bins;
  bool any_t = false;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw IngestionError(row, "line " + std::to_string(row) + ": invalid JSON");
    const json* xs = &j;
    if (j.is_object()) {
      if (!j.contains("x")) throw IngestionError(row, "line " + std::to_string(row) + ": object without \"x\"");
      xs = &j["x"];
      if (j.contains("t")) {
        if (!j["t"].is_number_integer() || j["t"].get<long long>() < 1) {
          throw IngestionError(row, "line " + std::to_string(row) + ": \"t\" must be a positive integer");
        }
        bins.push_back(TimeBin{static_cast<int>(j["t"].get<long long>())});
        any_t = true;
      }
    }
    if (!xs->is_array() || xs->empty()) {
      throw IngestionError(row, "line " + std::to_string(row) + ": expected a non-empty array of numbers");
    }
    std::vector<double> v;
    for (const auto& e : *xs) {
      if (!e.is_number() || !std::isfinite(e.get<double>())) {
        throw IngestionError(row, "line " + std::to_string(row) + ": non-numeric feature");
      }
      v.push_back(e.get<double>());
    }
    if (s.x.rows() == 0 && s.x.cols() == 0) s.x = Matrix(0, v.size());
    if (v.size() != s.x.cols()) {
      throw IngestionError(row, "line " + std::to_string(row) + ": expected " + std::to_string(s.x.cols()) +
                                    " features, found " + std::to_string(v.size()));
    }
    s.x.append_row(v);
  }
  if (any_t) {
    if (bins.size() != s.x.rows()) throw IngestionError(row, "\"t\" must be given on every line or none");
    s.t = std::move(bins);
  }
  for (std::size_t f = 0; f < s.x.cols(); ++f) s.feature_names.push_back("f" + std::to_string(f));
  return s;
}

StreamInput read_stream(const fs::path& path, std::span<const std::string> drop) {
  auto in = open_input(path);
  const auto ext = path.extension().string();
  if (ext == ".ndjson" || ext == ".jsonl") return read_ndjson(in);
  return read_stream_csv(in, drop);
}

Dataset read_dataset_csv(std::istream& in) {
  auto s = read_stream_csv(in);
  if (!s.t) throw IngestionError(1, "row 1: dataset needs a 't' column");
  const int n = max_bin(*s.t);
  return Dataset(std::move(s.x), std::move(*s.t), n);
}

Dataset read_dataset_csv(const fs::path& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t f = 0; f < data.dimension(); ++f) out << 'f' << f << ',';
  out << "t\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << format_double(v) << ',';
    out << data.bin(i).index << '\n';
  }
}

void write_ground_truth_csv(std::ostream& out, std::span<const double> i_true, std::span<const double> c_true,
                            std::span<const int> cell) {
  if ((!c_true.empty() && c_true.size() != i_true.size()) || (!cell.empty() && cell.size() != i_true.size())) {
    throw ValidationError("ground-truth columns must have equal length");
  }
  out << "i_true";
  if (!c_true.empty()) out << ",c_true";
  if (!cell.empty()) out << ",cell";
  out << '\n';
  for (std::size_t i = 0; i < i_true.size(); ++i) {
    out << format_double(i_true[i]);
    if (!c_true.empty()) out << ',' << format_double(c_true[i]);
    if (!cell.empty()) out << ',' << cell[i];
    out << '\n';
  }
}

namespace {

/// Projects rows onto the two leading principal axes.
std::vector<std::array<double, 2>> pca2(const std::vector<const FeatureVector*>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows.front()->size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = (*rows[static_cast<std::size_t>(i)])[static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  // Eigenvalues ascend; fix each axis sign so its largest component is positive.
  std::vector<std::array<double, 2>> out(rows.size(), {0.0, 0.0});
  for (int c = 0; c < 2 && c < d; ++c) {
    Eigen::VectorXd axis = es.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    const Eigen::VectorXd proj = x * axis;
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = proj(i);
  }
  return out;
}

json sample_json(const pipeline::ReportSample& s) {
  return json{{"archive_index", s.archive_index},
              {"stream_position", s.stream_position},
              {"bin", s.bin.index},
              {"i_value", s.i_value},
              {"x", s.x}};
}

}  // namespace

std::string report_to_json(const pipeline::ExplanationReport& report, const ReportJsonOptions& options) {
  std::vector<std::string> names = options.feature_names;
  if (names.empty()) {
    for (std::size_t f = 0; f < report.dimension; ++f) names.push_back("f" + std::to_string(f));
  }
  if (names.size() != report.dimension) throw ValidationError("feature name count does not match the report");

  json j;
  j["schema_version"] = 1;
  j["event"] = report.event;
  j["change_point"] = report.change_point;
  j["n_bins"] = report.n_bins;
  j["n_archived"] = report.n_archived;
  j["dimension"] = report.dimension;
  j["feature_names"] = names;
  j["mean_identifiability"] = report.mean_identifiability;
  j["feature_range"] = report.feature_range;

  json chars = json::array();
  for (std::size_t k = 0; k < report.characteristic.size(); ++k) {
    auto s = sample_json(report.characteristic[k]);
    s["id"] = k;
    chars.push_back(std::move(s));
  }
  json assocs = json::array();
  for (const auto& a : report.associations) {
    json pairs = json::array();
    for (const auto& p : a.pairs) {
      pairs.push_back(json{{"characteristic", p.characteristic},
                           {"associated", sample_json(p.associated)},
                           {"cost", p.cost},
                           {"difference", p.difference}});
    }
    assocs.push_back(json{{"target_bin", a.target.index}, {"total_cost", a.total_cost}, {"pairs", std::move(pairs)}});
  }

  if (options.pca2d && !report.characteristic.empty()) {
    std::vector<const FeatureVector*> rows;
    for (const auto& c : report.characteristic) rows.push_back(&c.x);
    for (const auto& a : report.associations) {
      for (const auto& p : a.pairs) rows.push_back(&p.associated.x);
    }
    const auto proj = pca2(rows);
    std::size_t r = 0;
    for (auto& c : chars) {
      c["pca2"] = proj[r++];
    }
    for (auto& a : assocs) {
      for (auto& p : a["pairs"]) p["associated"]["pca2"] = proj[r++];
    }
  }
  j["characteristic"] = std::move(chars);
  j["associations"] = std::move(assocs);

  json summary = json::array();
  for (const auto& s : report.feature_summary) {
    summary.push_back(json{{"feature", s.feature},
                           {"name", names[s.feature]},
                           {"mean_abs_difference", s.mean_abs_difference},
                           {"mean_difference", s.mean_difference},
                           {"no_drift", s.no_drift}});
  }
  j["feature_summary"] = std::move(summary);
  j["warnings"] = report.warnings;
  return j.dump(options.indent) + "\n";
}

void write_pairs_csv(std::ostream& out, const pipeline::ExplanationReport& report) {
  out << "pair_id,bin,role";
  for (std::size_t f = 0; f < report.dimension; ++f) out << ",f" << f;
  out << ",i_value,cost\n";
  std::size_t id = 0;
  for (const auto& a : report.associations) {
    for (const auto& p : a.pairs) {
      auto row = [&](const pipeline::ReportSample& s, const char* role) {
        out << id << ',' << s.bin.index << ',' << role;
        for (double v : s.x) out << ',' << format_double(v);
        out << ',' << format_double(s.i_value) << ',' << format_double(p.cost) << '\n';
      };
      row(report.characteristic.at(p.characteristic), "characteristic");
      row(p.associated, "associated");
      ++id;
    }
  }
}

void write_results_csv(std::ostream& out, const eval::ResultTable& table) {
  out << "experiment,config,method,metric,mean,std,runs\n";
  for (const auto& r : table.rows) {
    out << table.experiment << ',' << r.config << ',' << r.method << ',' << r.metric << ','
        << format_double(r.cell.mean) << ',' << format_double(r.cell.std) << ',' << r.cell.runs << '\n';
  }
}

void write_runs_csv(std::ostream& out, const eval::ResultTable& table) {
  out << "experiment,config,method,metric,run,value\n";
  for (const auto& r : table.rows) {
    for (std::size_t k = 0; k < r.cell.values.size(); ++k) {
      out << table.experiment << ',' << r.config << ',' << r.method << ',' << r.metric << ',' << k << ','
          << format_double(r.cell.values[k]) << '\n';
    }
  }
}

eval::ResultTable read_runs_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw IngestionError(1, "row 1: missing header");
  if (split_line(line) != std::vector<std::string>{"experiment", "config", "method", "metric", "run", "value"}) {
    throw IngestionError(1, "row 1: unexpected header for per-run results");
  }
  eval::ResultTable table;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> slot;
  std::size_t row = 1;
  while (next_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != 6) throw IngestionError(row, "row " + std::to_string(row) + ": expected 6 fields");
    table.experiment = f[0];
    auto key = std::make_tuple(f[1], f[2], f[3]);
    auto [it, inserted] = slot.emplace(key, table.rows.size());
    if (inserted) {
      table.rows.push_back({f[1], f[2], f[3], {}});
      values.emplace_back();
    }
    const double run = parse_double(f[4], row, "run");
    if (run != static_cast<double>(values[it->second].size())) {
      throw IngestionError(row, "row " + std::to_string(row) + ": runs must be listed in order");
    }
    values[it->second].push_back(parse_double(f[5], row, "value"));
  }
  for (std::size_t k = 0; k < table.rows.size(); ++k) table.rows[k].cell = eval::StatCell::from_values(values[k]);
  return table;
}

std::string results_to_json(const eval::ResultTable& table, std::span<const eval::SignTest> sign_tests,
                            std::span<const std::string> sign_test_methods) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back(json{{"config", r.config},
                        {"method", r.method},
                        {"metric", r.metric},
                        {"mean", r.cell.mean},
                        {"std", r.cell.std},
                        {"runs", r.cell.runs},
                        {"values", r.cell.values}});
  }
  json j{{"schema_version", 1}, {"experiment", table.experiment}, {"rows", std::move(rows)}};
  if (!sign_tests.empty()) {
    json st = json::array();
    for (std::size_t k = 0; k < sign_tests.size(); ++k) {
      st.push_back(json{{"method", k < sign_test_methods.size() ? sign_test_methods[k] : std::string()},
                        {"wins", sign_tests[k].wins},
                        {"losses", sign_tests[k].losses},
                        {"ties", sign_tests[k].ties},
                        {"p_value", sign_tests[k].p_value}});
    }
    j["sign_tests"] = std::move(st);
  }
  return j.dump(2) + "\n";
}

OutputTransaction::OutputTransaction(fs::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw ValidationError("cannot create output directory '" + dir_.string() + "'");
}

OutputTransaction::~OutputTransaction() {
  if (committed_) return;
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    fs::remove(tmp, ec);
  }
}

void OutputTransaction::write(const std::string& name, const std::function<void(std::ostream&)>& fill) {
  if (committed_) throw ValidationError("output transaction already committed");
  const fs::path final_path = dir_ / name;
  const fs::path tmp = dir_ / ("." + name + ".partial");
  staged_.emplace_back(tmp, final_path);
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
  fill(out);
  out.flush();
  if (!out) throw ValidationError("failed writing '" + tmp.string() + "'");
}

void OutputTransaction::write(const std::string& name, const std::string& content) {
  write(name, [&](std::ostream& out) { out << content; });
}

std::vector<fs::path> OutputTransaction::commit() {
  std::vector<fs::path> out;
  for (const auto& [tmp, final_path] : staged_) {
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) throw ValidationError("cannot move output into place: " + final_path.string());
    out.push_back(final_path);
  }
  committed_ = true;
  return out;
}

}  // namespace cfdrift::io
