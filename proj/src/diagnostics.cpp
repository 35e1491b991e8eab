#include "pseudolab/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "pseudolab/errors.hpp"
#include "pseudolab/losses.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab {

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

std::vector<int> predictions(const Tensor& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = static_cast<int>(argmax(probs.row(i)));
  return out;
}

namespace {

void check_rows(const Tensor& probs, std::size_t n, const char* what) {
  if (probs.rows() != n) {
    throw DimensionError(std::string(what) + ": " + std::to_string(probs.rows()) + " rows vs " +
                         std::to_string(n) + " labels");
  }
}

}  // namespace

std::optional<double> certainty_incorrect(const Tensor& probs, std::span<const int> predictions,
                                          std::span<const int> truths) {
  check_rows(probs, truths.size(), "certainty_incorrect");
  check_rows(probs, predictions.size(), "certainty_incorrect");
  const std::size_t classes = probs.cols();
  const double u = 1.0 / static_cast<double>(classes);
  double total = 0.0;
  std::size_t incorrect = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == kNoLabel || predictions[i] == truths[i]) continue;
    ++incorrect;
    double row = 0.0;
    for (double p : probs.row(i)) row += u * std::log(std::max(p, kLogClamp));
    total -= row;
  }
  if (incorrect == 0) return std::nullopt;
  return total / static_cast<double>(incorrect);
}

double error_rate(const Tensor& probs, std::span<const int> truths) {
  check_rows(probs, truths.size(), "error_rate");
  std::size_t known = 0, wrong = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] == kNoLabel) continue;
    ++known;
    if (static_cast<int>(argmax(probs.row(i))) != truths[i]) ++wrong;
  }
  return known ? static_cast<double>(wrong) / static_cast<double>(known) : 0.0;
}

std::optional<double> pseudo_label_accuracy(const SslDataset& ds) {
  std::size_t known = 0, right = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labeled[i] || ds.true_labels[i] == kNoLabel) continue;
    ++known;
    if (static_cast<int>(argmax(ds.pseudo_labels.row(i))) == ds.true_labels[i]) ++right;
  }
  if (!known) return std::nullopt;
  return static_cast<double>(right) / static_cast<double>(known);
}

namespace {

constexpr const char* kMetricsHeader =
    "epoch,loss_total,loss_ce,loss_ra,loss_rh,term_labeled,term_unlabeled,r_t,train_error,val_error,"
    "pseudo_acc,lr";

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_metrics_csv(std::span<const EpochMetrics> rows, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const EpochMetrics& m : rows) {
    out << m.epoch << ',' << format_double(m.loss_total) << ',' << format_double(m.loss_ce) << ','
        << format_double(m.loss_ra) << ',' << format_double(m.loss_rh) << ','
        << format_double(m.term_labeled) << ',' << format_double(m.term_unlabeled) << ',' << opt(m.r_t)
        << ',' << format_double(m.train_error) << ',' << format_double(m.val_error) << ','
        << opt(m.pseudo_acc) << ',' << format_double(m.lr) << '\n';
  }
}

void write_metrics_csv(std::span<const EpochMetrics> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_metrics_csv(rows, out);
}

std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw ParseError(1, "not a metrics file: " + path.string());
  std::vector<EpochMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 12) throw ParseError(line_no, "expected 12 metrics fields");
    auto num = [&](const std::string& s) {
      auto v = parse_double(s);
      if (!v) throw ParseError(line_no, "bad number '" + s + "'");
      return *v;
    };
    auto maybe = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return num(s);
    };
    EpochMetrics m;
    auto epoch = parse_int(f[0]);
    if (!epoch || *epoch < 0) throw ParseError(line_no, "bad epoch '" + f[0] + "'");
    m.epoch = static_cast<std::size_t>(*epoch);
    m.loss_total = num(f[1]);
    m.loss_ce = num(f[2]);
    m.loss_ra = num(f[3]);
    m.loss_rh = num(f[4]);
    m.term_labeled = num(f[5]);
    m.term_unlabeled = num(f[6]);
    m.r_t = maybe(f[7]);
    m.train_error = num(f[8]);
    m.val_error = num(f[9]);
    m.pseudo_acc = maybe(f[10]);
    m.lr = num(f[11]);
    rows.push_back(m);
  }
  return rows;
}

void write_extra_metrics_csv(std::span<const EpochMetrics> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "epoch,r_t_unlabeled,n_incorrect\n";
  for (const EpochMetrics& m : rows) out << m.epoch << ',' << opt(m.r_t_unlabeled) << ',' << m.n_incorrect << '\n';
}

void write_pseudo_label_snapshot(const SslDataset& ds, std::ostream& out) {
  out << "index,is_labeled,y_true";
  for (std::size_t c = 0; c < ds.num_classes; ++c) out << ",p_" << c;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << i << ',' << (ds.labeled[i] ? 1 : 0) << ',' << ds.true_labels[i];
    for (double p : ds.pseudo_labels.row(i)) out << ',' << format_double(p);
    out << '\n';
  }
}

void write_pseudo_label_snapshot(const SslDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_pseudo_label_snapshot(ds, out);
}

}  // namespace pseudolab
