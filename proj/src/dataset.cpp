#include "pseudolab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "pseudolab/errors.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab {

SslDataset SslDataset::fully_labeled(Tensor features, std::vector<int> labels, std::size_t num_classes) {
  if (features.rows() != labels.size()) {
    throw DimensionError("feature rows (" + std::to_string(features.rows()) + ") and labels (" +
                         std::to_string(labels.size()) + ") differ");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  SslDataset ds;
  ds.features = std::move(features);
  ds.true_labels = std::move(labels);
  ds.labeled.assign(ds.true_labels.size(), true);
  ds.num_classes = num_classes;
  ds.reset_pseudo_labels();
  return ds;
}

std::size_t SslDataset::num_labeled() const {
  return static_cast<std::size_t>(std::count(labeled.begin(), labeled.end(), true));
}

std::vector<std::size_t> SslDataset::labeled_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labeled.size(); ++i)
    if (labeled[i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> SslDataset::unlabeled_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labeled.size(); ++i)
    if (!labeled[i]) out.push_back(i);
  return out;
}

void SslDataset::reset_pseudo_labels() {
  pseudo_labels = Tensor({size(), num_classes}, 1.0 / static_cast<double>(num_classes));
  for (std::size_t i = 0; i < size(); ++i) {
    if (!labeled[i]) continue;
    auto row = pseudo_labels.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(true_labels[i])] = 1.0;
  }
}

void SslDataset::validate() const {
  const std::size_t n = size();
  if (num_classes < 2) throw ContractError("dataset needs at least 2 classes");
  if (features.rows() != n || labeled.size() != n) throw ContractError("dataset column lengths differ");
  if (pseudo_labels.rows() != n || pseudo_labels.cols() != num_classes) {
    throw ContractError("pseudo-label table has shape " + to_string(pseudo_labels.shape()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int y = true_labels[i];
    if (y != kNoLabel && (y < 0 || static_cast<std::size_t>(y) >= num_classes)) {
      throw ContractError("sample " + std::to_string(i) + " has label " + std::to_string(y));
    }
    auto row = pseudo_labels.row(i);
    double total = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ContractError("pseudo-label row " + std::to_string(i) + " is negative or NaN");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ContractError("pseudo-label row " + std::to_string(i) + " sums to " + format_double(total));
    }
    if (labeled[i]) {
      if (y == kNoLabel) throw ContractError("labeled sample " + std::to_string(i) + " has no label");
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (row[c] != (static_cast<int>(c) == y ? 1.0 : 0.0)) {
          throw ContractError("labeled sample " + std::to_string(i) + " lost its one-hot pseudo-label");
        }
      }
    }
  }
}

void save_csv(const SslDataset& ds, std::ostream& out) {
  const std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x_" << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features.row(i)) out << format_double(v) << ',';
    out << (ds.labeled[i] ? ds.true_labels[i] : kNoLabel) << '\n';
  }
}

void save_csv(const SslDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  save_csv(ds, out);
  if (!out) throw ConfigError("failed writing " + path.string());
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

SslDataset load_csv(std::istream& in, std::optional<std::size_t> num_classes) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError(1, "header must be x_0,...,x_{d-1},label");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x_" + std::to_string(j)) {
      throw ParseError(1, "expected column x_" + std::to_string(j) + ", found '" + std::string(header[j]) + "'");
    }
  }

  std::vector<double> values;
  std::vector<int> labels;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != d + 1) {
      throw ParseError(line_no, "expected " + std::to_string(d + 1) + " fields, found " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      auto v = parse_double(fields[j]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, "bad number '" + std::string(fields[j]) + "'");
      }
      values.push_back(*v);
    }
    auto y = parse_int(fields[d]);
    if (!y || *y < kNoLabel || *y > 1'000'000) {
      throw ParseError(line_no, "unknown label '" + std::string(fields[d]) + "'");
    }
    if (num_classes && *y >= static_cast<long long>(*num_classes)) {
      throw ParseError(line_no, "unknown label '" + std::string(fields[d]) + "' for " +
                                    std::to_string(*num_classes) + " classes");
    }
    labels.push_back(static_cast<int>(*y));
    max_label = std::max(max_label, static_cast<int>(*y));
  }
  if (labels.empty()) throw ParseError(line_no, "no data rows");
  const std::size_t classes = num_classes ? *num_classes : static_cast<std::size_t>(max_label + 1);
  if (classes < 2) throw ParseError(line_no, "need at least 2 classes");

  SslDataset ds;
  ds.features = Tensor({labels.size(), d}, std::move(values));
  ds.labeled.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) ds.labeled[i] = labels[i] != kNoLabel;
  ds.true_labels = std::move(labels);
  ds.num_classes = classes;
  ds.reset_pseudo_labels();
  return ds;
}

SslDataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return load_csv(in, num_classes);
}

void attach_truth(SslDataset& ds, const SslDataset& truth) {
  if (truth.size() != ds.size() || !(truth.features == ds.features)) {
    throw ConfigError("truth file does not match the dataset features");
  }
  if (truth.num_classes > ds.num_classes) {
    ds.num_classes = truth.num_classes;
    // Class count grew; rebuild placeholders for the wider table.
    ds.reset_pseudo_labels();
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int t = truth.true_labels[i];
    if (t == kNoLabel) continue;
    if (ds.labeled[i] && ds.true_labels[i] != t) {
      throw ConfigError("truth file disagrees with label of sample " + std::to_string(i));
    }
    ds.true_labels[i] = t;
  }
}

}  // namespace pseudolab
