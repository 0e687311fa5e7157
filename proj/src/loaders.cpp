//
// Copyright 2026 The corrleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "corrleak/harness.hpp"

namespace corrleak {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Quote-aware splitter; handles embedded commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(std::move(cell));
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size())
        throw ParseError("row " + std::to_string(row_number) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (table.header.empty()) throw ParseError("empty CSV file");
  return table;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_missing_token(const std::string& t) {
  return t.empty() || t == "NA" || t == "na" || t == "N/A" || t == "null" ||
         t == "NaN" || t == "nan" || t == "?";
}

// Parses a cell to a double; currency-style values like "€110.5M" resolve
// their K/M suffix. Returns NaN for missing, nullopt for non-numeric.
std::optional<double> parse_cell(const std::string& raw, bool parse_currency) {
  std::string t = trim(raw);
  if (is_missing_token(t)) return kMissing;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  if (!parse_currency) return std::nullopt;
  std::string s;
  for (char c : t)
    if (static_cast<unsigned char>(c) < 0x80 && c != '$' && c != ' ') s += c;
  double mult = 1.0;
  if (!s.empty() && (s.back() == 'M' || s.back() == 'm')) {
    mult = 1e6;
    s.pop_back();
  } else if (!s.empty() && (s.back() == 'K' || s.back() == 'k')) {
    mult = 1e3;
    s.pop_back();
  }
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v * mult;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

struct ThresholdSpec {
  enum class Kind { kMedian, kMean, kFixed } kind = Kind::kMedian;
  double value = 0.0;
};

ThresholdSpec parse_threshold(const std::string& text) {
  ThresholdSpec spec;
  if (text == "median") {
    spec.kind = ThresholdSpec::Kind::kMedian;
  } else if (text == "mean") {
    spec.kind = ThresholdSpec::Kind::kMean;
  } else if (text.rfind("ge:", 0) == 0) {
    spec.kind = ThresholdSpec::Kind::kFixed;
    try {
      spec.value = std::stod(text.substr(3));
    } catch (const std::exception&) {
      throw ConfigError("bad threshold spec: " + text);
    }
  } else {
    throw ConfigError("unknown threshold rule: " + text);
  }
  return spec;
}

}  // namespace

LoadedDataset load_dataset_from_text(const std::string& name,
                                     const std::string& csv_text,
                                     const LoaderOptions& base_options) {
  LoaderOptions options = base_options;
  if (name == "fifa19") {
    if (options.output_column.empty()) options.output_column = "Value";
    options.drop_columns.insert(options.drop_columns.end(),
                                {"Wage", "Release Clause"});
    options.parse_currency = true;
  } else if (name == "communities") {
    if (options.output_column.empty()) options.output_column = "murders";
    if (base_options.threshold == "median") options.threshold = "ge:1";
  } else if (name == "musk") {
    if (options.output_column.empty()) options.output_column = "class";
    if (base_options.threshold == "median") options.threshold = "ge:0.5";
    options.balance_classes = true;
  } else if (name != "csv") {
    throw ConfigError("unknown loader: " + name);
  }

  CsvTable table = parse_csv(csv_text);
  std::size_t cols = table.header.size();

  // Parse every column; non-numeric (categorical) columns are dropped.
  std::vector<std::vector<double>> values(cols);
  std::vector<char> numeric(cols, 1);
  for (std::size_t j = 0; j < cols; ++j) {
    values[j].reserve(table.rows.size());
    for (const auto& row : table.rows) {
      auto v = parse_cell(row[j], options.parse_currency);
      if (!v.has_value()) {
        numeric[j] = 0;
        break;
      }
      values[j].push_back(*v);
    }
  }

  int output_idx = -1;
  for (std::size_t j = 0; j < cols; ++j) {
    if (!options.output_column.empty()) {
      if (table.header[j] == options.output_column) output_idx = static_cast<int>(j);
    } else if (numeric[j]) {
      output_idx = static_cast<int>(j);  // last numeric column wins
    }
  }
  if (output_idx < 0)
    throw SchemaError("output column \"" + options.output_column + "\" not found");
  if (!numeric[static_cast<std::size_t>(output_idx)])
    throw SchemaError("output column \"" + table.header[static_cast<std::size_t>(
                          output_idx)] + "\" is not numeric");

  std::vector<int> input_cols;
  for (std::size_t j = 0; j < cols; ++j) {
    if (static_cast<int>(j) == output_idx || !numeric[j]) continue;
    bool dropped = false;
    for (const auto& name_to_drop : options.drop_columns)
      if (table.header[j] == name_to_drop) dropped = true;
    if (!dropped) input_cols.push_back(static_cast<int>(j));
  }
  if (input_cols.empty()) throw SchemaError("no numeric input columns remain");

  // Drop rows with missing values in the selected columns.
  std::vector<std::size_t> keep_rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool ok = !std::isnan(values[static_cast<std::size_t>(output_idx)][r]);
    for (int j : input_cols)
      if (std::isnan(values[static_cast<std::size_t>(j)][r])) ok = false;
    if (ok) keep_rows.push_back(r);
  }
  if (keep_rows.size() < 10) throw SchemaError("fewer than 10 complete rows");

  // Drop duplicate input columns, keeping the first occurrence.
  std::vector<int> unique_cols;
  for (std::size_t a = 0; a < input_cols.size(); ++a) {
    bool dup = false;
    for (std::size_t b = 0; b < a && !dup; ++b) {
      dup = true;
      for (std::size_t r : keep_rows) {
        if (values[static_cast<std::size_t>(input_cols[a])][r] !=
            values[static_cast<std::size_t>(input_cols[b])][r]) {
          dup = false;
          break;
        }
      }
    }
    if (!dup) unique_cols.push_back(input_cols[a]);
  }

  for (int j : unique_cols) {
    double first = values[static_cast<std::size_t>(j)][keep_rows.front()];
    bool constant = true;
    for (std::size_t r : keep_rows)
      if (values[static_cast<std::size_t>(j)][r] != first) {
        constant = false;
        break;
      }
    if (constant)
      throw SchemaError("column \"" + table.header[static_cast<std::size_t>(j)] +
                        "\" has zero variance");
  }

  ThresholdSpec threshold = parse_threshold(options.threshold);
  std::vector<double> raw(keep_rows.size());
  for (std::size_t i = 0; i < keep_rows.size(); ++i)
    raw[i] = values[static_cast<std::size_t>(output_idx)][keep_rows[i]];

  double cut = threshold.value;
  if (threshold.kind == ThresholdSpec::Kind::kMedian) {
    std::vector<double> sorted = raw;
    std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                     sorted.end());
    cut = sorted[mid];
    if (sorted.size() % 2 == 0) {
      std::nth_element(sorted.begin(),
                       sorted.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                       sorted.begin() + static_cast<std::ptrdiff_t>(mid));
      cut = 0.5 * (sorted[mid - 1] + cut);
    }
  } else if (threshold.kind == ThresholdSpec::Kind::kMean) {
    cut = std::accumulate(raw.begin(), raw.end(), 0.0) /
          static_cast<double>(raw.size());
  }

  LoadedDataset out;
  out.data.input_dim = static_cast<int>(unique_cols.size());
  std::vector<std::size_t> selected = keep_rows;

  auto label_of = [&](std::size_t pos) -> std::uint8_t {
    double v = raw[pos];
    if (threshold.kind == ThresholdSpec::Kind::kFixed)
      return v >= cut ? 1 : 0;
    return v > cut ? 1 : 0;
  };

  if (options.balance_classes) {
    std::vector<std::size_t> zeros, ones;
    for (std::size_t i = 0; i < keep_rows.size(); ++i)
      (label_of(i) != 0 ? ones : zeros).push_back(i);
    auto& majority = zeros.size() > ones.size() ? zeros : ones;
    std::size_t want = std::min(zeros.size(), ones.size());
    RngStream rng(options.seed);
    rng.shuffle(majority);
    majority.resize(want);
    std::vector<std::size_t> merged;
    merged.insert(merged.end(), zeros.begin(), zeros.end());
    merged.insert(merged.end(), ones.begin(), ones.end());
    std::sort(merged.begin(), merged.end());
    selected.clear();
    for (std::size_t i : merged) selected.push_back(keep_rows[i]);
    std::vector<double> raw_sel;
    for (std::size_t i : merged) raw_sel.push_back(raw[i]);
    raw = std::move(raw_sel);
  }

  out.data.labels.resize(selected.size());
  out.data.inputs.resize(selected.size() * unique_cols.size());
  out.raw_output.resize(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    for (std::size_t j = 0; j < unique_cols.size(); ++j)
      out.data.inputs[i * unique_cols.size() + j] =
          values[static_cast<std::size_t>(unique_cols[j])][selected[i]];
    double v = raw[i];
    if (threshold.kind == ThresholdSpec::Kind::kFixed) {
      out.data.labels[i] = v >= cut ? 1 : 0;
      out.raw_output[i] = v - cut;  // shadow datasets binarize at zero
    } else {
      out.data.labels[i] = v > cut ? 1 : 0;
      out.raw_output[i] = v;
    }
  }
  out.threshold_rule = threshold.kind == ThresholdSpec::Kind::kFixed
                           ? ThresholdRule::kZero
                           : (threshold.kind == ThresholdSpec::Kind::kMean
                                  ? ThresholdRule::kMean
                                  : ThresholdRule::kMedian);

  for (std::size_t j = 0; j < unique_cols.size(); ++j) {
    out.input_names.push_back(table.header[static_cast<std::size_t>(unique_cols[j])]);
    std::vector<double> column(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i)
      column[i] = out.data.inputs[i * unique_cols.size() + j];
    out.marginals.push_back(fit_marginal(column, options.marginal_bins));
  }
  if (out.raw_output.front() ==
      *std::max_element(out.raw_output.begin(), out.raw_output.end()) &&
      out.raw_output.front() ==
          *std::min_element(out.raw_output.begin(), out.raw_output.end()))
    throw SchemaError("output column has zero variance");
  out.marginals.push_back(fit_marginal(out.raw_output, options.marginal_bins));
  return out;
}

LoadedDataset load_dataset(const std::string& name, const std::string& path,
                           const LoaderOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_dataset_from_text(name, buffer.str(), options);
}

LoadedDataset synthetic_master_dataset(int input_columns, std::size_t rows,
                                       int marginal_bins, RngStream& rng) {
  int n = input_columns + 1;
  CorrMatrix c = sample_corr_matrix(n, rng);

  std::vector<double> edges(101);
  for (int i = 0; i <= 100; ++i) edges[static_cast<std::size_t>(i)] = i / 100.0;
  std::vector<double> masses(100, 0.01);
  std::vector<Marginal> uniform(static_cast<std::size_t>(n),
                                Marginal::empirical(edges, masses));

  LoadedDataset out;
  out.data = sample_copula(c, uniform, rows, ThresholdRule::kMedian, rng,
                           &out.raw_output);
  out.threshold_rule = ThresholdRule::kMedian;
  for (int j = 0; j < input_columns; ++j) {
    std::vector<double> column(rows);
    for (std::size_t r = 0; r < rows; ++r)
      column[r] = out.data.inputs[r * static_cast<std::size_t>(input_columns) + j];
    out.marginals.push_back(fit_marginal(column, marginal_bins));
    out.input_names.push_back("x" + std::to_string(j + 1));
  }
  out.marginals.push_back(fit_marginal(out.raw_output, marginal_bins));
  return out;
}

Model permute_model_inputs(const Model& model, const std::vector<int>& perm) {
  if (const auto* lr = std::get_if<LogisticRegressionModel>(&model)) {
    if (perm.size() != lr->weights.size())
      throw ShapeMismatch("permutation length does not match input count");
    LogisticRegressionModel out = *lr;
    for (std::size_t p = 0; p < perm.size(); ++p)
      out.weights[p] = lr->weights[static_cast<std::size_t>(perm[p])];
    return out;
  }
  const auto& mlp = std::get<MlpModel>(model);
  if (static_cast<int>(perm.size()) != mlp.in_dim)
    throw ShapeMismatch("permutation length does not match input count");
  MlpModel out = mlp;
  for (std::size_t p = 0; p < perm.size(); ++p)
    for (int j = 0; j < mlp.h1; ++j)
      out.w1[p * static_cast<std::size_t>(mlp.h1) + static_cast<std::size_t>(j)] =
          mlp.w1[static_cast<std::size_t>(perm[p]) * mlp.h1 + j];
  return out;
}

}  // namespace corrleak
