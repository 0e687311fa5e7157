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

#include "corrleak/copula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "corrleak/kernels.hpp"
#include "corrleak/parallel.hpp"
#include "json.hpp"

namespace corrleak {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                   v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace

Marginal Marginal::standard_normal() {
  Marginal m;
  m.kind = Kind::kStandardNormal;
  return m;
}

Marginal Marginal::empirical(std::vector<double> edges, std::vector<double> masses) {
  if (edges.size() != masses.size() + 1 || masses.empty())
    throw DomainError("empirical marginal needs G+1 edges for G masses");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1]))
      throw DomainError("empirical marginal edges must be strictly increasing");
  double total = 0.0;
  for (double w : masses) {
    if (w < 0.0) throw DomainError("empirical marginal mass must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("empirical marginal masses must sum to 1");
  Marginal m;
  m.kind = Kind::kEmpirical;
  m.edges = std::move(edges);
  m.masses = std::move(masses);
  return m;
}

double Marginal::span() const {
  if (kind == Kind::kStandardNormal)
    return 2.0 * std_normal_quantile(0.999);
  return edges.back() - edges.front();
}

std::string Marginal::to_json() const {
  nlohmann::json j;
  j["kind"] = kind == Kind::kStandardNormal ? "standard_normal" : "empirical";
  j["edges"] = edges;
  j["masses"] = masses;
  return j.dump();
}

Marginal Marginal::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad marginal JSON: ") + e.what());
  }
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "standard_normal") return standard_normal();
  if (kind != "empirical") throw ParseError("unknown marginal kind: " + kind);
  return empirical(j.at("edges").get<std::vector<double>>(),
                   j.at("masses").get<std::vector<double>>());
}

Marginal fit_marginal(std::span<const double> samples, int g) {
  if (g < 2) throw DomainError("fit_marginal needs G >= 2");
  if (samples.empty()) throw DomainError("fit_marginal needs samples");
  double lo = samples[0], hi = samples[0];
  for (double x : samples) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!(lo < hi)) throw DegenerateSupport("all samples identical");
  std::vector<double> edges(static_cast<std::size_t>(g) + 1);
  for (int i = 0; i <= g; ++i)
    edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / g;
  edges.back() = hi;
  std::vector<double> counts(static_cast<std::size_t>(g), 0.0);
  double width = (hi - lo) / g;
  for (double x : samples) {
    int b = static_cast<int>((x - lo) / width);
    b = std::clamp(b, 0, g - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(samples.size());
  return Marginal::empirical(std::move(edges), std::move(counts));
}

// Wichura's PPND16 rational approximation for the normal quantile.
double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw DomainError("normal quantile needs u in (0, 1)");
  static const double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e+2,
      1.9715909503065514427e+3, 1.3731693765509461125e+4,
      4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static const double b[8] = {
      1.0,                      4.2313330701600911252e+1,
      6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static const double c[8] = {
      1.42343711074968357734e0,    4.63033784615654529590e0,
      5.76949722146069140550e0,    3.64784832476320460504e0,
      1.27045825245236838258e0,    2.41780725177450611770e-1,
      2.27238449892691845833e-2,   7.74545014278341407640e-4};
  static const double d[8] = {
      1.0,                         2.05319162663775882187e0,
      1.67638483018380384940e0,    6.89767334985100004550e-1,
      1.48103976427480074590e-1,   1.51986665636164571966e-2,
      5.47593808499534494600e-4,   1.05075007164441684324e-9};
  static const double e[8] = {
      6.65790464350110377720e0,    5.46378491116411436990e0,
      1.78482653991729133580e0,    2.96560571828504891230e-1,
      2.65321895265761230930e-2,   1.24266094738807843860e-3,
      2.71155556874348757815e-5,   2.01033439929228813265e-7};
  static const double f[8] = {
      1.0,                         5.99832206555887937690e-1,
      1.36929880922735805310e-1,   1.48753612908506148525e-2,
      7.86869131145613259100e-4,   1.84631831751005468180e-5,
      1.42151175831644588870e-7,   2.04426310338993978564e-15};
  auto poly = [](const double* p, double r) {
    return (((((((p[7] * r + p[6]) * r + p[5]) * r + p[4]) * r + p[3]) * r +
              p[2]) * r + p[1]) * r + p[0]);
  };
  double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = poly(c, r) / poly(d, r);
  } else {
    r -= 5.0;
    val = poly(e, r) / poly(f, r);
  }
  return q < 0.0 ? -val : val;
}

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double inverse_cdf(const Marginal& marg, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw DomainError("inverse_cdf needs u in (0, 1)");
  if (marg.kind == Marginal::Kind::kStandardNormal)
    return std_normal_quantile(u);
  double cum = 0.0;
  std::size_t g = marg.masses.size();
  for (std::size_t i = 0; i < g; ++i) {
    double next = cum + marg.masses[i];
    if (u < next || i + 1 == g) {
      double w = marg.masses[i];
      double frac = w > 0.0 ? (u - cum) / w : 0.0;
      frac = std::clamp(frac, 0.0, 1.0);
      return marg.edges[i] + frac * (marg.edges[i + 1] - marg.edges[i]);
    }
    cum = next;
  }
  return marg.edges.back();
}

double cdf(const Marginal& marg, double x) {
  if (marg.kind == Marginal::Kind::kStandardNormal) return std_normal_cdf(x);
  if (x <= marg.edges.front()) return 0.0;
  if (x >= marg.edges.back()) return 1.0;
  double cum = 0.0;
  for (std::size_t i = 0; i < marg.masses.size(); ++i) {
    if (x < marg.edges[i + 1]) {
      double w = marg.edges[i + 1] - marg.edges[i];
      return cum + marg.masses[i] * (x - marg.edges[i]) / w;
    }
    cum += marg.masses[i];
  }
  return 1.0;
}

const char* threshold_rule_name(ThresholdRule rule) {
  switch (rule) {
    case ThresholdRule::kZero:
      return "zero";
    case ThresholdRule::kMedian:
      return "median";
    case ThresholdRule::kMean:
      return "mean";
  }
  return "?";
}

ThresholdRule threshold_rule_from_name(const std::string& name) {
  if (name == "zero") return ThresholdRule::kZero;
  if (name == "median") return ThresholdRule::kMedian;
  if (name == "mean") return ThresholdRule::kMean;
  throw ConfigError("unknown threshold rule: " + name);
}

std::string Dataset::to_csv() const {
  std::string out;
  for (std::size_t r = 0; r < m(); ++r) {
    for (int j = 0; j < input_dim; ++j) {
      out += format_double(inputs[r * static_cast<std::size_t>(input_dim) + j]);
      out += ',';
    }
    out += labels[r] != 0 ? '1' : '0';
    out += '\n';
  }
  return out;
}

Dataset Dataset::from_csv(const std::string& text) {
  Dataset d;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("bad numeric cell in dataset CSV: " + cell);
      }
    }
    if (cells.size() < 2) throw ParseError("dataset CSV row too short");
    if (d.labels.empty()) {
      d.input_dim = static_cast<int>(cells.size()) - 1;
    } else if (static_cast<int>(cells.size()) - 1 != d.input_dim) {
      throw ParseError("ragged dataset CSV row");
    }
    for (int j = 0; j < d.input_dim; ++j)
      d.inputs.push_back(cells[static_cast<std::size_t>(j)]);
    double y = cells.back();
    if (y != 0.0 && y != 1.0) throw ParseError("dataset label must be 0 or 1");
    d.labels.push_back(static_cast<std::uint8_t>(y));
  }
  return d;
}

Dataset sample_copula(const CorrMatrix& c, const std::vector<Marginal>& marginals,
                      std::size_t m, ThresholdRule rule, RngStream& rng,
                      std::vector<double>* raw_output) {
  int n = c.size();
  if (static_cast<int>(marginals.size()) != n)
    throw InvalidMatrix("need one marginal per variable");
  if (!is_valid(c)) throw InvalidMatrix("copula parameter matrix is not valid");
  CholeskyFactor b = cholesky(c);

  std::vector<double> cols(static_cast<std::size_t>(n) * m);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < m; ++r) {
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = rng.normal();
    for (int i = 0; i < n; ++i) {
      double x = 0.0;
      for (int p = 0; p <= i; ++p) x += b.at(i, p) * z[static_cast<std::size_t>(p)];
      double value = x;
      if (marginals[static_cast<std::size_t>(i)].kind == Marginal::Kind::kEmpirical) {
        double u = std_normal_cdf(x);
        u = std::clamp(u, 1e-300, 1.0 - 1e-16);
        value = inverse_cdf(marginals[static_cast<std::size_t>(i)], u);
      }
      cols[static_cast<std::size_t>(i) * m + r] = value;
    }
  }

  const double* out_col = cols.data() + static_cast<std::size_t>(n - 1) * m;
  double threshold = 0.0;
  if (rule == ThresholdRule::kMedian) {
    threshold = median_of(std::vector<double>(out_col, out_col + m));
  } else if (rule == ThresholdRule::kMean) {
    threshold = kernels::sum(out_col, m) / static_cast<double>(m);
  }

  Dataset d;
  d.input_dim = n - 1;
  d.inputs.resize(static_cast<std::size_t>(n - 1) * m);
  d.labels.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (int j = 0; j < n - 1; ++j)
      d.inputs[r * static_cast<std::size_t>(n - 1) + j] =
          cols[static_cast<std::size_t>(j) * m + r];
    d.labels[r] = out_col[r] > threshold ? 1 : 0;
  }
  if (raw_output != nullptr) raw_output->assign(out_col, out_col + m);
  d.provenance = c;
  return d;
}

CorrMatrix empirical_corr(const Dataset& d) {
  std::size_t m = d.m();
  if (m < 3) throw ZeroVariance("need at least 3 records");
  int n = d.input_dim + 1;

  // Column-major centered copy so the reductions run over contiguous spans.
  std::vector<double> cols(static_cast<std::size_t>(n) * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (int j = 0; j < d.input_dim; ++j)
      cols[static_cast<std::size_t>(j) * m + r] =
          d.inputs[r * static_cast<std::size_t>(d.input_dim) + j];
    cols[static_cast<std::size_t>(n - 1) * m + r] =
        d.labels[r] != 0 ? 1.0 : 0.0;
  }
  std::vector<double> norm(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    double* col = cols.data() + static_cast<std::size_t>(j) * m;
    double mean = kernels::sum(col, m) / static_cast<double>(m);
    for (std::size_t r = 0; r < m; ++r) col[r] -= mean;
    double ss = kernels::sum_sq(col, m);
    if (ss < 1e-12)
      throw ZeroVariance("column " + std::to_string(j) + " has zero variance");
    norm[static_cast<std::size_t>(j)] = std::sqrt(ss);
  }
  CorrMatrix c(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      double cov = kernels::dot(cols.data() + static_cast<std::size_t>(i) * m,
                                cols.data() + static_cast<std::size_t>(j) * m, m);
      c.set(i, j, cov / (norm[static_cast<std::size_t>(i)] *
                         norm[static_cast<std::size_t>(j)]));
    }
  }
  return c;
}

ShiftResult shift_constraints(const std::vector<double>& v,
                              const std::vector<Marginal>& marginals,
                              const ShiftParams& params, RngStream& rng) {
  int n = static_cast<int>(v.size()) + 1;
  if (static_cast<int>(marginals.size()) != n)
    throw DomainError("shift_constraints needs one marginal per variable");
  std::vector<double> current = v;
  ShiftResult best;
  best.shifted = v;
  best.gap = std::numeric_limits<double>::infinity();

  for (int it = 0; it < params.max_iterations; ++it) {
    std::vector<double> mean_constraints(v.size(), 0.0);
    std::vector<std::vector<double>> per_shadow(
        static_cast<std::size_t>(params.shadow_count));
    parallel_for(static_cast<std::size_t>(params.shadow_count), params.workers,
                 [&](std::size_t s) {
                   RngStream stream = rng.child(
                       {static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(s)});
                   CorrMatrix c = sample_s2(n, current, stream);
                   Dataset d = sample_copula(c, marginals, params.dataset_size,
                                             params.threshold, stream);
                   CorrMatrix emp = empirical_corr(d);
                   std::vector<double> row(v.size());
                   for (int i = 0; i < n - 1; ++i)
                     row[static_cast<std::size_t>(i)] = emp.at(i, n - 1);
                   per_shadow[s] = std::move(row);
                 });
    for (const auto& row : per_shadow)
      for (std::size_t i = 0; i < row.size(); ++i)
        mean_constraints[i] += row[i] / params.shadow_count;

    double gap = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      gap = std::max(gap, std::abs(mean_constraints[i] - v[i]));
    if (gap < best.gap) {
      best.gap = gap;
      best.shifted = current;
      best.iterations = it + 1;
    }
    if (gap < params.tolerance) break;
    for (std::size_t i = 0; i < v.size(); ++i)
      current[i] = std::clamp(current[i] + 0.5 * (v[i] - mean_constraints[i]),
                              -1.0, 1.0);
  }
  return best;
}

}  // namespace corrleak
