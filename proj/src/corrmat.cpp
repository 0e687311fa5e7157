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

#include "corrleak/corrmat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace corrleak {

namespace {

constexpr double kDegenerateWidth = 1e-10;
constexpr double kPivotTol = 1e-8;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

CorrMatrix::CorrMatrix(int n) : n_(n) {
  if (n < 1) throw InvalidMatrix("correlation matrix needs n >= 1");
  e_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) e_[static_cast<std::size_t>(i) * n + i] = 1.0;
}

void CorrMatrix::set(int i, int j, double v) {
  e_[static_cast<std::size_t>(i) * n_ + j] = v;
  e_[static_cast<std::size_t>(j) * n_ + i] = v;
}

std::string CorrMatrix::to_csv() const {
  std::string out;
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      if (j > 0) out += ',';
      out += format_double(at(i, j));
    }
    out += '\n';
  }
  return out;
}

CorrMatrix CorrMatrix::from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("bad numeric cell in correlation CSV: " + cell);
      }
    }
    rows.push_back(std::move(row));
  }
  int n = static_cast<int>(rows.size());
  if (n == 0) throw ParseError("empty correlation CSV");
  CorrMatrix c(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ParseError("ragged correlation CSV row");
    for (int j = 0; j < n; ++j)
      c.data()[static_cast<std::size_t>(i) * n + j] = rows[i][j];
  }
  return c;
}

std::string CorrMatrix::to_json() const {
  nlohmann::json j;
  j["n"] = n_;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < n_; ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < n_; ++k) row.push_back(at(i, k));
    rows.push_back(std::move(row));
  }
  j["entries"] = std::move(rows);
  return j.dump();
}

CorrMatrix CorrMatrix::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad correlation JSON: ") + e.what());
  }
  if (!j.contains("n") || !j.contains("entries"))
    throw ParseError("correlation JSON needs \"n\" and \"entries\"");
  int n = j["n"].get<int>();
  CorrMatrix c(n);
  const auto& rows = j["entries"];
  if (static_cast<int>(rows.size()) != n)
    throw ParseError("correlation JSON entry count mismatch");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ParseError("correlation JSON entry count mismatch");
    for (int k = 0; k < n; ++k)
      c.data()[static_cast<std::size_t>(i) * n + k] = rows[i][k].get<double>();
  }
  return c;
}

std::vector<double> sym_eigenvalues(const CorrMatrix& c) {
  int n = c.size();
  std::vector<double> a = c.data();
  auto at = [&](int i, int j) -> double& {
    return a[static_cast<std::size_t>(i) * n + j];
  };
  // symmetrize so the iteration is well-behaved on nearly symmetric input
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.5 * (at(i, j) + at(j, i));
      at(i, j) = v;
      at(j, i) = v;
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-28 * n * n) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cs = 1.0 / std::sqrt(t * t + 1.0);
        double sn = t * cs;
        for (int k = 0; k < n; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = cs * akp - sn * akq;
          at(k, q) = sn * akp + cs * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = cs * apk - sn * aqk;
          at(q, k) = sn * apk + cs * aqk;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

bool is_valid(const CorrMatrix& c, double tol) {
  int n = c.size();
  if (n < 1) return false;
  for (int i = 0; i < n; ++i) {
    if (std::abs(c.at(i, i) - 1.0) > tol) return false;
    for (int j = 0; j < n; ++j) {
      double v = c.at(i, j);
      if (!std::isfinite(v) || std::abs(v) > 1.0 + tol) return false;
      if (std::abs(v - c.at(j, i)) > tol) return false;
    }
  }
  auto eig = sym_eigenvalues(c);
  return eig.front() >= -tol;
}

CholeskyFactor cholesky(const CorrMatrix& c) {
  int n = c.size();
  CholeskyFactor b;
  b.n = n;
  b.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = c.at(i, j);
      for (int p = 0; p < j; ++p) s -= b.at(i, p) * b.at(j, p);
      if (i == j) {
        if (s < -kPivotTol)
          throw NotPositiveSemiDefinite("Cholesky pivot " + std::to_string(s) +
                                        " at index " + std::to_string(i));
        b.at(i, i) = s > 0.0 ? std::sqrt(s) : 0.0;
      } else {
        // A zero pivot means column j is linearly dependent on earlier ones;
        // the residual s is ~0 for a PSD input and the entry is set to 0.
        b.at(i, j) = b.at(j, j) > 0.0 ? s / b.at(j, j) : 0.0;
      }
    }
  }
  return b;
}

CorrMatrix reconstruct(const CholeskyFactor& b) {
  int n = b.n;
  CorrMatrix c(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int p = 0; p <= j; ++p) s += b.at(i, p) * b.at(j, p);
      c.set(i, j, s);
    }
  }
  return c;
}

CoefficientBounds coefficient_bounds(const CholeskyFactor& partial, int i, int j) {
  if (i <= j)
    throw IndexOrder("coefficient_bounds needs i > j, got i=" +
                     std::to_string(i) + " j=" + std::to_string(j));
  CoefficientBounds out;
  double m = 0.0;
  for (int p = 0; p < j; ++p) m += partial.at(i, p) * partial.at(j, p);
  out.m = m;
  out.l = partial.at(i, j) * partial.at(j, j);
  if (out.l < 0.0) out.l = 0.0;
  return out;
}

CorrMatrix reorder(const CorrMatrix& c, const std::vector<int>& perm) {
  int n = c.size();
  CorrMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.data()[static_cast<std::size_t>(i) * n + j] = c.at(perm[i], perm[j]);
  return out;
}

std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

namespace {

// Core sampler over the spherical parametrization. first_col[i-1], when set,
// pins c[i][0]; otherwise the entry is drawn uniform on [-1, 1]. Coefficients
// are then generated row by row, left to right, each uniform within its
// feasible bounds. Entries of B from the current column onward hold the
// running sine product, so coefficient_bounds applies directly.
CorrMatrix sample_with_first_column(
    int n, const std::vector<std::optional<double>>& first_col, RngStream& rng) {
  CorrMatrix c(n);
  CholeskyFactor b;
  b.n = n;
  b.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  b.at(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    double v = first_col[static_cast<std::size_t>(i - 1)].has_value()
                   ? clamp_unit(*first_col[static_cast<std::size_t>(i - 1)])
                   : rng.uniform(-1.0, 1.0);
    c.set(i, 0, v);
    b.at(i, 0) = v;
    double s = std::sqrt(std::max(0.0, 1.0 - v * v));
    for (int j = 1; j <= i; ++j) b.at(i, j) = s;
  }
  for (int i = 2; i < n; ++i) {
    for (int j = 1; j < i; ++j) {
      CoefficientBounds bounds = coefficient_bounds(b, i, j);
      double v, cosine;
      if (bounds.l < kDegenerateWidth) {
        // Degenerate range: the coefficient is forced; take the limit
        // cos = 0, sin = 1 so the remaining row entries are untouched.
        v = clamp_unit(bounds.m);
        cosine = 0.0;
      } else {
        v = rng.uniform(bounds.lo(), bounds.hi());
        cosine = clamp_unit((v - bounds.m) / bounds.l);
      }
      c.set(i, j, v);
      double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
      b.at(i, j) *= cosine;
      for (int k = j + 1; k <= i; ++k) b.at(i, k) *= sine;
    }
  }
  return c;
}

std::vector<int> random_tail_permutation(int lo, int hi, RngStream& rng) {
  std::vector<int> tail;
  for (int i = lo; i <= hi; ++i) tail.push_back(i);
  rng.shuffle(tail);
  return tail;
}

}  // namespace

CorrMatrix sample_corr_matrix(int n, RngStream& rng) {
  if (n < 2) throw InvalidMatrix("sampler needs n >= 2");
  std::vector<std::optional<double>> first(static_cast<std::size_t>(n - 1));
  return sample_with_first_column(n, first, rng);
}

CorrMatrix sample_s2(int n, const std::vector<double>& v, RngStream& rng) {
  if (n < 2) throw InvalidMatrix("sample_s2 needs n >= 2");
  if (static_cast<int>(v.size()) != n - 1)
    throw InfeasibleConstraints("sample_s2 needs n-1 constraints");
  for (double x : v)
    if (!std::isfinite(x) || std::abs(x) > 1.0)
      throw InfeasibleConstraints("constraint outside [-1, 1]");

  // Shuffle constraints 3..n-1, keeping the target-pair constraints first.
  std::vector<int> sigma;
  if (n == 2) {
    sigma = {0};
  } else {
    sigma = {0, 1};
    if (n >= 4) {
      auto tail = random_tail_permutation(2, n - 2, rng);
      sigma.insert(sigma.end(), tail.begin(), tail.end());
    }
  }

  // Variable order during generation: Y, X_sigma(1), ..., X_sigma(n-1).
  std::vector<std::optional<double>> first(static_cast<std::size_t>(n - 1));
  for (int i = 0; i < n - 1; ++i)
    first[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(sigma[i])];
  CorrMatrix c = sample_with_first_column(n, first, rng);

  // Reorder to X_sigma(1), ..., X_sigma(n-1), Y.
  std::vector<int> move_y(static_cast<std::size_t>(n));
  for (int i = 0; i < n - 1; ++i) move_y[static_cast<std::size_t>(i)] = i + 1;
  move_y[static_cast<std::size_t>(n - 1)] = 0;
  c = reorder(c, move_y);

  // Undo the constraint shuffle so the output order is X_1..X_{n-1}, Y.
  std::vector<int> unshuffle = invert_permutation(sigma);
  unshuffle.push_back(n - 1);
  return reorder(c, unshuffle);
}

CorrMatrix sample_s1(int n, double rho1, double rho2, RngStream& rng) {
  if (n < 3) throw InvalidMatrix("sample_s1 needs n >= 3");
  if (!std::isfinite(rho1) || !std::isfinite(rho2) || std::abs(rho1) > 1.0 ||
      std::abs(rho2) > 1.0)
    throw InfeasibleConstraints("constraint outside [-1, 1]");

  // Generation order Y, X_1, X_2, <free variables>: seed the first two
  // first-column entries, leave the rest uniform.
  std::vector<std::optional<double>> first(static_cast<std::size_t>(n - 1));
  first[0] = rho1;
  first[1] = rho2;
  CorrMatrix c = sample_with_first_column(n, first, rng);

  // Reorder to X_1, X_2, <shuffled free variables>, Y.
  std::vector<int> sigma = {1, 2};
  if (n >= 4) {
    auto tail = random_tail_permutation(3, n - 1, rng);
    sigma.insert(sigma.end(), tail.begin(), tail.end());
  }
  sigma.push_back(0);
  return reorder(c, sigma);
}

CorrMatrix sample_s3(const CorrMatrix& known, RngStream& rng) {
  int n = known.size();
  if (n < 3) throw InvalidMatrix("sample_s3 needs n >= 3");

  // Reverse the variable order to Y, X_{n-1}, ..., X_1 so the unknown pair
  // lands in the last two positions.
  std::vector<int> sigma(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sigma[static_cast<std::size_t>(i)] = n - 1 - i;
  CorrMatrix cp = reorder(known, sigma);

  // Factor the known principal block.
  CorrMatrix head(n - 1);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n - 1; ++j)
      head.data()[static_cast<std::size_t>(i) * (n - 1) + j] = cp.at(i, j);
  CholeskyFactor bh;
  try {
    bh = cholesky(head);
  } catch (const NotPositiveSemiDefinite& e) {
    throw InfeasibleConstraints(std::string("known block not PSD: ") + e.what());
  }

  CholeskyFactor b;
  b.n = n;
  b.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j <= i; ++j) b.at(i, j) = bh.at(i, j);

  // Reverse-engineer the last row from the known correlations, leaving the
  // entry tied to the unknown coefficient free.
  b.at(n - 1, 0) = cp.at(n - 1, 0);
  for (int i = 1; i <= n - 3; ++i) {
    double s = cp.at(n - 1, i);
    for (int p = 0; p < i; ++p) s -= b.at(i, p) * b.at(n - 1, p);
    if (b.at(i, i) > 1e-12) {
      b.at(n - 1, i) = s / b.at(i, i);
    } else if (std::abs(s) <= kPivotTol) {
      b.at(n - 1, i) = 0.0;
    } else {
      throw InfeasibleConstraints("degenerate known block contradicts row");
    }
  }
  double norm_sq = 0.0;
  for (int j = 0; j <= n - 3; ++j) norm_sq += b.at(n - 1, j) * b.at(n - 1, j);
  if (norm_sq > 1.0 + kPivotTol)
    throw InfeasibleConstraints("known entries admit no PSD completion");
  b.at(n - 1, n - 2) = std::sqrt(std::max(0.0, 1.0 - norm_sq));

  double m = 0.0;
  for (int p = 0; p <= n - 3; ++p) m += b.at(n - 2, p) * b.at(n - 1, p);
  double l = b.at(n - 2, n - 2) * b.at(n - 1, n - 2);
  double v = l < kDegenerateWidth ? clamp_unit(m) : rng.uniform(m - l, m + l);

  CorrMatrix out = cp;
  out.set(n - 1, n - 2, v);
  return reorder(out, sigma);  // the reversal is its own inverse
}

Scenario Scenario::s1(double rho1, double rho2) {
  Scenario s;
  s.kind = ScenarioKind::kS1;
  s.rho1 = rho1;
  s.rho2 = rho2;
  return s;
}

Scenario Scenario::s2(std::vector<double> v) {
  Scenario s;
  s.kind = ScenarioKind::kS2;
  s.v = std::move(v);
  return s;
}

Scenario Scenario::s3(CorrMatrix known) {
  Scenario s;
  s.kind = ScenarioKind::kS3;
  s.known = std::move(known);
  return s;
}

void Scenario::validate(int n) const {
  auto check = [](double x) {
    if (!std::isfinite(x) || std::abs(x) > 1.0)
      throw InfeasibleConstraints("constraint outside [-1, 1]");
  };
  switch (kind) {
    case ScenarioKind::kS1:
      check(rho1);
      check(rho2);
      break;
    case ScenarioKind::kS2:
      if (static_cast<int>(v.size()) != n - 1)
        throw InfeasibleConstraints("S2 needs n-1 constraints");
      for (double x : v) check(x);
      break;
    case ScenarioKind::kS3:
      if (!known.has_value() || known->size() != n)
        throw InfeasibleConstraints("S3 needs a full n x n constraint matrix");
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
          if (i != 1 || j != 0) check(known->at(i, j));
      break;
  }
}

CorrMatrix Scenario::sample(int n, RngStream& rng) const {
  switch (kind) {
    case ScenarioKind::kS1:
      return sample_s1(n, rho1, rho2, rng);
    case ScenarioKind::kS2:
      return sample_s2(n, v, rng);
    case ScenarioKind::kS3:
      return sample_s3(*known, rng);
  }
  throw ConfigError("unknown scenario kind");
}

std::vector<double> Scenario::output_constraints(int n) const {
  std::vector<double> out(static_cast<std::size_t>(n - 1), 0.0);
  switch (kind) {
    case ScenarioKind::kS1:
      out[0] = rho1;
      out[1] = rho2;
      break;
    case ScenarioKind::kS2:
      out = v;
      break;
    case ScenarioKind::kS3:
      for (int i = 0; i < n - 1; ++i)
        out[static_cast<std::size_t>(i)] = known->at(i, n - 1);
      break;
  }
  return out;
}

const char* scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kS1:
      return "S1";
    case ScenarioKind::kS2:
      return "S2";
    case ScenarioKind::kS3:
      return "S3";
  }
  return "?";
}

}  // namespace corrleak
