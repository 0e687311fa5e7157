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

#include "corrleak/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "corrleak/kernels.hpp"
#include "json.hpp"

namespace corrleak {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(-t)) without overflow.
double log1p_exp_neg(double t) {
  if (t > 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

// Objective and gradient of the summed logistic loss with 0.5*||w||^2 on the
// weight part of theta = (w..., b).
double logistic_objective(const double* x, const std::uint8_t* y, std::size_t m,
                          int dim, const std::vector<double>& theta,
                          std::vector<double>& grad) {
  std::size_t d = static_cast<std::size_t>(dim);
  grad.assign(d + 1, 0.0);
  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = x + r * d;
    double score = kernels::dot(row, theta.data(), d) + theta[d];
    double s = y[r] != 0 ? 1.0 : -1.0;
    loss += log1p_exp_neg(s * score);
    double g = -s * sigmoid(-s * score);
    kernels::axpy(g, row, grad.data(), d);
    grad[d] += g;
  }
  for (std::size_t j = 0; j < d; ++j) {
    loss += 0.5 * theta[j] * theta[j];
    grad[j] += theta[j];
  }
  return loss;
}

double max_abs(const std::vector<double>& v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

int argmax_row(const double* p, int k) {
  int best = 0;
  for (int j = 1; j < k; ++j)
    if (p[j] > p[best]) best = j;
  return best;
}

void softmax_rows(double* logits, std::size_t m, int k) {
  for (std::size_t r = 0; r < m; ++r) {
    double* row = logits + r * static_cast<std::size_t>(k);
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (int j = 0; j < k; ++j) row[j] /= total;
  }
}

struct MlpGrads {
  std::vector<double> w1, b1, w2, b2, w3, b3;
  void zero_like(const MlpModel& model) {
    w1.assign(model.w1.size(), 0.0);
    b1.assign(model.b1.size(), 0.0);
    w2.assign(model.w2.size(), 0.0);
    b2.assign(model.b2.size(), 0.0);
    w3.assign(model.w3.size(), 0.0);
    b3.assign(model.b3.size(), 0.0);
  }
};

struct MlpActivations {
  std::vector<double> h1, h2, probs;  // m x h1 / m x h2 / m x out
};

void mlp_forward(const MlpModel& model, const double* x, std::size_t m,
                 MlpActivations& act) {
  std::size_t d = static_cast<std::size_t>(model.in_dim);
  act.h1.resize(m * static_cast<std::size_t>(model.h1));
  act.h2.resize(m * static_cast<std::size_t>(model.h2));
  act.probs.resize(m * static_cast<std::size_t>(model.out_dim));
  kernels::matmul_nn(x, model.w1.data(), act.h1.data(), m, d,
                     static_cast<std::size_t>(model.h1));
  for (std::size_t r = 0; r < m; ++r) {
    double* row = act.h1.data() + r * static_cast<std::size_t>(model.h1);
    for (int j = 0; j < model.h1; ++j)
      row[j] = std::max(0.0, row[j] + model.b1[static_cast<std::size_t>(j)]);
  }
  kernels::matmul_nn(act.h1.data(), model.w2.data(), act.h2.data(), m,
                     static_cast<std::size_t>(model.h1),
                     static_cast<std::size_t>(model.h2));
  for (std::size_t r = 0; r < m; ++r) {
    double* row = act.h2.data() + r * static_cast<std::size_t>(model.h2);
    for (int j = 0; j < model.h2; ++j)
      row[j] = std::max(0.0, row[j] + model.b2[static_cast<std::size_t>(j)]);
  }
  kernels::matmul_nn(act.h2.data(), model.w3.data(), act.probs.data(), m,
                     static_cast<std::size_t>(model.h2),
                     static_cast<std::size_t>(model.out_dim));
  for (std::size_t r = 0; r < m; ++r) {
    double* row = act.probs.data() + r * static_cast<std::size_t>(model.out_dim);
    for (int j = 0; j < model.out_dim; ++j)
      row[j] += model.b3[static_cast<std::size_t>(j)];
  }
  softmax_rows(act.probs.data(), m, model.out_dim);
}

// dlogits is m x out_dim and is consumed in place; gradients come out in the
// same layout as the model blocks.
void mlp_backward(const MlpModel& model, const double* x, std::size_t m,
                  const MlpActivations& act, std::vector<double>& dlogits,
                  MlpGrads& grads) {
  std::size_t d = static_cast<std::size_t>(model.in_dim);
  grads.zero_like(model);
  kernels::matmul_tn(act.h2.data(), dlogits.data(), grads.w3.data(), m,
                     static_cast<std::size_t>(model.h2),
                     static_cast<std::size_t>(model.out_dim));
  for (std::size_t r = 0; r < m; ++r)
    for (int j = 0; j < model.out_dim; ++j)
      grads.b3[static_cast<std::size_t>(j)] +=
          dlogits[r * static_cast<std::size_t>(model.out_dim) + j];

  std::vector<double> dh2(m * static_cast<std::size_t>(model.h2));
  kernels::matmul_nt(dlogits.data(), model.w3.data(), dh2.data(), m,
                     static_cast<std::size_t>(model.out_dim),
                     static_cast<std::size_t>(model.h2));
  for (std::size_t i = 0; i < dh2.size(); ++i)
    if (act.h2[i] <= 0.0) dh2[i] = 0.0;
  kernels::matmul_tn(act.h1.data(), dh2.data(), grads.w2.data(), m,
                     static_cast<std::size_t>(model.h1),
                     static_cast<std::size_t>(model.h2));
  for (std::size_t r = 0; r < m; ++r)
    for (int j = 0; j < model.h2; ++j)
      grads.b2[static_cast<std::size_t>(j)] +=
          dh2[r * static_cast<std::size_t>(model.h2) + j];

  std::vector<double> dh1(m * static_cast<std::size_t>(model.h1));
  kernels::matmul_nt(dh2.data(), model.w2.data(), dh1.data(), m,
                     static_cast<std::size_t>(model.h2),
                     static_cast<std::size_t>(model.h1));
  for (std::size_t i = 0; i < dh1.size(); ++i)
    if (act.h1[i] <= 0.0) dh1[i] = 0.0;
  kernels::matmul_tn(x, dh1.data(), grads.w1.data(), m, d,
                     static_cast<std::size_t>(model.h1));
  for (std::size_t r = 0; r < m; ++r)
    for (int j = 0; j < model.h1; ++j)
      grads.b1[static_cast<std::size_t>(j)] +=
          dh1[r * static_cast<std::size_t>(model.h1) + j];
}

void sgd_step(MlpModel& model, const MlpGrads& grads, double lr, double wd) {
  auto update = [&](std::vector<double>& param, const std::vector<double>& g) {
    for (std::size_t i = 0; i < param.size(); ++i)
      param[i] -= lr * (g[i] + wd * param[i]);
  };
  update(model.w1, grads.w1);
  update(model.b1, grads.b1);
  update(model.w2, grads.w2);
  update(model.b2, grads.b2);
  update(model.w3, grads.w3);
  update(model.b3, grads.b3);
}

void require_two_classes(const std::uint8_t* y, std::size_t m) {
  bool has0 = false, has1 = false;
  for (std::size_t r = 0; r < m; ++r) (y[r] != 0 ? has1 : has0) = true;
  if (!has0 || !has1) throw SingleClass("labels are constant");
}

}  // namespace

LogisticRegressionModel fit_binary_logistic(const double* x,
                                            const std::uint8_t* y, std::size_t m,
                                            int dim, int max_iter, double tol) {
  const int kMemory = 10;
  std::size_t d = static_cast<std::size_t>(dim);
  std::vector<double> theta(d + 1, 0.0), grad;
  double f = logistic_objective(x, y, m, dim, theta, grad);

  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (max_abs(grad) <= tol) break;

    // Two-loop recursion for the search direction.
    std::vector<double> q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho_hist[h] * kernels::dot(s_hist[h].data(), q.data(), d + 1);
      kernels::axpy(-alpha[h], y_hist[h].data(), q.data(), d + 1);
    }
    if (!s_hist.empty()) {
      const auto& sb = s_hist.back();
      const auto& yb = y_hist.back();
      double gamma = kernels::dot(sb.data(), yb.data(), d + 1) /
                     kernels::dot(yb.data(), yb.data(), d + 1);
      for (double& v : q) v *= gamma;
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      double beta = rho_hist[h] * kernels::dot(y_hist[h].data(), q.data(), d + 1);
      kernels::axpy(alpha[h] - beta, s_hist[h].data(), q.data(), d + 1);
    }
    for (double& v : q) v = -v;

    double slope = kernels::dot(grad.data(), q.data(), d + 1);
    if (slope >= 0.0) {  // not a descent direction; fall back to -grad
      for (std::size_t j = 0; j <= d; ++j) q[j] = -grad[j];
      slope = -kernels::dot(grad.data(), grad.data(), d + 1);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double t = s_hist.empty() ? 1.0 / (1.0 + std::sqrt(-slope)) : 1.0;
    std::vector<double> theta_new(d + 1), grad_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j <= d; ++j) theta_new[j] = theta[j] + t * q[j];
      grad_new.clear();
      f_new = logistic_objective(x, y, m, dim, theta_new, grad_new);
      if (f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s_vec(d + 1), y_vec(d + 1);
    for (std::size_t j = 0; j <= d; ++j) {
      s_vec[j] = theta_new[j] - theta[j];
      y_vec[j] = grad_new[j] - grad[j];
    }
    double sy = kernels::dot(s_vec.data(), y_vec.data(), d + 1);
    double ss = kernels::dot(s_vec.data(), s_vec.data(), d + 1);
    double yy = kernels::dot(y_vec.data(), y_vec.data(), d + 1);
    if (sy > 1e-10 * std::sqrt(ss * yy)) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    theta = std::move(theta_new);
    grad = std::move(grad_new);
    f = f_new;
  }

  LogisticRegressionModel model;
  model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  model.bias = theta[d];
  return model;
}

LogisticRegressionModel train_lr(const Dataset& d, const TrainConfig& cfg) {
  if (d.m() < 10) throw SingleClass("need at least 10 records");
  require_two_classes(d.labels.data(), d.m());
  return fit_binary_logistic(d.inputs.data(), d.labels.data(), d.m(), d.input_dim,
                             cfg.max_epochs, 1e-4);
}

MlpModel train_mlp_classifier(const double* x, const int* y, std::size_t m,
                              int dim, int classes, const TrainConfig& cfg) {
  MlpModel model;
  model.in_dim = dim;
  model.out_dim = classes;
  RngStream root(cfg.seed);

  // Holdout split.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RngStream split_rng = root.child(0);
  split_rng.shuffle(order);
  std::size_t holdout =
      static_cast<std::size_t>(static_cast<double>(m) * cfg.holdout_fraction);
  std::size_t train_count = m - holdout;

  std::size_t d = static_cast<std::size_t>(dim);
  std::vector<double> train_x(train_count * d);
  std::vector<int> train_y(train_count);
  std::vector<double> hold_x(holdout * d);
  std::vector<int> hold_y(holdout);
  for (std::size_t i = 0; i < train_count; ++i) {
    std::memcpy(train_x.data() + i * d, x + order[i] * d, d * sizeof(double));
    train_y[i] = y[order[i]];
  }
  for (std::size_t i = 0; i < holdout; ++i) {
    std::memcpy(hold_x.data() + i * d, x + order[train_count + i] * d,
                d * sizeof(double));
    hold_y[i] = y[order[train_count + i]];
  }

  // Fan-in uniform init, draw order w1, b1, w2, b2, w3, b3.
  RngStream init_rng = root.child(1);
  auto init_layer = [&](std::vector<double>& w, std::vector<double>& b,
                        int fan_in, int fan_out) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    w.resize(static_cast<std::size_t>(fan_in) * fan_out);
    b.resize(static_cast<std::size_t>(fan_out));
    for (double& v : w) v = init_rng.uniform(-bound, bound);
    for (double& v : b) v = init_rng.uniform(-bound, bound);
  };
  init_layer(model.w1, model.b1, dim, model.h1);
  init_layer(model.w2, model.b2, model.h1, model.h2);
  init_layer(model.w3, model.b3, model.h2, classes);

  struct HoldoutEval {
    double accuracy = 0.0;
    double loss = 0.0;
  };
  auto eval_holdout = [&](const MlpModel& mdl) {
    HoldoutEval eval;
    if (holdout == 0) return eval;
    MlpActivations act;
    mlp_forward(mdl, hold_x.data(), holdout, act);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < holdout; ++r) {
      const double* row = act.probs.data() + r * static_cast<std::size_t>(classes);
      if (argmax_row(row, classes) == hold_y[r]) ++hits;
      eval.loss -= std::log(std::max(row[hold_y[r]], 1e-300));
    }
    eval.accuracy = static_cast<double>(hits) / static_cast<double>(holdout);
    eval.loss /= static_cast<double>(holdout);
    return eval;
  };

  auto step_on = [&](const double* bx, const int* by, std::size_t bm) {
    MlpActivations act;
    mlp_forward(model, bx, bm, act);
    std::vector<double> dlogits = act.probs;
    double inv = 1.0 / static_cast<double>(bm);
    for (std::size_t r = 0; r < bm; ++r)
      for (int j = 0; j < classes; ++j) {
        std::size_t idx = r * static_cast<std::size_t>(classes) + j;
        dlogits[idx] = (dlogits[idx] - (by[r] == j ? 1.0 : 0.0)) * inv;
      }
    MlpGrads grads;
    mlp_backward(model, bx, bm, act, dlogits, grads);
    sgd_step(model, grads, cfg.learning_rate, cfg.weight_decay);
  };

  MlpModel best = model;
  double best_acc = -1.0;
  // Accuracy on a small holdout moves in coarse steps, so an epoch also
  // counts as progress when the holdout loss still decreases; the restored
  // weights remain the best-accuracy epoch (ties to the earlier one).
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::vector<std::size_t> batch_order(train_count);
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  std::vector<double> batch_x;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (cfg.batch_size <= 0 ||
        static_cast<std::size_t>(cfg.batch_size) >= train_count) {
      step_on(train_x.data(), train_y.data(), train_count);
    } else {
      RngStream epoch_rng = root.child({2, static_cast<std::uint64_t>(epoch)});
      epoch_rng.shuffle(batch_order);
      std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
      for (std::size_t start = 0; start < train_count; start += bs) {
        std::size_t bm = std::min(bs, train_count - start);
        batch_x.resize(bm * d);
        batch_y.resize(bm);
        for (std::size_t i = 0; i < bm; ++i) {
          std::memcpy(batch_x.data() + i * d,
                      train_x.data() + batch_order[start + i] * d,
                      d * sizeof(double));
          batch_y[i] = train_y[batch_order[start + i]];
        }
        step_on(batch_x.data(), batch_y.data(), bm);
      }
    }
    if (holdout == 0) continue;
    HoldoutEval eval = eval_holdout(model);
    bool progressed = false;
    if (eval.accuracy > best_acc) {
      best_acc = eval.accuracy;
      best = model;
      progressed = true;
    }
    if (eval.loss < best_loss) {
      best_loss = eval.loss;
      progressed = true;
    }
    if (progressed) {
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return holdout == 0 ? model : best;
}

MlpModel train_mlp(const Dataset& d, const TrainConfig& cfg) {
  if (d.m() < 10) throw SingleClass("need at least 10 records");
  require_two_classes(d.labels.data(), d.m());
  std::vector<int> y(d.m());
  for (std::size_t r = 0; r < d.m(); ++r) y[r] = d.labels[r] != 0 ? 1 : 0;
  return train_mlp_classifier(d.inputs.data(), y.data(), d.m(), d.input_dim, 2,
                              cfg);
}

std::array<double, 2> predict_proba(const LogisticRegressionModel& model,
                                    std::span<const double> x) {
  if (x.size() != model.weights.size())
    throw ShapeMismatch("input length does not match weight count");
  double score =
      kernels::dot(x.data(), model.weights.data(), x.size()) + model.bias;
  double p1 = sigmoid(score);
  return {1.0 - p1, p1};
}

std::vector<double> predict_proba(const MlpModel& model,
                                  std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.in_dim)
    throw ShapeMismatch("input length does not match mlp input dim");
  MlpActivations act;
  mlp_forward(model, x.data(), 1, act);
  return act.probs;
}

std::vector<double> flatten_weights(const LogisticRegressionModel& model) {
  std::vector<double> out = model.weights;
  out.push_back(model.bias);
  return out;
}

std::vector<double> flatten_weights(const MlpModel& model) {
  std::vector<double> out;
  out.reserve(model.w1.size() + model.b1.size() + model.w2.size() +
              model.b2.size() + model.w3.size() + model.b3.size());
  for (const auto* block : {&model.w1, &model.b1, &model.w2, &model.b2,
                            &model.w3, &model.b3})
    out.insert(out.end(), block->begin(), block->end());
  return out;
}

namespace {

// Sorts the neurons of one hidden layer by ascending (sum of incoming
// weights + bias), ties by index. w_in is fan_in x width, w_out is
// width x fan_out.
void sort_layer(std::vector<double>& w_in, std::vector<double>& b, int fan_in,
                int width, std::vector<double>& w_out, int fan_out) {
  std::vector<double> keys(static_cast<std::size_t>(width));
  for (int j = 0; j < width; ++j) {
    double s = b[static_cast<std::size_t>(j)];
    for (int i = 0; i < fan_in; ++i)
      s += w_in[static_cast<std::size_t>(i) * width + j];
    keys[static_cast<std::size_t>(j)] = s;
  }
  std::vector<int> order(static_cast<std::size_t>(width));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(c)];
  });
  std::vector<double> w_in_new(w_in.size()), b_new(b.size()),
      w_out_new(w_out.size());
  for (int j = 0; j < width; ++j) {
    int src = order[static_cast<std::size_t>(j)];
    b_new[static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(src)];
    for (int i = 0; i < fan_in; ++i)
      w_in_new[static_cast<std::size_t>(i) * width + j] =
          w_in[static_cast<std::size_t>(i) * width + src];
    for (int k = 0; k < fan_out; ++k)
      w_out_new[static_cast<std::size_t>(j) * fan_out + k] =
          w_out[static_cast<std::size_t>(src) * fan_out + k];
  }
  w_in = std::move(w_in_new);
  b = std::move(b_new);
  w_out = std::move(w_out_new);
}

}  // namespace

MlpModel canonicalized(const MlpModel& model) {
  MlpModel out = model;
  sort_layer(out.w1, out.b1, out.in_dim, out.h1, out.w2, out.h2);
  sort_layer(out.w2, out.b2, out.h1, out.h2, out.w3, out.out_dim);
  return out;
}

std::vector<double> canonical_weights(const MlpModel& model) {
  return flatten_weights(canonicalized(model));
}

std::vector<double> log_prob_gradient(const MlpModel& model,
                                      std::span<const double> x, int cls) {
  if (static_cast<int>(x.size()) != model.in_dim)
    throw ShapeMismatch("input length does not match mlp input dim");
  MlpActivations act;
  mlp_forward(model, x.data(), 1, act);
  std::vector<double> dlogits(static_cast<std::size_t>(model.out_dim));
  for (int j = 0; j < model.out_dim; ++j)
    dlogits[static_cast<std::size_t>(j)] =
        act.probs[static_cast<std::size_t>(j)] - (j == cls ? 1.0 : 0.0);
  // d(-log p_cls)/dlogits = p - onehot; flip sign for d(log p_cls).
  for (double& v : dlogits) v = -v;
  MlpGrads grads;
  mlp_backward(model, x.data(), 1, act, dlogits, grads);
  std::vector<double> out;
  for (const auto* block : {&grads.w1, &grads.b1, &grads.w2, &grads.b2,
                            &grads.w3, &grads.b3})
    out.insert(out.end(), block->begin(), block->end());
  return out;
}

MlpModel mlp_from_flat(int in_dim, int out_dim, std::span<const double> flat) {
  MlpModel model;
  model.in_dim = in_dim;
  model.out_dim = out_dim;
  std::size_t sizes[6] = {
      static_cast<std::size_t>(in_dim) * model.h1,
      static_cast<std::size_t>(model.h1),
      static_cast<std::size_t>(model.h1) * model.h2,
      static_cast<std::size_t>(model.h2),
      static_cast<std::size_t>(model.h2) * out_dim,
      static_cast<std::size_t>(out_dim)};
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (flat.size() != total) throw ShapeMismatch("flat weight vector size");
  std::vector<double>* blocks[6] = {&model.w1, &model.b1, &model.w2,
                                    &model.b2, &model.w3, &model.b3};
  std::size_t offset = 0;
  for (int i = 0; i < 6; ++i) {
    blocks[i]->assign(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                      flat.begin() + static_cast<std::ptrdiff_t>(offset + sizes[i]));
    offset += sizes[i];
  }
  return model;
}

const char* model_kind_name(ModelKind kind) {
  return kind == ModelKind::kLogisticRegression ? "lr" : "mlp";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "lr") return ModelKind::kLogisticRegression;
  if (name == "mlp") return ModelKind::kMlp;
  throw ConfigError("unknown model kind: " + name);
}

double confidence(const Model& model, std::span<const double> x) {
  if (const auto* lr = std::get_if<LogisticRegressionModel>(&model))
    return predict_proba(*lr, x)[1];
  return predict_proba(std::get<MlpModel>(model), x)[1];
}

std::vector<double> flatten_model_weights(const Model& model) {
  if (const auto* lr = std::get_if<LogisticRegressionModel>(&model))
    return flatten_weights(*lr);
  return flatten_weights(std::get<MlpModel>(model));
}

std::string model_to_json(const Model& model) {
  nlohmann::json j;
  j["format"] = "corrleak-model-v1";
  if (const auto* lr = std::get_if<LogisticRegressionModel>(&model)) {
    j["kind"] = "lr";
    j["weights"] = lr->weights;
    j["bias"] = lr->bias;
  } else {
    const auto& mlp = std::get<MlpModel>(model);
    j["kind"] = "mlp";
    j["in_dim"] = mlp.in_dim;
    j["out_dim"] = mlp.out_dim;
    j["hidden"] = {mlp.h1, mlp.h2};
    j["w1"] = mlp.w1;
    j["b1"] = mlp.b1;
    j["w2"] = mlp.w2;
    j["b2"] = mlp.b2;
    j["w3"] = mlp.w3;
    j["b3"] = mlp.b3;
  }
  return j.dump();
}

Model model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("bad model JSON: ") + e.what());
  }
  if (j.value("format", "") != "corrleak-model-v1")
    throw ParseError("unsupported model format tag");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "lr") {
    LogisticRegressionModel lr;
    lr.weights = j.at("weights").get<std::vector<double>>();
    lr.bias = j.at("bias").get<double>();
    return lr;
  }
  if (kind != "mlp") throw ParseError("unknown model kind in JSON");
  MlpModel mlp;
  mlp.in_dim = j.at("in_dim").get<int>();
  mlp.out_dim = j.at("out_dim").get<int>();
  mlp.w1 = j.at("w1").get<std::vector<double>>();
  mlp.b1 = j.at("b1").get<std::vector<double>>();
  mlp.w2 = j.at("w2").get<std::vector<double>>();
  mlp.b2 = j.at("b2").get<std::vector<double>>();
  mlp.w3 = j.at("w3").get<std::vector<double>>();
  mlp.b3 = j.at("b3").get<std::vector<double>>();
  return mlp;
}

}  // namespace corrleak
