#include "dcfcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dcfcl {

ClassMask ClassMask::all(int num_classes) {
  ClassMask m;
  m.active.assign(static_cast<std::size_t>(num_classes), 1);
  return m;
}

ClassMask ClassMask::of(int num_classes, std::span<const int> class_ids) {
  ClassMask m;
  m.active.assign(static_cast<std::size_t>(num_classes), 0);
  for (int c : class_ids) {
    if (c < 0 || c >= num_classes) throw std::out_of_range("ClassMask: class id out of range");
    m.active[static_cast<std::size_t>(c)] = 1;
  }
  return m;
}

int ClassMask::count() const {
  return static_cast<int>(std::count(active.begin(), active.end(), std::uint8_t{1}));
}

void Hyperparams::validate() const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (epsilon < 0.0) throw std::invalid_argument("epsilon must be >= 0");
  if (local_iters < 0) throw std::invalid_argument("local_iters must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

Classifier::Classifier(int num_classes, int feature_dim)
    : num_classes_(num_classes),
      feature_dim_(feature_dim),
      weights_(static_cast<std::size_t>(num_classes) * feature_dim, 0.0),
      bias_(static_cast<std::size_t>(num_classes), 0.0) {
  if (num_classes < 1 || feature_dim < 1) {
    throw std::invalid_argument("Classifier: num_classes and feature_dim must be positive");
  }
}

FlatParams Classifier::flatten() const {
  FlatParams p;
  p.values.reserve(param_count());
  p.values.insert(p.values.end(), weights_.begin(), weights_.end());
  p.values.insert(p.values.end(), bias_.begin(), bias_.end());
  return p;
}

Classifier Classifier::unflatten(const FlatParams& p, int num_classes, int feature_dim) {
  Classifier clf(num_classes, feature_dim);
  if (p.dim() != clf.param_count()) throw DimensionMismatch(p.dim(), clf.param_count());
  std::copy_n(p.values.begin(), clf.weights_.size(), clf.weights_.begin());
  std::copy(p.values.begin() + static_cast<std::ptrdiff_t>(clf.weights_.size()), p.values.end(),
            clf.bias_.begin());
  return clf;
}

namespace {

void check_input(const Classifier& clf, std::size_t dim) {
  if (dim != static_cast<std::size_t>(clf.feature_dim())) {
    throw DimensionMismatch(dim, static_cast<std::size_t>(clf.feature_dim()));
  }
}

void check_mask(const Classifier& clf, const ClassMask& mask) {
  if (mask.size() != static_cast<std::size_t>(clf.num_classes())) {
    throw DimensionMismatch(mask.size(), static_cast<std::size_t>(clf.num_classes()));
  }
  if (mask.count() == 0) throw std::invalid_argument("ClassMask: no active classes");
}

// Logits for active classes only; inactive entries are left untouched.
void logits_into(const Classifier& clf, std::span<const double> x, const ClassMask& mask,
                 std::span<double> out) {
  const int d = clf.feature_dim();
  const auto w = clf.weights();
  const auto b = clf.bias();
  for (int c = 0; c < clf.num_classes(); ++c) {
    if (!mask[static_cast<std::size_t>(c)]) continue;
    const double* row = w.data() + static_cast<std::size_t>(c) * d;
    double acc = b[static_cast<std::size_t>(c)];
    for (int j = 0; j < d; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(c)] = acc;
  }
}

// Writes tempered probabilities for active classes and returns log of the
// partition function of (logits / F), so that log p_c = o_c/F - logz.
double softmax_into(std::span<const double> logits, double temperature, const ClassMask& mask,
                    std::span<double> probs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (mask[c]) mx = std::max(mx, logits[c] / temperature);
  }
  double z = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (!mask[c]) {
      probs[c] = 0.0;
      continue;
    }
    probs[c] = std::exp(logits[c] / temperature - mx);
    z += probs[c];
  }
  for (std::size_t c = 0; c < logits.size(); ++c) probs[c] /= z;
  return mx + std::log(z);
}

struct Workspace {
  std::vector<double> logits, probs, soft_student, teacher_logits, soft_teacher, dlogits;
  explicit Workspace(std::size_t m)
      : logits(m), probs(m), soft_student(m), teacher_logits(m), soft_teacher(m), dlogits(m) {}
};

// Sums combined loss over the selected samples and, when grad is non-empty,
// accumulates d loss / d (W, b) into it in flatten() order.
double accumulate(const Classifier& student, const Classifier* teacher, double lambda,
                  double temperature, const ClassMask& mask, const Matrix& features,
                  std::span<const int> labels, std::span<const std::size_t> indices,
                  std::span<double> grad) {
  const std::size_t m = static_cast<std::size_t>(student.num_classes());
  const std::size_t d = static_cast<std::size_t>(student.feature_dim());
  const bool distill = teacher != nullptr && lambda > 0.0;
  Workspace ws(m);
  double loss = 0.0;
  for (std::size_t idx : indices) {
    const auto x = features.row(idx);
    const auto y = static_cast<std::size_t>(labels[idx]);
    if (y >= m || !mask[y]) throw std::invalid_argument("label outside the active class set");

    logits_into(student, x, mask, ws.logits);
    const double logz = softmax_into(ws.logits, 1.0, mask, ws.probs);
    loss += logz - ws.logits[y];
    for (std::size_t c = 0; c < m; ++c) ws.dlogits[c] = ws.probs[c];
    ws.dlogits[y] -= 1.0;

    if (distill) {
      logits_into(*teacher, x, mask, ws.teacher_logits);
      softmax_into(ws.teacher_logits, temperature, mask, ws.soft_teacher);
      const double logz_s = softmax_into(ws.logits, temperature, mask, ws.soft_student);
      double kd = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        if (!mask[c]) continue;
        kd -= ws.soft_teacher[c] * (ws.logits[c] / temperature - logz_s);
        ws.dlogits[c] += lambda / temperature * (ws.soft_student[c] - ws.soft_teacher[c]);
      }
      loss += lambda * kd;
    }

    if (grad.empty()) continue;
    double* gw = grad.data();
    double* gb = grad.data() + m * d;
    for (std::size_t c = 0; c < m; ++c) {
      if (!mask[c]) continue;
      const double dl = ws.dlogits[c];
      double* row = gw + c * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += dl * x[j];
      gb[c] += dl;
    }
  }
  return loss;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

std::vector<double> forward(const Classifier& clf, std::span<const double> x) {
  check_input(clf, x.size());
  std::vector<double> out(static_cast<std::size_t>(clf.num_classes()));
  logits_into(clf, x, ClassMask::all(clf.num_classes()), out);
  return out;
}

std::vector<double> temp_softmax(std::span<const double> logits, double temperature,
                                 const ClassMask& mask) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (mask.size() != logits.size()) throw DimensionMismatch(mask.size(), logits.size());
  std::vector<double> probs(logits.size());
  softmax_into(logits, temperature, mask, probs);
  return probs;
}

std::vector<double> temp_softmax(std::span<const double> logits, double temperature) {
  return temp_softmax(logits, temperature, ClassMask::all(static_cast<int>(logits.size())));
}

double classification_loss(const Classifier& clf, const Batch& batch, const ClassMask& mask) {
  if (batch.size() == 0) throw std::invalid_argument("classification_loss: empty batch");
  check_input(clf, batch.features.cols);
  check_mask(clf, mask);
  const auto idx = all_indices(batch.size());
  return accumulate(clf, nullptr, 0.0, 1.0, mask, batch.features, batch.labels, idx, {});
}

double classification_loss(const Classifier& clf, const Batch& batch) {
  return classification_loss(clf, batch, ClassMask::all(clf.num_classes()));
}

double distillation_loss(const Classifier& student, const Classifier& teacher,
                         const Matrix& inputs, double temperature, const ClassMask& mask) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  check_input(student, inputs.cols);
  check_input(teacher, inputs.cols);
  check_mask(student, mask);
  const std::size_t m = static_cast<std::size_t>(student.num_classes());
  Workspace ws(m);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    const auto x = inputs.row(i);
    logits_into(student, x, mask, ws.logits);
    logits_into(teacher, x, mask, ws.teacher_logits);
    const double logz_s = softmax_into(ws.logits, temperature, mask, ws.soft_student);
    softmax_into(ws.teacher_logits, temperature, mask, ws.soft_teacher);
    for (std::size_t c = 0; c < m; ++c) {
      if (mask[c]) loss -= ws.soft_teacher[c] * (ws.logits[c] / temperature - logz_s);
    }
  }
  return loss;
}

double distillation_loss(const Classifier& student, const Classifier& teacher,
                         const Matrix& inputs, double temperature) {
  return distillation_loss(student, teacher, inputs, temperature,
                           ClassMask::all(student.num_classes()));
}

double distillation_entropy(const Classifier& teacher, const Matrix& inputs, double temperature,
                            const ClassMask& mask) {
  check_input(teacher, inputs.cols);
  const std::size_t m = static_cast<std::size_t>(teacher.num_classes());
  Workspace ws(m);
  double h = 0.0;
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    logits_into(teacher, inputs.row(i), mask, ws.teacher_logits);
    const double logz = softmax_into(ws.teacher_logits, temperature, mask, ws.soft_teacher);
    for (std::size_t c = 0; c < m; ++c) {
      if (mask[c]) h -= ws.soft_teacher[c] * (ws.teacher_logits[c] / temperature - logz);
    }
  }
  return h;
}

double combined_loss(const Classifier& student, const Classifier* teacher, const Batch& batch,
                     const Hyperparams& hp, const ClassMask& mask) {
  if (batch.size() == 0) throw std::invalid_argument("combined_loss: empty batch");
  hp.validate();
  check_input(student, batch.features.cols);
  check_mask(student, mask);
  const auto idx = all_indices(batch.size());
  return accumulate(student, teacher, hp.lambda, hp.temperature, mask, batch.features,
                    batch.labels, idx, {});
}

double combined_loss(const Classifier& student, const Classifier* teacher, const Batch& batch,
                     const Hyperparams& hp) {
  return combined_loss(student, teacher, batch, hp, ClassMask::all(student.num_classes()));
}

FlatParams grad_combined(const Classifier& student, const Classifier* teacher, const Batch& batch,
                         const Hyperparams& hp, const ClassMask& mask) {
  hp.validate();
  check_input(student, batch.features.cols);
  check_mask(student, mask);
  FlatParams g(student.param_count());
  const auto idx = all_indices(batch.size());
  accumulate(student, teacher, hp.lambda, hp.temperature, mask, batch.features, batch.labels, idx,
             g.values);
  return g;
}

FlatParams grad_combined(const Classifier& student, const Classifier* teacher, const Batch& batch,
                         const Hyperparams& hp) {
  return grad_combined(student, teacher, batch, hp, ClassMask::all(student.num_classes()));
}

Classifier local_train(const Classifier& clf, const Classifier* teacher, const Batch& data,
                       const Hyperparams& hp, std::uint64_t seed, const ClassMask& mask) {
  hp.validate();
  if (data.size() == 0) throw std::invalid_argument("local_train: empty dataset");
  check_input(clf, data.features.cols);
  check_mask(clf, mask);

  Classifier out = clf;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order = all_indices(data.size());
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(hp.batch_size), data.size());
  std::vector<std::size_t> picked(batch);
  std::vector<double> grad(out.param_count());
  const std::size_t nw = out.weights().size();

  for (int step = 0; step < hp.local_iters; ++step) {
    for (std::size_t i = 0; i < batch; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      picked[i] = order[cursor++];
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate(out, teacher, hp.lambda, hp.temperature, mask, data.features, data.labels, picked,
               grad);
    auto w = out.weights();
    auto b = out.bias();
    for (std::size_t i = 0; i < nw; ++i) w[i] -= hp.learning_rate * grad[i];
    for (std::size_t c = 0; c < b.size(); ++c) b[c] -= hp.learning_rate * grad[nw + c];
  }
  return out;
}

double accuracy(const Classifier& clf, const Batch& data, const ClassMask& mask) {
  if (data.size() == 0) return 0.0;
  check_input(clf, data.features.cols);
  check_mask(clf, mask);
  std::vector<double> logits(static_cast<std::size_t>(clf.num_classes()));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    logits_into(clf, data.features.row(i), mask, logits);
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.size(); ++c) {
      if (mask[c] && logits[c] > best_v) {
        best_v = logits[c];
        best = c;
      }
    }
    if (static_cast<int>(best) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace dcfcl
