#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcfcl/params.hpp"

namespace dcfcl {

/// Dense row-major matrix of reals; rows are samples.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Labelled samples. labels[i] is the class id of features.row(i).
struct Batch {
  Matrix features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Subset of the global class pool that participates in softmax normalization.
/// Logits of inactive classes are excluded (probability 0, zero gradient).
struct ClassMask {
  std::vector<std::uint8_t> active;

  static ClassMask all(int num_classes);
  static ClassMask of(int num_classes, std::span<const int> class_ids);
  bool operator[](std::size_t c) const { return active[c] != 0; }
  std::size_t size() const { return active.size(); }
  int count() const;
};

struct Hyperparams {
  double lambda = 0.2;         // distillation weight
  double temperature = 2.0;    // distillation softmax temperature
  double learning_rate = 0.05;
  int local_iters = 100;
  int batch_size = 64;
  double epsilon = 0.8;        // weight of model similarity in the overall similarity

  void validate() const;
};

/// Multinomial softmax regression: logits = W x + b.
class Classifier {
 public:
  Classifier() = default;
  Classifier(int num_classes, int feature_dim);

  int num_classes() const { return num_classes_; }
  int feature_dim() const { return feature_dim_; }
  std::size_t param_count() const { return weights_.size() + bias_.size(); }

  double& weight(int c, int j) { return weights_[static_cast<std::size_t>(c) * feature_dim_ + j]; }
  double weight(int c, int j) const { return weights_[static_cast<std::size_t>(c) * feature_dim_ + j]; }
  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias() const { return bias_; }

  /// Row-major weights followed by bias.
  FlatParams flatten() const;
  static Classifier unflatten(const FlatParams& p, int num_classes, int feature_dim);

  friend bool operator==(const Classifier&, const Classifier&) = default;

 private:
  int num_classes_ = 0;
  int feature_dim_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

std::vector<double> forward(const Classifier& clf, std::span<const double> x);

/// exp(o_i/F) / sum_j exp(o_j/F) over active classes, max-subtracted.
std::vector<double> temp_softmax(std::span<const double> logits, double temperature);
std::vector<double> temp_softmax(std::span<const double> logits, double temperature,
                                 const ClassMask& mask);

/// Cross-entropy summed over the batch, temperature 1.
double classification_loss(const Classifier& clf, const Batch& batch);
double classification_loss(const Classifier& clf, const Batch& batch, const ClassMask& mask);

/// sum_x sum_i -p_i^teacher(x) log p_i^student(x), both at the given temperature.
double distillation_loss(const Classifier& student, const Classifier& teacher,
                         const Matrix& inputs, double temperature);
double distillation_loss(const Classifier& student, const Classifier& teacher,
                         const Matrix& inputs, double temperature, const ClassMask& mask);

/// Shannon entropy of the teacher's tempered distribution, summed over inputs.
double distillation_entropy(const Classifier& teacher, const Matrix& inputs, double temperature,
                            const ClassMask& mask);

/// L_class + lambda * L_dis. A null teacher means lambda is treated as 0.
double combined_loss(const Classifier& student, const Classifier* teacher, const Batch& batch,
                     const Hyperparams& hp);
double combined_loss(const Classifier& student, const Classifier* teacher, const Batch& batch,
                     const Hyperparams& hp, const ClassMask& mask);

/// Analytic gradient of combined_loss in flatten() order.
FlatParams grad_combined(const Classifier& student, const Classifier* teacher, const Batch& batch,
                         const Hyperparams& hp);
FlatParams grad_combined(const Classifier& student, const Classifier* teacher, const Batch& batch,
                         const Hyperparams& hp, const ClassMask& mask);

/// hp.local_iters plain SGD steps on mini-batches of hp.batch_size drawn by an
/// epoch shuffler seeded with `seed`.
Classifier local_train(const Classifier& clf, const Classifier* teacher, const Batch& data,
                       const Hyperparams& hp, std::uint64_t seed, const ClassMask& mask);

/// Fraction of samples whose masked argmax equals the label.
double accuracy(const Classifier& clf, const Batch& data, const ClassMask& mask);

}  // namespace dcfcl
