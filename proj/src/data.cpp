#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dcfcl/data.hpp"
#include "dcfcl/rng.hpp"

namespace dcfcl {

ClassPool ClassPool::gaussian(int num_classes, int feature_dim, double blob_spread,
                              std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("class pool needs M >= 2");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
  if (blob_spread < 0.0) throw std::invalid_argument("blob_spread must be >= 0");
  ClassPool pool;
  pool.num_classes_ = num_classes;
  pool.feature_dim_ = feature_dim;
  pool.spread_ = blob_spread;
  pool.means_ = Matrix(static_cast<std::size_t>(num_classes), static_cast<std::size_t>(feature_dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c = 0; c < num_classes; ++c) {
    auto mu = pool.means_.row(static_cast<std::size_t>(c));
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& v : mu) {
        v = gauss(rng);
        n2 += v * v;
      }
    } while (n2 < 1e-24);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : mu) v *= inv;
  }
  return pool;
}

ClassPool ClassPool::empirical(const Batch& examples) {
  if (examples.size() == 0) throw std::invalid_argument("empirical pool: no examples");
  ClassPool pool;
  const int max_label = *std::max_element(examples.labels.begin(), examples.labels.end());
  pool.num_classes_ = max_label + 1;
  pool.feature_dim_ = static_cast<int>(examples.features.cols);
  std::vector<std::size_t> per_class(static_cast<std::size_t>(pool.num_classes_), 0);
  for (int y : examples.labels) {
    if (y < 0) throw std::invalid_argument("empirical pool: negative label");
    ++per_class[static_cast<std::size_t>(y)];
  }
  pool.examples_.reserve(per_class.size());
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    pool.examples_.emplace_back(per_class[c], examples.features.cols);
  }
  std::vector<std::size_t> fill(per_class.size(), 0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto c = static_cast<std::size_t>(examples.labels[i]);
    const auto src = examples.features.row(i);
    std::copy(src.begin(), src.end(), pool.examples_[c].row(fill[c]++).begin());
  }
  return pool;
}

Matrix ClassPool::sample(int cls, int n, std::mt19937_64& rng) const {
  if (cls < 0 || cls >= num_classes_) throw std::out_of_range("ClassPool::sample: bad class");
  Matrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(feature_dim_));
  if (is_gaussian()) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto mu = means_.row(static_cast<std::size_t>(cls));
    for (int i = 0; i < n; ++i) {
      auto row = out.row(static_cast<std::size_t>(i));
      for (int j = 0; j < feature_dim_; ++j) {
        row[static_cast<std::size_t>(j)] = mu[static_cast<std::size_t>(j)] + spread_ * gauss(rng);
      }
    }
    return out;
  }
  const Matrix& ex = examples_[static_cast<std::size_t>(cls)];
  if (ex.rows < static_cast<std::size_t>(n)) {
    throw std::invalid_argument("empirical pool: class " + std::to_string(cls) + " has " +
                                std::to_string(ex.rows) + " examples, need " + std::to_string(n));
  }
  std::vector<std::size_t> order(ex.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < n; ++i) {
    const auto src = ex.row(order[static_cast<std::size_t>(i)]);
    std::copy(src.begin(), src.end(), out.row(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

std::vector<int> ClientTimeline::seen_classes(int through) const {
  std::vector<int> out;
  for (int t = 0; t <= through && t < static_cast<int>(tasks.size()); ++t) {
    const auto& ids = tasks[static_cast<std::size_t>(t)].spec.class_ids;
    out.insert(out.end(), ids.begin(), ids.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ScenarioConfig::validate() const {
  if (num_clients < 1 || num_tasks < 1 || classes_per_task < 1 || num_classes < 2 ||
      feature_dim < 1 || samples_per_class < 1) {
    throw std::invalid_argument("scenario: K, T, C, feature_dim and samples_per_class must be "
                                "positive and M >= 2");
  }
  if (classes_per_task * num_tasks > num_classes) {
    throw std::invalid_argument("scenario: C*T = " + std::to_string(classes_per_task * num_tasks) +
                                " exceeds class pool size M = " + std::to_string(num_classes));
  }
  if (groups < 1 || groups > num_clients) {
    throw std::invalid_argument("scenario: groups must be in [1, K]");
  }
  if (blob_spread < 0.0 || heterogeneity < 0.0) {
    throw std::invalid_argument("scenario: blob_spread and heterogeneity must be >= 0");
  }
  if (train_fraction <= 0.0 || val_fraction < 0.0 || test_fraction <= 0.0 ||
      std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("scenario: split fractions must be positive and sum to 1");
  }
  if (idx_images.has_value() != idx_labels.has_value()) {
    throw std::invalid_argument("scenario: idx_images and idx_labels must be given together");
  }
}

int group_of(int client, int num_clients, int groups) {
  return static_cast<int>(static_cast<long long>(client) * groups / num_clients);
}

namespace {

std::vector<TaskSpec> draw_disjoint_tasks(int num_classes, int tasks, int per_task,
                                          int samples_per_class, std::mt19937_64& rng) {
  std::vector<int> ids(static_cast<std::size_t>(num_classes));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<TaskSpec> out(static_cast<std::size_t>(tasks));
  for (int t = 0; t < tasks; ++t) {
    auto& spec = out[static_cast<std::size_t>(t)];
    spec.samples_per_class = samples_per_class;
    spec.class_ids.assign(ids.begin() + t * per_task, ids.begin() + (t + 1) * per_task);
    std::sort(spec.class_ids.begin(), spec.class_ids.end());
  }
  return out;
}

struct FeatureMap {
  std::vector<std::size_t> perm;  // output j reads input perm[j]
  std::vector<double> sign;
  double scale = 1.0;
  std::vector<double> shift;

  void apply(std::span<double> x, std::vector<double>& scratch) const {
    scratch.assign(x.begin(), x.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = scale * sign[j] * scratch[perm[j]] + shift[j];
    }
  }
};

void append_rows(Batch& dst, const Matrix& src, std::size_t begin, std::size_t end, int label) {
  const std::size_t cols = src.cols;
  if (dst.features.cols == 0) dst.features.cols = cols;
  for (std::size_t i = begin; i < end; ++i) {
    const auto r = src.row(i);
    dst.features.data.insert(dst.features.data.end(), r.begin(), r.end());
    dst.labels.push_back(label);
  }
  dst.features.rows = dst.labels.size();
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& cfg, const ClassPool& pool) {
  cfg.validate();
  const int K = cfg.num_clients;
  const int T = cfg.num_tasks;
  const int C = cfg.classes_per_task;
  const int M = pool.num_classes();
  const int d = pool.feature_dim();
  if (C * T > M) throw std::invalid_argument("scenario: C*T exceeds class pool size");

  // task schedules
  std::vector<std::vector<TaskSpec>> schedule(static_cast<std::size_t>(K));
  if (cfg.mode == ScenarioMode::kLtp) {
    for (int k = 0; k < K; ++k) {
      std::mt19937_64 rng(derive_seed(cfg.seed, SeedStream::kTaskDraw, static_cast<std::uint64_t>(k)));
      schedule[static_cast<std::size_t>(k)] = draw_disjoint_tasks(M, T, C, cfg.samples_per_class, rng);
    }
  } else {
    std::mt19937_64 list_rng(derive_seed(cfg.seed, SeedStream::kTaskDraw, 1u << 20));
    const auto shared = draw_disjoint_tasks(M, T, C, cfg.samples_per_class, list_rng);
    for (int k = 0; k < K; ++k) {
      auto tasks = shared;
      if (cfg.permute_task_order) {
        std::mt19937_64 rng(derive_seed(cfg.seed, SeedStream::kTaskDraw, static_cast<std::uint64_t>(k), 1));
        std::shuffle(tasks.begin(), tasks.end(), rng);
      }
      schedule[static_cast<std::size_t>(k)] = std::move(tasks);
    }
  }

  // group feature domains: identity for group 0, signed permutation otherwise
  std::vector<FeatureMap> domains(static_cast<std::size_t>(cfg.groups));
  for (int g = 0; g < cfg.groups; ++g) {
    auto& dom = domains[static_cast<std::size_t>(g)];
    dom.perm.resize(static_cast<std::size_t>(d));
    std::iota(dom.perm.begin(), dom.perm.end(), std::size_t{0});
    dom.sign.assign(static_cast<std::size_t>(d), 1.0);
    dom.shift.assign(static_cast<std::size_t>(d), 0.0);
    if (g == 0 || cfg.group_shift != GroupShift::kFeatures) continue;
    std::mt19937_64 rng(derive_seed(cfg.seed, SeedStream::kGroupDomain, static_cast<std::uint64_t>(g)));
    std::shuffle(dom.perm.begin(), dom.perm.end(), rng);
    std::bernoulli_distribution flip(0.5);
    for (auto& s : dom.sign) s = flip(rng) ? -1.0 : 1.0;
  }

  Scenario sc;
  sc.num_classes = M;
  sc.feature_dim = d;
  sc.clients.resize(static_cast<std::size_t>(K));
  std::vector<double> scratch;
  for (int k = 0; k < K; ++k) {
    auto& client = sc.clients[static_cast<std::size_t>(k)];
    client.client_id = k;
    client.group = group_of(k, K, cfg.groups);

    FeatureMap affine;
    affine.perm.resize(static_cast<std::size_t>(d));
    std::iota(affine.perm.begin(), affine.perm.end(), std::size_t{0});
    affine.sign.assign(static_cast<std::size_t>(d), 1.0);
    {
      std::mt19937_64 rng(derive_seed(cfg.seed, SeedStream::kClientShift, static_cast<std::uint64_t>(k)));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      affine.scale = 1.0 + 0.2 * cfg.heterogeneity * unit(rng);
      affine.shift.resize(static_cast<std::size_t>(d));
      for (auto& s : affine.shift) s = 0.1 * cfg.heterogeneity * unit(rng);
    }
    const FeatureMap& domain = domains[static_cast<std::size_t>(client.group)];
    const bool relabel = client.group > 0 && cfg.group_shift == GroupShift::kLabels;

    for (int t = 0; t < T; ++t) {
      TaskData task;
      task.spec = schedule[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
      const int n = cfg.samples_per_class;
      const auto n_train = static_cast<std::size_t>(std::llround(n * cfg.train_fraction));
      const auto n_val = static_cast<std::size_t>(std::llround(n * cfg.val_fraction));
      const auto& ids = task.spec.class_ids;
      for (std::size_t ci = 0; ci < ids.size(); ++ci) {
        const int c = ids[ci];
        // relabelled groups draw each class from the next class's blob in the task
        const int blob = relabel ? ids[(ci + 1) % ids.size()] : c;
        std::mt19937_64 rng(derive_seed(cfg.seed, SeedStream::kClientData, static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(c)));
        Matrix xs = pool.sample(blob, n, rng);
        for (std::size_t i = 0; i < xs.rows; ++i) {
          domain.apply(xs.row(i), scratch);
          affine.apply(xs.row(i), scratch);
        }
        const std::size_t a = std::min(n_train, xs.rows);
        const std::size_t b = std::min(a + n_val, xs.rows);
        append_rows(task.train, xs, 0, a, c);
        append_rows(task.val, xs, a, b, c);
        append_rows(task.test, xs, b, xs.rows, c);
      }
      client.tasks.push_back(std::move(task));
    }
  }
  return sc;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.idx_images) {
    const auto ds = load_idx(*cfg.idx_images, *cfg.idx_labels);
    return build_scenario(cfg, ClassPool::empirical(ds.data));
  }
  return build_scenario(cfg, ClassPool::gaussian(cfg.num_classes, cfg.feature_dim, cfg.blob_spread,
                                                 derive_seed(cfg.seed, SeedStream::kClassPool)));
}

}  // namespace dcfcl
