#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcfcl/model.hpp"

namespace dcfcl {

// ---------------------------------------------------------------------------
// IDX ingestion

enum class IdxErrorKind { kIo, kBadMagic, kTruncated, kCountMismatch };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxDataset {
  Batch data;  // features scaled to [0,1], one flattened image per row
  int image_rows = 0;
  int image_cols = 0;
};

IdxDataset load_idx(const std::string& images_path, const std::string& labels_path);

// ---------------------------------------------------------------------------
// Class pools

/// M class-conditional sample generators. Either isotropic Gaussian blobs
/// (means on the unit sphere) or an empirical pool of real examples.
class ClassPool {
 public:
  static ClassPool gaussian(int num_classes, int feature_dim, double blob_spread,
                            std::uint64_t seed);
  static ClassPool empirical(const Batch& examples);

  int num_classes() const { return num_classes_; }
  int feature_dim() const { return feature_dim_; }
  bool is_gaussian() const { return examples_.empty(); }
  const Matrix& means() const { return means_; }
  double spread() const { return spread_; }

  /// n draws of class `cls`, one per row.
  Matrix sample(int cls, int n, std::mt19937_64& rng) const;

 private:
  int num_classes_ = 0;
  int feature_dim_ = 0;
  double spread_ = 0.0;
  Matrix means_;
  std::vector<Matrix> examples_;  // empirical pool, indexed by class
};

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioMode { kLtp, kShuffle };

/// How groups after the first differ from group 0.
///   kFeatures: inputs pass through a fixed signed coordinate permutation.
///   kLabels:   within every task the labels are rotated (swapped for two
///              classes), so equal inputs carry different labels.
enum class GroupShift { kFeatures, kLabels };

struct TaskSpec {
  std::vector<int> class_ids;  // sorted
  int samples_per_class = 0;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct TaskData {
  TaskSpec spec;
  Batch train;
  Batch val;
  Batch test;
};

struct ClientTimeline {
  int client_id = 0;
  int group = 0;
  std::vector<TaskData> tasks;

  /// Union of class ids of tasks [0, through].
  std::vector<int> seen_classes(int through) const;
};

struct ScenarioConfig {
  ScenarioMode mode = ScenarioMode::kLtp;
  int num_clients = 8;         // K
  int num_tasks = 6;           // T
  int classes_per_task = 2;    // C
  int num_classes = 26;        // M (pool size)
  int feature_dim = 32;
  int samples_per_class = 200;
  double blob_spread = 0.3;
  double heterogeneity = 1.0;  // scales the per-client affine feature shift
  int groups = 1;              // contiguous client blocks sharing a domain
  GroupShift group_shift = GroupShift::kLabels;
  /// Shuffle mode: permute each client's task order (false: every client
  /// meets the same task at the same time).
  bool permute_task_order = true;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
  std::optional<std::string> idx_images;  // empirical pool instead of blobs
  std::optional<std::string> idx_labels;

  void validate() const;
};

struct Scenario {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<ClientTimeline> clients;
};

/// LTP: each client independently samples T disjoint C-class tasks.
/// Shuffle: one list of T disjoint C-class tasks is drawn and every client
/// receives a seeded permutation of it (or the list as drawn when
/// permute_task_order is off).
/// Clients in group g > 0 are shifted according to cfg.group_shift.
Scenario build_scenario(const ScenarioConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg, const ClassPool& pool);

/// Group of client k for K clients split into `groups` contiguous blocks.
int group_of(int client, int num_clients, int groups);

}  // namespace dcfcl
