#pragma once

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adasprt {

struct WorkerLabel {
  std::size_t worker;
  Label label;
};

struct ObjectLabel {
  std::size_t object;
  Label label;
};

/// Sparse object x worker matrix of binary labels, at most one label per pair unless
/// built with `allow_repeats` (simulated workers that can be asked the same object again).
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t num_objects, std::size_t num_workers, bool allow_repeats = false)
      : by_object_(num_objects), by_worker_(num_workers), allow_repeats_(allow_repeats) {}

  bool allow_repeats() const { return allow_repeats_; }

  std::size_t num_objects() const { return by_object_.size(); }
  std::size_t num_workers() const { return by_worker_.size(); }
  std::size_t size() const { return entries_; }

  /// Grows the object dimension to at least `n`.
  void reserve_objects(std::size_t n) {
    if (n > by_object_.size()) by_object_.resize(n);
  }

  void add(std::size_t object, std::size_t worker, Label label) {
    if (object >= by_object_.size() || worker >= by_worker_.size()) {
      throw DataError("label index out of range: object " + std::to_string(object) + ", worker " +
                      std::to_string(worker));
    }
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1; got " + std::to_string(label));
    if (!allow_repeats_ && has(object, worker)) {
      throw DataError("duplicate label for object " + std::to_string(object) + " and worker " +
                      std::to_string(worker));
    }
    by_object_[object].push_back({worker, label});
    by_worker_[worker].push_back({object, label});
    ++entries_;
  }

  bool has(std::size_t object, std::size_t worker) const {
    const auto& row = by_object_[object];
    return std::any_of(row.begin(), row.end(), [&](const WorkerLabel& e) { return e.worker == worker; });
  }

  std::span<const WorkerLabel> object_labels(std::size_t object) const { return by_object_[object]; }
  std::span<const ObjectLabel> worker_labels(std::size_t worker) const { return by_worker_[worker]; }

 private:
  std::vector<std::vector<WorkerLabel>> by_object_;
  std::vector<std::vector<ObjectLabel>> by_worker_;
  std::size_t entries_ = 0;
  bool allow_repeats_ = false;
};

}  // namespace adasprt
