#pragma once

// Label datasets in CSV (`object_id,worker_id,label`, optional `object_id,truth`) and
// worker pools in JSON. External ids are arbitrary strings without commas; dense
// indices follow first appearance.

#include <adasprt/core/errors.hpp>
#include <adasprt/core/model.hpp>
#include <adasprt/estimation/label_matrix.hpp>

#include <json.hpp>

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adasprt::io {

struct LabelDataset {
  LabelMatrix labels;
  std::vector<std::string> object_ids;
  std::vector<std::string> worker_ids;
  /// Ground truth per object, when a truth file was given.
  std::vector<std::optional<Label>> truth;

  bool has_truth() const {
    for (const auto& t : truth) {
      if (t) return true;
    }
    return false;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

inline Label parse_label(std::string_view s, const std::string& at) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw DataError(at + "label must be 0 or 1, got '" + std::string(s) + "'");
}

class IdIndex {
 public:
  std::size_t intern(std::string_view id) {
    auto [it, inserted] = index_.try_emplace(std::string(id), ids_.size());
    if (inserted) ids_.emplace_back(id);
    return it->second;
  }
  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::vector<std::string>& ids() { return ids_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> ids_;
};

}  // namespace detail

/// Parses a label CSV and an optional truth CSV. `source` names appear in error messages.
inline LabelDataset parse_dataset(std::istream& labels, std::istream* truth = nullptr,
                                  const std::string& source = "labels", const std::string& truth_source = "truth") {
  struct Row {
    std::size_t object, worker, line;
    Label label;
  };
  detail::IdIndex objects, workers;
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(labels, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto fields = detail::split_csv(body);
    if (!header) {
      if (fields.size() != 3 || fields[0] != "object_id" || fields[1] != "worker_id" || fields[2] != "label") {
        throw DataError(detail::where(source, lineno) + "expected header 'object_id,worker_id,label'");
      }
      header = true;
      continue;
    }
    const auto at = detail::where(source, lineno);
    if (fields.size() != 3) throw DataError(at + "expected 3 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty()) throw DataError(at + "empty object or worker id");
    const Label x = detail::parse_label(fields[2], at);
    rows.push_back({objects.intern(fields[0]), workers.intern(fields[1]), lineno, x});
  }
  if (!header) throw DataError(source + ": empty file, expected header 'object_id,worker_id,label'");

  LabelDataset ds;
  ds.labels = LabelMatrix(objects.ids().size(), workers.ids().size());
  std::unordered_map<std::size_t, std::size_t> first_line;  // (object, worker) -> line
  const std::size_t nw = workers.ids().size();
  for (const auto& r : rows) {
    auto [it, fresh] = first_line.try_emplace(r.object * nw + r.worker, r.line);
    if (!fresh) {
      throw DataError(detail::where(source, r.line) + "duplicate label for object '" + objects.ids()[r.object] +
                      "' and worker '" + workers.ids()[r.worker] + "' (first given on line " +
                      std::to_string(it->second) + ")");
    }
    ds.labels.add(r.object, r.worker, r.label);
  }
  ds.truth.assign(objects.ids().size(), std::nullopt);

  if (truth) {
    lineno = 0;
    header = false;
    while (std::getline(*truth, line)) {
      ++lineno;
      const auto body = detail::trim(line);
      if (body.empty()) continue;
      const auto fields = detail::split_csv(body);
      if (!header) {
        if (fields.size() != 2 || fields[0] != "object_id" || fields[1] != "truth") {
          throw DataError(detail::where(truth_source, lineno) + "expected header 'object_id,truth'");
        }
        header = true;
        continue;
      }
      const auto at = detail::where(truth_source, lineno);
      if (fields.size() != 2) throw DataError(at + "expected 2 fields, got " + std::to_string(fields.size()));
      const auto j = objects.find(fields[0]);
      if (!j) throw DataError(at + "unknown object '" + std::string(fields[0]) + "'");
      if (ds.truth[*j]) throw DataError(at + "duplicate truth for object '" + std::string(fields[0]) + "'");
      ds.truth[*j] = detail::parse_label(fields[1], at);
    }
    if (!header) throw DataError(truth_source + ": empty file, expected header 'object_id,truth'");
  }
  ds.object_ids = std::move(objects.ids());
  ds.worker_ids = std::move(workers.ids());
  return ds;
}

inline LabelDataset load_dataset(const std::string& path, const std::optional<std::string>& truth_path = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  if (!truth_path) return parse_dataset(in, nullptr, path);
  std::ifstream tin(*truth_path);
  if (!tin) throw DataError("cannot open " + *truth_path);
  return parse_dataset(in, &tin, path, *truth_path);
}

inline void save_dataset(const LabelDataset& ds, const std::string& path,
                         const std::optional<std::string>& truth_path = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "object_id,worker_id,label\n";
  for (std::size_t j = 0; j < ds.labels.num_objects(); ++j) {
    for (const auto& e : ds.labels.object_labels(j)) {
      out << ds.object_ids[j] << ',' << ds.worker_ids[e.worker] << ',' << e.label << '\n';
    }
  }
  if (truth_path) {
    std::ofstream t(*truth_path);
    if (!t) throw DataError("cannot write " + *truth_path);
    t << "object_id,truth\n";
    for (std::size_t j = 0; j < ds.truth.size(); ++j) {
      if (ds.truth[j]) t << ds.object_ids[j] << ',' << *ds.truth[j] << '\n';
    }
  }
}

/// Pool file: {"workers": [{"tau00": .., "tau11": ..}, ...]}.
inline std::vector<WorkerParams> pool_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("workers") || !j.at("workers").is_array()) {
    throw DataError("pool file: expected an object with a 'workers' array");
  }
  std::vector<WorkerParams> pool;
  std::size_t i = 0;
  for (const auto& w : j.at("workers")) {
    try {
      pool.emplace_back(w.at("tau00").get<double>(), w.at("tau11").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError("pool file: worker " + std::to_string(i) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw DataError("pool file: worker " + std::to_string(i) + ": " + e.what());
    }
    ++i;
  }
  if (pool.empty()) throw DataError("pool file: no workers");
  return pool;
}

inline nlohmann::json pool_to_json(std::span<const WorkerParams> pool) {
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : pool) ws.push_back({{"tau00", w.tau00()}, {"tau11", w.tau11()}});
  return {{"workers", ws}};
}

inline std::vector<WorkerParams> load_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return pool_from_json(j);
}

inline void save_pool(std::span<const WorkerParams> pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << pool_to_json(pool).dump(2) << '\n';
}

}  // namespace adasprt::io
