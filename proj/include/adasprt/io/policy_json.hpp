#pragma once

// PolicyTable <-> JSON. Doubles are written in shortest round-trip form, so a dump
// followed by a load reproduces every stored value bit for bit.

#include <adasprt/core/errors.hpp>
#include <adasprt/dp/policy_table.hpp>

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace adasprt::io {

inline constexpr int kPolicyFormatVersion = 1;

inline nlohmann::json policy_to_json(const PolicyTable& t) {
  using nlohmann::json;
  json j;
  j["format"] = "adasprt-policy";
  j["version"] = kPolicyFormatVersion;
  j["T"] = t.horizon();
  j["c"] = t.cost().c();
  j["pi1"] = t.prior().pi1();
  j["w0"] = t.prior().w0();
  j["w1"] = t.prior().w1();
  json workers = json::array();
  for (const auto& w : t.workers()) workers.push_back({{"tau00", w.tau00()}, {"tau11", w.tau11()}});
  j["workers"] = std::move(workers);
  const auto& g = t.grid();
  j["grid"] = {{"num_points", g.size()},  {"center", g.center()}, {"spacing", g.spacing()},
               {"center_index", g.center_index()}, {"l_min", g.l_min()}, {"l_max", g.l_max()}};
  json risk = json::array(), select = json::array(), A = json::array(), B = json::array(), cont = json::array();
  for (std::size_t n = 0; n <= t.horizon(); ++n) {
    risk.push_back(std::vector<double>(t.risk(n).begin(), t.risk(n).end()));
    select.push_back(std::vector<std::int32_t>(t.select(n).begin(), t.select(n).end()));
    A.push_back(t.upper(n));
    B.push_back(t.lower(n));
    const auto& ci = t.continuation(n);
    cont.push_back(ci.empty() ? json(nullptr) : json::array({*ci.first, *ci.last}));
  }
  j["G"] = std::move(risk);
  j["select"] = std::move(select);
  j["A"] = std::move(A);
  j["B"] = std::move(B);
  j["continuation"] = std::move(cont);
  json lattice = json::array();
  for (const auto& lv : t.lattice()) {
    lattice.push_back({{"l", lv.l}, {"G", lv.risk}, {"select", lv.select}, {"proceed", lv.proceed}});
  }
  j["lattice"] = std::move(lattice);
  return j;
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("policy file: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("policy file: bad field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline PolicyTable policy_from_json(const nlohmann::json& j) {
  using detail::field;
  if (!j.is_object() || field<std::string>(j, "format") != "adasprt-policy") {
    throw DataError("policy file: not an adasprt policy");
  }
  if (field<int>(j, "version") != kPolicyFormatVersion) throw DataError("policy file: unsupported version");
  const auto T = field<std::size_t>(j, "T");
  std::vector<WorkerParams> workers;
  for (const auto& w : field<nlohmann::json>(j, "workers")) {
    workers.emplace_back(field<double>(w, "tau00"), field<double>(w, "tau11"));
  }
  const auto g = field<nlohmann::json>(j, "grid");
  const Grid grid(field<double>(g, "center"), field<double>(g, "spacing"), field<std::size_t>(g, "num_points"),
                  field<std::size_t>(g, "center_index"));
  PolicyTable t(T, CostConfig(field<double>(j, "c")),
                Prior(field<double>(j, "pi1"), field<double>(j, "w0"), field<double>(j, "w1")), std::move(workers),
                grid);
  const auto risk = field<std::vector<std::vector<double>>>(j, "G");
  const auto select = field<std::vector<std::vector<std::int32_t>>>(j, "select");
  const auto A = field<std::vector<double>>(j, "A");
  const auto B = field<std::vector<double>>(j, "B");
  const auto cont = field<nlohmann::json>(j, "continuation");
  if (risk.size() != T + 1 || select.size() != T + 1 || A.size() != T + 1 || B.size() != T + 1 ||
      cont.size() != T + 1) {
    throw DataError("policy file: per-step arrays must have T+1 entries");
  }
  for (std::size_t n = 0; n <= T; ++n) {
    if (risk[n].size() != grid.size()) throw DataError("policy file: G row size differs from the grid");
    if (n > 0 && select[n].size() != grid.size()) throw DataError("policy file: select row size differs from the grid");
    for (auto s : select[n]) {
      if (s < 0 || static_cast<std::size_t>(s) >= t.workers().size()) throw DataError("policy file: bad worker index");
    }
    t.mutable_risk(n) = risk[n];
    t.mutable_select(n) = select[n];
    t.set_boundaries(n, A[n], B[n]);
    ContinuationInterval ci;
    if (!cont[n].is_null()) {
      ci.first = cont[n].at(0).get<std::size_t>();
      ci.last = cont[n].at(1).get<std::size_t>();
    }
    t.set_continuation(n, ci);
  }
  auto& lattice = t.mutable_lattice();
  for (const auto& lv : field<nlohmann::json>(j, "lattice")) {
    LatticeLevel level;
    level.l = field<std::vector<double>>(lv, "l");
    level.risk = field<std::vector<double>>(lv, "G");
    level.select = field<std::vector<std::int32_t>>(lv, "select");
    level.proceed = field<std::vector<std::uint8_t>>(lv, "proceed");
    const auto m = level.l.size();
    if (level.risk.size() != m || level.select.size() != m || level.proceed.size() != m) {
      throw DataError("policy file: lattice level arrays differ in length");
    }
    lattice.push_back(std::move(level));
  }
  if (lattice.size() > T + 1) throw DataError("policy file: lattice deeper than T");
  return t;
}

inline void save_policy(const PolicyTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << policy_to_json(t).dump() << '\n';
}

inline PolicyTable load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    return policy_from_json(j);
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// CSV rows n,A,B for n = 0..T.
inline void save_boundaries_csv(const PolicyTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  out << "n,A,B\n";
  for (std::size_t n = 0; n <= t.horizon(); ++n) out << n << ',' << t.upper(n) << ',' << t.lower(n) << '\n';
}

}  // namespace adasprt::io
