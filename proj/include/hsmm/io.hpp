// Copyright 2026 The hsmm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Model JSON and CSV serialization.
//
// Model document:
//   {"states": N,
//    "p0": [...],
//    "jump_kernel": [[...], ...],     // row j, column i holds p_ji
//    "sojourns": [{"pmf": [...]}, ...],
//    "observation": {"c": [...], "d": [...]}}   // optional
// A sojourn entry may instead be {"geometric": rho, "support": L} or
// {"deterministic": L}.

#pragma once

#include "hsmm/embedding.hpp"
#include "hsmm/estimate.hpp"
#include "hsmm/model.hpp"
#include "hsmm/simulate.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace hsmm {

using json = nlohmann::json;

struct ModelFile {
  SemiMarkovModel model;
  std::optional<ObservationModel> observation;
};

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& field) {
  if (!obj.is_object() || !obj.contains(key)) throw ValidationError(field, "missing");
  return obj.at(key);
}

inline std::vector<double> number_array(const json& j, const std::string& field) {
  if (!j.is_array()) throw ValidationError(field, "must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) {
      throw ValidationError(field + "[" + std::to_string(k) + "]", "must be a number");
    }
    out.push_back(j[k].get<double>());
  }
  return out;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline int positive_int(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    throw ValidationError(field, "must be a positive integer");
  }
  return j.get<int>();
}

inline SojournLaw parse_sojourn(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "must be an object");
  if (j.contains("pmf")) return SojournLaw::from_pmf(number_array(j["pmf"], field + ".pmf"), field + ".pmf");
  if (j.contains("geometric")) {
    if (!j["geometric"].is_number()) throw ValidationError(field + ".geometric", "must be a number");
    return SojournLaw::geometric(j["geometric"].get<double>(),
                                 positive_int(require(j, "support", field + ".support"), field + ".support"),
                                 field + ".geometric");
  }
  if (j.contains("deterministic")) {
    return SojournLaw::deterministic(positive_int(j["deterministic"], field + ".deterministic"));
  }
  throw ValidationError(field, "expected one of \"pmf\", \"geometric\", \"deterministic\"");
}

}  // namespace detail

inline ModelFile parse_model(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError("model", "document must be a JSON object");
  const int n = positive_int(require(doc, "states", "states"), "states");

  const auto p0 = number_array(require(doc, "p0", "p0"), "p0");
  if (static_cast<int>(p0.size()) != n) throw ValidationError("p0", "expected " + std::to_string(n) + " entries");

  const json& rows = require(doc, "jump_kernel", "jump_kernel");
  if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
    throw ValidationError("jump_kernel", "expected " + std::to_string(n) + " rows");
  }
  Matrix p(n, n);
  for (int j = 0; j < n; ++j) {
    const std::string field = "jump_kernel[" + std::to_string(j) + "]";
    const auto row = number_array(rows[j], field);
    if (static_cast<int>(row.size()) != n) {
      throw ValidationError(field, "expected " + std::to_string(n) + " columns");
    }
    for (int i = 0; i < n; ++i) p(j, i) = row[i];
  }

  const json& laws = require(doc, "sojourns", "sojourns");
  if (!laws.is_array() || static_cast<int>(laws.size()) != n) {
    throw ValidationError("sojourns", "expected " + std::to_string(n) + " entries");
  }
  std::vector<SojournLaw> sojourns;
  for (int i = 0; i < n; ++i) {
    sojourns.push_back(parse_sojourn(laws[i], "sojourns[" + std::to_string(i) + "]"));
  }

  ModelFile out{SemiMarkovModel(JumpKernel(std::move(p)), std::move(sojourns), to_vector(p0)),
                std::nullopt};
  if (doc.contains("observation")) {
    const json& o = doc["observation"];
    const auto c = number_array(require(o, "c", "observation.c"), "observation.c");
    const auto d = number_array(require(o, "d", "observation.d"), "observation.d");
    if (static_cast<int>(c.size()) != n) throw ValidationError("observation.c", "expected " + std::to_string(n) + " entries");
    if (static_cast<int>(d.size()) != n) throw ValidationError("observation.d", "expected " + std::to_string(n) + " entries");
    out.observation.emplace(to_vector(c), to_vector(d));
  }
  return out;
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("model", std::string("malformed JSON: ") + e.what());
  }
  return parse_model(doc);
}

/// Reads y from CSV. Uses the column headed `y` when present; a single
/// unlabeled numeric column is also accepted.
inline std::vector<double> read_observations(std::istream& in, const std::string& name = "observations") {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  auto parse = [&](const std::string& cell, std::size_t line) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(name + " line " + std::to_string(line), "not a number: '" + cell + "'");
    }
  };

  std::vector<double> y;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (!column) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] == "y") column = c;
      }
      if (column) continue;
      if (cells.size() != 1) throw ValidationError(name, "no 'y' column in header");
      column = 0;
      try {
        (void)parse(cells[0], line_no);
      } catch (const ValidationError&) {
        continue;  // single-column header
      }
    }
    if (*column >= cells.size()) {
      throw ValidationError(name + " line " + std::to_string(line_no), "missing y value");
    }
    y.push_back(parse(cells[*column], line_no));
  }
  if (y.empty()) throw ValidationError(name, "contains no observations");
  return y;
}

inline std::vector<double> read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("observations", "cannot open " + path);
  return read_observations(in, path);
}

inline void write_simulation_csv(std::ostream& out, const PathRecord& path) {
  out << (path.observations ? "k,state,h,y\n" : "k,state,h\n");
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    out << k << ',' << path.states[k] + 1 << ',' << path.clock[k];
    if (path.observations) out << ',' << format_double((*path.observations)[k]);
    out << '\n';
  }
}

inline void write_filter_csv(std::ostream& out, const FilterRun& run) {
  const auto n = run.posteriors.front().size();
  out << "k,hhat,map_state";
  for (Eigen::Index i = 0; i < n; ++i) out << ",post_" << i + 1;
  out << ",log_norm\n";
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const auto& s = run.states[k];
    out << k << ',' << s.h_hat << ',' << s.map_state + 1;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(run.posteriors[k][i]);
    out << ',' << format_double(s.log_norm) << '\n';
  }
}

inline void write_smoothed_csv(std::ostream& out, const std::vector<Vector>& smoothed) {
  const auto n = smoothed.front().size();
  out << "k";
  for (Eigen::Index i = 0; i < n; ++i) out << ",smoothed_" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < smoothed.size(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(smoothed[k][i]);
    out << '\n';
  }
}

inline void write_embedded_csv(std::ostream& out, const EmbeddedFilterRun& run) {
  out << "k,i,posterior\n";
  for (std::size_t k = 0; k < run.marginals.size(); ++k) {
    for (Eigen::Index i = 0; i < run.marginals[k].size(); ++i) {
      out << k << ',' << i + 1 << ',' << format_double(run.marginals[k][i]) << '\n';
    }
  }
}

inline void write_log_norm_csv(std::ostream& out, const std::vector<double>& log_norm) {
  out << "k,log_norm\n";
  for (std::size_t k = 0; k < log_norm.size(); ++k) out << k << ',' << format_double(log_norm[k]) << '\n';
}

/// Estimate document: a_hat, N_hat, J_hat, c_hat, d_hat, undefined_states.
/// Matrices are row j, column i; undefined entries are null; states are
/// 1-based.
inline json estimate_json(const EstimatorState& s) {
  const auto stats = normalized_statistics(s);
  const auto a = reestimate_a(s);
  const auto obs = reestimate_observation(s);
  const int n = s.stats.n;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };

  json doc;
  doc["a_hat"] = json::array();
  doc["N_hat"] = json::array();
  for (int j = 0; j < n; ++j) {
    json arow = json::array(), nrow = json::array();
    for (int i = 0; i < n; ++i) {
      arow.push_back(opt(a(j, i)));
      nrow.push_back(stats.N_hat(j, i));
    }
    doc["a_hat"].push_back(arow);
    doc["N_hat"].push_back(nrow);
  }
  doc["J_hat"] = json::array();
  doc["c_hat"] = json::array();
  doc["d_hat"] = json::array();
  for (int i = 0; i < n; ++i) {
    doc["J_hat"].push_back(stats.J_hat[i]);
    doc["c_hat"].push_back(opt(obs.c[i]));
    doc["d_hat"].push_back(opt(obs.d[i]));
  }
  std::vector<int> undefined;
  for (int i : a.undefined_states) undefined.push_back(i + 1);
  for (int i : obs.undefined_states) {
    if (std::find(undefined.begin(), undefined.end(), i + 1) == undefined.end()) undefined.push_back(i + 1);
  }
  std::sort(undefined.begin(), undefined.end());
  doc["undefined_states"] = undefined;
  return doc;
}

/// Doubles are printed in shortest round-trip form, so parsing the text
/// back yields the same values.
inline std::string dump_json(const json& doc) { return doc.dump(2); }

}  // namespace hsmm
