#pragma once

// Chain files.
//
// JSON:  {"K": 8,
//         "row_classes": [[[start, length, mass], ...], ...],
//         "assignment": [[class, count], ...],          run-length encoded, covers all K states
//         "label": "optional"}
// CSV:   dense rows, comma separated, one row per line (small K only).

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gtmarkov/chain.hpp"

namespace gtm {

inline RowClassChain chain_from_json(const nlohmann::json& j) {
  try {
    const auto K = j.at("K").get<std::size_t>();
    std::vector<RowClass> classes;
    for (const auto& rc : j.at("row_classes")) {
      std::vector<BlockRun> runs;
      for (const auto& r : rc) {
        require(r.is_array() && r.size() == 3, "each run must be [start, length, mass]");
        runs.push_back({r[0].get<std::size_t>(), r[1].get<std::size_t>(), r[2].get<double>()});
      }
      classes.emplace_back(std::move(runs));
    }
    std::vector<State> assignment;
    for (const auto& a : j.at("assignment")) {
      require(a.is_array() && a.size() == 2, "each assignment entry must be [class, count]");
      assignment.insert(assignment.end(), a[1].get<std::size_t>(), a[0].get<State>());
    }
    return RowClassChain(K, std::move(classes), std::move(assignment), j.value("label", std::string("file")));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed chain JSON: ") + e.what());
  }
}

inline nlohmann::json chain_to_json(const RowClassChain& chain) {
  nlohmann::json j;
  j["K"] = chain.state_count();
  j["label"] = chain.label();
  auto& rcs = j["row_classes"] = nlohmann::json::array();
  for (const auto& rc : chain.row_classes()) {
    auto runs = nlohmann::json::array();
    for (const auto& r : rc.runs()) runs.push_back({r.start, r.length, r.mass});
    rcs.push_back(std::move(runs));
  }
  auto& asg = j["assignment"] = nlohmann::json::array();
  const auto& a = chain.assignment();
  for (std::size_t i = 0; i < a.size();) {
    std::size_t k = i;
    while (k < a.size() && a[k] == a[i]) ++k;
    asg.push_back({a[i], k - i});
    i = k;
  }
  return j;
}

inline RowClassChain chain_from_csv(std::istream& in, std::string label = "file") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        require(cell.find_first_not_of(" \t\r", used) == std::string::npos, "trailing characters");
      } catch (const std::exception&) {
        throw InvalidArgument("line " + std::to_string(lineno) + ": cannot parse '" + cell + "' as a number");
      }
    }
    rows.push_back(std::move(row));
  }
  require(rows.size() <= 4096, "dense CSV import is limited to 4096 states");
  return from_dense_rows(rows, std::move(label));
}

/// Dispatches on extension: .csv is dense, anything else JSON.
inline RowClassChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open chain file '" + path + "'");
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return chain_from_csv(in, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("chain file '" + path + "': " + e.what());
  }
  return chain_from_json(j);
}

}  // namespace gtm
