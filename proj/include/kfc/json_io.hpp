#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfc/error.hpp"
#include "kfc/harness.hpp"
#include "kfc/narrative_threader.hpp"
#include "kfc/selection.hpp"

namespace kfc {

using nlohmann::json;

/// {indices, objective, solver, nodes_explored, elapsed_ns, node_limit_hit}
inline json to_json(const SelectionResult& r) {
  return json{{"indices", r.indices},
              {"objective", r.objective},
              {"solver", std::string(solver_name(r.solver))},
              {"nodes_explored", r.stats.nodes_explored},
              {"elapsed_ns", r.stats.elapsed_ns},
              {"node_limit_hit", r.stats.node_limit_hit}};
}

/// Accepts a SelectionResult object or a bare array of indices.
inline std::vector<std::size_t> selection_indices(const json& j) {
  const json& arr = j.is_object() && j.contains("indices") ? j.at("indices") : j;
  if (!arr.is_array()) throw Error(Errc::InvalidSpec, "expected an index array or {\"indices\": [...]}");
  std::vector<std::size_t> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) throw Error(Errc::InvalidSpec, "indices must be integers");
    const auto i = v.get<std::int64_t>();
    if (i < 0) throw Error(Errc::NegativeIndex, "selection index", i);
    out.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InvalidSpec, "invalid JSON in " + path.string());
  return j;
}

/// {scope, layout, delta, items: [{type, t, text?}]}; delta is null when no
/// narratives were threaded.
inline json to_json(const InterleavePlan& plan) {
  json items = json::array();
  for (const auto& item : plan.items) {
    if (item.kind == PlanItem::Kind::Frame) {
      items.push_back({{"type", "frame"}, {"t", item.t}});
    } else {
      items.push_back({{"type", "narrative"}, {"t", item.t}, {"text", item.text}});
    }
  }
  return json{{"scope", std::string(scope_name(plan.scope))},
              {"layout", std::string(layout_name(plan.layout))},
              {"delta", plan.delta ? json(*plan.delta) : json(nullptr)},
              {"items", std::move(items)}};
}

inline SyntheticSpec synthetic_spec_from_json(const json& j) {
  try {
    SyntheticSpec spec;
    spec.n_frames = j.at("n_frames").get<std::size_t>();
    spec.dim = j.at("dim").get<std::size_t>();
    spec.smoothness_rho = j.value("rho", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    for (const auto& seg : j.value("planted", json::array())) {
      spec.planted.push_back({seg.at("start").get<std::size_t>(), seg.at("length").get<std::size_t>(),
                              seg.value("boost", 1.0)});
    }
    return spec;
  } catch (const json::exception& ex) {
    throw Error(Errc::InvalidSpec, std::string("synthetic spec: ") + ex.what());
  }
}

inline json to_json(const SyntheticSpec& spec) {
  json planted = json::array();
  for (const auto& seg : spec.planted) {
    planted.push_back({{"start", seg.start}, {"length", seg.length}, {"boost", seg.relevance_boost}});
  }
  return json{{"n_frames", spec.n_frames}, {"dim", spec.dim}, {"rho", spec.smoothness_rho},
              {"seed", spec.seed}, {"planted", std::move(planted)}};
}

inline json to_json(const ComparisonTable& table, bool include_timing = false) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r{{"solver", row.solver},
           {"instances", row.instances},
           {"mean_objective", row.mean_objective},
           {"mean_optimality_ratio",
            row.mean_optimality_ratio ? json(*row.mean_optimality_ratio) : json(nullptr)},
           {"mean_relevance_recall", row.mean_relevance_recall},
           {"mean_min_gap", row.mean_min_gap},
           {"mean_mean_gap", row.mean_mean_gap}};
    if (include_timing) r["mean_elapsed_ns"] = row.mean_elapsed_ns;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace kfc
