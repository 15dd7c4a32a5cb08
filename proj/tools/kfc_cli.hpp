#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kfc/kfc.hpp"

namespace kfc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitGuard = 4;

/// Dense matrices are n^2 doubles; longer videos must be strided beforehand.
inline constexpr std::size_t kMaxFrames = 8192;

namespace detail {

inline void emit(const std::string& payload, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << payload;
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::IoFailure, "cannot open " + out_path + " for writing");
  file << payload;
  if (!file) throw Error(Errc::IoFailure, "short write to " + out_path);
}

inline std::uint64_t parse_node_limit(const std::string& text) {
  if (text == "inf") return kUnlimitedNodes;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("--node-limit", "expected a positive integer or 'inf'");
}

struct Inputs {
  EmbeddingMatrix embeddings;
  QueryVector query;
};

inline Inputs load_inputs(const std::string& embeddings_path, const std::string& query_path) {
  EmbeddingMatrix raw = load_embeddings(embeddings_path);
  if (raw.n_frames() > kMaxFrames) {
    throw Error(Errc::FrameCapExceeded,
                std::to_string(raw.n_frames()) + " frames exceeds the 8192-frame cap; "
                "stride the candidate frames before selection",
                static_cast<std::int64_t>(raw.n_frames()));
  }
  return {normalize_rows(raw), normalize(load_query(query_path))};
}

inline Variant parse_variant(const std::string& s) {
  return s == "sym" ? Variant::Symmetric : Variant::AsymmetricUpper;
}

inline std::vector<PlantedSegment> parse_plants(const std::string& text) {
  std::vector<PlantedSegment> out;
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item.empty()) continue;
    unsigned long long start = 0, length = 0;
    double boost = 0;
    char tail = 0;
    if (std::sscanf(item.c_str(), "%llu:%llu:%lf%c", &start, &length, &boost, &tail) != 3) {
      throw CLI::ValidationError("--plant", "expected start:len:boost, got '" + item + "'");
    }
    out.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(length), boost});
  }
  return out;
}

inline std::vector<SyntheticSpec> parse_batch(const json& j) {
  std::vector<SyntheticSpec> out;
  if (j.is_array()) {
    for (const auto& spec : j) out.push_back(synthetic_spec_from_json(spec));
    return out;
  }
  if (j.contains("instances")) {
    for (const auto& spec : j.at("instances")) out.push_back(synthetic_spec_from_json(spec));
  }
  if (j.contains("template")) {
    const SyntheticSpec base = synthetic_spec_from_json(j.at("template"));
    for (const auto& seed : j.value("seeds", json::array())) {
      SyntheticSpec spec = base;
      spec.seed = seed.get<std::uint64_t>();
      out.push_back(std::move(spec));
    }
  }
  if (out.empty()) throw Error(Errc::InvalidSpec, "batch holds no instances");
  return out;
}

}  // namespace detail

/// Runs one CLI invocation. args[0] is the program name. Data goes to `out`
/// (or --out), diagnostics to `err`. Exit codes: 0 ok, 2 usage, 3 data or
/// contract error, 4 resource guard.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-aware keyframe selection and narrative threading", "kfc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  // select
  auto* select = app.add_subcommand("select", "Select K keyframes and print a SelectionResult");
  std::string sel_embeddings, sel_query, sel_solver = "greedy", sel_variant = "asym";
  std::string sel_node_limit = "40000", sel_warm, sel_out, sel_kernel = "similarity";
  std::size_t sel_k = 8;
  double sel_alpha = kDefaultAlpha;
  GreedyConfig gcfg;
  bool no_lowrank = false, no_downsample = false, no_refine = false, no_init = false;
  bool sel_timing = false;
  select->add_option("--embeddings", sel_embeddings, "KFCE frame embeddings")->required();
  select->add_option("--query", sel_query, "KFCE query embedding (one row)")->required();
  select->add_option("--solver", sel_solver)
      ->check(CLI::IsMember({"greedy", "brute", "bnb", "uniform", "topk", "dpp"}));
  select->add_option("--k", sel_k, "number of keyframes")->capture_default_str();
  select->add_option("--alpha", sel_alpha, "diversity weight")->capture_default_str();
  select->add_option("--variant", sel_variant, "score matrix variant")
      ->check(CLI::IsMember({"asym", "sym"}));
  select->add_option("--node-limit", sel_node_limit, "B&B node budget, or 'inf'");
  select->add_option("--warm-start", sel_warm, "SelectionResult JSON seeding B&B");
  select->add_option("--rank-ratio", gcfg.rank_ratio)->capture_default_str();
  select->add_option("--grid", gcfg.target_resolution)->capture_default_str();
  select->add_option("--refine-k", gcfg.refine_window_k)->capture_default_str();
  select->add_flag("--no-lowrank", no_lowrank);
  select->add_flag("--no-downsample", no_downsample);
  select->add_flag("--no-refine", no_refine);
  select->add_flag("--no-init", no_init);
  select->add_option("--dpp-kernel", sel_kernel)->check(CLI::IsMember({"similarity", "literal"}));
  select->add_flag("--timing", sel_timing, "report wall time (otherwise elapsed_ns is 0)");
  select->add_option("--out", sel_out);

  // thread
  auto* thread_cmd = app.add_subcommand("thread", "Thread keyframes with captions into a plan");
  std::string thr_selection, thr_captions, thr_scope = "between", thr_layout = "interleaved";
  std::string thr_render, thr_out;
  std::size_t thr_budget = kDefaultNarrativeBudget;
  std::optional<std::size_t> thr_delta, thr_frames;
  thread_cmd->add_option("--selection", thr_selection, "SelectionResult JSON")->required();
  thread_cmd->add_option("--captions", thr_captions, "JSONL captions")->required();
  thread_cmd->add_option("--budget", thr_budget)->capture_default_str();
  thread_cmd->add_option("--delta", thr_delta, "minimum caption stride");
  thread_cmd->add_option("--scope", thr_scope)->check(CLI::IsMember({"between", "full"}));
  thread_cmd->add_option("--layout", thr_layout)
      ->check(CLI::IsMember({"interleaved", "nar-first", "kf-first"}));
  thread_cmd->add_option("--frames", thr_frames, "video length (full scope)");
  thread_cmd->add_option("--render", thr_render, "frame token template containing {t}");
  thread_cmd->add_option("--out", thr_out);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a planted synthetic instance");
  SyntheticSpec spec;
  std::string syn_plant, syn_out;
  synth->add_option("--n", spec.n_frames)->required();
  synth->add_option("--dim", spec.dim)->required();
  synth->add_option("--rho", spec.smoothness_rho)->capture_default_str();
  synth->add_option("--plant", syn_plant, "start:len:boost[,...]");
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--out", syn_out, "output directory")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "Compare solvers over a synthetic batch");
  std::string cmp_spec, cmp_solvers = "greedy,topk,uniform", cmp_out, cmp_format = "csv";
  std::size_t cmp_k = 8;
  double cmp_alpha = kDefaultAlpha;
  bool cmp_optimum = false, cmp_timing = false;
  compare->add_option("--spec", cmp_spec, "batch JSON")->required();
  compare->add_option("--solvers", cmp_solvers, "comma-separated solver list")->capture_default_str();
  compare->add_option("--k", cmp_k)->capture_default_str();
  compare->add_option("--alpha", cmp_alpha)->capture_default_str();
  compare->add_flag("--optimum", cmp_optimum, "compute brute-force optima for ratios");
  compare->add_option("--format", cmp_format)->check(CLI::IsMember({"csv", "json"}));
  compare->add_flag("--timing", cmp_timing, "add a mean wall-time column");
  compare->add_option("--out", cmp_out);

  // score-dump
  auto* dump = app.add_subcommand("score-dump", "Print the score matrix as CSV");
  std::string dump_embeddings, dump_query, dump_variant = "asym", dump_out;
  double dump_alpha = kDefaultAlpha;
  dump->add_option("--embeddings", dump_embeddings)->required();
  dump->add_option("--query", dump_query)->required();
  dump->add_option("--alpha", dump_alpha)->capture_default_str();
  dump->add_option("--variant", dump_variant)->check(CLI::IsMember({"asym", "sym"}));
  dump->add_option("--out", dump_out);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (select->parsed()) {
      const std::uint64_t node_limit = detail::parse_node_limit(sel_node_limit);
      auto in = detail::load_inputs(sel_embeddings, sel_query);
      const ScoreMatrix s = build_score_matrix(in.embeddings, in.query, sel_alpha,
                                               detail::parse_variant(sel_variant));
      gcfg.enable_lowrank = !no_lowrank;
      gcfg.enable_downsample = !no_downsample;
      gcfg.enable_refine = !no_refine;
      gcfg.enable_init = !no_init;
      SolverConfig cfg = parse_solver_config(sel_solver);
      cfg.greedy = gcfg;
      cfg.node_limit = node_limit;
      cfg.dpp_kernel = sel_kernel == "literal" ? DppKernel::LiteralEntry : DppKernel::Similarity;
      SelectionResult r;
      if (cfg.kind == SolverKind::BnB && !sel_warm.empty()) {
        BnbOptions opts;
        opts.node_limit = node_limit;
        opts.warm_start = selection_indices(read_json_file(sel_warm));
        r = branch_and_bound(s, sel_k, opts);
      } else {
        r = run_solver(cfg, s, in.embeddings, in.query, sel_k);
      }
      if (!sel_timing) r.stats.elapsed_ns = 0;
      detail::emit(to_json(r).dump() + "\n", sel_out, out);
    } else if (thread_cmd->parsed()) {
      const auto keyframes = selection_indices(read_json_file(thr_selection));
      const CaptionSet captions = load_captions(thr_captions);
      const Scope scope = *parse_scope(thr_scope);
      std::size_t frames = 0;
      if (thr_frames) {
        frames = *thr_frames;
      } else if (scope == Scope::FullVideo) {
        frames = std::max(keyframes.empty() ? 0 : keyframes.back() + 1,
                          captions.empty() ? 0 : captions.rbegin()->first + 1);
      }
      if (frames > 0) check_captions(captions, frames);
      const InterleavePlan plan = thread(keyframes, captions, ThreadBudget{thr_budget, thr_delta},
                                         scope, *parse_layout(thr_layout), frames);
      detail::emit(thr_render.empty() ? to_json(plan).dump() + "\n" : render_plan(plan, thr_render),
                   thr_out, out);
    } else if (synth->parsed()) {
      spec.planted = detail::parse_plants(syn_plant);
      const SyntheticInstance inst = synth_instance(spec);
      const std::filesystem::path dir(syn_out);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string());
      write_embeddings(inst.embeddings, dir / "embeddings.kfce");
      write_query(inst.query, dir / "query.kfce");
      const json planted{{"spec", to_json(spec)}, {"planted", inst.planted}};
      detail::emit(planted.dump(2) + "\n", (dir / "planted.json").string(), out);
      const json summary{{"embeddings", (dir / "embeddings.kfce").string()},
                         {"query", (dir / "query.kfce").string()},
                         {"planted", (dir / "planted.json").string()},
                         {"n_frames", spec.n_frames},
                         {"dim", spec.dim}};
      out << summary.dump() << "\n";
    } else if (compare->parsed()) {
      const auto batch = detail::parse_batch(read_json_file(cmp_spec));
      std::vector<SolverConfig> solvers;
      std::stringstream list(cmp_solvers);
      std::string token;
      while (std::getline(list, token, ',')) {
        if (!token.empty()) solvers.push_back(parse_solver_config(token));
      }
      if (solvers.empty()) throw CLI::ValidationError("--solvers", "no solvers given");
      const ComparisonTable table = compare_solvers(batch, solvers, cmp_k, cmp_alpha, cmp_optimum);
      detail::emit(cmp_format == "csv" ? to_csv(table, cmp_timing)
                                       : to_json(table, cmp_timing).dump(2) + "\n",
                   cmp_out, out);
    } else if (dump->parsed()) {
      auto in = detail::load_inputs(dump_embeddings, dump_query);
      const ScoreMatrix s = build_score_matrix(in.embeddings, in.query, dump_alpha,
                                               detail::parse_variant(dump_variant));
      std::string csv = "# variant=" + std::string(variant_name(s.variant)) +
                        " alpha=" + kfc::detail::format_number(s.alpha) +
                        " n=" + std::to_string(s.size()) + "\n";
      char buf[32];
      for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.values.cols(); ++j) {
          std::snprintf(buf, sizeof buf, "%.17g", s.values(i, j));
          if (j > 0) csv += ',';
          csv += buf;
        }
        csv += '\n';
      }
      detail::emit(csv, dump_out, out);
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_guard(e.code()) ? kExitGuard : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace kfc::cli
