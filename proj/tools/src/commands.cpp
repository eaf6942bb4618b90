#include "commands.hpp"

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lookahead/checkpoint.hpp"
#include "lookahead/json_canon.hpp"
#include "lookahead/safety_world.hpp"

namespace lookahead::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string method_name(const RunConfig& config) {
  if (config.train.objective.kind == ObjectiveKind::constrained) return "constrained";
  return to_string(config.transform.mode);
}

std::string resolve_prefix(const std::string& value) {
  if (value == "p1" || value == "p2" || value == "p3") return canonical_prefix(value);
  return value;
}

json seeds_json(const RunConfig& config) {
  json seeds;
  seeds["world"] = config.world_seed;
  seeds["init"] = derive_seed(config.world_seed, kInitStream);
  seeds["pretrain"] = derive_seed(config.world_seed, kPretrainStream);
  seeds["align"] = derive_seed(config.world_seed, kAlignStream);
  seeds["train"] = config.train.seed;
  return seeds;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const json& seeds) {
  json manifest;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["seeds"] = seeds;
  manifest["version"] = 1;
  write_text_file(dir / "manifest.json", canonical_dump(manifest));
}

json stats_json(const TransformStats& stats) {
  json j;
  j["instances"] = stats.instances;
  j["tokens_before"] = stats.tokens_before;
  j["tokens_after"] = stats.tokens_after;
  j["overhead_ratio"] = stats.overhead_ratio;
  return j;
}

json flops_json(const FlopsReport& report) {
  json j;
  j["method"] = report.method;
  j["params_count"] = report.params_count;
  j["tokens_processed"] = report.tokens_processed;
  j["total_flops"] = report.total_flops;
  return j;
}

ModelConfig resolved_model_config(const RunConfig& config, const Vocab& vocab) {
  ModelConfig cfg = config.model;
  if (cfg.vocab_size == 0) {
    cfg.vocab_size = vocab.size();
  } else if (cfg.vocab_size != vocab.size()) {
    throw std::invalid_argument("config: model.vocab_size (" +
                                std::to_string(cfg.vocab_size) +
                                ") does not match the world vocabulary (" +
                                std::to_string(vocab.size()) + ")");
  }
  cfg.validate();
  return cfg;
}

template <typename S>
Params<S> obtain_seed_model(const RunConfig& config, const WorldBundle& world,
                            const ModelConfig& model_cfg, const fs::path& run_dir,
                            std::ostream& err) {
  if (!config.paths.seed_model.empty()) {
    const AnyParams loaded = load_checkpoint(config.paths.seed_model);
    const Params<S>& seed = expect_precision<S>(loaded);
    if (!seed.config.same_shape(model_cfg)) {
      throw std::invalid_argument("seed model checkpoint shape does not match model config");
    }
    save_checkpoint(loaded, run_dir / "seed_model.ckpt.json");
    return seed;
  }
  err << "[train] building seed model (pretrain + align)\n";
  Params<S> seed = train_seed_model<S>(world, model_cfg, config.world_seed);
  save_checkpoint(AnyParams(seed), run_dir / "seed_model.ckpt.json");
  return seed;
}

std::string epoch_checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt.json", epoch);
  return buf;
}

void write_train_log(const TrainLog& log, const fs::path& path) {
  std::string text;
  for (const auto& entry : log.entries) {
    json j;
    j["step"] = entry.step;
    j["epoch"] = entry.epoch;
    j["loss"] = entry.loss;
    j["flops_cum"] = entry.flops_cum;
    text += canonical_dump_compact(j);
    text += '\n';
  }
  write_text_file(path, text);
}

template <typename S>
void train_pipeline(const RunConfig& config, const fs::path& run_dir, std::ostream& err) {
  const WorldBundle world = load_world(config.paths.world);
  const ModelConfig model_cfg = resolved_model_config(config, world.vocab);

  fs::create_directories(run_dir);
  const Params<S> seed_model =
      obtain_seed_model<S>(config, world, model_cfg, run_dir, err);

  Corpus train_corpus = config.paths.train_corpus.empty()
                            ? world.task
                            : load_corpus(config.paths.train_corpus);
  const auto [transformed, stats] = apply_transform(train_corpus, config.transform);
  save_corpus(transformed, run_dir / "transformed_task.jsonl");
  write_text_file(run_dir / "transform_stats.json", canonical_dump(stats_json(stats)));

  const Params<S>* reference =
      config.train.objective.kind == ObjectiveKind::constrained ? &seed_model : nullptr;
  err << "[train] fine-tuning (" << method_name(config) << ", "
      << to_string(model_cfg.precision) << ")\n";
  auto [tuned, log] = train<S>(
      transformed, config.train, seed_model, reference, world.vocab,
      [&run_dir](int epoch, const Params<S>& params) {
        save_checkpoint(AnyParams(params), run_dir / epoch_checkpoint_name(epoch));
      });
  save_checkpoint(AnyParams(tuned), run_dir / "final.ckpt.json");
  write_train_log(log, run_dir / "train_log.jsonl");

  FlopsReport flops = estimate_flops(model_cfg, transformed, config.train);
  write_text_file(run_dir / "flops_report.json", canonical_dump(flops_json(flops)));

  RunConfig resolved = config;
  resolved.model = model_cfg;
  write_manifest(run_dir, "train", resolved.to_json(), seeds_json(resolved));
}

template <typename S>
EvalReport eval_pipeline(const RunConfig& config, const fs::path& run_dir,
                         const fs::path& world_dir, std::ostream& err) {
  const WorldBundle world = load_world(world_dir);
  const AnyParams tuned_any = load_checkpoint(run_dir / "final.ckpt.json");
  const AnyParams seed_any = load_checkpoint(run_dir / "seed_model.ckpt.json");
  const Params<S>& tuned = expect_precision<S>(tuned_any);
  const Params<S>& seed = expect_precision<S>(seed_any);

  err << "[eval] per-token KL on harmful probes\n";
  const KlCurve curve = per_token_kl(
      tuned, seed, world.probes, world.vocab,
      static_cast<std::size_t>(config.eval.kl_positions), config.eval.kl_conditioning);

  err << "[eval] safety rates\n";
  const SafetyReport safety = safety_rates(
      tuned, world.probes, world.vocab,
      static_cast<std::size_t>(config.eval.max_decode_len));

  err << "[eval] held-out utility\n";
  std::vector<std::string> preds, refs;
  for (const auto& inst : world.heldout_task.instances) {
    const auto prompt = detail::prompt_context(inst.instruction, world.vocab);
    GreedyResult g = greedy_decode(
        tuned, prompt, static_cast<std::size_t>(config.eval.max_decode_len));
    if (!g.ids.empty() && g.ids.back() == Vocab::kEos) g.ids.pop_back();
    preds.push_back(decode(g.ids, world.vocab));
    refs.push_back(inst.output);
  }
  const UtilityReport utility = utility_scores(preds, refs);

  EvalReport report;
  report.kl_curve = curve.mean_kl;
  report.rsr = safety.rsr;
  report.jsr = safety.jsr;
  report.exact_match = utility.exact_match;
  report.unigram_f1 = utility.unigram_f1;
  report.method = method_name(config);
  report.seed = config.world_seed;
  const fs::path flops_path = run_dir / "flops_report.json";
  if (fs::exists(flops_path)) {
    report.flops = json::parse(read_text_file(flops_path)).at("total_flops").get<std::uint64_t>();
  }
  save_eval_report(report, run_dir / "eval_report.json");
  return report;
}

RunConfig load_run_manifest_config(const fs::path& run_dir) {
  const json manifest = json::parse(read_text_file(run_dir / "manifest.json"));
  return RunConfig::from_json(manifest.at("config"));
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  std::string value;  // "vanilla", an m value, or a prefix alias
  std::uint64_t seed;
  EvalReport report;
};

double early_kl(const EvalReport& report) {
  if (report.kl_curve.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(2, report.kl_curve.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += report.kl_curve[i];
  return sum / static_cast<double>(n);
}

TransformSpec cell_transform(const std::string& param, const std::string& value,
                             const TransformSpec& base) {
  TransformSpec spec = base;
  if (value == "vanilla") {
    spec.mode = TransformMode::vanilla;
    return spec;
  }
  if (param == "m") {
    spec.mode = TransformMode::true_preview;
    if (value == "all") {
      spec.m = kPreviewAll;
    } else {
      const long v = std::stol(value);
      if (v < 0) throw std::invalid_argument("sweep: m value must be >= 0");
      spec.m = static_cast<std::size_t>(v);
    }
    return spec;
  }
  if (param == "prefix") {
    spec.mode = TransformMode::virtual_preview;
    spec.prefix_text = resolve_prefix(value);
    return spec;
  }
  throw std::invalid_argument("sweep: unknown param \"" + param + "\" (expected m or prefix)");
}

template <typename S>
json run_sweep(const RunConfig& base, const std::string& param,
               const std::vector<std::string>& values,
               const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
               std::ostream& err) {
  fs::create_directories(out_dir);
  std::vector<SweepCell> cells;
  json baseline = json::array();

  for (const std::uint64_t seed : seeds) {
    const fs::path world_dir = out_dir / "worlds" / ("seed" + std::to_string(seed));
    if (!fs::exists(world_dir / "vocab.json")) {
      err << "[sweep] building world seed " << seed << "\n";
      save_world(build_safety_world(seed), world_dir);
    }
    const WorldBundle world = load_world(world_dir);
    RunConfig seed_cfg = base;
    seed_cfg.world_seed = seed;
    seed_cfg.paths.world = world_dir.string();
    if (!base.train_seed_explicit) {
      seed_cfg.train.seed = derive_seed(seed, kFineTuneStream);
    }
    const ModelConfig model_cfg = resolved_model_config(seed_cfg, world.vocab);

    const fs::path seed_ckpt =
        out_dir / "seed_models" / ("seed" + std::to_string(seed) + ".ckpt.json");
    if (!fs::exists(seed_ckpt)) {
      err << "[sweep] training seed model for seed " << seed << "\n";
      const Params<S> seed_model = train_seed_model<S>(world, model_cfg, seed);
      fs::create_directories(seed_ckpt.parent_path());
      save_checkpoint(AnyParams(seed_model), seed_ckpt);
    }
    {
      const AnyParams seed_any = load_checkpoint(seed_ckpt);
      const SafetyReport seed_safety = safety_rates(
          expect_precision<S>(seed_any), world.probes, world.vocab,
          static_cast<std::size_t>(base.eval.max_decode_len));
      json b;
      b["seed"] = seed;
      b["rsr"] = seed_safety.rsr;
      b["jsr"] = seed_safety.jsr;
      baseline.push_back(std::move(b));
    }
    seed_cfg.paths.seed_model = seed_ckpt.string();

    std::vector<std::string> cell_values = values;
    cell_values.insert(cell_values.begin(), "vanilla");
    for (const std::string& value : cell_values) {
      RunConfig cfg = seed_cfg;
      cfg.transform = cell_transform(param, value, base.transform);
      std::string label = value == "vanilla" ? "vanilla" : param + value;
      const fs::path cell_dir =
          out_dir / "cells" / (label + "_seed" + std::to_string(seed));
      err << "[sweep] cell " << label << " seed " << seed << "\n";
      train_pipeline<S>(cfg, cell_dir, err);
      const EvalReport report = eval_pipeline<S>(cfg, cell_dir, world_dir, err);
      cells.push_back({value, seed, report});
    }
  }

  // Per-seed trends over the requested values (vanilla cells excluded).
  json trends;
  if (param == "m") {
    std::vector<double> rsr_trend, em_trend;
    for (const std::uint64_t seed : seeds) {
      std::vector<double> xs, rsr, em;
      for (std::size_t vi = 0; vi < values.size(); ++vi) {
        for (const auto& cell : cells) {
          if (cell.seed == seed && cell.value == values[vi]) {
            xs.push_back(static_cast<double>(vi + 1));
            rsr.push_back(cell.report.rsr);
            em.push_back(cell.report.exact_match);
          }
        }
      }
      auto trend = [&xs](const std::vector<double>& ys) {
        try {
          return spearman(xs, ys);
        } catch (const std::invalid_argument&) {
          return 0.0;  // constant outcomes: no trend
        }
      };
      rsr_trend.push_back(trend(rsr));
      em_trend.push_back(trend(em));
    }
    trends["rsr_spearman"] = rsr_trend;
    trends["exact_match_spearman"] = em_trend;
  } else {
    std::vector<double> band;
    for (const std::uint64_t seed : seeds) {
      double lo = 1.0, hi = 0.0;
      for (const auto& cell : cells) {
        if (cell.seed == seed && cell.value != "vanilla") {
          lo = std::min(lo, cell.report.rsr);
          hi = std::max(hi, cell.report.rsr);
        }
      }
      band.push_back(hi - lo);
    }
    trends["rsr_band"] = band;
  }

  // Pooled correlation between safety delta and early-token KL.
  std::vector<double> delta_rsr, kl2;
  for (const auto& cell : cells) {
    double base_rsr = 0.0;
    for (const auto& b : baseline) {
      if (b.at("seed").get<std::uint64_t>() == cell.seed) base_rsr = b.at("rsr").get<double>();
    }
    delta_rsr.push_back(cell.report.rsr - base_rsr);
    kl2.push_back(early_kl(cell.report));
  }
  json pooled;
  pooled["runs"] = cells.size();
  try {
    pooled["pearson_delta_rsr_vs_early_kl"] = pearson(delta_rsr, kl2);
  } catch (const std::invalid_argument&) {
    pooled["pearson_delta_rsr_vs_early_kl"] = nullptr;
  }

  json summary;
  summary["param"] = param;
  summary["values"] = values;
  summary["seeds"] = seeds;
  summary["baseline"] = std::move(baseline);
  json cell_arr = json::array();
  for (const auto& cell : cells) {
    json c;
    c["value"] = cell.value;
    c["seed"] = cell.seed;
    c["rsr"] = cell.report.rsr;
    c["jsr"] = cell.report.jsr;
    c["exact_match"] = cell.report.exact_match;
    c["unigram_f1"] = cell.report.unigram_f1;
    c["kl_early"] = early_kl(cell.report);
    cell_arr.push_back(std::move(c));
  }
  summary["cells"] = std::move(cell_arr);
  summary["trends"] = std::move(trends);
  summary["pooled"] = std::move(pooled);
  return summary;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void do_train(const RunConfig& config, const fs::path& run_dir, std::ostream& err) {
  config.validate();
  if (config.model.precision == Precision::f32) {
    train_pipeline<float>(config, run_dir, err);
  } else {
    train_pipeline<double>(config, run_dir, err);
  }
}

EvalReport do_eval(const fs::path& run_dir, const fs::path& world_dir, std::ostream& err) {
  const RunConfig config = load_run_manifest_config(run_dir);
  if (config.model.precision == Precision::f32) {
    return eval_pipeline<float>(config, run_dir, world_dir, err);
  }
  return eval_pipeline<double>(config, run_dir, world_dir, err);
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LookAhead tuning workbench"};
  app.require_subcommand(1);

  // make-world ---------------------------------------------------------------
  auto* make_world = app.add_subcommand(
      "make-world", "Generate the synthetic safety world corpora and probes");
  std::uint64_t mw_seed = 0;
  std::string mw_out;
  WorldSizes mw_sizes;
  make_world->add_option("--seed", mw_seed, "World seed")->required();
  make_world->add_option("--out", mw_out, "Output directory");
  make_world->add_option("--pretrain", mw_sizes.pretrain, "Pretrain corpus size");
  make_world->add_option("--align", mw_sizes.align, "Alignment corpus size");
  make_world->add_option("--task", mw_sizes.task, "Task corpus size");
  make_world->add_option("--probes", mw_sizes.probes, "Probe count");
  make_world->add_option("--heldout", mw_sizes.heldout_task, "Held-out task size");

  // transform ----------------------------------------------------------------
  auto* transform =
      app.add_subcommand("transform", "Apply a preview transform to a JSONL corpus");
  std::string tf_in, tf_out, tf_mode = "vanilla", tf_prefix, tf_connector;
  std::string tf_m;
  transform->add_option("--in", tf_in, "Input JSONL corpus")->required();
  transform->add_option("--out", tf_out, "Output JSONL corpus")->required();
  transform->add_option("--mode", tf_mode, "vanilla | true | virtual");
  transform->add_option("--m", tf_m, "Preview length for true mode (or \"all\")");
  transform->add_option("--prefix", tf_prefix,
                        "Prefix text or alias p1/p2/p3 for virtual mode");
  transform->add_option("--connector", tf_connector, "Connector text override");

  // train ----------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Fine-tune from a config file");
  std::string tr_config, tr_out, tr_world, tr_seed_model;
  train_cmd->add_option("--config", tr_config, "Run config JSON")->required();
  train_cmd->add_option("--out", tr_out, "Run directory");
  train_cmd->add_option("--world", tr_world, "Override paths.world");
  train_cmd->add_option("--seed-model", tr_seed_model, "Override paths.seed_model");

  // eval -----------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a finished run directory");
  std::string ev_run, ev_world, ev_out;
  eval_cmd->add_option("--run", ev_run, "Run directory")->required();
  eval_cmd->add_option("--world", ev_world, "World directory")->required();
  eval_cmd->add_option("--out", ev_out, "Optional extra copy of the report");

  // kl -------------------------------------------------------------------------
  auto* kl_cmd = app.add_subcommand("kl", "Per-token KL curve as CSV");
  std::string kl_run, kl_baseline, kl_world, kl_out, kl_conditioning = "seed_greedy_path";
  int kl_positions = 8;
  kl_cmd->add_option("--run", kl_run, "Run directory with final.ckpt.json")->required();
  kl_cmd->add_option("--baseline", kl_baseline, "Baseline checkpoint")->required();
  kl_cmd->add_option("--world", kl_world, "World directory")->required();
  kl_cmd->add_option("--positions", kl_positions, "Number of positions");
  kl_cmd->add_option("--conditioning", kl_conditioning,
                     "seed_greedy_path | tuned_greedy_path");
  kl_cmd->add_option("--out", kl_out, "Optional CSV output path");

  // sweep ----------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a preview-length or prefix sweep");
  std::string sw_param, sw_values, sw_config, sw_out, sw_seeds = "0,1,2,3,4";
  sweep_cmd->add_option("--param", sw_param, "m | prefix")->required();
  sweep_cmd->add_option("--values", sw_values, "Comma-separated values")->required();
  sweep_cmd->add_option("--config", sw_config, "Base run config JSON")->required();
  sweep_cmd->add_option("--out", sw_out, "Sweep output directory");
  sweep_cmd->add_option("--seeds", sw_seeds, "Comma-separated world seeds");

  // flops ----------------------------------------------------------------------
  auto* flops_cmd = app.add_subcommand("flops", "FLOPs estimate for a config");
  std::string fl_config;
  flops_cmd->add_option("--config", fl_config, "Run config JSON")->required();

  std::vector<const char*> argv;
  argv.push_back("lookahead");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (make_world->parsed()) {
      mw_sizes.validate();
      const fs::path dir =
          resolve_out_dir(mw_out, "", "world-" + std::to_string(mw_seed));
      const WorldBundle world = build_safety_world(mw_seed, mw_sizes);
      save_world(world, dir);
      json config;
      config["seed"] = mw_seed;
      json sizes;
      sizes["pretrain"] = mw_sizes.pretrain;
      sizes["align"] = mw_sizes.align;
      sizes["task"] = mw_sizes.task;
      sizes["probes"] = mw_sizes.probes;
      sizes["heldout_task"] = mw_sizes.heldout_task;
      config["sizes"] = std::move(sizes);
      json seeds;
      seeds["world"] = mw_seed;
      write_manifest(dir, "make-world", config, seeds);
      json summary;
      summary["out"] = dir.string();
      summary["vocab_size"] = world.vocab.size();
      summary["pretrain"] = world.pretrain.size();
      summary["align"] = world.align.size();
      summary["task"] = world.task.size();
      summary["heldout_task"] = world.heldout_task.size();
      summary["probes"] = world.probes.probes.size();
      out << canonical_dump(summary);
      return 0;
    }

    if (transform->parsed()) {
      TransformSpec spec;
      spec.mode = transform_mode_from_string(tf_mode);
      if (!tf_m.empty()) {
        if (tf_m == "all") {
          spec.m = kPreviewAll;
        } else {
          spec.m = static_cast<std::size_t>(std::stoul(tf_m));
        }
      }
      if (!tf_prefix.empty()) spec.prefix_text = resolve_prefix(tf_prefix);
      if (!tf_connector.empty()) spec.connector = tf_connector;
      spec.validate();
      const Corpus corpus = load_corpus(tf_in);
      const auto [transformed, stats] = apply_transform(corpus, spec);
      save_corpus(transformed, tf_out);
      out << canonical_dump(stats_json(stats));
      return 0;
    }

    if (train_cmd->parsed()) {
      RunConfig config = RunConfig::load(tr_config);
      if (!tr_world.empty()) config.paths.world = tr_world;
      if (!tr_seed_model.empty()) config.paths.seed_model = tr_seed_model;
      config.validate();
      const fs::path run_dir =
          resolve_out_dir(tr_out, config.paths.out,
                          "train-" + method_name(config) + "-seed" +
                              std::to_string(config.world_seed));
      do_train(config, run_dir, err);
      json summary;
      summary["out"] = run_dir.string();
      summary["method"] = method_name(config);
      summary["world_seed"] = config.world_seed;
      out << canonical_dump(summary);
      return 0;
    }

    if (eval_cmd->parsed()) {
      const EvalReport report = do_eval(ev_run, ev_world, err);
      if (!ev_out.empty()) save_eval_report(report, ev_out);
      out << read_text_file(fs::path(ev_run) / "eval_report.json");
      return 0;
    }

    if (kl_cmd->parsed()) {
      const WorldBundle world = load_world(kl_world);
      const AnyParams tuned_any = load_checkpoint(fs::path(kl_run) / "final.ckpt.json");
      const AnyParams base_any = load_checkpoint(kl_baseline);
      if (checkpoint_precision(tuned_any) != checkpoint_precision(base_any)) {
        throw std::invalid_argument("run and baseline checkpoints use different precisions");
      }
      const KlConditioning conditioning = kl_conditioning_from_string(kl_conditioning);
      KlCurve curve;
      if (checkpoint_precision(tuned_any) == Precision::f32) {
        curve = per_token_kl(expect_precision<float>(tuned_any),
                             expect_precision<float>(base_any), world.probes, world.vocab,
                             static_cast<std::size_t>(kl_positions), conditioning);
      } else {
        curve = per_token_kl(expect_precision<double>(tuned_any),
                             expect_precision<double>(base_any), world.probes, world.vocab,
                             static_cast<std::size_t>(kl_positions), conditioning);
      }
      std::string csv = "position,mean_kl\n";
      for (std::size_t i = 0; i < curve.mean_kl.size(); ++i) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%d,%.17g\n", curve.positions[i], curve.mean_kl[i]);
        csv += buf;
      }
      if (!kl_out.empty()) write_text_file(kl_out, csv);
      out << csv;
      return 0;
    }

    if (sweep_cmd->parsed()) {
      RunConfig config = RunConfig::load(sw_config);
      const std::vector<std::string> values = split_csv(sw_values);
      if (values.empty()) throw std::invalid_argument("sweep: --values is empty");
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split_csv(sw_seeds)) seeds.push_back(std::stoull(s));
      if (seeds.empty()) throw std::invalid_argument("sweep: --seeds is empty");
      const fs::path out_dir =
          resolve_out_dir(sw_out, config.paths.out, "sweep-" + sw_param);
      json summary;
      if (config.model.precision == Precision::f32) {
        summary = run_sweep<float>(config, sw_param, values, seeds, out_dir, err);
      } else {
        summary = run_sweep<double>(config, sw_param, values, seeds, out_dir, err);
      }
      write_text_file(out_dir / "summary.json", canonical_dump(summary));
      out << canonical_dump(summary);
      return 0;
    }

    if (flops_cmd->parsed()) {
      const RunConfig config = RunConfig::load(fl_config);
      config.validate();
      const WorldBundle world = load_world(config.paths.world);
      const ModelConfig model_cfg = resolved_model_config(config, world.vocab);
      const Corpus train_corpus = config.paths.train_corpus.empty()
                                      ? world.task
                                      : load_corpus(config.paths.train_corpus);
      const auto [transformed, stats] = apply_transform(train_corpus, config.transform);
      const FlopsReport vanilla = estimate_flops(model_cfg, train_corpus, config.train);
      const FlopsReport after = estimate_flops(model_cfg, transformed, config.train);
      json j;
      j["vanilla"] = flops_json(vanilla);
      j["transformed"] = flops_json(after);
      j["overhead_ratio"] = static_cast<double>(after.total_flops) /
                            static_cast<double>(vanilla.total_flops);
      out << canonical_dump(j);
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand executed\n";
  return 1;
}

}  // namespace lookahead::cli
