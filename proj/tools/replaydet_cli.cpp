// Command-line front end: synth, extract, train, score, eval, config.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "replaydet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace replaydet;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string workdir;
  int jobs = 1;
  std::int64_t seed = -1;
  bool quiet = false;
};

ExperimentConfig effective_config(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  apply_overrides(c, g.overrides);
  if (g.seed >= 0) c.seed = static_cast<std::uint64_t>(g.seed);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replay-attack detection with codec/vocoder residual features"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key=value experiment config file");
  app.add_option("--set", g.overrides, "override a config key (key=value); repeatable");
  app.add_option("--workdir", g.workdir, "work directory (else paths.workdir, REPLAYDET_WORKDIR)");
  app.add_option("--jobs", g.jobs, "parallel workers for extraction and scoring")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_flag("-q,--quiet", g.quiet, "suppress progress output");

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  CorpusConfig corpus;
  std::string out_dir;
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--bonafide", corpus.n_bonafide, "bonafide utterances");
  synth->add_option("--spoof", corpus.n_spoof, "replayed utterances");
  synth->add_option("--train-fraction", corpus.train_fraction);
  synth->add_option("--min-duration", corpus.min_duration_s);
  synth->add_option("--max-duration", corpus.max_duration_s);
  synth->add_option("--channels", corpus.channels_per_split, "replay channels per split");

  auto* extract = app.add_subcommand("extract", "compute and cache residual features");
  std::string manifest, split;
  extract->add_option("--manifest", manifest, "extract only this manifest");
  extract->add_option("--split", split, "split name for --manifest")
      ->check(CLI::IsMember({"train", "eval"}));

  auto* train = app.add_subcommand("train", "fit PCA and the classifier on bonafide rows");
  std::string model_path;
  train->add_option("--model", model_path, "model file (default <workdir>/model.rdmd)");

  auto* score = app.add_subcommand("score", "score the evaluation features");
  std::string scores_path;
  score->add_option("--model", model_path);
  score->add_option("--scores", scores_path, "score file (default <workdir>/scores.txt)");

  auto* eval = app.add_subcommand("eval", "compute the equal error rate");
  std::string keys_path;
  eval->add_option("--scores", scores_path);
  eval->add_option("--keys", keys_path, "key file (default: labels of the eval manifest)");

  auto* show = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      if (g.seed >= 0) corpus.seed = static_cast<std::uint64_t>(g.seed);
      const CorpusResult r = build_corpus(corpus, out_dir);
      ExperimentConfig c;
      c.seed = corpus.seed;
      c.train_manifest = fs::absolute(r.train_manifest).string();
      c.eval_manifest = fs::absolute(r.eval_manifest).string();
      if (!r.noise_dir.empty()) c.noise_dir = fs::absolute(r.noise_dir).string();
      if (!r.rir_dir.empty()) c.rir_dir = fs::absolute(r.rir_dir).string();
      std::ofstream(fs::path(out_dir) / "experiment.cfg") << c.to_text();
      if (!g.quiet)
        std::cerr << "wrote " << corpus.n_bonafide + corpus.n_spoof << " utterances to "
                  << out_dir << "\n";
      return 0;
    }

    const ExperimentConfig config = effective_config(g);
    if (show->parsed()) {
      std::cout << config.to_text();
      return 0;
    }
    const fs::path workdir = resolve_workdir(g.workdir, config);
    RunOptions options;
    options.jobs = g.jobs;
    options.log = g.quiet ? nullptr : &std::cerr;
    if (model_path.empty()) model_path = (workdir / "model.rdmd").string();
    if (scores_path.empty()) scores_path = (workdir / "scores.txt").string();

    if (extract->parsed()) {
      if (!manifest.empty()) {
        const std::string s = split.empty() ? "eval" : split;
        const auto st = extract_split(config, manifest, s == "train", workdir,
                                      feature_table_path(workdir, s), options);
        return st.over_failure_threshold() ? 2 : 0;
      }
      const ExtractSummary s = cmd_extract(config, workdir, options);
      return s.train.over_failure_threshold() || s.eval.over_failure_threshold() ? 2 : 0;
    }
    if (train->parsed()) {
      TrainingReport report;
      cmd_train(config, workdir, model_path, options, &report);
      return report.converged ? 0 : 3;
    }
    if (score->parsed()) {
      cmd_score(config, workdir, model_path, scores_path, options);
      return 0;
    }
    if (eval->parsed()) {
      if (keys_path.empty()) {
        if (config.eval_manifest.empty())
          fail(ErrorCode::kConfig, "pass --keys or set paths.eval_manifest");
        fs::create_directories(workdir);
        keys_path = (workdir / "eval_keys.txt").string();
        write_keys(keys_from_manifest(config.eval_manifest), keys_path);
      }
      cmd_eval(scores_path, keys_path, std::cout);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
