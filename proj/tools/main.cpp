// homlab command-line interface. Talks to the core exclusively through the
// public C API in homlab.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homlab.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string profile;
  std::string out;
  std::string weights;
  std::vector<std::string> corpus;
  std::vector<std::string> overrides;  // key=value
  std::string seed;
  std::string samples;
};

void AddCommonFlags(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "key=value config file");
  cmd->add_option("--profile", args->profile, "preset bundle: fast or paper")
      ->check(CLI::IsMember({"fast", "paper"}));
  cmd->add_option("--seed", args->seed, "64-bit run seed");
  cmd->add_option("--out", args->out, "output base directory (default runs/)");
  cmd->add_option("--corpus", args->corpus, "image directory; repeatable");
  cmd->add_option("--weights", args->weights, "weight file path");
  cmd->add_option("--samples", args->samples, "sample count for eval/visualize/pairs-gen");
  cmd->add_option("--set", args->overrides, "generic key=value override; repeatable");
}

int Fail(homlab_status status) {
  std::fprintf(stderr, "error: %s\n", homlab_last_error());
  return static_cast<int>(status);
}

// Applies precedence: defaults, config file (with its profile first), then
// command-line flags (--profile before the specific overrides).
int BuildConfig(const CommonArgs& args, homlab_config* cfg) {
  homlab_status s;
  if (!args.config_path.empty()) {
    if ((s = homlab_config_load_file(cfg, args.config_path.c_str())) != HOMLAB_OK)
      return Fail(s);
  }
  if (!args.profile.empty()) {
    if ((s = homlab_config_apply_profile(cfg, args.profile.c_str())) != HOMLAB_OK)
      return Fail(s);
  }
  if (!args.seed.empty()) {
    if ((s = homlab_config_set(cfg, "seed", args.seed.c_str())) != HOMLAB_OK) return Fail(s);
  }
  if (!args.out.empty()) {
    if ((s = homlab_config_set(cfg, "out", args.out.c_str())) != HOMLAB_OK) return Fail(s);
  }
  if (!args.weights.empty()) {
    if ((s = homlab_config_set(cfg, "weights", args.weights.c_str())) != HOMLAB_OK)
      return Fail(s);
  }
  if (!args.samples.empty()) {
    if ((s = homlab_config_set(cfg, "samples", args.samples.c_str())) != HOMLAB_OK)
      return Fail(s);
  }
  if (!args.corpus.empty()) {
    std::string joined;
    for (const auto& dir : args.corpus) {
      if (!joined.empty()) joined += ';';
      joined += dir;
    }
    if ((s = homlab_config_set(cfg, "corpus", joined.c_str())) != HOMLAB_OK) return Fail(s);
  }
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return HOMLAB_ERR_CONFIG;
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if ((s = homlab_config_set(cfg, key.c_str(), value.c_str())) != HOMLAB_OK) return Fail(s);
  }
  return 0;
}

using CommandFn = homlab_status (*)(const homlab_config*, char*, size_t);

int RunCommand(const CommonArgs& args, CommandFn fn) {
  homlab_config* cfg = homlab_config_create();
  if (!cfg) return Fail(HOMLAB_ERR_CONFIG);
  int rc = BuildConfig(args, cfg);
  if (rc == 0) {
    char run_dir[4096] = {0};
    const homlab_status s = fn(cfg, run_dir, sizeof(run_dir));
    if (s != HOMLAB_OK) {
      rc = Fail(s);
    } else {
      std::printf("run directory: %s\n", run_dir);
    }
  }
  homlab_config_destroy(cfg);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homlab — homography estimation laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string experiment_kind;

  CLI::App* gss_gen = app.add_subcommand("gss-gen", "synthesize a simple-shape image set");
  CLI::App* pairs_gen = app.add_subcommand("pairs-gen", "dump generated patch pairs");
  CLI::App* train = app.add_subcommand("train", "train the estimator on a corpus");
  CLI::App* eval = app.add_subcommand("eval", "evaluate trained weights on corpora");
  CLI::App* baseline = app.add_subcommand("baseline", "run the classical pipeline on corpora");
  CLI::App* visualize = app.add_subcommand("visualize", "write focus grids and corner overlays");
  CLI::App* experiment = app.add_subcommand("experiment", "run a full experiment sweep");
  experiment->add_option("which", experiment_kind, "domain | shapes | blur | selected2gap")
      ->required()
      ->check(CLI::IsMember({"domain", "shapes", "blur", "selected2gap"}));

  for (CLI::App* cmd : {gss_gen, pairs_gen, train, eval, baseline, visualize, experiment}) {
    AddCommonFlags(cmd, &args);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return HOMLAB_ERR_CONFIG;
  }

  if (gss_gen->parsed()) return RunCommand(args, homlab_cmd_gss_gen);
  if (pairs_gen->parsed()) return RunCommand(args, homlab_cmd_pairs_gen);
  if (train->parsed()) return RunCommand(args, homlab_cmd_train);
  if (eval->parsed()) return RunCommand(args, homlab_cmd_eval);
  if (baseline->parsed()) return RunCommand(args, homlab_cmd_baseline);
  if (visualize->parsed()) return RunCommand(args, homlab_cmd_visualize);
  if (experiment->parsed()) {
    homlab_config* cfg = homlab_config_create();
    if (!cfg) return Fail(HOMLAB_ERR_CONFIG);
    int rc = BuildConfig(args, cfg);
    if (rc == 0) {
      char run_dir[4096] = {0};
      const homlab_status s =
          homlab_cmd_experiment(cfg, experiment_kind.c_str(), run_dir, sizeof(run_dir));
      if (s != HOMLAB_OK) {
        rc = Fail(s);
      } else {
        std::printf("run directory: %s\n", run_dir);
      }
    }
    homlab_config_destroy(cfg);
    return rc;
  }
  return HOMLAB_ERR_CONFIG;
}
