// scaleinv command-line driver.
//
//   scaleinv run           --learner fullinv --csv data.csv --output out/run
//   scaleinv invariance    --learner coordwise --transform diagonal --repetitions 10
//   scaleinv adversary     --learner ogd --d 2 --T 64 --beta 3
//   scaleinv verify-lemmas --runs 100
//   scaleinv bench         --dims 16,32,64,128,256 --T 500
//
// Exit status: 0 success, 1 validation failure, 2 I/O error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "scaleinv/bench.hpp"
#include "scaleinv/error.hpp"
#include "scaleinv/experiment.hpp"
#include "scaleinv/io.hpp"

namespace {

using namespace scaleinv;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<std::string> learner;
  std::optional<double> alpha;
  std::optional<double> ogd_rate;
  std::optional<std::string> loss;
  std::optional<std::string> csv;
  std::optional<std::string> sparse;
  std::optional<std::size_t> d;
  std::optional<std::size_t> T;
  std::optional<double> scale_min;
  std::optional<double> scale_max;
  std::optional<std::string> g_mode;
  std::optional<std::string> scale_mode;
  std::optional<std::size_t> rank;
  std::optional<double> beta;
  std::optional<std::string> transform;
  std::optional<double> cond_cap;
  std::optional<std::size_t> repetitions;
  bool timing = false;
  std::size_t runs = 100;
  std::vector<std::size_t> dims{16, 32, 64, 128, 256};
  std::size_t repeats = 3;
};

std::uint64_t env_seed() {
  const char* v = std::getenv("SCALEINV_SEED");
  if (v == nullptr || *v == '\0') return 0;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw ParameterError(std::string("SCALEINV_SEED is not an unsigned integer: '") + v + "'");
  }
}

/// Precedence: built-in defaults < SCALEINV_SEED < --config file < flags.
ExperimentConfig build_config(const Flags& f) {
  ExperimentConfig c;
  c.seed = env_seed();
  if (!f.config.empty()) {
    const std::string text = detail::read_file(f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParameterError(f.config + ": " + e.what());
    }
    const std::uint64_t keep = c.seed;
    c = config_from_json(j);
    if (!j.contains("seed")) c.seed = keep;
  }
  if (f.seed) c.seed = *f.seed;
  if (f.output) c.output_prefix = *f.output;
  if (f.learner) c.learner.kind = parse_learner_kind(*f.learner);
  if (f.alpha) c.learner.alpha = *f.alpha;
  if (f.ogd_rate) c.learner.ogd_rate = *f.ogd_rate;
  if (f.loss) c.loss = parse_loss_kind(*f.loss);
  if (f.csv) {
    c.source.kind = SourceKind::Csv;
    c.source.path = *f.csv;
  }
  if (f.sparse) {
    c.source.kind = SourceKind::Sparse;
    c.source.path = *f.sparse;
  }
  if (f.d) c.source.stream.d = c.source.adversary.d = *f.d;
  if (f.T) c.source.stream.T = c.source.adversary.T = *f.T;
  if (f.scale_min) c.source.stream.scale_min = *f.scale_min;
  if (f.scale_max) c.source.stream.scale_max = *f.scale_max;
  if (f.scale_mode) c.source.stream.scale_mode = parse_scale_mode(*f.scale_mode);
  if (f.g_mode) c.source.stream.g_mode = parse_g_mode(*f.g_mode);
  if (f.rank) c.source.stream.rank = *f.rank;
  if (f.beta) c.source.adversary.beta = *f.beta;
  if (f.timing) c.timing = true;
  if (f.transform || f.cond_cap || f.repetitions) {
    if (!c.invariance) c.invariance = InvarianceSpec{};
    if (f.transform) c.invariance->transform.kind = parse_transform_kind(*f.transform);
    if (f.cond_cap) c.invariance->transform.cond_cap = *f.cond_cap;
    if (f.repetitions) c.invariance->repetitions = *f.repetitions;
  }
  return c;
}

void print_summary(const ojson& js) { std::cout << js.dump(2) << "\n"; }

int cmd_run(const Flags& f) {
  const RunReport r = run_experiment(build_config(f));
  print_summary(r.summary);
  return kExitOk;
}

int cmd_invariance(const Flags& f) {
  ExperimentConfig c = build_config(f);
  if (!c.invariance) c.invariance = InvarianceSpec{};
  const RunReport r = run_experiment(c);
  print_summary(r.summary);
  return kExitOk;
}

int cmd_adversary(const Flags& f) {
  ExperimentConfig c = build_config(f);
  c.source.kind = SourceKind::Adversary;
  const RunReport r = run_experiment(c);
  print_summary(r.summary);
  const double margin = r.summary["adversary"]["lower_bound_margin"].get<double>();
  return margin >= -1e-6 ? kExitOk : kExitValidation;
}

int cmd_verify_lemmas(const Flags& f) {
  const ExperimentConfig c = build_config(f);
  LemmaSweepSpec spec;
  spec.runs = f.runs;
  spec.seed = c.seed;
  spec.alpha = c.learner.alpha;
  if (f.d) spec.d = *f.d;
  if (f.T) spec.T = *f.T;
  if (f.scale_min) spec.scale_min = *f.scale_min;
  if (f.scale_max) spec.scale_max = *f.scale_max;
  spec.scale_mode = c.source.stream.scale_mode;
  check_alpha(spec.alpha);

  ojson js;
  bool ok = true;
  for (LearnerKind kind : {LearnerKind::Coordwise, LearnerKind::FullInv}) {
    const auto runs = lemma_sweep(kind, spec);
    double lemma = std::numeric_limits<double>::infinity();
    double cert = std::numeric_limits<double>::infinity();
    std::size_t overflow = 0;
    for (const auto& r : runs) {
      lemma = std::min(lemma, r.min_margin);
      cert = std::min(cert, r.min_certificate_margin);
      overflow += r.overflow_trials;
    }
    const bool pass = lemma >= -1e-9 && cert >= -1e-6;
    ok = ok && pass;
    js[to_string(kind)] = {{"runs", runs.size()},
                           {"min_lemma_margin", lemma},
                           {"min_certificate_margin", cert},
                           {"overflow_trials", overflow},
                           {"pass", pass}};
  }
  print_summary(js);
  if (!c.output_prefix.empty()) write_text_file(c.output_prefix + ".lemmas.json", js.dump(2) + "\n");
  return ok ? kExitOk : kExitValidation;
}

int cmd_bench(const Flags& f) {
  const ExperimentConfig c = build_config(f);
  BenchSpec spec;
  spec.dims = f.dims;
  spec.T = f.T.value_or(500);
  spec.repeats = f.repeats;
  spec.alpha = c.learner.alpha;
  spec.seed = c.seed;
  std::string csv = "learner,d,ns_per_trial\n";
  ojson js;
  for (LearnerKind kind : {LearnerKind::Coordwise, LearnerKind::FullInv}) {
    const BenchResult b = bench_learner(kind, spec);
    for (const auto& p : b.points) {
      csv += std::string(to_string(kind)) + "," + std::to_string(p.d) + "," + format_double(p.ns_per_trial) + "\n";
    }
    js[to_string(kind)] = {{"slope", b.slope}};
  }
  std::cout << csv;
  print_summary(js);
  if (!c.output_prefix.empty()) {
    write_text_file(c.output_prefix + ".bench.csv", csv);
    write_text_file(c.output_prefix + ".bench.json", js.dump(2) + "\n");
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON experiment config");
  sub->add_option("--seed", f.seed, "random seed (default: $SCALEINV_SEED or 0)");
  sub->add_option("--output", f.output, "output prefix for <prefix>.trials.csv / .summary.json");
  sub->add_option("--learner", f.learner, "zero | ogd | coordwise | fullinv");
  sub->add_option("--alpha", f.alpha, "learner alpha (> 9/8)");
  sub->add_option("--ogd-rate", f.ogd_rate, "OGD rate constant c in c/sqrt(t)");
  sub->add_option("--d", f.d, "dimension");
  sub->add_option("--T", f.T, "number of trials");
}

void add_data(CLI::App* sub, Flags& f) {
  sub->add_option("--loss", f.loss, "logistic | hinge | linear");
  auto* csv = sub->add_option("--csv", f.csv, "dense CSV input (header y,x1..xd)");
  auto* sparse = sub->add_option("--sparse", f.sparse, "sparse 'label idx:val' input");
  csv->excludes(sparse);
  sub->add_option("--scale-min", f.scale_min, "synthetic: smallest feature scale");
  sub->add_option("--scale-max", f.scale_max, "synthetic: largest feature scale");
  sub->add_option("--scale-mode", f.scale_mode, "synthetic: feature | instance");
  sub->add_option("--g-mode", f.g_mode, "synthetic: signs | uniform | from-loss");
  sub->add_option("--rank", f.rank, "synthetic: subspace rank (0 = full)");
  sub->add_flag("--timing", f.timing, "record wall time per trial in the summary");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-invariant online learners: runs, invariance checks, adversaries, lemma checks, timing"};
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "run a learner on a data source and certify regret");
  add_common(run, f);
  add_data(run, f);

  auto* inv = app.add_subcommand("invariance", "compare predictions on original and transformed data");
  add_common(inv, f);
  add_data(inv, f);
  inv->add_option("--transform", f.transform, "identity | diagonal | general");
  inv->add_option("--cond-cap", f.cond_cap, "condition-number cap for general transforms");
  inv->add_option("--repetitions", f.repetitions, "number of random transforms");

  auto* adv = app.add_subcommand("adversary", "drive a learner through the lower-bound sequence");
  add_common(adv, f);
  adv->add_option("--beta", f.beta, "target comparator seminorm");

  auto* lem = app.add_subcommand("verify-lemmas", "check per-trial potential lemmas and certificates");
  add_common(lem, f);
  lem->add_option("--runs", f.runs, "seeded runs per learner");
  lem->add_option("--scale-min", f.scale_min, "smallest feature scale");
  lem->add_option("--scale-max", f.scale_max, "largest feature scale");
  lem->add_option("--scale-mode", f.scale_mode, "feature | instance");

  auto* bench = app.add_subcommand("bench", "per-trial timing and log-log slopes");
  add_common(bench, f);
  bench->add_option("--dims", f.dims, "dimensions to time")->delimiter(',');
  bench->add_option("--repeats", f.repeats, "repeats per dimension (minimum is kept)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(f);
    if (inv->parsed()) return cmd_invariance(f);
    if (adv->parsed()) return cmd_adversary(f);
    if (lem->parsed()) return cmd_verify_lemmas(f);
    if (bench->parsed()) return cmd_bench(f);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
