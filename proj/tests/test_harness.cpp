#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "scaleinv/bench.hpp"
#include "scaleinv/experiment.hpp"
#include "scaleinv/io.hpp"

using namespace scaleinv;
namespace fs = std::filesystem;

namespace {

const fs::path kSamples = SCALEINV_SAMPLES_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scaleinv_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig shipped_config(const std::string& name) {
  std::ifstream in(kSamples / "configs" / name);
  ExperimentConfig c = config_from_json(nlohmann::json::parse(in));
  if (!c.source.path.empty()) c.source.path = (kSamples.parent_path() / c.source.path).string();
  return c;
}

}  // namespace

TEST(Csv, ParsesRowsInOrder) {
  const auto ex = parse_csv("y,x1,x2\n1,0.5,-2\n-1,3e2,0\n");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].y, 1.0);
  EXPECT_EQ(ex[1].x(0), 300.0);
  EXPECT_EQ(ex[0].x.size(), 2);
}

TEST(Csv, HeaderOnlyAndCrlf) {
  EXPECT_TRUE(parse_csv("y,x1,x2\n").empty());
  const auto ex = parse_csv("y,x1\r\n1,2\r\n\r\n-1,+4\r\n");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[1].x(0), 4.0);
}

TEST(Csv, ErrorsNameTheLine) {
  try {
    parse_csv("y,x1\n1,2\n1,nan\n", "data.csv");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("data.csv"), std::string::npos);
  }
  EXPECT_THROW(parse_csv("y,x1\n1,2,3\n"), ParseError);
  EXPECT_THROW(parse_csv("1,2\n"), ParseError);
  EXPECT_THROW(parse_csv(""), ParseError);
  EXPECT_THROW(parse_csv("y,x2\n1,2\n"), ParseError);
  EXPECT_THROW(parse_csv("y,x1\n1,inf\n"), ParseError);
  EXPECT_THROW(parse_csv("y,x1\n1,abc\n"), ParseError);
}

TEST(Csv, MissingFileIsAnIoError) { EXPECT_THROW(load_csv("/nonexistent/file.csv"), IoError); }

TEST(Sparse, Densifies) {
  const auto ex = parse_sparse("1 1:0.5 3:2.0\n-1\n");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].x.size(), 3);
  EXPECT_EQ(ex[0].x(0), 0.5);
  EXPECT_EQ(ex[0].x(1), 0.0);
  EXPECT_EQ(ex[0].x(2), 2.0);
  EXPECT_EQ(ex[1].y, -1.0);
  EXPECT_EQ(ex[1].x, Vector::Zero(3));
}

TEST(Sparse, Errors) {
  EXPECT_THROW(parse_sparse("1 2:1 1:1\n"), ParseError);
  EXPECT_THROW(parse_sparse("1 0:1\n"), ParseError);
  EXPECT_THROW(parse_sparse("1 1:x\n"), ParseError);
  EXPECT_THROW(parse_sparse("1 11\n"), ParseError);
  EXPECT_THROW(parse_sparse("q 1:1\n"), ParseError);
  EXPECT_THROW(load_sparse("/nonexistent/file.txt"), IoError);
}

TEST(Baselines, OgdOneStep) {
  OnlineGradientDescent ogd(1.0, 1);
  ogd.predict(Vector::Ones(1));
  ogd.update(1.0, Vector::Ones(1));
  EXPECT_EQ(ogd.weights()(0), -1.0);
  EXPECT_THROW(OnlineGradientDescent(0.0, 1), ParameterError);
  EXPECT_THROW(OnlineGradientDescent(-1.0, 1), ParameterError);
}

TEST(Baselines, ZeroPredictorRegretAgainstZero) {
  StreamSpec spec;
  spec.T = 30;
  const SyntheticStream s = random_stream(spec);
  const RunResult run = run_learner({LearnerKind::Zero, 1.5, 1.0}, s.examples, s.loss, spec.d);
  EXPECT_NEAR(total_loss(run.log), 30 * std::log(2.0), 1e-12);
  EXPECT_EQ(regret(run.log, Vector::Zero(5)).true_regret, 0.0);
}

TEST(Invariance, IdentityIsExact) {
  StreamSpec spec;
  spec.scale_min = 1e-3;
  spec.scale_max = 1e3;
  const SyntheticStream s = random_stream(spec);
  TransformSpec id;
  id.kind = TransformKind::Identity;
  for (LearnerKind k : {LearnerKind::Coordwise, LearnerKind::FullInv, LearnerKind::Ogd}) {
    const InvarianceResult r = invariance_check([&] { return make_learner({k, 1.5, 1.0}, 5); }, s.examples,
                                                Loss::logistic(), id, 1);
    EXPECT_LE(r.max_rel_deviation, 1e-15);
  }
}

TEST(Invariance, CoordinateWiseUnderDiagonalTransforms) {
  StreamSpec spec;
  spec.scale_min = 1e-3;
  spec.scale_max = 1e3;
  spec.seed = 12;
  const SyntheticStream s = random_stream(spec);
  TransformSpec diag;
  const InvarianceResult r = invariance_check([] { return make_learner({LearnerKind::Coordwise, 1.5, 1.0}, 5); },
                                              s.examples, Loss::logistic(), diag, 3);
  EXPECT_LE(r.max_rel_deviation, 1e-6);
}

TEST(Invariance, CoordinateWiseUnderGeneralTransformsIsOnlyRecorded) {
  StreamSpec spec;
  spec.seed = 12;
  const SyntheticStream s = random_stream(spec);
  TransformSpec general;
  general.kind = TransformKind::General;
  const InvarianceResult r = invariance_check([] { return make_learner({LearnerKind::Coordwise, 1.5, 1.0}, 5); },
                                              s.examples, Loss::logistic(), general, 3);
  EXPECT_TRUE(std::isfinite(r.max_rel_deviation));
  EXPECT_GE(r.max_rel_deviation, 0.0);
}

TEST(Invariance, TransformsRespectTheirSpecs) {
  TransformSpec general;
  general.kind = TransformKind::General;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix A = random_transform(6, general, seed);
    EXPECT_NEAR(condition_number(A), 1e3, 1e-6);
    const Matrix D = random_transform(6, TransformSpec{}, seed);
    EXPECT_TRUE(D.isDiagonal());
    EXPECT_GE(D.diagonal().minCoeff(), 1e-3);
    EXPECT_LE(D.diagonal().maxCoeff(), 1e3);
  }
  general.cond_cap = 0.5;
  EXPECT_THROW(random_transform(3, general, 0), ParameterError);
  EXPECT_THROW(parse_transform_kind("shear"), ParameterError);
}

TEST(Comparators, CountAndNames) {
  StreamSpec spec;
  spec.T = 40;
  const SyntheticStream s = random_stream(spec);
  const RunResult run = run_learner({LearnerKind::Coordwise, 1.5, 1.0}, s.examples, s.loss, 5);
  const auto cs = make_comparators(run.log, ComparatorSpec{}, 0);
  EXPECT_EQ(cs.size(), 22u);
  EXPECT_EQ(cs[0].name, "zero");
  EXPECT_EQ(cs[1].name, "minimizer");
  EXPECT_EQ(cs[2].name, "random(c=0.01,k=0)");
}

TEST(Comparators, MinimizerImprovesOnZero) {
  StreamSpec spec;
  spec.T = 200;
  spec.scale_min = 1e-2;
  spec.scale_max = 1e2;
  spec.flip_probability = 0.0;
  const SyntheticStream s = random_stream(spec);
  const RunResult run = run_learner({LearnerKind::Zero, 1.5, 1.0}, s.examples, s.loss, 5);
  const Vector u = empirical_minimizer(run.log);
  double at_u = 0.0;
  for (std::size_t t = 0; t < run.log.size(); ++t) at_u += s.loss.value(s.examples[t].y, s.examples[t].x.dot(u));
  EXPECT_LT(at_u, 0.5 * total_loss(run.log));
}

TEST(RunExperiment, EmptySourceGivesHeaderOnly) {
  const fs::path dir = scratch_dir("empty");
  const fs::path csv = dir / "empty.csv";
  std::ofstream(csv) << "y,x1,x2\n";
  ExperimentConfig c;
  c.learner.kind = LearnerKind::FullInv;
  c.source.kind = SourceKind::Csv;
  c.source.path = csv.string();
  c.output_prefix = (dir / "out").string();
  const RunReport r = run_experiment(c);
  EXPECT_EQ(slurp(dir / "out.trials.csv"), "t,yhat,y,g,loss,cumulative_loss,potential,gamma_or_psi_max,lemma_margin,overflow\n");
  EXPECT_EQ(r.summary["T"], 0);
  EXPECT_EQ(r.summary["total_loss"], 0.0);
  EXPECT_EQ(r.summary["overflow_trials"], 0);
}

TEST(RunExperiment, AdversaryExample) {
  ExperimentConfig c = shipped_config("fullinv_adversary.json");
  const RunReport r = run_experiment(c);
  ASSERT_TRUE(r.adversary.has_value());
  EXPECT_GE(r.summary["adversary"]["regret"].get<double>(), 6.0 - 1e-6);
  EXPECT_NEAR(r.summary["adversary"]["comparator_norm"].get<double>(), 3.0, 1e-8);
}

TEST(RunExperiment, ByteIdenticalReruns) {
  const fs::path dir = scratch_dir("determinism");
  for (const char* name : {"coordwise_csv.json", "fullinv_subspace.json", "fullinv_adversary.json"}) {
    ExperimentConfig c = shipped_config(name);
    c.output_prefix = (dir / "a").string();
    run_experiment(c);
    c.output_prefix = (dir / "b").string();
    run_experiment(c);
    EXPECT_EQ(slurp(dir / "a.trials.csv"), slurp(dir / "b.trials.csv")) << name;
    EXPECT_EQ(slurp(dir / "a.summary.json"), slurp(dir / "b.summary.json")) << name;
  }
}

TEST(RunExperiment, ShippedConfigsSatisfyTheLemmas) {
  for (const char* name : {"coordwise_csv.json", "coordwise_synthetic.json", "fullinv_sparse.json",
                           "fullinv_subspace.json"}) {
    const RunReport r = run_experiment(shipped_config(name));
    EXPECT_GE(r.run.min_lemma_margin(), -1e-9) << name;
    EXPECT_GE(r.summary["min_certificate_margin"].get<double>(), -1e-6) << name;
    EXPECT_GE(r.certificates.size(), 20u) << name;
    if (r.summary.contains("invariance")) {
      for (const auto& inv : r.summary["invariance"]) EXPECT_LE(inv["max_rel_deviation"].get<double>(), 1e-6) << name;
    }
  }
}

TEST(RunExperiment, ValidationAndIoErrors) {
  ExperimentConfig c;
  c.learner.alpha = 1.0;
  EXPECT_THROW(run_experiment(c), ParameterError);
  c.learner.alpha = 1.5;
  c.learner.kind = LearnerKind::Ogd;
  c.learner.ogd_rate = 0.0;
  EXPECT_THROW(run_experiment(c), ParameterError);
  ExperimentConfig missing;
  missing.source.kind = SourceKind::Csv;
  missing.source.path = "/nonexistent/data.csv";
  EXPECT_THROW(run_experiment(missing), IoError);
  ExperimentConfig unwritable;
  unwritable.source.stream.T = 5;
  unwritable.output_prefix = "/nonexistent/dir/out";
  EXPECT_THROW(run_experiment(unwritable), IoError);
  ExperimentConfig linear;
  linear.loss = LossKind::Linear;
  EXPECT_THROW(run_experiment(linear), ParameterError);
}

TEST(RunExperiment, TimingIsOptIn) {
  ExperimentConfig c;
  c.source.stream.T = 10;
  EXPECT_FALSE(run_experiment(c).summary.contains("wall_time_per_trial_ns"));
  c.timing = true;
  EXPECT_TRUE(run_experiment(c).summary.contains("wall_time_per_trial_ns"));
}

TEST(Config, FromJson) {
  const auto j = nlohmann::json::parse(R"({
    "learner": {"kind": "ogd", "ogd_rate": 0.5},
    "loss": "hinge", "seed": 9, "output": "x",
    "source": {"kind": "synthetic", "d": 7, "T": 11, "scale_mode": "instance", "g_mode": "signs", "rank": 2},
    "comparators": {"random_per_scale": 1, "scales": [1.0]},
    "invariance": {"transform": "general", "cond_cap": 10, "repetitions": 4}
  })");
  const ExperimentConfig c = config_from_json(j);
  EXPECT_EQ(c.learner.kind, LearnerKind::Ogd);
  EXPECT_EQ(c.learner.ogd_rate, 0.5);
  EXPECT_EQ(c.loss, LossKind::Hinge);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.source.stream.d, 7u);
  EXPECT_EQ(c.source.stream.rank, 2u);
  EXPECT_EQ(c.source.stream.scale_mode, ScaleMode::PerInstance);
  EXPECT_EQ(c.source.stream.g_mode, GMode::Signs);
  EXPECT_EQ(c.comparators.scales.size(), 1u);
  ASSERT_TRUE(c.invariance.has_value());
  EXPECT_EQ(c.invariance->transform.kind, TransformKind::General);
  EXPECT_EQ(c.invariance->repetitions, 4u);
  EXPECT_EQ(config_from_json(nlohmann::json::parse(R"({"learner": "fullinv"})")).learner.kind, LearnerKind::FullInv);
}

TEST(Config, BadValuesAreParameterErrors) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"learner": "newton"})")), ParameterError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"seed": "abc"})")), ParameterError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"loss": "squared"})")), ParameterError);
}

TEST(LemmaSweep, SmallSweepPasses) {
  LemmaSweepSpec spec;
  spec.runs = 6;
  spec.T = 60;
  for (LearnerKind k : {LearnerKind::Coordwise, LearnerKind::FullInv}) {
    const auto runs = lemma_sweep(k, spec);
    ASSERT_EQ(runs.size(), 6u);
    for (const auto& r : runs) {
      EXPECT_GE(r.min_margin, -1e-9);
      EXPECT_GE(r.min_certificate_margin, -1e-6);
    }
    if (k == LearnerKind::FullInv) {
      EXPECT_EQ(runs[1].rank, 2u);
    }
  }
}

TEST(Bench, LogLogSlope) {
  EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope({1}, {1}), ParameterError);
  EXPECT_THROW(loglog_slope({1, 2}, {0, 1}), ParameterError);
  BenchSpec spec;
  spec.dims = {4, 8};
  spec.T = 20;
  spec.repeats = 1;
  const BenchResult r = bench_learner(LearnerKind::FullInv, spec);
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_GT(r.points[0].ns_per_trial, 0.0);
}
