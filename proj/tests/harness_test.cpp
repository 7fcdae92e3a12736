#include "paraprod/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace paraprod;

namespace {

ExperimentConfig small_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.dim = 1;
  cfg.resolution = 5;
  cfg.ensemble_size = 6;
  cfg.seed = 4242;
  cfg.budget = 15;
  cfg.log2_n = 8;
  return cfg;
}

}  // namespace

TEST(SerializeTest, SignalRoundTrip) {
  Rng rng(3001);
  Signal f = random_signal(2, 3, rng);
  Signal g = signal_from_json(to_json(f));
  EXPECT_EQ(f.dim, g.dim);
  EXPECT_EQ(f.resolution, g.resolution);
  for (size_t c = 0; c < f.values.size(); ++c)
    EXPECT_EQ(f.values[c], g.values[c]);  // bit-exact through JSON
}

TEST(SerializeTest, SpectrumRoundTripAndKeyOrder) {
  Rng rng(3002);
  HaarSpectrum s = random_spectrum(2, 3, 0.5, rng, false);
  ordered_json j = to_json(s);
  HaarSpectrum t = spectrum_from_json(j);
  EXPECT_EQ(s.coeffs.size(), t.coeffs.size());
  EXPECT_EQ(s.mean, t.mean);
  auto a = s.coeffs.begin();
  auto b = t.coeffs.begin();
  for (; a != s.coeffs.end(); ++a, ++b) {
    EXPECT_EQ(a->first.cube, b->first.cube);
    EXPECT_EQ(a->first.orient.bits, b->first.orient.bits);
    EXPECT_EQ(a->second, b->second);
  }
  // serialized ordering is (level, index, orientation)
  int prev_level = -1;
  for (const auto& e : j.at("coeffs")) {
    const int level = e.at("level").get<int>();
    EXPECT_GE(level, prev_level);
    prev_level = level;
  }
}

TEST(SerializeTest, NormReportAndSparseFamily) {
  Rng rng(3003);
  Signal f = random_signal(1, 4, rng);
  NormReport r = lambda_d_norm(f, 0.5);
  ordered_json j = to_json(r);
  EXPECT_EQ(j.at("kind").get<std::string>(), "Lambda_d");
  EXPECT_TRUE(j.at("witness").is_object());

  CubeMap gq = random_cube_weights(1, 4, 0.5, rng);
  Localization loc = partial_sum_localization(gq, 1, 4);
  SparseConfig scfg = SparseConfig::for_triple(0.5, 1, 2.0, 1.0, 2.0);
  LLOResult res = llo_dominate(loc, root_cube(1), scfg);
  ordered_json fj = to_json(res.family);
  EXPECT_EQ(fj.at("entries").size(), res.family.entries.size());
  ordered_json cj = to_json(res.certificate);
  EXPECT_TRUE(cj.at("pass").get<bool>());
}

TEST(ConfigTest, ParsesAndValidates) {
  ordered_json j{{"experiment", "equivalence"},
                 {"dim", 1},
                 {"resolution", 6},
                 {"exponents", ordered_json{{"p", 2.0}, {"q", 1.0}, {"r", 2.0}}},
                 {"ensemble_size", 3},
                 {"seed", 7}};
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  EXPECT_EQ(cfg.experiment, ExperimentKind::Equivalence);
  EXPECT_EQ(cfg.resolution, 6);

  j["exponents"]["q"] = 3.0;  // violates 1/q = 1/p + 1/r
  EXPECT_THROW(ExperimentConfig::from_json(j), ConfigError);
  j["exponents"]["q"] = 1.0;
  j["experiment"] = "no-such-thing";
  EXPECT_THROW(ExperimentConfig::from_json(j), ConfigError);
}

TEST(HarnessTest, EmptyEnsembleHeaderOnlyCsv) {
  ExperimentConfig cfg = small_config(ExperimentKind::OpnormDyadic);
  cfg.ensemble_size = 0;
  ExperimentResult res = run_experiment(cfg);
  EXPECT_EQ(res.csv_lines.size(), 1u);  // header only
  EXPECT_TRUE(res.pass);
}

TEST(HarnessTest, DeterministicReports) {
  for (ExperimentKind kind :
       {ExperimentKind::OpnormDyadic, ExperimentKind::SparseCertify,
        ExperimentKind::Hedberg, ExperimentKind::Ppn}) {
    ExperimentConfig cfg = small_config(kind);
    if (kind == ExperimentKind::Hedberg) {
      cfg.alpha = 0.25;
      cfg.p = 2.0;
      cfg.window = 64.0;
    }
    if (kind == ExperimentKind::Ppn) {
      cfg.p = 1.0;
      cfg.q = 2.0;
      cfg.window = 16.0;
    }
    ExperimentResult a = run_experiment(cfg);
    ExperimentResult b = run_experiment(cfg);
    EXPECT_EQ(a.report.dump(), b.report.dump());
    EXPECT_EQ(a.csv_lines, b.csv_lines);
  }
}

TEST(HarnessTest, EmitWritesByteIdenticalFiles) {
  ExperimentConfig cfg = small_config(ExperimentKind::SparseCertify);
  cfg.window = 8.0;
  const std::string dir1 = "/tmp/paraprod_test_out1";
  const std::string dir2 = "/tmp/paraprod_test_out2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  const int c1 = run_and_emit(cfg, dir1);
  const int c2 = run_and_emit(cfg, dir2);
  EXPECT_EQ(c1, c2);
  auto slurp = [](const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(dir1 + "/report.json"), slurp(dir2 + "/report.json"));
  EXPECT_EQ(slurp(dir1 + "/trials.csv"), slurp(dir2 + "/trials.csv"));
  EXPECT_FALSE(slurp(dir1 + "/report.json").empty());
}

TEST(HarnessTest, ReportedBoundsRederivableFromSerializedWitness) {
  ExperimentConfig cfg = small_config(ExperimentKind::OpnormDyadic);
  ExperimentResult res = run_experiment(cfg);
  ExponentTriple t = cfg.triple();
  for (const auto& trial : res.report.at("trials")) {
    const int i = trial.at("trial").get<int>();
    // regenerate the symbol from the config, replay the serialized witness
    Rng rng = Rng::for_trial(cfg.seed, uint64_t(i));
    HaarSpectrum g = random_spectrum(cfg.dim, cfg.resolution, cfg.density, rng);
    const auto& est = trial.at("estimate");
    OperatorNormEstimate replayed;
    replayed.lower_bound = est.at("lower_bound").get<double>();
    replayed.method = est.at("method").get<std::string>() ==
                              "power-iteration-2-2"
                          ? OpNormMethod::PowerIteration22
                          : OpNormMethod::CandidateSearch;
    replayed.witness = signal_from_json(est.at("witness"));
    const double replay = reproduce_bound(g, replayed, t);
    EXPECT_NEAR(replay, replayed.lower_bound,
                1e-8 * std::max(1.0, replayed.lower_bound));
  }
}

TEST(HarnessTest, AdjointGapExperimentPasses) {
  ExperimentConfig cfg = small_config(ExperimentKind::AdjointGap);
  cfg.resolution = 7;
  cfg.q = 0.5;
  cfg.p = 2.0;
  cfg.l_min = 2;
  cfg.l_max = 6;
  ExperimentResult res = run_experiment(cfg);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.csv_lines.size(), 6u);  // header + levels 2..6
}

TEST(HarnessTest, SparseCertifyPasses) {
  ExperimentConfig cfg = small_config(ExperimentKind::SparseCertify);
  cfg.ensemble_size = 10;
  cfg.window = 8.0;
  ExperimentResult res = run_experiment(cfg);
  EXPECT_TRUE(res.pass);
}

TEST(HarnessTest, EquivalencePassesAtDeskScale) {
  ExperimentConfig cfg = small_config(ExperimentKind::Equivalence);
  cfg.resolution = 5;
  cfg.ensemble_size = 8;
  cfg.budget = 25;
  cfg.window = 20.0;
  ExperimentResult res = run_experiment(cfg);
  EXPECT_TRUE(res.pass) << res.report.dump(2);
}

TEST(HarnessTest, AtomBuildPasses) {
  ExperimentConfig cfg = small_config(ExperimentKind::AtomBuild);
  ExperimentResult res = run_experiment(cfg);
  EXPECT_TRUE(res.pass);
}

TEST(HarnessTest, ParallelTrialsMatchSequential) {
  // force a real thread pool and check index-ordered assembly and
  // propagation of a trial exception
  auto fn = [](int i) {
    Rng rng = Rng::for_trial(77, uint64_t(i));
    return double(i) + rng.gaussian();
  };
  auto seq = detail::map_trials<double>(64, fn, 1);
  auto par = detail::map_trials<double>(64, fn, 4);
  ASSERT_EQ(seq.size(), par.size());
  for (size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq[i], par[i]);

  auto throwing = [](int i) -> int {
    if (i == 13) throw std::runtime_error("boom");
    return i;
  };
  EXPECT_THROW(detail::map_trials<int>(32, throwing, 4), std::runtime_error);
}

TEST(HarnessTest, HedbergEnvelopeOverHundredTrials) {
  ExperimentConfig cfg = small_config(ExperimentKind::Hedberg);
  cfg.resolution = 6;
  cfg.ensemble_size = 100;
  cfg.alpha = 0.25;
  cfg.p = 2.0;
  cfg.window = 64.0;
  ExperimentResult res = run_experiment(cfg);
  EXPECT_TRUE(res.pass);
  EXPECT_GT(res.report["envelope"].get<double>(), 0.0);
  EXPECT_LE(res.report["envelope"].get<double>(), 64.0);
  EXPECT_EQ(res.report["flagged_cells"].get<size_t>(), 0u);
}
