#include <random>

#include <gtest/gtest.h>

#include <avt/avt.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace avt;
using avt::testing::fixture_model;

namespace {

std::vector<int> sample_path(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(k) - 1);
  std::vector<int> path(n);
  for (auto& q : path) q = d(gen);
  return path;
}

}  // namespace

TEST(Trellis, MaxAndCanonicalMatchEnumeration) {
  std::mt19937_64 gen(101);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial % 3);
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 7);
    const auto model = oracle::random_discrete_model(gen, k, 3);
    const auto obs = oracle::random_symbols(gen, n, 3);
    const auto brute = oracle::enumerate_paths(model, obs);
    if (brute.best == kNegInf) {
      EXPECT_THROW(build_trellis(obs, model), Error);
      continue;
    }
    const auto trellis = build_trellis(obs, model);
    EXPECT_NEAR(trellis.max_terminal(), brute.best, 1e-9);
    const auto canon = canonical_alignment(trellis);
    auto expected = brute.argmax.front();
    for (const auto& p : brute.argmax)
      if (oracle::reverse_lex_greater(p, expected)) expected = p;
    EXPECT_EQ(canon.path, expected);
    EXPECT_NEAR(canon.log_likelihood, brute.best, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 200);
}

TEST(Trellis, ContinuousMaxMatchesEnumeration) {
  const auto model = fixture_model("example_2_4");
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto obs = simulate(model, 1 + static_cast<std::size_t>(trial % 6), static_cast<std::uint64_t>(trial)).observations;
    const auto brute = oracle::enumerate_paths(model, obs);
    const auto canon = canonical_alignment(build_trellis(obs, model));
    EXPECT_NEAR(canon.log_likelihood, brute.best, 1e-9);
    EXPECT_NEAR(oracle::path_log_likelihood(model, canon.path, obs), brute.best, 1e-9);
  }
}

TEST(Trellis, SingleObservationTieTakesLargerState) {
  ModelDescription d{{{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5},
                     {EmissionModel::discrete({0.5, 0.5}), EmissionModel::discrete({0.5, 0.5})}};
  const HmmModel model(d);
  const std::vector<double> obs{0.0};
  EXPECT_EQ(canonical_alignment(build_trellis(obs, model)).path, std::vector<int>{1});
}

TEST(Trellis, ReverseLexOrderComparesFromTheEnd) {
  const std::vector<int> a{1, 0};
  const std::vector<int> b{0, 1};
  EXPECT_TRUE(reverse_lex_less(a, b));
  EXPECT_FALSE(reverse_lex_less(b, a));
  EXPECT_FALSE(reverse_lex_less(a, a));
}

TEST(Trellis, AllImpossible) {
  ModelDescription d{{{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5},
                     {EmissionModel::discrete({1.0, 0.0}), EmissionModel::discrete({1.0, 0.0})}};
  const HmmModel model(d);
  const std::vector<double> obs{0.0, 1.0};
  try {
    build_trellis(obs, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllPathsImpossible);
  }
}

TEST(Trellis, ConstrainedAlignmentMatchesEnumeration) {
  std::mt19937_64 gen(202);
  for (int trial = 0; trial < 150; ++trial) {
    const auto model = oracle::random_discrete_model(gen, 3, 3);
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
    const auto obs = oracle::random_symbols(gen, n, 3);
    const std::size_t u = static_cast<std::size_t>(trial) % n;
    const int l = trial % 3;
    const std::span<const double> prefix(obs.data(), u + 1);
    const auto brute = oracle::enumerate_paths(model, prefix);
    if (brute.best == kNegInf) continue;
    ScoreTrellis trellis;
    try {
      trellis = build_trellis(obs, model);
    } catch (const Error&) {
      continue;
    }
    // best prefix ending in l, by enumeration
    double best = kNegInf;
    std::vector<int> arg;
    std::vector<int> path(u + 1, 0);
    for (;;) {
      if (path.back() == l) {
        const double v = oracle::path_log_likelihood(model, path, prefix);
        if (v > best + 1e-9 * std::max(1.0, std::abs(v))) {
          best = v;
          arg = path;
        } else if (reaches(v, best, 1e-9) && v != kNegInf && oracle::reverse_lex_greater(path, arg)) {
          arg = path;
        }
      }
      std::size_t i = 0;
      while (i <= u && ++path[i] == 3) path[i++] = 0;
      if (i > u) break;
    }
    if (best == kNegInf) {
      try {
        constrained_alignment(trellis, u, l);
        FAIL();
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::StateUnreachable);
      }
      continue;
    }
    const auto c = constrained_alignment(trellis, u, l);
    EXPECT_EQ(c.path, arg);
    EXPECT_NEAR(c.log_likelihood, best, 1e-9);
  }
}

TEST(Trellis, LogLambdaMatchesDirectSum) {
  std::mt19937_64 gen(303);
  for (int trial = 0; trial < 200; ++trial) {
    const auto model = oracle::random_discrete_model(gen, 3, 4, 0.0);
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 20);
    const auto obs = oracle::random_symbols(gen, n, 4);
    const auto path = sample_path(gen, n, 3);
    EXPECT_NEAR(log_lambda(path, obs, model), oracle::path_log_likelihood(model, path, obs), 1e-10);
    EXPECT_NEAR(log_lambda(path, obs, model, StartRow::after(1)),
                oracle::path_log_likelihood(model, path, obs, 1), 1e-10);
  }
}

TEST(Trellis, PrefixDecomposition) {
  // delta_u(l) = max_i delta_{u-1}(i) + log p_il + log f_l(x_u)
  std::mt19937_64 gen(404);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = oracle::random_discrete_model(gen, 4, 3);
    const auto obs = oracle::random_symbols(gen, 12, 3);
    ScoreTrellis t;
    try {
      t = build_trellis(obs, model);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t u = 1; u < obs.size(); ++u)
      for (int l = 0; l < 4; ++l) {
        double best = kNegInf;
        for (int i = 0; i < 4; ++i)
          best = std::max(best, t.log_delta(u - 1, i) + model.log_transition(static_cast<std::size_t>(i),
                                                                             static_cast<std::size_t>(l)));
        const double expected = best + model.emission(static_cast<std::size_t>(l)).log_density(obs[u]);
        if (expected == kNegInf) EXPECT_EQ(t.log_delta(u, l), kNegInf);
        else EXPECT_NEAR(t.log_delta(u, l), expected, 1e-9 * std::max(1.0, std::abs(expected)));
      }
  }
}

TEST(Trellis, TieSetsSelectMaximizers) {
  const auto model = fixture_model("example_2_4");
  const auto obs = simulate(model, 50, 8).observations;
  const auto t = build_trellis(obs, model);
  for (std::size_t u = 0; u + 1 < obs.size(); ++u)
    for (int j = 0; j < 4; ++j) {
      double best = kNegInf;
      for (int i = 0; i < 4; ++i)
        best = std::max(best, t.log_delta(u, i) + model.log_transition(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
      for (int i = 0; i < 4; ++i) {
        const double v = t.log_delta(u, i) + model.log_transition(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        EXPECT_EQ(t.tie_set(u, j).contains(i), reaches(v, best, 1e-9) && v != kNegInf);
      }
    }
}

TEST(Trellis, CanonicalPathIsConsistentWithTieSets) {
  const auto model = fixture_model("example_2_5_discrete");
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto obs = simulate(model, 200, seed).observations;
    const auto t = build_trellis(obs, model);
    const auto a = canonical_alignment(t);
    EXPECT_TRUE(t.terminal_argmax().contains(a.path.back()));
    EXPECT_EQ(a.path.back(), t.terminal_argmax().largest());
    for (std::size_t u = 0; u + 1 < obs.size(); ++u) {
      const auto ties = t.tie_set(u, a.path[u + 1]);
      EXPECT_TRUE(ties.contains(a.path[u]));
      EXPECT_EQ(a.path[u], ties.largest());
    }
    EXPECT_NEAR(a.log_likelihood, log_lambda(a.path, obs, model), 1e-8 * std::abs(a.log_likelihood));
  }
}

TEST(Trellis, MixtureAlignmentIsPointwise) {
  for (const char* name : {"mixture_overlap", "mixture_far"}) {
    const auto model = fixture_model(name);
    const auto obs = simulate(model, 500, 2).observations;
    const auto a = canonical_alignment(build_trellis(obs, model));
    for (std::size_t t = 0; t < obs.size(); ++t) {
      const double w0 = 0.5 * model.emission(0).density(obs[t]);
      const double w1 = 0.5 * model.emission(1).density(obs[t]);
      EXPECT_EQ(a.path[t], w1 >= w0 ? 1 : 0) << name << " t=" << t;
    }
  }
}

TEST(Enumeration, MatchesOracleAndOrdersPaths) {
  std::mt19937_64 gen(505);
  for (int trial = 0; trial < 60; ++trial) {
    const auto model = oracle::random_discrete_model(gen, 2, 2, 0.0);
    const auto obs = oracle::random_symbols(gen, 5, 2);
    const auto mine = enumerate_alignments(obs, model);
    const auto ref = oracle::enumerate_paths(model, obs);
    EXPECT_NEAR(mine.max_log_likelihood, ref.best, 1e-9);
    EXPECT_EQ(mine.argmax_paths.size(), ref.argmax.size());
    for (std::size_t i = 1; i < mine.argmax_paths.size(); ++i)
      EXPECT_TRUE(reverse_lex_less(mine.argmax_paths[i - 1], mine.argmax_paths[i]));
    EXPECT_EQ(mine.argmax_paths.back(), canonical_alignment(build_trellis(obs, model)).path);
  }
}

TEST(Enumeration, TooLarge) {
  const auto model = fixture_model("example_2_4");
  const std::vector<double> obs(20, 1.0);
  try {
    enumerate_alignments(obs, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InstanceTooLarge);
  }
}

TEST(Enumeration, EveryPathTiedOnSymmetricModel) {
  ModelDescription d{{{0.5, 0.5}, {0.5, 0.5}}, {0.5, 0.5},
                     {EmissionModel::discrete({0.5, 0.5}), EmissionModel::discrete({0.5, 0.5})}};
  const HmmModel model(d);
  const std::vector<double> obs{0, 1, 0};
  EXPECT_EQ(enumerate_alignments(obs, model).argmax_paths.size(), 8U);
}

TEST(Trellis, FirstColumnIsInitialTimesDensity) {
  const auto model = fixture_model("example_2_4");
  const std::vector<double> obs{0.7};
  const auto t = build_trellis(obs, model);
  for (int l = 0; l < 4; ++l) {
    const double expected = std::log(0.25) + model.emission(static_cast<std::size_t>(l)).log_density(0.7);
    if (expected == kNegInf) EXPECT_EQ(t.log_delta(0, l), kNegInf);
    else EXPECT_NEAR(t.log_delta(0, l), expected, 1e-12);
  }
}

TEST(Trellis, SingleStateLambda) {
  const auto model = fixture_model("k1");
  const std::vector<int> path{0, 0};
  const std::vector<double> obs{0.3, -1.2};
  const auto& f = model.emission(0);
  EXPECT_NEAR(log_lambda(path, obs, model), f.log_density(0.3) + f.log_density(-1.2), 1e-12);
}

TEST(Trellis, ForbiddenTransitionGivesNegInf) {
  const auto model = fixture_model("example_2_4");
  const std::vector<int> path{0, 2};  // p_13 = 0
  const std::vector<double> obs{1.0, -1.0};
  EXPECT_EQ(log_lambda(path, obs, model), kNegInf);
}

TEST(Trellis, ConstrainedAtEndEqualsCanonical) {
  const auto model = fixture_model("example_2_5_discrete");
  const auto obs = simulate(model, 60, 12).observations;
  const auto t = build_trellis(obs, model);
  const auto canon = canonical_alignment(t);
  const auto c = constrained_alignment(t, obs.size() - 1, canon.path.back());
  EXPECT_EQ(c.path, canon.path);
  EXPECT_EQ(constrained_alignment(t, 0, 2).path, std::vector<int>{2});
}

TEST(Trellis, SelectionConsistency) {
  const auto model = fixture_model("example_2_5_discrete");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto obs = simulate(model, 80, seed).observations;
    const auto t = build_trellis(obs, model);
    const auto canon = canonical_alignment(t);
    for (std::size_t m = 0; m < obs.size(); m += 7) {
      const auto c = constrained_alignment(t, m, canon.path[m]);
      EXPECT_TRUE(std::equal(c.path.begin(), c.path.end(), canon.path.begin())) << "m=" << m;
    }
  }
}

TEST(Trellis, PrefixSuffixConcatenationIsOptimal) {
  const auto model = fixture_model("example_2_4");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto obs = simulate(model, 40, seed).observations;
    const auto t = build_trellis(obs, model);
    const auto canon = canonical_alignment(t);
    for (std::size_t u = 5; u + 1 < obs.size(); u += 9) {
      const int l = canon.path[u];
      const auto prefix = constrained_alignment(t, u, l);
      const std::span<const double> rest(obs.data() + u + 1, obs.size() - u - 1);
      const auto suffix = canonical_alignment(build_trellis(rest, model, StartRow::after(l)));
      std::vector<int> joined = prefix.path;
      joined.insert(joined.end(), suffix.path.begin(), suffix.path.end());
      EXPECT_NEAR(log_lambda(joined, obs, model), canon.log_likelihood, 1e-9 * std::abs(canon.log_likelihood));
    }
  }
}

TEST(Trellis, ShrinkingToleranceKeepsContinuousAlignment) {
  const auto model = fixture_model("example_2_4");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto obs = simulate(model, 300, seed).observations;
    const auto a = canonical_alignment(build_trellis(obs, model, StartRow::initial(), 1e-9));
    const auto b = canonical_alignment(build_trellis(obs, model, StartRow::initial(), 1e-13));
    EXPECT_EQ(a.path, b.path);
  }
}

TEST(Trellis, CsvDumpHeader) {
  const auto model = fixture_model("k1");
  const std::vector<double> obs{0.0, 1.0};
  const auto csv = trellis_csv(build_trellis(obs, model));
  EXPECT_EQ(csv.rfind("u,state,log_delta,tie_set\n", 0), 0U);
}
