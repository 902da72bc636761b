#include <cmath>
#include <random>

#include "doctest.h"
#include "impsym/gains.hpp"

using namespace impsym;
using namespace impsym::gains;

namespace {

LocalAsfParams local(double sigma, double rho_w_bar, double rho_w,
                     double alpha = 1.0) {
  LocalAsfParams l;
  l.sigma = sigma;
  l.rho_w_bar = rho_w_bar;
  l.rho_w = rho_w;
  l.alpha = alpha;
  return l;
}

/* the three-warehouse parameters after conversion: sigma_i from
 * e^{-kappa_c tau}, additive input gains 0.4/0.5/0.5, ring edges */
std::vector<LocalAsfParams> warehouse_locals() {
  auto conv = [](double sb) { return 1.0 - 0.01 * (1.0 - sb); };
  return {local(conv(std::exp(-0.2)), 0.4, 0.4 / ((1 - std::exp(-0.2)) * 0.99)),
          local(conv(std::exp(-0.3)), 0.5, 0.5 / ((1 - std::exp(-0.3)) * 0.99)),
          local(conv(std::exp(-0.4)), 0.5, 0.5 / ((1 - std::exp(-0.4)) * 0.99))};
}

const std::vector<model::Edge> kRing{{0, 1}, {1, 2}, {2, 0}};

/* independent worst-cycle search: try every subset as a candidate vertex
 * set and every rotation-free ordering */
void brute_cycles(const GainMatrix& g, std::vector<int>& path,
                  std::vector<char>& used, int start, double product,
                  double& best) {
  int v = path.back();
  for (int nxt = 0; nxt < g.n; ++nxt) {
    double gain = g.at(nxt, v);
    if (gain <= 0.0) continue;
    if (nxt == start && path.size() >= 2) best = std::max(best, product * gain);
    if (used[nxt] || nxt <= start || nxt == v) continue;
    used[nxt] = 1;
    path.push_back(nxt);
    brute_cycles(g, path, used, start, product * gain, best);
    path.pop_back();
    used[nxt] = 0;
  }
}

double brute_worst_product(const GainMatrix& g) {
  double best = 0.0;
  for (int i = 0; i < g.n; ++i) best = std::max(best, g.at(i, i));
  for (int s = 0; s < g.n; ++s) {
    std::vector<int> path{s};
    std::vector<char> used(g.n, 0);
    used[s] = 1;
    brute_cycles(g, path, used, s, 1.0, best);
  }
  return best;
}

}  // namespace

TEST_CASE("gain matrix layout") {
  auto locals = warehouse_locals();

  SUBCASE("no edges leaves only the diagonal") {
    auto g = build_gain_matrix(locals, {});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(g.at(i, j) == (i == j ? locals[i].sigma : 0.0));
  }

  SUBCASE("additive form on the ring") {
    auto g = build_gain_matrix(locals, kRing);
    /* entry (i,j) carries the input gain of the reading subsystem i */
    CHECK(g.at(1, 0) == doctest::Approx(0.5));
    CHECK(g.at(2, 1) == doctest::Approx(0.5));
    CHECK(g.at(0, 2) == doctest::Approx(0.4));
    CHECK(g.at(0, 1) == 0.0);
    CHECK(g.at(0, 0) == doctest::Approx(0.998187).epsilon(1e-6));
    CHECK(g.at(1, 1) == doctest::Approx(0.997408).epsilon(1e-6));
    CHECK(g.at(2, 2) == doctest::Approx(0.996703).epsilon(1e-6));
  }

  SUBCASE("max form uses the converted coefficients") {
    auto g = build_gain_matrix(locals, kRing, GainForm::MaxForm);
    CHECK(g.at(1, 0) == doctest::Approx(locals[1].rho_w));
    CHECK(g.at(0, 2) == doctest::Approx(2.22895).epsilon(1e-5));
  }

  SUBCASE("output scaling divides the source alpha") {
    auto scaled = locals;
    scaled[0].alpha = 2.0;
    auto g = build_gain_matrix(scaled, kRing);
    CHECK(g.at(1, 0) == doctest::Approx(0.25));
  }

  SUBCASE("bad edges rejected") {
    CHECK_THROWS_AS(build_gain_matrix(locals, {{0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(build_gain_matrix(locals, {{0, 3}}), std::invalid_argument);
  }
}

TEST_CASE("small-gain verdicts") {
  auto locals = warehouse_locals();

  SUBCASE("the warehouse ring satisfies the condition") {
    auto rep = check_small_gain(build_gain_matrix(locals, kRing));
    CHECK(rep.holds);
    CHECK(rep.worst_exact);
    /* the binding cycle is the first diagonal entry, but the ring itself
     * has product 0.4 * 0.5 * 0.5 = 0.1 */
    CHECK(rep.worst_product == doctest::Approx(0.998187).epsilon(1e-6));
    CHECK(rep.worst_cycle == std::vector<int>{0});
    CHECK(rep.worst_loop_product == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(rep.worst_loop.size() == 3);
  }

  SUBCASE("single subsystem") {
    CHECK(check_small_gain(build_gain_matrix({local(0.9, 0, 0)}, {})).holds);
    auto bad = check_small_gain(build_gain_matrix({local(1.0, 0, 0)}, {}));
    CHECK_FALSE(bad.holds);
    CHECK(bad.worst_cycle == std::vector<int>{0});
    CHECK(bad.worst_product == doctest::Approx(1.0));
  }

  SUBCASE("a two-cycle with product above one fails") {
    std::vector<LocalAsfParams> two{local(0.5, 1.1, 1.1), local(0.5, 1.1, 1.1)};
    auto rep = check_small_gain(
        build_gain_matrix(two, {{0, 1}, {1, 0}}));
    CHECK_FALSE(rep.holds);
    CHECK(rep.worst_product == doctest::Approx(1.21).epsilon(1e-12));
    CHECK(rep.worst_cycle.size() == 2);
  }

  SUBCASE("product exactly one also fails") {
    std::vector<LocalAsfParams> two{local(0.5, 2.0, 2.0), local(0.5, 0.5, 0.5)};
    auto rep = check_small_gain(build_gain_matrix(two, {{0, 1}, {1, 0}}));
    CHECK_FALSE(rep.holds);
    CHECK(rep.worst_product == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("small-gain agrees with exhaustive cycle search on random graphs") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> gain(0.05, 1.4);
  std::uniform_real_distribution<double> diag(0.1, 1.1);
  std::uniform_int_distribution<int> ndist(1, 6);
  std::bernoulli_distribution edge(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    GainMatrix g;
    g.n = ndist(rng);
    g.gamma.assign(static_cast<std::size_t>(g.n) * g.n, 0.0);
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        if (i == j)
          g.at(i, i) = diag(rng);
        else if (edge(rng))
          g.at(i, j) = gain(rng);

    double brute = brute_worst_product(g);
    auto rep = check_small_gain(g);
    REQUIRE(rep.worst_exact);
    CHECK(rep.holds == (brute < 1.0));
    CHECK(rep.worst_product == doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("scaling vectors") {
  auto locals = warehouse_locals();

  SUBCASE("diagonal-only graphs need no reweighting") {
    auto sv = compute_scalings(build_gain_matrix(locals, {}));
    CHECK(sv.psi == std::vector<double>{1.0, 1.0, 1.0});
  }

  SUBCASE("the warehouse ring admits the unit vector") {
    auto g = build_gain_matrix(locals, kRing);
    auto sv = compute_scalings(g, 0.01);
    REQUIRE(sv.psi.size() == 3);
    double mn = *std::min_element(sv.psi.begin(), sv.psi.end());
    CHECK(mn == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j && g.at(i, j) > 0.0)
          CHECK(g.at(i, j) * sv.psi[j] < sv.psi[i]);
  }

  SUBCASE("a one-directional edge keeps both weights at one") {
    std::vector<LocalAsfParams> two{local(0.5, 0.5, 0.5), local(0.5, 0.0, 0.0)};
    auto sv = compute_scalings(build_gain_matrix(two, {{1, 0}}));
    CHECK(sv.psi == std::vector<double>{1.0, 1.0});
  }

  SUBCASE("an imbalanced two-cycle forces a genuine reweighting") {
    /* gamma(1,0) = 1.3, gamma(0,1) = 0.5: product 0.65 < 1 but the unit
     * vector violates the strict row condition */
    std::vector<LocalAsfParams> two{local(0.5, 0.5, 0.5), local(0.5, 1.3, 1.3)};
    auto g = build_gain_matrix(two, {{0, 1}, {1, 0}});
    auto sv = compute_scalings(g, 0.01);
    CHECK(g.at(1, 0) * sv.psi[0] < sv.psi[1]);
    CHECK(g.at(0, 1) * sv.psi[1] < sv.psi[0]);
    CHECK(*std::min_element(sv.psi.begin(), sv.psi.end()) == doctest::Approx(1.0));
  }

  SUBCASE("failure modes") {
    std::vector<LocalAsfParams> two{local(0.5, 1.1, 1.1), local(0.5, 1.1, 1.1)};
    auto g = build_gain_matrix(two, {{0, 1}, {1, 0}});
    CHECK_THROWS_AS(compute_scalings(g), std::runtime_error);
    CHECK_THROWS_AS(compute_scalings(build_gain_matrix(locals, kRing), 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(compute_scalings(build_gain_matrix(locals, kRing), 1.0),
                    std::invalid_argument);
  }

  SUBCASE("random feasible graphs always yield a valid vector") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> gain(0.05, 1.4);
    std::uniform_real_distribution<double> diag(0.1, 0.99);
    std::bernoulli_distribution edge(0.4);
    int accepted = 0;
    for (int trial = 0; trial < 200; ++trial) {
      GainMatrix g;
      g.n = 5;
      g.gamma.assign(25, 0.0);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          if (i == j)
            g.at(i, i) = diag(rng);
          else if (edge(rng))
            g.at(i, j) = gain(rng);
      if (!check_small_gain(g).holds) continue;
      ScalingVector sv;
      try {
        sv = compute_scalings(g, 0.01);
      } catch (const std::runtime_error&) {
        /* a cycle product just below one cannot absorb the per-edge
         * strictness slack; that refusal is the documented contract */
        continue;
      }
      ++accepted;
      for (int i = 0; i < 5; ++i) {
        CHECK(sv.psi[i] >= 1.0);
        for (int j = 0; j < 5; ++j)
          if (i != j && g.at(i, j) > 0.0)
            CHECK(g.at(i, j) * sv.psi[j] < sv.psi[i]);
      }
    }
    CHECK(accepted > 20);
  }
}

TEST_CASE("composition of scalar certificates") {
  ScalingVector unit{{1.0, 1.0, 1.0}};
  ScalingVector skew{{1.0, 2.0, 10.0}};

  CHECK(compose_asf_value({}, ScalingVector{}) == 0.0);
  CHECK(compose_asf_value({1.0, 3.0, 2.0}, unit) == 3.0);
  CHECK(compose_asf_value({1.0, 2.0, 10.0}, skew) == 1.0);
  CHECK_THROWS_AS(compose_asf_value({1.0}, skew), std::invalid_argument);

  /* monotone and 1-homogeneous */
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a{val(rng), val(rng), val(rng)};
    std::vector<double> b{a[0] + val(rng), a[1] + val(rng), a[2] + val(rng)};
    CHECK(compose_asf_value(a, skew) <= compose_asf_value(b, skew));
    double lam = val(rng);
    std::vector<double> la{lam * a[0], lam * a[1], lam * a[2]};
    CHECK(compose_asf_value(la, skew) ==
          doctest::Approx(lam * compose_asf_value(a, skew)).epsilon(1e-12));
  }
}

TEST_CASE("composite certificate parameters") {
  auto locals = warehouse_locals();
  for (auto& l : locals) l.eps = 2.0;
  locals[1].eps = 5.0;
  ScalingVector psi{{1.0, 1.0, 1.0}};
  auto c = compose_asf_params(locals, psi);
  CHECK(c.alpha_tilde == 1.0);
  CHECK(c.sigma_tilde == doctest::Approx(locals[0].sigma));
  CHECK(c.rho_u_tilde == 0.0);
  CHECK(c.eps_tilde == 5.0);

  ScalingVector skew{{1.0, 2.0, 1.0}};
  auto cs = compose_asf_params(locals, skew);
  CHECK(cs.alpha_tilde == doctest::Approx(0.5));  // alpha_1 / psi_1
  CHECK(cs.eps_tilde == doctest::Approx(2.5));
}
