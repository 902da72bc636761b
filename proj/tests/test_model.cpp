#include <random>

#include "doctest.h"
#include "impsym/model.hpp"

using namespace impsym;
using namespace impsym::model;

namespace {

AffineDynamics scalar_dynamics(double a, double b, double d, double bias = 0.0) {
  AffineDynamics dyn;
  dyn.A = Mat(1, 1);
  dyn.A(0, 0) = a;
  dyn.B = Mat(1, 1);
  dyn.B(0, 0) = b;
  dyn.D = Mat(1, 1);
  dyn.D(0, 0) = d;
  dyn.bias = {bias};
  return dyn;
}

ImpulsiveSubsystem warehouse(int id, double a, double b, double d, double r,
                             double q, double dbar) {
  ImpulsiveSubsystem sub;
  sub.id = id;
  sub.state_dim = 1;
  sub.flow = scalar_dynamics(a, b, d);
  sub.jump = scalar_dynamics(r, q, dbar);
  sub.state_box = {{-5.0}, {5.0}};
  sub.external_inputs.finite = true;
  sub.external_inputs.values = {{-1.0}, {1.0}};
  sub.internal_input_box = {{-5.0}, {5.0}};
  sub.timing = {.tau = 0.2, .z_min = 1, .z_max = 10};
  return sub;
}

/* the three-warehouse ring used throughout: i feeds i+1 mod 3 */
NetworkModel warehouse_ring() {
  NetworkModel net;
  net.name = "warehouses3";
  net.subsystems = {warehouse(0, -1.0, 0.4, 1.0, 0.05, 0.4, 1.0),
                    warehouse(1, -1.5, 0.5, 1.0, 0.03, 0.5, 1.0),
                    warehouse(2, -2.0, 0.5, 0.5, 0.08, 0.5, 1.0)};
  for (int i = 0; i < 3; ++i) {
    net.subsystems[i].output_blocks[i] = AffineMap::identity(1);
    net.subsystems[i].output_blocks[(i + 1) % 3] = AffineMap::identity(1);
    net.edges.push_back({i, (i + 1) % 3});
  }
  return net;
}

}  // namespace

TEST_CASE("dynamics evaluation on the warehouse constants") {
  /* jump of the first warehouse: 0.05*1 + 0.4*0 + 1*1 */
  AffineDynamics jump = scalar_dynamics(0.05, 0.4, 1.0);
  CHECK(evaluate_dynamics(jump, {1.0}, {0.0}, {1.0})[0] == doctest::Approx(1.05).epsilon(1e-15));

  /* flow: -1*2 + 0.4*1 + 1*(-1) */
  AffineDynamics flow = scalar_dynamics(-1.0, 0.4, 1.0);
  CHECK(evaluate_dynamics(flow, {2.0}, {1.0}, {-1.0})[0] == doctest::Approx(-2.6).epsilon(1e-15));

  AffineDynamics zero = scalar_dynamics(0.0, 0.0, 0.0);
  CHECK(evaluate_dynamics(zero, {3.7}, {1.0}, {-2.0})[0] == 0.0);

  CHECK_THROWS_AS(evaluate_dynamics(flow, {1.0, 2.0}, {0.0}, {0.0}),
                  std::invalid_argument);
}

TEST_CASE("dynamics evaluation is affine in each argument") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    AffineDynamics dyn;
    dyn.A = Mat(2, 2);
    dyn.B = Mat(2, 1);
    dyn.D = Mat(2, 2);
    dyn.bias = {coef(rng), coef(rng)};
    for (double& v : dyn.A.a) v = coef(rng);
    for (double& v : dyn.B.a) v = coef(rng);
    for (double& v : dyn.D.a) v = coef(rng);
    Vec x1{coef(rng), coef(rng)}, x2{coef(rng), coef(rng)};
    Vec w{coef(rng)}, u{coef(rng), coef(rng)};
    Vec x12{x1[0] + x2[0], x1[1] + x2[1]};
    Vec a = evaluate_dynamics(dyn, x12, w, u);
    Vec b = evaluate_dynamics(dyn, x1, w, u);
    Vec c = evaluate_dynamics(dyn, x2, w, u);
    Vec z = evaluate_dynamics(dyn, {0.0, 0.0}, w, u);
    for (int i = 0; i < 2; ++i)
      CHECK(a[i] - b[i] - c[i] + z[i] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("jump window gating") {
  JumpTiming t{.tau = 0.2, .z_min = 1, .z_max = 10};
  auto w0 = jump_window(0, t);
  CHECK(w0.flow_allowed);
  CHECK_FALSE(w0.jump_allowed);

  auto w5 = jump_window(5, t);
  CHECK(w5.flow_allowed);
  CHECK(w5.jump_allowed);

  auto w10 = jump_window(10, t);
  CHECK_FALSE(w10.flow_allowed);
  CHECK(w10.jump_allowed);

  CHECK_THROWS_AS(jump_window(-1, t), std::invalid_argument);
  CHECK_THROWS_AS(jump_window(11, t), std::invalid_argument);
}

TEST_CASE("every counter value keeps the system non-blocking") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> zdist(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    JumpTiming t{.tau = 0.1, .z_min = zdist(rng), .z_max = 0};
    t.z_max = t.z_min + zdist(rng) % 5;
    for (int c = 0; c <= t.z_max; ++c) {
      auto w = jump_window(c, t);
      CHECK((w.flow_allowed || w.jump_allowed));
    }
  }
}

TEST_CASE("network validation accepts the warehouse ring") {
  NetworkModel net = warehouse_ring();
  auto rep = validate_network(net);
  CHECK(rep.ok());
  /* idempotent and side-effect free */
  auto rep2 = validate_network(net);
  CHECK(rep2.problems == rep.problems);
}

TEST_CASE("network validation findings") {
  SUBCASE("empty network") {
    auto rep = validate_network(NetworkModel{});
    REQUIRE(rep.problems.size() == 1);
    CHECK(rep.problems[0] == "empty network");
  }

  SUBCASE("output image escaping the internal input block") {
    NetworkModel net = warehouse_ring();
    /* scale the output of subsystem 1 so its image over [-5,5] becomes
     * [-6,6], exceeding subsystem 2's internal block [-5,5] */
    net.subsystems[1].output_blocks[2].C(0, 0) = 1.2;
    auto rep = validate_network(net);
    REQUIRE(rep.problems.size() == 1);
    CHECK(rep.problems[0].find("not contained") != std::string::npos);
  }

  SUBCASE("self edges rejected") {
    NetworkModel net = warehouse_ring();
    net.edges.push_back({1, 1});
    auto rep = validate_network(net);
    bool found = false;
    for (const auto& p : rep.problems)
      found = found || p.find("self-edge") != std::string::npos;
    CHECK(found);
  }

  SUBCASE("inconsistent explicit jump schedule") {
    NetworkModel net = warehouse_ring();
    net.subsystems[0].timing.explicit_jumps = {0.3};  // not a multiple of tau
    auto rep = validate_network(net);
    REQUIRE(rep.problems.size() == 1);
    CHECK(rep.problems[0].find("explicit jump instants") != std::string::npos);
  }

  SUBCASE("consistent explicit jump schedule") {
    NetworkModel net = warehouse_ring();
    for (auto& sub : net.subsystems)
      sub.timing.explicit_jumps = {1.0, 2.0, 3.0};
    CHECK(validate_network(net).ok());
  }
}

TEST_CASE("interval image of an affine map") {
  AffineMap h;
  h.C = Mat(1, 2);
  h.C(0, 0) = 2.0;
  h.C(0, 1) = -1.0;
  h.d = {0.5};
  Box img = affine_image_box(h, Box{{-1.0, 0.0}, {1.0, 3.0}});
  CHECK(img.lo[0] == doctest::Approx(-4.5));
  CHECK(img.hi[0] == doctest::Approx(2.5));
}

TEST_CASE("internal input blocks follow ascending source order") {
  NetworkModel net = warehouse_ring();
  /* give subsystem 0 a second feeder: 1 -> 0 */
  net.edges.push_back({1, 0});
  net.subsystems[1].output_blocks[0] = AffineMap::identity(1);
  CHECK(net.sources_of(0) == std::vector<int>{1, 2});
  CHECK(net.internal_block(1, 0) == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(net.internal_block(2, 0) == std::pair<std::size_t, std::size_t>{1, 1});
}

TEST_CASE("a-priori internal variation bound") {
  NetworkModel net = warehouse_ring();
  auto phi = estimate_variation_bounds(net);
  REQUIRE(phi.size() == 3);
  /* subsystem 1 reads subsystem 0: |xdot_0| <= 1*5 + 0.4*5 + 1*1 = 8,
   * identity output, tau = 0.2 */
  CHECK(phi[1] == doctest::Approx(1.6).epsilon(1e-12));
  /* subsystem 0 reads subsystem 2: 2*5 + 0.5*5 + 0.5*1 = 13 */
  CHECK(phi[0] == doctest::Approx(2.6).epsilon(1e-12));
}
