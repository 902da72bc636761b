#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "impsym/abstraction.hpp"

using namespace impsym;
using namespace impsym::abstraction;

namespace {

model::AffineDynamics scalar_dyn(double a, double b, double d, double bias = 0.0) {
  model::AffineDynamics dyn;
  dyn.A = Mat(1, 1);
  dyn.A(0, 0) = a;
  dyn.B = Mat(1, 1);
  dyn.B(0, 0) = b;
  dyn.D = Mat(1, 1);
  dyn.D(0, 0) = d;
  dyn.bias = {bias};
  return dyn;
}

ImpulsiveSubsystem warehouse0() {
  ImpulsiveSubsystem sub;
  sub.id = 0;
  sub.state_dim = 1;
  sub.flow = scalar_dyn(-1.0, 0.4, 1.0);
  sub.jump = scalar_dyn(0.05, 0.4, 1.0);
  sub.state_box = {{-5.0}, {5.0}};
  sub.external_inputs.finite = true;
  sub.external_inputs.values = {{-1.0}, {1.0}};
  sub.internal_input_box = {{-5.0}, {5.0}};
  sub.timing = {.tau = 0.2, .z_min = 1, .z_max = 10};
  return sub;
}

NetworkModel warehouse_ring(int z_max = 10) {
  NetworkModel net;
  auto mk = [&](int id, double a, double b, double d, double r, double q,
                double dbar) {
    ImpulsiveSubsystem sub = warehouse0();
    sub.id = id;
    sub.flow = scalar_dyn(a, b, d);
    sub.jump = scalar_dyn(r, q, dbar);
    sub.timing.z_max = z_max;
    return sub;
  };
  net.subsystems = {mk(0, -1.0, 0.4, 1.0, 0.05, 0.4, 1.0),
                    mk(1, -1.5, 0.5, 1.0, 0.03, 0.5, 1.0),
                    mk(2, -2.0, 0.5, 0.5, 0.08, 0.5, 1.0)};
  for (int i = 0; i < 3; ++i) {
    net.subsystems[i].output_blocks[i] = model::AffineMap::identity(1);
    net.subsystems[i].output_blocks[(i + 1) % 3] = model::AffineMap::identity(1);
    net.edges.push_back({i, (i + 1) % 3});
  }
  return net;
}

bool same_tables(const SymbolicModel& a, const SymbolicModel& b) {
  return a.offsets == b.offsets && a.succ == b.succ && a.kind == b.kind &&
         a.blocking_states == b.blocking_states;
}

}  // namespace

TEST_CASE("lattice construction") {
  auto pts = quantize_set(Box{{-5.0}, {5.0}}, 2.5);
  REQUIRE(pts.size() == 5);
  CHECK(pts.front()[0] == -5.0);
  CHECK(pts.back()[0] == 5.0);
  CHECK(pts[2][0] == 0.0);

  /* 10/0.6667 is just short of 15 steps: multipliers -7..7 */
  CHECK(quantize_set(Box{{-5.0}, {5.0}}, 0.6667).size() == 15);

  /* lexicographic order over two axes */
  auto grid = quantize_set(Box{{0.0, 0.0}, {1.0, 1.0}}, 1.0);
  REQUIRE(grid.size() == 4);
  CHECK(grid[0] == Vec{0.0, 0.0});
  CHECK(grid[1] == Vec{0.0, 1.0});
  CHECK(grid[3] == Vec{1.0, 1.0});

  CHECK_THROWS_AS(quantize_set(Box{{0.0}, {1.0}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_quantizer(Box{{0.0}, {1.0}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(make_quantizer(Box{{0.0}, {1.0}}, -1.0), std::invalid_argument);
  /* pitch zero keeps the axis exact and is fine for the quantizer itself */
  CHECK(make_quantizer(Box{{0.0}, {1.0}}, 0.0).axes[0].eta == 0.0);
}

TEST_CASE("nearest-point quantization") {
  Quantizer q = make_quantizer(Box{{-5.0}, {5.0}}, 1.0);
  CHECK(quantize_point({1.3}, q)[0] == 1.0);
  CHECK(quantize_point({1.7}, q)[0] == 2.0);
  CHECK(quantize_point({2.0}, q)[0] == 2.0);   // lattice points are fixed
  CHECK(quantize_point({1.5}, q)[0] == 1.0);   // ties resolve downward
  CHECK(quantize_point({-1.5}, q)[0] == -2.0);
  CHECK_THROWS_AS(quantize_point({5.1}, q), std::out_of_range);
}

TEST_CASE("nominal flow endpoints") {
  SUBCASE("scalar closed form") {
    /* x' = -x + 0.4w + u from 0 with w=0, u=1: (1 - e^{-tau}) */
    Vec end = flow_endpoint(scalar_dyn(-1.0, 0.4, 1.0), {0.0}, {0.0}, {1.0}, 0.2, 32);
    CHECK(end[0] == doctest::Approx(1.0 - std::exp(-0.2)).epsilon(1e-12));
    /* zero rate integrates the constant terms */
    Vec lin = flow_endpoint(scalar_dyn(0.0, 1.0, 0.0, 0.5), {1.0}, {2.0}, {0.0}, 0.2, 32);
    CHECK(lin[0] == doctest::Approx(1.0 + 0.2 * 2.5).epsilon(1e-12));
  }

  SUBCASE("integrator matches the diagonal closed form") {
    model::AffineDynamics dyn;
    dyn.A = Mat(2, 2);
    dyn.A(0, 0) = -1.0;
    dyn.A(1, 1) = -0.5;
    dyn.B = Mat(2, 0);
    dyn.D = Mat(2, 0);
    dyn.bias = {1.0, -0.3};
    Vec end = flow_endpoint(dyn, {1.0, 2.0}, {}, {}, 0.2, 32);
    auto exact = [](double a, double x0, double c, double t) {
      return std::exp(a * t) * x0 + (std::exp(a * t) - 1.0) / a * c;
    };
    CHECK(end[0] == doctest::Approx(exact(-1.0, 1.0, 1.0, 0.2)).epsilon(1e-10));
    CHECK(end[1] == doctest::Approx(exact(-0.5, 2.0, -0.3, 0.2)).epsilon(1e-10));
    CHECK_THROWS_AS(flow_endpoint(dyn, {1.0, 2.0}, {}, {}, 0.2, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("eta-ball successor sets") {
  ImpulsiveSubsystem sub = warehouse0();
  AbstractionConfig cfg;
  cfg.eta_x = 0.6667;
  cfg.eta_w = 0.6667;

  SUBCASE("flow ball around the nominal endpoint") {
    auto succ = flow_successors({0.0}, {0.0}, {1.0}, sub, cfg);
    REQUIRE(succ.size() == 2);  // nominal 0.1813, radius 0.6667
    CHECK(succ[0][0] == doctest::Approx(0.0));
    CHECK(succ[1][0] == doctest::Approx(0.6667));
  }

  SUBCASE("jump ball around the map image") {
    auto succ = jump_successors({1.0}, {0.0}, {1.0}, sub, cfg);
    REQUIRE(succ.size() == 2);  // image 1.05
    CHECK(succ[0][0] == doctest::Approx(0.6667));
    CHECK(succ[1][0] == doctest::Approx(2 * 0.6667));
  }

  SUBCASE("static dynamics keep the ball centered") {
    sub.flow = scalar_dyn(0.0, 0.0, 0.0);
    cfg.eta_x = 1.0;
    auto succ = flow_successors({0.0}, {0.0}, {1.0}, sub, cfg);
    REQUIRE(succ.size() == 3);
    CHECK(succ[0][0] == -1.0);
    CHECK(succ[2][0] == 1.0);
  }

  SUBCASE("images far outside the box have no successors") {
    sub.jump = scalar_dyn(0.0, 0.0, 0.0, 100.0);
    CHECK(jump_successors({0.0}, {0.0}, {1.0}, sub, cfg).empty());
  }

  SUBCASE("the ball is closed: boundary points included") {
    sub.flow = scalar_dyn(0.0, 0.0, 0.0);  // endpoint = start, on-lattice
    cfg.eta_x = 1.0;
    auto succ = flow_successors({4.0}, {0.0}, {1.0}, sub, cfg);
    REQUIRE(succ.size() == 3);
    CHECK(succ[2][0] == 5.0);  // |5 - 4| = eta exactly
  }
}

TEST_CASE("symbolic subsystem structure") {
  ImpulsiveSubsystem sub = warehouse0();
  AbstractionConfig cfg;
  cfg.eta_x = 2.5;
  cfg.eta_w = 2.5;
  SymbolicModel m = build_symbolic_subsystem(sub, cfg);

  CHECK(m.num_grid_points() == 5);
  CHECK(m.num_counter_combos() == 11);
  CHECK(m.num_states() == 55);
  CHECK(m.num_internal() == 5);
  CHECK(m.num_external() == 2);
  CHECK(m.external_inputs[0] == Vec{-1.0});
  CHECK(m.external_inputs[1] == Vec{1.0});
  CHECK_FALSE(m.capped);

  SUBCASE("state encoding round-trips with the counter least significant") {
    for (std::uint64_t s = 0; s < m.num_states(); ++s)
      CHECK(m.encode_state(m.decode_state(s)) == s);
    CHECK(m.decode_state(0).counters[0] == 0);
    CHECK(m.decode_state(1).counters[0] == 1);
    CHECK(m.decode_state(11).grid_k[0] == m.state_axes[0].k_lo + 1);
  }

  SUBCASE("counter discipline on every transition") {
    for (std::uint64_t s = 0; s < m.num_states(); ++s) {
      SymbolicState st = m.decode_state(s);
      int c = st.counters[0];
      for (std::size_t w = 0; w < m.num_internal(); ++w)
        for (std::size_t u = 0; u < m.num_external(); ++u) {
          auto succ = m.successors(s, w, u);
          auto kinds = m.successor_kinds(s, w, u);
          bool saw_flow = false, saw_jump = false;
          for (std::size_t t = 0; t < succ.size(); ++t) {
            SymbolicState nx = m.decode_state(succ[t]);
            if (kinds[t] == StepKind::Flow) {
              saw_flow = true;
              CHECK(nx.counters[0] == c + 1);
            } else {
              saw_jump = true;
              CHECK(nx.counters[0] == 0);
            }
          }
          if (c >= sub.timing.z_max) CHECK_FALSE(saw_flow);
          if (c < sub.timing.z_min) CHECK_FALSE(saw_jump);
        }
    }
  }

  SUBCASE("the transition table matches the per-cell successor functions") {
    Quantizer qx = make_quantizer(sub.state_box, cfg.eta_x);
    for (std::uint64_t s = 0; s < m.num_states(); ++s) {
      SymbolicState st = m.decode_state(s);
      Vec x{m.state_axes[0].value(st.grid_k[0])};
      auto win = model::jump_window(st.counters[0], sub.timing);
      for (std::size_t w = 0; w < m.num_internal(); ++w)
        for (std::size_t u = 0; u < m.num_external(); ++u) {
          std::vector<std::pair<Vec, StepKind>> expect;
          if (win.flow_allowed)
            for (const Vec& p : flow_successors(x, m.internal_inputs[w],
                                                m.external_inputs[u], sub, cfg))
              expect.push_back({p, StepKind::Flow});
          if (win.jump_allowed)
            for (const Vec& p : jump_successors(x, m.internal_inputs[w],
                                                m.external_inputs[u], sub, cfg))
              expect.push_back({p, StepKind::Jump});
          auto succ = m.successors(s, w, u);
          auto kinds = m.successor_kinds(s, w, u);
          REQUIRE(succ.size() == expect.size());
          for (std::size_t t = 0; t < succ.size(); ++t) {
            SymbolicState nx = m.decode_state(succ[t]);
            CHECK(m.state_axes[0].value(nx.grid_k[0]) ==
                  doctest::Approx(expect[t].first[0]).epsilon(1e-12));
            CHECK(kinds[t] == expect[t].second);
          }
        }
    }
  }

  SUBCASE("parallel and serial builds are identical") {
    SymbolicModel again = build_symbolic_subsystem(sub, cfg);
    SymbolicModel serial = build_symbolic_subsystem_serial(sub, cfg);
    CHECK(same_tables(m, again));
    CHECK(same_tables(m, serial));
  }

  SUBCASE("transition budget enforces the cap") {
    AbstractionConfig tiny = cfg;
    tiny.max_transitions = 100;
    SymbolicModel capped = build_symbolic_subsystem(sub, tiny);
    CHECK(capped.capped);
    CHECK(capped.num_transitions() == 0);
  }

  SUBCASE("pitch zero is rejected by the builder") {
    AbstractionConfig bad = cfg;
    bad.eta_x = 0.0;
    CHECK_THROWS_AS(build_symbolic_subsystem(sub, bad), std::invalid_argument);
  }
}

TEST_CASE("production-pitch subsystem sizes") {
  AbstractionConfig cfg;
  cfg.eta_x = 0.6667;
  cfg.eta_w = 0.6667;
  SymbolicModel m = build_symbolic_subsystem(warehouse0(), cfg);
  CHECK(m.num_states() == 165);  // 15 grid points, counters 0..10
  CHECK(m.num_internal() == 15);
  CHECK(m.num_transitions() == 18000);
  CHECK(m.blocking_states.empty());
}

TEST_CASE("monolithic model of a single uncoupled subsystem") {
  ImpulsiveSubsystem sub = warehouse0();
  sub.flow.B = Mat(1, 0);
  sub.jump.B = Mat(1, 0);
  sub.internal_input_box = Box{};
  sub.output_blocks[0] = model::AffineMap::identity(1);
  NetworkModel net;
  net.subsystems = {sub};

  AbstractionConfig cfg;
  cfg.eta_x = 2.5;
  SymbolicModel mono = build_monolithic(net, cfg);
  SymbolicModel solo = build_symbolic_subsystem(sub, cfg);
  CHECK(mono.num_states() == solo.num_states());
  CHECK(mono.num_internal() == 1);
  CHECK(same_tables(mono, solo));
}

TEST_CASE("monolithic model of the warehouse ring") {
  NetworkModel net = warehouse_ring(2);  // z_max = 2 keeps the product small
  AbstractionConfig cfg;
  cfg.eta_x = 2.5;
  SymbolicModel m = build_monolithic(net, cfg);

  CHECK(m.num_grid_points() == 125);
  CHECK(m.num_counter_combos() == 27);
  CHECK(m.num_states() == 125 * 27);
  CHECK(m.num_internal() == 1);
  CHECK(m.num_external() == 8);
  CHECK_FALSE(m.capped);

  SUBCASE("counters move together under flow and reset per jumping subset") {
    for (std::uint64_t s = 0; s < m.num_states(); s += 7) {
      SymbolicState st = m.decode_state(s);
      for (std::size_t u = 0; u < m.num_external(); ++u) {
        auto succ = m.successors(s, 0, u);
        auto kinds = m.successor_kinds(s, 0, u);
        for (std::size_t t = 0; t < succ.size(); ++t) {
          SymbolicState nx = m.decode_state(succ[t]);
          if (kinds[t] == StepKind::Flow) {
            for (int i = 0; i < 3; ++i) CHECK(nx.counters[i] == st.counters[i] + 1);
          } else {
            /* jump steps are instantaneous: jumpers reset, everyone else
             * keeps state and counter */
            bool any_reset = false;
            for (int i = 0; i < 3; ++i) {
              if (nx.counters[i] != st.counters[i]) {
                any_reset = true;
                CHECK(nx.counters[i] == 0);
                CHECK(st.counters[i] >= net.subsystems[i].timing.z_min);
              }
            }
            /* with z_min >= 1 every firing subset moves some counter */
            CHECK(any_reset);
          }
        }
      }
    }
  }

  SUBCASE("coupled flow matches an independent stacked integration") {
    /* state (0,0,0), all counters zero, input (+1,+1,+1): integrate
     * x0' = -x0 + 0.4 x2 + u0, x1' = -1.5 x1 + 0.5 x0 + u1,
     * x2' = -2 x2 + 0.5 x1 + 0.5 u2 over one period */
    Vec y{0.0, 0.0, 0.0};
    int steps = 32 * 8;
    double h = 0.2 / steps;
    auto deriv = [](const Vec& x) {
      return Vec{-x[0] + 0.4 * x[2] + 1.0, -1.5 * x[1] + 0.5 * x[0] + 1.0,
                 -2.0 * x[2] + 0.5 * x[1] + 0.5};
    };
    for (int k = 0; k < steps; ++k) {
      Vec k1 = deriv(y);
      Vec k2 = deriv({y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]});
      Vec k3 = deriv({y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]});
      Vec k4 = deriv({y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]});
      for (int i = 0; i < 3; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    std::uint64_t s0 = m.encode_state(SymbolicState{{0, 0, 0}, {0, 0, 0}});
    std::size_t u = m.num_external();
    for (std::size_t i = 0; i < m.num_external(); ++i)
      if (m.external_inputs[i] == Vec{1.0, 1.0, 1.0}) u = i;
    REQUIRE(u < m.num_external());

    auto succ = m.successors(s0, 0, u);
    auto kinds = m.successor_kinds(s0, 0, u);
    std::vector<Vec> flow_targets;
    for (std::size_t t = 0; t < succ.size(); ++t)
      if (kinds[t] == StepKind::Flow)
        flow_targets.push_back(m.state_point(succ[t]));
    /* expected: all lattice points within 2.5 per axis of the endpoint */
    std::vector<Vec> expect;
    for (double a : {-2.5, 0.0, 2.5})
      for (double b : {-2.5, 0.0, 2.5})
        for (double c : {-2.5, 0.0, 2.5}) {
          if (std::abs(a - y[0]) <= 2.5 + 1e-9 && std::abs(b - y[1]) <= 2.5 + 1e-9 &&
              std::abs(c - y[2]) <= 2.5 + 1e-9)
            expect.push_back({a, b, c});
        }
    REQUIRE(flow_targets.size() == expect.size());
    for (std::size_t t = 0; t < expect.size(); ++t)
      for (int i = 0; i < 3; ++i)
        CHECK(flow_targets[t][i] == doctest::Approx(expect[t][i]).epsilon(1e-9));
  }

  SUBCASE("parallel and serial monolithic builds agree") {
    CHECK(same_tables(m, build_monolithic_serial(net, cfg)));
  }
}

TEST_CASE("random scalar subsystems: table vs per-cell oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    ImpulsiveSubsystem sub;
    sub.id = 0;
    sub.state_dim = 1;
    sub.flow = scalar_dyn(coef(rng), coef(rng) * 0.25, coef(rng) * 0.5);
    sub.jump = scalar_dyn(coef(rng) * 0.25, coef(rng) * 0.25, coef(rng) * 0.5);
    sub.state_box = {{-3.0}, {3.0}};
    sub.external_inputs.finite = true;
    sub.external_inputs.values = {{coef(rng)}};
    sub.internal_input_box = {{-3.0}, {3.0}};
    sub.timing = {.tau = 0.1 + 0.2 * std::abs(coef(rng)),
                  .z_min = 1,
                  .z_max = 2 + trial % 3};

    AbstractionConfig cfg;
    cfg.eta_x = 1.5;
    cfg.eta_w = 3.0;
    SymbolicModel m = build_symbolic_subsystem(sub, cfg);
    REQUIRE_FALSE(m.capped);

    for (std::uint64_t s = 0; s < m.num_states(); ++s) {
      SymbolicState st = m.decode_state(s);
      Vec x{m.state_axes[0].value(st.grid_k[0])};
      auto win = model::jump_window(st.counters[0], sub.timing);
      for (std::size_t w = 0; w < m.num_internal(); ++w)
        for (std::size_t u = 0; u < m.num_external(); ++u) {
          std::size_t expect = 0;
          if (win.flow_allowed)
            expect += flow_successors(x, m.internal_inputs[w],
                                      m.external_inputs[u], sub, cfg).size();
          if (win.jump_allowed)
            expect += jump_successors(x, m.internal_inputs[w],
                                      m.external_inputs[u], sub, cfg).size();
          CHECK(m.successors(s, w, u).size() == expect);
        }
    }
  }
}
