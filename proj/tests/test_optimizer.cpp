#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "sdpet/error.hpp"
#include "sdpet/kernels.hpp"
#include "sdpet/optimizer.hpp"
#include "support.hpp"

using namespace sdpet;
using testing::uniform_vector;

namespace {

AlgorithmConfig algorithm(Variant v, std::size_t m, double a, double upper_bound = 0.0) {
  AlgorithmConfig c;
  c.variant = v;
  c.subsets = m;
  c.relaxation = {1.0, a};
  c.upper_bound = upper_bound;
  if (v == Variant::P1 || v == Variant::P2) {
    c.nu_min = 0.8;
    c.nu_max = 2.2;
  }
  if (v == Variant::P2 || v == Variant::M2) {
    c.rho = 3.0;
    c.delta1 = c.delta2 = 7.0;
  }
  return c;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("relaxation schedule") {
  RelaxationSchedule r{1.0, 1.0 / 35.0};
  CHECK(r.at(0) == 1.0);
  CHECK(r.at(35) == doctest::Approx(0.5).epsilon(1e-15));
  for (double a : {0.01, 1.0 / 35.0, 0.5, 3.0}) {
    RelaxationSchedule s{1.0, a};
    for (std::size_t k = 0; k < 500; ++k) CHECK(s.at(k + 1) < s.at(k));
  }
  CHECK_THROWS_AS((RelaxationSchedule{1.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((RelaxationSchedule{-1.0, 0.1}.validate()), Error);
}

TEST_CASE("interior projection") {
  const double t = 1e-4, u = 10.0;
  const auto out = project_interior(std::vector<double>{-0.5, u + 3.0, 0.0, u, 4.2, t, u - t}, t, u);
  CHECK(out[0] == t);
  CHECK(out[1] == u - t);
  CHECK(out[2] == t);
  CHECK(out[3] == u - t);
  CHECK(out[4] == 4.2);
  CHECK(out[5] == t);
  CHECK(out[6] == u - t);
  const auto inside = uniform_vector(100, t, u - t, 3);
  CHECK(project_interior(inside, t, u) == inside);
  CHECK_THROWS_AS(project_interior(inside, 0.0, u), Error);
  CHECK_THROWS_AS(project_interior(inside, 6.0, u), Error);
}

TEST_CASE("a zero subset gradient is a fixed point") {
  // F(f) = f - 2 ln(f + 1) is stationary at f = 1.
  auto a = testing::dense_system(1, 1, 1, {1.0});
  Objective obj(a, {2.0}, {1.0}, ModelParams{0.0}, testing::single_subset(1));
  const std::vector<double> f0{1.0};
  for (auto v : {Variant::Identity, Variant::M1, Variant::M2}) {
    SdpBsrem solver(obj, algorithm(v, 1, 0.1, 10.0), f0);
    auto st = solver.initial_state(f0);
    solver.subiterate(st, 0, 1);
    CHECK(st.f == f0);
  }
}

TEST_CASE("single subiteration against dense arithmetic") {
  // Two mutually neighbouring pixels, two detector bins, one subset.
  const std::vector<double> dense{1.0, 0.5, 0.25, 2.0};
  auto a = testing::dense_system(1, 2, 2, dense);
  const std::vector<double> g{3.0, 5.0}, bg{0.5, 0.7};
  const double beta = 0.4, gr = 2.0, eps = 1e-12, u = 20.0;
  Objective obj(a, g, bg, ModelParams{beta, gr, eps}, testing::single_subset(2));
  const std::vector<double> f{1.5, 0.25};

  for (auto v : {Variant::Identity, Variant::M1, Variant::M2}) {
    auto cfg = algorithm(v, 1, 1.0 / 35.0, u);
    SdpBsrem solver(obj, cfg, f);
    auto st = solver.initial_state(f);
    solver.subiterate(st, 0, 1);
    auto [a1, st_after] = [&] {
      AlphaState s;
      s.subsets = 1;
      return alpha_nesterov(s);
    }();
    (void)st_after;
    const double alpha = v == Variant::M1 ? a1 : v == Variant::M2 ? alpha_km(0, 1, 1, 3.0, 7.0, 7.0) : 1.0;

    // gradient: A^T (1 - g / (A f + gamma)) + beta * grad R
    double y0 = 0.0, y1 = 0.0;
    y0 += dense[0] * f[0];
    y0 += dense[1] * f[1];
    y1 += dense[2] * f[0];
    y1 += dense[3] * f[1];
    const double r0 = 1.0 - g[0] / (y0 + bg[0]);
    const double r1 = 1.0 - g[1] / (y1 + bg[1]);
    double d0 = 0.0, d1 = 0.0;
    d0 += dense[0] * r0;
    d0 += dense[2] * r1;
    d1 += dense[1] * r0;
    d1 += dense[3] * r1;
    auto pair_grad = [&](double fj, double fk) {
      const double d = fj - fk;
      const double den = fj + fk + gr * std::abs(d) + eps;
      return 2.0 * d * (gr * std::abs(d) + fj + 3.0 * fk + 2.0 * eps) / (den * den);
    };
    double q0 = 0.0, q1 = 0.0;
    q0 += pair_grad(f[0], f[1]);
    q1 += pair_grad(f[1], f[0]);
    const double w = beta / 1.0;
    const double grad0 = d0 + w * q0, grad1 = d1 + w * q1;
    double c0 = 0.0, c1 = 0.0;  // column sums
    c0 += dense[0] * 1.0;
    c0 += dense[2] * 1.0;
    c1 += dense[1] * 1.0;
    c1 += dense[3] * 1.0;
    const double s0 = f[0] / (c0 / 1.0), s1 = f[1] / (c1 / 1.0);
    const double lambda = 1.0;
    double e0 = f[0] - lambda * alpha * s0 * grad0;
    double e1 = f[1] - lambda * alpha * s1 * grad1;
    e0 = std::clamp(e0, cfg.t, u - cfg.t);
    e1 = std::clamp(e1, cfg.t, u - cfg.t);
    CHECK(st.f[0] == e0);
    CHECK(st.f[1] == e1);
  }
}

TEST_CASE("one subset, no prior: preconditioned gradient descent") {
  const auto g = testing::tiny_geometry();
  auto t = testing::toy_problem(g);
  Objective obj(t.a, t.counts, t.background, ModelParams{0.0}, partition_subsets(g, 1));
  const auto dense = t.a->forward.to_dense();
  const std::size_t p = t.a->rows(), q = t.a->cols();
  const double u = 100.0, tt = 1e-4;
  const std::vector<double> f0(q, 1.0);
  SdpBsrem solver(obj, algorithm(Variant::Identity, 1, 0.1, u), f0);
  auto st = solver.initial_state(f0);

  std::vector<double> col(q, 0.0);
  for (std::size_t b = 0; b < p; ++b)
    for (std::size_t j = 0; j < q; ++j) col[j] += dense[b * q + j];
  std::vector<double> f = f0;
  for (std::size_t k = 0; k < 30; ++k) {
    std::vector<double> ratio(p);
    for (std::size_t b = 0; b < p; ++b) {
      double y = 0.0;
      for (std::size_t j = 0; j < q; ++j) y += dense[b * q + j] * f[j];
      ratio[b] = 1.0 - t.counts[b] / (y + t.background[b]);
    }
    const double lambda = 1.0 / (0.1 * k + 1.0);
    std::vector<double> next(q);
    for (std::size_t j = 0; j < q; ++j) {
      double grad = 0.0;
      for (std::size_t b = 0; b < p; ++b) grad += dense[b * q + j] * ratio[b];
      const double s = (f[j] < u / 2 ? f[j] : u - f[j]) / (col[j] > 0 ? col[j] : 1.0);
      next[j] = std::clamp(f[j] - lambda * s * grad, tt, u - tt);
    }
    f = next;
    solver.subiterate(st, k, 1);
    for (std::size_t j = 0; j < q; ++j) CHECK(st.f[j] == doctest::Approx(f[j]).epsilon(1e-11));
  }
}

TEST_CASE("iterates stay in the interior band for every variant") {
  const auto g = testing::tiny_geometry(12, 12, 18);
  const auto obj = testing::toy_objective(g, 4, 0.2);
  const std::vector<double> f0(g.pixels(), 1.0);
  for (auto v : {Variant::Identity, Variant::P1, Variant::P2, Variant::M1, Variant::M2}) {
    auto cfg = algorithm(v, 4, 0.05);
    cfg.relaxation.lambda0 = 3.0;  // aggressive early steps exercise the projection
    SdpBsrem solver(obj, cfg, f0);
    const double u = solver.precond().upper_bound;
    double lo = 1e300, hi = -1e300;
    RunObserver obs;
    obs.on_subiteration = [&](const SubiterationView& view) {
      for (double x : view.f) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    };
    solver.run(solver.initial_state(f0), 30, obs);
    CHECK(lo >= cfg.t);
    CHECK(hi <= u - cfg.t);
  }
}

TEST_CASE("long run reaches a stationary point of S grad Phi") {
  const auto g = testing::tiny_geometry();
  const auto obj = testing::toy_objective(g, 1, 0.5);
  const std::vector<double> f0(g.pixels(), 1.0);
  auto cfg = algorithm(Variant::Identity, 1, 1e-3, 50.0);
  SdpBsrem solver(obj, cfg, f0);
  const auto st = solver.run(solver.initial_state(f0), 20000);
  CHECK(*std::min_element(st.f.begin(), st.f.end()) > 10 * cfg.t);  // interior minimiser
  const auto grad = obj.gradient(st.f);
  const auto s = base_precond_diag(st.f, 50.0, solver.precond().p);
  std::vector<double> sg(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j) sg[j] = s[j] * grad[j];
  CHECK(max_abs(sg) < 1e-6 * max_abs(obj.gradient(f0)));
}

TEST_CASE("numerical failure names the subiteration") {
  const auto g = testing::tiny_geometry();
  const auto obj = testing::toy_objective(g, 2, 0.1);
  const std::vector<double> f0(g.pixels(), 1.0);
  auto cfg = algorithm(Variant::Identity, 2, 0.1, 10.0);
  cfg.relaxation.lambda0 = 1e308;
  SdpBsrem solver(obj, cfg, f0);
  auto st = solver.initial_state(f0);
  try {
    solver.subiterate(st, 0, 1);
    FAIL("expected a numerical failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericalFailure);
    CHECK(std::string(e.what()).find("k=0, subiteration i=1") != std::string::npos);
  }
}

TEST_CASE("solver configuration checks") {
  const auto g = testing::tiny_geometry();
  const auto obj = testing::toy_objective(g, 2, 0.1);
  const std::vector<double> f0(g.pixels(), 1.0);
  CHECK_THROWS_AS(SdpBsrem(obj, algorithm(Variant::Identity, 4, 0.1, 10.0), f0), Error);
  auto bad_t = algorithm(Variant::Identity, 2, 0.1, 10.0);
  bad_t.t = 6.0;
  CHECK_THROWS_AS(SdpBsrem(obj, bad_t, f0), Error);
  auto bad_nu = algorithm(Variant::P1, 2, 0.1, 10.0);
  bad_nu.nu_min = 3.0;
  CHECK_THROWS_AS(SdpBsrem(obj, bad_nu, f0), Error);
  SdpBsrem ok(obj, algorithm(Variant::Identity, 2, 0.1), f0);
  CHECK(ok.precond().upper_bound >= 10.0);
  const auto est = os_em(obj, f0, 2);
  CHECK(ok.precond().upper_bound == 10.0 * std::max(1.0, *std::max_element(est.begin(), est.end())));
}

TEST_CASE("checkpoint round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sdpet_ckpt_test";
  std::filesystem::create_directories(dir);
  Checkpoint ck{400, 0xabcdef, 3, 4, uniform_vector(12, 0.0, 5.0, 8)};
  save_checkpoint(dir / "r.ckpt", ck);
  const auto back = load_checkpoint(dir / "r.ckpt");
  CHECK(back.iteration == 400);
  CHECK(back.config_hash == 0xabcdef);
  CHECK(back.rows == 3);
  CHECK(back.cols == 4);
  CHECK(back.image == ck.image);
  try {
    load_checkpoint(dir / "missing.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ReferenceMissing);
  }
  std::filesystem::remove_all(dir);
}
