#include "oracles.hpp"
#include "resilient_mfac/controller.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace rmfac;
using Catch::Approx;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Mat m1(double a) { return Mat::Constant(1, 1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ControllerGains zero_l() {
  ControllerGains g;
  g.l.fill(0.0);
  return g;
}

Mat default_phi() {
  Mat p(2, 2);
  p << 1.0, 0.1, 0.1, 1.0;
  return p;
}

}  // namespace

TEST_CASE("gain validation and range warnings", "[controller]") {
  CHECK_NOTHROW(ControllerGains{}.validate());
  CHECK(ControllerGains{}.range_warnings().empty());
  ControllerGains g;
  g.lambda = 0.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = ControllerGains{};
  g.eta = NAN;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = ControllerGains{};
  g.l[2] = 0.5;
  const auto w = g.range_warnings();
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("l3") != std::string::npos);
  g = ControllerGains{};
  g.eta = 1.5;
  g.l[6] = 0.0;
  CHECK(g.range_warnings().size() == 2);
}

TEST_CASE("variant names", "[controller]") {
  CHECK(parse_variant("proposed") == ControllerVariant::kProposed);
  CHECK(parse_variant("baseline") == ControllerVariant::kBaseline);
  CHECK(parse_variant("baseline-mfac") == ControllerVariant::kBaseline);
  CHECK(parse_variant(to_string(ControllerVariant::kBaseline)) == ControllerVariant::kBaseline);
  CHECK_THROWS_AS(parse_variant("pid"), ValidationError);
}

TEST_CASE("dos_compensate examples", "[controller]") {
  const Vec now = v2(1, 2), prev = v2(9, 9);
  CHECK(dos_compensate(now, prev, ChannelBits::Ones(2)) == now);
  CHECK(dos_compensate(now, prev, ChannelBits::Zero(2)) == prev);
  ChannelBits h(2);
  h << 1, 0;
  CHECK(dos_compensate(now, prev, h) == v2(1, 9));
  // Absent channels may carry NaN; they are never read.
  CHECK(dos_compensate(v2(1, NAN), prev, h) == v2(1, 9));
  CHECK_THROWS_AS(dos_compensate(now, Vec::Zero(3), h), std::invalid_argument);
}

TEST_CASE("update_ppjm examples", "[controller]") {
  SECTION("zero innovation keeps the estimate") {
    const auto est = PpjmEstimate::initial(default_phi());
    const Vec du = v2(0.3, -0.2);
    const auto out = update_ppjm(est, default_phi() * du, du, ControllerGains{});
    CHECK(out.estimate.phi_hat.isApprox(default_phi(), 1e-15));
    CHECK_FALSE(out.reset);
  }
  SECTION("scalar hand evaluation") {
    ControllerGains g;
    g.rho = 1.0;
    g.lambda = 1.0;
    const auto out = update_ppjm(PpjmEstimate::initial(m1(1.0)), v1(2.0), v1(1.0), g);
    CHECK(out.estimate.phi_hat(0, 0) == 1.5);
  }
  SECTION("zero input change resets") {
    auto est = PpjmEstimate::initial(default_phi());
    est.phi_hat = default_phi() * 3.0;
    const auto out = update_ppjm(est, v2(5, 5), Vec::Zero(2), ControllerGains{});
    CHECK(out.reset);
    CHECK(out.estimate.phi_hat == default_phi());
  }
}

TEST_CASE("update_ppjm matches the entrywise formula", "[controller][property]") {
  oracle::Gen gen(4);
  for (int trial = 0; trial < 2000; ++trial) {
    ControllerGains g;
    g.rho = gen.uniform(0.01, 1.0);
    g.lambda = gen.uniform(0.1, 5.0);
    Mat phi(2, 2);
    phi << gen.uniform(0.5, 2), gen.uniform(0.05, 0.5), gen.uniform(0.05, 0.5), gen.uniform(0.5, 2);
    auto est = PpjmEstimate::initial(default_phi());
    est.phi_hat = phi;
    const Vec dchi = gen.vec(2, -0.1, 0.1), du = gen.vec(2, -0.1, 0.1);
    const auto out = update_ppjm(est, dchi, du, g);
    const Mat want = oracle::ppjm_step(phi, dchi, du, g.rho, g.lambda);
    if (!out.reset) CHECK((out.estimate.phi_hat - want).norm() <= 1e-14);
    else CHECK(out.estimate.phi_hat == default_phi());
  }
}

TEST_CASE("reset_ppjm conditions", "[controller]") {
  const ControllerGains g;
  const auto est0 = PpjmEstimate::initial(default_phi());
  const Vec du = v2(0.1, 0.1);

  auto healthy = est0;
  healthy.phi_hat = default_phi() * 1.7;
  auto out = reset_ppjm(healthy, du, g);
  CHECK_FALSE(out.reset);
  CHECK(out.estimate.phi_hat == healthy.phi_hat);

  auto flipped = est0;
  flipped.phi_hat(1, 1) = -0.4;
  out = reset_ppjm(flipped, du, g);
  CHECK(out.reset);
  CHECK(out.estimate.phi_hat == default_phi());

  auto off_diag = est0;
  off_diag.phi_hat(0, 1) = -0.01;
  CHECK(reset_ppjm(off_diag, du, g).reset);

  auto tiny = PpjmEstimate::initial(m1(1.0));
  tiny.phi_hat = m1(g.eps_norm / 2);
  out = reset_ppjm(tiny, v1(1.0), g);
  CHECK(out.reset);
  CHECK(out.estimate.phi_hat(0, 0) == 1.0);

  CHECK(reset_ppjm(healthy, v2(1e-6, 0), g).reset);

  // Zero reference entries carry no sign constraint.
  auto diag_ref = PpjmEstimate::initial(Mat::Identity(2, 2));
  diag_ref.phi_hat(0, 1) = -0.3;
  CHECK_FALSE(reset_ppjm(diag_ref, du, g).reset);
}

TEST_CASE("after reset evaluation the estimate is healthy or the reference", "[controller][property]") {
  oracle::Gen gen(12);
  const ControllerGains g;
  for (int trial = 0; trial < 3000; ++trial) {
    auto est = PpjmEstimate::initial(default_phi());
    est.phi_hat = Mat(2, 2);
    for (auto& x : est.phi_hat.reshaped()) x = gen.uniform(-1e-4, 2.0);
    const Vec du = gen.vec(2, -1e-4, 1e-4);
    const auto out = reset_ppjm(est, du, g);
    CHECK((spectral_norm(out.estimate.phi_hat) >= g.eps_norm || out.estimate.phi_hat == est.phi_ref));
  }
}

TEST_CASE("observer_step examples", "[controller]") {
  SECTION("zero state is a fixed point") {
    const auto next = observer_step(ObserverState::zero(2), default_phi(), Vec::Zero(2), Vec::Zero(2), ControllerGains{});
    CHECK(next.chi_hat.isZero(0.0));
    CHECK(next.theta_hat.isZero(0.0));
    CHECK(next.d_hat.isZero(0.0));
    CHECK(next.delta_hat.isZero(0.0));
  }
  SECTION("prediction feeds chi_hat and both attack estimates") {
    auto g = zero_l();
    g.l[6] = 0.5;
    g.l[7] = 0.2;
    auto obs = ObserverState::zero(1);
    obs.chi_hat = v1(0.25);
    obs.theta_hat = v1(0.5);
    const auto next = observer_step(obs, m1(1.0), v1(1.0), v1(0.0), g);
    CHECK(next.chi_hat(0) == 0.25 + 1.5);
    CHECK(next.d_hat(0) == 0.75);
    CHECK(next.delta_hat(0) == Approx(0.2 * 1.5));
  }
  SECTION("innovation feeds chi_hat and theta_hat") {
    auto g = zero_l();
    g.l[2] = 1.5;
    g.l[5] = 1.5;
    const auto next = observer_step(ObserverState::zero(1), m1(1.0), v1(0.0), v1(1.0), g);
    CHECK(next.chi_hat(0) == 1.5);
    CHECK(next.theta_hat(0) == 1.5);
  }
  SECTION("l1 scales the FDI estimate and l2 the disturbance estimate") {
    auto g = zero_l();
    g.l[0] = 0.3;
    g.l[1] = 0.7;
    g.l[3] = 0.11;
    g.l[4] = 0.13;
    auto obs = ObserverState::zero(1);
    obs.delta_hat = v1(1.0);
    obs.d_hat = v1(2.0);
    const auto next = observer_step(obs, m1(1.0), v1(0.0), v1(0.0), g);
    CHECK(next.chi_hat(0) == Approx(0.3 * 1.0 + 0.7 * 2.0));
    CHECK(next.theta_hat(0) == Approx(0.11 * 2.0 + 0.13 * 1.0));
  }
  SECTION("non-finite state faults") {
    auto obs = ObserverState::zero(1);
    obs.theta_hat = v1(INFINITY);
    CHECK_THROWS_AS(observer_step(obs, m1(1.0), v1(0.0), v1(0.0), ControllerGains{}, 9, 2), DivergenceFault);
  }
}

TEST_CASE("control_update examples", "[controller]") {
  const Vec u_prev = v2(0.4, -0.2);
  CHECK(control_update(u_prev, default_phi(), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), ControllerGains{}) ==
        u_prev);
  ControllerGains still;
  still.eta = 0.0;
  CHECK(control_update(u_prev, default_phi(), v2(1, 2), v2(3, 4), v2(1, 1), v2(1, 1), still) == u_prev);

  ControllerGains g;
  g.eta = 1.0;
  g.mu = 1.0;
  CHECK(control_update(v1(0.0), m1(1.0), v1(1.0), v1(0.0), v1(0.0), v1(0.0), g)(0) == -0.5);
}

TEST_CASE("control_update is unchanged when both error groups cancel", "[controller][property]") {
  oracle::Gen gen(21);
  for (int trial = 0; trial < 1000; ++trial) {
    ControllerGains g;
    g.l[2] = gen.uniform(1.0, 2.0);
    g.l[0] = gen.uniform(0.1, 1.0);
    g.l[1] = gen.uniform(0.1, 1.0);
    const Vec chi_tilde = gen.vec(2, -3, 3);
    const Vec chi_hat = -g.l_gain(3) * chi_tilde;
    const Vec d_hat = gen.vec(2, -3, 3);
    const Vec delta_hat = -g.l_gain(2) / g.l_gain(1) * d_hat;
    const Vec u_prev = gen.vec(2, -5, 5);
    const Vec u = control_update(u_prev, default_phi(), chi_hat, chi_tilde, delta_hat, d_hat, g);
    CHECK((u - u_prev).norm() <= 1e-13);
  }
}

TEST_CASE("baseline update", "[controller]") {
  const ControllerGains g0;
  CHECK(baseline_mfac_update(v2(1, 2), default_phi(), Vec::Zero(2), g0) == v2(1, 2));
  ControllerGains g;
  g.eta = 1.0;
  CHECK(baseline_mfac_update(v1(0.0), m1(1.0), v1(1.0), g)(0) == -0.5);

  // With observers zeroed and l1 = l2 = l3 = 0 both laws coincide.
  oracle::Gen gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    auto z = zero_l();
    z.eta = gen.uniform(0.01, 1.0);
    const Vec chi = gen.vec(2, -2, 2), u_prev = gen.vec(2, -2, 2);
    const Vec a = control_update(u_prev, default_phi(), chi, gen.vec(2, -1, 1), gen.vec(2, -1, 1), gen.vec(2, -1, 1), z);
    const Vec b = baseline_mfac_update(u_prev, default_phi(), chi, z);
    CHECK((a - b).norm() <= 1e-15);
  }
}

TEST_CASE("gamma_matrix examples", "[controller]") {
  const auto id = gamma_matrix(default_phi(), 0.0, 1.0);
  CHECK(id.gamma.isApprox(Mat::Identity(2, 2)));
  CHECK(id.spectral_radius == Approx(1.0));
  const auto s = gamma_matrix(m1(1.0), 1.0, 1.0);
  CHECK(s.gamma(0, 0) == 0.5);
  CHECK(s.spectral_radius == 0.5);
  CHECK(s.range_radius == 0.5);
  CHECK(gamma_matrix(Mat::Zero(2, 2), 0.5, 1.0).range_radius == 0.0);
  CHECK_THROWS_AS(gamma_matrix(m1(1.0), 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("gamma eigenvalues lie in (0, 1] with contraction on the range", "[controller][property]") {
  oracle::Gen gen(77);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto ny = gen.integer(1, 3), nu = gen.integer(1, 3);
    Mat phi(ny, nu);
    for (auto& x : phi.reshaped()) x = gen.uniform(-3, 3);
    const double eta = gen.uniform(1e-3, 1.0), mu = gen.uniform(1e-3, 5.0);
    const auto d = gamma_matrix(phi, eta, mu);
    Eigen::SelfAdjointEigenSolver<Mat> eig(d.gamma);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(eig.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    if (spectral_norm(phi) >= 1e-5) CHECK(d.range_radius < 1.0);
  }
}

TEST_CASE("estimator contraction spectrum", "[controller][property]") {
  oracle::Gen gen(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto nu = gen.integer(1, 4);
    const Vec du = gen.vec(nu, -2, 2);
    const double rho = gen.uniform(1e-3, 1.0), lambda = gen.uniform(1e-3, 5.0);
    const double sq = du.squaredNorm();
    const Mat m = Mat::Identity(nu, nu) - rho * du * du.transpose() / (lambda + sq);
    Eigen::SelfAdjointEigenSolver<Mat> eig(m);
    const auto ev = eig.eigenvalues();
    CHECK(ev.minCoeff() == Approx(1.0 - rho * sq / (lambda + sq)).margin(1e-12));
    if (nu > 1) CHECK(ev.maxCoeff() == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("agent controller without attacks uses the raw error", "[controller]") {
  AgentController ctl(ControllerVariant::kProposed, ControllerGains{}, default_phi());
  const auto first = ctl.step(v2(0.5, -0.25), ChannelBits::Ones(2), 0, 0);
  CHECK(first.chi == v2(0.5, -0.25));
  CHECK(first.chi_hat == first.chi);
  CHECK(first.chi_tilde.isZero(0.0));
  CHECK(first.reset);  // du(-1) = 0
  const auto second = ctl.step(v2(0.4, -0.2), ChannelBits::Ones(2), 1, 0);
  CHECK(second.chi == v2(0.4, -0.2));

  ChannelBits h(2);
  h << 0, 1;
  const auto held = ctl.step(v2(NAN, 0.1), h, 2, 0);
  CHECK(held.chi == v2(0.4, 0.1));
  CHECK(held.u.allFinite());
}

TEST_CASE("agent controller faults on runaway error", "[controller]") {
  AgentController ctl(ControllerVariant::kBaseline, ControllerGains{}, default_phi());
  CHECK_THROWS_AS(ctl.step(v2(2e12, 0), ChannelBits::Ones(2), 4, 1), DivergenceFault);
}
