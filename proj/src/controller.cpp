#include "resilient_mfac/controller.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rmfac {

void ControllerGains::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) throw ValidationError(std::string("controller: ") + name + " must be positive");
  };
  positive(lambda, "lambda");
  positive(mu, "mu");
  positive(eps_norm, "eps_norm");
  positive(eps_input, "eps_input");
  if (!std::isfinite(eta) || !std::isfinite(rho)) throw ValidationError("controller: eta and rho must be finite");
  for (double g : l) {
    if (!std::isfinite(g)) throw ValidationError("controller: observer gains must be finite");
  }
}

std::vector<std::string> ControllerGains::range_warnings() const {
  std::vector<std::string> out;
  auto check = [&](double v, double lo, double hi, const std::string& name) {
    if (!(v > lo && v <= hi)) {
      std::ostringstream os;
      os << name << " = " << v << " is outside (" << lo << ", " << hi << "]";
      out.push_back(os.str());
    }
  };
  check(eta, 0.0, 1.0, "eta");
  check(rho, 0.0, 1.0, "rho");
  for (int i : {1, 2, 4, 5, 7, 8}) check(l_gain(i), 0.0, 1.0, "l" + std::to_string(i));
  for (int i : {3, 6}) check(l_gain(i), 1.0, 2.0, "l" + std::to_string(i));
  return out;
}

std::string to_string(ControllerVariant v) {
  return v == ControllerVariant::kProposed ? "proposed" : "baseline";
}

ControllerVariant parse_variant(const std::string& name) {
  if (name == "proposed") return ControllerVariant::kProposed;
  if (name == "baseline" || name == "baseline-mfac") return ControllerVariant::kBaseline;
  throw ValidationError("unknown controller variant '" + name + "' (expected proposed|baseline)");
}

PpjmEstimate PpjmEstimate::initial(const Mat& phi0) {
  return {phi0, phi0, phi0.array().sign().matrix()};
}

Vec dos_compensate(const Vec& xi_now, const Vec& xi_prev, const ChannelBits& h) {
  if (xi_now.size() != xi_prev.size() || xi_now.size() != h.size()) {
    throw std::invalid_argument("dos_compensate: dimension mismatch");
  }
  Vec chi = xi_prev;
  for (Eigen::Index m = 0; m < chi.size(); ++m) {
    if (h(m) != 0) chi(m) = xi_now(m);
  }
  return chi;
}

PpjmUpdate reset_ppjm(const PpjmEstimate& est, const Vec& du, const ControllerGains& gains) {
  bool fire = spectral_norm(est.phi_hat) < gains.eps_norm || du.norm() < gains.eps_input;
  if (!fire) {
    const auto signs = est.phi_hat.array().sign();
    fire = ((est.sign_ref.array() != 0.0) && (signs != est.sign_ref.array())).any();
  }
  PpjmUpdate out{est, fire};
  if (fire) out.estimate.phi_hat = est.phi_ref;
  return out;
}

PpjmUpdate update_ppjm(const PpjmEstimate& est, const Vec& dchi, const Vec& du_prev,
                       const ControllerGains& gains) {
  if (dchi.size() != est.phi_hat.rows() || du_prev.size() != est.phi_hat.cols()) {
    throw std::invalid_argument("update_ppjm: dimension mismatch");
  }
  PpjmEstimate next = est;
  const Vec innovation = dchi - est.phi_hat * du_prev;
  next.phi_hat += gains.rho * innovation * du_prev.transpose() / (gains.lambda + du_prev.squaredNorm());
  return reset_ppjm(next, du_prev, gains);
}

ObserverState ObserverState::zero(Eigen::Index dim) {
  return {Vec::Zero(dim), Vec::Zero(dim), Vec::Zero(dim), Vec::Zero(dim)};
}

ObserverState observer_step(const ObserverState& obs, const Mat& phi_hat, const Vec& du,
                            const Vec& chi_tilde, const ControllerGains& gains, Step k,
                            std::size_t agent) {
  const Vec predicted = phi_hat * du + obs.theta_hat;
  ObserverState next;
  next.chi_hat = obs.chi_hat + predicted + gains.l_gain(1) * obs.delta_hat +
                 gains.l_gain(2) * obs.d_hat + gains.l_gain(3) * chi_tilde;
  next.theta_hat = obs.theta_hat + gains.l_gain(4) * obs.d_hat + gains.l_gain(5) * obs.delta_hat +
                   gains.l_gain(6) * chi_tilde;
  next.d_hat = obs.d_hat + gains.l_gain(7) * predicted;
  next.delta_hat = obs.delta_hat + gains.l_gain(8) * predicted;
  if (!next.chi_hat.allFinite() || !next.theta_hat.allFinite() || !next.d_hat.allFinite() ||
      !next.delta_hat.allFinite()) {
    throw DivergenceFault("observer state is not finite at step " + std::to_string(k) +
                              " on agent " + std::to_string(agent + 1),
                          k, agent);
  }
  return next;
}

namespace {

double step_scale(const Mat& phi_hat, double eta, double mu) {
  const double norm = spectral_norm(phi_hat);
  return eta / (mu + norm * norm);
}

}  // namespace

Vec control_update(const Vec& u_prev, const Mat& phi_hat, const Vec& chi_hat, const Vec& chi_tilde,
                   const Vec& delta_hat, const Vec& d_hat, const ControllerGains& gains) {
  const double scale = step_scale(phi_hat, gains.eta, gains.mu);
  const Vec tracking = chi_hat + gains.l_gain(3) * chi_tilde;
  const Vec attack = gains.l_gain(1) * delta_hat + gains.l_gain(2) * d_hat;
  return u_prev - scale * (phi_hat.transpose() * tracking) - scale * (phi_hat.transpose() * attack);
}

Vec baseline_mfac_update(const Vec& u_prev, const Mat& phi_hat, const Vec& chi,
                         const ControllerGains& gains) {
  return u_prev - step_scale(phi_hat, gains.eta, gains.mu) * (phi_hat.transpose() * chi);
}

GammaDiagnostics gamma_matrix(const Mat& phi_hat, double eta, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("gamma_matrix: mu must be positive");
  GammaDiagnostics out;
  const Eigen::Index n = phi_hat.rows();
  const double norm = spectral_norm(phi_hat);
  const double denom = mu + norm * norm;
  out.gamma = Mat::Identity(n, n) - eta * phi_hat * phi_hat.transpose() / denom;

  Eigen::SelfAdjointEigenSolver<Mat> eig(out.gamma, Eigen::EigenvaluesOnly);
  out.spectral_radius = eig.eigenvalues().cwiseAbs().maxCoeff();

  // Along left singular vector j, gamma acts as 1 - eta sigma_j^2 / denom.
  Eigen::JacobiSVD<Mat> svd(phi_hat);
  const auto& sigma = svd.singularValues();
  const double tol = sigma.size() > 0 ? 1e-12 * std::max(1.0, sigma(0)) : 0.0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    if (sigma(j) > tol) {
      out.range_radius = std::max(out.range_radius, std::abs(1.0 - eta * sigma(j) * sigma(j) / denom));
    }
  }
  return out;
}

AgentController::AgentController(ControllerVariant variant, ControllerGains gains, const Mat& phi0)
    : variant_(variant),
      gains_(gains),
      estimate_(PpjmEstimate::initial(phi0)),
      observer_(ObserverState::zero(phi0.rows())),
      chi_prev_(Vec::Zero(phi0.rows())),
      u_prev_(Vec::Zero(phi0.cols())),
      du_prev_(Vec::Zero(phi0.cols())) {
  gains_.validate();
}

namespace {

void guard(const Vec& v, const char* what, Step k, std::size_t agent) {
  if (!v.allFinite() || (v.size() > 0 && v.cwiseAbs().maxCoeff() > kDivergenceBound)) {
    throw DivergenceFault(std::string(what) + " diverged at step " + std::to_string(k) + " on agent " +
                              std::to_string(agent + 1),
                          k, agent);
  }
}

}  // namespace

ControlOutput AgentController::step(const Vec& xi_received, const ChannelBits& available, Step k,
                                    std::size_t agent) {
  ControlOutput out;
  out.chi = dos_compensate(xi_received, chi_prev_, available);
  guard(out.chi, "consensus error", k, agent);

  const bool proposed = variant_ == ControllerVariant::kProposed;
  if (!started_ && proposed) observer_.chi_hat = out.chi;
  started_ = true;
  const Vec chi_tilde = proposed ? Vec(out.chi - observer_.chi_hat) : Vec::Zero(out.chi.size());

  const PpjmUpdate update = update_ppjm(estimate_, out.chi - chi_prev_, du_prev_, gains_);
  estimate_ = update.estimate;
  out.reset = update.reset;

  const Mat& phi = estimate_.phi_hat;
  out.u = proposed ? control_update(u_prev_, phi, observer_.chi_hat, chi_tilde, observer_.delta_hat,
                                    observer_.d_hat, gains_)
                   : baseline_mfac_update(u_prev_, phi, out.chi, gains_);
  guard(out.u, "control input", k, agent);

  out.chi_hat = observer_.chi_hat;
  out.chi_tilde = chi_tilde;
  out.theta_hat = observer_.theta_hat;
  out.d_hat = observer_.d_hat;
  out.delta_hat = observer_.delta_hat;
  out.phi_hat = phi;
  out.phi_norm = spectral_norm(phi);
  out.gamma_radius = gamma_matrix(phi, gains_.eta, gains_.mu).spectral_radius;

  const Vec du = out.u - u_prev_;
  if (proposed) {
    observer_ = observer_step(observer_, phi, du, chi_tilde, gains_, k, agent);
    guard(observer_.chi_hat, "observer estimate", k, agent);
    guard(observer_.theta_hat, "observer estimate", k, agent);
    guard(observer_.d_hat, "observer estimate", k, agent);
    guard(observer_.delta_hat, "observer estimate", k, agent);
  }
  chi_prev_ = out.chi;
  du_prev_ = du;
  u_prev_ = out.u;
  return out;
}

}  // namespace rmfac
