#pragma once

#include "resilient_mfac/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace rmfac {

/// Step factors, weights, reset thresholds and observer gains l1..l8.
struct ControllerGains {
  double eta = 0.1;
  double rho = 0.1;
  double lambda = 1.0;
  double mu = 1.0;
  double eps_norm = 1e-5;   // reset when ||phi_hat|| < eps_norm
  double eps_input = 1e-5;  // reset when ||du|| < eps_input
  std::array<double, 8> l{0.1, 0.1, 1.2, 0.1, 0.1, 1.2, 0.05, 0.05};

  double l_gain(int index) const { return l.at(static_cast<std::size_t>(index - 1)); }

  /// Hard errors: lambda, mu, eps_norm, eps_input must be positive and every
  /// gain finite. Throws ValidationError.
  void validate() const;
  /// Soft checks against the stability ranges: eta, rho in (0,1];
  /// l1,l2,l4,l5,l7,l8 in (0,1]; l3,l6 in (1,2]. One message per violation.
  std::vector<std::string> range_warnings() const;
  bool operator==(const ControllerGains&) const = default;
};

enum class ControllerVariant { kProposed, kBaseline };

std::string to_string(ControllerVariant v);
ControllerVariant parse_variant(const std::string& name);

/// Online PPJM estimate with its reset target and reference sign pattern.
struct PpjmEstimate {
  Mat phi_hat;
  Mat phi_ref;   // reset target, the first estimate
  Mat sign_ref;  // sign pattern of the initial estimate

  static PpjmEstimate initial(const Mat& phi0);
};

struct PpjmUpdate {
  PpjmEstimate estimate;
  bool reset = false;
};

/// Zero-order hold of denied channels: chi_m = h_m ? xi_now_m : xi_prev_m.
Vec dos_compensate(const Vec& xi_now, const Vec& xi_prev, const ChannelBits& h);

/// Resets phi_hat to phi_ref when ||phi_hat|| < eps_norm, ||du|| < eps_input,
/// or any entry's sign differs from the reference pattern. Reference entries
/// that are exactly zero carry no sign constraint.
PpjmUpdate reset_ppjm(const PpjmEstimate& est, const Vec& du, const ControllerGains& gains);

/// phi <- phi + rho (dchi - phi du) du^T / (lambda + ||du||^2), then reset_ppjm
/// with the same du.
PpjmUpdate update_ppjm(const PpjmEstimate& est, const Vec& dchi, const Vec& du_prev,
                       const ControllerGains& gains);

struct ObserverState {
  Vec chi_hat;
  Vec theta_hat;
  Vec d_hat;
  Vec delta_hat;

  static ObserverState zero(Eigen::Index dim);
};

/// Synchronous observer-group update; all right-hand sides use step-k values.
///   chi_hat+   = chi_hat + (phi du + theta_hat) + l1 delta_hat + l2 d_hat + l3 chi_tilde
///   theta_hat+ = theta_hat + l4 d_hat + l5 delta_hat + l6 chi_tilde
///   d_hat+     = d_hat + l7 (phi du + theta_hat)
///   delta_hat+ = delta_hat + l8 (phi du + theta_hat)
/// Throws DivergenceFault on a non-finite result.
ObserverState observer_step(const ObserverState& obs, const Mat& phi_hat, const Vec& du,
                            const Vec& chi_tilde, const ControllerGains& gains, Step k = 0,
                            std::size_t agent = 0);

/// u(k) = u(k-1) - eta phi^T (chi_hat + l3 chi_tilde + l1 delta_hat + l2 d_hat) / (mu + ||phi||^2)
Vec control_update(const Vec& u_prev, const Mat& phi_hat, const Vec& chi_hat, const Vec& chi_tilde,
                   const Vec& delta_hat, const Vec& d_hat, const ControllerGains& gains);

/// Conventional MFAC: u(k) = u(k-1) - eta phi^T chi / (mu + ||phi||^2).
Vec baseline_mfac_update(const Vec& u_prev, const Mat& phi_hat, const Vec& chi,
                         const ControllerGains& gains);

struct GammaDiagnostics {
  Mat gamma;
  double spectral_radius = 0.0;
  /// Largest eigenvalue of gamma along the column space of phi_hat (zero when
  /// phi_hat vanishes).
  double range_radius = 0.0;
};

/// gamma = I - eta phi phi^T / (mu + ||phi||^2).
GammaDiagnostics gamma_matrix(const Mat& phi_hat, double eta, double mu);

/// Everything one agent's controller produced at one step.
struct ControlOutput {
  Vec u;
  Vec chi;
  Vec chi_hat;
  Vec chi_tilde;
  Vec theta_hat;
  Vec d_hat;
  Vec delta_hat;
  Mat phi_hat;
  double phi_norm = 0.0;
  double gamma_radius = 0.0;
  bool reset = false;
};

/// Per-agent controller state machine running the estimator, observers and
/// control law in a fixed order. Owns no references to other agents.
class AgentController {
 public:
  AgentController(ControllerVariant variant, ControllerGains gains, const Mat& phi0);

  /// One tick given the received neighbourhood error and its per-channel
  /// availability. Channels with available == 0 are ignored (may be NaN).
  /// Throws DivergenceFault when any state leaves [-1e12, 1e12].
  ControlOutput step(const Vec& xi_received, const ChannelBits& available, Step k,
                     std::size_t agent);

  ControllerVariant variant() const { return variant_; }
  const ControllerGains& gains() const { return gains_; }

 private:
  ControllerVariant variant_;
  ControllerGains gains_;
  PpjmEstimate estimate_;
  ObserverState observer_;
  Vec chi_prev_;
  Vec u_prev_;
  Vec du_prev_;
  bool started_ = false;
};

inline constexpr double kDivergenceBound = 1e12;

}  // namespace rmfac
