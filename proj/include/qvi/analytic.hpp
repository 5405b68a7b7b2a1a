#pragma once

#include <functional>
#include <vector>

#include "qvi/fem.hpp"
#include "qvi/geom.hpp"
#include "qvi/mesh.hpp"

namespace qvi {

// ---------------------------------------------------------------------------
// Case (ii): Kim-model cylinder on the unit square, b_e monotone from 0.

/// Penetration depth d0(t) = b_e (1 + 0.5 b_e / B0).
double cylinder_penetration_depth(double t, double B0, double be_rate);

/// Magnetic field b(x,t) = -B0 + sqrt(B0^2 + 2 B0 [d0 - d(x)]_+), d = dist to boundary.
double cylinder_field_b(Vec2 x, double t, double B0, double be_rate);

/// w(x,t) = b(x,t) - b_e(t).
double cylinder_wstar(Vec2 x, double t, double B0, double be_rate);

/// Electric field, zero in the current-free core; per-region closed form in
/// the four penetration strips. Throws EvaluationError within 1e-12 of a
/// current discontinuity line.
Vec2 cylinder_field_e(Vec2 x, double t, double B0, double be_rate);

/// q = (e2, -e1); retries with a small inward nudge (1e-9 * h_hint) when x
/// falls on a discontinuity line.
Vec2 cylinder_qstar(Vec2 x, double t, double B0, double be_rate, double h_hint);

/// max over a sample grid of |curl e + db/dt| / |db_e/dt| by finite
/// differences, sampled away from the discontinuity lines.
double cylinder_faraday_residual(double t, double B0, double be_rate);

// ---------------------------------------------------------------------------
// Case (i): growing sandpile, radially symmetric configuration.

/// 1D radial oracle for the unregularized sandpile: explicit pouring with an
/// obstacle-aware critical-slope projection on a fine radial grid; the flux is
/// recovered from the exact mass balance 2 pi rho q = S(rho) - d/dt(mass within rho).
class SandpileRadialOracle {
  public:
    struct Config {
        double k0 = 0.4;
        double cone_height = 0.4; // w0 = max(cone_height - rho, 0)
        double source_radius = 0.2;
        double source_total = 1.0;
        double domain_radius = 1.0;
        int cells = 4000;
        double dt = 1e-4;
    };

    SandpileRadialOracle(const Config& cfg, double T, double t_flux);

    /// Pile height at |x| = rho at the final time T.
    double w_at(double rho) const;
    /// Radial flux magnitude at time t_flux.
    double q_at(double rho) const;

    double mass_added() const;
    const Config& config() const { return cfg_; }

  private:
    Config cfg_;
    double T_, t_flux_;
    std::vector<double> rho_;  // cell centres
    std::vector<double> wT_;   // profile at T
    std::vector<double> dwdt_; // time derivative at t_flux
    std::vector<double> cum_growth_; // prefix integral of dwdt * area

    friend struct SandpileOracleTester;
};

/// Self-convergence of the oracle: relative L1 distance between the profile at
/// (cells, dt) and (2*cells, dt/2); the spec requires < 0.02%.
struct SandpileOracleCheck {
    double dw_rel = 0.0;
    double dq_rel = 0.0;
};
SandpileOracleCheck sandpile_oracle_self_convergence(const SandpileRadialOracle::Config& cfg, double T, double t_flux);

// ---------------------------------------------------------------------------
// Case (iii): Bean-model thin film on the unit disc, b_e(t) = t, j_c = 1.

/// Flux front a(t) = R / cosh(b_e / (j_c/2)).
double thinfilm_front(double t);

/// Azimuthal sheet current J(rho, t) (signed; -j_c in the critical annulus).
double thinfilm_Jphi(double rho, double t);

/// Azimuthal electric field from the flux law (time derivative of the linked
/// flux through the circle of radius rho); zero in the shielded core.
double thinfilm_ephi(double rho, double t);

/// j*(x, t) and q*(x, t) as plane vector fields.
Vec2 thinfilm_jstar(Vec2 x, double t);
Vec2 thinfilm_qstar(Vec2 x, double t);

/// max |e_phi| over the shielded core relative to the annulus peak; a
/// consistency check of the closed-form current profile.
double thinfilm_core_leak(double t);

// ---------------------------------------------------------------------------
// Error metrics: relative L1 distances with centroid sampling of references.

double relative_l1_error(const CellField& num, const std::function<double(Vec2)>& ref);
double relative_l1_error(const CellVecField& num, const std::function<Vec2(Vec2)>& ref);

} // namespace qvi
