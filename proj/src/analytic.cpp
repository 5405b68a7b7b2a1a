#include "qvi/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "qvi/errors.hpp"
#include "qvi/quadrature.hpp"

namespace qvi {

// ---------------------------------------------------------------------------
// Cylinder (case ii)

double cylinder_penetration_depth(double t, double B0, double be_rate) {
    const double be = be_rate * t;
    return be * (1.0 + 0.5 * be / B0);
}

double cylinder_field_b(Vec2 x, double t, double B0, double be_rate) {
    const double d = std::min(std::min(x.x, 1.0 - x.x), std::min(x.y, 1.0 - x.y));
    const double d0 = cylinder_penetration_depth(t, B0, be_rate);
    return -B0 + std::sqrt(B0 * B0 + 2.0 * B0 * std::max(d0 - d, 0.0));
}

double cylinder_wstar(Vec2 x, double t, double B0, double be_rate) {
    return cylinder_field_b(x, t, B0, be_rate) - be_rate * t;
}

namespace {

inline double gfun(double xi, double d0, double B0) {
    return std::sqrt(B0 * B0 + 2.0 * B0 * std::max(d0 - xi, 0.0));
}

} // namespace

Vec2 cylinder_field_e(Vec2 x, double t, double B0, double be_rate) {
    const double be = be_rate * t;
    const double d0 = cylinder_penetration_depth(t, B0, be_rate);
    const double dists[4] = {x.y, x.x, 1.0 - x.y, 1.0 - x.x}; // bottom, left, top, right
    const double d = std::min(std::min(dists[0], dists[1]), std::min(dists[2], dists[3]));
    if (d >= d0) return {0.0, 0.0}; // current-free core

    // the four strips meet along the corner diagonals: ties are discontinuity lines
    int side = 0;
    for (int k = 1; k < 4; ++k)
        if (dists[k] < dists[side]) side = k;
    for (int k = 0; k < 4; ++k)
        if (k != side && std::abs(dists[k] - dists[side]) < 1e-12)
            throw EvaluationError("cylinder_field_e: point on a current discontinuity line");

    const double d0p = be_rate * (1.0 + be / B0); // d/dt d0
    if (side == 0) { // bottom strip, e = (e1, 0)
        const double s = std::min(std::min(x.x, 1.0 - x.x), d0);
        return {(gfun(s, d0, B0) - gfun(x.y, d0, B0)) * d0p, 0.0};
    }
    if (side == 2) { // top strip
        const double s = std::min(std::min(x.x, 1.0 - x.x), d0);
        return {(gfun(1.0 - x.y, d0, B0) - gfun(s, d0, B0)) * d0p, 0.0};
    }
    if (side == 1) { // left strip, e = (0, e2)
        const double s = std::min(std::min(x.y, 1.0 - x.y), d0);
        return {0.0, (gfun(x.x, d0, B0) - gfun(s, d0, B0)) * d0p};
    }
    const double s = std::min(std::min(x.y, 1.0 - x.y), d0); // right strip
    return {0.0, -(gfun(1.0 - x.x, d0, B0) - gfun(s, d0, B0)) * d0p};
}

Vec2 cylinder_qstar(Vec2 x, double t, double B0, double be_rate, double h_hint) {
    const Vec2 x0 = x;
    for (int attempt = 0; attempt < 4; ++attempt) {
        try {
            const Vec2 e = cylinder_field_e(x, t, B0, be_rate);
            return {e.y, -e.x};
        } catch (const EvaluationError&) {
            // nudge inward; rotate the direction on retries so points sitting on
            // a corner diagonal do not slide along it
            Vec2 dir = Vec2{0.5, 0.5} - x0;
            const double n = dir.norm();
            dir = (n > 0.0) ? dir / n : Vec2{1.0, 0.0};
            const double ang = 0.5 * attempt;
            const Vec2 rot{dir.x * std::cos(ang) - dir.y * std::sin(ang),
                           dir.x * std::sin(ang) + dir.y * std::cos(ang)};
            x = x0 + rot * (1e-9 * std::max(h_hint, 1e-6));
        }
    }
    throw EvaluationError("cylinder_qstar: could not move off the discontinuity line");
}

double cylinder_faraday_residual(double t, double B0, double be_rate) {
    const double d0 = cylinder_penetration_depth(t, B0, be_rate);
    const double hs = 1e-6, ht = 1e-6;
    double worst = 0.0;
    const int N = 60;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const Vec2 x{(i + 0.5) / N, (j + 0.5) / N};
            const double dists[4] = {x.y, x.x, 1.0 - x.y, 1.0 - x.x};
            double d1 = 1e9, d2 = 1e9;
            for (double v : dists)
                if (v < d1) {
                    d2 = d1;
                    d1 = v;
                } else
                    d2 = std::min(d2, v);
            // stay inside one smooth region: away from diagonals and the front
            if (d2 - d1 < 1e-3 || std::abs(d1 - d0) < 1e-3) continue;
            auto e1 = [&](Vec2 p) { return cylinder_field_e(p, t, B0, be_rate).x; };
            auto e2 = [&](Vec2 p) { return cylinder_field_e(p, t, B0, be_rate).y; };
            const double curl = (e2({x.x + hs, x.y}) - e2({x.x - hs, x.y})) / (2 * hs) -
                                (e1({x.x, x.y + hs}) - e1({x.x, x.y - hs})) / (2 * hs);
            const double dbdt =
                (cylinder_field_b(x, t + ht, B0, be_rate) - cylinder_field_b(x, t - ht, B0, be_rate)) / (2 * ht);
            worst = std::max(worst, std::abs(curl + dbdt));
        }
    return worst / std::abs(be_rate);
}

// ---------------------------------------------------------------------------
// Sandpile radial oracle (case i)

namespace {

/// Critical-slope projection with the support obstacle: mass moves outward
/// only; maximal runs of covered cells level to pools of constant
/// phi = w + k0 rho; uncovered support cells act as walls until submerged,
/// and pools drain down to a wall lip but never below it.
class RadialPiler {
  public:
    RadialPiler(const SandpileRadialOracle::Config& cfg)
        : cfg_(cfg), M_(cfg.cells), drho_(cfg.domain_radius / cfg.cells) {
        rho_.resize(M_);
        area_.resize(M_);
        w0_.resize(M_);
        phi0_.resize(M_);
        w_.resize(M_);
        rate_.resize(M_);
        pm_.resize(M_ + 1, 0.0);
        par_.resize(M_ + 1, 0.0);
        pa_.resize(M_ + 1, 0.0);
        const double density = cfg.source_total / (M_PI * cfg.source_radius * cfg.source_radius);
        for (int i = 0; i < M_; ++i) {
            rho_[i] = (i + 0.5) * drho_;
            const double r0 = i * drho_, r1 = (i + 1) * drho_;
            area_[i] = M_PI * (r1 * r1 - r0 * r0);
            w0_[i] = std::max(cfg.cone_height - rho_[i], 0.0);
            phi0_[i] = w0_[i] + cfg.k0 * rho_[i];
            const double rs0 = std::min(r0, cfg.source_radius), rs1 = std::min(r1, cfg.source_radius);
            rate_[i] = density * M_PI * (rs1 * rs1 - rs0 * rs0) / area_[i];
            w_[i] = w0_[i];
        }
    }

    void step(double dt) {
        for (int i = 0; i < M_; ++i) w_[i] += dt * rate_[i];
        project();
    }

    const std::vector<double>& w() const { return w_; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<double>& area() const { return area_; }
    double drho() const { return drho_; }

  private:
    struct Pool {
        int lo, hi;
        double level; // phi = w + k0 rho, constant over the pool
    };

    double range_level(int lo, int hi, double extra_mass) const {
        // level L with w_i = L - k0 rho_i carrying the range's mass
        const double mass = pm_[hi + 1] - pm_[lo] + extra_mass;
        const double ar = par_[hi + 1] - par_[lo];
        const double a = pa_[hi + 1] - pa_[lo];
        return (mass + cfg_.k0 * ar) / a;
    }
    double mass_at_level(int lo, int hi, double L) const {
        const double ar = par_[hi + 1] - par_[lo];
        const double a = pa_[hi + 1] - pa_[lo];
        return L * a - cfg_.k0 * ar;
    }

    // highest interior support point of [lo,hi] poking above L, or -1
    int find_breach(int lo, int hi, double L) const {
        int k = -1;
        double best = L + 1e-13;
        for (int i = lo; i <= hi; ++i)
            if (phi0_[i] > best) {
                best = phi0_[i];
                k = i;
            }
        return k;
    }

    void emit(std::vector<Pool>& out, int lo, int hi, double extra_mass) {
        // place the range's own mass plus extra_mass poured from the left,
        // splitting at support cells that stand above the pool level
        if (lo > hi) return;
        double L = range_level(lo, hi, extra_mass);
        const int k = find_breach(lo, hi, L);
        if (k < 0) {
            out.push_back({lo, hi, L});
            return;
        }
        // wall at k: left side drains to the lip, remainder flows right
        if (k == lo) {
            // the wall keeps its own height; everything extra flows right
            out.push_back({lo, lo, phi0_[lo]});
            const double own = pm_[lo + 1] - pm_[lo];
            const double keep = phi0_[lo] * pa(lo) - cfg_.k0 * par(lo);
            emit(out, lo + 1, hi, extra_mass + own - keep);
            return;
        }
        const double lip = phi0_[k];
        const double left_mass_cap = mass_at_level(lo, k - 1, lip);
        const double left_own = pm_[k] - pm_[lo] + extra_mass;
        const double wall_excess = (pm_[k + 1] - pm_[k]) - (phi0_[k] * pa(k) - cfg_.k0 * par(k));
        if (left_own <= left_mass_cap + 1e-15 * std::max(1.0, left_mass_cap)) {
            // no spill over the wall: level the left side alone; the wall cell
            // sheds anything it carried above its support to the right
            emit(out, lo, k - 1, extra_mass);
            out.push_back({k, k, phi0_[k]});
            emit(out, k + 1, hi, std::max(wall_excess, 0.0));
        } else {
            emit(out, lo, k - 1, left_mass_cap - (pm_[k] - pm_[lo])); // pins the left side at the lip
            out.push_back({k, k, phi0_[k]});
            emit(out, k + 1, hi, (left_own - left_mass_cap) + std::max(wall_excess, 0.0));
        }
    }

    double pa(int i) const { return pa_[i + 1] - pa_[i]; }
    double par(int i) const { return par_[i + 1] - par_[i]; }

    void project() {
        for (int i = 0; i < M_; ++i) {
            pm_[i + 1] = pm_[i] + area_[i] * w_[i];
            par_[i + 1] = par_[i] + area_[i] * rho_[i];
            pa_[i + 1] = pa_[i] + area_[i];
        }
        // stack of pools with strictly increasing levels; uncovered cells are
        // their own pools sitting at phi0
        std::vector<Pool> stack;
        for (int i = 0; i < M_; ++i) {
            Pool cur{i, i, w_[i] + cfg_.k0 * rho_[i]};
            // merge while the previous pool is higher (supercritical descending)
            while (!stack.empty() && stack.back().level > cur.level + 1e-15) {
                const Pool& prev = stack.back();
                // a previous single-cell pool resting exactly on the support is
                // a wall: it blocks unless the merged level would submerge it
                const double Lm = range_level(prev.lo, cur.hi, 0.0);
                const bool prev_is_wall = (prev.lo == prev.hi) && (prev.level <= phi0_[prev.lo] + 1e-15);
                if (prev_is_wall && Lm < phi0_[prev.lo] - 1e-15) break;
                cur.lo = prev.lo;
                cur.level = Lm;
                stack.pop_back();
            }
            stack.push_back(cur);
        }
        // resolve interior breaches (a merged pool dropping below an absorbed
        // support summit) and write back heights
        std::vector<Pool> pools;
        for (const Pool& p : stack) {
            if (p.lo == p.hi && p.level <= phi0_[p.lo] + 1e-15) {
                pools.push_back(p);
                continue;
            }
            emit(pools, p.lo, p.hi, 0.0);
        }
        for (const Pool& p : pools)
            for (int i = p.lo; i <= p.hi; ++i) w_[i] = std::max(p.level - cfg_.k0 * rho_[i], w0_[i]);
    }

    SandpileRadialOracle::Config cfg_;
    int M_;
    double drho_;
    std::vector<double> rho_, area_, w0_, phi0_, w_, rate_;
    std::vector<double> pm_, par_, pa_; // prefix sums of mass, area*rho, area
};

} // namespace

SandpileRadialOracle::SandpileRadialOracle(const Config& cfg, double T, double t_flux)
    : cfg_(cfg), T_(T), t_flux_(t_flux) {
    if (!(t_flux > 0.0) || !(t_flux < T)) throw ConfigError("sandpile oracle: need 0 < t_flux < T");
    RadialPiler piler(cfg);
    const double dt = cfg.dt;
    const double dt_fd = std::min(0.25 * (T - t_flux), 100.0 * dt);
    const int n_steps = static_cast<int>(std::llround(T / dt));

    std::vector<double> w_lo, w_hi;
    double t_lo = 0.0, t_hi = 0.0;
    for (int s = 0; s < n_steps; ++s) {
        piler.step(dt);
        const double t = (s + 1) * dt;
        if (w_lo.empty() && t >= t_flux - dt_fd - 0.5 * dt) {
            w_lo = piler.w();
            t_lo = t;
        }
        if (w_hi.empty() && t >= t_flux + dt_fd - 0.5 * dt) {
            w_hi = piler.w();
            t_hi = t;
        }
    }
    wT_ = piler.w();
    rho_ = piler.rho();
    if (w_lo.empty() || w_hi.empty() || !(t_hi > t_lo))
        throw ConfigError("sandpile oracle: dt too coarse for the flux snapshot");

    const int M = static_cast<int>(rho_.size());
    dwdt_.resize(M);
    cum_growth_.resize(M + 1, 0.0);
    for (int i = 0; i < M; ++i) {
        dwdt_[i] = (w_hi[i] - w_lo[i]) / (t_hi - t_lo);
        cum_growth_[i + 1] = cum_growth_[i] + piler.area()[i] * dwdt_[i];
    }
}

double SandpileRadialOracle::w_at(double rho) const {
    const int M = static_cast<int>(rho_.size());
    const double drho = rho_[1] - rho_[0];
    if (rho <= rho_[0]) {
        // quadratic-free extrapolation: the apex region keeps the support cone
        return wT_[0] + (rho_[0] - rho) * (wT_[0] - wT_[1]) / drho;
    }
    if (rho >= rho_[M - 1]) return wT_[M - 1];
    const int i = static_cast<int>((rho - rho_[0]) / drho);
    const int j = std::min(i + 1, M - 1);
    const double s = (rho - rho_[i]) / drho;
    return (1.0 - s) * wT_[i] + s * wT_[j];
}

double SandpileRadialOracle::q_at(double rho) const {
    if (rho <= 0.0) return 0.0;
    const int M = static_cast<int>(rho_.size());
    const double drho = rho_[1] - rho_[0];
    const double rs = cfg_.source_radius;
    const double S = cfg_.source_total * std::min(rho * rho, rs * rs) / (rs * rs);
    // growth integral up to rho: whole cells plus the straddling fraction
    const int full = std::min(static_cast<int>(rho / drho), M);
    double G = cum_growth_[full];
    if (full < M) {
        const double r0 = full * drho;
        G += dwdt_[full] * M_PI * (rho * rho - r0 * r0);
    }
    return (S - G) / (2.0 * M_PI * rho);
}

double SandpileRadialOracle::mass_added() const {
    double m = 0.0;
    const double drho = rho_[1] - rho_[0];
    for (std::size_t i = 0; i < rho_.size(); ++i) {
        const double r0 = i * drho, r1 = (i + 1) * drho;
        const double w0 = std::max(cfg_.cone_height - rho_[i], 0.0);
        m += (wT_[i] - w0) * M_PI * (r1 * r1 - r0 * r0);
    }
    return m;
}

SandpileOracleCheck sandpile_oracle_self_convergence(const SandpileRadialOracle::Config& cfg, double T,
                                                     double t_flux) {
    SandpileRadialOracle coarse(cfg, T, t_flux);
    SandpileRadialOracle::Config fine_cfg = cfg;
    fine_cfg.cells *= 2;
    fine_cfg.dt *= 0.5;
    SandpileRadialOracle fine(fine_cfg, T, t_flux);

    double dw = 0.0, wn = 0.0, dq = 0.0, qn = 0.0;
    const int N = 3000;
    for (int i = 0; i < N; ++i) {
        const double rho = (i + 0.5) * cfg.domain_radius / N;
        const double wgt = rho; // radial L1 weight
        dw += wgt * std::abs(coarse.w_at(rho) - fine.w_at(rho));
        wn += wgt * std::abs(fine.w_at(rho));
        dq += wgt * std::abs(coarse.q_at(rho) - fine.q_at(rho));
        qn += wgt * std::abs(fine.q_at(rho));
    }
    return {dw / wn, dq / qn};
}

// ---------------------------------------------------------------------------
// Thin film (case iii)

double thinfilm_front(double t) { return 1.0 / std::cosh(2.0 * t); }

double thinfilm_Jphi(double rho, double t) {
    const double a = thinfilm_front(t);
    if (rho >= a) return -1.0;
    if (rho <= 0.0) return 0.0;
    return -(2.0 / M_PI) * std::atan(rho * std::sqrt(1.0 - a * a) / std::sqrt(a * a - rho * rho));
}

namespace {

// Linked flux through the coplanar circle of radius rho from a unit-current
// ring of radius u (mutual inductance of coplanar coaxial circles).
double ring_flux(double rho, double u) {
    const double m = std::min(4.0 * rho * u / ((rho + u) * (rho + u)), 1.0 - 1e-15);
    const double k = std::sqrt(m);
    const double K = std::comp_ellint_1(k);
    const double E = std::comp_ellint_2(k);
    return std::sqrt(rho * u) * ((2.0 / k - k) * K - (2.0 / k) * E);
}

// Gauss panels geometrically graded toward singular endpoints.
template <class F>
double integrate_graded(F&& f, double lo, double hi, bool sing_lo, bool sing_hi) {
    static std::vector<double> gx, gw;
    if (gx.empty()) gauss_legendre_01(12, gx, gw);
    auto panel = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t q = 0; q < gx.size(); ++q) s += gw[q] * f(a + (b - a) * gx[q]);
        return s * (b - a);
    };
    const double len = hi - lo;
    if (len <= 0.0) return 0.0;
    std::vector<double> knots;
    knots.push_back(lo);
    if (sing_lo) {
        for (int k = 44; k >= 1; --k) knots.push_back(lo + len * 0.30 * std::pow(0.5, k));
        knots.push_back(lo + 0.30 * len);
    }
    const double mid_lo = knots.back();
    const double mid_hi = sing_hi ? hi - 0.30 * len : hi;
    for (int k = 1; k <= 8; ++k) knots.push_back(mid_lo + (mid_hi - mid_lo) * k / 8.0);
    if (sing_hi)
        for (int k = 1; k <= 44; ++k) knots.push_back(hi - len * 0.30 * std::pow(0.5, k));
    knots.push_back(hi);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (knots[i + 1] > knots[i]) s += panel(knots[i], knots[i + 1]);
    return s;
}

// Total linked flux through radius rho at time t.
double thinfilm_linked_flux(double rho, double t) {
    const double a = thinfilm_front(t);
    auto f = [&](double u) { return thinfilm_Jphi(u, t) * ring_flux(rho, u); };
    double s = M_PI * rho * rho * t; // external contribution, b_e = t
    // split at the kernel singularity u = rho and the current kink u = a
    std::vector<double> cuts;
    for (double c : {rho, a})
        if (c > 1e-14 && c < 1.0 - 1e-14) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double x, double y) { return std::abs(x - y) < 1e-14; }),
               cuts.end());
    double prev = 0.0;
    for (double c : cuts) {
        s += integrate_graded(f, prev, c, prev > 0.0, true);
        prev = c;
    }
    s += integrate_graded(f, prev, 1.0, prev > 0.0, false);
    return s;
}

} // namespace

double thinfilm_ephi(double rho, double t) {
    if (rho <= 1e-9) return 0.0;
    const double dt = 1e-5;
    const double dPhi = thinfilm_linked_flux(rho, t + dt) - thinfilm_linked_flux(rho, t - dt);
    return -dPhi / (2.0 * dt * 2.0 * M_PI * rho);
}

Vec2 thinfilm_jstar(Vec2 x, double t) {
    const double rho = x.norm();
    if (rho == 0.0) return {0.0, 0.0};
    const double J = thinfilm_Jphi(rho, t);
    return Vec2{-x.y, x.x} * (J / rho); // J * phi_hat
}

Vec2 thinfilm_qstar(Vec2 x, double t) {
    const double rho = x.norm();
    if (rho == 0.0) return {0.0, 0.0};
    const double e = thinfilm_ephi(rho, t);
    return x * (e / rho); // e_phi * rho_hat
}

double thinfilm_core_leak(double t) {
    const double a = thinfilm_front(t);
    double core = 0.0, annulus = 0.0;
    for (int i = 1; i <= 12; ++i) core = std::max(core, std::abs(thinfilm_ephi(0.93 * a * i / 12.0, t)));
    for (int i = 0; i <= 12; ++i)
        annulus = std::max(annulus, std::abs(thinfilm_ephi(a + (1.0 - a) * (i + 0.5) / 13.0, t)));
    return core / annulus;
}

// ---------------------------------------------------------------------------
// Error metrics

double relative_l1_error(const CellField& num, const std::function<double(Vec2)>& ref) {
    const TriMesh& mesh = *num.mesh;
    double err = 0.0, nrm = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double r = ref(mesh.centroid[t]);
        err += mesh.area[t] * std::abs(num.values[t] - r);
        nrm += mesh.area[t] * std::abs(r);
    }
    if (nrm == 0.0) throw EvaluationError("relative_l1_error: reference is identically zero");
    return err / nrm;
}

double relative_l1_error(const CellVecField& num, const std::function<Vec2(Vec2)>& ref) {
    const TriMesh& mesh = *num.mesh;
    double err = 0.0, nrm = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const Vec2 r = ref(mesh.centroid[t]);
        err += mesh.area[t] * (num.at(t) - r).norm();
        nrm += mesh.area[t] * r.norm();
    }
    if (nrm == 0.0) throw EvaluationError("relative_l1_error: reference is identically zero");
    return err / nrm;
}

} // namespace qvi
