//! The limiting stable law: density, positive-stable sampling, and the
//! limit constants of the renewal-theorem ratios.
//!
//! The scale convention is fixed once: with the norming sequence chosen so
//! that `A(a_n) = n`, equivalently `n F̄(a_n) -> 1`, the one-sided limit law
//! has Laplace transform `exp(-Γ(1-α) λ^α)` and its tail satisfies
//! `P(Y > y) ~ y^{-α}`. All limit constants are reported under this
//! convention.
//!
//! The one-sided density uses the angular integral representation
//!
//! ```text
//! f(y) = α/(π(1-α)) · y^{-1/(1-α)} ∫_0^π A(φ) exp(-y^{-α/(1-α)} A(φ)) dφ,
//! A(φ) = sin(αφ)^{α/(1-α)} · sin((1-α)φ) · sin(φ)^{-1/(1-α)},
//! ```
//!
//! for the standard scale, rescaled afterwards. The same `A(φ)` drives the
//! trigonometric sampler `Y = (A(πU)/W)^{(1-α)/α}` with `W` unit
//! exponential, which is used as a Monte Carlo cross-check of the
//! quadrature routes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::integrate_with_breaks;

/// Quadrature tolerance used throughout the oracle.
const QUAD_TOL: f64 = 1e-9;

/// Relative agreement demanded of the two evaluation routes.
const ROUTE_TOL: f64 = 1e-5;

/// Parameters of a limiting stable law in the renewal norming.
#[derive(Debug, Clone, Copy)]
pub struct StableLaw {
    alpha: f64,
    rho: f64,
    /// Coefficient `c` in the exponent: Laplace `exp(-c λ^α)` for the
    /// one-sided case, characteristic `exp(-c |t|^α)` for the symmetric one.
    coeff: f64,
}

impl StableLaw {
    /// One-sided limit law (`ρ = 1`) of a nonnegative lattice law with tail
    /// index `alpha`, under the `n F̄(a_n) -> 1` norming.
    pub fn renewal(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "one-sided stable law needs alpha in (0,1), got {alpha}"
            )));
        }
        Ok(Self {
            alpha,
            rho: 1.0,
            coeff: gamma(1.0 - alpha),
        })
    }

    /// Symmetric limit law (`ρ = 1/2`) of a centered two-sided lattice law
    /// with magnitude tail index `alpha`, under `n P(|X| > a_n) -> 1`.
    pub fn symmetric(alpha: f64) -> Result<Self> {
        if !((alpha > 0.0 && alpha < 1.0) || (alpha > 1.0 && alpha < 2.0)) {
            return Err(Error::Config(format!(
                "symmetric stable law needs alpha in (0,1) or (1,2), got {alpha}"
            )));
        }
        // 1 - Re E e^{itX} ~ Γ(1-α) cos(πα/2) |t|^α for P(|X|>x) = x^{-α};
        // the product stays positive on (1,2) by continuation.
        let coeff = gamma(1.0 - alpha) * (std::f64::consts::PI * alpha / 2.0).cos();
        Ok(Self {
            alpha,
            rho: 0.5,
            coeff,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    fn is_one_sided(&self) -> bool {
        self.rho == 1.0
    }

    /// Scale factor mapping the standard law (`c = 1`) onto this one.
    fn sigma(&self) -> f64 {
        self.coeff.powf(1.0 / self.alpha)
    }
}

/// `ln A(φ)` of the angular kernel at the standard scale.
fn log_kernel(alpha: f64, phi: f64) -> f64 {
    let om = 1.0 - alpha;
    (alpha / om) * (alpha * phi).sin().ln() + (om * phi).sin().ln() - phi.sin().ln() / om
}

fn density_std_one_sided(alpha: f64, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let om = 1.0 - alpha;
    let z = y.powf(-alpha / om);
    // Kernel value at φ = 0; below the exponential floor the density is 0.
    let a0 = alpha.powf(alpha / om) * om;
    if z * a0 > 745.0 {
        return Ok(0.0);
    }
    let ln_z = z.ln();
    let integrand = move |phi: f64| {
        if phi <= 0.0 || phi >= std::f64::consts::PI {
            return 0.0;
        }
        let la = log_kernel(alpha, phi);
        let lt = la + ln_z;
        if lt > 700.0 {
            return 0.0;
        }
        let t = lt.exp();
        (la - t).exp()
    };
    // The kernel blows up like (π-φ)^{-1/(1-α)}; pre-split dyadically so
    // the active layer near π is always seen by the refinement.
    let pi = std::f64::consts::PI;
    let mut breaks = vec![0.0, 0.5 * pi];
    let mut d = 0.1;
    while d > 1e-13 {
        breaks.push(pi - d);
        d *= 0.1;
    }
    breaks.push(pi);
    let integral = integrate_with_breaks(integrand, &breaks, QUAD_TOL)?;
    Ok(alpha / (pi * om) * y.powf(-1.0 / om) * integral)
}

fn density_symmetric(alpha: f64, coeff: f64, y: f64) -> Result<f64> {
    let y = y.abs();
    // f(y) = (1/π) ∫_0^∞ cos(t y) exp(-c t^α) dt, split at half-periods.
    let t_hi = (50.0 / coeff).powf(1.0 / alpha);
    let mut breaks = vec![0.0];
    if y > 1e-12 {
        let step = std::f64::consts::PI / y;
        let mut t = step;
        while t < t_hi && breaks.len() < 30_000 {
            breaks.push(t);
            t += step;
        }
    }
    if breaks.len() >= 30_000 {
        return Err(Error::Numerical(format!(
            "symmetric density at y = {y}: oscillation cell count exceeded"
        )));
    }
    breaks.push(t_hi);
    let v = integrate_with_breaks(
        |t| (t * y).cos() * (-coeff * t.powf(alpha)).exp(),
        &breaks,
        QUAD_TOL,
    )?;
    Ok(v / std::f64::consts::PI)
}

/// Density `f(y)` of the limiting stable law.
///
/// One-sided laws (`ρ = 1`) vanish on `y <= 0`; symmetric laws are even.
/// Evaluation is by adaptive quadrature with tolerance `1e-9`.
pub fn stable_density(law: &StableLaw, y: f64) -> Result<f64> {
    if law.is_one_sided() {
        if y <= 0.0 {
            return Ok(0.0);
        }
        let s = law.sigma();
        Ok(density_std_one_sided(law.alpha, y / s)? / s)
    } else {
        density_symmetric(law.alpha, law.coeff, y)
    }
}

/// Draws `count` i.i.d. variates of a one-sided law, deterministically in
/// the seed.
pub fn sample_positive_stable(law: &StableLaw, count: usize, seed: u64) -> Result<Vec<f64>> {
    if !law.is_one_sided() {
        return Err(Error::Domain(
            "positive-stable sampling requires rho = 1".into(),
        ));
    }
    let alpha = law.alpha;
    let om = 1.0 - alpha;
    let sigma = law.sigma();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u: f64 = rng.random();
        if u <= 0.0 {
            continue;
        }
        let e: f64 = 1.0 - rng.random::<f64>();
        let w = -e.ln();
        if !(w > 0.0) {
            continue;
        }
        let la = log_kernel(alpha, std::f64::consts::PI * u);
        let y = ((la - w.ln()) * (om / alpha)).exp();
        out.push(sigma * y);
    }
    Ok(out)
}

/// Value of a limit constant together with its two evaluation routes.
#[derive(Debug, Clone, Copy)]
pub struct LimitConstant {
    pub value: f64,
    /// Transform-side route: Mellin-type integral of the Laplace transform.
    pub mellin_route: f64,
    /// Density-side route: quadrature of `y^{-s} f(y)`.
    pub density_route: f64,
}

/// `E(Y^{-s})` through the Laplace transform. For `s > 0`,
/// `E(Y^{-s}) = (1/Γ(s)) ∫ λ^{s-1} E(e^{-λY}) dλ`; for `s < 0` the positive
/// fractional-moment identity is used instead. Requires `-α < s`.
fn mellin_moment(alpha: f64, c: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(1.0);
    }
    if s > 0.0 {
        let lam_star = (1.0 / c).powf(1.0 / alpha);
        let integrand = |lam: f64| {
            if lam <= 0.0 {
                return 0.0;
            }
            ((s - 1.0) * lam.ln() - c * lam.powf(alpha)).exp()
        };
        // Expand until both the exponential cut and any interior peak from
        // large s are covered.
        let mut hi = lam_star * (60.0f64).powf(1.0 / alpha) * 2.0;
        let peak = integrand(((s - 1.0).max(0.1) / (c * alpha)).powf(1.0 / alpha))
            .max(integrand(lam_star));
        let mut guard = 0;
        while integrand(hi) > 1e-18 * peak && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut breaks = vec![0.0];
        let mut t = lam_star * 1e-6;
        while t < hi {
            breaks.push(t);
            t *= 3.0;
        }
        breaks.push(hi);
        let v = integrate_with_breaks(integrand, &breaks, QUAD_TOL)?;
        Ok(v / gamma(s))
    } else {
        // E(Y^t) = (t/Γ(1-t)) ∫ λ^{-t-1} (1 - e^{-cλ^α}) dλ, t = -s in (0, α).
        let t = -s;
        if t >= alpha {
            return Err(Error::Domain(format!(
                "moment E(Y^{t}) diverges: need t < alpha = {alpha}"
            )));
        }
        let hi = (60.0 / c).powf(1.0 / alpha);
        let integrand = |lam: f64| {
            if lam <= 0.0 {
                return 0.0;
            }
            let u = c * lam.powf(alpha);
            let one_minus = if u < 1e-8 {
                u * (1.0 - 0.5 * u)
            } else {
                -(-u).exp_m1()
            };
            lam.powf(-t - 1.0) * one_minus
        };
        let mut breaks = vec![0.0];
        let mut lam = (1.0 / c).powf(1.0 / alpha) * 1e-6;
        while lam < hi {
            breaks.push(lam);
            lam *= 3.0;
        }
        breaks.push(hi);
        let v = integrate_with_breaks(integrand, &breaks, QUAD_TOL)?;
        // Tail beyond hi: 1 - e^{-cλ^α} = 1 up to e^{-60}.
        let tail = hi.powf(-t) / t;
        Ok((v + tail) * t / gamma(1.0 - t))
    }
}

/// `E(Y^{-s})` by quadrature against the one-sided density, with a two-term
/// analytic tail beyond the quadrature horizon.
fn density_moment(law: &StableLaw, s: f64) -> Result<f64> {
    let alpha = law.alpha;
    let om = 1.0 - alpha;
    let sigma = law.sigma();
    // Below y_lo the density is under the e^{-60} floor.
    let b_std = om * alpha.powf(alpha / om);
    let y_lo = sigma * (b_std / 60.0).powf(om / alpha);
    let y_hi = 1000.0 * sigma.max(1.0);
    let mut breaks = vec![y_lo];
    let mut y = y_lo;
    while y < y_hi {
        y *= 1.6;
        breaks.push(y.min(y_hi));
    }
    let integral = integrate_with_breaks(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            let f = density_std_one_sided(alpha, y / sigma).unwrap_or(f64::NAN) / sigma;
            y.powf(-s) * f
        },
        &breaks,
        QUAD_TOL,
    )?;
    // f(y) = (1/π) Σ_k (-1)^{k+1} Γ(kα+1)/k! sin(kπα) c^k y^{-kα-1}; the
    // series converges for α < 1, so the mass beyond y_hi integrates in
    // closed form term by term.
    let c = law.coeff;
    let pi = std::f64::consts::PI;
    let mut tail = 0.0;
    let mut fact = 1.0;
    let mut quiet = 0;
    for k in 1..=24 {
        let kf = k as f64;
        fact *= kf;
        let coef = if k % 2 == 1 { 1.0 } else { -1.0 } * gamma(kf * alpha + 1.0) / fact
            * (kf * pi * alpha).sin()
            * c.powi(k)
            / pi;
        let term = coef * y_hi.powf(-s - kf * alpha) / (s + kf * alpha);
        tail += term;
        // sin(kπα) has exact zeros (e.g. even k at α = 1/2), so only stop
        // after two consecutive negligible terms.
        if term.abs() < 1e-16 * (integral.abs() + tail.abs()) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    Ok(integral + tail)
}

fn dual_route_constant(law: &StableLaw, s: f64) -> Result<LimitConstant> {
    if !law.is_one_sided() {
        return Err(Error::Domain(
            "limit constants are defined for the one-sided (rho = 1) law".into(),
        ));
    }
    let alpha = law.alpha;
    let mellin = alpha * mellin_moment(alpha, law.coeff, s)?;
    let density = alpha * density_moment(law, s)?;
    let scale = mellin.abs().max(density.abs()).max(1e-300);
    let disagreement = (mellin - density).abs() / scale;
    if disagreement > ROUTE_TOL {
        return Err(Error::Numerical(format!(
            "limit-constant routes disagree by {disagreement:.3e} \
             (mellin {mellin:.12e}, density {density:.12e})"
        )));
    }
    Ok(LimitConstant {
        value: 0.5 * (mellin + density),
        mellin_route: mellin,
        density_route: density,
    })
}

/// Renewal-theorem limit constant `α E(Y^{-α})`, evaluated two independent
/// ways that must agree to `1e-6` (hard error beyond `1e-5`).
pub fn limit_constant_srt(law: &StableLaw) -> Result<LimitConstant> {
    dual_route_constant(law, law.alpha)
}

/// Weighted-occupation limit constant `α E(Y^{-α(β+1)})` for weight index
/// `beta > -2`; the moment diverges at `beta <= -2`.
pub fn limit_constant_green(law: &StableLaw, beta: f64) -> Result<LimitConstant> {
    if !(beta > -2.0) {
        return Err(Error::Domain(format!(
            "weight index beta = {beta} must exceed -2 for a finite constant"
        )));
    }
    let s = law.alpha * (beta + 1.0);
    dual_route_constant(law, s)
}

/// `|1 - ∫ f|` for the one-sided density; a quadrature health check.
pub fn density_normalization_defect(law: &StableLaw) -> Result<f64> {
    Ok((1.0 - density_moment(law, 0.0)?).abs())
}
