//! Aperiodic lattice probability laws with regularly varying tails.
//!
//! A [`LatticeLaw`] stores an exact probability mass function on an integer
//! range together with its tail array `F̄(x) = P(X > x)` and the mass kept
//! beyond the stored horizon. Laws are built from a [`TailSpec`] describing
//! one of the supported tail families; the mass function is obtained by
//! differencing the tail, `p(x) = F̄(x-1) - F̄(x)`, so tail values stay
//! closed-form testable.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::sum::KahanSum;

/// Mass-balance tolerance enforced at construction.
pub const MASS_TOL: f64 = 1e-12;

/// Support side of a law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// `P(X >= 0) = 1`, support starts at 1 for the built-in families.
    Nonnegative,
    /// Symmetric two-sided law with exact zero mean.
    Centered,
}

/// Tail family of a [`TailSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `F̄(x) = x^{-alpha}` for `x >= 1`.
    PurePower,
    /// `F̄(x) = x^{-alpha} (1 + ln x)^{-beta_log}`.
    LogPower { beta_log: f64 },
    /// `F̄(x) = (x L(x))^{-1/2}` with `L(x) = (ln(e + x))^{-beta_log}`;
    /// the tail index is pinned to 1/2. `beta_log > 0` makes `L -> 0`.
    BoundaryHalf { beta_log: f64 },
    /// `F̄(x) = x^{-alpha} exp(amplitude * sin((1 + ln x)^exponent))`.
    /// Slowly varying with non-convergent oscillation.
    Oscillating { amplitude: f64, exponent: f64 },
    /// Pure-power base with extra mass `coeff * 2^{k(alpha-1)}` moved onto
    /// the spike points `x_k = 2^k`, `k >= kmin`, renormalized. Keeps
    /// `x F̄(x) p(x)` bounded away from zero along the spikes while the
    /// tail stays regularly varying.
    SpikePerturbed { coeff: f64, kmin: u32 },
    /// User-supplied mass table plus an explicit tail remainder.
    CustomTable { pmf: Vec<(i64, f64)>, truncated: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PurePower => "pure-power",
            Family::LogPower { .. } => "log-power",
            Family::BoundaryHalf { .. } => "boundary-half",
            Family::Oscillating { .. } => "oscillating",
            Family::SpikePerturbed { .. } => "spike-perturbed",
            Family::CustomTable { .. } => "custom-table",
        }
    }
}

/// Specification of a lattice law: tail index, family, and support side.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSpec {
    pub alpha: f64,
    pub family: Family,
    pub support: Support,
}

impl TailSpec {
    pub fn pure_power(alpha: f64) -> Self {
        Self {
            alpha,
            family: Family::PurePower,
            support: Support::Nonnegative,
        }
    }

    /// Symmetric two-sided pure-power law; `alpha` may also lie in (1, 2),
    /// where the exact zero mean comes from the symmetry.
    pub fn pure_power_centered(alpha: f64) -> Self {
        Self {
            alpha,
            family: Family::PurePower,
            support: Support::Centered,
        }
    }

    pub fn log_power(alpha: f64, beta_log: f64) -> Self {
        Self {
            alpha,
            family: Family::LogPower { beta_log },
            support: Support::Nonnegative,
        }
    }

    pub fn boundary_half(beta_log: f64) -> Self {
        Self {
            alpha: 0.5,
            family: Family::BoundaryHalf { beta_log },
            support: Support::Nonnegative,
        }
    }

    pub fn oscillating(alpha: f64, amplitude: f64, exponent: f64) -> Self {
        Self {
            alpha,
            family: Family::Oscillating {
                amplitude,
                exponent,
            },
            support: Support::Nonnegative,
        }
    }

    pub fn spike_perturbed(alpha: f64, coeff: f64, kmin: u32) -> Self {
        Self {
            alpha,
            family: Family::SpikePerturbed { coeff, kmin },
            support: Support::Nonnegative,
        }
    }

    pub fn custom(pmf: Vec<(i64, f64)>, truncated: f64, alpha_hint: f64) -> Self {
        Self {
            alpha: alpha_hint,
            family: Family::CustomTable { pmf, truncated },
            support: Support::Nonnegative,
        }
    }

    /// Checks all family parameters against their documented ranges.
    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        let alpha_ok = match self.support {
            Support::Nonnegative => a > 0.0 && a < 1.0,
            Support::Centered => (a > 0.0 && a < 1.0) || (a > 1.0 && a < 2.0),
        };
        if !alpha_ok {
            return Err(Error::Config(format!(
                "alpha = {a} out of range: need (0,1) for nonnegative laws, \
                 (0,1) or (1,2) for centered laws"
            )));
        }
        match &self.family {
            Family::PurePower => {}
            Family::LogPower { beta_log } => {
                if !(*beta_log >= 0.0) {
                    return Err(Error::Config(format!(
                        "log-power beta_log = {beta_log} must be >= 0"
                    )));
                }
            }
            Family::BoundaryHalf { beta_log } => {
                if !(*beta_log >= 0.0 && *beta_log <= 3.0) {
                    return Err(Error::Config(format!(
                        "boundary-half beta_log = {beta_log} out of [0, 3]"
                    )));
                }
                if (a - 0.5).abs() > 1e-12 {
                    return Err(Error::Config(
                        "boundary-half family has tail index 1/2; set alpha = 0.5".into(),
                    ));
                }
                if self.support != Support::Nonnegative {
                    return Err(Error::Config(
                        "boundary-half family is defined for nonnegative support".into(),
                    ));
                }
            }
            Family::Oscillating {
                amplitude,
                exponent,
            } => {
                if !(*amplitude >= 0.0) {
                    return Err(Error::Config(format!(
                        "oscillation amplitude = {amplitude} must be >= 0"
                    )));
                }
                if !(*exponent > 0.0 && *exponent < 1.0) {
                    return Err(Error::Config(format!(
                        "oscillation exponent = {exponent} out of (0, 1)"
                    )));
                }
                // Keeps the tail scale A(x) = 1/F̄(x) monotone on [1, ∞).
                if amplitude * exponent >= a {
                    return Err(Error::Config(format!(
                        "oscillating family needs amplitude * exponent < alpha \
                         (got {} >= {a})",
                        amplitude * exponent
                    )));
                }
            }
            Family::SpikePerturbed { coeff, kmin } => {
                if !(*coeff > 0.0) {
                    return Err(Error::Config(format!(
                        "spike coefficient = {coeff} must be > 0"
                    )));
                }
                if *kmin < 2 {
                    return Err(Error::Config("spike kmin must be >= 2".into()));
                }
                if a >= 0.5 {
                    return Err(Error::Config(format!(
                        "spike-perturbed family needs alpha < 1/2 (got {a})"
                    )));
                }
                if self.support != Support::Nonnegative {
                    return Err(Error::Config(
                        "spike-perturbed family is defined for nonnegative support".into(),
                    ));
                }
            }
            Family::CustomTable { pmf, truncated } => {
                if pmf.is_empty() {
                    return Err(Error::Config("custom table must not be empty".into()));
                }
                if !(*truncated >= 0.0 && *truncated < 1.0) {
                    return Err(Error::Config(format!(
                        "custom truncated mass = {truncated} out of [0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smooth one-sided magnitude tail `F̄(x)` for `x >= 1` (families only;
    /// spikes enter through the exact integer construction).
    pub(crate) fn raw_tail(&self, x: f64) -> f64 {
        debug_assert!(x >= 1.0);
        let a = self.alpha;
        match &self.family {
            Family::PurePower => x.powf(-a),
            Family::LogPower { beta_log } => x.powf(-a) * (1.0 + x.ln()).powf(-beta_log),
            Family::BoundaryHalf { beta_log } => {
                let l = (std::f64::consts::E + x).ln().powf(-beta_log);
                (x * l).powf(-0.5)
            }
            Family::Oscillating {
                amplitude,
                exponent,
            } => x.powf(-a) * (amplitude * (1.0 + x.ln()).powf(*exponent).sin()).exp(),
            Family::SpikePerturbed { .. } => {
                let (z, r) = self.spike_normalizer();
                let k_x = (x.log2().floor() as u32) + 1;
                (x.powf(-a) + self.spike_tail_from(k_x, r)) / z
            }
            Family::CustomTable { .. } => f64::NAN,
        }
    }

    /// `(Z, r)` for the spike family: `r = 2^{alpha-1}` and the total-mass
    /// normalizer `Z = 1 + coeff * r^kmin / (1 - r)`.
    fn spike_normalizer(&self) -> (f64, f64) {
        if let Family::SpikePerturbed { coeff, kmin } = self.family {
            let r = 2f64.powf(self.alpha - 1.0);
            let z = 1.0 + coeff * r.powi(kmin as i32) / (1.0 - r);
            (z, r)
        } else {
            (1.0, 0.0)
        }
    }

    /// Total spike mass at points `2^k`, `k >= k0` (unnormalized).
    fn spike_tail_from(&self, k0: u32, r: f64) -> f64 {
        if let Family::SpikePerturbed { coeff, kmin } = self.family {
            let k = k0.max(kmin);
            coeff * r.powi(k as i32) / (1.0 - r)
        } else {
            0.0
        }
    }

    /// Exact magnitude tail at integer `x >= 0`, including spike mass.
    fn tail_int(&self, x: u64) -> f64 {
        if x == 0 {
            return 1.0;
        }
        match &self.family {
            Family::SpikePerturbed { kmin, .. } => {
                let (z, r) = self.spike_normalizer();
                // smallest k with 2^k > x
                let bitlen = 64 - x.leading_zeros();
                let k_x = bitlen.max(*kmin);
                ((x as f64).powf(-self.alpha) + self.spike_tail_from(k_x, r)) / z
            }
            Family::CustomTable { .. } => f64::NAN,
            _ => self.raw_tail(x as f64),
        }
    }
}

/// A probability mass function on an integer range with its exact tail
/// array and the mass retained beyond the stored horizon.
#[derive(Debug, Clone)]
pub struct LatticeLaw {
    spec: TailSpec,
    /// Smallest support point carrying mass.
    xmin: i64,
    /// Largest stored point.
    xmax: i64,
    /// Array base index (0 for nonnegative laws, `-xmax` for centered).
    lo: i64,
    pmf: Vec<f64>,
    /// `tail[x] = P(X > x)` for `x in 0..=xmax`.
    tail: Vec<f64>,
    truncated_upper: f64,
    truncated_lower: f64,
    aperiodic: bool,
}

/// Builds a lattice law on `[.., xmax]` from a tail specification.
///
/// For the analytic families the mass function is `p(x) = F̄(x-1) - F̄(x)`
/// with the tail clamped to be non-increasing and at most 1; mass beyond
/// `xmax` is retained as `truncated_mass`, never dropped. Custom tables are
/// normalized exactly and their tail array is rebuilt by suffix summation.
pub fn build_law(spec: &TailSpec, xmax: i64) -> Result<LatticeLaw> {
    spec.validate()?;
    if xmax < 8 {
        return Err(Error::Config(format!("xmax = {xmax} must be >= 8")));
    }
    if let Family::CustomTable { pmf, truncated } = &spec.family {
        return build_custom(spec, pmf, *truncated, xmax);
    }

    // Exact magnitude tail on 0..=xmax, clamped monotone from 1.
    let m = xmax as usize;
    let mut mag_tail = vec![0.0; m + 1];
    mag_tail[0] = 1.0;
    for x in 1..=m {
        mag_tail[x] = spec.tail_int(x as u64).min(mag_tail[x - 1]);
    }
    let mag_pmf: Vec<f64> = (1..=m).map(|x| mag_tail[x - 1] - mag_tail[x]).collect();
    let trunc = mag_tail[m];

    let law = match spec.support {
        Support::Nonnegative => {
            let mut pmf = vec![0.0; m + 1];
            pmf[1..].copy_from_slice(&mag_pmf);
            LatticeLaw {
                spec: spec.clone(),
                xmin: first_support(&pmf, 0),
                xmax,
                lo: 0,
                pmf,
                tail: mag_tail,
                truncated_upper: trunc,
                truncated_lower: 0.0,
                aperiodic: false,
            }
        }
        Support::Centered => {
            let mut pmf = vec![0.0; 2 * m + 1];
            for x in 1..=m {
                let half = 0.5 * mag_pmf[x - 1];
                pmf[m + x] = half;
                pmf[m - x] = half;
            }
            let tail = mag_tail.iter().map(|t| 0.5 * t).collect();
            LatticeLaw {
                spec: spec.clone(),
                xmin: -xmax,
                xmax,
                lo: -xmax,
                pmf,
                tail,
                truncated_upper: 0.5 * trunc,
                truncated_lower: 0.5 * trunc,
                aperiodic: false,
            }
        }
    };
    finish(law)
}

fn build_custom(
    spec: &TailSpec,
    table: &[(i64, f64)],
    truncated: f64,
    xmax: i64,
) -> Result<LatticeLaw> {
    let mut hi = i64::MIN;
    let mut lo_supp = i64::MAX;
    for &(x, p) in table {
        if p < -MASS_TOL {
            return Err(Error::Construction(format!(
                "custom table has negative mass {p} at x = {x}"
            )));
        }
        if x < 0 {
            return Err(Error::Config(
                "custom tables are nonnegative-support only".into(),
            ));
        }
        hi = hi.max(x);
        lo_supp = lo_supp.min(x);
    }
    if hi > xmax {
        return Err(Error::Config(format!(
            "custom table point {hi} exceeds xmax = {xmax}"
        )));
    }
    let m = xmax as usize;
    let mut pmf = vec![0.0; m + 1];
    for &(x, p) in table {
        pmf[x as usize] += p.max(0.0);
    }
    let mut total = KahanSum::new();
    for &p in &pmf {
        total.add(p);
    }
    total.add(truncated);
    let total = total.value();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Construction(format!(
            "custom table mass {total} differs from 1 by more than 1e-6"
        )));
    }
    // Normalize exactly so the mass-balance invariant holds to round-off.
    let inv = 1.0 / total;
    for p in &mut pmf {
        *p *= inv;
    }
    let truncated = truncated * inv;

    let mut tail = vec![0.0; m + 1];
    let mut acc = KahanSum::new();
    acc.add(truncated);
    for x in (0..=m).rev() {
        tail[x] = acc.value();
        if x > 0 {
            acc.add(pmf[x]);
        }
    }
    // include p(0)=... tail[0] = P(X > 0) already excludes pmf[0].
    let law = LatticeLaw {
        spec: spec.clone(),
        xmin: first_support(&pmf, 0),
        xmax,
        lo: 0,
        pmf,
        tail,
        truncated_upper: truncated,
        truncated_lower: 0.0,
        aperiodic: false,
    };
    finish(law)
}

fn first_support(pmf: &[f64], lo: i64) -> i64 {
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            return lo + i as i64;
        }
    }
    lo
}

fn finish(mut law: LatticeLaw) -> Result<LatticeLaw> {
    // Aperiodicity: gcd of support magnitudes must be 1.
    let mut g: u64 = 0;
    for (i, &p) in law.pmf.iter().enumerate() {
        if p > 0.0 {
            let z = (law.lo + i as i64).unsigned_abs();
            if z > 0 {
                g = gcd(g, z);
                if g == 1 {
                    break;
                }
            }
        }
    }
    if g != 1 {
        return Err(Error::Construction(format!(
            "law is periodic: support span {g} > 1"
        )));
    }
    law.aperiodic = true;

    let mut mass = KahanSum::new();
    for &p in &law.pmf {
        mass.add(p);
    }
    mass.add(law.truncated_upper);
    mass.add(law.truncated_lower);
    let defect = (mass.value() - 1.0).abs();
    if defect > MASS_TOL {
        return Err(Error::Construction(format!(
            "law mass defect {defect:.3e} exceeds {MASS_TOL:.0e}"
        )));
    }
    Ok(law)
}

fn gcd(a: u64, b: u64) -> u64 {
    if a == 0 {
        b
    } else {
        gcd(b % a, a)
    }
}

impl LatticeLaw {
    pub fn spec(&self) -> &TailSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0
    }

    pub fn aperiodic(&self) -> bool {
        self.aperiodic
    }

    /// Smallest support point with positive mass.
    pub fn xmin(&self) -> i64 {
        self.xmin
    }

    /// Largest stored point (magnitude bound for centered laws).
    pub fn xmax(&self) -> i64 {
        self.xmax
    }

    /// `P(X = z)`; zero outside the stored window.
    #[inline]
    pub fn pmf_at(&self, z: i64) -> f64 {
        let i = z - self.lo;
        if i < 0 || i as usize >= self.pmf.len() {
            0.0
        } else {
            self.pmf[i as usize]
        }
    }

    /// `P(X > x)` for `x >= 0`; returns the retained upper tail mass for
    /// queries beyond the horizon.
    #[inline]
    pub fn tail_at(&self, x: i64) -> f64 {
        assert!(x >= 0, "tail_at is defined for x >= 0");
        if x as usize >= self.tail.len() {
            self.truncated_upper
        } else {
            self.tail[x as usize]
        }
    }

    /// Mass kept beyond the horizon (both sides for centered laws).
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_upper + self.truncated_lower
    }

    pub fn truncated_upper(&self) -> f64 {
        self.truncated_upper
    }

    /// Probability array together with its base index.
    pub fn pmf(&self) -> (&[f64], i64) {
        (&self.pmf, self.lo)
    }

    /// Mass function restricted to the nonnegative axis, indexed from 0.
    /// Only available for nonnegative laws.
    pub fn pmf_nonneg(&self) -> &[f64] {
        assert!(self.is_nonnegative());
        &self.pmf
    }

    /// Two-column CSV export `x,p`.
    pub fn write_pmf_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "x,p")?;
        for (i, &p) in self.pmf.iter().enumerate() {
            writeln!(w, "{},{:.16e}", self.lo + i as i64, p)?;
        }
        Ok(())
    }
}

// --- flat key-value serialization -----------------------------------------

impl TailSpec {
    /// Serializes to the documented flat key-value form.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        kv.insert("family".into(), self.family.name().into());
        kv.insert("alpha".into(), format!("{:.17}", self.alpha));
        kv.insert(
            "support".into(),
            match self.support {
                Support::Nonnegative => "nonnegative".into(),
                Support::Centered => "centered".into(),
            },
        );
        match &self.family {
            Family::PurePower => {}
            Family::LogPower { beta_log } | Family::BoundaryHalf { beta_log } => {
                kv.insert("beta_log".into(), format!("{beta_log:.17}"));
            }
            Family::Oscillating {
                amplitude,
                exponent,
            } => {
                kv.insert("osc_amplitude".into(), format!("{amplitude:.17}"));
                kv.insert("osc_exponent".into(), format!("{exponent:.17}"));
            }
            Family::SpikePerturbed { coeff, kmin } => {
                kv.insert("spike_coeff".into(), format!("{coeff:.17}"));
                kv.insert("spike_kmin".into(), format!("{kmin}"));
            }
            Family::CustomTable { pmf, truncated } => {
                let body: Vec<String> = pmf.iter().map(|(x, p)| format!("{x}:{p:.17}")).collect();
                kv.insert("custom_pmf".into(), body.join(";"));
                kv.insert("custom_truncated".into(), format!("{truncated:.17}"));
            }
        }
        kv
    }

    /// Parses the flat key-value form; unknown keys are rejected.
    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<TailSpec> {
        const KNOWN: &[&str] = &[
            "family",
            "alpha",
            "support",
            "beta_log",
            "osc_amplitude",
            "osc_exponent",
            "spike_coeff",
            "spike_kmin",
            "custom_pmf",
            "custom_truncated",
            "xmax",
            "seed",
        ];
        for k in kv.keys() {
            if !KNOWN.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown law key `{k}`")));
            }
        }
        let get = |k: &str| -> Result<&String> {
            kv.get(k)
                .ok_or_else(|| Error::Config(format!("missing law key `{k}`")))
        };
        let parse_f = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("law key `{k}`: {e}")))
        };
        let family = get("family")?.as_str();
        let alpha = parse_f("alpha")?;
        let support = match kv.get("support").map(|s| s.as_str()).unwrap_or("nonnegative") {
            "nonnegative" => Support::Nonnegative,
            "centered" => Support::Centered,
            other => {
                return Err(Error::Config(format!("unknown support `{other}`")));
            }
        };
        let family = match family {
            "pure-power" => Family::PurePower,
            "log-power" => Family::LogPower {
                beta_log: parse_f("beta_log")?,
            },
            "boundary-half" => Family::BoundaryHalf {
                beta_log: parse_f("beta_log")?,
            },
            "oscillating" => Family::Oscillating {
                amplitude: parse_f("osc_amplitude")?,
                exponent: parse_f("osc_exponent")?,
            },
            "spike-perturbed" => Family::SpikePerturbed {
                coeff: parse_f("spike_coeff")?,
                kmin: get("spike_kmin")?
                    .parse::<u32>()
                    .map_err(|e| Error::Config(format!("law key `spike_kmin`: {e}")))?,
            },
            "custom-table" => {
                let mut pmf = Vec::new();
                for part in get("custom_pmf")?.split(';').filter(|s| !s.is_empty()) {
                    let (x, p) = part
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("bad custom_pmf entry `{part}`")))?;
                    pmf.push((
                        x.trim()
                            .parse::<i64>()
                            .map_err(|e| Error::Config(format!("custom_pmf x: {e}")))?,
                        p.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Config(format!("custom_pmf p: {e}")))?,
                    ));
                }
                let truncated = match kv.get("custom_truncated") {
                    Some(t) => t
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("custom_truncated: {e}")))?,
                    None => 0.0,
                };
                Family::CustomTable { pmf, truncated }
            }
            other => {
                return Err(Error::Config(format!("unknown family `{other}`")));
            }
        };
        let spec = TailSpec {
            alpha,
            family,
            support,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(law: &LatticeLaw) {
        // Mass balance.
        let mut mass = KahanSum::new();
        let (pmf, _) = law.pmf();
        for &p in pmf {
            assert!(p >= 0.0);
            mass.add(p);
        }
        mass.add(law.truncated_mass());
        assert!((mass.value() - 1.0).abs() <= MASS_TOL);
        // Tail is non-increasing and consistent with cumulative pmf.
        let mut prev = 1.0;
        for x in 0..=law.xmax() {
            let t = law.tail_at(x);
            assert!(t <= prev + 1e-15, "tail increases at {x}");
            prev = t;
            let mut s = KahanSum::new();
            if x % 97 == 0 || x == law.xmax() {
                for z in (x + 1)..=law.xmax() {
                    s.add(law.pmf_at(z));
                }
                s.add(law.truncated_upper());
                assert!(
                    (t - s.value()).abs() <= MASS_TOL,
                    "tail/pmf mismatch at {x}: {t} vs {}",
                    s.value()
                );
            }
        }
        assert!(law.aperiodic());
    }

    #[test]
    fn pure_power_half_atoms() {
        let law = build_law(&TailSpec::pure_power(0.5), 64).unwrap();
        // F̄(x) = x^{-1/2} with F̄(0) = 1, so the first positive atom sits
        // at 2 with mass F̄(1) - F̄(2) = 1 - 2^{-1/2}.
        assert_eq!(law.pmf_at(1), 0.0);
        let expect = 1.0 - 0.5f64.sqrt();
        assert!((law.pmf_at(2) - expect).abs() < 1e-15);
        assert!((law.tail_at(4) - 0.5).abs() < 1e-15);
        check_invariants(&law);
    }

    #[test]
    fn spike_family_has_local_maxima_at_spikes() {
        let law = build_law(&TailSpec::spike_perturbed(0.3, 1.0, 3), 1 << 12).unwrap();
        for k in 3..=12u32 {
            let x = 1i64 << k;
            assert!(law.pmf_at(x) > law.pmf_at(x - 1), "no spike at 2^{k}");
            if x < law.xmax() {
                assert!(law.pmf_at(x) > law.pmf_at(x + 1), "no spike at 2^{k}");
            }
        }
        check_invariants(&law);
    }

    #[test]
    fn all_families_satisfy_invariants() {
        let specs = [
            TailSpec::pure_power(0.7),
            TailSpec::pure_power(0.4),
            TailSpec::log_power(0.5, 1.0),
            TailSpec::boundary_half(1.0),
            TailSpec::oscillating(0.7, 0.2, 0.5),
            TailSpec::spike_perturbed(0.3, 1.0, 3),
            TailSpec::pure_power_centered(1.5),
            TailSpec::pure_power_centered(0.7),
        ];
        for spec in &specs {
            let law = build_law(spec, 4096).unwrap();
            check_invariants(&law);
        }
    }

    #[test]
    fn centered_law_is_symmetric_with_zero_mean() {
        let law = build_law(&TailSpec::pure_power_centered(1.5), 512).unwrap();
        let mut mean = KahanSum::new();
        for z in -512..=512i64 {
            assert_eq!(law.pmf_at(z), law.pmf_at(-z));
            mean.add(z as f64 * law.pmf_at(z));
        }
        assert!(mean.value().abs() < 1e-15);
        assert_eq!(law.pmf_at(0), 0.0);
        // tail(0) = half the non-truncated mass... exactly P(X > 0) = 1/2.
        assert!((law.tail_at(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regular_variation_of_pure_power_tails() {
        let law = build_law(&TailSpec::pure_power(0.7), 4096).unwrap();
        for x in [8i64, 32, 128, 512, 1024] {
            let ratio = law.tail_at(2 * x) / law.tail_at(x);
            assert!((ratio - 2f64.powf(-0.7)).abs() < 1e-14);
        }
    }

    #[test]
    fn custom_table_round_trip_and_periodic_rejection() {
        let spec = TailSpec::custom(vec![(1, 0.5), (3, 0.5)], 0.0, 0.5);
        let law = build_law(&spec, 8).unwrap();
        assert_eq!(law.xmin(), 1);
        check_invariants(&law);

        let bad = TailSpec::custom(vec![(2, 0.5), (4, 0.5)], 0.0, 0.5);
        assert!(matches!(
            build_law(&bad, 8),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn invalid_params_are_config_errors() {
        assert!(matches!(
            build_law(&TailSpec::pure_power(1.2), 64),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_law(&TailSpec::pure_power(0.5), 4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_law(&TailSpec::oscillating(0.3, 0.8, 0.9), 64),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_law(&TailSpec::spike_perturbed(0.6, 1.0, 3), 64),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn negative_custom_mass_is_construction_error() {
        let spec = TailSpec::custom(vec![(1, 1.1), (2, -0.1)], 0.0, 0.5);
        assert!(matches!(
            build_law(&spec, 8),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn kv_round_trip() {
        let specs = [
            TailSpec::pure_power(0.7),
            TailSpec::oscillating(0.7, 0.2, 0.5),
            TailSpec::spike_perturbed(0.3, 1.0, 3),
            TailSpec::custom(vec![(1, 0.5), (3, 0.5)], 0.0, 0.5),
        ];
        for spec in &specs {
            let kv = spec.to_kv();
            let back = TailSpec::from_kv(&kv).unwrap();
            assert_eq!(&back, spec);
        }
        let mut kv = TailSpec::pure_power(0.7).to_kv();
        kv.insert("bogus".into(), "1".into());
        assert!(matches!(TailSpec::from_kv(&kv), Err(Error::Config(_))));
    }
}
