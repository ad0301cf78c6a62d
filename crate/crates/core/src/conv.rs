//! Exact convolution powers `P(S_n = x)` and renewal mass functions.
//!
//! All kernels preserve positivity up to round-off: small-work products use
//! direct schoolbook convolution with compensated summation, large products
//! go through a packed real FFT. For nonnegative laws, windows are upper
//! cuts only, which keeps every stored value exact (mass above the window
//! cannot re-enter). Two-sided laws are handled with index offsets and, when
//! windows do cut, the lost mass is tracked.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::law::LatticeLaw;
use crate::sum::KahanSum;

/// Above this `len(a) * len(b)` work bound, products switch to FFT.
const DIRECT_WORK_LIMIT: u128 = 1 << 31;

/// Memory budget for tables and full-support power chains, in f64 elements.
const ELEMENT_BUDGET: usize = 1 << 27;

/// Negative round-off clamp threshold: computed probabilities in
/// `(-CLAMP_TOL, 0)` are set to 0, anything at or below `-CLAMP_TOL`
/// raises the defect flag.
const CLAMP_TOL: f64 = 1e-12;

// --- low-level convolution kernels -----------------------------------------

/// FFT plan holder; reusing one across calls shares the cached plans.
pub(crate) struct Convolver {
    planner: FftPlanner<f64>,
}

impl Convolver {
    pub(crate) fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
        }
    }

    /// Slice `[k0, k0 + len)` of the linear convolution `a * b`.
    fn conv_slice(&mut self, a: &[f64], b: &[f64], k0: usize, len: usize) -> Vec<f64> {
        let ea = a.len().min(k0 + len);
        let eb = b.len().min(k0 + len);
        if ea == 0 || eb == 0 || len == 0 {
            return vec![0.0; len];
        }
        if (ea as u128) * (eb as u128) <= DIRECT_WORK_LIMIT {
            return conv_direct_slice(&a[..ea], &b[..eb], k0, len);
        }
        let n = (ea + eb - 1).next_power_of_two();
        let fft = self.planner.plan_fft_forward(n);
        let ifft = self.planner.plan_fft_inverse(n);
        // Pack a + i b, one forward transform, multiply the two spectra
        // recovered from the Hermitian split, one inverse transform.
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (slot, &v) in buf.iter_mut().zip(a[..ea].iter()) {
            slot.re = v;
        }
        for (slot, &v) in buf.iter_mut().zip(b[..eb].iter()) {
            slot.im = v;
        }
        fft.process(&mut buf);
        // C(k) = A(k)·B(k) = (Z(k)^2 - conj(Z(n-k))^2) / (4i)
        let quarter_neg_i = Complex::new(0.0, -0.25);
        let z0 = buf[0];
        buf[0] = (z0 * z0 - (z0.conj() * z0.conj())) * quarter_neg_i;
        let half = n / 2;
        for k in 1..=half {
            let zk = buf[k];
            let zm = buf[n - k];
            let ck = (zk * zk - (zm.conj() * zm.conj())) * quarter_neg_i;
            let cm = (zm * zm - (zk.conj() * zk.conj())) * quarter_neg_i;
            buf[k] = ck;
            buf[n - k] = cm;
        }
        ifft.process(&mut buf);
        let scale = 1.0 / n as f64;
        (k0..k0 + len)
            .map(|k| if k < n { buf[k].re * scale } else { 0.0 })
            .collect()
    }
}

/// Direct convolution slice with Neumaier-compensated accumulation.
fn conv_direct_slice(a: &[f64], b: &[f64], k0: usize, len: usize) -> Vec<f64> {
    let mut sum = vec![0.0f64; len];
    let mut comp = vec![0.0f64; len];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let jlo = k0.saturating_sub(i).min(b.len());
        let jhi = (k0 + len).saturating_sub(i).min(b.len());
        for (j, &bj) in b[jlo..jhi].iter().enumerate() {
            let k = i + jlo + j - k0;
            let v = ai * bj;
            let s = sum[k];
            let t = s + v;
            comp[k] += if s.abs() >= v.abs() {
                (s - t) + v
            } else {
                (v - t) + s
            };
            sum[k] = t;
        }
    }
    sum.iter().zip(comp.iter()).map(|(s, c)| s + c).collect()
}

/// A finitely supported sequence with explicit base index.
#[derive(Debug, Clone)]
pub(crate) struct Seq {
    pub lo: i64,
    pub v: Vec<f64>,
}

impl Seq {
    pub(crate) fn hi(&self) -> i64 {
        self.lo + self.v.len() as i64 - 1
    }

    pub(crate) fn at(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i as usize >= self.v.len() {
            0.0
        } else {
            self.v[i as usize]
        }
    }

    fn mass(&self) -> f64 {
        let mut s = KahanSum::new();
        for &p in &self.v {
            s.add(p);
        }
        s.value()
    }

    /// Convolution clipped to the absolute index window `[wlo, whi]`.
    ///
    /// The upper cut is exact for sequences supported on nonnegative
    /// indices; the lower cut merely truncates storage and is exact only
    /// when the inputs themselves were not lower-cut.
    fn conv_window(&self, other: &Seq, cv: &mut Convolver, wlo: i64, whi: i64) -> Seq {
        let lo_c = self.lo + other.lo;
        let hi_c = self.hi() + other.hi();
        let lo = lo_c.max(wlo);
        let hi = hi_c.min(whi);
        if hi < lo {
            return Seq {
                lo: wlo,
                v: Vec::new(),
            };
        }
        let k0 = (lo - lo_c) as usize;
        let len = (hi - lo + 1) as usize;
        let mut v = cv.conv_slice(&self.v, &other.v, k0, len);
        for x in &mut v {
            if *x < 0.0 && *x > -CLAMP_TOL {
                *x = 0.0;
            }
        }
        Seq { lo, v }
    }
}

/// Windowed n-fold convolution power of a positive sequence, evaluated at a
/// single point. Nonnegative-index sequences use the exact `[0, x]` window;
/// general sequences keep their full support at every stage.
pub(crate) fn power_at(base: &Seq, n: u64, x: i64, cv: &mut Convolver) -> Result<f64> {
    assert!(n >= 1);
    if base.v.is_empty() {
        return Ok(0.0);
    }
    let one_sided = base.lo >= 0;
    let (wlo, whi) = if one_sided {
        (0i64, x)
    } else {
        // Full reachable support; mass budget check below.
        let lo = base.lo.saturating_mul(n as i64).min(0);
        let hi = (base.hi().saturating_mul(n as i64)).max(x);
        (lo, hi)
    };
    if !one_sided {
        let width = (whi - wlo + 1) as u128;
        if width > ELEMENT_BUDGET as u128 {
            return Err(Error::Resource(format!(
                "two-sided power window of {width} elements exceeds the budget; \
                 reduce n or x"
            )));
        }
    }
    let mut result: Option<Seq> = None;
    let mut sq = base.clone();
    let mut rem = n;
    loop {
        if rem & 1 == 1 {
            result = Some(match result {
                None => sq.clone(),
                Some(r) => r.conv_window(&sq, cv, wlo, whi),
            });
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        sq = sq.conv_window(&sq, cv, wlo, whi);
    }
    Ok(result.map(|r| r.at(x).max(0.0)).unwrap_or(0.0))
}

// --- convolution tables -----------------------------------------------------

/// Table of rows `P(S_n = x)` for `1 <= n <= nmax` on a fixed window.
#[derive(Debug, Clone)]
pub struct ConvTable {
    pub nmax: usize,
    /// Window bounds (absolute indices).
    pub xlo: i64,
    pub xhi: i64,
    rows: Vec<Vec<f64>>,
    /// Total mass of each row.
    pub row_mass: Vec<f64>,
    /// Mass lost per step to the window cut and the law's own truncation.
    pub lost_mass: Vec<f64>,
    /// Set when a computed value fell at or below the clamp threshold.
    pub clamp_defect: bool,
}

impl ConvTable {
    /// `P(S_n = x)`; zero outside the window.
    pub fn prob(&self, n: usize, x: i64) -> f64 {
        assert!(n >= 1 && n <= self.nmax, "row {n} not in table");
        let i = x - self.xlo;
        if i < 0 || i as usize >= self.rows[n - 1].len() {
            0.0
        } else {
            self.rows[n - 1][i as usize]
        }
    }

    pub fn row(&self, n: usize) -> (&[f64], i64) {
        assert!(n >= 1 && n <= self.nmax);
        (&self.rows[n - 1], self.xlo)
    }
}

/// Builds the table of convolution powers by repeated convolution with the
/// step law. Rows for nonnegative laws are exact on the window; two-sided
/// windows cut both ends and account for the lost mass.
pub fn conv_table(law: &LatticeLaw, nmax: usize, xmax: i64) -> Result<ConvTable> {
    if nmax < 1 {
        return Err(Error::Config("nmax must be >= 1".into()));
    }
    if !law.aperiodic() {
        return Err(Error::Domain("conv_table requires an aperiodic law".into()));
    }
    let xlo = if law.is_nonnegative() { 0 } else { -xmax };
    let width = (xmax - xlo + 1) as usize;
    if nmax * width > ELEMENT_BUDGET {
        return Err(Error::Resource(format!(
            "table {nmax} x {width} exceeds {ELEMENT_BUDGET} elements; \
             slice the n range or lower xmax"
        )));
    }
    let (pmf, plo) = law.pmf();
    let step = Seq {
        lo: plo,
        v: pmf.to_vec(),
    };
    let step_mass = step.mass();
    let mut cv = Convolver::new();
    let mut rows = Vec::with_capacity(nmax);
    let mut row_mass = Vec::with_capacity(nmax);
    let mut lost_mass = Vec::with_capacity(nmax);
    let mut clamp_defect = false;

    let mut cur = step.conv_window(
        &Seq {
            lo: 0,
            v: vec![1.0],
        },
        &mut cv,
        xlo,
        xmax,
    );
    for n in 1..=nmax {
        let m = cur.mass();
        let expected = if n == 1 {
            step_mass
        } else {
            row_mass[n - 2] * step_mass
        };
        clamp_defect |= cur.v.iter().any(|&p| p <= -CLAMP_TOL);
        row_mass.push(m);
        lost_mass.push((expected - m).max(0.0));
        let mut stored = vec![0.0; width];
        for (i, &p) in cur.v.iter().enumerate() {
            stored[(cur.lo - xlo) as usize + i] = p.max(0.0);
        }
        rows.push(stored);
        if n < nmax {
            cur = cur.conv_window(&step, &mut cv, xlo, xmax);
        }
    }
    Ok(ConvTable {
        nmax,
        xlo,
        xhi: xmax,
        rows,
        row_mass,
        lost_mass,
        clamp_defect,
    })
}

/// One convolution power row on `[0, xmax]` (or `[-xmax, xmax]` for
/// two-sided laws), computed by windowed binary exponentiation.
#[derive(Debug, Clone)]
pub struct PowerRow {
    pub n: u64,
    pub lo: i64,
    pub v: Vec<f64>,
    /// Upper bound on the mass lost to window cuts (zero for nonnegative
    /// laws, whose windowed values are exact).
    pub lost: f64,
}

impl PowerRow {
    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.lo;
        if i < 0 || i as usize >= self.v.len() {
            0.0
        } else {
            self.v[i as usize]
        }
    }
}

/// `P(S_n = ·)` for a single (possibly large) `n` via binary exponentiation.
pub fn conv_power(law: &LatticeLaw, n: u64, xmax: i64) -> Result<PowerRow> {
    if n < 1 {
        return Err(Error::Config("n must be >= 1".into()));
    }
    let (pmf, plo) = law.pmf();
    let wlo = if law.is_nonnegative() { 0 } else { -xmax };
    let width = (xmax - wlo + 1) as usize;
    if width > ELEMENT_BUDGET {
        return Err(Error::Resource(format!(
            "power window of {width} elements exceeds the budget"
        )));
    }
    let base = Seq {
        lo: plo,
        v: pmf.to_vec(),
    };
    let mut cv = Convolver::new();
    let mut result: Option<Seq> = None;
    let mut sq = base.conv_window(
        &Seq {
            lo: 0,
            v: vec![1.0],
        },
        &mut cv,
        wlo,
        xmax,
    );
    let mut rem = n;
    loop {
        if rem & 1 == 1 {
            result = Some(match result {
                None => sq.clone(),
                Some(r) => r.conv_window(&sq, &mut cv, wlo, xmax),
            });
        }
        rem >>= 1;
        if rem == 0 {
            break;
        }
        sq = sq.conv_window(&sq, &mut cv, wlo, xmax);
    }
    let row = result.unwrap();
    let mut v = vec![0.0; width];
    for (i, &p) in row.v.iter().enumerate() {
        v[(row.lo - wlo) as usize + i] = p.max(0.0);
    }
    let mass: f64 = {
        let mut s = KahanSum::new();
        for &p in &v {
            s.add(p);
        }
        s.value()
    };
    let full = (1.0 - law.truncated_mass()).powi(n.min(i32::MAX as u64) as i32);
    Ok(PowerRow {
        n,
        lo: wlo,
        v,
        lost: if law.is_nonnegative() {
            0.0
        } else {
            (full - mass).max(0.0)
        },
    })
}

/// Requests several power rows at once, sharing the squaring chain
/// `P, P^2, P^4, ...` across them. Each row `n` is delivered on `[0, w_n]`.
/// Only nonnegative laws are supported (windows stay exact).
pub fn shared_power_rows(law: &LatticeLaw, requests: &[(u64, i64)]) -> Result<Vec<PowerRow>> {
    if !law.is_nonnegative() {
        return Err(Error::Domain(
            "shared power rows require a nonnegative law".into(),
        ));
    }
    for &(n, w) in requests {
        if n < 1 || w < 0 {
            return Err(Error::Config(format!("bad power request ({n}, {w})")));
        }
        if w > law.xmax() {
            return Err(Error::Range(format!(
                "window {w} exceeds the law horizon {}; rebuild the law with \
                 xmax >= {w}",
                law.xmax()
            )));
        }
    }
    // Batch by accumulator memory so huge windows do not pile up.
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(requests[i].1));
    let mut out: Vec<Option<PowerRow>> = vec![None; requests.len()];
    let mut batch: Vec<usize> = Vec::new();
    let mut batch_elems: usize = 0;
    for idx in order {
        let w = requests[idx].1 as usize + 1;
        if !batch.is_empty() && batch_elems + w > ELEMENT_BUDGET / 2 {
            run_power_batch(law, requests, &batch, &mut out)?;
            batch.clear();
            batch_elems = 0;
        }
        batch.push(idx);
        batch_elems += w;
    }
    if !batch.is_empty() {
        run_power_batch(law, requests, &batch, &mut out)?;
    }
    Ok(out.into_iter().map(|r| r.unwrap()).collect())
}

fn run_power_batch(
    law: &LatticeLaw,
    requests: &[(u64, i64)],
    batch: &[usize],
    out: &mut [Option<PowerRow>],
) -> Result<()> {
    let (pmf, plo) = law.pmf();
    let mut cv = Convolver::new();
    let mut acc: Vec<Option<Seq>> = vec![None; batch.len()];
    let mut sq = Seq {
        lo: plo,
        v: pmf.to_vec(),
    };
    let mut bit = 0u32;
    loop {
        // Window still needed by squarings: the largest window among
        // requests with bits above the current one.
        let more: i64 = batch
            .iter()
            .filter(|&&i| requests[i].0 >> (bit + 1) != 0)
            .map(|&i| requests[i].1)
            .max()
            .unwrap_or(-1);
        for (slot, &i) in batch.iter().enumerate() {
            let (n, w) = requests[i];
            if (n >> bit) & 1 == 1 {
                acc[slot] = Some(match acc[slot].take() {
                    None => sq.conv_window(
                        &Seq {
                            lo: 0,
                            v: vec![1.0],
                        },
                        &mut cv,
                        0,
                        w,
                    ),
                    Some(r) => r.conv_window(&sq, &mut cv, 0, w),
                });
            }
        }
        if more < 0 {
            break;
        }
        sq = sq.conv_window(&sq, &mut cv, 0, more);
        bit += 1;
    }
    for (slot, &i) in batch.iter().enumerate() {
        let (n, w) = requests[i];
        let row = acc[slot].take().expect("every request has at least one bit");
        let mut v = vec![0.0; w as usize + 1];
        for (k, &p) in row.v.iter().enumerate() {
            let idx = row.lo + k as i64;
            if (0..=w).contains(&idx) {
                v[idx as usize] = p.max(0.0);
            }
        }
        out[i] = Some(PowerRow { n, lo: 0, v, lost: 0.0 });
    }
    Ok(())
}

// --- renewal sequences ------------------------------------------------------

/// How a [`RenewalSequence`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenewalMethod {
    NaiveRecursion,
    SeriesReciprocal,
    /// The fast path tripped its residual guard and the values were
    /// recomputed by the exact recursion.
    NaiveFallback,
}

impl RenewalMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RenewalMethod::NaiveRecursion => "naive-recursion",
            RenewalMethod::SeriesReciprocal => "series-reciprocal",
            RenewalMethod::NaiveFallback => "naive-fallback",
        }
    }
}

/// Renewal mass function `g(x) = sum_n P(S_n = x)` on `0..=xmax`.
#[derive(Debug, Clone)]
pub struct RenewalSequence {
    pub g: Vec<f64>,
    pub method: RenewalMethod,
    /// Max self-consistency defect of the renewal equation.
    pub residual: f64,
}

impl RenewalSequence {
    pub fn horizon(&self) -> i64 {
        self.g.len() as i64 - 1
    }

    pub fn value(&self, x: i64) -> f64 {
        self.g[x as usize]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,g")?;
        for (x, &v) in self.g.iter().enumerate() {
            writeln!(w, "{x},{v:.16e}")?;
        }
        Ok(())
    }
}

fn renewal_preconditions(law: &LatticeLaw, xmax: i64) -> Result<()> {
    if !law.is_nonnegative() {
        return Err(Error::Domain(
            "renewal sequences require a nonnegative law".into(),
        ));
    }
    if law.pmf_at(0) > 0.0 {
        return Err(Error::Domain(
            "renewal sequences require p(0) = 0".into(),
        ));
    }
    if xmax < 1 {
        return Err(Error::Config("xmax must be >= 1".into()));
    }
    if xmax > law.xmax() {
        return Err(Error::Range(format!(
            "renewal horizon {xmax} exceeds the law horizon {}; rebuild the \
             law with xmax >= {xmax}",
            xmax
        )));
    }
    Ok(())
}

/// Renewal mass function by the exact `O(xmax^2)` recursion
/// `g(x) = sum_{w=1..x} p(w) g(x-w)`, `g(0) = 1`.
pub fn renewal_naive(law: &LatticeLaw, xmax: i64) -> Result<RenewalSequence> {
    renewal_preconditions(law, xmax)?;
    let g = naive_recursion(law, xmax);
    Ok(RenewalSequence {
        g,
        method: RenewalMethod::NaiveRecursion,
        residual: 0.0,
    })
}

fn naive_recursion(law: &LatticeLaw, xmax: i64) -> Vec<f64> {
    let n = xmax as usize + 1;
    let mut g = vec![0.0; n];
    g[0] = 1.0;
    let pmf = law.pmf_nonneg();
    for x in 1..n {
        let wmax = x.min(pmf.len() - 1);
        let mut acc = KahanSum::new();
        for w in 1..=wmax {
            acc.add(pmf[w] * g[x - w]);
        }
        g[x] = acc.value();
    }
    g
}

/// Renewal mass function via the power-series reciprocal of `1 - P(s)`,
/// Newton iteration doubling the accurate prefix each round with FFT
/// convolution as the kernel. `O(xmax log xmax)` up to log factors.
///
/// A final self-consistency pass convolves `1 - P` back against the result;
/// if the defect exceeds `1e-8` the values are recomputed by the exact
/// recursion (`NaiveFallback`), which is quadratic but unconditionally
/// accurate.
pub fn renewal_fast(law: &LatticeLaw, xmax: i64) -> Result<RenewalSequence> {
    renewal_preconditions(law, xmax)?;
    let len = xmax as usize + 1;
    let pmf = law.pmf_nonneg();
    let mut d = vec![0.0; len];
    d[0] = 1.0;
    for w in 1..len.min(pmf.len()) {
        d[w] = -pmf[w];
    }
    let mut cv = Convolver::new();
    let mut g = vec![1.0f64];
    while g.len() < len {
        let m2 = (g.len() * 2).min(len);
        // t = (1 - P) g  (mod s^m2), then g <- g (2 - t) (mod s^m2).
        let t = cv.conv_slice(&d[..m2.min(d.len())], &g, 0, m2);
        let mut u = vec![0.0; m2];
        for (i, ti) in t.iter().enumerate() {
            u[i] = if i == 0 { 2.0 - ti } else { -ti };
        }
        let mut gnext = cv.conv_slice(&g, &u, 0, m2);
        for v in &mut gnext {
            if *v < 0.0 && *v > -CLAMP_TOL {
                *v = 0.0;
            }
        }
        g = gnext;
    }
    // Self-consistency: (1 - P) * g must be the unit sequence.
    let check = cv.conv_slice(&d, &g, 0, len);
    let mut residual = 0.0f64;
    for (x, &c) in check.iter().enumerate() {
        let target = if x == 0 { 1.0 } else { 0.0 };
        residual = residual.max((c - target).abs());
    }
    if residual > 1e-8 {
        let g = naive_recursion(law, xmax);
        return Ok(RenewalSequence {
            g,
            method: RenewalMethod::NaiveFallback,
            residual: 0.0,
        });
    }
    Ok(RenewalSequence {
        g,
        method: RenewalMethod::SeriesReciprocal,
        residual,
    })
}

/// Sum of the renewal series beyond a threshold,
/// `sum_{n > n0} P(S_n = x) = (P^{n0+1} * g)(x)`,
/// computed from one windowed power row and the renewal sequence.
pub fn renewal_tail_beyond(
    law: &LatticeLaw,
    renewal: &RenewalSequence,
    n0: u64,
    x: i64,
) -> Result<f64> {
    if x > renewal.horizon() {
        return Err(Error::Range(format!(
            "x = {x} beyond the renewal horizon {}",
            renewal.horizon()
        )));
    }
    let row = conv_power(law, n0 + 1, x)?;
    let mut acc = KahanSum::new();
    for (i, &p) in row.v.iter().enumerate() {
        if p != 0.0 {
            let w = row.lo + i as i64;
            acc.add(p * renewal.g[(x - w) as usize]);
        }
    }
    Ok(acc.value())
}

// --- truncated-step convolution ---------------------------------------------

/// `P(S_n = x, max_step <= gamma x)`: the n-fold convolution of the law
/// restricted (unnormalized) to `|z| <= gamma x`, evaluated at `x`.
pub fn truncated_event_prob(law: &LatticeLaw, n: u64, x: i64, gamma: f64) -> Result<f64> {
    if n < 1 || x < 1 {
        return Err(Error::Config("need n >= 1 and x >= 1".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::Config("gamma must be > 0".into()));
    }
    let restricted = restrict_steps(law, x, gamma);
    match restricted {
        None => Ok(0.0),
        Some(seq) => {
            let mut cv = Convolver::new();
            power_at(&seq, n, x, &mut cv)
        }
    }
}

/// Law restricted to `|z| <= gamma x`; `None` when no support remains.
pub(crate) fn restrict_steps(law: &LatticeLaw, x: i64, gamma: f64) -> Option<Seq> {
    let cut = gamma * x as f64 * (1.0 + 1e-12) + 1e-12;
    let zhi = (cut.floor() as i64).min(law.xmax());
    let (pmf, plo) = law.pmf();
    let zlo = if law.is_nonnegative() {
        plo
    } else {
        plo.max(-(cut.floor() as i64))
    };
    if zhi < zlo {
        return None;
    }
    let a = (zlo - plo) as usize;
    let b = (zhi - plo) as usize;
    let v: Vec<f64> = pmf[a..=b].to_vec();
    if v.iter().all(|&p| p == 0.0) {
        return None;
    }
    Some(Seq { lo: zlo, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::{build_law, TailSpec};

    fn two_atom_half() -> LatticeLaw {
        build_law(
            &TailSpec::custom(vec![(1, 0.5), (2, 0.5)], 0.0, 0.5),
            8,
        )
        .unwrap()
    }

    #[test]
    fn conv_table_two_atom_n2() {
        let law = two_atom_half();
        let t = conv_table(&law, 2, 8).unwrap();
        assert!((t.prob(2, 2) - 0.25).abs() < 1e-15);
        assert!((t.prob(2, 3) - 0.5).abs() < 1e-15);
        assert!((t.prob(2, 4) - 0.25).abs() < 1e-15);
        assert_eq!(t.prob(2, 5), 0.0);
    }

    #[test]
    fn conv_table_first_row_is_pmf() {
        let law = build_law(&TailSpec::pure_power(0.7), 512).unwrap();
        let t = conv_table(&law, 3, 512).unwrap();
        for x in 0..=512 {
            assert_eq!(t.prob(1, x), law.pmf_at(x));
        }
    }

    #[test]
    fn conv_table_matches_triple_sum_oracle() {
        let law = build_law(&TailSpec::pure_power(0.7), 64).unwrap();
        let t = conv_table(&law, 3, 64).unwrap();
        // Brute-force oracle: sum p(a) p(b) p(c) over a + b + c = 10.
        let x = 10i64;
        let mut oracle = KahanSum::new();
        for a in 1..=x {
            for b in 1..=(x - a) {
                let c = x - a - b;
                oracle.add(law.pmf_at(a) * law.pmf_at(b) * law.pmf_at(c));
            }
        }
        assert!((t.prob(3, x) - oracle.value()).abs() < 1e-14);
    }

    #[test]
    fn conv_table_row_consistency_spot_checks() {
        let law = build_law(&TailSpec::pure_power(0.4), 256).unwrap();
        let t = conv_table(&law, 6, 256).unwrap();
        for n in 1..6usize {
            for x in (0..=256i64).step_by(13) {
                let mut direct = KahanSum::new();
                for w in 1..=x.min(law.xmax()) {
                    direct.add(law.pmf_at(w) * t.prob(n, x - w));
                }
                assert!(
                    (t.prob(n + 1, x) - direct.value()).abs() < 1e-12,
                    "row consistency fails at n={n} x={x}"
                );
            }
        }
    }

    #[test]
    fn conv_power_agrees_with_table() {
        let law = build_law(&TailSpec::pure_power(0.7), 512).unwrap();
        let t = conv_table(&law, 9, 512).unwrap();
        let row = conv_power(&law, 9, 512).unwrap();
        for x in 0..=512i64 {
            assert!((row.prob(x) - t.prob(9, x)).abs() < 1e-14);
        }
        assert_eq!(row.lost, 0.0);
    }

    #[test]
    fn renewal_deterministic_law_is_unit() {
        let law = build_law(&TailSpec::custom(vec![(1, 1.0)], 0.0, 0.5), 8).unwrap();
        let naive = renewal_naive(&law, 8).unwrap();
        for x in 0..=8 {
            assert_eq!(naive.value(x), 1.0);
        }
        let fast = renewal_fast(&law, 8).unwrap();
        for x in 0..=8 {
            assert!((fast.value(x) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn renewal_two_atom_hand_values() {
        let law = two_atom_half();
        let r = renewal_naive(&law, 8).unwrap();
        assert_eq!(r.value(0), 1.0);
        assert!((r.value(1) - 0.5).abs() < 1e-15);
        assert!((r.value(2) - 0.75).abs() < 1e-15);
        assert!((r.value(3) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn renewal_geometric_is_flat() {
        // p(x) = r (1-r)^{x-1} has g(x) = r for all x >= 1.
        let r = 0.3f64;
        let xmax = 200i64;
        let mut pts = Vec::new();
        let mut tail = 1.0;
        for x in 1..=xmax {
            let p = r * (1.0 - r).powi(x as i32 - 1);
            pts.push((x, p));
            tail -= p;
        }
        let law = build_law(&TailSpec::custom(pts, tail.max(0.0), 0.5), xmax).unwrap();
        let g = renewal_naive(&law, xmax).unwrap();
        for x in 1..=xmax {
            assert!((g.value(x) - r).abs() < 1e-12, "g({x}) = {}", g.value(x));
        }
    }

    #[test]
    fn fast_matches_naive_on_families() {
        for spec in [
            TailSpec::pure_power(0.7),
            TailSpec::pure_power(0.4),
            TailSpec::log_power(0.5, 1.0),
            TailSpec::boundary_half(1.0),
            TailSpec::spike_perturbed(0.3, 1.0, 3),
        ] {
            let law = build_law(&spec, 2048).unwrap();
            let naive = renewal_naive(&law, 2048).unwrap();
            let fast = renewal_fast(&law, 2048).unwrap();
            assert_eq!(fast.method, RenewalMethod::SeriesReciprocal);
            let mut worst = 0.0f64;
            for x in 0..=2048 {
                worst = worst.max((naive.value(x) - fast.value(x)).abs());
            }
            assert!(worst < 1e-12, "{spec:?}: max abs diff {worst}");
        }
    }

    #[test]
    fn fast_residual_small_at_scale() {
        let law = build_law(&TailSpec::pure_power(0.7), 1 << 16).unwrap();
        let fast = renewal_fast(&law, 1 << 16).unwrap();
        assert!(fast.residual <= 1e-10, "residual {}", fast.residual);
        // g(x) >= p(x): the n = 1 term of the series.
        for x in 1..=(1 << 16) {
            assert!(fast.value(x) >= law.pmf_at(x) - 1e-12);
        }
    }

    #[test]
    fn renewal_rejects_bad_laws() {
        let two_sided = build_law(&TailSpec::pure_power_centered(0.7), 64).unwrap();
        assert!(matches!(
            renewal_naive(&two_sided, 64),
            Err(Error::Domain(_))
        ));
        let with_atom_at_zero =
            build_law(&TailSpec::custom(vec![(0, 0.5), (1, 0.5)], 0.0, 0.5), 8).unwrap();
        assert!(matches!(
            renewal_fast(&with_atom_at_zero, 8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn renewal_tail_beyond_partitions_the_series() {
        let law = build_law(&TailSpec::pure_power(0.7), 4096).unwrap();
        let g = renewal_fast(&law, 4096).unwrap();
        let t = conv_table(&law, 10, 4096).unwrap();
        for x in [64i64, 512, 3000] {
            let head: f64 = (1..=10).map(|n| t.prob(n, x)).sum();
            let tail = renewal_tail_beyond(&law, &g, 10, x).unwrap();
            let total = g.value(x);
            assert!(
                (head + tail - total).abs() <= 1e-9 * total.max(1e-300),
                "partition defect at x={x}"
            );
        }
    }

    #[test]
    fn truncated_single_step_is_zero_below_gamma_one() {
        let law = build_law(&TailSpec::pure_power(0.5), 64).unwrap();
        for x in [1i64, 5, 32] {
            assert_eq!(truncated_event_prob(&law, 1, x, 0.75).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncated_uniform_enumeration() {
        let third = 1.0 / 3.0;
        let law = build_law(
            &TailSpec::custom(vec![(1, third), (2, third), (3, third)], 0.0, 0.5),
            8,
        )
        .unwrap();
        // n=2, x=4, gamma=0.75: steps capped at 3, pairs (1,3),(2,2),(3,1).
        let p = truncated_event_prob(&law, 2, 4, 0.75).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_gamma_one_single_step_is_pmf() {
        let law = build_law(&TailSpec::pure_power(0.5), 64).unwrap();
        for x in [1i64, 7, 64] {
            let p = truncated_event_prob(&law, 1, x, 1.0).unwrap();
            assert_eq!(p, law.pmf_at(x));
        }
    }

    #[test]
    fn truncated_is_dominated_by_full_probability() {
        let law = build_law(&TailSpec::pure_power(0.7), 256).unwrap();
        let t = conv_table(&law, 5, 256).unwrap();
        for n in 1..=5u64 {
            for x in [10i64, 50, 200] {
                let tr = truncated_event_prob(&law, n, x, 0.5).unwrap();
                assert!(tr <= t.prob(n as usize, x) + 1e-14);
            }
        }
    }

    #[test]
    fn shared_rows_match_conv_power() {
        let law = build_law(&TailSpec::pure_power(0.7), 2048).unwrap();
        let rows = shared_power_rows(&law, &[(3, 512), (7, 2048), (12, 1024)]).unwrap();
        for row in &rows {
            let direct = conv_power(&law, row.n, row.v.len() as i64 - 1).unwrap();
            for x in 0..row.v.len() as i64 {
                assert!(
                    (row.prob(x) - direct.prob(x)).abs() < 1e-14,
                    "n={} x={x}",
                    row.n
                );
            }
        }
    }

    #[test]
    fn partial_sums_stay_below_renewal_mass() {
        let law = build_law(&TailSpec::pure_power(0.4), 1024).unwrap();
        let t = conv_table(&law, 12, 1024).unwrap();
        let g = renewal_fast(&law, 1024).unwrap();
        for x in 1..=1024i64 {
            let partial: f64 = (1..=12).map(|n| t.prob(n, x)).sum();
            assert!(partial <= g.value(x) + 1e-10);
        }
    }
}
