//! Compensated summation helpers used in the inner convolution loops.

/// Kahan–Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated dot product `sum(a[i] * b[i])` over the common prefix.
pub fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        acc.add(x * y);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensates_small_terms() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1000.0 * 1e-16)).abs() < 1e-18);
    }

    #[test]
    fn dot_matches_exact() {
        let a = [0.5, 0.25, 0.125];
        let b = [2.0, 4.0, 8.0];
        assert_eq!(kahan_dot(&a, &b), 3.0);
    }
}
