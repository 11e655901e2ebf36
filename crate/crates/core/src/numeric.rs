//! Small numerical building blocks: compensated summation, bracketed root
//! finding and golden-section maximization.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value()
}

/// Finds a root of `f` in `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (zero counts as either sign).
/// Iterates until the bracket is narrower than `rel_tol` relative to its
/// midpoint, or until the midpoint stops moving in floating point.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Bisection that stops once the bracket is narrower than `abs_tol`.
pub fn bisect_abs<F>(mut f: F, mut lo: f64, mut hi: f64, abs_tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    while hi - lo > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Outcome of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
///
/// Points where `f` returns `-inf` are treated as infeasible; a function that
/// is `-inf` up to some boundary and unimodal afterwards converges to the
/// boundary from the feasible side.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };

    for _ in 0..max_iter {
        let scale = 0.5 * (a.abs() + b.abs());
        if (b - a) <= rel_tol * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            evaluations += 1;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            evaluations += 1;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Maximum {
        x: best.0,
        value: best.1,
        evaluations,
    }
}

/// `x^e` with exact shortcuts for the square root and the square, which the
/// default iso-elastic exponent hits in every response.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    if e == 0.5 {
        x.sqrt()
    } else if e == 2.0 {
        x * x
    } else {
        x.powf(e)
    }
}

/// `n` points spaced evenly on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `n` points spaced geometrically on `[lo, hi]`; both bounds must be positive.
pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (ll, lh) = (lo.ln(), hi.ln());
    linspace(ll, lh, n).into_iter().map(f64::exp).collect()
}
