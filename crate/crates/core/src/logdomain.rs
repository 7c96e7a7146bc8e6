//! Log-domain probability arithmetic.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// Magnitude at which every LLR entering or leaving a SISO block saturates.
pub const LLR_CLAMP: f64 = 40.0;

/// A probability stored as its natural logarithm.
///
/// `LogProb::ZERO` (negative infinity) is the only non-finite value a
/// `LogProb` takes; NaN never arises from the operations defined here.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
#[repr(transparent)]
pub struct LogProb(pub f64);

impl LogProb {
    /// Probability zero.
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    /// Probability one.
    pub const ONE: LogProb = LogProb(0.0);

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    #[inline]
    pub fn exp(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn max(self, other: LogProb) -> LogProb {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogProb({})", self.0)
    }
}

/// Multiplication of probabilities.
impl Add for LogProb {
    type Output = LogProb;
    #[inline]
    fn add(self, rhs: LogProb) -> LogProb {
        LogProb(self.0 + rhs.0)
    }
}

impl AddAssign for LogProb {
    #[inline]
    fn add_assign(&mut self, rhs: LogProb) {
        self.0 += rhs.0;
    }
}

/// Division of probabilities. The divisor must be nonzero.
impl Sub for LogProb {
    type Output = LogProb;
    #[inline]
    fn sub(self, rhs: LogProb) -> LogProb {
        LogProb(self.0 - rhs.0)
    }
}

/// `ln(e^a + e^b)`, exact (no max-log approximation).
#[inline]
pub fn log_sum(a: LogProb, b: LogProb) -> LogProb {
    let (hi, lo) = if a.0 >= b.0 { (a.0, b.0) } else { (b.0, a.0) };
    if lo == f64::NEG_INFINITY {
        return LogProb(hi);
    }
    LogProb(hi + (lo - hi).exp().ln_1p())
}

/// The addition used by the trellis recursions.
///
/// Everything in the crate runs on [`ExactLogAdd`]; the trait exists so the
/// verification suite can inject a faulty adder and watch the invariant
/// checks catch it.
pub trait LogAdd {
    fn add(a: LogProb, b: LogProb) -> LogProb;

    fn sum<I: IntoIterator<Item = LogProb>>(iter: I) -> LogProb {
        iter.into_iter().fold(LogProb::ZERO, Self::add)
    }

    /// `out[targets[i]] ⊕= values[i]` for every `i`.
    fn scatter_add(values: &[LogProb], targets: &[u32], out: &mut [LogProb]) {
        for (&v, &t) in values.iter().zip(targets) {
            out[t as usize] = Self::add(out[t as usize], v);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExactLogAdd;

impl LogAdd for ExactLogAdd {
    #[inline]
    fn add(a: LogProb, b: LogProb) -> LogProb {
        log_sum(a, b)
    }

    fn sum<I: IntoIterator<Item = LogProb>>(iter: I) -> LogProb {
        let values: Vec<LogProb> = iter.into_iter().collect();
        let mut out = [LogProb::ZERO];
        Self::scatter_add(&values, &vec![0; values.len()], &mut out);
        out[0]
    }

    /// Shifts each group by its largest term and sums in the linear domain:
    /// one exponential per term and one logarithm per group.
    fn scatter_add(values: &[LogProb], targets: &[u32], out: &mut [LogProb]) {
        let mut peak: Vec<f64> = out.iter().map(|o| o.0).collect();
        for (&v, &t) in values.iter().zip(targets) {
            let p = &mut peak[t as usize];
            *p = p.max(v.0);
        }
        let mut acc: Vec<f64> = out
            .iter()
            .zip(&peak)
            .map(|(o, &p)| if p == f64::NEG_INFINITY { 0.0 } else { (o.0 - p).exp() })
            .collect();
        for (&v, &t) in values.iter().zip(targets) {
            let p = peak[t as usize];
            if p != f64::NEG_INFINITY {
                acc[t as usize] += (v.0 - p).exp();
            }
        }
        for ((o, &p), &a) in out.iter_mut().zip(&peak).zip(&acc) {
            if p != f64::NEG_INFINITY {
                *o = LogProb(p + a.ln());
            }
        }
    }
}

/// Log of the sum of all terms.
pub fn log_sum_all<I: IntoIterator<Item = LogProb>>(iter: I) -> LogProb {
    ExactLogAdd::sum(iter)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln P(a = bit)` for an a priori L-value, where `bit` is the amplitude
/// `+1` or `-1` (`true` meaning `+1`).
///
/// Computes `ln(e^{±La} / (1 + e^{±La}))` as `-softplus(∓La)`.
#[inline]
pub fn prior_from_llr(llr: f64, plus_one: bool) -> LogProb {
    if plus_one {
        LogProb(-softplus(-llr))
    } else {
        LogProb(-softplus(llr))
    }
}

/// Saturates an LLR to `±LLR_CLAMP`. NaN maps to 0.
#[inline]
pub fn clamp_llr(llr: f64) -> f64 {
    if llr.is_nan() {
        0.0
    } else {
        llr.clamp(-LLR_CLAMP, LLR_CLAMP)
    }
}

/// `plus - minus` as an LLR, saturating when either side has no support.
#[inline]
pub fn llr_from_sums(plus: LogProb, minus: LogProb) -> f64 {
    match (plus.is_zero(), minus.is_zero()) {
        (false, false) => plus.0 - minus.0,
        (false, true) => LLR_CLAMP,
        (true, false) => -LLR_CLAMP,
        (true, true) => 0.0,
    }
}
