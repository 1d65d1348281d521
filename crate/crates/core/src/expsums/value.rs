//! Sum carriers: compensated complex accumulation and exact phase counts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cyclo::Cyclotomic;
use super::roots::RootTable;

/// Unit roundoff of f64.
pub const EPS: f64 = f64::EPSILON / 2.0;

/// A computed sum `scale * amplitude`.
///
/// `amplitude` is the raw sum, `scale = scale_num / scale_den` the exact
/// normalizing factor, and `error` bounds the rounding in `amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpSumValue {
    pub amplitude: Complex64,
    pub scale_num: u128,
    pub scale_den: u128,
    pub terms: u64,
    pub error: f64,
}

impl ExpSumValue {
    pub fn exact_int(v: i128) -> Self {
        ExpSumValue {
            amplitude: Complex64::new(v as f64, 0.0),
            scale_num: 1,
            scale_den: 1,
            terms: v.unsigned_abs() as u64,
            error: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::exact_int(0)
    }

    pub fn from_complex(z: Complex64, terms: u64, error: f64) -> Self {
        ExpSumValue {
            amplitude: z,
            scale_num: 1,
            scale_den: 1,
            terms,
            error,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale_num as f64 / self.scale_den as f64
    }

    /// Normalized value `scale * amplitude`.
    pub fn value(&self) -> Complex64 {
        self.amplitude * self.scale()
    }

    /// Rounding bound on `value()`.
    pub fn value_error(&self) -> f64 {
        self.error * self.scale() + 2.0 * EPS * self.value().norm()
    }

    pub fn abs(&self) -> f64 {
        self.value().norm()
    }

    pub fn with_scale(mut self, num: u128, den: u128) -> Self {
        let g = num_integer::gcd(num, den);
        self.scale_num = num / g;
        self.scale_den = den / g;
        self
    }

    /// Multiply the raw amplitude by an exact integer.
    pub fn times_int(mut self, m: i128) -> Self {
        self.amplitude *= m as f64;
        self.error *= m.unsigned_abs() as f64;
        self.terms = self.terms.saturating_mul(m.unsigned_abs() as u64);
        self
    }

    /// Multiply by a unimodular constant computed to near machine precision.
    pub fn times_unit(mut self, z: Complex64) -> Self {
        self.error += 4.0 * EPS * self.amplitude.norm();
        self.amplitude *= z;
        self
    }

    /// Does this agree with `o` within both error budgets plus `tol`?
    pub fn approx_eq(&self, o: &ExpSumValue, tol: f64) -> bool {
        (self.value() - o.value()).norm() <= self.value_error() + o.value_error() + tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.value().norm() <= self.value_error() + tol
    }
}

/// Kahan-compensated complex accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: Complex64,
    comp: Complex64,
    abs_sum: f64,
    terms: u64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
        self.abs_sum += x.norm();
        self.terms += 1;
    }

    pub fn merge(&mut self, o: &KahanSum) {
        let (terms, abs_sum) = (self.terms, self.abs_sum);
        self.add(o.sum);
        self.add(-o.comp);
        self.terms = terms + o.terms;
        self.abs_sum = abs_sum + o.abs_sum;
    }

    pub fn sum(&self) -> Complex64 {
        self.sum
    }

    /// Value with an error bound covering per-term evaluation (a few ulps
    /// each) and compensated accumulation.
    pub fn finish(&self) -> ExpSumValue {
        let n = self.terms as f64;
        let error = (6.0 * EPS + n * EPS * EPS) * self.abs_sum.max(1.0);
        ExpSumValue::from_complex(self.sum, self.terms, error)
    }
}

/// Multiset of phases `j/n`; exact representation of `sum c_j e(j/n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseHist {
    pub n: u64,
    pub counts: Vec<i64>,
}

impl PhaseHist {
    pub fn new(n: u64) -> Self {
        PhaseHist {
            n,
            counts: vec![0; n as usize],
        }
    }

    #[inline]
    pub fn add(&mut self, phase: u64, mult: i64) {
        self.counts[(phase % self.n) as usize] += mult;
    }

    pub fn merge(&mut self, o: &PhaseHist) {
        for (a, b) in self.counts.iter_mut().zip(&o.counts) {
            *a += *b;
        }
    }

    pub fn total_terms(&self) -> u64 {
        self.counts.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// Product of sums (convolution of phase multisets).
    pub fn mul(&self, o: &PhaseHist) -> PhaseHist {
        assert_eq!(self.n, o.n);
        let mut out = PhaseHist::new(self.n);
        for (i, &a) in self.counts.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.counts.iter().enumerate() {
                if b != 0 {
                    out.add((i + j) as u64, a * b);
                }
            }
        }
        out
    }

    pub fn to_value(&self) -> ExpSumValue {
        let roots = RootTable::new(self.n);
        let mut acc = KahanSum::new();
        let mut abs = 0u64;
        for (j, &c) in self.counts.iter().enumerate() {
            if c != 0 {
                acc.add(roots.get(j as u64) * c as f64);
                abs += c.unsigned_abs();
            }
        }
        let mut v = acc.finish();
        v.terms = abs;
        v.error = (6.0 * EPS + acc.terms as f64 * EPS * EPS) * (abs as f64).max(1.0);
        v
    }

    /// Exact element of `Z[zeta_n]`.
    pub fn to_cyclotomic(&self) -> crate::Result<Cyclotomic> {
        Cyclotomic::from_counts(self.n, &self.counts)
    }

    /// View with phases rescaled to denominator `m` (a multiple of `n`).
    pub fn lift(&self, m: u64) -> PhaseHist {
        assert_eq!(m % self.n, 0);
        let f = m / self.n;
        let mut out = PhaseHist::new(m);
        for (j, &c) in self.counts.iter().enumerate() {
            if c != 0 {
                out.add(j as u64 * f, c);
            }
        }
        out
    }
}

/// Twelve significant digits, shortest form.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().expect("formatted float parses");
    format!("{}", v)
}
