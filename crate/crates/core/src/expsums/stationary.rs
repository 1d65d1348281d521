//! Stationary-phase evaluation of `sum*_t chi(f(t)) theta(g(t))` modulo
//! `p^{2 alpha}` and `p^{2 alpha + 1}`.

use super::poly::{Jet, RatFn};
use super::quadform::{quad_gauss, QuadraticFormFp};
use super::roots::RootTable;
use super::value::{ExpSumValue, KahanSum, PhaseHist};
use crate::chars::{postnikov_ell, MultChar};
use crate::error::{Error, Result};
use crate::padic::modulus::{inv_mod, mul_mod, reduce_i};
use crate::padic::quad::Ring;

/// `chi(f(t)) = prod chi_i(f_i(t))`, `theta(g(t)) = e_{p^beta}(sum a_i g_i(t))`.
#[derive(Clone, Debug)]
pub struct StationaryProblem {
    pub p: u64,
    pub nvars: usize,
    pub f: Vec<RatFn>,
    pub chis: Vec<MultChar>,
    pub g: Vec<RatFn>,
    pub a: Vec<i128>,
}

#[derive(Clone, Debug)]
pub struct ReducedSum {
    pub beta: u32,
    /// Critical points `t_0 mod p^alpha` (canonical lifts).
    pub critical: Vec<Vec<u64>>,
    /// Each critical point contributes with weight `p^{n alpha}`.
    pub weight: u64,
    /// Exact value as phase counts with denominator `lcm(p^beta, ord chi)`.
    pub exact: PhaseHist,
    pub value: ExpSumValue,
}

impl StationaryProblem {
    pub fn new(p: u64, nvars: usize, f: Vec<RatFn>, chis: Vec<MultChar>, g: Vec<RatFn>, a: Vec<i128>) -> Result<Self> {
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        if f.len() != chis.len() || g.len() != a.len() {
            return Err(Error::InvalidParameter("f/chi or g/a length mismatch".into()));
        }
        if nvars == 0 || nvars > 4 {
            return Err(Error::InvalidParameter("between 1 and 4 variables".into()));
        }
        for r in f.iter().chain(&g) {
            if r.nvars() != nvars {
                return Err(Error::InvalidParameter("variable count mismatch".into()));
            }
            r.check_reducible(p)?;
        }
        for c in &chis {
            let r = c.ring();
            if !r.is_base() || r.p != p {
                return Err(Error::InvalidParameter("characters must live on (Z/p^k)^x".into()));
            }
        }
        Ok(StationaryProblem { p, nvars, f, chis, g, a })
    }

    fn check_beta(&self, beta: u32) -> Result<()> {
        for c in &self.chis {
            if c.ring().k > beta && c.conductor() > beta {
                return Err(Error::InvalidParameter("character conductor exceeds the modulus".into()));
            }
        }
        Ok(())
    }

    /// Common phase denominator.
    pub fn denominator(&self, beta: u32) -> u64 {
        self.chis
            .iter()
            .fold(self.p.pow(beta), |acc, c| num_integer::lcm(acc, c.exponent()))
    }

    /// Phase of `chi(f(t)) theta(g(t))` over `n`, `None` if the term vanishes
    /// or `t` is outside the domain.
    fn term_phase(&self, t: &[u64], beta: u32, n: u64) -> Option<u64> {
        let p = self.p;
        let pb = p.pow(beta);
        let mut ph = 0u64;
        for (fi, chi) in self.f.iter().zip(&self.chis) {
            let v = fi.eval_mod(t, p, pb)?;
            if v % p == 0 {
                return None;
            }
            let r = Ring::base(p, beta).ok()?;
            let cp = chi.phase_from(&r, r.from_int(v as i128))?;
            ph = (ph + cp * (n / chi.exponent())) % n;
        }
        let mut s = 0u64;
        for (gi, &ai) in self.g.iter().zip(&self.a) {
            let v = gi.eval_mod(t, p, pb)?;
            s = (s + mul_mod(v, reduce_i(ai, pb), pb)) % pb;
        }
        Some((ph + s * (n / pb)) % n)
    }

    /// Direct summation over `(Z/p^beta)^n`.
    pub fn naive(&self, beta: u32) -> Result<PhaseHist> {
        self.check_beta(beta)?;
        let n = self.denominator(beta);
        let pb = self.p.pow(beta);
        let mut h = PhaseHist::new(n);
        for_each_point(self.nvars, pb, |t| {
            if let Some(ph) = self.term_phase(t, beta, n) {
                h.add(ph, 1);
            }
        });
        Ok(h)
    }

    fn ells(&self, beta: u32) -> Result<Vec<u64>> {
        self.chis.iter().map(|c| Ok(postnikov_ell(c, 1, beta)?.ell.a)).collect()
    }

    /// `(l (log f)' + a g', l (log f)'' + a g'')` at `t0`, modulo `p^beta`.
    #[allow(clippy::type_complexity)]
    fn derivs(&self, t0: &[u64], beta: u32, ells: &[u64]) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
        let p = self.p;
        let m = p.pow(beta);
        let n = self.nvars;
        let mut acc = Jet::constant(n, 0, m);
        for (fi, &l) in self.f.iter().zip(ells) {
            let j = fi.jet(t0, p, m)?;
            if j.v % p == 0 {
                return None;
            }
            let (g, h) = j.log_derivs()?;
            let lj = Jet { m, v: 0, g, h };
            acc = acc.add(&lj.scale(l % m));
        }
        for (gi, &ai) in self.g.iter().zip(&self.a) {
            let j = gi.jet(t0, p, m)?;
            acc = acc.add(&j.scale(reduce_i(ai, m)));
        }
        Some((acc.g, acc.h))
    }

    fn reduce(&self, alpha: u32, odd: bool, shift: Option<&[u64]>) -> Result<ReducedSum> {
        let p = self.p;
        let beta = 2 * alpha + u32::from(odd);
        if beta == 0 {
            return Err(Error::InvalidParameter("alpha must be at least 1".into()));
        }
        self.check_beta(beta)?;
        if alpha == 0 {
            let ok =
                self.chis.iter().all(|c| c.is_trivial()) && self.g.iter().all(|g| g.den.is_constant() && g.num.degree() <= 2);
            if !ok {
                return Err(Error::InvalidParameter(
                    "alpha = 0 needs trivial characters and quadratic polynomial phases".into(),
                ));
            }
        }
        let ells = if alpha == 0 {
            vec![0; self.chis.len()]
        } else {
            self.ells(beta)?
        };
        let nden = self.denominator(beta);
        let pa = p.pow(alpha);
        let pb = p.pow(beta);
        let weight = pa.pow(self.nvars as u32);
        let inv2 = inv_mod(2, p).expect("p odd");
        let mut exact = PhaseHist::new(nden);
        let mut closed = KahanSum::new();
        let mut critical = Vec::new();
        let mut err: Option<Error> = None;
        for_each_point(self.nvars, pa, |t0| {
            if err.is_some() {
                return;
            }
            let t: Vec<u64> = match shift {
                Some(s) => t0.iter().zip(s).map(|(&x, &y)| (x + pa * y) % pb).collect(),
                None => t0.to_vec(),
            };
            let Some((grad, hess)) = self.derivs(&t, beta, &ells) else {
                return;
            };
            if grad.iter().any(|&c| c % pa != 0) {
                return;
            }
            let Some(ph) = self.term_phase(&t, beta, nden) else {
                return;
            };
            critical.push(t0.to_vec());
            let base = RootTable::root(ph, nden);
            if !odd {
                exact.add(ph, weight as i64);
                closed.add(base * weight as f64);
                return;
            }
            // G_p(Q, L): L = grad / p^alpha, Q = hess / 2, both mod p
            let l: Vec<i64> = grad.iter().map(|&c| ((c / pa) % p) as i64).collect();
            let q: Vec<Vec<i64>> = hess
                .iter()
                .map(|r| r.iter().map(|&c| (mul_mod(c % p, inv2, p)) as i64).collect())
                .collect();
            let form = match QuadraticFormFp::new(p, q, l) {
                Ok(f) => f,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            let step = nden / p;
            for_each_point(self.nvars, p, |u| {
                exact.add(ph + form.eval(u) * step, weight as i64);
            });
            match quad_gauss(&form) {
                Ok(gv) => closed.add(base * gv.value() * weight as f64),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let mut value = closed.finish();
        value.error *= p.pow(self.nvars as u32) as f64;
        Ok(ReducedSum {
            beta,
            critical,
            weight,
            exact,
            value,
        })
    }

    /// Modulus `p^{2 alpha}`.
    pub fn reduce_even(&self, alpha: u32) -> Result<ReducedSum> {
        self.reduce(alpha, false, None)
    }

    /// Modulus `p^{2 alpha + 1}`.
    ///
    /// At `p = 3`, `alpha = 1` the cubic term `l z^3/3` of `log(1 + z)`
    /// survives modulo `27`, so characters with `l != 0` are rejected.
    pub fn reduce_odd(&self, alpha: u32) -> Result<ReducedSum> {
        if self.p == 3 && alpha == 1 && self.chis.iter().any(|c| c.conductor() >= 2) {
            return Err(Error::OutOfValidityRange(
                "odd reduction at p = 3, alpha = 1 needs characters trivial on 1 + 3Z".into(),
            ));
        }
        self.reduce(alpha, true, None)
    }

    /// `reduce_odd` without the `p = 3` guard.
    pub fn reduce_odd_unchecked(&self, alpha: u32) -> Result<ReducedSum> {
        self.reduce(alpha, true, None)
    }

    /// Same reduction with every critical representative moved by
    /// `p^alpha * shift`.
    pub fn reduce_shifted(&self, alpha: u32, odd: bool, shift: &[u64]) -> Result<ReducedSum> {
        self.reduce(alpha, odd, Some(shift))
    }
}

pub fn reduce_stationary_even(prob: &StationaryProblem, alpha: u32) -> Result<ReducedSum> {
    prob.reduce_even(alpha)
}

pub fn reduce_stationary_odd(prob: &StationaryProblem, alpha: u32) -> Result<ReducedSum> {
    prob.reduce_odd(alpha)
}

/// Visit every `t in (Z/m)^n` in lexicographic order (first coordinate fastest).
pub fn for_each_point(n: usize, m: u64, mut f: impl FnMut(&[u64])) {
    let mut t = vec![0u64; n];
    loop {
        f(&t);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            t[i] += 1;
            if t[i] < m {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}
