//! Integer polynomials in a few variables, rational functions, and
//! second-order jets over `Z/p^M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::modulus::{inv_mod, mul_mod, reduce_i};

/// `sum c * t^e` with exponent vectors `e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly {
    pub nvars: usize,
    pub terms: Vec<(Vec<u32>, i128)>,
}

impl Poly {
    pub fn constant(nvars: usize, c: i128) -> Self {
        Poly {
            nvars,
            terms: vec![(vec![0; nvars], c)],
        }
    }

    /// The variable `t_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly {
            nvars,
            terms: vec![(e, 1)],
        }
    }

    pub fn from_terms(nvars: usize, terms: Vec<(Vec<u32>, i128)>) -> Result<Self> {
        if terms.iter().any(|(e, _)| e.len() != nvars) {
            return Err(Error::InvalidParameter("exponent vector length".into()));
        }
        Ok(Poly { nvars, terms })
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, c)| *c != 0)
            .map(|(e, _)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval_mod(&self, t: &[u64], m: u64) -> u64 {
        let mut s = 0u64;
        for (e, c) in &self.terms {
            let mut v = reduce_i(*c, m);
            for (&ti, &ei) in t.iter().zip(e) {
                for _ in 0..ei {
                    v = mul_mod(v, ti % m, m);
                }
            }
            s = (s + v) % m;
        }
        s
    }

    /// Value, gradient and Hessian at `t` modulo `m`.
    pub fn jet(&self, t: &[u64], m: u64) -> Jet {
        let n = self.nvars;
        let mut out = Jet::constant(n, 0, m);
        for (e, c) in &self.terms {
            let mut term = Jet::constant(n, reduce_i(*c, m), m);
            for (i, &ei) in e.iter().enumerate() {
                let x = Jet::var(n, i, t[i] % m, m);
                for _ in 0..ei {
                    term = term.mul(&x);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

/// `num / den` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatFn {
    pub num: Poly,
    pub den: Poly,
}

impl RatFn {
    pub fn poly(num: Poly) -> Self {
        let n = num.nvars;
        RatFn {
            num,
            den: Poly::constant(n, 1),
        }
    }

    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if num.nvars != den.nvars {
            return Err(Error::InvalidParameter("variable count mismatch".into()));
        }
        if den.terms.iter().all(|(_, c)| *c == 0) {
            return Err(Error::InvalidRationalFunction);
        }
        Ok(RatFn { num, den })
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars
    }

    /// Denominator coefficients must not all vanish mod `p`.
    pub fn check_reducible(&self, p: u64) -> Result<()> {
        if self.den.terms.iter().all(|(_, c)| c.rem_euclid(p as i128) == 0) {
            return Err(Error::InvalidRationalFunction);
        }
        Ok(())
    }

    /// `None` outside the domain (denominator not a `p`-unit).
    pub fn eval_mod(&self, t: &[u64], p: u64, m: u64) -> Option<u64> {
        let d = self.den.eval_mod(t, m);
        if d % p == 0 {
            return None;
        }
        Some(mul_mod(self.num.eval_mod(t, m), inv_mod(d, m)?, m))
    }

    pub fn jet(&self, t: &[u64], p: u64, m: u64) -> Option<Jet> {
        let d = self.den.jet(t, m);
        if d.v % p == 0 {
            return None;
        }
        Some(self.num.jet(t, m).mul(&d.recip()?))
    }
}

/// Truncated Taylor data: value, gradient, Hessian (true second partials).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Jet {
    pub m: u64,
    pub v: u64,
    pub g: Vec<u64>,
    pub h: Vec<Vec<u64>>,
}

impl Jet {
    pub fn constant(n: usize, v: u64, m: u64) -> Self {
        Jet {
            m,
            v: v % m,
            g: vec![0; n],
            h: vec![vec![0; n]; n],
        }
    }

    pub fn var(n: usize, i: usize, v: u64, m: u64) -> Self {
        let mut j = Self::constant(n, v, m);
        j.g[i] = 1 % m;
        j
    }

    fn n(&self) -> usize {
        self.g.len()
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let m = self.m;
        let n = self.n();
        Jet {
            m,
            v: (self.v + o.v) % m,
            g: (0..n).map(|i| (self.g[i] + o.g[i]) % m).collect(),
            h: (0..n)
                .map(|i| (0..n).map(|j| (self.h[i][j] + o.h[i][j]) % m).collect())
                .collect(),
        }
    }

    pub fn scale(&self, c: u64) -> Jet {
        let m = self.m;
        Jet {
            m,
            v: mul_mod(self.v, c, m),
            g: self.g.iter().map(|&x| mul_mod(x, c, m)).collect(),
            h: self.h.iter().map(|r| r.iter().map(|&x| mul_mod(x, c, m)).collect()).collect(),
        }
    }

    /// Leibniz rule: (fg)'' = f'' g + f' g'^T + g' f'^T + f g''.
    pub fn mul(&self, o: &Jet) -> Jet {
        let m = self.m;
        let n = self.n();
        let mm = |a: u64, b: u64| mul_mod(a, b, m);
        Jet {
            m,
            v: mm(self.v, o.v),
            g: (0..n).map(|i| (mm(self.g[i], o.v) + mm(self.v, o.g[i])) % m).collect(),
            h: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let s = mm(self.h[i][j], o.v) as u128
                                + mm(self.g[i], o.g[j]) as u128
                                + mm(self.g[j], o.g[i]) as u128
                                + mm(self.v, o.h[i][j]) as u128;
                            (s % m as u128) as u64
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// `1/f`: gradient `-f'/f^2`, Hessian `-f''/f^2 + 2 f' f'^T / f^3`.
    pub fn recip(&self) -> Option<Jet> {
        let m = self.m;
        let n = self.n();
        let iv = inv_mod(self.v, m)?;
        let iv2 = mul_mod(iv, iv, m);
        let iv3 = mul_mod(iv2, iv, m);
        let neg = |x: u64| (m - x % m) % m;
        Some(Jet {
            m,
            v: iv,
            g: self.g.iter().map(|&x| neg(mul_mod(x, iv2, m))).collect(),
            h: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let a = neg(mul_mod(self.h[i][j], iv2, m));
                            let b = mul_mod(2 * mul_mod(self.g[i], self.g[j], m) % m, iv3, m);
                            (a + b) % m
                        })
                        .collect()
                })
                .collect(),
        })
    }

    /// Logarithmic derivatives `((log f)', (log f)'')` for a unit value.
    pub fn log_derivs(&self) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
        let m = self.m;
        let n = self.n();
        let iv = inv_mod(self.v, m)?;
        let iv2 = mul_mod(iv, iv, m);
        let g: Vec<u64> = self.g.iter().map(|&x| mul_mod(x, iv, m)).collect();
        let h = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let a = mul_mod(self.h[i][j], iv, m);
                        let b = mul_mod(mul_mod(self.g[i], self.g[j], m), iv2, m);
                        (a + m - b) % m
                    })
                    .collect()
            })
            .collect();
        Some((g, h))
    }
}
