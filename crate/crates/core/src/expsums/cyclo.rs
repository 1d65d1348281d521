//! Exact arithmetic in `Z[zeta_n]`, as integer vectors modulo `Phi_n`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::RwLock;

use super::roots::RootTable;
use crate::error::{Error, Result};

/// Largest `phi(n)` accepted.
pub const MAX_DEGREE: u64 = 256;

static PHI_CACHE: Lazy<RwLock<HashMap<u64, Arc<Vec<i128>>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Exact division of polynomials (ascending coefficients), `b` monic.
fn poly_div_exact(a: &[i128], b: &[i128]) -> Vec<i128> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let dq = a.len() - b.len();
    let mut q = vec![0i128; dq + 1];
    for i in (0..=dq).rev() {
        let c = r[i + db];
        q[i] = c;
        if c != 0 {
            for (j, &bj) in b.iter().enumerate() {
                r[i + j] -= c * bj;
            }
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

/// Coefficients of the cyclotomic polynomial `Phi_n`, ascending.
pub fn cyclotomic_poly(n: u64) -> Arc<Vec<i128>> {
    if let Some(c) = PHI_CACHE.read().get(&n) {
        return c.clone();
    }
    let mut num = vec![0i128; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in divisors(n) {
        if d < n {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    let c = Arc::new(num);
    PHI_CACHE.write().insert(n, c.clone());
    c
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut r = n;
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            while n % q == 0 {
                n /= q;
            }
            r -= r / q;
        }
        q += 1;
    }
    if n > 1 {
        r -= r / n;
    }
    r
}

/// `sum_j c_j zeta_n^j` reduced to degree below `phi(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyclotomic {
    pub n: u64,
    pub coeffs: Vec<i128>,
}

fn reduce(n: u64, mut c: Vec<i128>) -> Result<Vec<i128>> {
    let phi = cyclotomic_poly(n);
    let d = phi.len() - 1;
    let overflow = || Error::DomainError("cyclotomic coefficient overflow".into());
    // fold modulo x^n - 1 first
    if c.len() > n as usize {
        for i in n as usize..c.len() {
            let v = c[i];
            let j = i % n as usize;
            c[j] = c[j].checked_add(v).ok_or_else(overflow)?;
        }
        c.truncate(n as usize);
    }
    for i in (d..c.len()).rev() {
        let v = c[i];
        if v == 0 {
            continue;
        }
        for (j, &pj) in phi.iter().enumerate() {
            let t = v.checked_mul(pj).ok_or_else(overflow)?;
            c[i - d + j] = c[i - d + j].checked_sub(t).ok_or_else(overflow)?;
        }
    }
    c.truncate(d);
    c.resize(d, 0);
    Ok(c)
}

impl Cyclotomic {
    fn check(n: u64) -> Result<()> {
        if euler_phi(n) > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "exact mode needs phi(n) <= {MAX_DEGREE}, got n = {n}"
            )));
        }
        Ok(())
    }

    pub fn zero(n: u64) -> Result<Self> {
        Self::check(n)?;
        Ok(Cyclotomic {
            n,
            coeffs: vec![0; euler_phi(n) as usize],
        })
    }

    pub fn from_int(n: u64, v: i128) -> Result<Self> {
        let mut z = Self::zero(n)?;
        z.coeffs[0] = v;
        Ok(z)
    }

    /// `zeta_n^j`.
    pub fn root(n: u64, j: u64) -> Result<Self> {
        Self::check(n)?;
        let mut c = vec![0i128; n as usize];
        c[(j % n) as usize] = 1;
        Ok(Cyclotomic {
            n,
            coeffs: reduce(n, c)?,
        })
    }

    pub fn from_counts(n: u64, counts: &[i64]) -> Result<Self> {
        Self::check(n)?;
        let c = counts.iter().map(|&x| x as i128).collect();
        Ok(Cyclotomic {
            n,
            coeffs: reduce(n, c)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::IncompatibleModuli);
        }
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Ok(Cyclotomic { n: self.n, coeffs })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::IncompatibleModuli);
        }
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        Ok(Cyclotomic { n: self.n, coeffs })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.n != o.n {
            return Err(Error::IncompatibleModuli);
        }
        let mut c = vec![0i128; self.coeffs.len() + o.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Ok(Cyclotomic {
            n: self.n,
            coeffs: reduce(self.n, c)?,
        })
    }

    pub fn scale(&self, m: i128) -> Self {
        Cyclotomic {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        }
    }

    /// Embed into `Z[zeta_m]` for `n | m`.
    pub fn lift(&self, m: u64) -> Result<Self> {
        if m % self.n != 0 {
            return Err(Error::IncompatibleModuli);
        }
        Self::check(m)?;
        let f = (m / self.n) as usize;
        let mut c = vec![0i128; m as usize];
        for (j, &v) in self.coeffs.iter().enumerate() {
            c[j * f] = v;
        }
        Ok(Cyclotomic {
            n: m,
            coeffs: reduce(m, c)?,
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        let t = RootTable::new(self.n);
        self.coeffs.iter().enumerate().map(|(j, &c)| t.get(j as u64) * c as f64).sum()
    }
}
