//! Prime-power moduli and residues in `Z/p^k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted anywhere in the crate.
pub const MAX_MODULUS: u64 = 1 << 63;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Trial-division factorization, ascending primes with exponents.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

/// Reduce a signed integer into `[0, m)`.
pub fn reduce_i(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

/// `v_p(n)` for `n > 0`; `None` for zero.
pub fn vp(p: u64, mut n: u64) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Some(v)
}

/// Legendre symbol `(a/p)` for odd prime `p`, valued in {-1, 0, 1}.
pub fn legendre(a: i64, p: u64) -> i32 {
    let a = reduce_i(a as i128, p);
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Least positive quadratic nonresidue modulo an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre(a as i64, p) == -1).unwrap_or(0)
}

/// The modulus `p^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modulus {
    pub p: u64,
    pub k: u32,
    pub pk: u64,
}

impl Modulus {
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter("exponent must be positive".into()));
        }
        let pk = (p as u128)
            .checked_pow(k)
            .filter(|&v| v <= MAX_MODULUS as u128)
            .ok_or_else(|| Error::InvalidParameter(format!("{p}^{k} exceeds 2^63")))?;
        Ok(Modulus { p, k, pk: pk as u64 })
    }

    /// `n = floor(k/2)`.
    pub fn half(&self) -> u32 {
        self.k / 2
    }

    /// "p^k large": `k >= 10` or `p >= 10`.
    pub fn is_large(&self) -> bool {
        self.k >= 10 || self.p >= 10
    }

    pub fn pow(&self, j: u32) -> u64 {
        self.p.pow(j)
    }

    pub fn phi(&self) -> u64 {
        self.pk / self.p * (self.p - 1)
    }

    pub fn reduce(&self, x: i128) -> u64 {
        reduce_i(x, self.pk)
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.pk {
            s - self.pk
        } else {
            s
        }
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.pk - b
        }
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.pk - a
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.pk)
    }

    pub fn pow_el(&self, a: u64, e: u64) -> u64 {
        pow_mod(a, e, self.pk)
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        if a % self.p == 0 {
            return None;
        }
        inv_mod(a, self.pk)
    }

    /// `v_p` with the convention `v_p(0) = k`.
    pub fn val(&self, a: u64) -> u32 {
        let a = a % self.pk;
        vp(self.p, a).map_or(self.k, |v| v.min(self.k))
    }

    pub fn is_unit(&self, a: u64) -> bool {
        a % self.p != 0
    }

    /// `gcd(a, p^k)` with `a` read modulo `p^k`.
    pub fn gcd_pk(&self, a: u64) -> u64 {
        self.p.pow(self.val(a))
    }
}

/// An element of `Z/p^k` bundled with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueInt {
    pub value: u64,
    pub modulus: Modulus,
}

impl ResidueInt {
    pub fn new(value: i128, modulus: Modulus) -> Self {
        ResidueInt {
            value: modulus.reduce(value),
            modulus,
        }
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.modulus != o.modulus {
            Err(Error::IncompatibleRings)
        } else {
            Ok(())
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(ResidueInt {
            value: self.modulus.add(self.value, o.value),
            modulus: self.modulus,
        })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(ResidueInt {
            value: self.modulus.sub(self.value, o.value),
            modulus: self.modulus,
        })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(ResidueInt {
            value: self.modulus.mul(self.value, o.value),
            modulus: self.modulus,
        })
    }

    pub fn inv(&self) -> Result<Self> {
        let value = self.modulus.inv(self.value).ok_or(Error::NotAUnit)?;
        Ok(ResidueInt {
            value,
            modulus: self.modulus,
        })
    }

    pub fn val(&self) -> u32 {
        self.modulus.val(self.value)
    }
}
