//! Kloosterman, Ramanujan and multiplicative Gauss sums.

use super::value::{ExpSumValue, PhaseHist};
use crate::chars::MultChar;
use crate::error::{Error, Result};
use crate::padic::modulus::{gcd, inv_mod, mul_mod, reduce_i};

/// `S(m, n; c) = sum*_{x mod c} e_c(m x + n xbar)` as exact phase counts.
pub fn kloosterman_hist(m: i128, n: i128, c: u64) -> PhaseHist {
    let mut h = PhaseHist::new(c);
    let (mr, nr) = (reduce_i(m, c), reduce_i(n, c));
    for x in 0..c {
        if gcd(x, c) != 1 {
            continue;
        }
        let xb = inv_mod(x, c).unwrap_or(0);
        h.add((mul_mod(mr, x, c) + mul_mod(nr, xb, c)) % c, 1);
    }
    h
}

pub fn kloosterman_classical(m: i128, n: i128, c: u64) -> ExpSumValue {
    if c == 1 {
        return ExpSumValue::exact_int(1);
    }
    kloosterman_hist(m, n, c).to_value()
}

/// Ramanujan sum `S(m, 0; c)`.
pub fn ramanujan(m: i128, c: u64) -> ExpSumValue {
    kloosterman_classical(m, 0, c)
}

/// `tau(chi, a) = sum_{x mod p^k} chi(x) e_{p^k}(a x)` for `chi` on `(Z/p^k)^x`.
pub fn gauss_sum_mult(chi: &MultChar, a: i128) -> Result<ExpSumValue> {
    let r = chi.ring();
    if !r.is_base() {
        return Err(Error::InvalidParameter("multiplicative Gauss sum needs a base ring".into()));
    }
    let pk = r.pk();
    let n = chi.exponent();
    let big = num_integer::lcm(n, pk);
    let (fn_, fp) = (big / n, big / pk);
    let ar = reduce_i(a, pk);
    let phases = chi.dense_phases();
    let mut h = PhaseHist::new(big);
    for x in 0..pk {
        let ph = phases[x as usize];
        if ph == u64::MAX {
            continue;
        }
        h.add(ph * fn_ + mul_mod(ar, x, pk) * fp, 1);
    }
    Ok(h.to_value())
}
