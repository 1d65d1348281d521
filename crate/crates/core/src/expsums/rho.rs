//! `rho(Delta, p^m) = #{x mod p^m : x^2 = Delta}`.

use crate::error::{Error, Result};
use crate::padic::modulus::{legendre, ResidueInt};

fn rho_rec(p: u64, delta: u64, m: u32) -> u64 {
    if m == 0 {
        return 1;
    }
    let pm = p.pow(m);
    let d = delta % pm;
    if m == 1 {
        return (1 + legendre(d as i64, p)) as u64;
    }
    if d % p != 0 {
        return (1 + legendre(d as i64, p)) as u64;
    }
    if d % (p * p) != 0 {
        return 0;
    }
    p * rho_rec(p, d / (p * p), m - 2)
}

/// Square-root count by the valuation recursion.
pub fn rho(delta: &ResidueInt, m: u32) -> Result<u64> {
    let p = delta.modulus.p;
    if p == 2 {
        return Err(Error::UnsupportedCharacteristic);
    }
    if m > delta.modulus.k {
        return Err(Error::InvalidParameter(format!("m = {m} exceeds the precision of Delta")));
    }
    Ok(rho_rec(p, delta.value, m))
}

pub fn rho_u64(p: u64, delta: u64, m: u32) -> u64 {
    rho_rec(p, delta, m)
}

pub fn rho_brute(p: u64, delta: u64, m: u32) -> u64 {
    let pm = p.pow(m);
    let d = delta % pm;
    (0..pm).filter(|&x| (x as u128 * x as u128 % pm as u128) as u64 == d).count() as u64
}
