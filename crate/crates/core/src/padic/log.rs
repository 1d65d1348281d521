//! Truncated p-adic logarithm and exponential on `U(i) = 1 + P^i`.

use super::modulus::{inv_mod, vp};
use super::quad::{El, Ring};
use crate::error::{Error, Result};

fn check_index(ring: &Ring, i: u32) -> Result<()> {
    // i > e/(p-1)
    if (i as u64) * (ring.p - 1) <= ring.e() as u64 {
        return Err(Error::ConvergenceError);
    }
    Ok(())
}

/// Divide `x` (known modulo `p^K`) exactly by `p^s`.
fn div_p_pow(ring_hi: &Ring, x: El, s: u32) -> Result<El> {
    let ps = ring_hi.p.pow(s);
    if x.a % ps != 0 || x.b % ps != 0 {
        return Err(Error::InternalInconsistency(
            "series term not divisible by its denominator".into(),
        ));
    }
    Ok(El {
        a: x.a / ps,
        b: x.b / ps,
    })
}

fn log_p_real(p: u64, j: u64) -> f64 {
    (j as f64).ln() / (p as f64).ln()
}

/// `log(u)` for `u` in `U(i)`, returned modulo `p^k`.
pub fn padic_log(ring: &Ring, u: El, i: u32) -> Result<El> {
    check_index(ring, i)?;
    let one = ring.from_int(1);
    let x = ring.sub(u, one);
    let v = ring.val(x);
    if v < i {
        return Err(Error::DomainError(format!(
            "v_L(u-1) = {v} is below the filtration index {i}"
        )));
    }
    let ek = (ring.e() * ring.k) as f64;
    if v as f64 >= ek {
        return Ok(El::ZERO);
    }
    let (p, e) = (ring.p, ring.e() as f64);
    // Past `jmax` every term vanishes modulo p^k.
    let mut jmax = 1u64;
    loop {
        let j = jmax as f64;
        if jmax >= 2 && j * v as f64 - e * log_p_real(p, jmax) >= ek {
            break;
        }
        jmax += 1;
    }
    let extra = (1..jmax).map(|j| vp(p, j).unwrap()).max().unwrap_or(0);
    let hi = ring.with_k(ring.k + extra)?;
    let xh = El { a: x.a, b: x.b };
    let pk = ring.pk();
    let mut acc = El::ZERO;
    let mut pw = xh;
    for j in 1..jmax {
        let s = vp(p, j).unwrap();
        let t = div_p_pow(&hi, pw, s)?;
        let t = El {
            a: t.a % pk,
            b: t.b % pk,
        };
        let unit = inv_mod(j / p.pow(s) % pk, pk).ok_or(Error::NotAUnit)?;
        let t = ring.scale(unit, t);
        acc = if j % 2 == 1 { ring.add(acc, t) } else { ring.sub(acc, t) };
        pw = hi.mul(pw, xh);
    }
    Ok(acc)
}

/// Truncated `exp(x)` for `v_L(x) > e/(p-1)`, returned modulo `p^k`.
pub fn padic_exp(ring: &Ring, x: El) -> Result<El> {
    let v = ring.val(x);
    let (p, e) = (ring.p, ring.e() as u64);
    if (v as u64) * (p - 1) <= e {
        return Err(Error::ConvergenceError);
    }
    let ek = ring.e() as u64 * ring.k as u64;
    if v as u64 >= ek {
        return Ok(ring.from_int(1));
    }
    // Lower bound for v_L(x^j/j!) is j*v - e*(j-1)/(p-1), increasing in j.
    let mut jmax = 1u64;
    while (jmax * v as u64) * (p - 1) < ek * (p - 1) + e * (jmax - 1) {
        jmax += 1;
    }
    let vfact = |j: u64| -> u32 {
        let mut s = 0;
        let mut q = p;
        while q <= j {
            s += (j / q) as u32;
            q *= p;
        }
        s
    };
    let extra = vfact(jmax);
    let hi = ring.with_k(ring.k + extra)?;
    let pk = ring.pk();
    let mut acc = ring.from_int(1);
    let mut pw = x;
    let mut unit_fact = 1u64;
    for j in 1..=jmax {
        let mut jj = j;
        while jj % p == 0 {
            jj /= p;
        }
        unit_fact = super::modulus::mul_mod(unit_fact, jj % pk, pk);
        let t = div_p_pow(&hi, pw, vfact(j))?;
        let t = El {
            a: t.a % pk,
            b: t.b % pk,
        };
        let inv = inv_mod(unit_fact, pk).ok_or(Error::NotAUnit)?;
        acc = ring.add(acc, ring.scale(inv, t));
        pw = hi.mul(pw, x);
    }
    Ok(acc)
}
