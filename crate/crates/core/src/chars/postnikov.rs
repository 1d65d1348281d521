//! Postnikov elements: `chi(1+u) = e_{p^k}(Tr(l * log(1+u)))` on `P^i`.

use serde::{Deserialize, Serialize};

use super::character::MultChar;
use crate::error::{Error, Result};
use crate::padic::log::padic_log;
use crate::padic::modulus::gcd;
use crate::padic::quad::{El, Ring};
use crate::padic::snf::solve_mod;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostnikovElement {
    /// Host ring `O/p^k`; `ell` lives here.
    pub ring: Ring,
    pub ell: El,
    /// Identity holds on `1 + P^i`.
    pub i: u32,
    /// `ell` is determined modulo `P^ambiguity`.
    pub ambiguity: u32,
}

impl PostnikovElement {
    pub fn k(&self) -> u32 {
        self.ring.k
    }

    /// `Tr(ell * log(1+u))` as a phase modulo `p^k`.
    pub fn phase(&self, u: El) -> Result<u64> {
        let r = &self.ring;
        let lg = padic_log(r, r.add(r.from_int(1), u), self.i)?;
        Ok(r.trace(r.mul(self.ell, lg)))
    }

    /// Check the defining identity on all of `P^i` mod `p^k`.
    pub fn verify_exhaustive(&self, chi: &MultChar) -> Result<bool> {
        let r = self.ring;
        let n = chi.exponent() as u128;
        let pk = r.pk() as u128;
        for u in r.elements() {
            if r.val(u) < self.i {
                continue;
            }
            let x = r.add(r.from_int(1), u);
            let lhs = chi.phase_from(&r, x).ok_or(Error::NotAUnit)? as u128;
            let rhs = self.phase(u)? as u128;
            // lhs / n == rhs / pk  (mod 1)
            if (lhs * pk) % (n * pk) != (rhs * n) % (n * pk) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Z_p-basis of `P^i` inside `O/p^k`.
fn ideal_basis(r: &Ring, i: u32) -> Vec<El> {
    if r.is_base() {
        return vec![r.prime_power(i)];
    }
    match r.e() {
        1 => vec![r.prime_power(i), r.mul(r.prime_power(i), r.w())],
        _ => vec![r.prime_power(i), r.prime_power(i + 1)],
    }
}

/// Exponents `(a_x, a_y)` with the kernel of `l -> (Tr(l w))_w` equal to
/// `p^{a_x} + p^{a_y} w`.
fn kernel_exponents(r: &Ring, i: u32) -> (u32, u32) {
    let k = r.k;
    if r.is_base() || r.e() == 1 {
        let a = k.saturating_sub(i);
        return (a, a);
    }
    // v_L(l) >= 2k - 1 - i
    let t = (2 * k).saturating_sub(1 + i);
    (t.div_ceil(2).min(k), t.saturating_sub(1).div_ceil(2).min(k))
}

pub fn postnikov_ell(chi: &MultChar, i: u32, k: u32) -> Result<PostnikovElement> {
    let base = chi.ring();
    let r = base.with_k(k)?;
    let e = r.e();
    if (i as u64) * (r.p - 1) <= e as u64 {
        return Err(Error::ConvergenceError);
    }
    let amb = if r.is_base() {
        k.saturating_sub(i)
    } else {
        (e * k).saturating_sub(r.d() + i)
    };
    if chi.is_trivial() {
        return Ok(PostnikovElement {
            ring: r,
            ell: El::ZERO,
            i,
            ambiguity: amb,
        });
    }
    let c = chi.conductor();
    if c.div_ceil(e) > base.k.max(k) {
        return Err(Error::InvalidParameter(format!("conductor {c} exceeds the precision p^{k}")));
    }
    if c <= i {
        // trivial on 1 + P^i
        return Ok(PostnikovElement {
            ring: r,
            ell: El::ZERO,
            i,
            ambiguity: amb,
        });
    }
    // l = p^k alpha with v_L(alpha) = -c - d must be integral
    if e * k < c + r.d() {
        return Err(Error::OutOfValidityRange(format!(
            "conductor {c} needs e k >= c + d, got k = {k}"
        )));
    }
    let pk = r.pk() as i128;
    let n = chi.exponent();
    let basis = ideal_basis(&r, i);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for y in &basis {
        let w = padic_log(&r, r.add(r.from_int(1), *y), i)?;
        let ph = chi.phase_from(&r, r.add(r.from_int(1), *y)).ok_or(Error::NotAUnit)?;
        let g = gcd(ph, n);
        let den = n / g;
        if (r.pk()) % den != 0 {
            return Err(Error::InternalInconsistency(
                "character value on 1 + P^i is not a p^k-th root of unity".into(),
            ));
        }
        rhs.push((ph / g) as i128 * (r.pk() / den) as i128);
        if r.is_base() {
            rows.push(vec![w.a as i128]);
        } else {
            rows.push(vec![2 * w.a as i128, 2 * (r.w2() as i128) * w.b as i128]);
        }
    }
    let sol = solve_mod(&rows, &rhs, pk)
        .ok_or_else(|| Error::InternalInconsistency("no Postnikov element in the candidate coset".into()))?;
    let (ax, ay) = kernel_exponents(&r, i);
    let px = r.p.pow(ax) as i128;
    let py = r.p.pow(ay) as i128;
    let ell = if r.is_base() {
        r.from_int(sol[0].rem_euclid(px))
    } else {
        // least representative; the trace part vanishes when the class allows it
        r.el(sol[0].rem_euclid(px), sol[1].rem_euclid(py))
    };
    Ok(PostnikovElement {
        ring: r,
        ell,
        i,
        ambiguity: amb,
    })
}

/// `l_{chi^j} = j * l_chi` modulo the ambiguity.
pub fn scale_ell(pe: &PostnikovElement, j: u64) -> PostnikovElement {
    let r = pe.ring;
    let x = r.scale(j % r.pk(), pe.ell);
    let (ax, ay) = kernel_exponents(&r, pe.i);
    let ell = r.el((x.a % r.p.pow(ax)) as i128, (x.b % r.p.pow(ay)) as i128);
    PostnikovElement { ell, ..pe.clone() }
}

/// Do two Postnikov elements agree modulo the ambiguity ideal?
pub fn ell_equivalent(x: &PostnikovElement, y: &PostnikovElement) -> bool {
    let r = x.ring;
    let d = r.sub(x.ell, y.ell);
    r.val(d) >= x.ambiguity.min(y.ambiguity)
}
