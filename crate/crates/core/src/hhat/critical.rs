//! The congruence sets `T` and `T'`, `m(s)` and `Delta`.

use serde::Serialize;

use super::closed::{ell_psi, ell_xi_trace_zero};
use super::query::{kind_parts, HhatQuery};
use crate::chars::AdmissiblePair;
use crate::error::{Error, Result};
use crate::padic::modulus::{inv_mod, mul_mod};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    /// `f(s) = 0 mod p^n`.
    T,
    /// `f(s) = 0 mod p^{n+1}`.
    TPrime,
}

/// Units `s mod p^n` solving `f(s) = s^2 l_psi - s Nm(l_xi) + Nm(l_xi) l_psi = 0`
/// modulo `modulus`.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalSet {
    pub kind: CriticalKind,
    pub p: u64,
    pub n: u32,
    pub modulus: u64,
    members: Vec<u64>,
    pub lpsi: u64,
    pub nm: u64,
    pub pk: u64,
}

impl CriticalSet {
    fn f(&self, s: u64) -> u64 {
        crit_poly(s, self.lpsi, self.nm, self.pk)
    }

    /// Members, re-verified against the defining congruence.
    pub fn members(&self) -> Result<&[u64]> {
        for &s in &self.members {
            if s % self.p == 0 || self.f(s) % self.modulus != 0 {
                return Err(Error::InternalInconsistency(format!("{s} fails its defining congruence")));
            }
        }
        Ok(&self.members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `m(s) = p^{-n} f(s) mod p^{k-n}`.
    pub fn m(&self, s: u64) -> u64 {
        self.f(s) / self.p.pow(self.n)
    }
}

fn crit_poly(s: u64, lpsi: u64, nm: u64, pk: u64) -> u64 {
    let s2 = mul_mod(s, s, pk);
    let t = (mul_mod(s2, lpsi, pk) + mul_mod(nm, lpsi, pk)) % pk;
    (t + pk - mul_mod(s, nm, pk)) % pk
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalData {
    pub t: CriticalSet,
    pub t_prime: CriticalSet,
    /// `-l_psi^2/Nm(l_xi) + 1/4 mod p^k`, when `Nm(l_xi)` is a unit.
    pub delta: Option<u64>,
    pub lpsi: u64,
    pub nm: u64,
}

/// `T`, `T'` and `Delta` for a supercuspidal query with `k >= 2`.
pub fn critical_sets(q: &HhatQuery) -> Result<CriticalData> {
    let (Some(pr), _) = kind_parts(&q.desc) else {
        return Err(Error::InvalidParameter(
            "critical sets need a supercuspidal descriptor".into(),
        ));
    };
    critical_sets_for(pr, q.k, q.psi_index())
}

pub fn critical_sets_for(pr: &AdmissiblePair, k: u32, psi_index: u64) -> Result<CriticalData> {
    if k < 2 {
        return Err(Error::OutOfValidityRange("critical sets need k >= 2".into()));
    }
    let p = pr.p();
    let pk = p.pow(k);
    let ring = pr.ring(k)?;
    let nm = ring.norm(ell_xi_trace_zero(pr, k)?);
    let lpsi = ell_psi(p, k, psi_index)?;
    let n = k / 2;
    let pn = p.pow(n);
    let build = |kind: CriticalKind, modulus: u64| CriticalSet {
        kind,
        p,
        n,
        modulus,
        members: (1..pn)
            .filter(|s| s % p != 0 && crit_poly(*s, lpsi, nm, pk) % modulus == 0)
            .collect(),
        lpsi,
        nm,
        pk,
    };
    let delta = inv_mod(nm, pk).map(|inv| {
        let quarter = inv_mod(4, pk).expect("p odd");
        (quarter + pk - mul_mod(mul_mod(lpsi, lpsi, pk), inv, pk)) % pk
    });
    Ok(CriticalData {
        t: build(CriticalKind::T, pn),
        t_prime: build(CriticalKind::TPrime, pn * p),
        delta,
        lpsi,
        nm,
    })
}
