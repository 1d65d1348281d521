//! Upper bounds on `|hat H|` and their certificates.

use serde::Serialize;

use super::brute::hhat_bruteforce;
use super::closed::hhat_closed_form;
use super::critical::critical_sets;
use super::query::{kind_parts, HhatQuery, HhatValue};
use crate::error::{Error, Result};
use crate::expsums::ramanujan;
use crate::expsums::rho::rho_u64;
use crate::padic::modulus::gcd;
use crate::padic::quad::ExtKind;

/// Relative tolerance on certificates.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `2 p^{floor(3k/2)} / C(psi)`, `k >= c0 + 1`.
    ConductorDecay,
    /// `p^{k/2} rho(Delta, p^n)`, `k = c0 = 2n`.
    RhoEven,
    /// `p^{k/2} (rho(Delta, p^n) + p^{1/2} rho(Delta/p^2, p^{n-1}) [p^2 | Delta])`, `k = c0 = 2n + 1`.
    RhoOdd,
    /// `p^{k/2} p^{3j/2}` for `a = (p^j, p^j, p^j)` up to units.
    Degenerate,
    /// `|S(Nm(l_xi), 0; p^k)|` for trivial `psi`, `k >= c0 + 1`.
    TrivialRamanujan,
    /// `p^{-1} (a1, p)(a2, p)(a3, p)` for trivial `psi`, `k = c0 = 1`, `p | a1a2a3`.
    TrivialPrime,
    /// An exact vanishing statement.
    Zero,
}

impl BoundKind {
    pub fn tag(&self) -> &'static str {
        match self {
            BoundKind::ConductorDecay => "conductor-decay",
            BoundKind::RhoEven => "rho-even",
            BoundKind::RhoOdd => "rho-odd",
            BoundKind::Degenerate => "degenerate",
            BoundKind::TrivialRamanujan => "trivial-ramanujan",
            BoundKind::TrivialPrime => "trivial-prime",
            BoundKind::Zero => "zero",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Ok,
    Violated,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub query: String,
    pub kind: BoundKind,
    /// `|hat H|`.
    pub computed: f64,
    pub bound: f64,
    /// `computed / bound`, zero when both vanish.
    pub slack: f64,
    pub verdict: Verdict,
}

impl BoundCertificate {
    fn new(q: &HhatQuery, kind: BoundKind, v: &HhatValue, bound: f64) -> Self {
        let computed = v.abs();
        // a bound that is zero up to rounding asserts vanishing
        let bound = if bound < 1e-9 { 0.0 } else { bound };
        let allowed = bound * (1.0 + BOUND_TOL) + v.abs_error() + 1e-9;
        let slack = if bound > 0.0 {
            computed / bound
        } else if computed <= v.abs_error() + 1e-9 {
            0.0
        } else {
            f64::INFINITY
        };
        BoundCertificate {
            query: q.label(),
            kind,
            computed,
            bound,
            slack,
            verdict: if computed <= allowed { Verdict::Ok } else { Verdict::Violated },
        }
    }

    pub fn ok(&self) -> bool {
        self.verdict == Verdict::Ok
    }
}

/// Whether the degenerate-valuation criterion forces `hat H = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    Vanishes,
    /// All `v(a_i) = j` and `C(psi) = p^{k-j}`.
    Possible {
        j: u32,
    },
}

/// Degenerate support at `k = c0 >= 2`, `psi` nontrivial, some `v(a_i) >= 1`.
pub fn hhat_degenerate_support(q: &HhatQuery) -> Result<Support> {
    let (Some(pr), _) = kind_parts(&q.desc) else {
        return Err(Error::InvalidParameter(
            "degenerate support needs a supercuspidal descriptor".into(),
        ));
    };
    let v = q.valuations();
    if q.k != pr.c0 || q.k < 2 || q.psi.is_trivial() || v.iter().all(|&x| x == 0) {
        return Err(Error::OutOfValidityRange(
            "degenerate support needs k = c0 >= 2, psi nontrivial and p | a1a2a3".into(),
        ));
    }
    let j = v[0];
    if j >= 1 && v.iter().all(|&x| x == j) && q.psi.conductor() + j == q.k {
        Ok(Support::Possible { j })
    } else {
        Ok(Support::Vanishes)
    }
}

/// Every bound that applies to `q`, evaluated against `v`.
pub fn certify_value(q: &HhatQuery, v: &HhatValue) -> Result<Vec<BoundCertificate>> {
    let mut out = Vec::new();
    if v.branch.is_vanishing() {
        out.push(BoundCertificate::new(q, BoundKind::Zero, v, 0.0));
    }
    let (Some(pr), _) = kind_parts(&q.desc) else {
        return Ok(out);
    };
    let p = q.p();
    let k = q.k;
    let c0 = pr.c0;
    let pf = p as f64;
    let unit = q.a_is_unit();
    let trivial = q.psi.is_trivial();
    if k > c0 && unit {
        let b = 2.0 * pf.powi((3 * k / 2) as i32) / q.psi_modulus() as f64;
        out.push(BoundCertificate::new(q, BoundKind::ConductorDecay, v, b));
        if trivial && q.a_is_one() && k >= 2 {
            let nm = critical_sets(q)?.nm;
            let s = ramanujan(nm as i128, q.pk()).abs();
            out.push(BoundCertificate::new(q, BoundKind::TrivialRamanujan, v, s));
        }
    }
    if k == c0 && k == 1 && trivial && !unit {
        let b = q.a.iter().map(|&a| gcd(a, p) as f64).product::<f64>() / pf;
        out.push(BoundCertificate::new(q, BoundKind::TrivialPrime, v, b));
    }
    if k == c0 && k >= 2 && pr.desc.kind == ExtKind::Unramified {
        if q.a_is_one() {
            let cs = critical_sets(q)?;
            let delta = cs
                .delta
                .ok_or_else(|| Error::InternalInconsistency("Nm(l_xi) not a unit at k = c0".into()))?;
            let n = k / 2;
            let r = rho_u64(p, delta, n) as f64;
            let base = pf.powf(k as f64 / 2.0);
            if k % 2 == 0 {
                out.push(BoundCertificate::new(q, BoundKind::RhoEven, v, base * r));
            } else {
                let extra = if delta % (p * p) == 0 {
                    pf.sqrt() * rho_u64(p, delta / (p * p), n - 1) as f64
                } else {
                    0.0
                };
                out.push(BoundCertificate::new(q, BoundKind::RhoOdd, v, base * (r + extra)));
            }
        }
        if !trivial && !unit {
            if let Support::Possible { j } = hhat_degenerate_support(q)? {
                let b = pf.powf(k as f64 / 2.0 + 1.5 * j as f64);
                out.push(BoundCertificate::new(q, BoundKind::Degenerate, v, b));
            }
        }
    }
    Ok(out)
}

/// The value of `q` by brute force when affordable, otherwise by the
/// closed form.
pub fn hhat_eval(q: &HhatQuery) -> Result<HhatValue> {
    match hhat_bruteforce(q) {
        Err(Error::BudgetExceeded { .. }) => hhat_closed_form(q),
        r => r,
    }
}

/// Certificates for `q`, with `|hat H|` from [`hhat_eval`].
pub fn certify_bounds(q: &HhatQuery) -> Result<Vec<BoundCertificate>> {
    certify_value(q, &hhat_eval(q)?)
}
