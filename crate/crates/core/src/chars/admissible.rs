//! Admissible pairs `(L/Q_p, xi)` and the quadratic character `eta_L`.

use std::collections::HashSet;

use serde::Serialize;

use super::character::{enumerate_chars, MultChar};
use super::postnikov::{postnikov_ell, PostnikovElement};
use crate::error::{Error, Result};
use crate::padic::quad::{ExtKind, QuadExtDescriptor, Ring};
use crate::padic::units::unit_group_structure;

/// `eta_L` on `(Z/p^m)^x`, indexed by residue (`0` on non-units).
///
/// Computed as the indicator of the norm image.
pub fn eta_on_units(desc: &QuadExtDescriptor, m: u32) -> Result<Vec<i8>> {
    let r = Ring::ext(*desc, m)?;
    let img: HashSet<u64> = r.units().map(|t| r.norm(t)).collect();
    let md = r.modulus();
    Ok((0..r.pk())
        .map(|a| {
            if !md.is_unit(a) {
                0
            } else if img.contains(&a) {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// `eta_L(p)`: `+1` iff `p` is a norm from `L^x` (mod squares of units).
pub fn eta_at_p(desc: &QuadExtDescriptor) -> i8 {
    match desc.kind {
        // Nm(L^x) has even valuation
        ExtKind::Unramified => -1,
        ExtKind::Ramified => {
            // Nm(pi) = -u p, so p is a norm iff -u is a norm unit iff (-u/p) = 1
            let u = desc.datum as i64;
            crate::padic::modulus::legendre(-u, desc.p) as i8
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdmissiblePair {
    pub desc: QuadExtDescriptor,
    pub xi: MultChar,
    pub c0: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairData {
    pub p: u64,
    pub kind: ExtKind,
    pub e: u32,
    pub d: u32,
    pub c_xi: u32,
    pub c0: u32,
    pub c_pi: u32,
    pub vq: u32,
}

impl AdmissiblePair {
    pub fn p(&self) -> u64 {
        self.desc.p
    }

    pub fn e(&self) -> u32 {
        self.desc.e()
    }

    pub fn d(&self) -> u32 {
        self.desc.d()
    }

    pub fn c_xi(&self) -> u32 {
        self.xi.conductor()
    }

    /// Conductor exponent of the representation, `2 c0 + d`.
    pub fn c_pi(&self) -> u32 {
        2 * self.c0 + self.d()
    }

    /// `v_p(q')`.
    pub fn vq(&self) -> u32 {
        self.c0 + self.d()
    }

    pub fn data(&self) -> PairData {
        PairData {
            p: self.p(),
            kind: self.desc.kind,
            e: self.e(),
            d: self.d(),
            c_xi: self.c_xi(),
            c0: self.c0,
            c_pi: self.c_pi(),
            vq: self.vq(),
        }
    }

    /// Host ring `O_L/p^k`.
    pub fn ring(&self, k: u32) -> Result<Ring> {
        Ring::ext(self.desc, k)
    }

    /// `l_xi` at precision `p^k`, smallest admissible filtration index.
    pub fn ell_xi(&self, k: u32) -> Result<PostnikovElement> {
        if k < self.vq() {
            return Err(Error::OutOfValidityRange(format!("l_xi needs k >= v_p(q') = {}", self.vq())));
        }
        postnikov_ell(&self.xi, min_index(self.p(), self.e()), k)
    }

    pub fn label(&self) -> String {
        format!("{} c0={} xi={:?}", self.desc.label(), self.c0, self.xi.values)
    }
}

/// Least `i` with `i (p-1) > e`.
pub fn min_index(p: u64, e: u32) -> u32 {
    (e as u64 / (p - 1) + 1) as u32
}

fn check_restriction(xi: &MultChar, eta: &[i8], gen: u64) -> bool {
    let r = xi.ring();
    let n = xi.exponent();
    match xi.phase(r.from_int(gen as i128)) {
        Some(ph) => match eta[gen as usize] {
            1 => ph == 0,
            -1 => 2 * ph == n,
            _ => false,
        },
        None => false,
    }
}

/// All admissible pairs of the given kind with `c(xi) = e c0`; ramified
/// kinds cover both extension classes.
pub fn admissible_pairs(p: u64, c0: u32, kind: ExtKind) -> Result<Vec<AdmissiblePair>> {
    if p == 2 {
        return Err(Error::UnsupportedCharacteristic);
    }
    if c0 == 0 {
        return Err(Error::InvalidParameter("c0 must be at least 1".into()));
    }
    let descs: Vec<QuadExtDescriptor> = match kind {
        ExtKind::Unramified => vec![QuadExtDescriptor::unramified(p)?],
        ExtKind::Ramified => QuadExtDescriptor::ramified_classes(p)?.to_vec(),
    };
    let mut out = Vec::new();
    for desc in descs {
        out.extend(pairs_for(&desc, c0)?);
    }
    Ok(out)
}

pub fn pairs_for(desc: &QuadExtDescriptor, c0: u32) -> Result<Vec<AdmissiblePair>> {
    let ring = Ring::ext(*desc, c0)?;
    let eta = eta_on_units(desc, c0)?;
    let base_gen = unit_group_structure(Ring::base(desc.p, c0)?)?;
    let g = base_gen.gens[0].a;
    let e = desc.e();
    let chars = enumerate_chars(ring, |xi| {
        xi.conductor() == e * c0 && check_restriction(xi, &eta, g) && xi.is_regular()
    })?;
    Ok(chars.into_iter().map(|xi| AdmissiblePair { desc: *desc, xi, c0 }).collect())
}
