//! Quotients `O/p^k O` for `O = Z_p` or the ring of integers of a quadratic
//! extension, with elements written `a + b*w`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::modulus::{is_prime, least_nonresidue, legendre, Modulus};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtKind {
    Unramified,
    Ramified,
}

/// A quadratic extension `L/Q_p`, `p` odd.
///
/// Unramified: `L = Q_p(w)`, `w^2 = eps` a nonresidue.
/// Ramified: `w = pi` with `pi^2 = u*p`, so `Tr(pi) = 0` and `Nm(pi) = -u*p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadExtDescriptor {
    pub p: u64,
    pub kind: ExtKind,
    pub datum: u64,
}

impl QuadExtDescriptor {
    pub fn unramified(p: u64) -> Result<Self> {
        Self::check_prime(p)?;
        Ok(QuadExtDescriptor {
            p,
            kind: ExtKind::Unramified,
            datum: least_nonresidue(p),
        })
    }

    /// Ramified descriptor with `pi^2 = u*p`; `u` must be a unit.
    pub fn ramified(p: u64, u: u64) -> Result<Self> {
        Self::check_prime(p)?;
        if u % p == 0 {
            return Err(Error::InvalidParameter("u must be a unit".into()));
        }
        Ok(QuadExtDescriptor {
            p,
            kind: ExtKind::Ramified,
            datum: u % p,
        })
    }

    /// The two ramified classes, `u = 1` and `u = ` least nonresidue.
    pub fn ramified_classes(p: u64) -> Result<[Self; 2]> {
        Ok([Self::ramified(p, 1)?, Self::ramified(p, least_nonresidue(p))?])
    }

    fn check_prime(p: u64) -> Result<()> {
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        Ok(())
    }

    pub fn e(&self) -> u32 {
        match self.kind {
            ExtKind::Unramified => 1,
            ExtKind::Ramified => 2,
        }
    }

    pub fn d(&self) -> u32 {
        self.e() - 1
    }

    pub fn is_valid(&self) -> bool {
        match self.kind {
            ExtKind::Unramified => legendre(self.datum as i64, self.p) == -1,
            ExtKind::Ramified => self.datum % self.p != 0,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ExtKind::Unramified => format!("unr(p={},eps={})", self.p, self.datum),
            ExtKind::Ramified => format!("ram(p={},u={})", self.p, self.datum),
        }
    }
}

/// Element `a + b*w` with coordinates reduced modulo `p^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct El {
    pub a: u64,
    pub b: u64,
}

impl El {
    pub const ZERO: El = El { a: 0, b: 0 };
    pub const ONE: El = El { a: 1, b: 0 };

    pub fn new(a: u64, b: u64) -> Self {
        El { a, b }
    }
}

/// `Z/p^k` (when `ext` is `None`) or `O_L/p^k O_L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ring {
    pub p: u64,
    pub k: u32,
    pub ext: Option<QuadExtDescriptor>,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ext {
            None => write!(f, "Z/{}^{}", self.p, self.k),
            Some(d) => write!(f, "O[{}]/{}^{}", d.label(), self.p, self.k),
        }
    }
}

impl Ring {
    pub fn base(p: u64, k: u32) -> Result<Self> {
        Modulus::new(p, k)?;
        Ok(Ring { p, k, ext: None })
    }

    pub fn ext(desc: QuadExtDescriptor, k: u32) -> Result<Self> {
        let m = Modulus::new(desc.p, k)?;
        m.pk.checked_mul(m.pk)
            .ok_or_else(|| Error::InvalidParameter("ring too large".into()))?;
        Ok(Ring {
            p: desc.p,
            k,
            ext: Some(desc),
        })
    }

    /// Same coefficient ring at another precision.
    pub fn with_k(&self, k: u32) -> Result<Self> {
        match self.ext {
            None => Ring::base(self.p, k),
            Some(d) => Ring::ext(d, k),
        }
    }

    pub fn modulus(&self) -> Modulus {
        Modulus {
            p: self.p,
            k: self.k,
            pk: self.p.pow(self.k),
        }
    }

    pub fn pk(&self) -> u64 {
        self.p.pow(self.k)
    }

    pub fn is_base(&self) -> bool {
        self.ext.is_none()
    }

    pub fn e(&self) -> u32 {
        self.ext.map_or(1, |d| d.e())
    }

    pub fn d(&self) -> u32 {
        self.ext.map_or(0, |d| d.d())
    }

    /// `w^2` reduced modulo `p^k` (zero for the base ring).
    pub fn w2(&self) -> u64 {
        let pk = self.pk();
        match self.ext {
            None => 0,
            Some(d) => match d.kind {
                ExtKind::Unramified => d.datum % pk,
                ExtKind::Ramified => ((d.datum as u128 * d.p as u128) % pk as u128) as u64,
            },
        }
    }

    /// Number of ring elements.
    pub fn size(&self) -> u64 {
        let pk = self.pk();
        if self.is_base() {
            pk
        } else {
            pk * pk
        }
    }

    /// Order of the unit group.
    pub fn unit_count(&self) -> u64 {
        let p = self.p;
        let pk = self.pk();
        match self.ext {
            None => pk / p * (p - 1),
            Some(d) => match d.kind {
                ExtKind::Unramified => (pk / p) * (pk / p) * (p * p - 1),
                ExtKind::Ramified => pk * (pk / p) * (p - 1),
            },
        }
    }

    /// Canonical integer code `a + b*p^k`, used for ordering and tables.
    pub fn code(&self, x: El) -> u64 {
        x.a + x.b * self.pk()
    }

    pub fn decode(&self, c: u64) -> El {
        let pk = self.pk();
        El {
            a: c % pk,
            b: if self.is_base() { 0 } else { c / pk },
        }
    }

    pub fn from_int(&self, a: i128) -> El {
        El {
            a: a.rem_euclid(self.pk() as i128) as u64,
            b: 0,
        }
    }

    pub fn el(&self, a: i128, b: i128) -> El {
        let pk = self.pk() as i128;
        El {
            a: a.rem_euclid(pk) as u64,
            b: if self.is_base() { 0 } else { b.rem_euclid(pk) as u64 },
        }
    }

    /// The generator `w` (zero in the base ring).
    pub fn w(&self) -> El {
        if self.is_base() {
            El::ZERO
        } else {
            El { a: 0, b: 1 % self.pk() }
        }
    }

    pub fn add(&self, x: El, y: El) -> El {
        let m = self.modulus();
        El {
            a: m.add(x.a, y.a),
            b: m.add(x.b, y.b),
        }
    }

    pub fn sub(&self, x: El, y: El) -> El {
        let m = self.modulus();
        El {
            a: m.sub(x.a, y.a),
            b: m.sub(x.b, y.b),
        }
    }

    pub fn neg(&self, x: El) -> El {
        let m = self.modulus();
        El {
            a: m.neg(x.a),
            b: m.neg(x.b),
        }
    }

    pub fn mul(&self, x: El, y: El) -> El {
        let pk = self.pk() as u128;
        let w2 = self.w2() as u128;
        let (a, b, c, d) = (x.a as u128, x.b as u128, y.a as u128, y.b as u128);
        let re = (a * c % pk + (b * d % pk) * w2) % pk;
        let im = (a * d + b * c) % pk;
        El {
            a: re as u64,
            b: im as u64,
        }
    }

    pub fn scale(&self, s: u64, x: El) -> El {
        let m = self.modulus();
        El {
            a: m.mul(s % m.pk, x.a),
            b: m.mul(s % m.pk, x.b),
        }
    }

    pub fn conj(&self, x: El) -> El {
        let m = self.modulus();
        El { a: x.a, b: m.neg(x.b) }
    }

    /// `x * conj(x) = a^2 - w^2 b^2`, an element of `Z/p^k`.
    pub fn norm(&self, x: El) -> u64 {
        let m = self.modulus();
        m.sub(m.mul(x.a, x.a), m.mul(self.w2(), m.mul(x.b, x.b)))
    }

    /// `Tr_{L/Q_p}(x) = 2a`; the identity on the base ring.
    pub fn trace(&self, x: El) -> u64 {
        if self.is_base() {
            return x.a;
        }
        self.modulus().add(x.a, x.a)
    }

    pub fn is_unit(&self, x: El) -> bool {
        if self.is_base() {
            return x.a % self.p != 0;
        }
        self.norm(x) % self.p != 0
    }

    pub fn inv(&self, x: El) -> Result<El> {
        if self.is_base() {
            let a = self.modulus().inv(x.a).ok_or(Error::NotAUnit)?;
            return Ok(El { a, b: 0 });
        }
        let n = self.modulus().inv(self.norm(x)).ok_or(Error::NotAUnit)?;
        Ok(self.scale(n, self.conj(x)))
    }

    pub fn pow(&self, x: El, mut e: u64) -> El {
        let mut r = self.from_int(1);
        let mut b = x;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// Normalized valuation `v_L`, with `v_L(0) = e*k`.
    pub fn val(&self, x: El) -> u32 {
        let m = self.modulus();
        let (va, vb) = (m.val(x.a), m.val(x.b));
        let ek = self.e() * self.k;
        match self.ext {
            None => va,
            Some(d) => match d.kind {
                ExtKind::Unramified => va.min(vb),
                ExtKind::Ramified => (2 * va).min(2 * vb + 1).min(ek),
            },
        }
    }

    /// Reduce from this ring into the same ring at precision `j <= k`.
    pub fn reduce_to(&self, x: El, j: u32) -> El {
        let pj = self.p.pow(j);
        El {
            a: x.a % pj,
            b: x.b % pj,
        }
    }

    /// `pi^j` (ramified) or `p^j` otherwise: a generator of `P^j`.
    pub fn prime_power(&self, j: u32) -> El {
        match self.ext {
            Some(d) if d.kind == ExtKind::Ramified => {
                let half = self.p.pow(j / 2) % self.pk();
                let u_half = super::modulus::pow_mod(d.datum, (j / 2) as u64, self.pk());
                let c = self.modulus().mul(half, u_half);
                if j % 2 == 0 {
                    El { a: c, b: 0 }
                } else {
                    El { a: 0, b: c }
                }
            }
            _ => {
                if j >= self.k {
                    El::ZERO
                } else {
                    El { a: self.p.pow(j), b: 0 }
                }
            }
        }
    }

    /// A `Z_p`-basis of the residue field lift: `{1}` or `{1, w}`.
    pub fn residue_basis(&self) -> Vec<El> {
        match self.ext {
            Some(d) if d.kind == ExtKind::Unramified => vec![self.from_int(1), self.w()],
            _ => vec![self.from_int(1)],
        }
    }

    /// Iterator over all elements in canonical code order.
    pub fn elements(&self) -> impl Iterator<Item = El> + '_ {
        (0..self.size()).map(move |c| self.decode(c))
    }

    pub fn units(&self) -> impl Iterator<Item = El> + '_ {
        self.elements().filter(move |&x| self.is_unit(x))
    }

    pub fn check_same(&self, o: &Ring) -> Result<()> {
        if self != o {
            Err(Error::IncompatibleRings)
        } else {
            Ok(())
        }
    }
}

/// An element bundled with its ring, for the checked public API.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadExtElement {
    pub el: El,
    pub ring: Ring,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadOp {
    Add,
    Mul,
    Inv,
    Conj,
    Norm,
    Trace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadOpResult {
    Element(QuadExtElement),
    Residue(super::modulus::ResidueInt),
}

impl QuadExtElement {
    pub fn new(ring: Ring, a: i128, b: i128) -> Self {
        QuadExtElement { el: ring.el(a, b), ring }
    }
}

/// Checked ring arithmetic; unary operations ignore `y`.
pub fn quad_ext_arith(x: &QuadExtElement, y: Option<&QuadExtElement>, op: QuadOp) -> Result<QuadOpResult> {
    use super::modulus::ResidueInt;
    let r = x.ring;
    let binary = |f: &dyn Fn(El, El) -> El| -> Result<QuadOpResult> {
        let y = y.ok_or_else(|| Error::InvalidParameter("binary op needs two operands".into()))?;
        r.check_same(&y.ring)?;
        Ok(QuadOpResult::Element(QuadExtElement {
            el: f(x.el, y.el),
            ring: r,
        }))
    };
    let elem = |el| Ok(QuadOpResult::Element(QuadExtElement { el, ring: r }));
    let res = |v| {
        Ok(QuadOpResult::Residue(ResidueInt {
            value: v,
            modulus: r.modulus(),
        }))
    };
    match op {
        QuadOp::Add => binary(&|a, b| r.add(a, b)),
        QuadOp::Mul => binary(&|a, b| r.mul(a, b)),
        QuadOp::Inv => elem(r.inv(x.el)?),
        QuadOp::Conj => elem(r.conj(x.el)),
        QuadOp::Norm => res(r.norm(x.el)),
        QuadOp::Trace => res(r.trace(x.el)),
    }
}
