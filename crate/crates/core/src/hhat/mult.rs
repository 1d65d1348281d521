//! `hat H` at a composite modulus and its twisted multiplicativity.

use num_complex::Complex64;

use super::brute::hhat_bruteforce;
use super::query::{budget_err, psi_from_index, CyclicUnits, HhatQuery, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::expsums::roots::RootTable;
use crate::expsums::value::{ExpSumValue, KahanSum, EPS};
use crate::kloosterman::{h_crt, Family, LocalRepDescriptor};
use crate::padic::modulus::{gcd, inv_mod, mul_mod};

/// One prime-power component `psi_j mod p^k` of a character mod `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsiPart {
    pub p: u64,
    pub k: u32,
    pub j: u64,
}

impl PsiPart {
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.k)
    }
}

/// `psi = prod psi_i` on `(Z/c)^x`, as a phase over `lcm(phi_i)`.
struct CompositeChar {
    c: u64,
    parts: Vec<(PsiPart, std::sync::Arc<CyclicUnits>)>,
    n: u64,
}

impl CompositeChar {
    fn new(parts: &[PsiPart]) -> Result<Self> {
        let mut c = 1u64;
        let mut n = 1u64;
        let mut v = Vec::new();
        for (i, pp) in parts.iter().enumerate() {
            if parts[..i].iter().any(|o| o.p == pp.p) {
                return Err(Error::IncompatibleModuli);
            }
            let cu = CyclicUnits::get(pp.p, pp.k)?;
            c *= cu.pk;
            n = num_integer::lcm(n, cu.phi);
            v.push((*pp, cu));
        }
        Ok(CompositeChar { c, parts: v, n })
    }

    fn phase(&self, x: u64) -> Option<u64> {
        let mut ph = 0;
        for (pp, cu) in &self.parts {
            ph += cu.phase(pp.j, x % cu.pk)? * (self.n / cu.phi);
        }
        Some(ph % self.n)
    }
}

/// `hat H(psi, a; c) = c^{-2} sum*_u psi-bar(u) sum_x H(u-bar x1x2x3, 1; c) e_c(a.x - u a1a2a3)`
/// by brute force, with `H` assembled prime by prime from `family`. The
/// value carries the same normalization as [`HhatValue`](super::HhatValue)
/// at each supercuspidal prime.
pub fn hhat_composite_bruteforce(family: &Family, parts: &[PsiPart], a: [u64; 3], budget: u64) -> Result<ExpSumValue> {
    let chi = CompositeChar::new(parts)?;
    let c = chi.c;
    let units: Vec<u64> = (1..c).filter(|&x| gcd(x, c) == 1).collect();
    let phi = units.len() as u64;
    let need = phi.saturating_pow(3);
    if need > budget {
        return Err(budget_err("composite hat H", need, budget));
    }
    let a = a.map(|x| x % c);
    let a123 = mul_mod(mul_mod(a[0], a[1], c), a[2], c);
    let roots = RootTable::new(c);
    // T(mu) = sum_{x1 x2 x3 = mu, units} e_c(a.x)
    let mut t = vec![Complex64::new(0.0, 0.0); c as usize];
    for &x1 in &units {
        for &x2 in &units {
            let x12 = mul_mod(x1, x2, c);
            let base = (mul_mod(a[0], x1, c) + mul_mod(a[1], x2, c)) % c;
            for &x3 in &units {
                let mu = mul_mod(x12, x3, c);
                t[mu as usize] += roots.get((base + mul_mod(a[2], x3, c)) % c);
            }
        }
    }
    let mut kern = vec![Complex64::new(0.0, 0.0); c as usize];
    let mut kmax: f64 = 0.0;
    for &nu in &units {
        let h = h_crt(family, nu as i128, 1, c)?;
        kern[nu as usize] = h.value.value();
        kmax = kmax.max(kern[nu as usize].norm());
    }
    let proots = RootTable::new(chi.n);
    let mut acc = KahanSum::new();
    for &u in &units {
        let ph = (chi.n - chi.phase(u).expect("unit")) % chi.n;
        let w = proots.get(ph) * roots.get((c - mul_mod(u, a123, c)) % c);
        let mut inner = Complex64::new(0.0, 0.0);
        for &nu in &units {
            // x1x2x3 = u nu so that u-bar x1x2x3 = nu
            inner += kern[nu as usize] * t[mul_mod(u, nu, c) as usize];
        }
        acc.add(w * inner);
    }
    let c2 = (c as f64) * (c as f64);
    let s = acc.finish();
    let tmax = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = s.error + 16.0 * EPS * (phi * phi) as f64 * kmax * tmax.max(1.0);
    Ok(ExpSumValue::from_complex(s.amplitude / c2, phi * phi, err / c2))
}

/// `m_j = m_{j,1} m_{j,2}` with `m_{j,i} | c_{Q_i}^infty`.
#[derive(Clone, Copy, Debug)]
pub struct MSplit {
    pub m1: [u64; 3],
    pub m2: [u64; 3],
}

/// `eps = psi_1(c_{Q_2}-bar m_{1,2} m_{2,2} m_{3,2}) psi_2(c_{Q_1}-bar m_{1,1} m_{2,1} m_{3,1})`.
pub fn epsilon_factor(psi1: PsiPart, psi2: PsiPart, split: &MSplit) -> Result<Complex64> {
    if psi1.p == psi2.p {
        return Err(Error::IncompatibleModuli);
    }
    let one = |pp: PsiPart, other_c: u64, m: &[u64; 3]| -> Result<Complex64> {
        let cu = CyclicUnits::get(pp.p, pp.k)?;
        let pk = cu.pk;
        let mut x = inv_mod(other_c % pk, pk).ok_or(Error::IncompatibleModuli)?;
        for &mi in m {
            x = mul_mod(x, mi % pk, pk);
        }
        let ph = cu.phase(pp.j, x).ok_or(Error::NotAUnit)?;
        Ok(RootTable::root(ph, cu.phi))
    };
    Ok(one(psi1, psi2.modulus(), &split.m2)? * one(psi2, psi1.modulus(), &split.m1)?)
}

#[derive(Clone, Debug)]
pub struct MultCheck {
    /// `hat H(psi_1 psi_2, m) `.
    pub lhs: ExpSumValue,
    pub eps: Complex64,
    pub h1: ExpSumValue,
    pub h2: ExpSumValue,
}

impl MultCheck {
    pub fn rhs(&self) -> Complex64 {
        self.eps * self.h1.value() * self.h2.value()
    }

    pub fn discrepancy(&self) -> f64 {
        (self.lhs.value() - self.rhs()).norm()
    }

    pub fn agrees(&self, rel: f64) -> bool {
        let scale = self.lhs.abs().max(self.rhs().norm()).max(1.0);
        let err = self.lhs.value_error()
            + self.h1.value_error() * self.h2.abs().max(1.0)
            + self.h2.value_error() * self.h1.abs().max(1.0);
        self.discrepancy() <= err + rel * scale
    }
}

/// Both sides of `hat H(psi_1 psi_2, m) = eps hat H(psi_1, m_{.,1}) hat H(psi_2, m_{.,2})`.
pub fn epsilon_multiplicativity(
    d1: &LocalRepDescriptor,
    psi1: PsiPart,
    d2: &LocalRepDescriptor,
    psi2: PsiPart,
    split: &MSplit,
) -> Result<MultCheck> {
    if d1.p == d2.p || psi1.p != d1.p || psi2.p != d2.p {
        return Err(Error::IncompatibleModuli);
    }
    for (pp, m) in [(psi1, &split.m1), (psi2, &split.m2)] {
        for &mi in m {
            if mi == 0 || !only_prime(mi, pp.p) {
                return Err(Error::InvalidParameter(format!("m = {mi} is not a power of {}", pp.p)));
            }
        }
    }
    let c = psi1.modulus() * psi2.modulus();
    let a: [u64; 3] = std::array::from_fn(|i| mul_mod(split.m1[i] % c, split.m2[i] % c, c));
    let family: Family = [(d1.p, d1.clone()), (d2.p, d2.clone())].into_iter().collect();
    let lhs = hhat_composite_bruteforce(&family, &[psi1, psi2], a, DEFAULT_BUDGET)?;
    let q1 = HhatQuery::new(d1.clone(), psi_from_index(psi1.p, psi1.k, psi1.j)?, split.m1, psi1.k)?;
    let q2 = HhatQuery::new(d2.clone(), psi_from_index(psi2.p, psi2.k, psi2.j)?, split.m2, psi2.k)?;
    Ok(MultCheck {
        lhs,
        eps: epsilon_factor(psi1, psi2, split)?,
        h1: hhat_bruteforce(&q1)?.tilde,
        h2: hhat_bruteforce(&q2)?.tilde,
    })
}

fn only_prime(mut m: u64, p: u64) -> bool {
    while m % p == 0 {
        m /= p;
    }
    m == 1
}
