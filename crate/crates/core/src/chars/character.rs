//! Multiplicative characters of finite unit groups.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expsums::roots::RootTable;
use crate::padic::quad::{El, Ring};
use crate::padic::units::{unit_group_structure, UnitGroupStructure};

/// A character given by its values `chi(g_i) = e(v_i / n_i)` on the
/// generators of the unit group.
#[derive(Clone)]
pub struct MultChar {
    pub group: Arc<UnitGroupStructure>,
    pub values: Vec<u64>,
    conductor: u32,
}

impl fmt::Debug for MultChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultChar({} {:?} c={})", self.group.ring, self.values, self.conductor)
    }
}

impl PartialEq for MultChar {
    fn eq(&self, o: &Self) -> bool {
        self.group.ring == o.group.ring && self.values == o.values
    }
}

impl Eq for MultChar {}

/// Serializable reference to a character.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharLabel {
    pub ring: Ring,
    pub exponents: Vec<u64>,
}

impl MultChar {
    pub fn new(group: Arc<UnitGroupStructure>, values: Vec<u64>) -> Result<Self> {
        if values.len() != group.rank() {
            return Err(Error::InvalidParameter("exponent vector has wrong length".into()));
        }
        let values: Vec<u64> = values.iter().zip(&group.orders).map(|(&v, &o)| v % o).collect();
        let mut chi = MultChar {
            group,
            values,
            conductor: 0,
        };
        chi.conductor = chi.compute_conductor();
        Ok(chi)
    }

    pub fn trivial(group: Arc<UnitGroupStructure>) -> Self {
        let r = group.rank();
        MultChar {
            group,
            values: vec![0; r],
            conductor: 0,
        }
    }

    pub fn from_label(label: &CharLabel) -> Result<Self> {
        MultChar::new(unit_group_structure(label.ring)?, label.exponents.clone())
    }

    pub fn label(&self) -> CharLabel {
        CharLabel {
            ring: self.group.ring,
            exponents: self.values.clone(),
        }
    }

    pub fn label_json(&self) -> String {
        serde_json::to_string(&self.label()).expect("label serializes")
    }

    pub fn ring(&self) -> Ring {
        self.group.ring
    }

    /// Values are `N`-th roots of unity for `N` the group exponent.
    pub fn exponent(&self) -> u64 {
        self.group.exponent()
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Conductor exponent `c(chi)`.
    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn order(&self) -> u64 {
        let mut o = 1u64;
        for (&v, &n) in self.values.iter().zip(&self.group.orders) {
            let g = num_integer::gcd(v, n);
            o = num_integer::lcm(o, n / g);
        }
        o
    }

    fn weights(&self) -> Vec<u64> {
        let n = self.exponent();
        self.values
            .iter()
            .zip(&self.group.orders)
            .map(|(&v, &o)| v * (n / o) % n)
            .collect()
    }

    fn phase_of_exps(&self, e: &[u64]) -> u64 {
        let n = self.exponent() as u128;
        let mut s = 0u128;
        for (&w, &x) in self.weights().iter().zip(e) {
            s += w as u128 * x as u128;
        }
        (s % n) as u64
    }

    /// `chi(x) = e(phase / N)`, or `None` for non-units.
    pub fn phase(&self, x: El) -> Option<u64> {
        let e = self.group.discrete_log(x).ok()?;
        Some(self.phase_of_exps(&e))
    }

    /// Phase of an element given in a ring of different precision.
    pub fn phase_from(&self, from: &Ring, x: El) -> Option<u64> {
        let r = self.ring();
        let y = if from.k >= r.k { from.reduce_to(x, r.k) } else { x };
        self.phase(y)
    }

    pub fn eval(&self, x: El) -> Complex64 {
        match self.phase(x) {
            Some(ph) => RootTable::root(ph, self.exponent()),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `code -> phase` for every element of the ring, `u64::MAX` on non-units.
    pub fn dense_phases(&self) -> Vec<u64> {
        self.group.dense_phase_table(&self.values)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.ring().check_same(&o.ring())?;
        let values = self
            .values
            .iter()
            .zip(&o.values)
            .zip(&self.group.orders)
            .map(|((&a, &b), &n)| (a + b) % n)
            .collect();
        MultChar::new(self.group.clone(), values)
    }

    pub fn pow(&self, j: u64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.group.orders)
            .map(|(&a, &n)| ((a as u128 * j as u128) % n as u128) as u64)
            .collect();
        MultChar::new(self.group.clone(), values).expect("same group")
    }

    /// Complex conjugate character.
    pub fn inverse(&self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.group.orders)
            .map(|(&a, &n)| (n - a) % n)
            .collect();
        MultChar::new(self.group.clone(), values).expect("same group")
    }

    /// `chi o conj` (extension rings only).
    pub fn galois_conjugate(&self) -> Self {
        let r = self.ring();
        let n = self.exponent();
        let values = self
            .group
            .gens
            .iter()
            .zip(&self.group.orders)
            .map(|(&g, &o)| {
                let ph = self.phase(r.conj(g)).expect("conjugate of a unit");
                // chi(conj g_j) is an o-th root of unity
                ph / (n / o)
            })
            .collect();
        MultChar::new(self.group.clone(), values).expect("same group")
    }

    /// `chi o Nm` on `(O_L/p^k)^x` for `chi` on `(Z/p^k)^x`.
    pub fn compose_norm(&self, ext: Ring) -> Result<Self> {
        let base = self.ring();
        if !base.is_base() || ext.is_base() || ext.p != base.p || ext.k != base.k {
            return Err(Error::IncompatibleRings);
        }
        let g = unit_group_structure(ext)?;
        let n = self.exponent();
        let values = g
            .gens
            .iter()
            .zip(&g.orders)
            .map(|(&x, &o)| {
                let ph = self.phase(base.from_int(ext.norm(x) as i128)).ok_or(Error::NotAUnit)?;
                // ph / n has order dividing o
                let num = ph as u128 * o as u128;
                if num % n as u128 != 0 {
                    return Err(Error::InternalInconsistency("norm character order".into()));
                }
                Ok((num / n as u128) as u64)
            })
            .collect::<Result<Vec<u64>>>()?;
        MultChar::new(g, values)
    }

    /// True iff the character differs from its Galois conjugate on units.
    pub fn is_regular(&self) -> bool {
        *self != self.galois_conjugate()
    }

    /// Generators of `U(j)/U(j+1)` lifted to the ring.
    pub fn level_generators(ring: &Ring, j: u32) -> Vec<El> {
        let pj = ring.prime_power(j);
        ring.residue_basis()
            .into_iter()
            .map(|b| ring.add(ring.from_int(1), ring.mul(pj, b)))
            .collect()
    }

    fn compute_conductor(&self) -> u32 {
        if self.is_trivial() {
            return 0;
        }
        let r = self.ring();
        let top = r.e() * r.k;
        for j in (1..top).rev() {
            for g in Self::level_generators(&r, j) {
                if self.phase(g) != Some(0) {
                    return j + 1;
                }
            }
        }
        1
    }
}

/// All characters of the unit group of `ring` accepted by `keep`, in
/// mixed-radix order of their value vectors (first generator fastest).
pub fn enumerate_chars(ring: Ring, keep: impl Fn(&MultChar) -> bool) -> Result<Vec<MultChar>> {
    let g = unit_group_structure(ring)?;
    let mut out = Vec::new();
    let r = g.rank();
    let mut v = vec![0u64; r];
    loop {
        let chi = MultChar::new(g.clone(), v.clone())?;
        if keep(&chi) {
            out.push(chi);
        }
        let mut i = 0;
        loop {
            if i == r {
                return Ok(out);
            }
            v[i] += 1;
            if v[i] < g.orders[i] {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

/// Characters of a cyclic group `(Z/p^k)^x` as powers of the character
/// sending the generator to `e(1/phi)`.
pub fn cyclic_chars(ring: Ring) -> Result<Vec<MultChar>> {
    let g = unit_group_structure(ring)?;
    if !g.is_cyclic() {
        return Err(Error::InvalidParameter("group is not cyclic".into()));
    }
    Ok((0..g.order)
        .map(|j| MultChar::new(g.clone(), vec![j]).expect("cyclic"))
        .collect())
}

pub fn conductor(chi: &MultChar) -> u32 {
    chi.conductor()
}
