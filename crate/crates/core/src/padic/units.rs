//! Structure of `(O/p^k O)^x` as a product of cyclic groups.

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::sync::Lazy;
use parking_lot::RwLock;

use super::modulus::{factorize, inv_mod};
use super::quad::{El, Ring};
use super::snf::smith;
use crate::error::{Error, Result};

/// Default cap on the unit-group order.
pub const DEFAULT_GROUP_BUDGET: u64 = 100_000_000;

/// Independent generators `g_i` of orders `n_1 | n_2 | ... | n_r`.
#[derive(Debug)]
pub struct UnitGroupStructure {
    pub ring: Ring,
    pub gens: Vec<El>,
    pub orders: Vec<u64>,
    pub order: u64,
    sylows: Vec<Sylow>,
}

#[derive(Debug)]
struct Sylow {
    /// Projection exponent onto this Sylow subgroup.
    lambda: u64,
    /// Basis in descending order of orders.
    basis: Vec<(El, u64)>,
    /// Element code -> mixed-radix exponent index against `basis`.
    table: HashMap<u64, u64>,
}

impl Sylow {
    fn decode_index(&self, mut idx: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.basis.len());
        for &(_, o) in &self.basis {
            out.push(idx % o);
            idx /= o;
        }
        out
    }
}

fn build_table(ring: &Ring, basis: &[(El, u64)]) -> HashMap<u64, u64> {
    let size: u64 = basis.iter().map(|b| b.1).product();
    let mut table = HashMap::with_capacity(size as usize);
    let r = basis.len();
    let mut digits = vec![0u64; r];
    // partial[i] = prod_{j >= i} g_j^{digits_j}
    let mut partial = vec![ring.from_int(1); r + 1];
    let mut idx = 0u64;
    loop {
        table.insert(ring.code(partial[0]), idx);
        idx += 1;
        let mut i = 0;
        loop {
            if i == r {
                return table;
            }
            digits[i] += 1;
            if digits[i] < basis[i].1 {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
        // recompute partial products from position i downward
        let q = ring.pow(basis[i].0, digits[i]);
        partial[i] = ring.mul(q, partial[i + 1]);
        for j in (0..i).rev() {
            partial[j] = partial[j + 1];
        }
    }
}

fn sylow_basis(ring: &Ring, ell: u64, s: u32, lambda: u64) -> Result<Sylow> {
    let target = ell.pow(s);
    let mut basis: Vec<(El, u64)> = Vec::new();
    let mut table: HashMap<u64, u64> = HashMap::new();
    table.insert(ring.code(ring.from_int(1)), 0);
    let mut h_size = 1u64;
    let mut code = 0u64;
    while h_size < target {
        if code >= ring.size() {
            return Err(Error::InternalInconsistency("generator search exhausted".into()));
        }
        let x = ring.decode(code);
        code += 1;
        if !ring.is_unit(x) {
            continue;
        }
        let y = ring.pow(x, lambda);
        if table.contains_key(&ring.code(y)) {
            continue;
        }
        // least ell^j with y^(ell^j) in H
        let mut j = 0u32;
        let mut yp = y;
        loop {
            yp = ring.pow(yp, ell);
            j += 1;
            if let Some(&idx) = table.get(&ring.code(yp)) {
                let sy = Sylow {
                    lambda,
                    basis: basis.clone(),
                    table: HashMap::new(),
                };
                let c = sy.decode_index(idx);
                let r = basis.len();
                let mut rel = vec![vec![0i128; r + 1]; r + 1];
                for i in 0..r {
                    rel[i][i] = basis[i].1 as i128;
                }
                for i in 0..r {
                    rel[r][i] = -(c[i] as i128);
                }
                rel[r][r] = ell.pow(j) as i128;
                let snf = smith(rel);
                let mut gens: Vec<El> = basis.iter().map(|b| b.0).collect();
                gens.push(y);
                let mut nb: Vec<(El, u64)> = Vec::new();
                for (row, &dj) in snf.q_inv.iter().zip(&snf.diag) {
                    let dj = dj.unsigned_abs() as u64;
                    if dj <= 1 {
                        continue;
                    }
                    let mut h = ring.from_int(1);
                    for (g, &c) in gens.iter().zip(row) {
                        let e = c.rem_euclid(target as i128) as u64;
                        h = ring.mul(h, ring.pow(*g, e));
                    }
                    nb.push((h, dj));
                }
                nb.sort_by(|a, b| b.1.cmp(&a.1));
                basis = nb;
                table = build_table(ring, &basis);
                h_size = table.len() as u64;
                break;
            }
        }
    }
    Ok(Sylow { lambda, basis, table })
}

impl UnitGroupStructure {
    pub fn new(ring: Ring, budget: u64) -> Result<Self> {
        let order = ring.unit_count();
        if order > budget {
            return Err(Error::BudgetExceeded {
                what: "unit group order",
                needed: order as u128,
                budget: budget as u128,
            });
        }
        let mut sylows = Vec::new();
        for (ell, s) in factorize(order) {
            let ls = ell.pow(s);
            let co = order / ls;
            let lambda = ((co as u128 * inv_mod(co % ls, ls).unwrap() as u128) % order as u128) as u64;
            sylows.push(sylow_basis(&ring, ell, s, lambda)?);
        }
        let rank = sylows.iter().map(|s| s.basis.len()).max().unwrap_or(0);
        let mut gens = Vec::with_capacity(rank);
        let mut orders = Vec::with_capacity(rank);
        for i in 0..rank {
            let mut g = ring.from_int(1);
            let mut o = 1u64;
            for sy in &sylows {
                if let Some(&(b, ob)) = sy.basis.get(i) {
                    g = ring.mul(g, b);
                    o *= ob;
                }
            }
            gens.push(g);
            orders.push(o);
        }
        gens.reverse();
        orders.reverse();
        Ok(UnitGroupStructure {
            ring,
            gens,
            orders,
            order,
            sylows,
        })
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    /// Group exponent, the largest invariant factor.
    pub fn exponent(&self) -> u64 {
        self.orders.last().copied().unwrap_or(1)
    }

    pub fn is_cyclic(&self) -> bool {
        self.gens.len() <= 1
    }

    /// Exponent vector of `u` against `gens`, reduced mod the orders.
    pub fn discrete_log(&self, u: El) -> Result<Vec<u64>> {
        if !self.ring.is_unit(u) {
            return Err(Error::NotAUnit);
        }
        let r = self.rank();
        let mut res = vec![0u64; r];
        let mut mods = vec![1u64; r];
        for sy in &self.sylows {
            let y = self.ring.pow(u, sy.lambda);
            let idx = *sy
                .table
                .get(&self.ring.code(y))
                .ok_or_else(|| Error::InternalInconsistency("projection missing from table".into()))?;
            let f = sy.decode_index(idx);
            for (i, (&fi, &(_, oi))) in f.iter().zip(&sy.basis).enumerate() {
                // combined generator position (ascending order)
                let pos = r - 1 - i;
                let m = mods[pos];
                // CRT: x = res mod m, x = fi mod oi, gcd(m, oi) = 1
                let t = ((fi + oi - res[pos] % oi) % oi) as u128 * inv_mod(m % oi, oi).unwrap() as u128 % oi as u128;
                res[pos] += (t as u64) * m;
                mods[pos] = m * oi;
            }
        }
        for (x, &o) in res.iter_mut().zip(&self.orders) {
            *x %= o;
        }
        Ok(res)
    }

    pub fn exp(&self, v: &[u64]) -> El {
        let mut x = self.ring.from_int(1);
        for (g, &e) in self.gens.iter().zip(v) {
            x = self.ring.mul(x, self.ring.pow(*g, e));
        }
        x
    }

    /// Enumerate `(exponent index, element)` over the whole group, index in
    /// mixed radix with the first generator fastest.
    pub fn for_each_element(&self, mut f: impl FnMut(&[u64], El)) {
        let r = self.rank();
        let ring = &self.ring;
        let mut digits = vec![0u64; r];
        let mut partial = vec![ring.from_int(1); r + 1];
        loop {
            f(&digits, partial[0]);
            let mut i = 0;
            loop {
                if i == r {
                    return;
                }
                digits[i] += 1;
                if digits[i] < self.orders[i] {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            partial[i] = ring.mul(ring.pow(self.gens[i], digits[i]), partial[i + 1]);
            for j in (0..i).rev() {
                partial[j] = partial[j + 1];
            }
        }
    }

    /// Dense table `code -> phase` of `u -> sum_i v_i e_i (N/n_i) mod N`,
    /// with `N` the exponent; non-units get `u64::MAX`.
    pub fn dense_phase_table(&self, v: &[u64]) -> Vec<u64> {
        let n = self.exponent();
        let w: Vec<u64> = self.orders.iter().zip(v).map(|(&o, &vi)| (vi % o) * (n / o) % n).collect();
        let mut table = vec![u64::MAX; self.ring.size() as usize];
        self.for_each_element(|d, x| {
            let mut ph = 0u128;
            for (di, wi) in d.iter().zip(&w) {
                ph += *di as u128 * *wi as u128;
            }
            table[self.ring.code(x) as usize] = (ph % n as u128) as u64;
        });
        table
    }

    /// Dense discrete-log table for cyclic groups: `code -> index`.
    pub fn dense_index_table(&self) -> Result<Vec<u64>> {
        if !self.is_cyclic() {
            return Err(Error::InvalidParameter("group is not cyclic".into()));
        }
        Ok(self.dense_phase_table(&[1]))
    }
}

static CACHE: Lazy<RwLock<HashMap<Ring, Arc<UnitGroupStructure>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

/// Cached structure of the unit group of `ring`.
pub fn unit_group_structure(ring: Ring) -> Result<Arc<UnitGroupStructure>> {
    unit_group_structure_with_budget(ring, DEFAULT_GROUP_BUDGET)
}

pub fn unit_group_structure_with_budget(ring: Ring, budget: u64) -> Result<Arc<UnitGroupStructure>> {
    if let Some(g) = CACHE.read().get(&ring) {
        return Ok(g.clone());
    }
    let g = Arc::new(UnitGroupStructure::new(ring, budget)?);
    CACHE.write().entry(ring).or_insert_with(|| g.clone());
    Ok(g)
}

/// Free function form of the exponent-vector lookup.
pub fn discrete_log(u: El, basis: &UnitGroupStructure) -> Result<Vec<u64>> {
    basis.discrete_log(u)
}
