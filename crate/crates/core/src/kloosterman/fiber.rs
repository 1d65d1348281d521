//! Norm-fiber tables `K(nu) = sum_{Nm t = nu} xi(t) e_{p^k}(-Tr t)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;

use crate::chars::AdmissiblePair;
use crate::error::Result;
use crate::expsums::roots::RootTable;
use crate::expsums::value::{ExpSumValue, KahanSum, PhaseHist, EPS};
use crate::padic::quad::Ring;

/// Exact per-fiber phase counts are kept when `p^k * N` stays below this.
const EXACT_LIMIT: u64 = 1 << 22;

#[derive(Debug)]
pub struct NormFiberTable {
    pub p: u64,
    pub k: u32,
    /// Phase denominator `lcm(p^k, exponent of xi)`.
    pub n: u64,
    /// Indexed by `nu mod p^k`; zero on non-units.
    pub values: Vec<Complex64>,
    pub counts: Vec<u64>,
    pub exact: Option<Vec<PhaseHist>>,
}

impl NormFiberTable {
    pub fn build(pair: &AdmissiblePair, k: u32) -> Result<Self> {
        let p = pair.p();
        let ring = pair.ring(k)?;
        let xr: Ring = pair.xi.ring();
        let dense = pair.xi.dense_phases();
        let pk = ring.pk();
        let n = num_integer::lcm(pk, pair.xi.exponent());
        let (fx, fa) = (n / pair.xi.exponent(), n / pk);
        let roots = RootTable::new(n);
        let mut acc = vec![KahanSum::new(); pk as usize];
        let mut counts = vec![0u64; pk as usize];
        let keep_exact = pk.saturating_mul(n) <= EXACT_LIMIT;
        let mut exact = if keep_exact {
            Some(vec![PhaseHist::new(n); pk as usize])
        } else {
            None
        };
        for t in ring.units() {
            let nu = ring.norm(t) as usize;
            let tr = ring.trace(t);
            let ph = dense[xr.code(ring.reduce_to(t, xr.k)) as usize];
            let total = (ph * fx + (pk - tr) % pk * fa) % n;
            acc[nu].add(roots.get(total));
            counts[nu] += 1;
            if let Some(ex) = exact.as_mut() {
                ex[nu].add(total, 1);
            }
        }
        Ok(NormFiberTable {
            p,
            k,
            n,
            values: acc.iter().map(|s| s.sum()).collect(),
            counts,
            exact,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.k)
    }

    /// `K(nu)` with its own error bound.
    pub fn get(&self, nu: u64) -> ExpSumValue {
        let i = (nu % self.modulus()) as usize;
        let c = self.counts[i];
        let err = (6.0 * EPS + c as f64 * EPS * EPS) * (c as f64).max(1.0);
        ExpSumValue::from_complex(self.values[i], c, err)
    }

    pub fn get_exact(&self, nu: u64) -> Option<&PhaseHist> {
        let i = (nu % self.modulus()) as usize;
        self.exact.as_ref().map(|e| &e[i])
    }
}

type Key = (String, u32);

static CACHE: Lazy<Mutex<HashMap<Key, Arc<NormFiberTable>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached table for `(pair, k)`; built at most once per process.
pub fn norm_fiber_table(pair: &AdmissiblePair, k: u32) -> Result<Arc<NormFiberTable>> {
    let key = (pair.label(), k);
    if let Some(t) = CACHE.lock().get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(NormFiberTable::build(pair, k)?);
    CACHE.lock().entry(key).or_insert_with(|| t.clone());
    Ok(t)
}
