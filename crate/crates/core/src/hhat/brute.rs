//! Direct evaluations of `hat H`.
//!
//! With `K(nu) = gamma p^{d/2} H(nu, 1; p^k)` and
//! `T(mu) = sum_{x1 x2 x3 = mu} e(a.x)` over units,
//!
//! `p^{2k} gamma p^{d/2} hat H(psi) = sum_u psi-bar(u) e(-u a1a2a3) sum_nu K(nu) T(u nu)`.
//!
//! [`hhat_table`] evaluates this for every `psi` at once by FFT over the
//! cyclic group; [`hhat_uform`] runs the `u`-sum directly and
//! [`hhat_definition`] sums the defining five-fold expression.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustfft::FftPlanner;

use super::query::{budget_err, kind_parts, Branch, CyclicUnits, HhatQuery, HhatValue};
use crate::error::Result;
use crate::expsums::roots::RootTable;
use crate::expsums::value::{ExpSumValue, KahanSum, PhaseHist, EPS};
use crate::kloosterman::{h_local, norm_fiber_table, LocalRepDescriptor};
use crate::padic::modulus::{inv_mod, mul_mod};

/// Exact kernels are used when the common phase denominator is at most this.
const EXACT_DENOM_LIMIT: u64 = 1 << 16;

/// `K(g^s)` for every log index `s`.
fn kernel(desc: &LocalRepDescriptor, k: u32, cu: &CyclicUnits, budget: u64) -> Result<Vec<Complex64>> {
    let p = desc.p;
    let n = cu.phi as usize;
    if k < desc.vq {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    match kind_parts(desc) {
        (Some(pr), _) => {
            let need = p.saturating_pow(2 * k);
            if need > budget {
                return Err(budget_err("norm-fiber table", need, budget));
            }
            let table = norm_fiber_table(pr, k)?;
            Ok(cu.exp.iter().map(|&nu| table.get(nu).value()).collect())
        }
        _ => {
            let need = cu.phi.saturating_mul(cu.pk);
            if need > budget {
                return Err(budget_err("principal-series kernel", need, budget));
            }
            cu.exp
                .iter()
                .map(|&nu| Ok(h_local(desc, nu as i128, 1, k)?.value.value()))
                .collect()
        }
    }
}

/// `tilde hat H(psi_j)` for all `j`, with one rounding bound for the table.
#[derive(Debug)]
pub struct HhatTable {
    pub p: u64,
    pub k: u32,
    pub d: u32,
    pub a: [u64; 3],
    pub values: Vec<Complex64>,
    pub error: f64,
}

type TableKey = (String, u32, [u64; 3]);
static TABLES: Lazy<Mutex<HashMap<TableKey, Arc<HhatTable>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Every character at once; cached per `(descriptor, k, a)`.
pub fn hhat_table(desc: &LocalRepDescriptor, k: u32, a: [u64; 3], budget: u64) -> Result<Arc<HhatTable>> {
    let p = desc.p;
    let cu = CyclicUnits::get(p, k)?;
    let pk = cu.pk;
    let a = a.map(|x| x % pk);
    let key = (desc.label(), k, a);
    if let Some(t) = TABLES.lock().get(&key) {
        return Ok(t.clone());
    }
    let n = cu.phi as usize;
    let kv = kernel(desc, k, &cu, budget)?;
    let roots = RootTable::new(pk);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut kf = kv.clone();
    fwd.process(&mut kf);
    let mut prod = vec![Complex64::new(1.0, 0.0); n];
    for &ai in &a {
        let mut f: Vec<Complex64> = cu.exp.iter().map(|&x| roots.get(mul_mod(ai, x, pk))).collect();
        fwd.process(&mut f);
        for (z, w) in prod.iter_mut().zip(&f) {
            *z *= w;
        }
    }
    let t_norm2 = (prod.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64).sqrt();
    // C(t) = sum_s K(s) T(s + t): transform is conj-index K times T
    let mut c: Vec<Complex64> = (0..n).map(|j| kf[(n - j) % n] * prod[j]).collect();
    inv.process(&mut c);
    let a123 = mul_mod(mul_mod(a[0], a[1], pk), a[2], pk);
    let scale = 1.0 / n as f64;
    let mut f: Vec<Complex64> = c
        .iter()
        .zip(&cu.exp)
        .map(|(z, &x)| z * scale * roots.get((pk - mul_mod(a123, x, pk)) % pk))
        .collect();
    let c_norm2 = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    fwd.process(&mut f);
    let norm = 1.0 / (pk as f64 * pk as f64);
    let values: Vec<Complex64> = f.iter().map(|z| z * norm).collect();
    let k_norm2 = kv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let lg = (n as f64 + 1.0).log2();
    let sq = (n as f64).sqrt();
    let error = 16.0 * EPS * lg * (sq * k_norm2 * t_norm2 + sq * c_norm2) * norm + EPS;
    let t = Arc::new(HhatTable {
        p,
        k,
        d: desc.d(),
        a,
        values,
        error,
    });
    TABLES.lock().insert(key, t.clone());
    Ok(t)
}

fn value_from(q: &HhatQuery, z: Complex64, err: f64, terms: u64) -> HhatValue {
    HhatValue {
        p: q.p(),
        k: q.k,
        d: q.desc.d(),
        branch: Branch::BruteForce,
        tilde: ExpSumValue::from_complex(z, terms, err),
        phase_known: true,
        exact: None,
    }
}

/// Brute force through the FFT table.
pub fn hhat_bruteforce(q: &HhatQuery) -> Result<HhatValue> {
    let t = hhat_table(&q.desc, q.k, q.a, q.budget)?;
    let z = t.values[q.psi_index() as usize];
    Ok(value_from(q, z, t.error, q.pk().pow(2)))
}

/// `T(mu)` indexed by residue, by two quadratic passes.
fn t_direct(a: [u64; 3], cu: &CyclicUnits, roots: &RootTable) -> Vec<Complex64> {
    let pk = cu.pk;
    let zero = Complex64::new(0.0, 0.0);
    let mut pair = vec![zero; pk as usize];
    for &x1 in &cu.exp {
        for &x2 in &cu.exp {
            let y = mul_mod(x1, x2, pk);
            pair[y as usize] += roots.get((mul_mod(a[0], x1, pk) + mul_mod(a[1], x2, pk)) % pk);
        }
    }
    let mut t = vec![zero; pk as usize];
    for &mu in &cu.exp {
        let mut acc = KahanSum::new();
        for &y in &cu.exp {
            let x3 = mul_mod(mu, inv_mod(y, pk).expect("unit"), pk);
            acc.add(pair[y as usize] * roots.get(mul_mod(a[2], x3, pk)));
        }
        t[mu as usize] = acc.sum();
    }
    t
}

/// The `u`-congruence form summed directly, `O(phi^2)` per character.
pub fn hhat_uform(q: &HhatQuery) -> Result<HhatValue> {
    let cu = CyclicUnits::get(q.p(), q.k)?;
    let pk = cu.pk;
    let phi = cu.phi;
    let need = phi.saturating_mul(phi).saturating_mul(4);
    if need > q.budget {
        return Err(budget_err("u-congruence evaluation", need, q.budget));
    }
    let kv = kernel(&q.desc, q.k, &cu, q.budget)?;
    let mut k_res = vec![Complex64::new(0.0, 0.0); pk as usize];
    for (s, &nu) in cu.exp.iter().enumerate() {
        k_res[nu as usize] = kv[s];
    }
    let roots = RootTable::new(pk);
    let t = t_direct(q.a, &cu, &roots);
    let a123 = mul_mod(mul_mod(q.a[0], q.a[1], pk), q.a[2], pk);
    let j = q.psi_index();
    let mut acc = KahanSum::new();
    for &u in &cu.exp {
        let ub = inv_mod(u, pk).expect("unit");
        let mut inner = KahanSum::new();
        for &mu in &cu.exp {
            inner.add(t[mu as usize] * k_res[mul_mod(ub, mu, pk) as usize]);
        }
        let ph = (phi - cu.phase(j, u).expect("unit")) % phi;
        let lead = RootTable::root(ph, phi) * roots.get((pk - mul_mod(u, a123, pk)) % pk);
        acc.add(lead * inner.sum());
    }
    let sum = acc.finish();
    let norm = 1.0 / (pk as f64 * pk as f64);
    let bound = phi as f64 * phi as f64 * phi as f64 * k_res.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = (sum.error + 8.0 * EPS * bound) * norm;
    Ok(value_from(q, sum.amplitude * norm, err, pk * pk))
}

/// The defining sum over `u` and all `x mod p^k`, with `H` from
/// the Kloosterman module. `O(phi p^{3k})`.
pub fn hhat_definition(q: &HhatQuery) -> Result<HhatValue> {
    let p = q.p();
    let k = q.k;
    let cu = CyclicUnits::get(p, k)?;
    let pk = cu.pk;
    let need = cu.phi.saturating_mul(pk.saturating_pow(3));
    if need > q.budget {
        return Err(budget_err("defining five-fold sum", need, q.budget));
    }
    let h: Vec<Complex64> = (0..pk)
        .map(|nu| Ok(h_local(&q.desc, nu as i128, 1, k)?.value.value()))
        .collect::<Result<_>>()?;
    let roots = RootTable::new(pk);
    let a123 = mul_mod(mul_mod(q.a[0], q.a[1], pk), q.a[2], pk);
    let j = q.psi_index();
    let phi = cu.phi;
    let mut acc = KahanSum::new();
    for &u in &cu.exp {
        let ub = inv_mod(u, pk).expect("unit");
        let ph = (phi - cu.phase(j, u).expect("unit")) % phi;
        let lead = RootTable::root(ph, phi);
        let mut inner = KahanSum::new();
        for x1 in 0..pk {
            for x2 in 0..pk {
                let x12 = mul_mod(x1, x2, pk);
                let l12 = (mul_mod(q.a[0], x1, pk) + mul_mod(q.a[1], x2, pk)) % pk;
                for x3 in 0..pk {
                    let nu = mul_mod(ub, mul_mod(x12, x3, pk), pk);
                    let hv = h[nu as usize];
                    if hv.norm_sqr() == 0.0 {
                        continue;
                    }
                    let ph = (l12 + mul_mod(q.a[2], x3, pk) + pk - mul_mod(u, a123, pk)) % pk;
                    inner.add(hv * roots.get(ph));
                }
            }
        }
        acc.add(lead * inner.sum());
    }
    let sum = acc.finish();
    let norm = 1.0 / (pk as f64 * pk as f64);
    let bound = need as f64 * h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(value_from(
        q,
        sum.amplitude * norm,
        (sum.error + 8.0 * EPS * bound) * norm,
        need,
    ))
}

/// Sparse phase list `(phase, count)`.
type Sparse = Vec<(u64, i64)>;

fn sparse_of(h: &PhaseHist, to: u64) -> Sparse {
    let f = to / h.n;
    h.counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(j, &c)| (j as u64 * f % to, c))
        .collect()
}

/// Exact `p^{2k} tilde hat H` as phase counts in `Z[zeta_N]`.
pub fn hhat_exact(q: &HhatQuery) -> Result<PhaseHist> {
    let p = q.p();
    let k = q.k;
    let cu = CyclicUnits::get(p, k)?;
    let pk = cu.pk;
    let phi = cu.phi;
    // exact kernels by residue
    let mut kern: Vec<Option<PhaseHist>> = vec![None; pk as usize];
    if k >= q.desc.vq {
        for &nu in &cu.exp {
            let h = h_local(&q.desc, nu as i128, 1, k)?;
            let ex = h.exact.ok_or_else(|| budget_err("exact kernel", pk, 0))?;
            kern[nu as usize] = Some(ex);
        }
    }
    let kn = kern.iter().flatten().map(|h| h.n).fold(1, num_integer::lcm);
    let big = num_integer::lcm(num_integer::lcm(kn, phi), pk);
    if big > EXACT_DENOM_LIMIT {
        return Err(budget_err("exact phase denominator", big, EXACT_DENOM_LIMIT));
    }
    let need = phi * phi * pk * 16;
    if need > q.budget {
        return Err(budget_err("exact evaluation", need, q.budget));
    }
    let ksp: Vec<Sparse> = kern
        .iter()
        .map(|h| h.as_ref().map(|h| sparse_of(h, big)).unwrap_or_default())
        .collect();
    // T(mu) as counts over p^k
    let a = q.a;
    let mut pair = vec![vec![0i64; pk as usize]; pk as usize];
    for &x1 in &cu.exp {
        for &x2 in &cu.exp {
            let y = mul_mod(x1, x2, pk) as usize;
            pair[y][((mul_mod(a[0], x1, pk) + mul_mod(a[1], x2, pk)) % pk) as usize] += 1;
        }
    }
    let mut tsp: Vec<Sparse> = vec![Vec::new(); pk as usize];
    for &mu in &cu.exp {
        let mut cnt = vec![0i64; pk as usize];
        for &y in &cu.exp {
            let x3 = mul_mod(mu, inv_mod(y, pk).expect("unit"), pk);
            let sh = mul_mod(a[2], x3, pk);
            for (ph, &c) in pair[y as usize].iter().enumerate() {
                if c != 0 {
                    cnt[((ph as u64 + sh) % pk) as usize] += c;
                }
            }
        }
        let f = big / pk;
        tsp[mu as usize] = cnt
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (j as u64 * f, c))
            .collect();
    }
    let a123 = mul_mod(mul_mod(a[0], a[1], pk), a[2], pk);
    let j = q.psi_index();
    let (fpsi, fadd) = (big / phi, big / pk);
    let mut out = PhaseHist::new(big);
    for &u in &cu.exp {
        let ub = inv_mod(u, pk).expect("unit");
        let lead = ((phi - cu.phase(j, u).expect("unit")) % phi * fpsi + (pk - mul_mod(u, a123, pk)) % pk * fadd) % big;
        for &mu in &cu.exp {
            let kk = &ksp[mul_mod(ub, mu, pk) as usize];
            if kk.is_empty() {
                continue;
            }
            for &(pt, ct) in &tsp[mu as usize] {
                for &(pk_, ck) in kk {
                    out.add(lead + pt + pk_, ct * ck);
                }
            }
        }
    }
    Ok(out)
}
