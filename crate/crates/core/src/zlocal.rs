//! The character sum `G`, its multiplicative Fourier expansion into
//! `hat H(psi)`, and truncated local norms of `Z_fin`.
//!
//! Kloosterman values enter through [`h_crt`], i.e. with the unknown root
//! numbers suppressed, so Fourier coefficients carry the normalization of
//! [`HhatValue::tilde`](crate::hhat::HhatValue). Norms use `|hat H|`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expsums::classical::kloosterman_hist;
use crate::expsums::roots::RootTable;
use crate::expsums::value::{fmt_sig, ExpSumValue, KahanSum, EPS};
use crate::hhat::{
    certify_value, hhat_composite_bruteforce, hhat_table, psi_from_index, Branch, CyclicUnits, HhatQuery, HhatValue, PsiPart,
};
use crate::kloosterman::{h_crt, h_local, Family, LocalKind, LocalRepDescriptor};
use crate::padic::modulus::{factorize, gcd, inv_mod, mul_mod, reduce_i};

/// Default term budget for the brute-force sums of this module.
pub const ZLOCAL_BUDGET: u64 = 200_000_000;

fn budget(what: &'static str, needed: u64, budget: u64) -> Result<()> {
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what,
            needed: needed as u128,
            budget: budget as u128,
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct GSum {
    pub c: u64,
    pub m: [i128; 3],
    /// `G = c^{-3} sum_x H(x1, x2 x3; c) e_c(m . x)`.
    pub g: ExpSumValue,
    /// `G' = c G e_c(-m1 m2 m3)`.
    pub g_prime: ExpSumValue,
}

/// `H(m, n; c)` for all residues, one dense table per prime power of `c`.
struct HGrid {
    /// `(p^j, c_p-bar mod p^j, values[m * p^j + n])`.
    comps: Vec<(u64, u64, Vec<Complex64>)>,
}

impl HGrid {
    fn new(family: &Family, c: u64) -> Result<Self> {
        let mut comps = Vec::new();
        for (p, j) in factorize(c) {
            let pj = p.pow(j);
            let rb = inv_mod((c / pj) % pj, pj).expect("coprime cofactor");
            let mut vals = Vec::with_capacity((pj * pj) as usize);
            match family.get(&p) {
                // a supercuspidal sum depends on m n only, and vanishes off units
                Some(d) if d.is_supercuspidal() => {
                    let by_nu = (0..pj)
                        .map(|nu| h_local(d, nu as i128, 1, j).map(|h| h.value.value()))
                        .collect::<Result<Vec<_>>>()?;
                    for m in 0..pj {
                        for n in 0..pj {
                            let unit = m % p != 0 && n % p != 0;
                            vals.push(if unit {
                                by_nu[mul_mod(m, n, pj) as usize]
                            } else {
                                Complex64::new(0.0, 0.0)
                            });
                        }
                    }
                }
                _ => {
                    for m in 0..pj as i128 {
                        for n in 0..pj as i128 {
                            vals.push(match family.get(&p) {
                                Some(d) => h_local(d, m, n, j)?.value.value(),
                                None => kloosterman_hist(m, n, pj).to_value().value(),
                            });
                        }
                    }
                }
            }
            comps.push((pj, rb, vals));
        }
        Ok(HGrid { comps })
    }

    fn get(&self, m: u64, n: u64) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        for (pj, rb, vals) in &self.comps {
            let ml = mul_mod(m % pj, *rb, *pj);
            let nl = mul_mod(n % pj, *rb, *pj);
            z *= vals[(ml * pj + nl) as usize];
        }
        z
    }
}

/// `G(m1, m2, m3; c)` by its definition.
pub fn g_sum(m: [i128; 3], c: u64, family: &Family, max_terms: u64) -> Result<GSum> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    budget("G(m; c)", c.saturating_mul(c).saturating_mul(2), max_terms)?;
    let cu = c as usize;
    let roots = RootTable::new(c);
    let mr = m.map(|x| reduce_i(x, c));
    // W(y) = sum_{x2 x3 = y} e_c(m2 x2 + m3 x3)
    let mut w = vec![Complex64::new(0.0, 0.0); cu];
    for x2 in 0..c {
        for x3 in 0..c {
            w[mul_mod(x2, x3, c) as usize] += roots.get((mul_mod(mr[1], x2, c) + mul_mod(mr[2], x3, c)) % c);
        }
    }
    let grid = HGrid::new(family, c)?;
    let mut acc = KahanSum::new();
    let mut hmax: f64 = 0.0;
    for x1 in 0..c {
        let e1 = roots.get(mul_mod(mr[0], x1, c));
        for (y, wy) in w.iter().enumerate() {
            if wy.norm() == 0.0 {
                continue;
            }
            let h = grid.get(x1, y as u64);
            hmax = hmax.max(h.norm());
            acc.add(h * e1 * wy);
        }
    }
    let c3 = (c as f64).powi(3);
    let s = acc.finish();
    let err = (s.error + 8.0 * EPS * (c * c) as f64 * hmax * c as f64) / c3;
    let g = ExpSumValue::from_complex(s.amplitude / c3, c * c * c, err);
    let m123 = mul_mod(mul_mod(mr[0], mr[1], c), mr[2], c);
    let tw = roots.get((c - m123) % c);
    let g_prime = ExpSumValue::from_complex(g.amplitude * c as f64 * tw, g.terms, (err + 4.0 * EPS * g.abs()) * c as f64);
    Ok(GSum { c, m, g, g_prime })
}

/// `c = c_Q c'` with `c_Q` the part supported on family primes.
pub fn split_modulus(c: u64, family: &Family) -> (u64, u64) {
    let mut cq = 1;
    for (p, e) in factorize(c) {
        if family.contains_key(&p) {
            cq *= p.pow(e);
        }
    }
    (cq, c / cq)
}

/// `1_{(m1, c') = 1} c_Q^{-2} sum_{x mod c_Q} H(c' x1 x2 x3, 1; c_Q) e_{c_Q}(m . x - c'-bar m1 m2 m3)`.
pub fn g_prime_reduced(m: [i128; 3], c: u64, family: &Family, max_terms: u64) -> Result<ExpSumValue> {
    let (cq, cp) = split_modulus(c, family);
    if gcd(reduce_i(m[0], cp.max(1)), cp) != 1 && cp > 1 {
        return Ok(ExpSumValue::zero());
    }
    budget("reduced G'", cq.saturating_pow(3), max_terms)?;
    let roots = RootTable::new(cq);
    let mr = m.map(|x| reduce_i(x, cq));
    let cpb = inv_mod(cp % cq, cq).unwrap_or(0);
    let m123 = mul_mod(mul_mod(mr[0], mr[1], cq), mr[2], cq);
    let shift = (cq - mul_mod(cpb, m123, cq)) % cq;
    let t = t_all(mr, cq, &roots);
    let mut acc = KahanSum::new();
    for (mu, tm) in t.iter().enumerate() {
        let h = h_crt(family, mul_mod(cp % cq, mu as u64, cq) as i128, 1, cq)?.value.value();
        acc.add(h * tm);
    }
    let s = acc.finish();
    let norm = 1.0 / (cq as f64 * cq as f64);
    let err = s.error + 8.0 * EPS * (cq * cq * cq) as f64 * s.amplitude.norm().max(1.0);
    Ok(ExpSumValue::from_complex(
        s.amplitude * roots.get(shift) * norm,
        cq * cq * cq,
        err * norm,
    ))
}

/// `T(mu) = sum_{x1 x2 x3 = mu mod c} e_c(a . x)` over all residues.
fn t_all(a: [u64; 3], c: u64, roots: &RootTable) -> Vec<Complex64> {
    let cu = c as usize;
    let zero = Complex64::new(0.0, 0.0);
    let mut pair = vec![zero; cu];
    for x1 in 0..c {
        for x2 in 0..c {
            pair[mul_mod(x1, x2, c) as usize] += roots.get((mul_mod(a[0], x1, c) + mul_mod(a[1], x2, c)) % c);
        }
    }
    let mut t = vec![zero; cu];
    for (y, py) in pair.iter().enumerate() {
        if py.norm() == 0.0 {
            continue;
        }
        for x3 in 0..c {
            t[mul_mod(y as u64, x3, c) as usize] += py * roots.get(mul_mod(a[2], x3, c));
        }
    }
    t
}

/// `|G| <= (m1, q')(m2, q')(m3, q') / (c q'^2)` for `m1 m2 m3 = 0`, with
/// `q' = prod p^{v_p(q')}` over the family.
pub fn zero_frequency_bound(m: [i128; 3], c: u64, family: &Family) -> Result<f64> {
    if m.iter().all(|&x| x != 0) {
        return Err(Error::OutOfValidityRange("zero-frequency bound needs m1 m2 m3 = 0".into()));
    }
    let q: u64 = family.values().map(|d| d.p.pow(d.vq)).product();
    let g: f64 = m.iter().map(|&x| gcd(reduce_i(x, q), q) as f64).product();
    let g = if q == 1 { 1.0 } else { g };
    Ok(g / (c as f64 * (q * q) as f64))
}

/// `B(v) = c_Q^{-2} sum_x H(v-bar x1 x2 x3, 1; c_Q) e_{c_Q}(a . x - v a1 a2 a3)`
/// on `(Z/c_Q)^x`, and its coefficients `hat H(psi) = sum_v psi-bar(v) B(v)`.
#[derive(Clone, Debug)]
pub struct FourierTable {
    pub c: u64,
    pub a: [u64; 3],
    /// Prime-power components `(p, k)` of `c`, increasing.
    pub parts: Vec<(u64, u32)>,
    /// Units of `Z/c`, increasing.
    pub units: Vec<u64>,
    pub b: Vec<Complex64>,
    /// Indexed by character index vectors in mixed radix, first part fastest.
    pub coeffs: Vec<Complex64>,
    pub error: f64,
    cus: Vec<std::sync::Arc<CyclicUnits>>,
}

impl FourierTable {
    pub fn phi(&self) -> u64 {
        self.units.len() as u64
    }

    pub fn n_chars(&self) -> usize {
        self.coeffs.len()
    }

    /// Character index vector of flat index `i`.
    pub fn psi_indices(&self, mut i: usize) -> Vec<u64> {
        self.cus
            .iter()
            .map(|cu| {
                let j = i as u64 % cu.phi;
                i /= cu.phi as usize;
                j
            })
            .collect()
    }

    fn psi(&self, js: &[u64], v: u64) -> Complex64 {
        let mut z = Complex64::new(1.0, 0.0);
        for (cu, &j) in self.cus.iter().zip(js) {
            let ph = cu.phase(j, v % cu.pk).expect("unit");
            z *= RootTable::root(ph, cu.phi);
        }
        z
    }

    /// Coefficient of the character with index vector `js`.
    pub fn coefficient(&self, js: &[u64]) -> Result<Complex64> {
        if js.len() != self.cus.len() {
            return Err(Error::InvalidParameter("one character index per prime".into()));
        }
        let mut i = 0usize;
        for (cu, &j) in self.cus.iter().zip(js).rev() {
            i = i * cu.phi as usize + (j % cu.phi) as usize;
        }
        Ok(self.coeffs[i])
    }

    /// `phi(c)^{-1} sum_psi hat H(psi) psi(v)` at every unit.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let phi = self.phi() as f64;
        let chars: Vec<Vec<u64>> = (0..self.n_chars()).map(|i| self.psi_indices(i)).collect();
        self.units
            .iter()
            .map(|&v| {
                chars
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(js, h)| h * self.psi(js, v))
                    .sum::<Complex64>()
                    / phi
            })
            .collect()
    }

    /// `max_v |B(v) - reconstruct(v)|`.
    pub fn roundtrip_error(&self) -> f64 {
        self.reconstruct()
            .iter()
            .zip(&self.b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// `B(v)`, zero off the units.
    pub fn b_at(&self, v: u64) -> Complex64 {
        match self.units.binary_search(&(v % self.c)) {
            Ok(i) => self.b[i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }
}

/// Expand `B` for `a` at modulus `c_q`, a product of family prime powers.
pub fn fourier_expand(a: [u64; 3], c_q: u64, family: &Family, max_terms: u64) -> Result<FourierTable> {
    let parts = factorize(c_q);
    if parts.is_empty() || parts.iter().any(|(p, _)| !family.contains_key(p)) {
        return Err(Error::InvalidParameter(format!(
            "{c_q} is not supported on the family primes"
        )));
    }
    let units: Vec<u64> = (1..c_q).filter(|&x| gcd(x, c_q) == 1).collect();
    let phi = units.len() as u64;
    budget(
        "Fourier expansion",
        c_q.saturating_pow(2).saturating_mul(c_q.max(2 * phi)),
        max_terms,
    )?;
    let cus = parts
        .iter()
        .map(|&(p, k)| CyclicUnits::get(p, k))
        .collect::<Result<Vec<_>>>()?;
    let c = c_q;
    let roots = RootTable::new(c);
    let a = a.map(|x| x % c);
    let a123 = mul_mod(mul_mod(a[0], a[1], c), a[2], c);
    let t = t_all(a, c, &roots);
    let h1: Vec<Complex64> = (0..c)
        .map(|n| h_crt(family, n as i128, 1, c).map(|h| h.value.value()))
        .collect::<Result<_>>()?;
    let norm = 1.0 / (c as f64 * c as f64);
    let tmax = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let hmax = h1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let b: Vec<Complex64> = units
        .iter()
        .map(|&v| {
            let vb = inv_mod(v, c).expect("unit");
            let s: Complex64 = t
                .iter()
                .enumerate()
                .map(|(mu, tm)| h1[mul_mod(vb, mu as u64, c) as usize] * tm)
                .sum();
            s * roots.get((c - mul_mod(v, a123, c)) % c) * norm
        })
        .collect();
    let mut table = FourierTable {
        c,
        a,
        parts,
        units,
        b,
        coeffs: Vec::new(),
        error: 16.0 * EPS * (c * c * c) as f64 * tmax.max(1.0) * hmax.max(1.0) * norm,
        cus,
    };
    let n: usize = table.cus.iter().map(|cu| cu.phi as usize).product();
    table.coeffs = (0..n)
        .map(|i| {
            let js = table.psi_indices(i);
            table
                .units
                .iter()
                .zip(&table.b)
                .map(|(&v, bv)| table.psi(&js, v).conj() * bv)
                .sum()
        })
        .collect();
    table.error *= phi as f64;
    Ok(table)
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalZQuery {
    #[serde(skip)]
    pub desc: LocalRepDescriptor,
    pub sigma: [f64; 4],
    /// Largest `k` with `c_Q = p^k`.
    pub k_max: u32,
    /// Largest `v_p(m_i)`.
    pub m_max: u32,
    pub budget: u64,
}

impl LocalZQuery {
    pub fn new(desc: LocalRepDescriptor, sigma: [f64; 4], k_max: u32, m_max: u32) -> Result<Self> {
        if sigma.iter().any(|&s| !(s > 0.5 && s <= 4.0)) {
            return Err(Error::InvalidParameter("each sigma must lie in (1/2, 4]".into()));
        }
        if k_max < desc.vq {
            return Err(Error::InvalidParameter(format!(
                "k_max = {k_max} is below v_p(q') = {}",
                desc.vq
            )));
        }
        Ok(LocalZQuery {
            desc,
            sigma,
            k_max,
            m_max,
            budget: ZLOCAL_BUDGET,
        })
    }
}

/// `|| Z_fin,p(psi, p^k) ||` truncated at `v_p(m_i) <= M`.
#[derive(Clone, Debug, Serialize)]
pub struct NormCell {
    pub k: u32,
    pub psi: u64,
    /// `c(psi)`.
    pub beta: u32,
    pub partial: f64,
    /// `0` when `M >= k`: terms with `v(m_i) >= k` repeat the `v = k` term
    /// and the series is summed exactly.
    pub tail_bound: f64,
    /// `|hat H(psi, 1, 1, 1)|`.
    pub at_one: f64,
    /// Best certified bound on `|hat H(psi, 1, 1, 1)|`, if one applies.
    pub bound_at_one: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub k: u32,
    pub beta: u32,
    pub n_psi: u64,
    /// `sum_psi |hat H(psi, 1, 1, 1)|`.
    pub sum_abs: f64,
    /// Sum of certified bounds, `None` if some character has none.
    pub bound: Option<f64>,
    pub slack: Option<f64>,
    pub norm_sum: f64,
    pub norm_max: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZfinProfile {
    pub p: u64,
    pub cells: Vec<NormCell>,
    pub rows: Vec<ProfileRow>,
}

impl ZfinProfile {
    pub fn cell(&self, k: u32, psi: u64) -> Option<&NormCell> {
        self.cells.iter().find(|c| c.k == k && c.psi == psi)
    }
}

/// Per-`v` weights `p^{-v sigma}` for `v <= min(M, k)`, the last one summing
/// the whole tail `v >= k` when `M >= k`.
fn weights(p: u64, sigma: f64, k: u32, m_max: u32) -> Vec<f64> {
    let pf = p as f64;
    let top = m_max.min(k);
    (0..=top)
        .map(|v| {
            let w = pf.powf(-(v as f64) * sigma);
            if v == k {
                w / (1.0 - pf.powf(-sigma))
            } else {
                w
            }
        })
        .collect()
}

/// One `k`-slice: `(|hat H(psi, a)| for all psi, a)`, weights per index.
struct Slice {
    k: u32,
    /// `abs[a_index][psi]`.
    abs: Vec<Vec<f64>>,
    wsum: Vec<f64>,
    tail: f64,
    at_one: Vec<HhatValue>,
}

fn slice(q: &LocalZQuery, k: u32) -> Result<Slice> {
    let p = q.desc.p;
    let pk = p.pow(k);
    let d = q.desc.d();
    let dscale = (p as f64).powf(d as f64 / 2.0);
    let w: Vec<Vec<f64>> = q.sigma[..3].iter().map(|&s| weights(p, s, k, q.m_max)).collect();
    let n = w[0].len();
    let mut abs = Vec::with_capacity(n * n * n);
    let mut wsum = Vec::with_capacity(n * n * n);
    let mut at_one = Vec::new();
    for v1 in 0..n {
        for v2 in 0..n {
            for v3 in 0..n {
                let a = [v1, v2, v3].map(|v| p.pow(v as u32) % pk);
                let t = hhat_table(&q.desc, k, a, q.budget)?;
                abs.push(t.values.iter().map(|z| z.norm() / dscale).collect());
                wsum.push(w[0][v1] * w[1][v2] * w[2][v3]);
                if v1 + v2 + v3 == 0 {
                    at_one = t
                        .values
                        .iter()
                        .map(|&z| HhatValue {
                            p,
                            k,
                            d,
                            branch: Branch::BruteForce,
                            tilde: ExpSumValue::from_complex(z, pk * pk, t.error),
                            phase_known: true,
                            exact: None,
                        })
                        .collect();
                }
            }
        }
    }
    let tail = if q.m_max >= k {
        0.0
    } else {
        // |hat H| <= phi^4 max|H(nu, 1)| / p^{2k}, times the omitted weight
        let cu = CyclicUnits::get(p, k)?;
        let hmax = (0..pk)
            .map(|nu| h_crt(&[(p, q.desc.clone())].into_iter().collect(), nu as i128, 1, pk).map(|h| h.value.abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let triv = (cu.phi as f64).powi(4) * hmax / (pk as f64 * pk as f64) / dscale;
        let full: f64 = q.sigma[..3].iter().map(|&s| 1.0 / (1.0 - (p as f64).powf(-s))).product();
        let part: f64 = w.iter().map(|wi| wi.iter().sum::<f64>()).product();
        triv * (full - part).max(0.0)
    };
    Ok(Slice {
        k,
        abs,
        wsum,
        tail,
        at_one,
    })
}

/// Truncated `|| Z_fin,p ||` for every `v_p(q') <= k <= K` and every `psi mod p^k`.
pub fn zfin_local_norm(q: &LocalZQuery) -> Result<ZfinProfile> {
    let p = q.desc.p;
    let ks: Vec<u32> = (q.desc.vq.max(1)..=q.k_max).collect();
    let slices = ks.par_iter().map(|&k| slice(q, k)).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for s in &slices {
        let cu = CyclicUnits::get(p, s.k)?;
        for j in 0..cu.phi {
            let partial: f64 = s.abs.iter().zip(&s.wsum).map(|(a, w)| a[j as usize] * w).sum();
            let psi = psi_from_index(p, s.k, j)?;
            let beta = psi.conductor();
            let hq = HhatQuery::new(q.desc.clone(), psi, [1, 1, 1], s.k)?;
            let v = &s.at_one[j as usize];
            let bound_at_one = certify_value(&hq, v)?
                .iter()
                .map(|c| c.bound)
                .fold(None, |m: Option<f64>, b| Some(m.map_or(b, |m| m.min(b))));
            cells.push(NormCell {
                k: s.k,
                psi: j,
                beta,
                partial,
                tail_bound: s.tail,
                at_one: v.abs(),
                bound_at_one,
            });
        }
    }
    let mut rows = Vec::new();
    for &k in &ks {
        for beta in 0..=k {
            let group: Vec<&NormCell> = cells.iter().filter(|c| c.k == k && c.beta == beta).collect();
            if group.is_empty() {
                continue;
            }
            let sum_abs: f64 = group.iter().map(|c| c.at_one).sum();
            let bound: Option<f64> = group.iter().map(|c| c.bound_at_one).sum();
            rows.push(ProfileRow {
                k,
                beta,
                n_psi: group.len() as u64,
                sum_abs,
                bound,
                slack: bound.map(|b| if b > 0.0 { sum_abs / b } else { 0.0 }),
                norm_sum: group.iter().map(|c| c.partial).sum(),
                norm_max: group.iter().map(|c| c.partial).fold(0.0, f64::max),
                tail_bound: group.iter().map(|c| c.tail_bound).sum(),
            });
        }
    }
    Ok(ZfinProfile { p, cells, rows })
}

#[derive(Serialize)]
struct CsvRow {
    k: u32,
    beta: u32,
    sum_abs_hhat: String,
    bound: String,
    slack: String,
}

/// `(k, beta, sum |hat H|, bound, slack)` per profile row.
pub fn write_profile_csv<W: Write>(profile: &ZfinProfile, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if profile.rows.is_empty() {
        w.write_record(["k", "beta", "sum_abs_hhat", "bound", "slack"])?;
    }
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    for r in &profile.rows {
        w.serialize(CsvRow {
            k: r.k,
            beta: r.beta,
            sum_abs_hhat: fmt_sig(r.sum_abs),
            bound: opt(r.bound),
            slack: opt(r.slack),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The trivial-character local factor
/// `sum_k p^{v - k} ||Z_fin,p(psi_0, p^k)|| / p^{(k - v) sigma4}`, `v = v_p(q')`.
#[derive(Clone, Debug, Serialize)]
pub struct Z0Factor {
    pub p: u64,
    pub value: f64,
    /// Truncation in `m` plus the omitted `k > K`.
    pub tail_bound: f64,
    /// `p^{2 v_p(q')} / p^{3 c(sigma) / 4}`.
    pub target: f64,
    /// `(value + tail_bound) / target`.
    pub slack: f64,
    /// `(value + tail_bound) / (p^{v_p(q')} / p^{c0})`; the ramified proof
    /// gives `Z_0 << p^{v_p(q') - c0} = p`.
    pub proof_slack: f64,
    /// Terms per `k`, exact zeros included.
    pub per_k: Vec<(u32, f64)>,
}

pub fn z0_local_factor(q: &LocalZQuery) -> Result<Z0Factor> {
    let LocalKind::Supercuspidal(_) = &q.desc.kind else {
        return Err(Error::InvalidParameter(
            "the Z_0 factor is implemented for supercuspidal descriptors".into(),
        ));
    };
    if q.k_max < q.desc.c0 {
        return Err(Error::InvalidParameter("the k > K tail needs K >= c0".into()));
    }
    let p = q.desc.p;
    let pf = p as f64;
    let v = q.desc.vq;
    let prof = zfin_local_norm(q)?;
    let mut value = 0.0;
    let mut tail = 0.0;
    let mut per_k = Vec::new();
    for k in v..=q.k_max {
        let c = prof.cell(k, 0).expect("trivial character present");
        let w = pf.powi(v as i32 - k as i32) * pf.powf(-((k - v) as f64) * q.sigma[3]);
        value += w * c.partial;
        tail += w * c.tail_bound;
        per_k.push((k, w * c.partial));
    }
    // k > K >= c0: only m = 1 survives and |hat H(psi_0)| <= |S(Nm, 0; p^k)| <= p^k
    let s4 = q.sigma[3];
    tail += pf.powi(v as i32) * pf.powf(-((q.k_max + 1 - v) as f64) * s4) / (1.0 - pf.powf(-s4));
    let target = pf.powf(2.0 * v as f64 - 0.75 * q.desc.c_sigma as f64);
    let total = value + tail;
    Ok(Z0Factor {
        p,
        value,
        tail_bound: tail,
        target,
        slack: total / target,
        proof_slack: total / pf.powi(v as i32 - q.desc.c0 as i32),
        per_k,
    })
}

/// Truncated norms at two primes, multiplied, against the composite norm
/// with every `hat H(psi_1 psi_2, m)` summed directly mod `p1^k1 p2^k2`.
#[derive(Clone, Debug, Serialize)]
pub struct FactorizationCheck {
    pub product: f64,
    pub composite: f64,
}

impl FactorizationCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.product - self.composite).abs()
    }
}

pub fn zfin_two_prime(q1: &LocalZQuery, psi1: PsiPart, q2: &LocalZQuery, psi2: PsiPart) -> Result<FactorizationCheck> {
    if q1.desc.p == q2.desc.p || psi1.p != q1.desc.p || psi2.p != q2.desc.p {
        return Err(Error::IncompatibleModuli);
    }
    if q1.sigma[..3] != q2.sigma[..3] || q1.m_max != q2.m_max {
        return Err(Error::InvalidParameter("both queries need the same sigma and M".into()));
    }
    let m = q1.m_max;
    let sigma = q1.sigma;
    let vecs: Vec<[u32; 3]> = (0..(m + 1).pow(3))
        .map(|i| [i % (m + 1), i / (m + 1) % (m + 1), i / (m + 1) / (m + 1)])
        .collect();
    let wt = |p: u64, v: &[u32; 3]| -> f64 { (0..3).map(|i| (p as f64).powf(-(v[i] as f64) * sigma[i])).product() };
    let local = |q: &LocalZQuery, pp: PsiPart| -> Result<Vec<f64>> {
        let ds = (pp.p as f64).powf(q.desc.d() as f64 / 2.0);
        vecs.iter()
            .map(|v| {
                let a = v.map(|e| pp.p.pow(e) % pp.modulus());
                Ok(hhat_table(&q.desc, pp.k, a, q.budget)?.values[pp.j as usize].norm() / ds)
            })
            .collect()
    };
    let (h1, h2) = (local(q1, psi1)?, local(q2, psi2)?);
    let n1: f64 = h1.iter().zip(&vecs).map(|(h, v)| h * wt(psi1.p, v)).sum();
    let n2: f64 = h2.iter().zip(&vecs).map(|(h, v)| h * wt(psi2.p, v)).sum();
    let family: Family = [(q1.desc.p, q1.desc.clone()), (q2.desc.p, q2.desc.clone())]
        .into_iter()
        .collect();
    let c = psi1.modulus() * psi2.modulus();
    let ds = (psi1.p as f64).powf(q1.desc.d() as f64 / 2.0) * (psi2.p as f64).powf(q2.desc.d() as f64 / 2.0);
    let parts = [psi1, psi2];
    let mut composite = 0.0;
    for v1 in &vecs {
        for v2 in &vecs {
            let a: [u64; 3] = std::array::from_fn(|i| mul_mod(psi1.p.pow(v1[i]) % c, psi2.p.pow(v2[i]) % c, c));
            let h = hhat_composite_bruteforce(&family, &parts, a, q1.budget)?.abs() / ds;
            composite += h * wt(psi1.p, v1) * wt(psi2.p, v2);
        }
    }
    Ok(FactorizationCheck {
        product: n1 * n2,
        composite,
    })
}
