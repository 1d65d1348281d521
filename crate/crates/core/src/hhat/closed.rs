//! Closed-form evaluations of `hat H`.
//!
//! Values are `gamma p^{d/2} hat H`. Supercuspidal branches that rest on
//! the Postnikov expansion of `psi` and `xi` are gated on "`p^k` large"
//! (`k >= 10` or `p >= 10`); [`ClosedFormOptions::ungated`] lifts the gate
//! for experiments at small moduli.

use std::collections::HashMap;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;

use super::brute::hhat_table;
use super::query::{psi_from_index, Branch, CyclicUnits, HhatQuery, HhatValue};
use crate::chars::{postnikov_ell, AdmissiblePair, MultChar};
use crate::error::{Error, Result};
use crate::expsums::quadform::{eps_p, quad_gauss, QuadraticFormFp};
use crate::expsums::roots::RootTable;
use crate::expsums::value::{ExpSumValue, KahanSum, PhaseHist, EPS};
use crate::expsums::{kloosterman_classical, ramanujan};
use crate::kloosterman::{norm_fiber_table, LocalKind, LocalRepDescriptor};
use crate::padic::modulus::{inv_mod, legendre, mul_mod, Modulus};
use crate::padic::quad::{El, ExtKind, Ring};

/// Phase histograms are kept up to this denominator.
const EXACT_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug)]
pub struct ClosedFormOptions {
    /// Refuse Postnikov-based branches unless `p^k` is large.
    pub require_large: bool,
}

impl Default for ClosedFormOptions {
    fn default() -> Self {
        ClosedFormOptions { require_large: true }
    }
}

impl ClosedFormOptions {
    pub fn ungated() -> Self {
        ClosedFormOptions { require_large: false }
    }
}

pub fn hhat_closed_form(q: &HhatQuery) -> Result<HhatValue> {
    hhat_closed_form_with(q, &ClosedFormOptions::default())
}

pub fn hhat_closed_form_with(q: &HhatQuery, opts: &ClosedFormOptions) -> Result<HhatValue> {
    if q.k < q.desc.vq {
        return Ok(HhatValue::zero(q, Branch::BelowLevel));
    }
    match &q.desc.kind {
        LocalKind::PrincipalSeries(chi) => principal_series(q, chi),
        LocalKind::Supercuspidal(pr) => supercuspidal(q, pr, opts),
    }
}

fn gate(q: &HhatQuery, opts: &ClosedFormOptions, what: &str) -> Result<()> {
    if opts.require_large && !Modulus::new(q.p(), q.k)?.is_large() {
        return Err(Error::OutOfValidityRange(format!(
            "{what} needs p^k large (k >= 10 or p >= 10), got p = {}, k = {}",
            q.p(),
            q.k
        )));
    }
    Ok(())
}

fn a123(q: &HhatQuery) -> u64 {
    let pk = q.pk();
    mul_mod(mul_mod(q.a[0], q.a[1], pk), q.a[2], pk)
}

fn supercuspidal(q: &HhatQuery, pr: &AdmissiblePair, opts: &ClosedFormOptions) -> Result<HhatValue> {
    let k = q.k;
    let c0 = pr.c0;
    let p = q.p();
    let nonunit = !q.a_is_unit();
    let unram = pr.desc.kind == ExtKind::Unramified;
    let trivial = q.psi.is_trivial();
    if k > c0 {
        if nonunit {
            return Ok(HhatValue::zero(q, Branch::VanishNonUnit));
        }
        gate(q, opts, "the stationary-phase evaluation")?;
        let base = if unram { unram_unit(q, pr)? } else { ramified_unit(q, pr)? };
        return scale_by_psi(q, base);
    }
    // k = c0, only unramified reaches here (ramified has v_p(q') = c0 + 1)
    if k == 1 {
        return match (trivial, nonunit) {
            (true, true) => trivial_gauss_ramanujan(q, pr),
            (true, false) => trivial_prime_level(q, pr),
            (false, true) => Ok(HhatValue::zero(q, Branch::PrimeLevelVanish)),
            (false, false) => scale_by_psi(q, prime_level(q, pr)?),
        };
    }
    if trivial && nonunit {
        if a123(q) == 0 {
            return trivial_gauss_ramanujan(q, pr);
        }
        gate(q, opts, "the trivial-character vanishing")?;
        return Ok(HhatValue::zero(q, Branch::TrivialVanish));
    }
    if nonunit {
        let v = q.valuations();
        let j = v[0];
        let cond = q.psi.conductor();
        if !(v.iter().all(|&x| x == j) && j >= 1 && cond + j == k) {
            return Ok(HhatValue::zero(q, Branch::DegenerateVanish));
        }
        gate(q, opts, "the congruence-system evaluation")?;
        return unram_system(q, pr);
    }
    gate(q, opts, "the stationary-phase evaluation")?;
    let _ = p;
    scale_by_psi(q, unram_unit(q, pr)?)
}

/// `hat H(psi, a) = psi(a1 a2 a3) hat H(psi, 1)` for unit `a`.
fn scale_by_psi(q: &HhatQuery, mut v: HhatValue) -> Result<HhatValue> {
    if q.a_is_one() || v.tilde.abs() == 0.0 && v.exact.is_some() {
        return Ok(v);
    }
    let cu = CyclicUnits::get(q.p(), q.k)?;
    let ph = cu.phase(q.psi_index(), a123(q)).ok_or(Error::NotAUnit)?;
    v.tilde = v.tilde.times_unit(RootTable::root(ph, cu.phi));
    if let Some(h) = v.exact.take() {
        if h.n % cu.phi == 0 {
            let f = h.n / cu.phi;
            let mut s = PhaseHist::new(h.n);
            for (i, &c) in h.counts.iter().enumerate() {
                if c != 0 {
                    s.add(i as u64 + ph * f, c);
                }
            }
            v.exact = Some(s);
        }
    }
    Ok(v)
}

static ELL_PSI: Lazy<Mutex<HashMap<(u64, u32), u64>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// `l_psi` for `psi = psi_j` as `j l_{psi_1}` modulo `p^k`.
pub fn ell_psi(p: u64, k: u32, j: u64) -> Result<u64> {
    let pk = p.pow(k);
    let base = {
        let cached = ELL_PSI.lock().get(&(p, k)).copied();
        match cached {
            Some(b) => b,
            None => {
                let b = postnikov_ell(&psi_from_index(p, k, 1)?, 1, k)?.ell.a;
                ELL_PSI.lock().insert((p, k), b);
                b
            }
        }
    };
    Ok(mul_mod(j % pk, base, pk))
}

/// `l_xi` at precision `p^k`, shifted within its ambiguity to trace zero.
pub fn ell_xi_trace_zero(pr: &AdmissiblePair, k: u32) -> Result<El> {
    let pe = pr.ell_xi(k)?;
    let r = pe.ring;
    let tr = r.trace(pe.ell);
    if tr == 0 {
        return Ok(pe.ell);
    }
    let p = r.p;
    if tr % p.pow(k - 1) != 0 {
        return Err(Error::InternalInconsistency(format!(
            "Tr(l_xi) = {tr} is not divisible by p^(k-1)"
        )));
    }
    let half = mul_mod(tr, inv_mod(2, r.pk()).expect("p odd"), r.pk());
    Ok(r.sub(pe.ell, r.from_int(half as i128)))
}

/// Shared data for the supercuspidal stationary-phase branches.
pub(crate) struct ScCtx<'a> {
    pub q: &'a HhatQuery,
    pub pr: &'a AdmissiblePair,
    pub ring: Ring,
    pub ell: El,
    /// `Nm(l_xi) mod p^k`.
    pub nm: u64,
    pub lpsi: u64,
    pub cu: std::sync::Arc<CyclicUnits>,
    pub nden: u64,
}

impl<'a> ScCtx<'a> {
    pub fn new(q: &'a HhatQuery, pr: &'a AdmissiblePair) -> Result<Self> {
        let k = q.k;
        let ring = pr.ring(k)?;
        let ell = ell_xi_trace_zero(pr, k)?;
        let nm = ring.norm(ell);
        let cu = CyclicUnits::get(q.p(), k)?;
        let lpsi = ell_psi(q.p(), k, q.psi_index())?;
        let nden = num_integer::lcm(num_integer::lcm(cu.phi, pr.xi.exponent()), cu.pk);
        Ok(ScCtx {
            q,
            pr,
            ring,
            ell,
            nm,
            lpsi,
            cu,
            nden,
        })
    }

    pub fn pk(&self) -> u64 {
        self.cu.pk
    }

    /// `s^2 l_psi - s Nm(l_xi) + Nm(l_xi) l_psi mod p^k`.
    pub fn poly(&self, s: u64) -> u64 {
        let pk = self.pk();
        let s2 = mul_mod(s, s, pk);
        let t = (mul_mod(s2, self.lpsi, pk) + mul_mod(self.nm, self.lpsi, pk)) % pk;
        (t + pk - mul_mod(s, self.nm, pk)) % pk
    }

    /// Phase over `nden` and `A` of the summand
    /// `psi(Nm t0 / x1x2x3) xi(t0) e_{p^k}(-Tr t0 + a.x - A)`.
    pub fn term(&self, x: [u64; 3], t0: El, a: [u64; 3]) -> Option<(u64, u64)> {
        let pk = self.pk();
        let r = &self.ring;
        let nt = r.norm(t0);
        let x123 = mul_mod(mul_mod(x[0], x[1], pk), x[2], pk);
        let a123 = mul_mod(mul_mod(a[0], a[1], pk), a[2], pk);
        let big_a = mul_mod(mul_mod(x123, a123, pk), inv_mod(nt, pk)?, pk);
        let psi_ph = self.cu.phase(self.q.psi_index(), mul_mod(nt, inv_mod(x123, pk)?, pk))?;
        let xi_ph = self.pr.xi.phase_from(r, t0)?;
        let mut add = (pk - r.trace(t0)) % pk;
        for i in 0..3 {
            add = (add + mul_mod(a[i], x[i], pk)) % pk;
        }
        add = (add + pk - big_a) % pk;
        let n = self.nden;
        let ph = (psi_ph * (n / self.cu.phi) + xi_ph * (n / self.pr.xi.exponent()) + add * (n / pk)) % n;
        Some((ph, big_a))
    }

    /// `t0 = s + l_xi`.
    pub fn t0_of(&self, s: u64) -> El {
        self.ring.add(self.ring.from_int(s as i128), self.ell)
    }

    /// The quadratic Gauss sum `G_p` of the odd-`k` unramified evaluation at
    /// `(x, t0)`, coordinates `(y1, y2, y3, u, v)` with `t1 = u + v w`.
    pub fn gp(&self, x: [u64; 3], t0: El, a: [u64; 3], big_a: u64) -> Result<ExpSumValue> {
        let p = self.q.p();
        let pk = self.pk();
        let pn = p.pow(self.q.k / 2);
        let r = &self.ring;
        let red = |v: u64| -> Result<i64> {
            if v % pn != 0 {
                return Err(Error::InternalInconsistency("congruence system not satisfied".into()));
            }
            Ok(((v / pn) % p) as i64)
        };
        let mut l = vec![0i64; 5];
        for i in 0..3 {
            let v = (mul_mod(a[i], x[i], pk) + 2 * pk - self.lpsi - big_a) % pk;
            l[i] = red(v)?;
        }
        let b = r.add(r.from_int(((self.lpsi + big_a) % pk) as i128), r.sub(self.ell, t0));
        let w2 = (r.w2() % p) as i64;
        l[3] = 2 * red(b.a)?;
        l[4] = 2 * w2 * red(b.b)?;
        let pi = p as i64;
        let h = inv_mod(2, p).expect("p odd") as i64;
        let lp = (self.lpsi % p) as i64;
        let la = (self.ell.a % p) as i64;
        let lb = (self.ell.b % p) as i64;
        let aa = (big_a % p) as i64;
        let md = |v: i64| v.rem_euclid(pi);
        let mut m = vec![vec![0i64; 5]; 5];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = if i == j { md(lp * h) } else { md(-aa * h) };
            }
            m[i][3] = aa;
            m[3][i] = aa;
        }
        m[3][3] = md(-(lp + la) - 3 * aa);
        m[4][4] = md(-w2 * md(lp + la) - aa * w2);
        m[3][4] = md(-lb * w2);
        m[4][3] = m[3][4];
        quad_gauss(&QuadraticFormFp::new(p, m, l)?)
    }
}

/// Accumulates summands as roots of unity, optionally times a weight.
struct Acc {
    n: u64,
    sum: KahanSum,
    exact: Option<PhaseHist>,
}

impl Acc {
    fn new(n: u64, exact: bool) -> Self {
        Acc {
            n,
            sum: KahanSum::new(),
            exact: (exact && n <= EXACT_LIMIT).then(|| PhaseHist::new(n)),
        }
    }

    fn add(&mut self, ph: u64, w: Complex64, sign: i64) {
        self.sum.add(RootTable::root(ph, self.n) * w * sign as f64);
        if let Some(h) = self.exact.as_mut() {
            h.add(ph, sign);
        }
    }

    fn finish(self, q: &HhatQuery, branch: Branch, factor: f64, exact_scale: Option<u128>) -> HhatValue {
        let v = self.sum.finish();
        let mut tilde = ExpSumValue::from_complex(v.amplitude * factor, v.terms, v.error * factor);
        let exact = match exact_scale {
            Some(sc) => {
                tilde = ExpSumValue::from_complex(v.amplitude, v.terms, v.error).with_scale(sc, 1);
                self.exact
            }
            None => None,
        };
        HhatValue {
            p: q.p(),
            k: q.k,
            d: q.desc.d(),
            branch,
            tilde,
            phase_known: true,
            exact,
        }
    }
}

/// Unramified, `a = (1, 1, 1)`, `k >= max(c0, 2)`: the sum over the
/// critical set `T`.
fn unram_unit(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let p = q.p();
    let k = q.k;
    if k < 2 {
        return Err(Error::OutOfValidityRange("stationary phase needs k >= 2".into()));
    }
    let ctx = ScCtx::new(q, pr)?;
    let n = k / 2;
    let pn = p.pow(n);
    let one = [1u64; 3];
    let even = k % 2 == 0;
    let mut acc = Acc::new(ctx.nden, even);
    for s in (1..pn).filter(|s| s % p != 0) {
        if ctx.poly(s) % pn != 0 {
            continue;
        }
        let t0 = ctx.t0_of(s);
        let (ph, big_a) = ctx
            .term([s; 3], t0, one)
            .ok_or_else(|| Error::InternalInconsistency("critical point is not a unit".into()))?;
        if even {
            acc.add(ph, Complex64::new(1.0, 0.0), 1);
        } else {
            let g = ctx.gp([s; 3], t0, one, big_a)?;
            acc.add(ph, g.value(), 1);
        }
    }
    if even {
        Ok(acc.finish(q, Branch::UnramEven, 1.0, Some(pn as u128)))
    } else {
        // p^{5n - 2k} = p^{n - 2}
        let f = (p as f64).powi(n as i32 - 2);
        Ok(acc.finish(q, Branch::UnramOdd, f, None))
    }
}

/// Unramified, general `a`, through the full congruence system.
pub fn unram_system(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let p = q.p();
    let k = q.k;
    if pr.desc.kind != ExtKind::Unramified || k < 2.max(pr.c0) {
        return Err(Error::OutOfValidityRange(
            "congruence system needs L unramified and k >= max(c0, 2)".into(),
        ));
    }
    let ctx = ScCtx::new(q, pr)?;
    let n = k / 2;
    let pn = p.pow(n);
    let pk = q.pk();
    let even = k % 2 == 0;
    let a = q.a;
    let units: Vec<u64> = (1..pn).filter(|x| x % p != 0).collect();
    let mut acc = Acc::new(ctx.nden, even);
    for b in 0..pn {
        let t0 = ctx.t0_of(b);
        if !ctx.ring.is_unit(t0) {
            continue;
        }
        let sols: Vec<Vec<u64>> = a
            .iter()
            .map(|&ai| units.iter().copied().filter(|&x| mul_mod(ai, x, pk) % pn == b).collect())
            .collect();
        for &x1 in &sols[0] {
            for &x2 in &sols[1] {
                for &x3 in &sols[2] {
                    let x = [x1, x2, x3];
                    let Some((ph, big_a)) = ctx.term(x, t0, a) else {
                        continue;
                    };
                    if (big_a + ctx.lpsi) % pn != b {
                        continue;
                    }
                    if even {
                        acc.add(ph, Complex64::new(1.0, 0.0), 1);
                    } else {
                        acc.add(ph, ctx.gp(x, t0, a, big_a)?.value(), 1);
                    }
                }
            }
        }
    }
    // p^{5n - 2k}
    if even {
        Ok(acc.finish(q, Branch::UnramSystemEven, 1.0, Some(pn as u128)))
    } else {
        let f = (p as f64).powi(n as i32 - 2);
        Ok(acc.finish(q, Branch::UnramSystemOdd, f, None))
    }
}

/// Unit constant of the ramified evaluation: `eps_p ((-u)/p)` for even `k`
/// and `G_p(Q_1)/p^{5/2}` for odd `k`, `Q_1` the rank-3 form
/// `-(y1y2 + y1y3 + y2y3) + 2(y1 + y2 + y3)t - 3t^2`.
pub fn ramified_constant(p: u64, u: u64, odd: bool) -> Result<Complex64> {
    if !odd {
        return Ok(eps_p(p) * legendre(-(u as i64), p) as f64);
    }
    let h = (p - inv_mod(2, p).expect("p odd")) as i64;
    let m = vec![vec![0, h, h, 1], vec![h, 0, h, 1], vec![h, h, 0, 1], vec![1, 1, 1, -3]];
    let g = quad_gauss(&QuadraticFormFp::new(p, m, vec![0; 4])?)?;
    Ok(g.value() / (p as f64).powf(2.5))
}

/// The ramified sum without its unit constant and `p`-power:
/// `sum_{s in T or T'} (s/p) psi(...) xi(s + l_xi) e(...)`.
fn ramified_core(ctx: &ScCtx) -> Result<Option<ExpSumValue>> {
    let q = ctx.q;
    let p = q.p();
    let k = q.k;
    let n = k / 2;
    let pn = p.pow(n);
    let odd = k % 2 == 1;
    if odd && ctx.lpsi % p != 0 {
        return Ok(None);
    }
    let modulus = if odd { pn * p } else { pn };
    let mut acc = Acc::new(ctx.nden, false);
    for s in (1..pn).filter(|s| s % p != 0) {
        if ctx.poly(s) % modulus != 0 {
            continue;
        }
        let (ph, _) = ctx
            .term([s; 3], ctx.t0_of(s), [1; 3])
            .ok_or_else(|| Error::InternalInconsistency("critical point is not a unit".into()))?;
        acc.add(ph, Complex64::new(1.0, 0.0), legendre(s as i64, p) as i64);
    }
    Ok(Some(acc.sum.finish()))
}

fn ramified_power(p: u64, k: u32) -> f64 {
    if k % 2 == 0 {
        (p as f64).powf((k as f64 + 1.0) / 2.0)
    } else {
        (p as f64).powf((k as f64 + 2.0) / 2.0)
    }
}

fn ramified_unit(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let ctx = ScCtx::new(q, pr)?;
    let odd = q.k % 2 == 1;
    let Some(core) = ramified_core(&ctx)? else {
        return Ok(HhatValue::zero(q, Branch::RamOddVanish));
    };
    let kappa = ramified_constant(q.p(), pr.desc.datum, odd)?;
    let f = ramified_power(q.p(), q.k);
    let z = core.amplitude * kappa * f;
    Ok(HhatValue {
        p: q.p(),
        k: q.k,
        d: q.desc.d(),
        branch: if odd { Branch::RamOdd } else { Branch::RamEven },
        tilde: ExpSumValue::from_complex(z, core.terms, (core.error + 8.0 * EPS * core.amplitude.norm()) * f),
        phase_known: true,
        exact: None,
    })
}

/// One-instance calibration of the ramified unit constant against brute force.
#[derive(Clone, Debug)]
pub struct Calibration {
    pub kappa: Complex64,
    pub derived: Complex64,
    pub psi_index: u64,
    /// `|core|` at the chosen character.
    pub core_abs: f64,
}

pub fn calibrate_ramified_constant(pr: &AdmissiblePair, k: u32, budget: u64) -> Result<Calibration> {
    if pr.desc.kind != ExtKind::Ramified {
        return Err(Error::InvalidParameter("calibration applies to ramified pairs".into()));
    }
    let p = pr.p();
    let desc = LocalRepDescriptor::supercuspidal(pr.clone());
    let table = hhat_table(&desc, k, [1, 1, 1], budget)?;
    let cu = CyclicUnits::get(p, k)?;
    let mut best: Option<(u64, ExpSumValue)> = None;
    for j in 0..cu.phi {
        let q = HhatQuery::unit(desc.clone(), psi_from_index(p, k, j)?, k)?;
        let ctx = ScCtx::new(&q, pr)?;
        if let Some(core) = ramified_core(&ctx)? {
            if best.as_ref().map_or(true, |(_, b)| core.abs() > b.abs() + 1e-9) {
                best = Some((j, core));
            }
        }
    }
    let (j, core) = best.ok_or_else(|| Error::OutOfValidityRange("no character with a nonzero sum".into()))?;
    if core.abs() < 0.5 {
        return Err(Error::OutOfValidityRange("all ramified sums vanish at this level".into()));
    }
    let brute = table.values[j as usize];
    Ok(Calibration {
        kappa: brute / (core.amplitude * ramified_power(p, k)),
        derived: ramified_constant(p, pr.desc.datum, k % 2 == 1)?,
        psi_index: j,
        core_abs: core.abs(),
    })
}

/// `tau_L(xi) = sum*_{t mod p^k} xi(t) e_{p^k}(-Tr t)`.
pub fn tau_l(pr: &AdmissiblePair, k: u32) -> Result<ExpSumValue> {
    let table = norm_fiber_table(pr, k)?;
    let mut acc = KahanSum::new();
    let p = pr.p();
    for nu in (1..table.modulus()).filter(|nu| nu % p != 0) {
        acc.add(table.values[nu as usize]);
    }
    Ok(acc.finish())
}

fn from_value(q: &HhatQuery, branch: Branch, v: ExpSumValue) -> HhatValue {
    HhatValue {
        p: q.p(),
        k: q.k,
        d: q.desc.d(),
        branch,
        tilde: v,
        phase_known: true,
        exact: None,
    }
}

/// Trivial `psi`, `k = c0` and `p^k | a1 a2 a3` (or `k = 1`, `p | a`):
/// `tau_L(xi) prod S(a_i, 0; p^k) / p^{2k}`.
fn trivial_gauss_ramanujan(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let pk = q.pk();
    let tau = tau_l(pr, q.k)?;
    let mut z = tau.value();
    let mut err = tau.value_error();
    for &ai in &q.a {
        let s = ramanujan(ai as i128, pk).value();
        z *= s;
        err *= s.norm().max(1.0);
    }
    let norm = 1.0 / (pk as f64 * pk as f64);
    Ok(from_value(
        q,
        Branch::TrivialGaussRamanujan,
        ExpSumValue::from_complex(z * norm, pk * pk, err * norm),
    ))
}

/// Trivial `psi`, `k = c0 = 1`, unit `a`:
/// `(p sum*_y Kl_ns(y) S(y, 1; p) - tau_L(xi)) / p^2`.
fn trivial_prime_level(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let p = q.p();
    let table = norm_fiber_table(pr, 1)?;
    let mut acc = KahanSum::new();
    let mut tau = KahanSum::new();
    for y in 1..p {
        let kl = table.values[y as usize];
        acc.add(kl * kloosterman_classical(y as i128, 1, p).value());
        tau.add(kl);
    }
    let z = (acc.sum() * p as f64 - tau.sum()) / (p * p) as f64;
    let err = (acc.finish().error * p as f64 + tau.finish().error) / (p * p) as f64;
    Ok(from_value(
        q,
        Branch::TrivialPrimeLevel,
        ExpSumValue::from_complex(z, p * p, err),
    ))
}

/// `k = c0 = 1`, `c(psi) = 1`, `a = (1, 1, 1)`.
fn prime_level(q: &HhatQuery, pr: &AdmissiblePair) -> Result<HhatValue> {
    let p = q.p();
    let ring = pr.ring(1)?;
    let cu = CyclicUnits::get(p, 1)?;
    let j = q.psi_index();
    let phi = cu.phi;
    let ex = pr.xi.exponent();
    let n = num_integer::lcm(num_integer::lcm(phi, ex), p);
    let roots = RootTable::new(n);
    // tau(psi-bar) = sum_x psi-bar(x) e_p(x)
    let mut tau = KahanSum::new();
    for x in 1..p {
        let ph = (phi - cu.phase(j, x).expect("unit")) % phi;
        tau.add(roots.get(ph * (n / phi) + x * (n / p)));
    }
    let mut acc = KahanSum::new();
    for t in ring.units() {
        let nt = ring.norm(t);
        let xi_ph = pr.xi.phase(t).expect("unit");
        let base = xi_ph * (n / ex) + (p - ring.trace(t)) % p * (n / p);
        let ntb = inv_mod(nt, p).expect("unit");
        for x2 in 1..p {
            for x3 in 1..p {
                let x23 = x2 * x3 % p;
                let c = (1 + p - x23 * ntb % p) % p;
                if c == 0 {
                    continue;
                }
                let arg = nt * inv_mod(x23, p).expect("unit") % p;
                let ph = (cu.phase(j, arg).expect("unit") + cu.phase(j, c).expect("unit")) % phi;
                acc.add(roots.get(base + ph * (n / phi) + (x2 + x3) % p * (n / p)));
            }
        }
    }
    let s = acc.finish();
    let t = tau.sum();
    let norm = 1.0 / (p * p) as f64;
    Ok(from_value(
        q,
        Branch::PrimeLevel,
        ExpSumValue::from_complex(t * s.amplitude * norm, s.terms, s.error * t.norm() * norm),
    ))
}

/// Principal series: zero for `c(psi) > c0`, otherwise the reduced sum
/// `chi(-1) r p^{-c0} sum_{u,v,y mod p^c0} psi-bar(u) chi(-a1 + rv) chi(y + a2 v)
/// chi-bar(a1 a2 + r y) chi-bar(v) e_{p^c0}(a3 y u)`, `r = p^{k - c0}`.
fn principal_series(q: &HhatQuery, chi: &MultChar) -> Result<HhatValue> {
    let p = q.p();
    let k = q.k;
    let c0 = q.desc.c0;
    if q.psi.conductor() > c0 {
        return Ok(HhatValue::zero(q, Branch::PsVanish));
    }
    let pc = p.pow(c0);
    let r = p.pow(k - c0) % pc;
    let cring = chi.ring();
    let ex = chi.exponent();
    let cph: Vec<Option<u64>> = (0..pc).map(|x| chi.phase(cring.from_int(x as i128))).collect();
    let cu = CyclicUnits::get(p, k)?;
    let phi = cu.phi;
    let j = q.psi_index();
    let n = num_integer::lcm(num_integer::lcm(phi, ex), pc);
    let (fpsi, fchi, fadd) = (n / phi, n / ex, n / pc);
    let a = q.a.map(|x| x % pc);
    let mut acc = Acc::new(n, true);
    for u in (1..pc).filter(|u| u % p != 0) {
        let psi_ph = (phi - cu.phase(j, u).expect("unit")) % phi;
        for v in 1..pc {
            let Some(c4) = cph[v as usize] else { continue };
            let Some(c1) = cph[((pc - a[0]) % pc + r * v % pc) as usize % pc as usize] else {
                continue;
            };
            for y in 0..pc {
                let Some(c2) = cph[((y + a[1] * v) % pc) as usize] else {
                    continue;
                };
                let Some(c3) = cph[((a[0] * a[1] + r * y) % pc) as usize] else {
                    continue;
                };
                let chi_ph = (c1 + c2 + 2 * ex - c3 - c4) % ex;
                let add = a[2] * y % pc * u % pc;
                acc.add(psi_ph * fpsi + chi_ph * fchi + add * fadd, Complex64::new(1.0, 0.0), 1);
            }
        }
    }
    let sign = chi.phase(cring.from_int(-1)).expect("unit");
    let chi_m1 = RootTable::root(sign, ex);
    let mut v = acc.finish(q, Branch::PsReduced, 1.0, Some(1));
    // chi(-1) = +-1
    let sgn = chi_m1.re.round();
    v.tilde = v.tilde.with_scale(p.pow(k - c0) as u128, pc as u128).times_int(sgn as i128);
    if let Some(h) = v.exact.as_mut() {
        for c in h.counts.iter_mut() {
            *c *= sgn as i64;
        }
    }
    Ok(v)
}

/// `hat H(psi_0, a)`: the Gauss/Ramanujan evaluations and the prime-level
/// identity, or the stationary-phase value for `k >= c0 + 1`.
pub fn hhat_trivial(q: &HhatQuery, opts: &ClosedFormOptions) -> Result<HhatValue> {
    if !q.psi.is_trivial() {
        return Err(Error::InvalidParameter("hhat_trivial needs the trivial character".into()));
    }
    hhat_closed_form_with(q, opts)
}

/// The summand of the `a = (1, 1, 1)` stationary-phase sum at the lift `s`,
/// `psi((s^2 + N)/s^3) xi(s + l_xi) e_{p^k}(sN/(s^2 + N))`, times `G_p'(s)`
/// for odd `k` in the unramified case.
pub fn critical_term(q: &HhatQuery, s: u64) -> Result<Complex64> {
    let (Some(pr), _) = super::query::kind_parts(&q.desc) else {
        return Err(Error::InvalidParameter(
            "critical terms need a supercuspidal descriptor".into(),
        ));
    };
    let ctx = ScCtx::new(q, pr)?;
    let t0 = ctx.t0_of(s);
    let (ph, big_a) = ctx.term([s; 3], t0, [1; 3]).ok_or(Error::NotAUnit)?;
    let z = RootTable::root(ph, ctx.nden);
    if q.k % 2 == 1 && pr.desc.kind == ExtKind::Unramified {
        Ok(z * ctx.gp([s; 3], t0, [1; 3], big_a)?.value())
    } else {
        Ok(z)
    }
}

/// `G_p'(s)` of the odd unramified evaluation at a critical point `s in T`.
pub fn gp_prime(q: &HhatQuery, s: u64) -> Result<ExpSumValue> {
    let (Some(pr), _) = super::query::kind_parts(&q.desc) else {
        return Err(Error::InvalidParameter("G_p' needs a supercuspidal descriptor".into()));
    };
    if pr.desc.kind != ExtKind::Unramified || q.k % 2 == 0 || q.k < 3 {
        return Err(Error::OutOfValidityRange("G_p' needs L unramified and odd k >= 3".into()));
    }
    let ctx = ScCtx::new(q, pr)?;
    let t0 = ctx.t0_of(s);
    let (_, big_a) = ctx.term([s; 3], t0, [1; 3]).ok_or(Error::NotAUnit)?;
    ctx.gp([s; 3], t0, [1; 3], big_a)
}
