//! The identity suite behind `locsums verify`.
//!
//! Each tag maps to exactly one check. [`MANIFEST`] is the coverage
//! contract: a run producing fewer results than it lists fails.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locsums::ag::{g_xi, g_xi_psi, g_xi_psi_naive, trivial_prime_rhs, FieldPairData, GXI_RATIO_THRESHOLD, G_RATIO_THRESHOLD};
use locsums::chars::{admissible_pairs, enumerate_chars, MultChar};
use locsums::error::{Error, Result};
use locsums::expsums::cyclo::{euler_phi, MAX_DEGREE};
use locsums::expsums::poly::{Poly, RatFn};
use locsums::expsums::rho::rho_u64;
use locsums::expsums::stationary::{reduce_stationary_even, reduce_stationary_odd, StationaryProblem};
use locsums::expsums::value::PhaseHist;
use locsums::hhat::*;
use locsums::kloosterman::{Family, LocalRepDescriptor};
use locsums::padic::{ExtKind, Ring};
use locsums::zlocal::{fourier_expand, g_prime_reduced, g_sum, zero_frequency_bound};

use crate::Kind;

/// Every tag the suite runs, in order.
pub const MANIFEST: &[&str] = &[
    "brute-forms-agree",
    "closed-form-unit-a",
    "vanishing-branches-exact",
    "bound-certificates",
    "critical-count-rho",
    "epsilon-multiplicativity",
    "fourier-round-trip",
    "g-prime-reduction",
    "zero-frequency-bound",
    "prime-level-cross-check",
    "stationary-reducers",
    "exact-mode-agreement",
    "ag-factored-sum",
];

pub struct Ctx {
    pub desc: LocalRepDescriptor,
    pub kind: Kind,
    pub k: u32,
    pub tol: f64,
    pub seed: u64,
    pub budget: u64,
}

impl Ctx {
    fn p(&self) -> u64 {
        self.desc.p
    }

    fn pk(&self) -> u64 {
        self.p().pow(self.k)
    }

    fn phi(&self) -> Result<u64> {
        Ok(CyclicUnits::get(self.p(), self.k)?.phi)
    }

    fn query(&self, d: &LocalRepDescriptor, j: u64, a: [u64; 3], k: u32) -> Result<HhatQuery> {
        Ok(HhatQuery::new(d.clone(), psi_from_index(d.p, k, j)?, a, k)?.with_budget(self.budget))
    }

    /// Largest `k' <= k` with `p^k' <= limit`, but at least `v_p(q')`, for
    /// the checks that sum over all residues mod `c`.
    fn k_at_most(&self, limit: u64) -> u32 {
        let mut k = self.k;
        while k > self.desc.vq.max(1) && self.p().pow(k) > limit {
            k -= 1;
        }
        k
    }

    fn small_k(&self) -> u32 {
        self.k_at_most(125)
    }

    fn family(&self) -> Family {
        [(self.p(), self.desc.clone())].into_iter().collect()
    }

    /// `(a1, a2, a3)` vectors exercising every valuation pattern up to `p^2`.
    fn a_grid(&self) -> Vec<[u64; 3]> {
        let pk = self.pk();
        let mut vals: Vec<u64> = [1, 2, self.p(), 2 * self.p(), self.p() * self.p(), 0]
            .iter()
            .map(|x| x % pk)
            .collect();
        vals.sort_unstable();
        vals.dedup();
        let mut out = Vec::new();
        for &x in &vals {
            for &y in &vals {
                for &z in &vals {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    /// All character indices, or a seeded sample of [`SAMPLE`] of them
    /// (always including the trivial one) when there are more than [`EXHAUSTIVE`].
    fn chars(&self, salt: u64) -> Result<Sampled> {
        let phi = self.phi()?;
        if phi <= EXHAUSTIVE {
            return Ok(Sampled {
                idx: (0..phi).collect(),
                of: None,
            });
        }
        let mut rng = self.rng(salt);
        let mut idx: Vec<u64> = std::iter::once(0).chain((1..SAMPLE).map(|_| rng.gen_range(1..phi))).collect();
        idx.sort_unstable();
        idx.dedup();
        Ok(Sampled { idx, of: Some(phi) })
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (salt << 32))
    }
}

/// Character counts up to which checks are exhaustive.
const EXHAUSTIVE: u64 = 200;
const SAMPLE: u64 = 48;
const DEFINITION_BUDGET: u64 = 20_000_000;

struct Sampled {
    idx: Vec<u64>,
    /// Population size when sampled.
    of: Option<u64>,
}

impl Sampled {
    /// Keeps at most `n` indices, marking the result sampled.
    fn at_most(mut self, n: usize) -> Self {
        if self.idx.len() > n {
            let total = self.of.unwrap_or(self.idx.len() as u64);
            self.idx.truncate(n);
            self.of = Some(total);
        }
        self
    }

    fn note(&self) -> String {
        match self.of {
            Some(n) => format!(" [SAMPLED {} of {n} characters]", self.idx.len()),
            None => String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
    Budget,
}

pub struct CheckResult {
    pub tag: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
            Status::Budget => "BUDGET",
        };
        write!(f, "{s} {} {}", self.tag, self.detail)
    }
}

enum Outcome {
    Checked { bad: usize, detail: String },
    Skipped(String),
}

fn checked(bad: usize, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome::Checked {
        bad,
        detail: detail.into(),
    })
}

type Check = fn(&Ctx) -> Result<Outcome>;

const CHECKS: &[Check] = &[
    brute_forms,
    closed_form_unit,
    vanishing_branches,
    bound_certificates,
    critical_count,
    multiplicativity,
    fourier_round_trip,
    g_prime_reduction,
    zero_frequency,
    prime_level_cross_check,
    stationary_reducers,
    exact_mode,
    ag_factored,
];

/// Runs every check in manifest order, handing each result to `emit` as it completes.
pub fn run(ctx: &Ctx, mut emit: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    MANIFEST
        .iter()
        .zip(CHECKS)
        .map(|(&tag, check)| {
            let (status, detail) = match check(ctx) {
                Ok(Outcome::Checked { bad: 0, detail }) => (Status::Pass, detail),
                Ok(Outcome::Checked { bad, detail }) => (Status::Fail, format!("{bad} mismatches; {detail}")),
                Ok(Outcome::Skipped(why)) => (Status::Skip, why),
                Err(e @ Error::BudgetExceeded { .. }) => (Status::Budget, e.to_string()),
                Err(e) => (Status::Fail, e.to_string()),
            };
            let r = CheckResult { tag, status, detail };
            emit(&r);
            r
        })
        .collect()
}

/// `Ok` iff the manifest is covered and nothing failed; `(exit code, message)` otherwise.
pub fn summarize(results: &[CheckResult]) -> std::result::Result<(), (u8, String)> {
    if results.len() < MANIFEST.len() || results.iter().zip(MANIFEST).any(|(r, t)| r.tag != *t) {
        return Err((1, format!("{} of {} manifest tags ran", results.len(), MANIFEST.len())));
    }
    let fails = results.iter().filter(|r| r.status == Status::Fail).count();
    if fails > 0 {
        return Err((1, format!("{fails} checks failed")));
    }
    if results.iter().any(|r| r.status == Status::Budget) {
        return Err((3, "budget exceeded".into()));
    }
    Ok(())
}

fn same(a: &HhatValue, b: &HhatValue, tol: f64) -> bool {
    a.agrees(b, tol)
}

fn brute_forms(ctx: &Ctx) -> Result<Outcome> {
    let pk = ctx.pk();
    let (mut bad, mut n, mut with_def) = (0, 0, 0);
    // the u-form costs p^{2k} per character
    let chars = ctx.chars(1)?.at_most(if pk > 200 { 12 } else { usize::MAX });
    for a in [[1, 1, 1], [2, 1, 1], [ctx.p() % pk, 1, 2]] {
        for &j in &chars.idx {
            let q = ctx.query(&ctx.desc, j, a, ctx.k)?;
            let b = hhat_bruteforce(&q)?;
            bad += usize::from(!same(&hhat_uform(&q)?, &b, ctx.tol));
            // the five-fold sum is a second oracle only where it is cheap
            match hhat_definition(&q.clone().with_budget(ctx.budget.min(DEFINITION_BUDGET))) {
                Ok(d) => {
                    bad += usize::from(!same(&d, &b, ctx.tol));
                    with_def += 1;
                }
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
            n += 1;
        }
    }
    checked(
        bad,
        format!("{n} queries, {with_def} also by the defining sum{}", chars.note()),
    )
}

fn closed_form_unit(ctx: &Ctx) -> Result<Outcome> {
    let (mut bad, mut n, mut gated, mut outside_bad) = (0, 0, 0, 0);
    for j in 0..ctx.phi()? {
        let q = ctx.query(&ctx.desc, j, [1, 1, 1], ctx.k)?;
        let b = hhat_bruteforce(&q)?;
        match hhat_closed_form(&q) {
            Ok(c) => {
                bad += usize::from(!same(&c, &b, ctx.tol));
                n += 1;
            }
            Err(Error::OutOfValidityRange(_)) => {
                gated += 1;
                // informational: agreement outside the validated range
                if let Ok(c) = hhat_closed_form_with(&q, &ClosedFormOptions::ungated()) {
                    outside_bad += usize::from(!same(&c, &b, ctx.tol));
                }
            }
            Err(e) => return Err(e),
        }
    }
    checked(
        bad,
        format!("{n} characters agree; {gated} outside the validity range ({outside_bad} of those differ ungated)"),
    )
}

fn vanishing_branches(ctx: &Ctx) -> Result<Outcome> {
    let (mut bad, mut n) = (0, 0);
    let chars = ctx.chars(3)?;
    for a in ctx.a_grid() {
        let t = hhat_table(&ctx.desc, ctx.k, a, ctx.budget)?;
        for &j in &chars.idx {
            let q = ctx.query(&ctx.desc, j, a, ctx.k)?;
            let c = match hhat_closed_form(&q) {
                Ok(c) => c,
                Err(Error::OutOfValidityRange(_)) => continue,
                Err(e) => return Err(e),
            };
            if c.branch.is_vanishing() {
                n += 1;
                let z = t.values[j as usize].norm();
                bad += usize::from(z > 1e-9 * (ctx.pk() * ctx.pk()) as f64 + t.error);
            }
        }
    }
    checked(bad, format!("{n} predicted zeros confirmed{}", chars.note()))
}

fn bound_certificates(ctx: &Ctx) -> Result<Outcome> {
    let (mut bad, mut n) = (0, 0);
    let mut grid = vec![[1, 1, 1]];
    if ctx.k == ctx.desc.c0 {
        let p = ctx.p() % ctx.pk();
        grid.extend([[p, p, p], [p, 1, 1]]);
    }
    for a in grid {
        for j in 0..ctx.phi()? {
            let q = ctx.query(&ctx.desc, j, a, ctx.k)?;
            for c in certify_bounds(&q)? {
                n += 1;
                bad += usize::from(!c.ok());
            }
        }
    }
    checked(bad, format!("{n} certificates"))
}

fn sc_unramified(p: u64, c0: u32) -> Result<LocalRepDescriptor> {
    Ok(LocalRepDescriptor::supercuspidal(
        admissible_pairs(p, c0, ExtKind::Unramified)?.remove(0),
    ))
}

fn critical_count(ctx: &Ctx) -> Result<Outcome> {
    if ctx.kind != Kind::Unramified {
        return Ok(Outcome::Skipped("unramified descriptors only".into()));
    }
    // k = c0 >= 2 at the descriptor's c0, or at c0 = 2
    let d = if ctx.desc.c0 >= 2 {
        ctx.desc.clone()
    } else {
        sc_unramified(ctx.p(), 2)?
    };
    let k = d.c0;
    let p = d.p;
    let (mut bad, mut n, mut empty) = (0, 0, 0);
    for j in 0..CyclicUnits::get(p, k)?.phi {
        let c = critical_sets(&ctx.query(&d, j, [1, 1, 1], k)?)?;
        let delta = c
            .delta
            .ok_or_else(|| Error::InternalInconsistency("Nm(l_xi) not a unit at k = c0".into()))?;
        if c.lpsi % p != 0 {
            n += 1;
            bad += usize::from(c.t.len() as u64 != rho_u64(p, delta, k / 2));
        } else {
            empty += 1;
            bad += usize::from(!c.t.is_empty());
        }
    }
    checked(bad, format!("c0 = k = {k}: {n} counts equal rho, {empty} empty sets"))
}

fn partner(p: u64) -> Result<LocalRepDescriptor> {
    let q = if p == 5 { 3 } else { 5 };
    let chi = enumerate_chars(Ring::base(q, 1)?, |x| x.conductor() == 1)?.remove(0);
    LocalRepDescriptor::principal_series(chi)
}

fn multiplicativity(ctx: &Ctx) -> Result<Outcome> {
    let d2 = partner(ctx.p())?;
    let q = d2.p;
    let k = ctx.k_at_most(30);
    let p = ctx.p();
    let phi = CyclicUnits::get(p, k)?.phi;
    // phi(c)^3 terms per tuple
    let composite_phi = phi * (q - 1);
    let step = (phi / if composite_phi <= 100 { 8 } else { 3 }).max(1);
    let splits = [
        MSplit {
            m1: [1, 1, 1],
            m2: [1, 1, 1],
        },
        MSplit {
            m1: [p, 1, 1],
            m2: [1, q, 1],
        },
        MSplit {
            m1: [1, 1, 1],
            m2: [q, 1, q * q],
        },
    ];
    let (mut bad, mut n) = (0, 0);
    for j1 in (0..phi).step_by(step as usize) {
        for j2 in 0..q - 1 {
            for split in &splits {
                let r = epsilon_multiplicativity(&ctx.desc, PsiPart { p, k, j: j1 }, &d2, PsiPart { p: q, k: 1, j: j2 }, split)?;
                bad += usize::from(!r.agrees(1e-8));
                n += 1;
            }
        }
    }
    checked(bad, format!("{n} tuples at c = {} against {}", p.pow(k) * q, d2.label()))
}

fn fourier_round_trip(ctx: &Ctx) -> Result<Outcome> {
    let k = ctx.small_k();
    let pk = ctx.p().pow(k);
    let f = ctx.family();
    let (mut bad, mut n) = (0, 0);
    let mut worst: f64 = 0.0;
    for a in [[1, 1, 1], [1, 2, ctx.p() % pk]] {
        let t = fourier_expand(a, pk, &f, ctx.budget)?;
        let e = t.roundtrip_error();
        worst = worst.max(e);
        bad += usize::from(e >= 1e-8);
        let h = hhat_table(&ctx.desc, k, a, ctx.budget)?;
        for (j, z) in h.values.iter().enumerate() {
            let x = t.coefficient(&[j as u64])?;
            bad += usize::from((x - z).norm() > ctx.tol * z.norm().max(1.0));
            n += 1;
        }
    }
    checked(
        bad,
        format!("{n} coefficients equal hat H at c = {pk}, round-trip error {worst:.1e}"),
    )
}

fn g_prime_reduction(ctx: &Ctx) -> Result<Outcome> {
    let c = 2 * ctx.p().pow(ctx.small_k());
    let f = ctx.family();
    let mut rng = ctx.rng(7);
    let mut ms: Vec<[i128; 3]> = vec![[1, 1, 1], [1, 0, 1], [ctx.p() as i128, 3, 5]];
    ms.extend((0..3).map(|_| [rng.gen_range(-50..50), rng.gen_range(-50..50), rng.gen_range(-50..50)]));
    let mut bad = 0;
    for &m in &ms {
        let g = g_sum(m, c, &f, ctx.budget)?;
        let r = g_prime_reduced(m, c, &f, ctx.budget)?;
        bad += usize::from((g.g_prime.value() - r.value()).norm() > 1e-8 * r.abs().max(1.0));
    }
    checked(bad, format!("{} m-vectors at c = {c}", ms.len()))
}

fn zero_frequency(ctx: &Ctx) -> Result<Outcome> {
    if !ctx.desc.is_supercuspidal() {
        return Ok(Outcome::Skipped("supercuspidal descriptors only".into()));
    }
    let c = ctx.p().pow(ctx.small_k());
    let f = ctx.family();
    let ms: Vec<[i128; 3]> = if c <= 27 {
        (0..c as i128).flat_map(|x| (0..c as i128).map(move |y| [x, y, 0])).collect()
    } else {
        let mut rng = ctx.rng(11);
        (0..40)
            .map(|_| [rng.gen_range(0..c as i128), rng.gen_range(0..c as i128), 0])
            .collect()
    };
    let mut bad = 0;
    for &m in &ms {
        let g = g_sum(m, c, &f, ctx.budget)?;
        let b = zero_frequency_bound(m, c, &f)?;
        bad += usize::from(g.g.abs() > b * (1.0 + 1e-9) + 1e-12);
    }
    checked(bad, format!("{} vectors with m3 = 0 at c = {c}", ms.len()))
}

fn prime_level_cross_check(ctx: &Ctx) -> Result<Outcome> {
    let p = ctx.p();
    let fd = FieldPairData::new(p)?;
    let (mut bad, mut n) = (0, 0);
    for pr in admissible_pairs(p, 1, ExtKind::Unramified)? {
        let d = LocalRepDescriptor::supercuspidal(pr.clone());
        let h = hhat_bruteforce(&ctx.query(&d, 0, [1, 1, 1], 1)?)?.tilde_value() * (p * p) as f64;
        let rhs = trivial_prime_rhs(&fd, &pr.xi)?.value();
        bad += usize::from((h - rhs).norm() > 1e-8 * rhs.norm().max(1.0));
        n += 1;
    }
    checked(bad, format!("{n} unramified xi at k = c0 = 1"))
}

fn random_poly(rng: &mut ChaCha8Rng, deg: u32) -> Result<Poly> {
    let mut terms: Vec<(Vec<u32>, i128)> = (0..3)
        .map(|_| (vec![rng.gen_range(0..=deg)], rng.gen_range(-6..=6)))
        .collect();
    terms.push((vec![0], rng.gen_range(-6..=6)));
    Poly::from_terms(1, terms)
}

/// One-variable problem with unit denominators and random characters.
fn random_problem(rng: &mut ChaCha8Rng, p: u64, beta: u32, chars: &[MultChar]) -> Result<StationaryProblem> {
    let mut den = random_poly(rng, 1)?;
    for t in den.terms.iter_mut() {
        t.1 *= p as i128;
    }
    den.terms.push((vec![0], 1));
    let f = RatFn::new(random_poly(rng, 2)?, den)?;
    let g = RatFn::poly(random_poly(rng, 2)?);
    let chi = chars[rng.gen_range(0..chars.len())].clone();
    let a = rng.gen_range(0..p.pow(beta) as i128);
    StationaryProblem::new(p, 1, vec![f], vec![chi], vec![g], vec![a])
}

fn exact_eq(a: &PhaseHist, b: &PhaseHist) -> Result<bool> {
    let n = num_integer::lcm(a.n, b.n);
    let mut s = a.lift(n);
    let mut e = b.lift(n);
    for c in e.counts.iter_mut() {
        *c = -*c;
    }
    s.merge(&e);
    if euler_phi(n) <= MAX_DEGREE {
        Ok(s.to_cyclotomic()?.is_zero())
    } else {
        Ok(s.to_value().is_zero(1e-6))
    }
}

fn stationary_reducers(ctx: &Ctx) -> Result<Outcome> {
    let p = ctx.p();
    if p > 13 {
        return Ok(Outcome::Skipped("naive sums need p <= 13".into()));
    }
    let mut rng = ctx.rng(13);
    let (mut bad, mut n, mut refused) = (0, 0, 0);
    for (beta, odd) in [(2u32, false), (3, true)] {
        let chars = enumerate_chars(Ring::base(p, beta)?, |_| true)?;
        for _ in 0..10 {
            let pr = random_problem(&mut rng, p, beta, &chars)?;
            let red = if odd {
                reduce_stationary_odd(&pr, 1)
            } else {
                reduce_stationary_even(&pr, 1)
            };
            let red = match red {
                Ok(r) => r,
                // the quadratic truncation is not valid at p = 3, alpha = 1
                Err(Error::OutOfValidityRange(_)) if odd && p == 3 => {
                    refused += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let naive = pr.naive(beta)?;
            bad += usize::from(!exact_eq(&red.exact, &naive)?);
            let sh = pr.reduce_shifted(1, odd, &[rng.gen_range(0..p)])?;
            bad += usize::from(!exact_eq(&sh.exact, &red.exact)?);
            n += 1;
        }
    }
    checked(
        bad,
        format!("{n} seeded instances, {refused} refused outside the validity range"),
    )
}

fn exact_mode(ctx: &Ctx) -> Result<Outcome> {
    let (mut bad, mut n, mut too_big) = (0, 0, 0);
    let p = ctx.p() % ctx.pk();
    let chars = ctx.chars(5)?.at_most(16);
    for a in [[1, 1, 1], [p, 1, 1]] {
        for &j in &chars.idx {
            let q = ctx.query(&ctx.desc, j, a, ctx.k)?;
            let c = match hhat_closed_form_with(&q, &ClosedFormOptions::ungated()) {
                Ok(c) => c,
                Err(Error::OutOfValidityRange(_)) => continue,
                Err(e) => return Err(e),
            };
            // only closed forms that hold in floating point are rechecked
            if !same(&c, &hhat_bruteforce(&q)?, ctx.tol) {
                continue;
            }
            let ex = match hhat_exact(&q) {
                Ok(h) => h,
                Err(Error::OutOfValidityRange(_) | Error::InvalidParameter(_) | Error::BudgetExceeded { .. }) => {
                    too_big += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            match c.exact_agrees(&ex) {
                Ok(Some(ok)) => {
                    bad += usize::from(!ok);
                    n += 1;
                }
                Ok(None) | Err(Error::OutOfValidityRange(_) | Error::InvalidParameter(_)) => too_big += 1,
                Err(e) => return Err(e),
            }
        }
    }
    checked(
        bad,
        format!(
            "{n} exact agreements, {too_big} beyond the cyclotomic degree limit{}",
            chars.note()
        ),
    )
}

fn ag_factored(ctx: &Ctx) -> Result<Outcome> {
    let p = ctx.p();
    let fd = FieldPairData::new(p)?;
    let pf = p as f64;
    let (mut bad, mut n) = (0, 0);
    for xi in 1..fd.order() {
        if fd.is_regular(xi) {
            bad += usize::from(g_xi(&fd, xi)?.abs() / pf.powf(1.5) > GXI_RATIO_THRESHOLD);
        }
        for psi in 1..p - 1 {
            let g = g_xi_psi(&fd, xi, psi)?;
            bad += usize::from(g.abs() / (pf * pf) > G_RATIO_THRESHOLD);
            if p <= 7 {
                let naive = g_xi_psi_naive(&fd, xi, psi)?;
                bad += usize::from((g.value() - naive.value()).norm() > 1e-9 * pf * pf);
            }
            n += 1;
        }
    }
    checked(bad, format!("{n} pairs (xi, psi) within the frozen thresholds"))
}
