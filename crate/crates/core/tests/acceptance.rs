//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line reaches the terminal
//! under plain `cargo test`. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_integer::gcd;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use locsums::ag::{g_xi_psi, g_xi_psi_naive};
use locsums::ag::{
    odd_primes, scan_cancellation, trivial_prime_rhs, FieldPairData, GXI_RATIO_THRESHOLD, G_RATIO_THRESHOLD, SCAN_BUDGET,
};
use locsums::chars::{admissible_pairs, enumerate_chars, MultChar};
use locsums::error::{Error, Result};
use locsums::expsums::cyclo::{euler_phi, MAX_DEGREE};
use locsums::expsums::poly::{Poly, RatFn};
use locsums::expsums::stationary::{reduce_stationary_even, reduce_stationary_odd, StationaryProblem};
use locsums::expsums::value::PhaseHist;
use locsums::hhat::*;
use locsums::kloosterman::{Family, LocalRepDescriptor};
use locsums::padic::modulus::inv_mod;
use locsums::padic::{ExtKind, Ring};
use locsums::zlocal::{fourier_expand, g_sum};

type Verdict = Result<(bool, String)>;

fn sc(p: u64, c0: u32, kind: ExtKind) -> Result<Vec<LocalRepDescriptor>> {
    Ok(admissible_pairs(p, c0, kind)?
        .into_iter()
        .map(LocalRepDescriptor::supercuspidal)
        .collect())
}

fn ps(p: u64, c: u32) -> Result<Vec<LocalRepDescriptor>> {
    enumerate_chars(Ring::base(p, c)?, |x| x.conductor() == c)?
        .into_iter()
        .map(LocalRepDescriptor::principal_series)
        .collect()
}

fn query(d: &LocalRepDescriptor, j: u64, a: [u64; 3], k: u32) -> Result<HhatQuery> {
    HhatQuery::new(d.clone(), psi_from_index(d.p, k, j)?, a, k)
}

fn phi(p: u64, k: u32) -> Result<u64> {
    Ok(CyclicUnits::get(p, k)?.phi)
}

fn family(d: &LocalRepDescriptor) -> Family {
    [(d.p, d.clone())].into_iter().collect()
}

/// Closed form against the FFT brute force for every character; returns
/// (mismatches, zero/nonzero classification mismatches, characters).
fn closed_vs_brute(d: &LocalRepDescriptor, k: u32, tol: f64) -> Result<(usize, usize, u64)> {
    let (mut bad, mut class) = (0, 0);
    let n = phi(d.p, k)?;
    for j in 0..n {
        let q = query(d, j, [1, 1, 1], k)?;
        let c = hhat_closed_form(&q)?;
        let b = hhat_bruteforce(&q)?;
        bad += usize::from(!c.agrees(&b, tol));
        class += usize::from(c.is_zero() != b.is_zero());
    }
    Ok((bad, class, n))
}

fn closed_form_even() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for p in [11, 13] {
        for (c0, k) in [(1, 2), (1, 4), (2, 4)] {
            let d = &sc(p, c0, ExtKind::Unramified)?[0];
            let (bad, _, n) = closed_vs_brute(d, k, 1e-6)?;
            ok &= bad == 0;
            lines.push(format!("p={p} c0={c0} k={k}: {}/{n}", n as usize - bad));
        }
    }
    Ok((ok, lines.join(", ")))
}

fn closed_form_odd() -> Verdict {
    let (p, k) = (11, 3);
    let (mut bad, mut class, mut n) = (0, 0, 0);
    let (mut full, mut zero) = (0, 0);
    for d in sc(p, 1, ExtKind::Unramified)?.iter().take(2) {
        let (b, c, m) = closed_vs_brute(d, k, 1e-6)?;
        bad += b;
        class += c;
        n += m;
        for j in 0..phi(p, k)? {
            let q = query(d, j, [1, 1, 1], k)?;
            let cs = critical_sets(&q)?;
            for &s in cs.t.members()? {
                let g = gp_prime(&q, s)?;
                if cs.t.m(s) % p == 0 {
                    bad += usize::from((g.abs() - (p as f64).powi(3)).abs() > 1e-6);
                    full += 1;
                } else {
                    bad += usize::from(g.abs() > 1e-6);
                    zero += 1;
                }
            }
        }
    }
    let ok = bad == 0 && class == 0 && full > 0 && zero > 0;
    Ok((
        ok,
        format!("{n} characters, {class} zero/nonzero disagreements; G' = eps p^3 at {full} critical points, 0 at {zero}"),
    ))
}

fn closed_form_ramified() -> Verdict {
    let p = 11;
    let (mut ok, mut lines) = (true, Vec::new());
    for c0 in [1, 2] {
        let pairs = admissible_pairs(p, c0, ExtKind::Ramified)?;
        let first = &pairs[0];
        let second = pairs
            .iter()
            .find(|x| x.desc.datum == first.desc.datum && x.xi != first.xi)
            .ok_or_else(|| Error::InvalidParameter("no second character on the same extension".into()))?;
        for k in [c0 + 1, c0 + 2] {
            let d = LocalRepDescriptor::supercuspidal(first.clone());
            let (bad, _, n) = closed_vs_brute(&d, k, 1e-6)?;
            let c1 = calibrate_ramified_constant(first, k, DEFAULT_BUDGET)?;
            let c2 = calibrate_ramified_constant(second, k, DEFAULT_BUDGET)?;
            let eps = (c1.kappa - c1.derived).norm().max((c1.kappa - c2.kappa).norm());
            ok &= bad == 0 && eps < 1e-6;
            lines.push(format!("c0={c0} k={k}: {}/{n}, eps spread {eps:.1e}", n as usize - bad));
        }
    }
    Ok((ok, lines.join(", ")))
}

fn all_a(pk: u64) -> impl Iterator<Item = [u64; 3]> {
    (0..pk).flat_map(move |x| (0..pk).flat_map(move |y| (0..pk).map(move |z| [x, y, z])))
}

fn vanishing_suite() -> Verdict {
    let p = 3;
    let mut descs = Vec::new();
    for c0 in 1..=3 {
        for kind in [ExtKind::Unramified, ExtKind::Ramified] {
            descs.extend(sc(p, c0, kind)?.into_iter().take(2));
        }
        descs.extend(ps(p, c0)?.into_iter().take(1));
    }
    // [non-unit a, principal series, degenerate support, trivial psi]
    let mut seen = [0usize; 4];
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for d in &descs {
        for k in 1..=3u32 {
            let pk = p.pow(k);
            let zero_tol = 1e-9 * (pk * pk) as f64;
            for a in all_a(pk) {
                let t = hhat_table(d, k, a, DEFAULT_BUDGET)?;
                for j in 0..t.values.len() as u64 {
                    let q = query(d, j, a, k)?;
                    let v = q.valuations();
                    let some_nonunit = v.iter().any(|&x| x > 0);
                    let statement = if d.is_supercuspidal() {
                        if k > d.c0 && some_nonunit {
                            Some(0)
                        } else if k == d.c0 && k >= 2 && some_nonunit && !q.psi.is_trivial() {
                            matches!(hhat_degenerate_support(&q)?, Support::Vanishes).then_some(2)
                        } else if k == d.c0 && k >= 2 && q.psi.is_trivial() && some_nonunit && v.iter().sum::<u32>() < k {
                            Some(3)
                        } else {
                            None
                        }
                    } else {
                        (q.psi.conductor() > d.c0).then_some(1)
                    };
                    if let Some(s) = statement {
                        seen[s] += 1;
                        let z = t.values[j as usize].norm();
                        worst = worst.max(z);
                        bad += usize::from(z > zero_tol + t.error);
                    }
                }
            }
        }
    }
    let ok = bad == 0 && seen.iter().all(|&n| n > 0);
    Ok((
        ok,
        format!(
            "{} descriptors, all a mod p^k, k <= 3: zeros confirmed {seen:?} (non-unit a, principal series, degenerate, trivial psi), max |value| {worst:.1e}",
            descs.len()
        ),
    ))
}

fn bound_certificates() -> Verdict {
    let (mut n, mut bad, mut decay) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for p in [3u64, 5, 7] {
        for c0 in 1..=3u32 {
            let kinds = [ExtKind::Unramified, ExtKind::Ramified];
            for kind in kinds {
                let d = &sc(p, c0, kind)?[0];
                let mut ks: Vec<u32> = (c0 + 1..=c0 + 3).collect();
                // k = c0 at p = 3, c0 = 3 lies outside the large-p^k range
                if c0 >= 2 && !(p == 3 && c0 == 3) {
                    ks.push(c0);
                }
                for k in ks {
                    // brute force up to p^{2k} <= 3e8
                    if (p as f64).powi(2 * k as i32) > 3e8 {
                        continue;
                    }
                    for j in 0..phi(p, k)? {
                        let q = query(d, j, [1, 1, 1], k)?;
                        let v = hhat_bruteforce(&q)?;
                        let certs = certify_value(&q, &v)?;
                        n += certs.len();
                        bad += certs.iter().filter(|c| !c.ok()).count();
                        if k > c0 {
                            // direct check of 2 p^{floor(3k/2)} / C(psi)
                            let bound = 2.0 * (p as f64).powi((3 * k / 2) as i32) / q.psi_modulus() as f64;
                            let r = v.abs() / bound;
                            worst = worst.max(r);
                            bad += usize::from(r > 1.0 + 1e-9);
                            decay += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((
        bad == 0,
        format!("{n} certificates, {bad} violated; conductor decay on {decay} values, max ratio {worst:.3}"),
    ))
}

fn multiplicativity() -> Verdict {
    let d3 = &sc(3, 1, ExtKind::Unramified)?[0];
    let d5 = &ps(5, 1)?[0];
    let (mut bad, mut n) = (0, 0);
    // exhaustive over characters at 3^2 * 5 and over the prime-power parts of m
    let parts = |pows: &[u64]| -> Vec<[u64; 3]> {
        let l = pows.len() as u64;
        all_a(l).map(|v| v.map(|i| pows[i as usize])).collect()
    };
    let (m3, m5) = (parts(&[1, 3, 9]), parts(&[1, 5]));
    for j1 in 0..phi(3, 2)? {
        for j2 in 0..phi(5, 1)? {
            for &m1 in &m3 {
                for &m2 in &m5 {
                    let r = epsilon_multiplicativity(
                        d3,
                        PsiPart { p: 3, k: 2, j: j1 },
                        d5,
                        PsiPart { p: 5, k: 1, j: j2 },
                        &MSplit { m1, m2 },
                    )?;
                    bad += usize::from(!r.agrees(1e-8));
                    n += 1;
                }
            }
        }
    }
    let exhaustive = n;
    let mut rng = ChaCha8Rng::seed_from_u64(225);
    for _ in 0..120 {
        let (j1, j2) = (rng.gen_range(0..6), rng.gen_range(0..20));
        let m1 = [(); 3].map(|_| [1, 3, 9][rng.gen_range(0..3)]);
        let m2 = [(); 3].map(|_| [1, 5, 25][rng.gen_range(0..3)]);
        let r = epsilon_multiplicativity(
            d3,
            PsiPart { p: 3, k: 2, j: j1 },
            d5,
            PsiPart { p: 5, k: 2, j: j2 },
            &MSplit { m1, m2 },
        )?;
        bad += usize::from(!r.agrees(1e-8));
        n += 1;
    }
    Ok((
        bad == 0,
        format!(
            "{exhaustive} tuples at 45 (exhaustive), {} seeded at 225; {bad} mismatches",
            n - exhaustive
        ),
    ))
}

fn ag_cancellation() -> Verdict {
    let rows = scan_cancellation(&odd_primes(3, 101), SCAN_BUDGET)?;
    let g_max = rows.iter().filter(|r| r.p <= 31).map(|r| r.max_g_ratio).fold(0.0, f64::max);
    let gxi_max = rows.iter().map(|r| r.max_gxi_ratio).fold(0.0, f64::max);
    let fd = FieldPairData::new(5)?;
    let mut naive_err: f64 = 0.0;
    for xi in 1..fd.order() {
        for psi in 1..4 {
            let d = (g_xi_psi(&fd, xi, psi)?.value() - g_xi_psi_naive(&fd, xi, psi)?.value()).norm();
            naive_err = naive_err.max(d);
        }
    }
    let ok = g_max <= G_RATIO_THRESHOLD && gxi_max <= GXI_RATIO_THRESHOLD && naive_err <= 1e-9 * 25.0;
    Ok((
        ok,
        format!(
            "max |g(xi,psi)|/p^2 = {g_max:.5} (p <= 31, frozen {G_RATIO_THRESHOLD}); max |g(xi)|/p^1.5 = {gxi_max:.12} (p <= 101); p = 5 naive vs factored {naive_err:.1e}"
        ),
    ))
}

/// `c' = 1` or the least `c' > 1` prime to `p a1` with `c' = v^{-1} mod c_Q`.
fn cofactor(v: u64, c_q: u64, p: u64, a1: u64) -> Result<u64> {
    let w = inv_mod(v, c_q).ok_or(Error::NotAUnit)?;
    if w == 1 {
        return Ok(1);
    }
    (w..)
        .step_by(c_q as usize)
        .find(|&n| n > 1 && gcd(n, p * a1.max(1)) == 1)
        .ok_or(Error::NotAUnit)
}

fn fourier_round_trip() -> Verdict {
    let (mut bad, mut n) = (0, 0);
    let mut worst: f64 = 0.0;
    for p in [3u64, 5] {
        let descs = [
            sc(p, 1, ExtKind::Unramified)?.remove(0),
            sc(p, 1, ExtKind::Ramified)?.remove(0),
            ps(p, 1)?.remove(0),
        ];
        for d in &descs {
            let c_q = p * p;
            let f = family(d);
            for a in [[1, 1, 1], [2, 1, p], [1, p, 3 * p]] {
                let t = fourier_expand(a, c_q, &f, u64::MAX)?;
                let rec = t.reconstruct();
                for (&v, z) in t.units.iter().zip(&rec) {
                    // G' computed from its definition at modulus c_Q c'
                    let c1 = cofactor(v, c_q, p, a[0])?;
                    let g = g_sum(a.map(|x| x as i128), c_q * c1, &f, u64::MAX)?.g_prime.value();
                    let e = (z - g).norm();
                    worst = worst.max(e);
                    bad += usize::from(e > 1e-8);
                    n += 1;
                }
            }
        }
    }
    Ok((
        bad == 0,
        format!("{n} points at p^2, p in {{3, 5}}, three descriptor kinds; max error {worst:.1e}"),
    ))
}

fn prime_level_identity() -> Verdict {
    let (mut bad, mut n) = (0, 0);
    let mut worst: f64 = 0.0;
    let primes = odd_primes(3, 31);
    for &p in &primes {
        let fd = FieldPairData::new(p)?;
        for pr in admissible_pairs(p, 1, ExtKind::Unramified)? {
            let d = LocalRepDescriptor::supercuspidal(pr.clone());
            let h = hhat_bruteforce(&query(&d, 0, [1, 1, 1], 1)?)?.tilde_value() * (p * p) as f64;
            let rhs = trivial_prime_rhs(&fd, &pr.xi)?.value();
            let e = (h - rhs).norm() / rhs.norm().max(1.0);
            worst = worst.max(e);
            bad += usize::from(e > 1e-8);
            n += 1;
        }
    }
    Ok((
        bad == 0,
        format!(
            "{n} admissible xi over {} primes p <= 31; max relative error {worst:.1e}",
            primes.len()
        ),
    ))
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> Result<Poly> {
    let mut terms = Vec::new();
    for _ in 0..4 {
        let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=deg)).collect();
        if e.iter().sum::<u32>() <= deg {
            terms.push((e, rng.gen_range(-6..=6)));
        }
    }
    terms.push((vec![0; n], rng.gen_range(-6..=6)));
    Poly::from_terms(n, terms)
}

/// `num / (1 + p h)`, a unit denominator.
fn random_ratfn(rng: &mut ChaCha8Rng, p: u64, n: usize) -> Result<RatFn> {
    let num = random_poly(rng, n, 2)?;
    let mut den = random_poly(rng, n, 1)?;
    for t in den.terms.iter_mut() {
        t.1 *= p as i128;
    }
    den.terms.push((vec![0; n], 1));
    RatFn::new(num, den)
}

fn random_problem(rng: &mut ChaCha8Rng, p: u64, n: usize, beta: u32, chars: &[MultChar]) -> Result<StationaryProblem> {
    if beta == 1 {
        // alpha = 0: a quadratic Gauss sum, no characters
        let g = RatFn::poly(random_poly(rng, n, 2)?);
        return StationaryProblem::new(p, n, vec![], vec![], vec![g], vec![rng.gen_range(0..p as i128)]);
    }
    let nf = rng.gen_range(0..=2);
    let ng = rng.gen_range(1..=2);
    let f = (0..nf).map(|_| random_ratfn(rng, p, n)).collect::<Result<_>>()?;
    let chis = (0..nf).map(|_| chars[rng.gen_range(0..chars.len())].clone()).collect();
    let g = (0..ng).map(|_| random_ratfn(rng, p, n)).collect::<Result<_>>()?;
    let a = (0..ng).map(|_| rng.gen_range(0..p.pow(beta) as i128)).collect();
    StationaryProblem::new(p, n, f, chis, g, a)
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

fn stationary_reducers() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let (mut bad, mut n, mut refused) = (0, 0, 0);
    // (alpha, odd): moduli p, p^2, p^3
    let shapes = [(0u32, true), (1, false), (1, true)];
    for p in [3u64, 5, 7] {
        let chars: Vec<Vec<MultChar>> = (1..=3)
            .map(|b| enumerate_chars(Ring::base(p, b)?, |_| true))
            .collect::<Result<_>>()?;
        let mut done = 0;
        while done < 200 {
            let (alpha, odd) = shapes[done % 3];
            let beta = 2 * alpha + u32::from(odd);
            let nvars = if p.pow(beta) <= 125 { rng.gen_range(1..=2) } else { 1 };
            let pr = random_problem(&mut rng, p, nvars, beta, &chars[beta as usize - 1])?;
            let red = if odd {
                reduce_stationary_odd(&pr, alpha)
            } else {
                reduce_stationary_even(&pr, alpha)
            };
            let red = match red {
                Ok(r) => r,
                // the quadratic truncation fails at p = 3, alpha = 1 (cubic log term)
                Err(Error::OutOfValidityRange(_)) if p == 3 && alpha == 1 && odd => {
                    refused += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            bad += usize::from(!exact_eq(&red.exact, &pr.naive(beta)?)?);
            let shift: Vec<u64> = (0..nvars).map(|_| rng.gen_range(0..p)).collect();
            bad += usize::from(!exact_eq(&pr.reduce_shifted(alpha, odd, &shift)?.exact, &red.exact)?);
            done += 1;
            n += 1;
        }
    }
    Ok((
        bad == 0,
        format!("{n} seeded instances (200 per prime) with lift rechecks, {bad} mismatches; {refused} p = 3 odd alpha = 1 draws refused by the validity guard"),
    ))
}

fn exact_mode() -> Verdict {
    let mut cases: Vec<(HhatQuery, bool)> = Vec::new();
    // unramified even closed form at p = 5, k = 2, run ungated
    let d5 = &sc(5, 1, ExtKind::Unramified)?[0];
    for j in [1, 3, 7, 11, 17] {
        cases.push((query(d5, j, [1, 1, 1], 2)?, true));
    }
    // vanishing statements at p = 3
    let u = &sc(3, 1, ExtKind::Unramified)?[0];
    let r = &sc(3, 1, ExtKind::Ramified)?[0];
    let u2 = &sc(3, 2, ExtKind::Unramified)?[0];
    for (d, j, a, k) in [
        (u, 2, [3, 1, 1], 3),
        (u, 5, [1, 9, 1], 3),
        (r, 1, [3, 1, 1], 2),
        (r, 4, [1, 1, 6], 3),
        (u2, 1, [3, 1, 1], 2),
    ] {
        cases.push((query(d, j, a, k)?, false));
    }
    let mut bad = 0;
    for (q, even_form) in &cases {
        let c = hhat_closed_form_with(q, &ClosedFormOptions::ungated())?;
        if !even_form && !c.branch.is_vanishing() {
            return Err(Error::InternalInconsistency(format!("{} is not a vanishing case", q.label())));
        }
        bad += usize::from(c.exact_agrees(&hhat_exact(q)?)? != Some(true));
    }
    Ok((
        bad == 0,
        format!(
            "{} identities in Z[zeta_N] ({} even closed forms at p = 5, rest vanishing at p = 3), {bad} discrepancies",
            cases.len(),
            5
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("closed-form-even", closed_form_even),
        ("closed-form-odd", closed_form_odd),
        ("closed-form-ramified", closed_form_ramified),
        ("vanishing-exhaustive-p3", vanishing_suite),
        ("bound-certificates", bound_certificates),
        ("epsilon-multiplicativity", multiplicativity),
        ("ag-cancellation", ag_cancellation),
        ("fourier-round-trip", fourier_round_trip),
        ("prime-level-identity", prime_level_identity),
        ("stationary-reducers", stationary_reducers),
        ("exact-mode", exact_mode),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {name}: {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
