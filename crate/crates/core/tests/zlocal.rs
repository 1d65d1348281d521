use locsums::chars::*;
use locsums::error::Error;
use locsums::hhat::*;
use locsums::kloosterman::*;
use locsums::padic::*;
use locsums::zlocal::*;
use proptest::prelude::*;

const B: u64 = 1 << 32;

fn sc(p: u64, c0: u32, kind: ExtKind) -> LocalRepDescriptor {
    LocalRepDescriptor::supercuspidal(admissible_pairs(p, c0, kind).unwrap().remove(0))
}

fn ps(p: u64, c: u32) -> LocalRepDescriptor {
    let chi = enumerate_chars(Ring::base(p, c).unwrap(), |x| x.conductor() == c)
        .unwrap()
        .remove(0);
    LocalRepDescriptor::principal_series(chi).unwrap()
}

fn fam(ds: &[LocalRepDescriptor]) -> Family {
    ds.iter().map(|d| (d.p, d.clone())).collect()
}

fn close(a: num_complex::Complex64, b: num_complex::Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

#[test]
fn g_vanishes_when_m1_meets_the_outside_modulus() {
    let f = fam(&[sc(3, 1, ExtKind::Unramified)]);
    for (m, c) in [([2, 1, 1], 18), ([4, 5, 7], 18), ([5, 1, 2], 15), ([10, 3, 1], 45)] {
        let g = g_sum(m, c, &f, B).unwrap();
        assert!(g.g.abs() < 1e-9, "m={m:?} c={c}: {}", g.g.abs());
        assert!(g_prime_reduced(m, c, &f, B).unwrap().abs() < 1e-12);
    }
    // m2, m3 sharing a factor with c' do not force vanishing
    assert!(g_sum([1, 2, 2], 18, &f, B).unwrap().g.abs() > 1e-6);
}

#[test]
fn g_prime_reduces_to_the_family_part() {
    let f3 = fam(&[sc(3, 1, ExtKind::Unramified)]);
    let f5 = fam(&[ps(5, 1)]);
    let cases: [(&Family, u64, [i128; 3]); 8] = [
        (&f3, 18, [1, 1, 1]),
        (&f3, 18, [5, 2, 7]),
        (&f3, 18, [1, 0, 3]),
        (&f3, 45, [2, 4, 1]),
        (&f3, 9, [1, 2, 0]),
        (&f3, 2, [1, 1, 1]),
        (&f5, 50, [3, 1, 4]),
        (&f5, 10, [1, 3, 2]),
    ];
    for (f, c, m) in cases {
        let g = g_sum(m, c, f, B).unwrap();
        let r = g_prime_reduced(m, c, f, B).unwrap();
        assert!(
            close(g.g_prime.value(), r.value(), 1e-8),
            "c={c} m={m:?}: {} vs {}",
            g.g_prime.value(),
            r.value()
        );
    }
    // no family prime: G' = 1 when (m1, c) = 1
    assert!(close(
        g_prime_reduced([1, 1, 1], 2, &f3, B).unwrap().value(),
        num_complex::Complex64::new(1.0, 0.0),
        1e-12
    ));
}

#[test]
fn split_modulus_separates_family_primes() {
    let f = fam(&[sc(3, 1, ExtKind::Unramified), ps(5, 1)]);
    assert_eq!(split_modulus(2 * 9 * 25 * 7, &f), (225, 14));
    assert_eq!(split_modulus(7, &f), (1, 7));
}

#[test]
fn zero_frequency_bound_holds_exhaustively() {
    for d in [sc(3, 1, ExtKind::Unramified), sc(3, 1, ExtKind::Ramified)] {
        let f = fam(&[d.clone()]);
        for k in d.vq..=2 {
            let c = 3u64.pow(k);
            for m1 in 0..c as i128 {
                for m2 in 0..c as i128 {
                    let m = [m1, m2, 0];
                    let g = g_sum(m, c, &f, B).unwrap();
                    let bnd = zero_frequency_bound(m, c, &f).unwrap();
                    assert!(
                        g.g.abs() <= bnd * (1.0 + 1e-9) + 1e-12,
                        "{} k={k} m={m:?}: {} > {bnd}",
                        d.label(),
                        g.g.abs()
                    );
                }
            }
        }
    }
    let f = fam(&[sc(3, 1, ExtKind::Unramified)]);
    assert!(matches!(
        zero_frequency_bound([1, 1, 1], 9, &f),
        Err(Error::OutOfValidityRange(_))
    ));
}

#[test]
fn fourier_expansion_round_trips() {
    let descs = [
        sc(3, 1, ExtKind::Unramified),
        sc(3, 1, ExtKind::Ramified),
        ps(3, 1),
        sc(5, 1, ExtKind::Unramified),
        ps(5, 1),
    ];
    for d in &descs {
        let f = fam(&[d.clone()]);
        let c = d.p * d.p;
        for a in [[1, 1, 1], [2, 1, d.p], [0, 1, 1], [d.p, d.p, 1]] {
            let t = fourier_expand(a, c, &f, B).unwrap();
            assert_eq!(t.n_chars() as u64, t.phi());
            let e = t.roundtrip_error();
            assert!(e < 1e-8, "{} a={a:?}: {e}", d.label());
        }
    }
}

#[test]
fn fourier_coefficients_are_hhat() {
    for d in [
        sc(3, 1, ExtKind::Unramified),
        sc(3, 1, ExtKind::Ramified),
        ps(3, 2),
        sc(5, 1, ExtKind::Ramified),
    ] {
        let f = fam(&[d.clone()]);
        for k in 1..=2 {
            let c = d.p.pow(k);
            for a in [[1, 1, 1], [2, 1, 1], [d.p % c, 1, 2]] {
                let t = fourier_expand(a, c, &f, B).unwrap();
                for j in 0..t.phi() {
                    let q = HhatQuery::new(d.clone(), psi_from_index(d.p, k, j).unwrap(), a, k).unwrap();
                    let h = hhat_bruteforce(&q).unwrap().tilde_value();
                    let x = t.coefficient(&[j]).unwrap();
                    assert!(close(x, h, 1e-8), "{} k={k} a={a:?} j={j}: {x} vs {h}", d.label());
                }
            }
        }
    }
    // composite modulus 15 against the direct composite sum
    let (d3, d5) = (sc(3, 1, ExtKind::Unramified), ps(5, 1));
    let f = fam(&[d3, d5]);
    let a = [1, 2, 7];
    let t = fourier_expand(a, 15, &f, B).unwrap();
    assert_eq!(t.parts, vec![(3, 1), (5, 1)]);
    for j1 in 0..2 {
        for j2 in 0..4 {
            let parts = [PsiPart { p: 3, k: 1, j: j1 }, PsiPart { p: 5, k: 1, j: j2 }];
            let h = hhat_composite_bruteforce(&f, &parts, a, B).unwrap().value();
            assert!(close(t.coefficient(&[j1, j2]).unwrap(), h, 1e-8), "j=({j1},{j2})");
        }
    }
    assert!(matches!(t.coefficient(&[0]), Err(Error::InvalidParameter(_))));
    assert!(matches!(fourier_expand(a, 21, &f, B), Err(Error::InvalidParameter(_))));
}

#[test]
fn character_sum_of_coefficients_is_b_at_one() {
    let d = sc(3, 2, ExtKind::Unramified);
    let f = fam(&[d]);
    for a in [[1u64, 1, 1], [4, 2, 7], [3, 1, 1]] {
        let t = fourier_expand(a, 27, &f, B).unwrap();
        let s: num_complex::Complex64 = t.coeffs.iter().sum();
        assert!(close(s, t.b_at(1) * t.phi() as f64, 1e-8));
        // with c' = 1, B(1) is G' itself
        let g = g_prime_reduced(a.map(|x| x as i128), 27, &f, B).unwrap();
        assert!(close(t.b_at(1), g.value(), 1e-8));
        assert_eq!(t.b_at(3), num_complex::Complex64::new(0.0, 0.0));
    }
}

#[test]
fn supercuspidal_trivial_character_lives_at_m_one_above_c0() {
    for d in [
        sc(3, 1, ExtKind::Unramified),
        sc(3, 2, ExtKind::Ramified),
        sc(5, 1, ExtKind::Ramified),
    ] {
        let p = d.p;
        let ds = (p as f64).powf(d.d() as f64 / 2.0);
        for k in d.c0 + 1..=d.c0 + 2 {
            let pk = p.pow(k);
            if pk > 200 {
                continue;
            }
            for a in [[p, 1, 1], [1, p * p % pk, 1], [0, 1, 1], [p, p, p]] {
                let t = hhat_table(&d, k, a, B).unwrap();
                assert!(t.values[0].norm() < 1e-7, "{} k={k} a={a:?}", d.label());
            }
            let h = hhat_table(&d, k, [1, 1, 1], B).unwrap().values[0].norm() / ds;
            assert!(h <= pk as f64 * (1.0 + 1e-9), "{} k={k}: {h}", d.label());
        }
    }
}

#[test]
fn ramified_trivial_character_gap_between_c0_and_2c0() {
    let d = sc(3, 2, ExtKind::Ramified);
    let q = LocalZQuery::new(d.clone(), [1.0; 4], 4, 4).unwrap();
    let prof = zfin_local_norm(&q).unwrap();
    let z = prof.cell(3, 0).unwrap();
    assert!(z.partial < 1e-9, "{}", z.partial);
    assert!(prof.cell(4, 0).unwrap().partial > 1e-6);
    let z0 = z0_local_factor(&q).unwrap();
    assert!(z0.per_k.iter().any(|&(k, t)| k == 3 && t < 1e-9));
}

#[test]
fn local_norm_exact_completion_and_truncation() {
    let d = sc(3, 1, ExtKind::Unramified);
    let full = zfin_local_norm(&LocalZQuery::new(d.clone(), [0.75, 1.0, 1.5, 1.0], 2, 2).unwrap()).unwrap();
    let cut = zfin_local_norm(&LocalZQuery::new(d.clone(), [0.75, 1.0, 1.5, 1.0], 2, 0).unwrap()).unwrap();
    for c in &full.cells {
        assert_eq!(c.tail_bound, 0.0);
        let t = cut.cell(c.k, c.psi).unwrap();
        assert!(t.partial <= c.partial * (1.0 + 1e-12) + 1e-12);
        assert!(c.partial <= t.partial + t.tail_bound + 1e-9, "k={} psi={}", c.k, c.psi);
        assert!((t.partial - t.at_one).abs() < 1e-9);
    }
    // rows are grouped by conductor and cover every character
    let n: u64 = full.rows.iter().filter(|r| r.k == 2).map(|r| r.n_psi).sum();
    assert_eq!(n, 6);
    for r in &full.rows {
        if let Some(s) = r.slack {
            assert!(s <= 1.0 + 1e-6, "k={} beta={}: {s}", r.k, r.beta);
        }
    }
}

#[test]
fn local_norm_matches_direct_sum() {
    // M >= k: sum_{v <= k} with the v = k term carrying the geometric tail
    let d = ps(3, 1);
    let sigma = [0.8, 0.9, 1.2, 1.0];
    let prof = zfin_local_norm(&LocalZQuery::new(d.clone(), sigma, 2, 3).unwrap()).unwrap();
    for j in 0..6 {
        let mut direct = 0.0;
        for v1 in 0..12u32 {
            for v2 in 0..12u32 {
                for v3 in 0..12u32 {
                    let a = [v1, v2, v3].map(|v| if v >= 2 { 0 } else { 3u64.pow(v) });
                    let q = HhatQuery::new(d.clone(), psi_from_index(3, 2, j).unwrap(), a, 2).unwrap();
                    let w: f64 = (0..3).map(|i| 3f64.powf(-([v1, v2, v3][i] as f64) * sigma[i])).product();
                    direct += hhat_bruteforce(&q).unwrap().abs() * w;
                }
            }
        }
        let x = prof.cell(2, j).unwrap().partial;
        assert!((x - direct).abs() < 1e-3 * direct.max(1.0), "j={j}: {x} vs {direct}");
    }
}

#[test]
fn local_query_validation() {
    let d = sc(3, 2, ExtKind::Unramified);
    assert!(matches!(
        LocalZQuery::new(d.clone(), [0.5, 1.0, 1.0, 1.0], 3, 1),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        LocalZQuery::new(d.clone(), [1.0, 1.0, 1.0, 4.5], 3, 1),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        LocalZQuery::new(d.clone(), [1.0; 4], d.vq - 1, 1),
        Err(Error::InvalidParameter(_))
    ));
    let q = LocalZQuery::new(ps(3, 1), [1.0; 4], 2, 1).unwrap();
    assert!(matches!(z0_local_factor(&q), Err(Error::InvalidParameter(_))));
    let q = LocalZQuery::new(d.clone(), [1.0; 4], d.vq, 1).unwrap();
    assert!(z0_local_factor(&q).is_ok());
}

#[test]
fn z0_factor_within_target_for_ramified() {
    for d in [
        sc(3, 1, ExtKind::Ramified),
        sc(3, 2, ExtKind::Ramified),
        sc(5, 1, ExtKind::Ramified),
    ] {
        let k_max = d.vq + 1;
        let q = LocalZQuery::new(d.clone(), [1.0, 1.0, 1.0, 2.0], k_max, k_max).unwrap();
        let z = z0_local_factor(&q).unwrap();
        assert!(z.value > 0.0);
        assert!(z.slack <= 1.0, "{}: {:?}", d.label(), z);
        assert!(z.proof_slack.is_finite());
    }
}

#[test]
fn profile_csv_is_deterministic() {
    let q = LocalZQuery::new(sc(3, 1, ExtKind::Unramified), [1.0; 4], 2, 1).unwrap();
    let render = || {
        let mut out = Vec::new();
        write_profile_csv(&zfin_local_norm(&q).unwrap(), &mut out).unwrap();
        String::from_utf8(out).unwrap()
    };
    let a = render();
    assert_eq!(a, render());
    assert!(a.starts_with("k,beta,sum_abs_hhat,bound,slack\n"));
    let mut out = Vec::new();
    write_profile_csv(
        &ZfinProfile {
            p: 3,
            cells: vec![],
            rows: vec![],
        },
        &mut out,
    )
    .unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "k,beta,sum_abs_hhat,bound,slack\n");
}

#[test]
fn norms_factor_across_two_primes() {
    let (d3, d5) = (sc(3, 1, ExtKind::Unramified), ps(5, 1));
    let q3 = LocalZQuery::new(d3, [1.0; 4], 2, 1).unwrap();
    let q5 = LocalZQuery::new(d5, [1.0; 4], 1, 1).unwrap();
    for j1 in [0, 1, 5] {
        for j2 in [0, 3] {
            let r = zfin_two_prime(&q3, PsiPart { p: 3, k: 2, j: j1 }, &q5, PsiPart { p: 5, k: 1, j: j2 }).unwrap();
            assert!(r.discrepancy() <= 1e-9 * r.product.max(1.0), "{r:?}");
        }
    }
    let p = PsiPart { p: 3, k: 1, j: 0 };
    assert!(matches!(zfin_two_prime(&q3, p, &q3, p), Err(Error::IncompatibleModuli)));
}

#[test]
fn g_sum_budget() {
    let f = fam(&[sc(3, 1, ExtKind::Unramified)]);
    assert!(matches!(g_sum([1, 1, 1], 90, &f, 100), Err(Error::BudgetExceeded { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduction_identity_random_m(m in proptest::array::uniform3(-40i128..40), which in 0usize..2) {
        let f = fam(&[if which == 0 { sc(3, 1, ExtKind::Unramified) } else { sc(3, 1, ExtKind::Ramified) }]);
        let g = g_sum(m, 18, &f, B).unwrap();
        let r = g_prime_reduced(m, 18, &f, B).unwrap();
        prop_assert!(close(g.g_prime.value(), r.value(), 1e-8));
    }

    #[test]
    fn round_trip_random_a(a in proptest::array::uniform3(0u64..27), which in 0usize..2) {
        let d = if which == 0 { sc(3, 2, ExtKind::Unramified) } else { ps(3, 2) };
        let t = fourier_expand(a, 27, &fam(&[d]), B).unwrap();
        prop_assert!(t.roundtrip_error() < 1e-8);
    }
}
