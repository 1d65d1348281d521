use locsums::ag::*;
use locsums::chars::*;
use locsums::error::Error;
use locsums::expsums::kloosterman_classical;
use locsums::expsums::RootTable;
use locsums::hhat::*;
use locsums::kloosterman::LocalRepDescriptor;
use locsums::padic::*;
use num_complex::Complex64;
use proptest::prelude::*;

/// `sum_{Nm t = y} chi(t) e_p(-Tr t)` straight from the ring and a `MultChar`.
fn kl_ns_oracle(ring: &Ring, chi: &MultChar, y: u64) -> Complex64 {
    let p = ring.p;
    let mut s = Complex64::new(0.0, 0.0);
    for c in 0..ring.size() {
        let t = ring.decode(c);
        if ring.norm(t) == y {
            s += chi.eval(t) * RootTable::root((p - ring.trace(t)) % p, p);
        }
    }
    s
}

fn chars_of(fd: &FieldPairData) -> Vec<MultChar> {
    enumerate_chars(fd.ring, |_| true).unwrap()
}

#[test]
fn kl_ns_matches_direct_fiber_sums() {
    for p in [3, 5, 7] {
        let fd = FieldPairData::new(p).unwrap();
        for chi in chars_of(&fd) {
            let j = fd.xi_index(&chi).unwrap();
            for y in 1..p {
                let v = kl_ns(&fd, y, j).unwrap();
                assert!(
                    (v.value() - kl_ns_oracle(&fd.ring, &chi, y)).norm() < 1e-9,
                    "p={p} j={j} y={y}"
                );
            }
        }
    }
}

#[test]
fn kl_ns_trivial_character_is_a_real_fiber_sum() {
    for p in [3, 5, 11, 13] {
        let fd = FieldPairData::new(p).unwrap();
        for y in 1..p {
            let v = kl_ns(&fd, y, 0).unwrap();
            assert_eq!(v.terms, p + 1);
            assert!(v.value().im.abs() < 1e-9);
            let r = &fd.ring;
            let direct: f64 = (0..r.size())
                .map(|c| r.decode(c))
                .filter(|&t| r.norm(t) == y)
                .map(|t| (std::f64::consts::TAU * ((p - r.trace(t)) % p) as f64 / p as f64).cos())
                .sum();
            assert!((v.value().re - direct).abs() < 1e-9);
        }
    }
}

#[test]
fn kl_ns_is_pure_of_weight_one() {
    for p in odd_primes(3, 31) {
        let fd = FieldPairData::new(p).unwrap();
        let b = 2.0 * (p as f64).sqrt() + 1e-9;
        for j in 1..fd.order() {
            for y in 1..p {
                assert!(kl_ns(&fd, y, j).unwrap().abs() <= b, "p={p} j={j} y={y}");
            }
        }
    }
}

#[test]
fn kl_ns_conjugation_symmetry() {
    let fd = FieldPairData::new(7).unwrap();
    for j in 0..fd.order() {
        for y in 1..7 {
            let a = kl_ns(&fd, y, j).unwrap();
            let b = kl_ns(&fd, y, fd.conj_index(j)).unwrap();
            assert!((a.value() - b.value()).norm() < 1e-9);
        }
    }
}

#[test]
fn domain_errors() {
    let fd = FieldPairData::new(5).unwrap();
    assert!(matches!(kl_ns(&fd, 0, 1), Err(Error::DomainError(_))));
    assert!(matches!(g_xi_psi(&fd, 0, 1), Err(Error::DomainError(_))));
    assert!(matches!(g_xi_psi(&fd, 1, 0), Err(Error::DomainError(_))));
    assert!(matches!(g_xi(&fd, 0), Err(Error::DomainError(_))));
    // xi of order 2 is conjugation-fixed
    assert!(!fd.is_regular(12));
    assert!(matches!(g_xi(&fd, 12), Err(Error::DomainError(_))));
    assert!(matches!(FieldPairData::new(2), Err(Error::UnsupportedCharacteristic)));
    assert!(FieldPairData::new(9).is_err());
}

#[test]
fn factored_g_matches_naive_triple_sum() {
    for p in [3, 5, 7] {
        let fd = FieldPairData::new(p).unwrap();
        for j in 1..fd.order() {
            for m in 1..p - 1 {
                let a = g_xi_psi(&fd, j, m).unwrap();
                let b = g_xi_psi_naive(&fd, j, m).unwrap();
                assert!((a.value() - b.value()).norm() < 1e-9, "p={p} j={j} m={m}");
            }
        }
    }
}

#[test]
fn g_conjugate_xi_has_same_size() {
    let fd = FieldPairData::new(11).unwrap();
    for j in 1..fd.order() {
        for m in 1..10 {
            let a = g_xi_psi(&fd, j, m).unwrap().abs();
            let b = g_xi_psi(&fd, fd.conj_index(j), m).unwrap().abs();
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn scan_empty_range() {
    assert!(scan_cancellation(&odd_primes(24, 28), SCAN_BUDGET).unwrap().is_empty());
    let mut buf = Vec::new();
    write_scan_csv(&[], &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "p,max_g_ratio,argmax_xi_label,argmax_psi_label,max_gxi_ratio\n"
    );
}

#[test]
fn scan_p3_row_is_exact() {
    let fd = FieldPairData::new(3).unwrap();
    let mut best: f64 = 0.0;
    for j in 1..8 {
        best = best.max(g_xi_psi_naive(&fd, j, 1).unwrap().abs());
    }
    let row = scan_prime(3, SCAN_BUDGET).unwrap();
    assert!((row.max_g_ratio * 9.0 - best).abs() < 1e-9);
    assert!((row.max_g_ratio - 2.0 / 3.0).abs() < 1e-12);
    let mut gbest: f64 = 0.0;
    for j in (1..8).filter(|&j| fd.is_regular(j)) {
        gbest = gbest.max(g_xi(&fd, j).unwrap().abs());
    }
    assert!((row.max_gxi_ratio * 3f64.powf(1.5) - gbest).abs() < 1e-9);
}

#[test]
fn scan_respects_frozen_thresholds_and_budget() {
    let rows = scan_cancellation(&odd_primes(3, 31), SCAN_BUDGET).unwrap();
    assert_eq!(rows.iter().map(|r| r.p).collect::<Vec<_>>(), odd_primes(3, 31));
    for r in &rows {
        assert!(r.within_thresholds(), "{r:?}");
    }
    assert!(matches!(scan_prime(31, 1000), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn scan_csv_is_deterministic() {
    let ps = odd_primes(3, 13);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_scan_csv(&scan_cancellation(&ps, SCAN_BUDGET).unwrap(), &mut a).unwrap();
    write_scan_csv(&scan_cancellation(&ps, SCAN_BUDGET).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    let s = String::from_utf8(a).unwrap();
    assert_eq!(s.lines().count(), ps.len() + 1);
    assert!(s.lines().nth(1).unwrap().starts_with("3,0.666666666667,xi"));
}

#[test]
fn g_xi_has_square_root_size() {
    for p in [5, 13, 29] {
        let fd = FieldPairData::new(p).unwrap();
        for j in (1..fd.order()).filter(|&j| fd.is_regular(j)) {
            let r = g_xi(&fd, j).unwrap().abs() / (p as f64).powf(1.5);
            assert!(r <= GXI_RATIO_THRESHOLD);
        }
    }
}

#[test]
fn cross_check_with_hhat_at_prime_level() {
    for p in [3, 5, 7, 11] {
        let fd = FieldPairData::new(p).unwrap();
        for pr in admissible_pairs(p, 1, ExtKind::Unramified).unwrap() {
            let rhs = trivial_prime_rhs(&fd, &pr.xi).unwrap().value();
            // and assembled independently from classical Kloosterman sums
            let j = fd.xi_index(&pr.xi).unwrap();
            let mut direct = Complex64::new(0.0, 0.0);
            for y in 1..p {
                direct += kl_ns(&fd, y, j).unwrap().value() * kloosterman_classical(y as i128, 1, p).value();
            }
            direct = direct * p as f64 - tau_xi(&fd, j).unwrap().value();
            assert!((rhs - direct).norm() < 1e-9);
            let d = LocalRepDescriptor::supercuspidal(pr);
            let q = HhatQuery::new(d, psi_from_index(p, 1, 0).unwrap(), [1, 1, 1], 1).unwrap();
            let h = hhat_bruteforce(&q).unwrap().tilde_value() * (p * p) as f64;
            assert!((h - rhs).norm() < 1e-8, "p={p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn factored_matches_naive_sampled(pi in 0usize..3, j in 1u64..10_000, m in 1u64..100) {
        let p = [11u64, 13, 17][pi];
        let fd = FieldPairData::new(p).unwrap();
        let j = 1 + j % (fd.order() - 1);
        let m = 1 + m % (p - 2);
        let a = g_xi_psi(&fd, j, m).unwrap();
        let b = g_xi_psi_naive(&fd, j, m).unwrap();
        prop_assert!((a.value() - b.value()).norm() < 1e-8);
    }

    #[test]
    fn sum_of_kl_ns_is_tau(p in prop::sample::select(vec![3u64, 5, 7, 11]), j in 0u64..10_000) {
        let fd = FieldPairData::new(p).unwrap();
        let j = j % fd.order();
        let s: Complex64 = (1..p).map(|y| kl_ns(&fd, y, j).unwrap().value()).sum();
        prop_assert!((s - tau_xi(&fd, j).unwrap().value()).norm() < 1e-9);
    }
}
