use locsums::chars::{enumerate_chars, MultChar};
use locsums::expsums::quadform::{eps_p, kernel};
use locsums::expsums::rho::rho_u64;
use locsums::expsums::*;
use locsums::padic::modulus::{legendre, ResidueInt};
use locsums::padic::{units, Modulus, Ring};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-9
}

#[test]
fn kloosterman_examples() {
    for p in [3u64, 5, 7, 11] {
        assert!(close(kloosterman_classical(1, 0, p).value(), Complex64::new(-1.0, 0.0)));
        let v = kloosterman_classical(p as i128, 0, p * p).value();
        assert!(close(v, Complex64::new(-(p as f64), 0.0)));
    }
    assert!(close(kloosterman_classical(1, 1, 3).value(), Complex64::new(-1.0, 0.0)));
    for c in [7u64, 12, 25, 27] {
        for m in 0..6 {
            for n in 0..6 {
                let a = kloosterman_classical(m, n, c);
                let b = kloosterman_classical(n, m, c);
                assert!(close(a.value(), b.value()));
                assert!(a.value().im.abs() < 1e-9);
            }
        }
    }
}

#[test]
fn weil_bound_small_primes() {
    let ps: Vec<u64> = (3..=97).filter(|&p| locsums::padic::modulus::is_prime(p)).collect();
    for p in ps {
        let bound = 2.0 * (p as f64).sqrt();
        for m in 1..p {
            for n in 1..p {
                let s = kloosterman_classical(m as i128, n as i128, p);
                assert!(s.abs() <= bound + 1e-9, "S({m},{n};{p}) = {}", s.abs());
            }
        }
    }
}

#[test]
fn ramanujan_closed_form() {
    for (p, k) in [(3u64, 1u32), (3, 3), (5, 2), (7, 2)] {
        let pk = p.pow(k);
        let phi = Modulus::new(p, k).unwrap().phi() as f64;
        for j in 0..=k + 1 {
            let v = ramanujan(p.pow(j) as i128, pk).value().re;
            let want = if j >= k {
                phi
            } else if j == k - 1 {
                -(p.pow(k - 1) as f64)
            } else {
                0.0
            };
            assert!((v - want).abs() < 1e-9, "p={p} k={k} j={j}");
        }
    }
}

#[test]
fn gauss_sums_have_root_modulus() {
    for (p, k) in [(5u64, 2u32), (7, 1), (3, 3)] {
        let r = Ring::base(p, k).unwrap();
        for chi in enumerate_chars(r, |c| c.conductor() == k).unwrap() {
            let v = gauss_sum_mult(&chi, 1).unwrap();
            assert!((v.abs() - (p.pow(k) as f64).sqrt()).abs() < 1e-9);
        }
    }
}

#[test]
fn sum_carrier_budgets() {
    let v = kloosterman_classical(3, 7, 10_007);
    assert!(v.amplitude.norm() <= v.terms as f64 + v.error);
    assert!(v.error <= 1e-9 * v.terms as f64);
    let mut k = KahanSum::new();
    for j in 0..100_000u64 {
        k.add(RootTable::root(j, 100_000));
    }
    let v = k.finish();
    assert!(v.value().norm() < 1e-9);
    assert!(v.error <= 1e-9 * v.terms as f64);
}

#[test]
fn cyclotomic_exact_mode() {
    for n in [1u64, 2, 3, 4, 6, 12, 72, 100, 105] {
        let phi = locsums::expsums::cyclo::cyclotomic_poly(n);
        assert_eq!(phi.len() as u64 - 1, locsums::expsums::cyclo::euler_phi(n));
        let mut h = PhaseHist::new(n);
        for j in 0..n {
            h.add(j, 1);
        }
        let z = h.to_cyclotomic().unwrap();
        assert_eq!(z.is_zero(), n > 1);
    }
    // zeta_3 + zeta_3^2 = -1 inside Z[zeta_12]
    let a = Cyclotomic::root(12, 4)
        .unwrap()
        .add(&Cyclotomic::root(12, 8).unwrap())
        .unwrap();
    assert_eq!(a, Cyclotomic::from_int(12, -1).unwrap());
    let b = Cyclotomic::root(3, 1).unwrap().lift(12).unwrap();
    assert_eq!(b, Cyclotomic::root(12, 4).unwrap());
    // Gauss sum squared: g^2 = (-1/p) p
    let p = 7u64;
    let mut h = PhaseHist::new(p);
    for x in 0..p {
        h.add(x * x % p, 1);
    }
    let g = h.to_cyclotomic().unwrap();
    assert_eq!(g.mul(&g).unwrap(), Cyclotomic::from_int(7, -7).unwrap());
    assert!(close(g.to_complex(), Complex64::new(0.0, 7f64.sqrt())));
    assert!(Cyclotomic::zero(1009).is_err());
}

#[test]
fn quad_gauss_examples() {
    for p in [5u64, 13, 17] {
        let q = QuadraticFormFp::new(p, vec![vec![1]], vec![0]).unwrap();
        assert!(close(quad_gauss(&q).unwrap().value(), Complex64::new((p as f64).sqrt(), 0.0)));
    }
    let q = QuadraticFormFp::new(7, vec![vec![0, 0], vec![0, 0]], vec![3, 0]).unwrap();
    assert!(quad_gauss(&q).unwrap().is_zero(1e-12));
    let q = QuadraticFormFp::new(2, vec![vec![1]], vec![0]).unwrap();
    assert_eq!(quad_gauss(&q), Err(locsums::Error::UnsupportedCharacteristic));
}

#[test]
fn m3_matrix_radical() {
    for p in [5u64, 7, 11, 13, 101] {
        for na in [1i64, 2, 3, -1] {
            let m = vec![
                vec![0, 1, 1, -2, 0],
                vec![1, 0, 1, -2, 0],
                vec![1, 1, 0, -2, 0],
                vec![-2, -2, -2, 6, 0],
                vec![0, 0, 0, 0, -2 * na],
            ];
            let q = QuadraticFormFp::new(p, m, vec![0; 5]).unwrap();
            assert_eq!(q.rank(), 4);
            let rad = q.radical();
            assert_eq!(rad, vec![vec![1, 1, 1, 1, 0]]);
        }
    }
}

fn all_symmetric(p: u64, n: usize) -> Vec<Vec<Vec<i64>>> {
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let count = (p as usize).pow(idx.len() as u32);
    (0..count)
        .map(|mut c| {
            let mut m = vec![vec![0i64; n]; n];
            for &(i, j) in &idx {
                let v = (c % p as usize) as i64;
                c /= p as usize;
                m[i][j] = v;
                m[j][i] = v;
            }
            m
        })
        .collect()
}

#[test]
fn quad_gauss_exhaustive_f3_f5() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [3u64, 5] {
        for n in 1..=3usize {
            for m in all_symmetric(p, n) {
                let nl = if p == 3 || n < 3 { (p as usize).pow(n as u32) } else { 3 };
                for li in 0..nl {
                    let l: Vec<i64> = if p == 3 || n < 3 {
                        (0..n)
                            .map(|i| ((li / (p as usize).pow(i as u32)) % p as usize) as i64)
                            .collect()
                    } else {
                        (0..n).map(|_| rng.gen_range(0..p as i64)).collect()
                    };
                    let q = QuadraticFormFp::new(p, m.clone(), l).unwrap();
                    let closed = quad_gauss(&q).unwrap();
                    let brute = quad_gauss_brute(&q);
                    assert!(closed.approx_eq(&brute, 1e-9), "{q:?}");
                    // rank / radical law
                    let r = q.rank();
                    if q.linear_vanishes_on_radical() {
                        let want = (p as f64).powf(n as f64 - r as f64 / 2.0);
                        assert!((brute.abs() - want).abs() < 1e-9);
                    } else {
                        assert!(brute.abs() < 1e-9);
                    }
                    // kernel agrees with enumeration
                    let kern = kernel(&q.m, p).len();
                    let mut zeros = 0;
                    locsums::expsums::stationary::for_each_point(n, p, |t| {
                        let ok = (0..n).all(|i| (0..n).map(|j| q.m[i][j] * t[j]).sum::<u64>() % p == 0);
                        zeros += ok as usize;
                    });
                    assert_eq!(zeros, (p as usize).pow(kern as u32));
                }
            }
        }
    }
}

#[test]
fn quad_gauss_nondegenerate_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [3u64, 5, 7, 11, 13] {
        for n in 1..=4usize {
            for _ in 0..20 {
                let mut m = vec![vec![0i64; n]; n];
                for i in 0..n {
                    for j in i..n {
                        let v = rng.gen_range(0..p as i64);
                        m[i][j] = v;
                        m[j][i] = v;
                    }
                }
                let q = QuadraticFormFp::new(p, m.clone(), vec![0; n]).unwrap();
                if q.rank() != n {
                    continue;
                }
                let det = det_mod(&q.m, p);
                let want = eps_p(p).powu(n as u32) * (p as f64).powf(n as f64 / 2.0) * legendre(det as i64, p) as f64;
                assert!(close(quad_gauss(&q).unwrap().value(), want));
            }
        }
    }
}

fn det_mod(m: &[Vec<u64>], p: u64) -> u64 {
    let n = m.len();
    let mut a: Vec<Vec<u64>> = m.to_vec();
    let mut det = 1u64;
    for c in 0..n {
        let Some(r) = (c..n).find(|&r| a[r][c] != 0) else {
            return 0;
        };
        if r != c {
            a.swap(r, c);
            det = (p - det) % p;
        }
        det = det * a[c][c] % p;
        let inv = locsums::padic::modulus::inv_mod(a[c][c], p).unwrap();
        for r2 in c + 1..n {
            let f = a[r2][c] * inv % p;
            for j in c..n {
                a[r2][j] = (a[r2][j] + (p - f) * a[c][j]) % p;
            }
        }
    }
    det
}

#[test]
fn rho_examples_and_recursion() {
    for p in [3u64, 5, 7, 11] {
        let one = ResidueInt::new(1, Modulus::new(p, 1).unwrap());
        assert_eq!(rho(&one, 1).unwrap(), 2);
        let nr = locsums::padic::modulus::least_nonresidue(p);
        let r = ResidueInt::new(nr as i128, Modulus::new(p, 1).unwrap());
        assert_eq!(rho(&r, 1).unwrap(), 0);
    }
    let four = ResidueInt::new(4, Modulus::new(3, 3).unwrap());
    assert_eq!(rho(&four, 3).unwrap(), 2);
    for p in [3u64, 5, 7] {
        for m in 0..=4u32 {
            for d in 0..p.pow(m).max(1) {
                assert_eq!(rho_u64(p, d, m), rho_brute(p, d, m), "p={p} m={m} d={d}");
            }
        }
    }
}

fn x(n: usize, i: usize) -> Poly {
    Poly::var(n, i)
}

fn lin(n: usize, terms: &[(&[u32], i128)]) -> Poly {
    Poly::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c)).collect()).unwrap()
}

fn trivial_char(p: u64, k: u32) -> MultChar {
    MultChar::trivial(units::unit_group_structure(Ring::base(p, k).unwrap()).unwrap())
}

fn exact_eq(a: &PhaseHist, b: &PhaseHist) -> bool {
    let n = num_integer::lcm(a.n, b.n);
    let d = a.lift(n);
    let mut e = b.lift(n);
    for c in e.counts.iter_mut() {
        *c = -*c;
    }
    let mut s = d;
    s.merge(&e);
    if locsums::expsums::cyclo::euler_phi(n) <= locsums::expsums::cyclo::MAX_DEGREE {
        s.to_cyclotomic().unwrap().is_zero()
    } else {
        s.to_value().is_zero(1e-6)
    }
}

#[test]
fn even_reducer_trivial_cases() {
    for (p, alpha) in [(3u64, 1u32), (5, 1), (3, 2)] {
        let b = 2 * alpha;
        let f = vec![RatFn::poly(x(1, 0))];
        let g = vec![RatFn::poly(x(1, 0))];
        // chi trivial, theta = e_{p^beta}
        let pr = StationaryProblem::new(p, 1, f.clone(), vec![trivial_char(p, b)], g, vec![1]).unwrap();
        let red = reduce_stationary_even(&pr, alpha).unwrap();
        assert!(red.critical.is_empty());
        assert!(red.value.is_zero(1e-9));
        assert!(exact_eq(&red.exact, &pr.naive(b).unwrap()));
        // theta trivial, chi primitive: l/t = 0 has no solution
        let chi = enumerate_chars(Ring::base(p, b).unwrap(), |c| c.conductor() == b).unwrap()[0].clone();
        let pr = StationaryProblem::new(p, 1, f, vec![chi], vec![RatFn::poly(Poly::constant(1, 0))], vec![1]).unwrap();
        let red = reduce_stationary_even(&pr, alpha).unwrap();
        assert!(red.critical.is_empty());
        assert!(exact_eq(&red.exact, &pr.naive(b).unwrap()));
    }
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> Poly {
    let mut terms = Vec::new();
    for _ in 0..4 {
        let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=deg)).collect();
        if e.iter().sum::<u32>() <= deg {
            terms.push((e, rng.gen_range(-6..=6)));
        }
    }
    terms.push((vec![0; n], rng.gen_range(-6..=6)));
    Poly::from_terms(n, terms).unwrap()
}

/// `f` with a unit-valued denominator `1 + p h`.
fn random_ratfn(rng: &mut ChaCha8Rng, p: u64, n: usize) -> RatFn {
    let num = random_poly(rng, n, 2);
    let mut den = random_poly(rng, n, 1);
    for t in den.terms.iter_mut() {
        t.1 *= p as i128;
    }
    den.terms.push((vec![0; n], 1));
    RatFn::new(num, den).unwrap()
}

fn random_problem(rng: &mut ChaCha8Rng, p: u64, n: usize, beta: u32) -> StationaryProblem {
    let chars = enumerate_chars(Ring::base(p, beta).unwrap(), |_| true).unwrap();
    let nf = rng.gen_range(0..=2);
    let ng = rng.gen_range(1..=2);
    let f = (0..nf).map(|_| random_ratfn(rng, p, n)).collect();
    let chis = (0..nf).map(|_| chars[rng.gen_range(0..chars.len())].clone()).collect();
    let g = (0..ng).map(|_| random_ratfn(rng, p, n)).collect();
    let a = (0..ng).map(|_| rng.gen_range(0..p.pow(beta) as i128)).collect();
    StationaryProblem::new(p, n, f, chis, g, a).unwrap()
}

#[test]
fn even_reducer_random_p5() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..25 {
        let pr = random_problem(&mut rng, 5, 2, 2);
        let red = reduce_stationary_even(&pr, 1).unwrap();
        let naive = pr.naive(2).unwrap();
        assert!(exact_eq(&red.exact, &naive), "{pr:?}");
        assert!(red.value.approx_eq(&naive.to_value(), 1e-9));
    }
    for p in [3u64, 7] {
        for _ in 0..10 {
            let pr = random_problem(&mut rng, p, 1, 4);
            let red = reduce_stationary_even(&pr, 2).unwrap();
            assert!(exact_eq(&red.exact, &pr.naive(4).unwrap()), "{pr:?}");
        }
    }
}

#[test]
fn odd_reducer_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (p, n, alpha) in [(5u64, 2usize, 1u32), (7, 1, 1), (5, 1, 2), (3, 1, 2)] {
        for _ in 0..12 {
            let beta = 2 * alpha + 1;
            let pr = random_problem(&mut rng, p, n, beta);
            let red = reduce_stationary_odd(&pr, alpha).unwrap();
            let naive = pr.naive(beta).unwrap();
            assert!(exact_eq(&red.exact, &naive), "p={p} {pr:?}");
            assert!(red.value.approx_eq(&naive.to_value(), 1e-7), "closed form p={p}");
            // lift independence
            let shift: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
            let sh = pr.reduce_shifted(alpha, true, &shift).unwrap();
            assert!(exact_eq(&sh.exact, &red.exact));
        }
    }
}

#[test]
fn odd_reducer_p3_alpha1() {
    // f = t, g = t^2 with trivial chi: matches the 27-term sum
    let pr = StationaryProblem::new(
        3,
        1,
        vec![RatFn::poly(x(1, 0))],
        vec![trivial_char(3, 3)],
        vec![RatFn::poly(lin(1, &[(&[2], 1)]))],
        vec![1],
    )
    .unwrap();
    let red = reduce_stationary_odd(&pr, 1).unwrap();
    assert!(exact_eq(&red.exact, &pr.naive(3).unwrap()));
    let sh = pr.reduce_shifted(1, true, &[1]).unwrap();
    assert!(exact_eq(&sh.exact, &red.exact));
}

#[test]
fn odd_reducer_alpha0_is_gauss_sum() {
    for p in [3u64, 5, 7, 11] {
        for (a2, a1) in [(1i128, 0i128), (2, 1), (3, 5)] {
            let g = lin(1, &[(&[2], a2), (&[1], a1)]);
            let pr = StationaryProblem::new(p, 1, vec![], vec![], vec![RatFn::poly(g)], vec![1]).unwrap();
            let red = reduce_stationary_odd(&pr, 0).unwrap();
            let q = QuadraticFormFp::new(p, vec![vec![a2 as i64]], vec![a1 as i64]).unwrap();
            assert!(red.value.approx_eq(&quad_gauss(&q).unwrap(), 1e-9));
            assert!(exact_eq(&red.exact, &pr.naive(1).unwrap()));
        }
    }
}

#[test]
fn odd_reducer_p3_alpha1_cubic_term() {
    // f = g = t with chi primitive mod 27: the naive sum is a Gauss sum,
    // and the quadratic truncation gets its phase wrong for some chi
    let chars = enumerate_chars(Ring::base(3, 3).unwrap(), |c| c.conductor() == 3).unwrap();
    let mut wrong = 0;
    for chi in &chars {
        let pr = StationaryProblem::new(
            3,
            1,
            vec![RatFn::poly(x(1, 0))],
            vec![chi.clone()],
            vec![RatFn::poly(x(1, 0))],
            vec![1],
        )
        .unwrap();
        assert!(matches!(
            reduce_stationary_odd(&pr, 1),
            Err(locsums::Error::OutOfValidityRange(_))
        ));
        let red = pr.reduce_odd_unchecked(1).unwrap();
        let naive = pr.naive(3).unwrap();
        assert!((red.value.abs() - naive.to_value().abs()).abs() < 1e-9);
        wrong += usize::from(!exact_eq(&red.exact, &naive));
    }
    assert!(wrong > 0);
    // alpha = 2 at p = 3 is fine
    let chars = enumerate_chars(Ring::base(3, 5).unwrap(), |c| c.conductor() >= 4).unwrap();
    for chi in chars.iter().step_by(7) {
        let pr = StationaryProblem::new(
            3,
            1,
            vec![RatFn::poly(x(1, 0))],
            vec![chi.clone()],
            vec![RatFn::poly(x(1, 0))],
            vec![1],
        )
        .unwrap();
        let red = reduce_stationary_odd(&pr, 2).unwrap();
        assert!(exact_eq(&red.exact, &pr.naive(5).unwrap()));
    }
}
