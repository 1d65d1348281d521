use std::collections::{HashMap, HashSet};

use locsums::padic::*;
use proptest::prelude::*;

fn unr(p: u64, k: u32) -> Ring {
    Ring::ext(QuadExtDescriptor::unramified(p).unwrap(), k).unwrap()
}

fn ram(p: u64, u: u64, k: u32) -> Ring {
    Ring::ext(QuadExtDescriptor::ramified(p, u).unwrap(), k).unwrap()
}

#[test]
fn conj_and_norm_examples() {
    // p = 5: least nonresidue is 2, so w = sqrt(2)
    let r = unr(5, 2);
    assert_eq!(r.w2(), 2);
    let x = r.el(3, 1);
    assert_eq!(r.conj(x), r.el(3, -1));
    assert_eq!(r.norm(x), 7);
    let y = QuadExtElement::new(r, 3, 1);
    match quad_ext_arith(&y, None, QuadOp::Norm).unwrap() {
        QuadOpResult::Residue(v) => assert_eq!(v.value, 7),
        _ => panic!(),
    }
}

#[test]
fn ramified_uniformizer() {
    let r = ram(7, 3, 3);
    let pi = r.w();
    assert_eq!(r.trace(pi), 0);
    assert_eq!(r.mul(pi, pi), r.from_int(21));
    assert_eq!(r.norm(pi), r.modulus().reduce(-21));
    assert_eq!(r.val(pi), 1);
    assert_eq!(r.val(r.prime_power(3)), 3);
    assert_eq!(r.val(El::ZERO), 6);
}

#[test]
fn errors() {
    let r = unr(5, 2);
    let s = unr(5, 3);
    let x = QuadExtElement::new(r, 5, 0);
    assert_eq!(quad_ext_arith(&x, None, QuadOp::Inv), Err(locsums::Error::NotAUnit));
    let y = QuadExtElement::new(s, 1, 0);
    assert_eq!(
        quad_ext_arith(&x, Some(&y), QuadOp::Add),
        Err(locsums::Error::IncompatibleRings)
    );
}

#[test]
fn field_identities_exhaustive() {
    for r in [unr(3, 2), unr(5, 1), ram(3, 1, 2), ram(5, 2, 2), Ring::base(7, 2).unwrap()] {
        for x in r.elements() {
            let n = r.norm(x);
            assert_eq!(r.mul(x, r.conj(x)), r.from_int(n as i128));
            if !r.is_base() {
                assert_eq!(r.add(x, r.conj(x)), r.from_int(r.trace(x) as i128));
            }
            if r.is_unit(x) {
                assert_eq!(r.mul(x, r.inv(x).unwrap()), r.from_int(1));
            }
        }
    }
}

#[test]
fn valuation_multiplicative() {
    for r in [unr(3, 3), ram(3, 2, 3), ram(5, 1, 2)] {
        let ek = r.e() * r.k;
        for x in r.elements().step_by(7) {
            for y in r.elements().step_by(11) {
                let v = (r.val(x) + r.val(y)).min(ek);
                assert_eq!(r.val(r.mul(x, y)), v, "{r} {x:?} {y:?}");
            }
        }
    }
}

#[test]
fn norm_fibres_unramified() {
    for (p, k) in [(3u64, 1u32), (3, 2), (3, 3), (5, 1), (5, 2), (5, 3)] {
        let r = unr(p, k);
        let mut fib: HashMap<u64, u64> = HashMap::new();
        for t in r.units() {
            *fib.entry(r.norm(t)).or_default() += 1;
        }
        let m = r.modulus();
        assert_eq!(fib.len() as u64, m.phi());
        let want = p.pow(k - 1) * (p + 1);
        assert!(fib.values().all(|&c| c == want));
    }
}

#[test]
fn trace_images() {
    for (p, k) in [(3u64, 3u32), (5, 3)] {
        for r in [unr(p, k), ram(p, 1, k)] {
            let (e, d) = (r.e(), r.d());
            for n in 0..=e * k {
                let img: HashSet<u64> = r.elements().filter(|&x| r.val(x) >= n).map(|x| r.trace(x)).collect();
                let j = if e == 1 { n } else { (n + d) / 2 };
                let j = j.min(k);
                let want: HashSet<u64> = (0..r.pk()).step_by(p.pow(j) as usize).collect();
                assert_eq!(img, want, "{r} n={n}");
            }
        }
    }
}

#[test]
fn log_examples() {
    let r = Ring::base(5, 3).unwrap();
    assert_eq!(padic_log(&r, r.from_int(1), 1).unwrap(), El::ZERO);
    let a = r.from_int(6);
    let l1 = padic_log(&r, r.mul(a, a), 1).unwrap();
    let l2 = padic_log(&r, a, 1).unwrap();
    assert_eq!(l1, r.add(l2, l2));
    // bijection 1 + 7Z/343 -> 7Z/343
    let r = Ring::base(7, 3).unwrap();
    let img: HashSet<El> = (0..49).map(|y| padic_log(&r, r.from_int(1 + 7 * y), 1).unwrap()).collect();
    assert_eq!(img.len(), 49);
    assert!(img.iter().all(|x| x.a % 7 == 0));
}

#[test]
fn log_errors() {
    let r = ram(3, 1, 3);
    assert_eq!(
        padic_log(&r, r.add(r.from_int(1), r.w()), 1),
        Err(locsums::Error::ConvergenceError)
    );
    let r = Ring::base(5, 2).unwrap();
    assert!(matches!(padic_log(&r, r.from_int(2), 1), Err(locsums::Error::DomainError(_))));
}

#[test]
fn log_homomorphism_and_inverse() {
    for r in [unr(3, 3), ram(3, 2, 3), ram(5, 1, 3), unr(5, 2), Ring::base(3, 4).unwrap()] {
        let i = if r.e() == 2 && r.p == 3 { 2 } else { 1 };
        let u: Vec<El> = r.elements().filter(|&x| r.val(r.sub(x, r.from_int(1))) >= i).collect();
        for (n, &x) in u.iter().enumerate().step_by(3) {
            let lx = padic_log(&r, x, i).unwrap();
            assert!(r.val(lx) >= i);
            assert_eq!(padic_exp(&r, lx).unwrap(), x, "{r} exp(log)");
            let y = u[(n * 7 + 1) % u.len()];
            let ly = padic_log(&r, y, i).unwrap();
            assert_eq!(padic_log(&r, r.mul(x, y), i).unwrap(), r.add(lx, ly));
        }
        let img: HashSet<El> = u.iter().map(|&x| padic_log(&r, x, i).unwrap()).collect();
        assert_eq!(img.len(), u.len(), "{r} log not injective");
    }
}

#[test]
fn unit_group_examples() {
    let g = unit_group_structure(Ring::base(3, 3).unwrap()).unwrap();
    assert_eq!(g.orders, vec![18]);
    let g = unit_group_structure(unr(3, 1)).unwrap();
    assert_eq!(g.orders, vec![8]);
    let g = unit_group_structure(unr(3, 2)).unwrap();
    assert_eq!(g.order, 72);
    assert_eq!(g.orders.iter().product::<u64>(), 72);
    check_bijection(&g);
}

fn check_bijection(g: &UnitGroupStructure) {
    let mut seen = HashSet::new();
    g.for_each_element(|v, x| {
        assert!(g.ring.is_unit(x));
        assert!(seen.insert(x));
        assert_eq!(g.discrete_log(x).unwrap(), v.to_vec());
        assert_eq!(g.exp(v), x);
    });
    assert_eq!(seen.len() as u64, g.order);
    for w in g.orders.windows(2) {
        assert_eq!(w[1] % w[0], 0);
    }
}

#[test]
fn unit_group_bijections() {
    for r in [
        Ring::base(5, 2).unwrap(),
        Ring::base(3, 5).unwrap(),
        unr(3, 3),
        unr(5, 2),
        unr(7, 2),
        ram(3, 1, 2),
        ram(3, 2, 3),
        ram(5, 1, 3),
        ram(7, 3, 2),
    ] {
        let g = unit_group_structure(r).unwrap();
        check_bijection(&g);
    }
    // torsion: zeta_3 lives in Q_3(sqrt(-3)); pi^2 = 3u with u = 2 = -1 mod 3
    let g = unit_group_structure(ram(3, 2, 3)).unwrap();
    assert!(g.rank() >= 2);
}

#[test]
fn discrete_log_round_trip_z25() {
    let g = unit_group_structure(Ring::base(5, 2).unwrap()).unwrap();
    assert_eq!(discrete_log(g.ring.from_int(1), &g).unwrap(), vec![0]);
    assert_eq!(discrete_log(g.gens[0], &g).unwrap(), vec![1]);
    for a in 1..25u64 {
        if a % 5 == 0 {
            assert!(discrete_log(g.ring.from_int(a as i128), &g).is_err());
            continue;
        }
        let x = g.ring.from_int(a as i128);
        assert_eq!(g.exp(&discrete_log(x, &g).unwrap()), x);
    }
}

#[test]
fn budget() {
    let r = unr(5, 3);
    assert!(matches!(
        units::unit_group_structure_with_budget(r, 100),
        Err(locsums::Error::BudgetExceeded { .. })
    ));
}

proptest! {
    #[test]
    fn representative_independence(a in 0i128..10_000, b in 0i128..10_000, c in 0i128..10_000, s in 0i128..50) {
        let r = unr(7, 3);
        let pk = r.pk() as i128;
        let x = r.el(a, b);
        let y = r.el(a + s * pk, b - s * pk);
        prop_assert_eq!(x, y);
        let z = r.el(c, a);
        prop_assert_eq!(r.mul(x, z), r.mul(y, z));
        prop_assert_eq!(r.norm(x), r.norm(y));
    }

    #[test]
    fn ring_laws(a in 0i128..343, b in 0i128..343, c in 0i128..343, d in 0i128..343, ram_u in 1u64..3) {
        for r in [unr(7, 3), ram(7, ram_u, 3)] {
            let x = r.el(a, b);
            let y = r.el(c, d);
            prop_assert_eq!(r.norm(r.mul(x, y)), r.modulus().mul(r.norm(x), r.norm(y)));
            prop_assert_eq!(r.conj(r.mul(x, y)), r.mul(r.conj(x), r.conj(y)));
            prop_assert_eq!(r.trace(r.add(x, y)), r.modulus().add(r.trace(x), r.trace(y)));
        }
    }
}
