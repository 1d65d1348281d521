//! Assembly of `H(m, n; c)` over the prime factorization of `c`.

use std::collections::BTreeMap;

use super::local::{h_local, LocalRepDescriptor, NormalizedKloosterman};
use crate::error::{Error, Result};
use crate::expsums::classical::kloosterman_hist;
use crate::padic::modulus::{factorize, inv_mod, mul_mod, reduce_i};

/// Local data at finitely many primes; all other primes are unramified.
pub type Family = BTreeMap<u64, LocalRepDescriptor>;

/// Largest phase denominator kept exact through the product.
const EXACT_PRODUCT_LIMIT: u64 = 1 << 16;

/// `H(m, n; c) = prod_p H(m cbar_p, n cbar_p; p^{v_p(c)})` with `c_p = c / p^{v_p(c)}`.
pub fn h_crt(family: &Family, m: i128, n: i128, c: u64) -> Result<NormalizedKloosterman> {
    if c == 0 {
        return Err(Error::InvalidParameter("c must be positive".into()));
    }
    let mut acc = NormalizedKloosterman::zero(m, n, c);
    acc.value = crate::expsums::value::ExpSumValue::exact_int(1);
    let mut one = crate::expsums::value::PhaseHist::new(1);
    one.add(0, 1);
    acc.exact = Some(one);
    for (p, j) in factorize(c) {
        let pj = p.pow(j);
        let rest = c / pj;
        let rb = inv_mod(rest % pj, pj).expect("coprime cofactor");
        let ml = mul_mod(reduce_i(m, pj), rb, pj) as i128;
        let nl = mul_mod(reduce_i(n, pj), rb, pj) as i128;
        let local = match family.get(&p) {
            Some(d) => h_local(d, ml, nl, j)?,
            None => {
                let h = kloosterman_hist(ml, nl, pj);
                NormalizedKloosterman {
                    m: ml,
                    n: nl,
                    modulus: pj,
                    value: h.to_value(),
                    exact: Some(h),
                    gamma_primes: Vec::new(),
                    d_scale: 1,
                }
            }
        };
        acc = combine(acc, &local);
    }
    acc.m = m;
    acc.n = n;
    acc.modulus = c;
    Ok(acc)
}

fn combine(a: NormalizedKloosterman, b: &NormalizedKloosterman) -> NormalizedKloosterman {
    let mut value = a.value;
    value.amplitude *= b.value.amplitude;
    value.error = a.value.error * b.value.abs().max(1.0) + b.value.error * a.value.abs().max(1.0);
    value.terms = a.value.terms.saturating_mul(b.value.terms);
    let exact = match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => {
            let n = num_integer::lcm(x.n, y.n);
            (n <= EXACT_PRODUCT_LIMIT).then(|| x.lift(n).mul(&y.lift(n)))
        }
        _ => None,
    };
    if let Some(h) = &exact {
        value = h.to_value();
    }
    let mut gamma_primes = a.gamma_primes;
    gamma_primes.extend(&b.gamma_primes);
    NormalizedKloosterman {
        m: a.m,
        n: a.n,
        modulus: a.modulus,
        value,
        exact,
        gamma_primes,
        d_scale: a.d_scale * b.d_scale,
    }
}
