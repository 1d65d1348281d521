//! Local descriptors and the local sums `H_sigma(m, n; p^k)`.

use std::io::Write;

use serde::Serialize;

use super::fiber::norm_fiber_table;
use crate::chars::{AdmissiblePair, MultChar};
use crate::error::{Error, Result};
use crate::expsums::roots::RootTable;
use crate::expsums::value::{fmt_sig, ExpSumValue, KahanSum, PhaseHist};
use crate::padic::modulus::{inv_mod, mul_mod, reduce_i};
use crate::padic::quad::{ExtKind, Ring};

/// Phase counts are materialized when the denominator is at most this.
const EXACT_DENOM_LIMIT: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub enum LocalKind {
    /// `pi(chi, chi^{-1})` or `St x chi`; `chi` on `(Z/p^j)^x`.
    PrincipalSeries(MultChar),
    Supercuspidal(AdmissiblePair),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rational {
    pub num: u128,
    pub den: u128,
}

impl Rational {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Clone, Debug)]
pub struct LocalRepDescriptor {
    pub kind: LocalKind,
    pub p: u64,
    /// `c(sigma_p)`.
    pub c_sigma: u32,
    pub c0: u32,
    /// `v_p(q')`.
    pub vq: u32,
    /// Diagonal weight `delta_p`.
    pub delta: Rational,
}

impl LocalRepDescriptor {
    pub fn principal_series(chi: MultChar) -> Result<Self> {
        let r = chi.ring();
        if !r.is_base() {
            return Err(Error::InvalidParameter(
                "principal series needs a character of (Z/p^j)^x".into(),
            ));
        }
        if r.p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        let c = chi.conductor();
        if c == 0 {
            return Err(Error::InvalidParameter("chi must be ramified (c(sigma) >= 2)".into()));
        }
        let p = r.p;
        Ok(LocalRepDescriptor {
            kind: LocalKind::PrincipalSeries(chi),
            p,
            c_sigma: 2 * c,
            c0: c,
            vq: c,
            delta: Rational {
                num: (p as u128 + 1) * (p as u128).pow(c),
                den: p as u128 - 1,
            },
        })
    }

    pub fn supercuspidal(pair: AdmissiblePair) -> Self {
        let p = pair.p();
        let c0 = pair.c0;
        let pc = (p as u128).pow(c0);
        let delta = match pair.desc.kind {
            ExtKind::Unramified => Rational { num: pc, den: 1 },
            ExtKind::Ramified => Rational {
                num: (p as u128 + 1) * pc,
                den: 1,
            },
        };
        LocalRepDescriptor {
            p,
            c_sigma: pair.c_pi(),
            c0,
            vq: pair.vq(),
            delta,
            kind: LocalKind::Supercuspidal(pair),
        }
    }

    /// `d_L`, zero for principal series.
    pub fn d(&self) -> u32 {
        match &self.kind {
            LocalKind::PrincipalSeries(_) => 0,
            LocalKind::Supercuspidal(pr) => pr.d(),
        }
    }

    pub fn is_supercuspidal(&self) -> bool {
        matches!(self.kind, LocalKind::Supercuspidal(_))
    }

    pub fn kind_tag(&self) -> &'static str {
        match &self.kind {
            LocalKind::PrincipalSeries(_) => "ps",
            LocalKind::Supercuspidal(pr) => match pr.desc.kind {
                ExtKind::Unramified => "sc-unram",
                ExtKind::Ramified => "sc-ram",
            },
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            LocalKind::PrincipalSeries(chi) => format!("ps p={} chi={}", self.p, chi.label_json()),
            LocalKind::Supercuspidal(pr) => pr.label(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalInvariants {
    pub e: u32,
    pub d: u32,
    pub c_pi: u32,
    /// `c(xi)` or `c(chi)`.
    pub c_xi: u32,
    pub c0: u32,
    pub vq: u32,
    pub delta: Rational,
}

/// Principal series report `e = 1`, `d = 0`, `c_xi = c(chi)`.
pub fn local_invariants(desc: &LocalRepDescriptor) -> LocalInvariants {
    let (e, d, c_xi) = match &desc.kind {
        LocalKind::PrincipalSeries(chi) => (1, 0, chi.conductor()),
        LocalKind::Supercuspidal(pr) => (pr.e(), pr.d(), pr.c_xi()),
    };
    LocalInvariants {
        e,
        d,
        c_pi: desc.c_sigma,
        c_xi,
        c0: desc.c0,
        vq: desc.vq,
        delta: desc.delta,
    }
}

/// A Kloosterman value with the `gamma`-bar and `p^{-d/2}` factors of each
/// supercuspidal prime left out.
///
/// The true sum is `prod(gamma_p bar) * d_scale^{-1/2} * value`.
#[derive(Clone, Debug)]
pub struct NormalizedKloosterman {
    pub m: i128,
    pub n: i128,
    pub modulus: u64,
    pub value: ExpSumValue,
    pub exact: Option<PhaseHist>,
    /// Primes whose `gamma` factor is suppressed.
    pub gamma_primes: Vec<u64>,
    /// `prod p^{d_p}` over suppressed primes.
    pub d_scale: u64,
}

impl NormalizedKloosterman {
    pub fn zero(m: i128, n: i128, modulus: u64) -> Self {
        NormalizedKloosterman {
            m,
            n,
            modulus,
            value: ExpSumValue::zero(),
            exact: Some(PhaseHist::new(1)),
            gamma_primes: Vec::new(),
            d_scale: 1,
        }
    }

    /// `|H| = |value| / sqrt(d_scale)`.
    pub fn h_abs(&self) -> f64 {
        self.value.abs() / (self.d_scale as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(h) => h.counts.iter().all(|&c| c == 0) || h.total_terms() == 0,
            None => self.value.is_zero(1e-9),
        }
    }

    /// Exact equality when both carry phase counts, else within `tol`.
    pub fn agrees(&self, o: &Self, tol: f64) -> bool {
        if let (Some(a), Some(b)) = (&self.exact, &o.exact) {
            let n = num_integer::lcm(a.n, b.n);
            if let (Ok(x), Ok(y)) = (a.lift(n).to_cyclotomic(), b.lift(n).to_cyclotomic()) {
                return x.sub(&y).map(|z| z.is_zero()).unwrap_or(false);
            }
        }
        self.value.approx_eq(&o.value, tol)
    }
}

fn from_hist(m: i128, n: i128, modulus: u64, h: PhaseHist) -> NormalizedKloosterman {
    NormalizedKloosterman {
        m,
        n,
        modulus,
        value: h.to_value(),
        exact: Some(h),
        gamma_primes: Vec::new(),
        d_scale: 1,
    }
}

/// `H_sigma(m, n; p^k)` (normalized as described on the result type).
pub fn h_local(desc: &LocalRepDescriptor, m: i128, n: i128, k: u32) -> Result<NormalizedKloosterman> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let p = desc.p;
    let pk = p
        .checked_pow(k)
        .ok_or_else(|| Error::InvalidParameter("p^k overflows".into()))?;
    let (mr, nr) = (reduce_i(m, pk), reduce_i(n, pk));
    if mr % p == 0 || nr % p == 0 || k < desc.vq {
        let mut z = NormalizedKloosterman::zero(m, n, pk);
        if let LocalKind::Supercuspidal(pr) = &desc.kind {
            z.gamma_primes.push(p);
            z.d_scale = p.pow(pr.d());
        }
        return Ok(z);
    }
    match &desc.kind {
        LocalKind::PrincipalSeries(chi) => Ok(principal_series_sum(chi, mr, nr, k, m, n)),
        LocalKind::Supercuspidal(pr) => {
            let table = norm_fiber_table(pr, k)?;
            let nu = mul_mod(mr, nr, pk);
            let (value, exact) = match table.get_exact(nu) {
                Some(h) => (h.to_value(), Some(h.clone())),
                None => (table.get(nu), None),
            };
            Ok(NormalizedKloosterman {
                m,
                n,
                modulus: pk,
                value,
                exact,
                gamma_primes: vec![p],
                d_scale: p.pow(pr.d()),
            })
        }
    }
}

fn principal_series_sum(chi: &MultChar, mr: u64, nr: u64, k: u32, m: i128, n: i128) -> NormalizedKloosterman {
    let p = chi.ring().p;
    let ring = Ring::base(p, k).expect("valid modulus");
    let pk = ring.pk();
    let ex = chi.exponent();
    let big = num_integer::lcm(pk, ex);
    let (fx, fa) = (big / ex, big / pk);
    let ph = |x: u64| chi.phase_from(&ring, ring.from_int(x as i128)).expect("unit");
    // chi(m) chi-bar(n)
    let front = (ph(mr) + ex - ph(nr)) % ex;
    let term = |t: u64| -> u64 {
        let tb = inv_mod(t, pk).expect("unit");
        let add = (mul_mod(t, mr, pk) + mul_mod(tb, nr, pk)) % pk;
        ((front + 2 * ph(t)) % ex * fx + add * fa) % big
    };
    let units = (1..pk).filter(|t| t % p != 0);
    if big <= EXACT_DENOM_LIMIT {
        let mut h = PhaseHist::new(big);
        for t in units {
            h.add(term(t), 1);
        }
        from_hist(m, n, pk, h)
    } else {
        let mut acc = KahanSum::new();
        for t in units {
            acc.add(RootTable::root(term(t), big));
        }
        NormalizedKloosterman {
            m,
            n,
            modulus: pk,
            value: acc.finish(),
            exact: None,
            gamma_primes: Vec::new(),
            d_scale: 1,
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    p: u64,
    k: u32,
    kind: &'a str,
    m: u64,
    n: u64,
    re: String,
    im: String,
    abs: String,
}

/// Dump every `(m, n) mod p^k` value of `H~` as CSV.
pub fn write_table_csv<W: Write>(desc: &LocalRepDescriptor, k: u32, out: W) -> Result<()> {
    let pk = desc.p.pow(k);
    let mut w = csv::Writer::from_writer(out);
    for m in 0..pk {
        for n in 0..pk {
            let h = h_local(desc, m as i128, n as i128, k)?;
            let z = h.value.value();
            w.serialize(CsvRow {
                p: desc.p,
                k,
                kind: desc.kind_tag(),
                m,
                n,
                re: fmt_sig(z.re),
                im: fmt_sig(z.im),
                abs: fmt_sig(z.norm()),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
