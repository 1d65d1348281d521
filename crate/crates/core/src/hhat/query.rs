//! Queries, results and the cyclic structure of `(Z/p^k)^x`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use serde::Serialize;

use crate::chars::MultChar;
use crate::error::{Error, Result};
use crate::expsums::value::{ExpSumValue, PhaseHist};
use crate::kloosterman::{LocalKind, LocalRepDescriptor};
use crate::padic::modulus::vp;
use crate::padic::quad::Ring;
use crate::padic::units::unit_group_structure;

/// Default work budget (elementary loop iterations) for brute-force paths.
pub const DEFAULT_BUDGET: u64 = 4_000_000_000;

/// Discrete logarithms on the cyclic group `(Z/p^k)^x`, against the same
/// generator the character group uses.
#[derive(Debug)]
pub struct CyclicUnits {
    pub p: u64,
    pub k: u32,
    pub pk: u64,
    pub phi: u64,
    /// `log[x]` for units, `u32::MAX` otherwise.
    pub log: Vec<u32>,
    /// `exp[t] = g^t`.
    pub exp: Vec<u64>,
}

static UNITS: Lazy<Mutex<HashMap<(u64, u32), Arc<CyclicUnits>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

impl CyclicUnits {
    pub fn get(p: u64, k: u32) -> Result<Arc<CyclicUnits>> {
        if let Some(c) = UNITS.lock().get(&(p, k)) {
            return Ok(c.clone());
        }
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        let ring = Ring::base(p, k)?;
        let grp = unit_group_structure(ring)?;
        let table = grp.dense_index_table()?;
        let pk = ring.pk();
        let phi = grp.order;
        let mut log = vec![u32::MAX; pk as usize];
        let mut exp = vec![0u64; phi as usize];
        for x in 0..pk {
            let t = table[x as usize];
            if t != u64::MAX {
                log[x as usize] = t as u32;
                exp[t as usize] = x;
            }
        }
        let c = Arc::new(CyclicUnits { p, k, pk, phi, log, exp });
        UNITS.lock().insert((p, k), c.clone());
        Ok(c)
    }

    /// Phase of `psi_j(x)` over `phi`, `None` for non-units.
    #[inline]
    pub fn phase(&self, j: u64, x: u64) -> Option<u64> {
        let l = self.log[(x % self.pk) as usize];
        if l == u32::MAX {
            None
        } else {
            Some((j as u128 * l as u128 % self.phi as u128) as u64)
        }
    }
}

/// Index `j` of `psi` with `psi(g) = e(j/phi)`.
pub fn psi_index(psi: &MultChar) -> Result<u64> {
    let r = psi.ring();
    if !r.is_base() || psi.values.len() != 1 {
        return Err(Error::InvalidParameter("psi must be a character of (Z/p^k)^x".into()));
    }
    Ok(psi.values[0])
}

/// `psi_j` as a `MultChar` on `(Z/p^k)^x`.
pub fn psi_from_index(p: u64, k: u32, j: u64) -> Result<MultChar> {
    MultChar::new(unit_group_structure(Ring::base(p, k)?)?, vec![j])
}

/// `hat H(psi, a1, a2, a3)` at `p^k`.
#[derive(Clone, Debug)]
pub struct HhatQuery {
    pub desc: LocalRepDescriptor,
    pub psi: MultChar,
    /// Residues modulo `p^k`.
    pub a: [u64; 3],
    pub k: u32,
    pub budget: u64,
}

impl HhatQuery {
    pub fn new(desc: LocalRepDescriptor, psi: MultChar, a: [u64; 3], k: u32) -> Result<Self> {
        let p = desc.p;
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let r = psi.ring();
        if r != Ring::base(p, k)? {
            return Err(Error::IncompatibleModuli);
        }
        let pk = r.pk();
        Ok(HhatQuery {
            desc,
            psi,
            a: [a[0] % pk, a[1] % pk, a[2] % pk],
            k,
            budget: DEFAULT_BUDGET,
        })
    }

    /// Same query with `a = (1, 1, 1)`.
    pub fn unit(desc: LocalRepDescriptor, psi: MultChar, k: u32) -> Result<Self> {
        Self::new(desc, psi, [1, 1, 1], k)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn p(&self) -> u64 {
        self.desc.p
    }

    pub fn pk(&self) -> u64 {
        self.p().pow(self.k)
    }

    pub fn psi_index(&self) -> u64 {
        self.psi.values[0]
    }

    /// `v_p(a_i)`, capped at `k`.
    pub fn valuations(&self) -> [u32; 3] {
        self.a.map(|x| vp(self.p(), x).unwrap_or(self.k).min(self.k))
    }

    pub fn a_is_unit(&self) -> bool {
        self.valuations().iter().all(|&v| v == 0)
    }

    pub fn a_is_one(&self) -> bool {
        self.a == [1, 1, 1]
    }

    /// `C(psi) = p^{c(psi)}`.
    pub fn psi_modulus(&self) -> u64 {
        self.p().pow(self.psi.conductor())
    }

    pub fn label(&self) -> String {
        format!("{} k={} psi={} a={:?}", self.desc.label(), self.k, self.psi_index(), self.a)
    }
}

/// Which evaluation produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    BruteForce,
    /// Supercuspidal, `k >= c0 + 1`, `p | a1 a2 a3`.
    VanishNonUnit,
    UnramEven,
    UnramOdd,
    /// General `a`, unramified, through the full congruence system.
    UnramSystemEven,
    UnramSystemOdd,
    RamEven,
    RamOdd,
    /// Ramified odd `k` with `v(l_psi) = 0`.
    RamOddVanish,
    /// `k = c0 = 1`, `c(psi) = 1`.
    PrimeLevel,
    /// `k = c0 = 1`, `c(psi) = 1`, `p | a1 a2 a3`.
    PrimeLevelVanish,
    /// Principal series with `c(psi) > c0`.
    PsVanish,
    PsReduced,
    /// Trivial `psi`, Gauss and Ramanujan sums.
    TrivialGaussRamanujan,
    /// Trivial `psi`, `k = c0 >= 2`, `p | a` but `p^k` does not divide `a1a2a3`.
    TrivialVanish,
    /// Trivial `psi`, `k = c0 = 1`, `a = 1`.
    TrivialPrimeLevel,
    /// `k = c0 >= 2`, `psi` nontrivial, mismatched valuations.
    DegenerateVanish,
    /// `k` below `v_p(q')`: the Kloosterman sum is zero.
    BelowLevel,
}

impl Branch {
    pub fn tag(&self) -> &'static str {
        match self {
            Branch::BruteForce => "brute-force",
            Branch::VanishNonUnit => "vanish-nonunit-a",
            Branch::UnramEven => "unram-even",
            Branch::UnramOdd => "unram-odd",
            Branch::UnramSystemEven => "unram-system-even",
            Branch::UnramSystemOdd => "unram-system-odd",
            Branch::RamEven => "ram-even",
            Branch::RamOdd => "ram-odd",
            Branch::RamOddVanish => "ram-odd-vanish",
            Branch::PrimeLevel => "prime-level",
            Branch::PrimeLevelVanish => "prime-level-vanish",
            Branch::PsVanish => "ps-vanish",
            Branch::PsReduced => "ps-reduced",
            Branch::TrivialGaussRamanujan => "trivial-gauss-ramanujan",
            Branch::TrivialVanish => "trivial-vanish",
            Branch::TrivialPrimeLevel => "trivial-prime-level",
            Branch::DegenerateVanish => "degenerate-vanish",
            Branch::BelowLevel => "below-level",
        }
    }

    /// Branches asserting an exact zero.
    pub fn is_vanishing(&self) -> bool {
        matches!(
            self,
            Branch::VanishNonUnit
                | Branch::RamOddVanish
                | Branch::PrimeLevelVanish
                | Branch::PsVanish
                | Branch::TrivialVanish
                | Branch::DegenerateVanish
                | Branch::BelowLevel
        )
    }
}

/// A value of `hat H`, stored as `gamma p^{d/2} hat H` so that no
/// unknown root number enters (`gamma = 1`, `d = 0` for principal series).
#[derive(Clone, Debug)]
pub struct HhatValue {
    pub p: u64,
    pub k: u32,
    pub d: u32,
    pub branch: Branch,
    pub tilde: ExpSumValue,
    /// `false` when only `|tilde|` is determined.
    pub phase_known: bool,
    /// Exact phase counts of `tilde.amplitude`, when available.
    pub exact: Option<PhaseHist>,
}

impl HhatValue {
    pub fn zero(q: &HhatQuery, branch: Branch) -> Self {
        HhatValue {
            p: q.p(),
            k: q.k,
            d: q.desc.d(),
            branch,
            tilde: ExpSumValue::zero(),
            phase_known: true,
            exact: Some(PhaseHist::new(1)),
        }
    }

    pub fn tilde_value(&self) -> Complex64 {
        self.tilde.value()
    }

    /// `|hat H|`.
    pub fn abs(&self) -> f64 {
        self.tilde.abs() / (self.p as f64).powf(self.d as f64 / 2.0)
    }

    /// Rounding bound on `|hat H|`.
    pub fn abs_error(&self) -> f64 {
        self.tilde.value_error() / (self.p as f64).powf(self.d as f64 / 2.0)
    }

    /// Agreement of `tilde` values, in modulus only if either phase is unknown.
    pub fn agrees(&self, o: &HhatValue, rel: f64) -> bool {
        let scale = self.tilde.abs().max(o.tilde.abs()).max(1.0);
        let slack = self.tilde.value_error() + o.tilde.value_error() + rel * scale;
        if self.phase_known && o.phase_known {
            (self.tilde_value() - o.tilde_value()).norm() <= slack
        } else {
            (self.tilde.abs() - o.tilde.abs()).abs() <= slack
        }
    }

    /// Compares with the exact `p^{2k} tilde` of [`hhat_exact`](super::hhat_exact)
    /// in `Z[zeta_N]`; `None` when this value carries no phase counts.
    pub fn exact_agrees(&self, brute: &PhaseHist) -> Result<Option<bool>> {
        let Some(h) = &self.exact else {
            return Ok(None);
        };
        let pk2 = (self.p as u128).pow(2 * self.k);
        let num = pk2 * self.tilde.scale_num;
        if num % self.tilde.scale_den != 0 {
            return Ok(None);
        }
        let m = (num / self.tilde.scale_den) as i128;
        let n = num_integer::lcm(h.n, brute.n);
        let a = h.lift(n).to_cyclotomic()?.scale(m);
        let b = brute.lift(n).to_cyclotomic()?;
        Ok(Some(a.sub(&b)?.is_zero()))
    }

    pub fn is_zero(&self) -> bool {
        self.tilde.abs() <= self.tilde.value_error() + 1e-9 * (self.p as f64).powf(self.k as f64 / 2.0)
    }
}

/// The supercuspidal pair or principal-series character of a descriptor.
pub(crate) fn kind_parts(desc: &LocalRepDescriptor) -> (Option<&crate::chars::AdmissiblePair>, Option<&MultChar>) {
    match &desc.kind {
        LocalKind::Supercuspidal(pr) => (Some(pr), None),
        LocalKind::PrincipalSeries(chi) => (None, Some(chi)),
    }
}

pub(crate) fn budget_err(what: &'static str, needed: u64, budget: u64) -> Error {
    Error::BudgetExceeded {
        what,
        needed: needed as u128,
        budget: budget as u128,
    }
}
