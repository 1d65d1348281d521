//! Character sums over `F_p` and `F_{p^2}`: `Kl_ns`, `g(xi, psi)`, `g(xi)`,
//! and exhaustive scans of their square-root cancellation.
//!
//! `F_{p^2}` is the `k = 1` quotient of the unramified ring. Characters are
//! indexed against a fixed generator `g` of `F_{p^2}^x`: `xi_j(g^i) =
//! e(j i / (p^2 - 1))`, and `psi_m(h^s) = e(m s / (p - 1))` with `h = Nm(g)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chars::MultChar;
use crate::error::{Error, Result};
use crate::expsums::roots::RootTable;
use crate::expsums::value::{fmt_sig, ExpSumValue, KahanSum, EPS};
use crate::padic::modulus::{factorize, inv_mod, is_prime, mul_mod};
use crate::padic::quad::{El, QuadExtDescriptor, Ring};

/// Frozen regression threshold for `max |g(xi, psi)| / p^2`. Recorded
/// maxima over odd `p <= 101` increase towards 2 from below (1.99747 at
/// `p = 31`, 1.99998 at `p = 83`).
pub const G_RATIO_THRESHOLD: f64 = 2.0;
/// Frozen regression threshold for `max |g(xi)| / p^{3/2}`. Every regular
/// `xi` with `p <= 101` gives `|g(xi)| = p^{3/2}` to rounding.
pub const GXI_RATIO_THRESHOLD: f64 = 1.0 + 1e-9;

/// Default per-prime term budget of [`scan_cancellation`].
pub const SCAN_BUDGET: u64 = 1 << 30;

/// Discrete-log tables for `F_p` inside `F_{p^2}`.
#[derive(Clone, Debug)]
pub struct FieldPairData {
    pub p: u64,
    pub ring: Ring,
    /// `g^i` for `i < p^2 - 1`.
    pub gen: El,
    pow: Vec<El>,
    /// ring code -> `i` with `g^i = x`, `u32::MAX` at zero.
    log: Vec<u32>,
    /// `Tr(g^i)`.
    tr: Vec<u64>,
    /// `h^s` for `s < p - 1`.
    fpow: Vec<u64>,
    /// `y -> s` with `h^s = y`, `u32::MAX` at zero.
    flog: Vec<u32>,
}

impl FieldPairData {
    pub fn new(p: u64) -> Result<Self> {
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        let ring = Ring::ext(QuadExtDescriptor::unramified(p)?, 1)?;
        let n = p * p - 1;
        let primes: Vec<u64> = factorize(n).into_iter().map(|(r, _)| r).collect();
        let gen = (1..ring.size())
            .map(|c| ring.decode(c))
            .find(|&x| primes.iter().all(|&r| ring.pow(x, n / r) != El::ONE))
            .ok_or_else(|| Error::InternalInconsistency("F_p^2 has no generator".into()))?;
        let mut pow = Vec::with_capacity(n as usize);
        let mut log = vec![u32::MAX; ring.size() as usize];
        let mut x = El::ONE;
        for i in 0..n {
            pow.push(x);
            log[ring.code(x) as usize] = i as u32;
            x = ring.mul(x, gen);
        }
        let tr = pow.iter().map(|&x| ring.trace(x)).collect();
        let h = ring.norm(gen);
        let mut fpow = Vec::with_capacity(p as usize - 1);
        let mut flog = vec![u32::MAX; p as usize];
        let mut y = 1;
        for s in 0..p - 1 {
            fpow.push(y);
            flog[y as usize] = s as u32;
            y = mul_mod(y, h, p);
        }
        let fd = FieldPairData {
            p,
            ring,
            gen,
            pow,
            log,
            tr,
            fpow,
            flog,
        };
        // Nm(g^i) = h^i
        for (i, &x) in fd.pow.iter().enumerate() {
            if ring.norm(x) != fd.fpow[i % (p as usize - 1)] {
                return Err(Error::InternalInconsistency("norm does not match h-power".into()));
            }
        }
        Ok(fd)
    }

    /// `p^2 - 1`.
    pub fn order(&self) -> u64 {
        self.p * self.p - 1
    }

    pub fn xi_label(&self, j: u64) -> String {
        format!("xi{j}/{}", self.order())
    }

    pub fn psi_label(&self, m: u64) -> String {
        format!("psi{m}/{}", self.p - 1)
    }

    /// Index of `xi o conj`; conjugation is the `p`-power map.
    pub fn conj_index(&self, j: u64) -> u64 {
        mul_mod(j, self.p, self.order())
    }

    /// `xi_j != xi_j o conj`.
    pub fn is_regular(&self, j: u64) -> bool {
        (j * (self.p - 1)) % self.order() != 0
    }

    /// `j` with `chi = xi_j` for a character of `(O_L/p)^x`.
    pub fn xi_index(&self, chi: &MultChar) -> Result<u64> {
        if chi.ring() != self.ring {
            return Err(Error::IncompatibleRings);
        }
        let ph = chi.phase(self.gen).ok_or(Error::NotAUnit)?;
        Ok(ph * (self.order() / chi.exponent()))
    }

    /// `xi_j(t)` as a phase over `p^2 - 1`, `None` at zero.
    pub fn xi_phase(&self, j: u64, t: El) -> Option<u64> {
        match self.log[self.ring.code(t) as usize] {
            u32::MAX => None,
            i => Some(mul_mod(j, i as u64, self.order())),
        }
    }

    /// `psi_m(y)` as a phase over `p - 1`, `None` at zero.
    pub fn psi_phase(&self, m: u64, y: u64) -> Option<u64> {
        match self.flog[(y % self.p) as usize] {
            u32::MAX => None,
            s => Some(mul_mod(m, s as u64, self.p - 1)),
        }
    }

    fn check_xi(&self, j: u64, need_nontrivial: bool) -> Result<()> {
        if j >= self.order() {
            return Err(Error::InvalidParameter(format!("xi index {j} >= {}", self.order())));
        }
        if need_nontrivial && j == 0 {
            return Err(Error::DomainError("xi must be nontrivial".into()));
        }
        Ok(())
    }

    /// `Kl_ns(h^s)` for every `s`, with the running error bound.
    fn kl_ns_table(&self, j: u64, xr: &RootTable, pr: &RootTable) -> (Vec<Complex64>, f64) {
        let p = self.p as usize;
        let mut out = Vec::with_capacity(p - 1);
        let n = self.order();
        let step = mul_mod(j, self.p - 1, n);
        for s in 0..p - 1 {
            // p + 1 terms: plain summation is within the error budget
            let mut acc = Complex64::new(0.0, 0.0);
            let mut ph = mul_mod(j, s as u64, n);
            for i in (s..self.pow.len()).step_by(p - 1) {
                acc += xr.get(ph) * pr.get((self.p - self.tr[i]) % self.p);
                ph += step;
                if ph >= n {
                    ph -= n;
                }
            }
            out.push(acc);
        }
        (out, 4.0 * EPS * (self.p + 1) as f64)
    }

    /// `S(w, 1; p)` indexed by `w`.
    fn kl2_table(&self, pr: &RootTable) -> Vec<Complex64> {
        let p = self.p;
        let inv: Vec<u64> = (0..p).map(|x| inv_mod(x, p).unwrap_or(0)).collect();
        (0..p)
            .map(|w| (1..p).map(|x| pr.get((x + mul_mod(w, inv[x as usize], p)) % p)).sum())
            .collect()
    }

    /// `A_m(h^s) = sum_{w != 0} psi_m(h^s / w - 1) S(w, 1; p)` for every `s`.
    fn a_table(&self, m: u64, kl2: &[Complex64], fr: &RootTable) -> Vec<Complex64> {
        let p = self.p;
        let inv: Vec<u64> = (0..p).map(|x| inv_mod(x, p).unwrap_or(0)).collect();
        self.fpow
            .iter()
            .map(|&y| {
                let mut acc = Complex64::new(0.0, 0.0);
                for w in 1..p {
                    let z = (mul_mod(y, inv[w as usize], p) + p - 1) % p;
                    if let Some(ph) = self.psi_phase(m, z) {
                        acc += fr.get(ph) * kl2[w as usize];
                    }
                }
                acc
            })
            .collect()
    }
}

/// `Kl_ns(y) = sum_{Nm t = y} xi(t) e_p(-Tr t)`.
pub fn kl_ns(fd: &FieldPairData, y: u64, xi: u64) -> Result<ExpSumValue> {
    let p = fd.p;
    fd.check_xi(xi, false)?;
    if y % p == 0 {
        return Err(Error::DomainError("Kl_ns needs y != 0".into()));
    }
    let s = fd.flog[(y % p) as usize] as usize;
    let (xr, pr) = (RootTable::new(fd.order()), RootTable::new(p));
    let mut acc = KahanSum::new();
    for i in (s..fd.pow.len()).step_by(p as usize - 1) {
        acc.add(xr.get(mul_mod(xi, i as u64, fd.order())) * pr.get((p - fd.tr[i]) % p));
    }
    Ok(acc.finish())
}

/// `tau(xi) = sum_{t != 0} xi(t) e_p(-Tr t)`.
pub fn tau_xi(fd: &FieldPairData, xi: u64) -> Result<ExpSumValue> {
    fd.check_xi(xi, false)?;
    let (xr, pr) = (RootTable::new(fd.order()), RootTable::new(fd.p));
    let mut acc = KahanSum::new();
    for (i, &t) in fd.tr.iter().enumerate() {
        acc.add(xr.get(mul_mod(xi, i as u64, fd.order())) * pr.get((fd.p - t) % fd.p));
    }
    Ok(acc.finish())
}

fn check_pair(fd: &FieldPairData, xi: u64, psi: u64) -> Result<()> {
    fd.check_xi(xi, true)?;
    if psi >= fd.p - 1 {
        return Err(Error::InvalidParameter(format!("psi index {psi} >= {}", fd.p - 1)));
    }
    if psi == 0 {
        return Err(Error::DomainError("psi must be nontrivial".into()));
    }
    Ok(())
}

fn finish(z: Complex64, terms: u64, magnitude: f64) -> ExpSumValue {
    ExpSumValue::from_complex(z, terms, 16.0 * EPS * terms as f64 * magnitude.max(1.0))
}

/// `g(xi, psi) = sum_y Kl_ns(y) sum_{x2 x3 != 0} psi(y/(x2 x3) - 1) e_p(x2 + x3)`.
pub fn g_xi_psi(fd: &FieldPairData, xi: u64, psi: u64) -> Result<ExpSumValue> {
    check_pair(fd, xi, psi)?;
    let (xr, pr, fr) = (RootTable::new(fd.order()), RootTable::new(fd.p), RootTable::new(fd.p - 1));
    let (kl, _) = fd.kl_ns_table(xi, &xr, &pr);
    let a = fd.a_table(psi, &fd.kl2_table(&pr), &fr);
    let z: Complex64 = kl.iter().zip(&a).map(|(x, y)| x * y).sum();
    Ok(finish(z, fd.p * fd.p * fd.p, 2.0 * fd.p as f64))
}

/// `g(xi, psi)` by the defining sum over `x2, x3 in F_p`, `t in F_{p^2}`.
pub fn g_xi_psi_naive(fd: &FieldPairData, xi: u64, psi: u64) -> Result<ExpSumValue> {
    check_pair(fd, xi, psi)?;
    let p = fd.p;
    let (xr, pr, fr) = (RootTable::new(fd.order()), RootTable::new(p), RootTable::new(p - 1));
    let r = fd.ring;
    let mut acc = KahanSum::new();
    for x2 in 1..p {
        for x3 in 1..p {
            let d = inv_mod(mul_mod(x2, x3, p), p).expect("unit");
            for c in 0..r.size() {
                let t = r.decode(c);
                let (Some(xp), Some(sp)) = (fd.xi_phase(xi, t), fd.psi_phase(psi, (mul_mod(r.norm(t), d, p) + p - 1) % p)) else {
                    continue;
                };
                let add = (p - r.trace(t) + x2 + x3) % p;
                acc.add(xr.get(xp) * fr.get(sp) * pr.get(add));
            }
        }
    }
    Ok(acc.finish())
}

/// `g(xi) = sum_{y != 0} Kl_ns(y) S(y, 1; p)`, for regular `xi`.
pub fn g_xi(fd: &FieldPairData, xi: u64) -> Result<ExpSumValue> {
    fd.check_xi(xi, true)?;
    if !fd.is_regular(xi) {
        return Err(Error::DomainError(format!("{} is fixed by conjugation", fd.xi_label(xi))));
    }
    let (xr, pr) = (RootTable::new(fd.order()), RootTable::new(fd.p));
    let (kl, _) = fd.kl_ns_table(xi, &xr, &pr);
    let kl2 = fd.kl2_table(&pr);
    let z: Complex64 = kl.iter().zip(&fd.fpow).map(|(x, &y)| x * kl2[y as usize]).sum();
    Ok(finish(z, fd.p * fd.p, 2.0 * fd.p as f64))
}

/// `p g(xi) - tau(xi)`, which equals `p^2 hat H~(psi_0, 1, 1, 1)` at
/// `k = c0 = 1` for the unramified pair with character `xi`.
pub fn trivial_prime_rhs(fd: &FieldPairData, xi: &MultChar) -> Result<ExpSumValue> {
    let j = fd.xi_index(xi)?;
    let g = g_xi(fd, j)?;
    let t = tau_xi(fd, j)?;
    let pf = fd.p as f64;
    let z = g.value() * pf - t.value();
    Ok(ExpSumValue::from_complex(
        z,
        g.terms + t.terms,
        g.value_error() * pf + t.value_error(),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: u64,
    /// `max |g(xi, psi)| / p^2` over nontrivial `xi`, `psi`.
    pub max_g_ratio: f64,
    pub argmax_xi: u64,
    pub argmax_psi: u64,
    /// `max |g(xi)| / p^{3/2}` over regular `xi`.
    pub max_gxi_ratio: f64,
    pub argmax_gxi: u64,
}

impl ScanRow {
    pub fn within_thresholds(&self) -> bool {
        self.max_g_ratio <= G_RATIO_THRESHOLD && self.max_gxi_ratio <= GXI_RATIO_THRESHOLD
    }
}

/// Exhaustive maxima for one prime.
pub fn scan_prime(p: u64, budget: u64) -> Result<ScanRow> {
    let need = p.saturating_pow(4);
    if need > budget {
        return Err(Error::BudgetExceeded {
            what: "cancellation scan",
            needed: need as u128,
            budget: budget as u128,
        });
    }
    let fd = FieldPairData::new(p)?;
    let (xr, pr, fr) = (RootTable::new(fd.order()), RootTable::new(p), RootTable::new(p - 1));
    let kl2 = fd.kl2_table(&pr);
    let a: Vec<Vec<Complex64>> = (1..p - 1).map(|m| fd.a_table(m, &kl2, &fr)).collect();
    let pf = p as f64;
    let mut row = ScanRow {
        p,
        max_g_ratio: 0.0,
        argmax_xi: 0,
        argmax_psi: 0,
        max_gxi_ratio: 0.0,
        argmax_gxi: 0,
    };
    for j in 1..fd.order() {
        let (kl, _) = fd.kl_ns_table(j, &xr, &pr);
        for (mi, am) in a.iter().enumerate() {
            let z: Complex64 = kl.iter().zip(am).map(|(x, y)| x * y).sum();
            let r = z.norm() / (pf * pf);
            if r > row.max_g_ratio {
                (row.max_g_ratio, row.argmax_xi, row.argmax_psi) = (r, j, mi as u64 + 1);
            }
        }
        if fd.is_regular(j) {
            let z: Complex64 = kl.iter().zip(&fd.fpow).map(|(x, &y)| x * kl2[y as usize]).sum();
            let r = z.norm() / pf.powf(1.5);
            if r > row.max_gxi_ratio {
                (row.max_gxi_ratio, row.argmax_gxi) = (r, j);
            }
        }
    }
    Ok(row)
}

/// Odd primes in `lo..=hi`.
pub fn odd_primes(lo: u64, hi: u64) -> Vec<u64> {
    (lo.max(3)..=hi).filter(|&p| is_prime(p)).collect()
}

/// One row per prime, in the order given; primes are scanned in parallel.
pub fn scan_cancellation(primes: &[u64], budget: u64) -> Result<Vec<ScanRow>> {
    primes.par_iter().map(|&p| scan_prime(p, budget)).collect()
}

#[derive(Serialize)]
struct CsvRow {
    p: u64,
    max_g_ratio: String,
    argmax_xi_label: String,
    argmax_psi_label: String,
    max_gxi_ratio: String,
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["p", "max_g_ratio", "argmax_xi_label", "argmax_psi_label", "max_gxi_ratio"])?;
    }
    for r in rows {
        let fd_order = r.p * r.p - 1;
        w.serialize(CsvRow {
            p: r.p,
            max_g_ratio: fmt_sig(r.max_g_ratio),
            argmax_xi_label: format!("xi{}/{fd_order}", r.argmax_xi),
            argmax_psi_label: format!("psi{}/{}", r.argmax_psi, r.p - 1),
            max_gxi_ratio: fmt_sig(r.max_gxi_ratio),
        })?;
    }
    w.flush()?;
    Ok(())
}
