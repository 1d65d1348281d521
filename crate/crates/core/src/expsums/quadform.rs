//! Quadratic forms over `F_p` and the sums `G_p(Q, L) = sum_t e_p(t M t^T + L t)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::roots::RootTable;
use super::value::{ExpSumValue, KahanSum, EPS};
use crate::error::{Error, Result};
use crate::padic::modulus::{inv_mod, is_prime, legendre};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticFormFp {
    pub p: u64,
    /// Symmetric, `Q[t] = t M t^T`.
    pub m: Vec<Vec<u64>>,
    pub l: Vec<u64>,
}

/// `P M P^T = diag(d)` with `P` invertible.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub d: Vec<u64>,
    pub p_mat: Vec<Vec<u64>>,
}

impl QuadraticFormFp {
    pub fn new(p: u64, m: Vec<Vec<i64>>, l: Vec<i64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        let n = m.len();
        if m.iter().any(|r| r.len() != n) || l.len() != n {
            return Err(Error::InvalidParameter("dimension mismatch".into()));
        }
        let red = |x: i64| x.rem_euclid(p as i64) as u64;
        let mm: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|&x| red(x)).collect()).collect();
        for i in 0..n {
            for j in 0..n {
                if mm[i][j] != mm[j][i] {
                    return Err(Error::InvalidParameter("matrix is not symmetric".into()));
                }
            }
        }
        Ok(QuadraticFormFp {
            p,
            m: mm,
            l: l.iter().map(|&x| red(x)).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn eval(&self, t: &[u64]) -> u64 {
        let p = self.p;
        let n = self.dim();
        let mut s = 0u64;
        for i in 0..n {
            for j in 0..n {
                s = (s + self.m[i][j] * t[i] % p * t[j]) % p;
            }
            s = (s + self.l[i] * t[i]) % p;
        }
        s
    }

    /// Basis of the radical `ker M`.
    pub fn radical(&self) -> Vec<Vec<u64>> {
        kernel(&self.m, self.p)
    }

    pub fn rank(&self) -> usize {
        self.dim() - self.radical().len()
    }

    pub fn linear_vanishes_on_radical(&self) -> bool {
        let p = self.p;
        self.radical()
            .iter()
            .all(|v| v.iter().zip(&self.l).map(|(a, b)| a * b % p).sum::<u64>() % p == 0)
    }

    /// Symmetric elimination over `F_p`, `p` odd.
    pub fn diagonalize(&self) -> Result<Diagonalization> {
        let p = self.p;
        if p == 2 {
            return Err(Error::UnsupportedCharacteristic);
        }
        let n = self.dim();
        let mut a = self.m.clone();
        let mut pm: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| u64::from(i == j)).collect()).collect();
        // row op r_i += c r_j on both a (rows and columns) and P (rows)
        let add_row = |a: &mut Vec<Vec<u64>>, pm: &mut Vec<Vec<u64>>, i: usize, j: usize, c: u64| {
            for col in 0..n {
                a[i][col] = (a[i][col] + c * a[j][col]) % p;
                pm[i][col] = (pm[i][col] + c * pm[j][col]) % p;
            }
            for row in 0..n {
                a[row][i] = (a[row][i] + c * a[row][j]) % p;
            }
        };
        let swap = |a: &mut Vec<Vec<u64>>, pm: &mut Vec<Vec<u64>>, i: usize, j: usize| {
            a.swap(i, j);
            pm.swap(i, j);
            for row in a.iter_mut() {
                row.swap(i, j);
            }
        };
        for t in 0..n {
            if a[t][t] == 0 {
                if let Some(s) = (t + 1..n).find(|&s| a[s][s] != 0) {
                    swap(&mut a, &mut pm, t, s);
                } else if let Some(s) = (t + 1..n).find(|&s| a[t][s] != 0) {
                    // diag becomes 2 a[t][s]
                    add_row(&mut a, &mut pm, t, s, 1);
                } else if let Some((i, j)) = (t + 1..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .find(|&(i, j)| a[i][j] != 0)
                {
                    swap(&mut a, &mut pm, t, i);
                    add_row(&mut a, &mut pm, t, j, 1);
                }
            }
            if a[t][t] == 0 {
                continue;
            }
            let inv = inv_mod(a[t][t], p).expect("nonzero mod p");
            for s in t + 1..n {
                if a[s][t] != 0 {
                    let c = (p - a[s][t]) * inv % p;
                    add_row(&mut a, &mut pm, s, t, c);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && a[i][j] != 0 {
                    return Err(Error::InternalInconsistency("diagonalization failed".into()));
                }
            }
        }
        Ok(Diagonalization {
            d: (0..n).map(|i| a[i][i]).collect(),
            p_mat: pm,
        })
    }

    /// Discriminant of the nondegenerate part, as a Legendre symbol.
    pub fn discriminant_symbol(&self) -> Result<i32> {
        let dg = self.diagonalize()?;
        Ok(dg
            .d
            .iter()
            .filter(|&&x| x != 0)
            .map(|&x| legendre(x as i64, self.p))
            .product())
    }
}

/// Kernel of a square matrix over `F_p`.
pub fn kernel(m: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = m.len();
    let mut a: Vec<Vec<u64>> = m.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(r) = (row..n).find(|&r| a[r][col] % p != 0) else {
            continue;
        };
        a.swap(row, r);
        let inv = inv_mod(a[row][col], p).expect("nonzero");
        for c in 0..n {
            a[row][c] = a[row][c] * inv % p;
        }
        for r2 in 0..n {
            if r2 != row && a[r2][col] != 0 {
                let f = a[r2][col];
                for c in 0..n {
                    a[r2][c] = (a[r2][c] + (p - f) * a[row][c]) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u64; n];
            v[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - a[r][f]) % p;
            }
            v
        })
        .collect()
}

/// `eps_p = 1` or `i` according to `p mod 4`.
pub fn eps_p(p: u64) -> Complex64 {
    if p % 4 == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// `G_p(Q, L)` in closed form via diagonalization.
pub fn quad_gauss(q: &QuadraticFormFp) -> Result<ExpSumValue> {
    let p = q.p;
    if p == 2 {
        return Err(Error::UnsupportedCharacteristic);
    }
    let n = q.dim();
    let dg = q.diagonalize()?;
    // t = P^T s  =>  L t = (P L) s
    let lp: Vec<u64> = (0..n)
        .map(|i| (0..n).map(|j| dg.p_mat[i][j] * q.l[j] % p).sum::<u64>() % p)
        .collect();
    let mut sign = 1i32;
    let mut rank = 0u32;
    let mut phase = 0u64;
    let mut p_pow = 0u32;
    for (&d, &l) in dg.d.iter().zip(&lp) {
        if d == 0 {
            if l != 0 {
                return Ok(ExpSumValue::zero());
            }
            p_pow += 2;
            continue;
        }
        rank += 1;
        p_pow += 1;
        sign *= legendre(d as i64, p);
        // e_p(-l^2 / (4 d))
        let inv4d = inv_mod(4 * d % p, p).expect("unit");
        phase = (phase + (p - l * l % p) % p * inv4d) % p;
    }
    let eps = eps_p(p).powu(rank);
    let mag = (p as f64).powf(p_pow as f64 / 2.0);
    let z = eps * RootTable::root(phase, p) * (sign as f64) * mag;
    Ok(ExpSumValue::from_complex(z, p.pow(n as u32), 8.0 * EPS * mag))
}

/// Direct summation over `F_p^n`.
pub fn quad_gauss_brute(q: &QuadraticFormFp) -> ExpSumValue {
    let p = q.p;
    let n = q.dim();
    let roots = RootTable::new(p);
    let mut acc = KahanSum::new();
    let mut t = vec![0u64; n];
    loop {
        acc.add(roots.get(q.eval(&t)));
        let mut i = 0;
        loop {
            if i == n {
                return acc.finish();
            }
            t[i] += 1;
            if t[i] < p {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}
