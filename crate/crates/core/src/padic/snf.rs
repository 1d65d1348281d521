//! Smith normal form of small integer matrices, tracking right transforms.

/// Result of `P * A * Q = D`; only `Q^{-1}` is kept, which is what basis
/// changes of generators need.
#[derive(Clone, Debug)]
pub struct Snf {
    pub diag: Vec<i128>,
    pub q_inv: Vec<Vec<i128>>,
}

/// Smith normal form of a square matrix `a` (relations as rows).
pub fn smith(mut a: Vec<Vec<i128>>) -> Snf {
    let n = a.len();
    let mut qi: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    for t in 0..n {
        loop {
            // pivot: smallest nonzero |entry| in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if a[i][j] != 0 && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                break;
            };
            a.swap(t, pi);
            if pj != t {
                for row in a.iter_mut() {
                    row.swap(t, pj);
                }
                qi.swap(t, pj);
            }
            let piv = a[t][t];
            let mut clean = true;
            for i in t + 1..n {
                let q = a[i][t] / piv;
                if q != 0 {
                    for j in t..n {
                        a[i][j] -= q * a[t][j];
                    }
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..n {
                let q = a[t][j] / piv;
                if q != 0 {
                    // col_j -= q col_t  <=>  row_t(Q^-1) += q row_j(Q^-1)
                    for row in a.iter_mut() {
                        row[j] -= q * row[t];
                    }
                    for c in 0..n {
                        qi[t][c] += q * qi[j][c];
                    }
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility of the remaining block
            let mut fix = None;
            'outer: for i in t + 1..n {
                for j in t + 1..n {
                    if a[i][j] % piv != 0 {
                        fix = Some(i);
                        break 'outer;
                    }
                }
            }
            match fix {
                Some(i) => {
                    for j in t..n {
                        a[t][j] += a[i][j];
                    }
                }
                None => break,
            }
        }
        if a[t][t] < 0 {
            for row in a.iter_mut() {
                row[t] = -row[t];
            }
            for c in 0..n {
                qi[t][c] = -qi[t][c];
            }
        }
    }
    Snf {
        diag: (0..n).map(|i| a[i][i]).collect(),
        q_inv: qi,
    }
}

/// Solve `m * x = rhs (mod p^k)` for a square system; any solution.
pub fn solve_mod(m: &[Vec<i128>], rhs: &[i128], pk: i128) -> Option<Vec<i128>> {
    let n = m.len();
    // Row-reduce with unimodular row ops mirrored on rhs, columns via SNF.
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|x| x.rem_euclid(pk)).collect()).collect();
    let mut b: Vec<i128> = rhs.iter().map(|x| x.rem_euclid(pk)).collect();
    let mut q: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    for t in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for i in t..n {
            for j in t..n {
                let v = a[i][j].rem_euclid(pk);
                if v != 0 && best.map_or(true, |(bi, bj)| gcd_p(v, pk) < gcd_p(a[bi][bj].rem_euclid(pk), pk)) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { continue };
        a.swap(t, pi);
        b.swap(t, pi);
        if pj != t {
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in q.iter_mut() {
                row.swap(t, pj);
            }
        }
        // pivot has minimal p-valuation: write it as p^v * unit
        let piv = a[t][t].rem_euclid(pk);
        let g = gcd_p(piv, pk);
        let unit = piv / g;
        let uinv = inv_i(unit, pk)?;
        for j in 0..n {
            a[t][j] = (a[t][j] * uinv).rem_euclid(pk);
        }
        b[t] = (b[t] * uinv).rem_euclid(pk);
        for i in 0..n {
            if i != t {
                let f = a[i][t] / g;
                for j in 0..n {
                    a[i][j] = (a[i][j] - f * a[t][j]).rem_euclid(pk);
                }
                b[i] = (b[i] - f * b[t]).rem_euclid(pk);
            }
        }
        for j in t + 1..n {
            let f = a[t][j] / g;
            for row in a.iter_mut() {
                row[j] = (row[j] - f * row[t]).rem_euclid(pk);
            }
            for row in q.iter_mut() {
                row[j] = (row[j] - f * row[t]).rem_euclid(pk);
            }
        }
    }
    let mut z = vec![0i128; n];
    for t in 0..n {
        let d = a[t][t].rem_euclid(pk);
        let r = b[t].rem_euclid(pk);
        if d == 0 {
            if r != 0 {
                return None;
            }
            continue;
        }
        let g = gcd_p(d, pk);
        if r % g != 0 {
            return None;
        }
        let unit = d / g;
        z[t] = ((r / g) * inv_i(unit, pk)?).rem_euclid(pk);
    }
    let mut x = vec![0i128; n];
    for i in 0..n {
        for j in 0..n {
            x[i] = (x[i] + q[i][j] * z[j]).rem_euclid(pk);
        }
    }
    Some(x)
}

fn gcd_p(v: i128, pk: i128) -> i128 {
    num_integer::gcd(v, pk)
}

fn inv_i(a: i128, m: i128) -> Option<i128> {
    crate::padic::modulus::inv_mod(a.rem_euclid(m) as u64, m as u64).map(|x| x as i128)
}
