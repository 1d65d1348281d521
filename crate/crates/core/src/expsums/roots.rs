//! Roots of unity `e(j/n)` in double precision.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `e(j/n)` for all `j < n`.
#[derive(Clone, Debug)]
pub struct RootTable {
    pub n: u64,
    table: Vec<Complex64>,
}

impl RootTable {
    pub fn new(n: u64) -> Self {
        let table = (0..n).map(|j| Self::root(j, n)).collect();
        RootTable { n, table }
    }

    #[inline]
    pub fn get(&self, j: u64) -> Complex64 {
        self.table[(j % self.n) as usize]
    }

    /// `e(j/n)`, reduced to the first octant before calling `sin_cos`.
    pub fn root(j: u64, n: u64) -> Complex64 {
        let j = j % n;
        if j == 0 {
            return Complex64::new(1.0, 0.0);
        }
        // symmetric residue 8j mod 8n picks the octant exactly
        let (num, den) = (j as u128 * 8, n as u128);
        let oct = (num / den) as u64;
        let rem = num % den;
        // angle within octant, in units of 2*pi/8
        let frac = rem as f64 / den as f64;
        let t = TAU / 8.0;
        let (s, c) = match oct {
            0 => (frac * t).sin_cos(),
            1 => {
                let (s, c) = ((1.0 - frac) * t).sin_cos();
                (c, s)
            }
            2 => {
                let (s, c) = (frac * t).sin_cos();
                (c, -s)
            }
            3 => {
                let (s, c) = ((1.0 - frac) * t).sin_cos();
                (s, -c)
            }
            4 => {
                let (s, c) = (frac * t).sin_cos();
                (-s, -c)
            }
            5 => {
                let (s, c) = ((1.0 - frac) * t).sin_cos();
                (-c, -s)
            }
            6 => {
                let (s, c) = (frac * t).sin_cos();
                (-c, s)
            }
            _ => {
                let (s, c) = ((1.0 - frac) * t).sin_cos();
                (-s, c)
            }
        };
        Complex64::new(c, s)
    }
}

/// `e_c(x) = exp(2 pi i x / c)` for a signed numerator.
pub fn e_c(x: i128, c: u64) -> Complex64 {
    RootTable::root(x.rem_euclid(c as i128) as u64, c)
}
