use crate::operators::DiscreteOperators;
use crate::sex::{Sex, SexPair};
use crate::{Error, Result};

/// Factored stepping matrix `H1 = I/tau - theta A`.
///
/// Away from the two block-first rows, `H1` is lower bidiagonal with positive
/// diagonal `1/tau + theta/h` and subdiagonal `-theta/h`; the birth kernel
/// only touches the block-first rows, i.e. `H1 = T + U V^T` with `T` lower
/// bidiagonal and `U V^T` of rank two. The factorization stores `T` together
/// with the Woodbury data `Z = T^{-1} U` and the inverse of the 2x2 capacitance
/// `S = I + V^T Z`, so each solve is two bidiagonal sweeps plus a rank-two
/// correction — O(N) per step.
#[derive(Debug, Clone)]
pub struct BorderedSolver {
    n: usize,
    /// Diagonal of `T`, per row.
    diag: Vec<f64>,
    /// Subdiagonal of `T`, per row (zero at the block-first rows).
    sub: Vec<f64>,
    /// Rank-two correction rows: `v[c][j] = -theta * (h_parent(j)/h_c) * m_c(a_j)`.
    v: SexPair<Vec<f64>>,
    /// `Z = T^{-1} U` with `U = [e_{r_m}, e_{r_f}]`.
    z: SexPair<Vec<f64>>,
    /// Inverse capacitance matrix, row-major 2x2.
    s_inv: [f64; 4],
    row0: SexPair<usize>,
}

impl BorderedSolver {
    pub fn factor(ops: &DiscreteOperators, theta: f64, tau: f64) -> Result<BorderedSolver> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid_argument(format!(
                "theta must lie in [0, 1], got {theta}"
            )));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid_argument(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let n = ops.n();
        let grids = ops.grids();
        let row0 = SexPair::new(0usize, ops.n_male());

        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n];
        for sex in Sex::BOTH {
            let h = grids.get(sex).h();
            let start = *row0.get(sex);
            for i in 0..grids.get(sex).n() {
                diag[start + i] = 1.0 / tau + theta / h;
                if i > 0 {
                    sub[start + i] = -theta / h;
                }
            }
        }

        let v = SexPair::new((), ()).try_map::<_, Error>(|child, _| {
            let h_c = grids.get(child).h();
            let mut row = Vec::with_capacity(n);
            for parent in Sex::BOTH {
                let h_p = grids.get(parent).h();
                let m = &ops.b_rows().get(child)[..];
                let seg = match parent {
                    Sex::Male => &m[..ops.n_male()],
                    Sex::Female => &m[ops.n_male()..],
                };
                row.extend(seg.iter().map(|&mv| -theta * (h_p / h_c) * mv));
            }
            Ok(row)
        })?;

        let solve_t = |b: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for i in 0..n {
                let prev = if sub[i] != 0.0 { sub[i] * x[i - 1] } else { 0.0 };
                x[i] = (b[i] - prev) / diag[i];
            }
            x
        };

        let z = row0.map(|&r| {
            let mut e = vec![0.0; n];
            e[r] = 1.0;
            solve_t(&e)
        });

        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let s = [
            1.0 + dot(&v.male, &z.male),
            dot(&v.male, &z.female),
            dot(&v.female, &z.male),
            1.0 + dot(&v.female, &z.female),
        ];
        let det = s[0] * s[3] - s[1] * s[2];
        if !det.is_finite() || det.abs() < 1e-14 * (s[0].abs() + s[3].abs()).max(1.0) {
            return Err(Error::FactorizationFailed { tau, theta });
        }
        let s_inv = [s[3] / det, -s[1] / det, -s[2] / det, s[0] / det];

        Ok(BorderedSolver {
            n,
            diag,
            sub,
            v,
            z,
            s_inv,
            row0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn solve_t(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let prev = if self.sub[i] != 0.0 {
                self.sub[i] * x[i - 1]
            } else {
                0.0
            };
            x[i] = (b[i] - prev) / self.diag[i];
        }
        x
    }

    /// Solves `H1 x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::invalid_argument(format!(
                "right-hand side must have length {}, got {}",
                self.n,
                b.len()
            )));
        }
        let y = self.solve_t(b);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let w = [dot(&self.v.male, &y), dot(&self.v.female, &y)];
        let c = [
            self.s_inv[0] * w[0] + self.s_inv[1] * w[1],
            self.s_inv[2] * w[0] + self.s_inv[3] * w[1],
        ];
        let mut x = y;
        for i in 0..self.n {
            x[i] -= c[0] * self.z.male[i] + c[1] * self.z.female[i];
        }
        Ok(x)
    }

    /// Leading block rows of the solution correspond to these vector indices.
    pub fn block_starts(&self) -> SexPair<usize> {
        self.row0
    }
}

/// Dense row-major `N x N` stepping matrix `I/tau - theta A`; the slow
/// reference route for cross-checking the bordered factorization.
pub fn theta_matrix(ops: &DiscreteOperators, theta: f64, tau: f64) -> Vec<f64> {
    let n = ops.n();
    let a = ops.a_block();
    let mut h1 = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            h1[r * n + c] = -theta * a[r * n + c];
        }
        h1[r * n + r] += 1.0 / tau;
    }
    h1
}

/// LU factorization with partial pivoting of a dense row-major matrix.
///
/// Only used for small cross-check systems and oracle computations in tests;
/// the production path is [`BorderedSolver`].
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(matrix: &[f64], n: usize) -> Result<DenseLu> {
        if matrix.len() != n * n {
            return Err(Error::invalid_argument(format!(
                "matrix must have {} entries, got {}",
                n * n,
                matrix.len()
            )));
        }
        let mut lu = matrix.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::invalid_argument(
                    "matrix is singular to working precision",
                ));
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
        Ok(DenseLu { n, lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::invalid_argument(format!(
                "right-hand side must have length {}, got {}",
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for r in 1..n {
            for c in 0..r {
                x[r] -= self.lu[r * n + c] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in (r + 1)..n {
                x[r] -= self.lu[r * n + c] * x[c];
            }
            x[r] /= self.lu[r * n + r];
        }
        Ok(x)
    }
}
