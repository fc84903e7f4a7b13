use crate::fertility::MaternityModuli;
use crate::grid::AgeGrid;
use crate::sex::{Sex, SexPair};
use crate::{Error, Result};

/// Assembled discrete generator and birth operator.
///
/// Interior vectors are ordered male nodes `1..=N_m` first, then female
/// nodes `1..=N_f` (this ordering is fixed throughout the crate). The
/// generator acts as
///
/// ```text
/// [A u]_{*,1} = -(u_{*,1} - B_* u) / h_*
/// [A u]_{*,i} = -(u_{*,i} - u_{*,i-1}) / h_*,   i >= 2
/// ```
///
/// with `B_* u = sum_parent h_parent sum_i m[*][parent](a_i) u_{parent,i}`
/// the Riemann-sum birth law. `A` is the transport semigroup generator
/// (consistent with `-d/da`); its dense matrix form has `-1/h` on the
/// diagonal and `+1/h` on the subdiagonal away from the first block rows.
#[derive(Debug, Clone)]
pub struct DiscreteOperators {
    grids: SexPair<AgeGrid>,
    maternity: MaternityModuli,
    n_male: usize,
    n_female: usize,
    /// Dense `N x N` matrix, row-major.
    a_block: Vec<f64>,
    /// Raw maternity samples at the interior nodes, one row per child sex.
    b_rows: SexPair<Vec<f64>>,
}

/// One evaluation of the discrete dissipativity inequality
/// `<A u, u> <= omega0 ||u||^2`.
#[derive(Debug, Clone, Copy)]
pub struct DissipativityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `omega0 = max{a_m, a_f, M^2 / 2}` with `M` the lattice sup of the
/// maternity moduli.
pub fn omega0(maternity: &MaternityModuli, grids: &SexPair<AgeGrid>) -> f64 {
    let m = maternity.global_sup();
    grids
        .male
        .a_dag()
        .max(grids.female.a_dag())
        .max(0.5 * m * m)
}

/// Sufficient time-step bound `tau_bar = 1 / (2 theta omega0)` for the
/// stability estimate; only defined for `theta >= 1/2`.
pub fn stability_window(theta: f64, omega0: f64) -> Result<f64> {
    if theta < 0.5 {
        return Err(Error::NotApplicable(format!(
            "stability window is stated for theta in [1/2, 1], got {theta}"
        )));
    }
    if !(omega0 > 0.0) {
        return Err(Error::invalid_argument(format!(
            "omega0 must be positive, got {omega0}"
        )));
    }
    Ok(1.0 / (2.0 * theta * omega0))
}

impl DiscreteOperators {
    pub fn assemble(maternity: MaternityModuli, grids: SexPair<AgeGrid>) -> Result<Self> {
        for child in Sex::BOTH {
            for parent in Sex::BOTH {
                if maternity.get(child, parent).grid() != grids.get(parent) {
                    return Err(Error::invalid_argument(
                        "maternity moduli must be sampled on the parent-sex grids",
                    ));
                }
            }
        }
        let n_male = grids.male.n();
        let n_female = grids.female.n();
        let n = n_male + n_female;

        let b_row = |child: Sex| -> Vec<f64> {
            let mut row = Vec::with_capacity(n);
            for parent in Sex::BOTH {
                let m = maternity.get(child, parent).values();
                row.extend_from_slice(&m[1..]); // interior nodes 1..=N
            }
            row
        };
        let b_rows = SexPair::new(b_row(Sex::Male), b_row(Sex::Female));

        let mut a_block = vec![0.0; n * n];
        let block_start = SexPair::new(0usize, n_male);
        for child in Sex::BOTH {
            let h_c = grids.get(child).h();
            let row0 = *block_start.get(child);
            // dense first row: -1/h on its own first column plus the
            // h-weighted birth kernel over all columns
            a_block[row0 * n + row0] = -1.0 / h_c;
            for parent in Sex::BOTH {
                let h_p = grids.get(parent).h();
                let m = maternity.get(child, parent).values();
                let col0 = *block_start.get(parent);
                for i in 1..=grids.get(parent).n() {
                    a_block[row0 * n + col0 + i - 1] += (h_p / h_c) * m[i];
                }
            }
            // lower bidiagonal transport rows
            for i in 2..=grids.get(child).n() {
                let r = row0 + i - 1;
                a_block[r * n + r] = -1.0 / h_c;
                a_block[r * n + r - 1] = 1.0 / h_c;
            }
        }

        Ok(DiscreteOperators {
            grids,
            maternity,
            n_male,
            n_female,
            a_block,
            b_rows,
        })
    }

    /// Total interior dimension `N = N_m + N_f`.
    pub fn n(&self) -> usize {
        self.n_male + self.n_female
    }

    pub fn n_male(&self) -> usize {
        self.n_male
    }

    pub fn n_female(&self) -> usize {
        self.n_female
    }

    pub fn grids(&self) -> &SexPair<AgeGrid> {
        &self.grids
    }

    pub fn maternity(&self) -> &MaternityModuli {
        &self.maternity
    }

    /// Dense generator matrix, row-major `N x N`.
    pub fn a_block(&self) -> &[f64] {
        &self.a_block
    }

    /// Raw maternity samples per child sex at the interior nodes
    /// (`b_rows[child][j] = m[child][parent(j)](a_j)`, no `h` weight).
    pub fn b_rows(&self) -> &SexPair<Vec<f64>> {
        &self.b_rows
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n() {
            return Err(Error::invalid_argument(format!(
                "interior vector must have length {}, got {}",
                self.n(),
                u.len()
            )));
        }
        Ok(())
    }

    /// Birth law `B_* u` per child sex (h-weighted Riemann sums).
    pub fn apply_birth(&self, u: &[f64]) -> Result<SexPair<f64>> {
        self.check_dim(u)?;
        let h = self.grids.map(|g| g.h());
        let eval = |row: &[f64]| -> f64 {
            let male_part: f64 = row[..self.n_male]
                .iter()
                .zip(&u[..self.n_male])
                .map(|(m, x)| m * x)
                .sum();
            let female_part: f64 = row[self.n_male..]
                .iter()
                .zip(&u[self.n_male..])
                .map(|(m, x)| m * x)
                .sum();
            h.male * male_part + h.female * female_part
        };
        Ok(SexPair::new(eval(&self.b_rows.male), eval(&self.b_rows.female)))
    }

    /// Matrix-free application of the generator via the difference formula.
    pub fn apply_generator(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let births = self.apply_birth(u)?;
        let mut out = vec![0.0; self.n()];
        let block_start = SexPair::new(0usize, self.n_male);
        for sex in Sex::BOTH {
            let h = self.grids.get(sex).h();
            let start = *block_start.get(sex);
            let nn = self.grids.get(sex).n();
            out[start] = -(u[start] - births.get(sex)) / h;
            for i in 1..nn {
                out[start + i] = -(u[start + i] - u[start + i - 1]) / h;
            }
        }
        Ok(out)
    }

    /// Dense matrix-vector product with `a_block` (the slow route, used for
    /// cross-checking the formula application).
    pub fn apply_a_matrix(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let n = self.n();
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.a_block[r * n..(r + 1) * n];
            *o = row.iter().zip(u).map(|(a, x)| a * x).sum();
        }
        Ok(out)
    }

    /// Interior L2 inner product with the per-sex `h` weights.
    pub fn interior_inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let hm = self.grids.male.h();
        let hf = self.grids.female.h();
        let male: f64 = u[..self.n_male]
            .iter()
            .zip(&v[..self.n_male])
            .map(|(a, b)| a * b)
            .sum();
        let female: f64 = u[self.n_male..]
            .iter()
            .zip(&v[self.n_male..])
            .map(|(a, b)| a * b)
            .sum();
        Ok(hm * male + hf * female)
    }

    pub fn interior_norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.interior_inner(u, u)?.sqrt())
    }

    pub fn omega0(&self) -> f64 {
        omega0(&self.maternity, &self.grids)
    }

    /// Evaluates `<A u, u> <= omega0 ||u||^2` with a small relative slack.
    pub fn dissipativity_check(&self, u: &[f64]) -> Result<DissipativityReport> {
        let au = self.apply_generator(u)?;
        let lhs = self.interior_inner(&au, u)?;
        let rhs = self.omega0() * self.interior_inner(u, u)?;
        Ok(DissipativityReport {
            lhs,
            rhs,
            holds: lhs <= rhs + 1e-10 * rhs.abs(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeFunction;
    use rand::{Rng, SeedableRng};

    fn constant_maternity(grids: &SexPair<AgeGrid>, c: f64) -> MaternityModuli {
        let per_child = grids
            .map(|g| LatticeFunction::constant(g.clone(), c).unwrap());
        MaternityModuli::new(SexPair::splat(per_child)).unwrap()
    }

    fn random_maternity(grids: &SexPair<AgeGrid>, rng: &mut impl Rng, max: f64) -> MaternityModuli {
        let mut build = |g: &AgeGrid| {
            LatticeFunction::new(g.clone(), (0..=g.n()).map(|_| rng.gen_range(0.0..max)).collect())
                .unwrap()
        };
        let mm = build(&grids.male);
        let mf = build(&grids.female);
        let fm = build(&grids.male);
        let ff = build(&grids.female);
        MaternityModuli::new(SexPair::new(SexPair::new(mm, mf), SexPair::new(fm, ff))).unwrap()
    }

    #[test]
    fn omega0_examples() {
        let g110 = SexPair::splat(AgeGrid::new(110.0, 4).unwrap());
        let m = constant_maternity(&g110, 0.1);
        assert_eq!(omega0(&m, &g110), 110.0);

        let g1 = SexPair::splat(AgeGrid::new(1.0, 4).unwrap());
        let m3 = constant_maternity(&g1, 3.0);
        assert_eq!(omega0(&m3, &g1), 4.5);

        let g23 = SexPair::new(AgeGrid::new(2.0, 4).unwrap(), AgeGrid::new(3.0, 6).unwrap());
        let z = MaternityModuli::zero(&g23);
        assert_eq!(omega0(&z, &g23), 3.0);
    }

    #[test]
    fn stability_window_examples() {
        assert_eq!(stability_window(0.5, 110.0).unwrap(), 1.0 / 110.0);
        assert_eq!(stability_window(1.0, 4.5).unwrap(), 1.0 / 9.0);
        assert_eq!(stability_window(0.5, 4.5).unwrap(), 2.0 / 9.0);
        assert!(matches!(
            stability_window(0.25, 1.0),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn transport_block_matches_difference_formula() {
        // m == 0, n = 2 per sex, h = 1/2: rows away from births are pure
        // backward differences
        let grids = SexPair::splat(AgeGrid::new(1.0, 2).unwrap());
        let ops = DiscreteOperators::assemble(MaternityModuli::zero(&grids), grids).unwrap();
        let h = 0.5;
        for unit in 0..4 {
            let mut e = vec![0.0; 4];
            e[unit] = 1.0;
            let got = ops.apply_a_matrix(&e).unwrap();
            let want = ops.apply_generator(&e).unwrap();
            assert_eq!(got, want);
        }
        let u = vec![1.0, 2.0, 3.0, 5.0];
        let au = ops.apply_generator(&u).unwrap();
        assert_eq!(au[0], -u[0] / h); // births are zero
        assert_eq!(au[1], -(u[1] - u[0]) / h);
        assert_eq!(au[2], -u[2] / h);
        assert_eq!(au[3], -(u[3] - u[2]) / h);
    }

    #[test]
    fn birth_row_riemann_sum_of_ones() {
        // u == 1, m == 1, a_dag = 1, n = 4 per sex: B_* u = 2 (two unit intervals)
        let grids = SexPair::splat(AgeGrid::new(1.0, 4).unwrap());
        let m = constant_maternity(&grids, 1.0);
        let ops = DiscreteOperators::assemble(m, grids).unwrap();
        let births = ops.apply_birth(&vec![1.0; 8]).unwrap();
        assert!((births.male - 2.0).abs() < 1e-14);
        assert!((births.female - 2.0).abs() < 1e-14);
    }

    #[test]
    fn birth_rows_match_double_sum_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let grids = SexPair::new(AgeGrid::new(1.0, 5).unwrap(), AgeGrid::new(2.0, 7).unwrap());
        let m = random_maternity(&grids, &mut rng, 1.0);
        let ops = DiscreteOperators::assemble(m.clone(), grids.clone()).unwrap();
        let u: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let births = ops.apply_birth(&u).unwrap();
        for child in Sex::BOTH {
            let mut expect = 0.0;
            let mut offset = 0;
            for parent in Sex::BOTH {
                let g = grids.get(parent);
                let vals = m.get(child, parent).values();
                for i in 1..=g.n() {
                    expect += g.h() * vals[i] * u[offset + i - 1];
                }
                offset += g.n();
            }
            let got = *births.get(child);
            assert!((got - expect).abs() <= 1e-13 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn matrix_and_formula_agree_on_random_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let nm = rng.gen_range(2..12);
            let nf = rng.gen_range(2..12);
            let grids = SexPair::new(
                AgeGrid::new(rng.gen_range(0.5..3.0), nm).unwrap(),
                AgeGrid::new(rng.gen_range(0.5..3.0), nf).unwrap(),
            );
            let m = random_maternity(&grids, &mut rng, 1.0);
            let ops = DiscreteOperators::assemble(m, grids).unwrap();
            let u: Vec<f64> = (0..ops.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let via_matrix = ops.apply_a_matrix(&u).unwrap();
            let via_formula = ops.apply_generator(&u).unwrap();
            let scale = via_formula.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in via_matrix.iter().zip(&via_formula) {
                assert!((a - b).abs() <= 1e-13 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn dissipativity_zero_vector() {
        let grids = SexPair::splat(AgeGrid::new(1.0, 4).unwrap());
        let ops = DiscreteOperators::assemble(MaternityModuli::zero(&grids), grids).unwrap();
        let r = ops.dissipativity_check(&vec![0.0; 8]).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn dissipativity_without_births() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let grids = SexPair::splat(AgeGrid::new(2.0, 16).unwrap());
        let ops = DiscreteOperators::assemble(MaternityModuli::zero(&grids), grids).unwrap();
        for _ in 0..100 {
            let u: Vec<f64> = (0..ops.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(ops.dissipativity_check(&u).unwrap().holds);
        }
    }

    #[test]
    fn sign_flip_breaks_dissipativity() {
        // flipping the transport sign turns the generator into its negative,
        // which amplifies instead of damps: the inequality must then fail for
        // some vector
        let grids = SexPair::splat(AgeGrid::new(1.0, 8).unwrap());
        let ops = DiscreteOperators::assemble(MaternityModuli::zero(&grids), grids).unwrap();
        let n = ops.n();
        let flipped: Vec<f64> = ops.a_block().iter().map(|a| -a).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut violated = false;
        for _ in 0..200 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut au = vec![0.0; n];
            for r in 0..n {
                au[r] = flipped[r * n..(r + 1) * n]
                    .iter()
                    .zip(&u)
                    .map(|(a, x)| a * x)
                    .sum();
            }
            let lhs = ops.interior_inner(&au, &u).unwrap();
            let rhs = ops.omega0() * ops.interior_inner(&u, &u).unwrap();
            if lhs > rhs + 1e-10 * rhs.abs() {
                violated = true;
                break;
            }
        }
        assert!(violated, "sign-flipped operator should violate dissipativity");
    }
}
