//! Dense two-phase primal simplex for `max c·x  s.t.  Ax <= b, x >= 0`.
//!
//! Pivoting uses Bland's rule throughout: the entering column is the lowest
//! index with a positive reduced cost, and ratio-test ties leave by the lowest
//! basic variable index. After phase I the tableau is kept, so a feasible
//! [`Simplex`] can be re-optimised for a sequence of objectives starting from
//! the previous optimal basis.

use super::{LpError, LpProblem};

/// Pivot and reduced-cost tolerance.
const EPS: f64 = 1e-9;
/// Entries below this magnitude are flushed to zero after a pivot.
const ZERO: f64 = 1e-13;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct Simplex {
    num_structural: usize,
    /// `rows[i]` holds the tableau row followed by its right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs for the current objective, `cost[width]` is `-z`.
    cost: Vec<f64>,
    width: usize,
    pivots: usize,
}

impl Simplex {
    /// Builds the slack tableau and runs phase I.
    ///
    /// Returns [`LpError::Infeasible`] when no `x >= 0` satisfies `Ax <= b`.
    pub fn new(problem: &LpProblem) -> Result<Self, LpError> {
        problem.validate()?;
        let m = problem.rhs.len();
        let n = problem.num_vars();

        let needs_artificial: Vec<bool> = problem.rhs.iter().map(|&b| b < 0.0).collect();
        let num_art = needs_artificial.iter().filter(|&&f| f).count();
        let width = n + m + num_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = n + m;
        for (i, (a_row, &b)) in problem.constraints.iter().zip(&problem.rhs).enumerate() {
            let mut row = vec![0.0; width + 1];
            let sign = if needs_artificial[i] { -1.0 } else { 1.0 };
            for (j, &a) in a_row.iter().enumerate() {
                row[j] = sign * a;
            }
            row[n + i] = sign;
            row[width] = sign * b;
            if needs_artificial[i] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(n + i);
            }
            rows.push(row);
        }

        let mut simplex = Simplex {
            num_structural: n,
            rows,
            basis,
            cost: vec![0.0; width + 1],
            width,
            pivots: 0,
        };

        if num_art > 0 {
            let mut phase_one = vec![0.0; width];
            for c in &mut phase_one[n + m..] {
                *c = -1.0;
            }
            simplex.load_objective(&phase_one);
            simplex.optimise(width)?;
            let infeasibility = simplex.cost[width];
            let scale = problem.rhs.iter().fold(1.0_f64, |acc, b| acc.max(b.abs()));
            if infeasibility > EPS * scale {
                return Err(LpError::Infeasible);
            }
            simplex.drop_artificials(n + m);
        }
        simplex.load_objective(&vec![0.0; simplex.width]);
        Ok(simplex)
    }

    /// Optimises `objective` (one coefficient per structural variable)
    /// starting from the current basis and returns the optimal vertex.
    pub fn maximize(&mut self, objective: &[f64]) -> Result<Vec<f64>, LpError> {
        if objective.len() != self.num_structural {
            return Err(LpError::DimensionMismatch {
                what: "objective",
                expected: self.num_structural,
                found: objective.len(),
            });
        }
        let mut full = vec![0.0; self.width];
        full[..self.num_structural].copy_from_slice(objective);
        self.load_objective(&full);
        self.optimise(self.width)?;
        Ok(self.vertex())
    }

    /// The basic feasible solution of the current basis.
    pub fn vertex(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_structural];
        for (row, &var) in self.rows.iter().zip(&self.basis) {
            if var < self.num_structural {
                x[var] = row[self.width].max(0.0);
            }
        }
        x
    }

    /// Total number of pivots performed so far, phase I included.
    pub fn pivots(&self) -> usize {
        self.pivots
    }

    fn load_objective(&mut self, objective: &[f64]) {
        let w = self.width;
        self.cost.clear();
        self.cost.extend_from_slice(objective);
        self.cost.push(0.0);
        for (row, &var) in self.rows.iter().zip(&self.basis) {
            let cb = objective[var];
            if cb != 0.0 {
                for (c, &r) in self.cost.iter_mut().zip(row.iter()) {
                    *c -= cb * r;
                }
            }
        }
        for c in &mut self.cost[..w] {
            if c.abs() < ZERO {
                *c = 0.0;
            }
        }
    }

    /// Runs Bland-rule pivots over columns `0..allowed` until no reduced cost
    /// is positive.
    fn optimise(&mut self, allowed: usize) -> Result<(), LpError> {
        loop {
            let Some(entering) = (0..allowed).find(|&j| self.cost[j] > EPS) else {
                return Ok(());
            };
            let leaving = self.ratio_test(entering).ok_or(LpError::Unbounded)?;
            self.pivot(leaving, entering);
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::IterationLimit(MAX_PIVOTS));
            }
        }
    }

    fn ratio_test(&self, entering: usize) -> Option<usize> {
        let w = self.width;
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[entering];
            if a <= EPS {
                continue;
            }
            let ratio = row[w].max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((bi, br)) => {
                    let tie = (ratio - br).abs() <= EPS * br.abs().max(1.0);
                    if (tie && self.basis[i] < self.basis[bi]) || (!tie && ratio < br) {
                        Some((i, ratio))
                    } else {
                        Some((bi, br))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, leaving: usize, entering: usize) {
        let pivot = self.rows[leaving][entering];
        let mut pivot_row = std::mem::take(&mut self.rows[leaving]);
        for v in pivot_row.iter_mut() {
            *v /= pivot;
        }
        pivot_row[entering] = 1.0;

        for row in self.rows.iter_mut().chain(std::iter::once(&mut self.cost)) {
            if row.is_empty() {
                continue;
            }
            let factor = row[entering];
            if factor == 0.0 {
                continue;
            }
            for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                if p != 0.0 {
                    *v -= factor * p;
                    if v.abs() < ZERO {
                        *v = 0.0;
                    }
                }
            }
            row[entering] = 0.0;
        }
        self.rows[leaving] = pivot_row;
        self.basis[leaving] = entering;
        self.pivots += 1;
    }

    /// Pivots zero-level artificials out of the basis, drops rows that turn
    /// out to be redundant, then truncates the artificial columns.
    fn drop_artificials(&mut self, first_artificial: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= first_artificial {
                let replacement =
                    (0..first_artificial).find(|&j| self.rows[i][j].abs() > EPS);
                match replacement {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let w = self.width;
        for row in &mut self.rows {
            let rhs = row[w];
            row.truncate(first_artificial);
            row.push(rhs);
        }
        self.width = first_artificial;
        self.cost = vec![0.0; first_artificial + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> LpProblem {
        LpProblem::new(c, a, b).unwrap()
    }

    #[test]
    fn warm_restart_reuses_basis() {
        let p = lp(
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![2.0, 2.0, 3.0],
        );
        let mut s = Simplex::new(&p).unwrap();
        let x = s.maximize(&[1.0, 0.0]).unwrap();
        assert_eq!(x[0], 2.0);
        let before = s.pivots();
        let y = s.maximize(&[1.0, 0.0]).unwrap();
        assert_eq!(x, y);
        assert_eq!(s.pivots(), before);
        let z = s.maximize(&[0.0, 1.0]).unwrap();
        assert_eq!(z[1], 2.0);
    }

    #[test]
    fn phase_one_handles_ge_rows() {
        // x + y >= 1 written as -x - y <= -1
        let p = lp(
            vec![-1.0, -2.0],
            vec![vec![-1.0, -1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![-1.0, 5.0, 5.0],
        );
        let mut s = Simplex::new(&p).unwrap();
        let x = s.maximize(&[-1.0, -2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn redundant_equality_rows_are_dropped() {
        // x + y = 1 twice over
        let p = lp(
            vec![1.0, 2.0],
            vec![
                vec![1.0, 1.0],
                vec![-1.0, -1.0],
                vec![2.0, 2.0],
                vec![-2.0, -2.0],
            ],
            vec![1.0, -1.0, 2.0, -2.0],
        );
        let mut s = Simplex::new(&p).unwrap();
        let x = s.maximize(&[1.0, 2.0]).unwrap();
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the largest-coefficient rule.
        let p = lp(
            vec![0.75, -150.0, 0.02, -6.0],
            vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0],
        );
        let mut s = Simplex::new(&p).unwrap();
        let x = s.maximize(&p.objective).unwrap();
        assert!((p.value(&x) - 0.05).abs() < 1e-9);
    }
}
