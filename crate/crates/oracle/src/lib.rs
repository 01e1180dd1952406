//! Brute-force reference solvers.
//!
//! Nothing here shares code with the production solvers. Vertices of
//! `{x >= 0 : Ax <= b}` are enumerated exhaustively by walking every feasible
//! basis reachable through feasible pivots; the objective is only evaluated
//! afterwards, so the maximum found does not depend on any pivoting rule.

use std::collections::{HashSet, VecDeque};

const TOL: f64 = 1e-10;
const MAX_BASES: usize = 2_000_000;

#[derive(Clone)]
struct Tableau {
    /// m rows of `cols` coefficients followed by the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn point(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &v) in self.basis.iter().enumerate() {
            if v < n {
                x[v] = self.rhs(i).max(0.0);
            }
        }
        x
    }

    fn key(&self) -> Vec<usize> {
        let mut k = self.basis.clone();
        k.sort_unstable();
        k
    }
}

/// Finds an initial feasible basis with a single auxiliary variable `x0`:
/// maximise `-x0` over `Ax - x0 <= b` starting from the most violated row.
fn initial_basis(a: &[Vec<f64>], b: &[f64]) -> Option<Tableau> {
    let m = b.len();
    let n = a[0].len();
    let aux = n + m;
    let cols = n + m + 1;
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; cols + 1];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[aux] = -1.0;
            row[cols] = b[i];
            row
        })
        .collect();
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        cols,
    };

    let (worst, &bmin) = b
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    if bmin < 0.0 {
        t.pivot(worst, aux);
        // maximise -x0 with smallest-index pivoting
        let mut guard = 0;
        loop {
            guard += 1;
            assert!(guard < 100_000, "auxiliary problem did not terminate");
            let cost = |j: usize| -> f64 {
                // reduced cost of column j for objective -x0
                let mut z = if j == aux { -1.0 } else { 0.0 };
                for (i, &bv) in t.basis.iter().enumerate() {
                    if bv == aux {
                        z += t.rows[i][j];
                    }
                }
                z
            };
            let Some(enter) = (0..cols).find(|&j| !t.basis.contains(&j) && cost(j) > TOL) else {
                break;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let v = t.rows[i][enter];
                if v > TOL {
                    let ratio = t.rhs(i) / v;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - TOL || ((ratio - lr).abs() <= TOL && t.basis[i] < t.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (r, _) = leave.expect("auxiliary problem is bounded");
            t.pivot(r, enter);
        }
        let x0 = t
            .basis
            .iter()
            .position(|&v| v == aux)
            .map_or(0.0, |i| t.rhs(i));
        if x0 > 1e-8 {
            return None;
        }
        if let Some(r) = t.basis.iter().position(|&v| v == aux) {
            let c = (0..aux).find(|&j| t.rows[r][j].abs() > TOL)?;
            t.pivot(r, c);
        }
    }

    for row in &mut t.rows {
        let rhs = row[cols];
        row.truncate(aux);
        row.push(rhs.max(0.0));
    }
    t.cols = aux;
    Some(t)
}

/// Every vertex of the bounded polytope `{x >= 0 : Ax <= b}`, or `None` when
/// it is empty. Degenerate vertices may appear more than once.
pub fn enumerate_vertices(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<Vec<f64>>> {
    assert_eq!(a.len(), b.len());
    let n = a[0].len();
    let start = initial_basis(a, b)?;
    let m = start.rows.len();

    let mut seen = HashSet::new();
    seen.insert(start.key());
    let mut queue = VecDeque::from([start]);
    let mut vertices = Vec::new();

    while let Some(t) = queue.pop_front() {
        vertices.push(t.point(n));
        for enter in 0..t.cols {
            if t.basis.contains(&enter) {
                continue;
            }
            let ratios: Vec<(usize, f64)> = (0..m)
                .filter(|&i| t.rows[i][enter] > TOL)
                .map(|i| (i, t.rhs(i).max(0.0) / t.rows[i][enter]))
                .collect();
            let Some(min) = ratios.iter().map(|r| r.1).min_by(f64::total_cmp) else {
                continue;
            };
            for &(r, ratio) in &ratios {
                if ratio > min + 1e-9 * (1.0 + min.abs()) {
                    continue;
                }
                let mut key = t.basis.clone();
                key[r] = enter;
                key.sort_unstable();
                if seen.insert(key) {
                    assert!(seen.len() < MAX_BASES, "too many bases to enumerate");
                    let mut next = t.clone();
                    next.pivot(r, enter);
                    queue.push_back(next);
                }
            }
        }
    }
    Some(vertices)
}

/// Maximum of `(num·x + alpha) / (den·x + beta)` over all vertices.
pub fn max_ratio_over_vertices(
    num: &[f64],
    alpha: f64,
    den: &[f64],
    beta: f64,
    a: &[Vec<f64>],
    b: &[f64],
) -> Option<(f64, Vec<f64>)> {
    enumerate_vertices(a, b)?
        .into_iter()
        .map(|x| {
            let top: f64 = num.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() + alpha;
            let bottom: f64 = den.iter().zip(&x).map(|(d, v)| d * v).sum::<f64>() + beta;
            (top / bottom, x)
        })
        .max_by(|p, q| p.0.total_cmp(&q.0))
}

/// Maximum of `c·x` over all vertices.
pub fn max_linear_over_vertices(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    enumerate_vertices(a, b)?
        .into_iter()
        .map(|x| (c.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>(), x))
        .max_by(|p, q| p.0.total_cmp(&q.0))
}

/// `max w·x  s.t.  lo <= x <= hi,  Σx = total`, by enumerating every vertex:
/// all coordinates but one sit at a bound and the remaining one absorbs the
/// difference.
pub fn max_weighted_fill(w: &[f64], lo: &[f64], hi: &[f64], total: f64) -> Option<(f64, Vec<f64>)> {
    let n = w.len();
    assert!(n <= 20);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for free in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut x = vec![0.0; n];
            let mut bit = 0;
            for j in 0..n {
                if j == free {
                    continue;
                }
                x[j] = if mask >> bit & 1 == 1 { hi[j] } else { lo[j] };
                bit += 1;
            }
            let rest: f64 = x.iter().sum();
            x[free] = total - rest;
            let slack = 1e-9 * (1.0 + total.abs());
            if x[free] < lo[free] - slack || x[free] > hi[free] + slack {
                continue;
            }
            let value: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            if best.as_ref().map_or(true, |(bv, _)| value > *bv) {
                best = Some((value, x));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_has_four_vertices() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut v = enumerate_vertices(&a, &[1.0, 1.0]).unwrap();
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        v.dedup();
        assert_eq!(
            v,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn origin_excluded_by_ge_row() {
        // x + y >= 1 inside the unit square: triangle (1,0), (0,1), (1,1)
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]];
        let mut v = enumerate_vertices(&a, &[1.0, 1.0, -1.0]).unwrap();
        v.sort_by(|p, q| p.partial_cmp(q).unwrap());
        v.dedup();
        assert_eq!(v, vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn empty_polytope() {
        let a = vec![vec![1.0], vec![-1.0]];
        assert!(enumerate_vertices(&a, &[1.0, -2.0]).is_none());
    }

    #[test]
    fn ratio_maximum_on_box() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (best, x) =
            max_ratio_over_vertices(&[3.0, 1.0], 1.0, &[1.0, 2.0], 2.0, &a, &[1.0, 1.0]).unwrap();
        assert!((best - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(x, vec![1.0, 0.0]);
    }

    #[test]
    fn weighted_fill_prefers_heavy_coordinates() {
        let (v, x) = max_weighted_fill(&[1.0, 3.0, 2.0], &[0.0; 3], &[5.0; 3], 7.0).unwrap();
        assert_eq!(x, vec![0.0, 5.0, 2.0]);
        assert_eq!(v, 19.0);
        assert!(max_weighted_fill(&[1.0], &[0.0], &[1.0], 2.0).is_none());
    }
}
