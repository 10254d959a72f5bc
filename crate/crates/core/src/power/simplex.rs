//! Dense two-phase simplex with Bland's rule, for small LPs.
//!
//! Minimizes `c·x` over `x ≥ 0` subject to rows `a·x {≤,≥,=} b`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

const EPS: f64 = 1e-12;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Columns never allowed to enter (retired artificials).
    barred: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.barred.len()
    }

    fn rhs(&self, r: usize) -> f64 {
        *self.rows[r].last().unwrap()
    }

    fn reduced_cost(&self, cost: &[f64], col: usize) -> f64 {
        cost[col]
            - self
                .rows
                .iter()
                .zip(&self.basis)
                .map(|(row, &b)| cost[b] * row[col])
                .sum::<f64>()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (k, row) in self.rows.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule pivots to optimality. `Ok(false)` means unbounded.
    fn optimize(&mut self, cost: &[f64], max_pivots: usize) -> Result<bool> {
        for _ in 0..max_pivots {
            let entering = (0..self.width())
                .find(|&c| !self.barred[c] && !self.basis.contains(&c) && self.reduced_cost(cost, c) < -EPS);
            let Some(c) = entering else { return Ok(true) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS || ((ratio - lratio).abs() <= EPS && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else { return Ok(false) };
            self.pivot(r, c);
        }
        Err(Error::SimplexCycling(max_pivots))
    }
}

impl LinearProgram {
    pub fn solve(&self) -> Result<LpOutcome> {
        let n = self.cost.len();
        let m = self.constraints.len();
        // Normalize rows and make every right-hand side nonnegative.
        let rows: Vec<(Vec<f64>, Relation, f64)> = self
            .constraints
            .iter()
            .map(|c| {
                assert_eq!(c.coeffs.len(), n, "constraint width mismatch");
                let scale = c.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
                let mut coeffs: Vec<f64> = c.coeffs.iter().map(|v| v / scale).collect();
                let mut rhs = c.rhs / scale;
                let mut rel = c.relation;
                if rhs < 0.0 {
                    coeffs.iter_mut().for_each(|v| *v = -*v);
                    rhs = -rhs;
                    rel = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                (coeffs, rel, rhs)
            })
            .collect();

        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let width = n + slacks + artificials;
        let mut tab = Tableau {
            rows: Vec::with_capacity(m),
            basis: Vec::with_capacity(m),
            barred: vec![false; width],
        };
        let (mut s, mut a) = (n, n + slacks);
        for (coeffs, rel, rhs) in rows {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(&coeffs);
            row[width] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    tab.basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    row[a] = 1.0;
                    tab.basis.push(a);
                    s += 1;
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    tab.basis.push(a);
                    a += 1;
                }
            }
            tab.rows.push(row);
        }
        let max_pivots = 50 * (width + m + 1);

        if artificials > 0 {
            let mut phase1 = vec![0.0; width];
            phase1[n + slacks..].iter_mut().for_each(|v| *v = 1.0);
            tab.optimize(&phase1, max_pivots)?;
            let infeasibility: f64 = (0..m)
                .filter(|&r| tab.basis[r] >= n + slacks)
                .map(|r| tab.rhs(r))
                .sum();
            let scale = 1.0 + (0..m).map(|r| tab.rhs(r).abs()).fold(0.0, f64::max);
            if infeasibility > 1e-9 * scale {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..m {
                if tab.basis[r] >= n + slacks {
                    if let Some(c) = (0..n + slacks).find(|&c| tab.rows[r][c].abs() > EPS) {
                        tab.pivot(r, c);
                    }
                }
            }
            tab.barred[n + slacks..].iter_mut().for_each(|b| *b = true);
        }

        let mut phase2 = vec![0.0; width];
        phase2[..n].copy_from_slice(&self.cost);
        if !tab.optimize(&phase2, max_pivots)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; n];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.rhs(r).max(0.0);
            }
        }
        let value = x.iter().zip(&self.cost).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, value })
    }
}
