//! Dense bounded-variable primal simplex.
//!
//! Variables carry arbitrary (possibly infinite) bounds; rows are `<=`, `=`
//! or `>=`. The solver runs a two-phase method on an internal standard form
//! with an artificial column per row, which keeps `B^-1` available in the
//! tableau so row duals come for free. Entering variables follow Dantzig's
//! rule, switching to Bland's rule after a run of degenerate pivots.
//!
//! Reported duals are sensitivities of the optimal objective (in the
//! problem's own sense) with respect to each row's right-hand side.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// New problem with all variables in `[0, +inf)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> usize {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |m: String| Err(Error::InvalidLp(m));
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bound vectors do not match the variable count".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("non-finite objective coefficient".into());
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("variable {j} has bounds [{l}, {u}]"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return bad(format!("row {i} has {} coefficients, expected {n}", c.coeffs.len()));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return bad(format!("row {i} has non-finite data"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values (meaningful when optimal).
    pub x: Vec<f64>,
    /// Row duals: d(objective)/d(rhs_i), in the problem's own sense.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    /// Largest violation of a row or bound at `x`.
    pub fn primal_residual(&self, lp: &LinearProgram) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &lp.constraints {
            let lhs: f64 = c.coeffs.iter().zip(&self.x).map(|(a, x)| a * x).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &x) in self.x.iter().enumerate() {
            worst = worst.max(lp.lower[j] - x).max(x - lp.upper[j]);
        }
        worst
    }

    /// Largest `|dual_i * slack_i|` over the rows.
    pub fn complementarity_residual(&self, lp: &LinearProgram) -> f64 {
        lp.constraints
            .iter()
            .zip(&self.duals)
            .map(|(c, y)| {
                let lhs: f64 = c.coeffs.iter().zip(&self.x).map(|(a, x)| a * x).sum();
                (y * (lhs - c.rhs)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
    pub max_iterations: usize,
    /// Dump pivots and tableau sizes to stderr.
    pub trace: bool,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            stall_limit: 50,
            max_iterations: 200_000,
            trace: false,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &SimplexOptions::default())
}

/// How an original variable maps onto internal non-negative columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = lower + col
    Shifted { col: usize, lower: f64 },
    /// x = upper - col
    Mirrored { col: usize, upper: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols` matrix `B^-1 A`.
    t: Vec<f64>,
    /// Values of the basic variables, by row.
    xb: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    upper: Vec<f64>,
    /// Reduced costs for the active phase.
    d: Vec<f64>,
    banned: Vec<bool>,
    first_art: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn row(&self, r: usize) -> &[f64] {
        &self.t[r * self.ncols..(r + 1) * self.ncols]
    }

    fn value(&self, col: usize) -> f64 {
        match self.state[col] {
            ColState::AtLower => 0.0,
            ColState::AtUpper => self.upper[col],
            ColState::Basic => {
                let r = self.basis.iter().position(|&b| b == col).expect("basic column");
                self.xb[r]
            }
        }
    }

    fn set_costs(&mut self, c: &[f64]) {
        self.d.copy_from_slice(c);
        for r in 0..self.m {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.ncols;
        let piv = self.t[r * n + q];
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for a in row.iter_mut() {
                *a /= piv;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.t[i * n + q];
            if factor != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for (a, p) in row.iter_mut().zip(&pivot_row) {
                    *a -= factor * p;
                }
                row[q] = 0.0;
            }
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (dj, p) in self.d.iter_mut().zip(&pivot_row) {
                *dj -= dq * p;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = ColState::Basic;
        // caller sets the leaving column's state
        let _ = leaving;
    }

    /// Primal simplex on the current reduced costs.
    fn run(&mut self, opts: &SimplexOptions) -> Result<Outcome> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }
            let bland = degenerate_run >= opts.stall_limit;

            // entering column
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if self.banned[j] || self.upper[j] <= 0.0 {
                    continue;
                }
                let score = match self.state[j] {
                    ColState::Basic => continue,
                    ColState::AtLower if self.d[j] < -opts.optimality_tol => -self.d[j],
                    ColState::AtUpper if self.d[j] > opts.optimality_tol => self.d[j],
                    _ => continue,
                };
                if bland {
                    enter = Some((j, score));
                    break;
                }
                if enter.is_none_or(|(_, best)| score > best) {
                    enter = Some((j, score));
                }
            }
            let Some((q, _)) = enter else {
                return Ok(Outcome::Optimal);
            };
            let dir = if self.state[q] == ColState::AtLower { 1.0 } else { -1.0 };

            // ratio test; basic value moves by -dir * alpha * t
            let mut step = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_key = (0.0f64, usize::MAX);
            for r in 0..self.m {
                let alpha = self.t[r * self.ncols + q];
                if alpha.abs() <= opts.pivot_tol {
                    continue;
                }
                let rate = -dir * alpha;
                let b = self.basis[r];
                let (limit, to_upper) = if rate < 0.0 {
                    (self.xb[r].max(0.0) / -rate, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.xb[r]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = if limit < step - 1e-12 {
                    true
                } else if limit <= step + 1e-12 && leave.is_some() {
                    if bland {
                        b < leave_key.1
                    } else {
                        alpha.abs() > leave_key.0
                    }
                } else {
                    false
                };
                if better {
                    step = limit.min(step);
                    leave = Some((r, to_upper));
                    leave_key = (alpha.abs(), b);
                }
            }
            if step == f64::INFINITY {
                return Ok(Outcome::Unbounded);
            }
            self.iterations += 1;
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.m {
                let alpha = self.t[r * self.ncols + q];
                if alpha != 0.0 {
                    self.xb[r] -= dir * alpha * step;
                }
            }
            let entering_value = if dir > 0.0 { step } else { self.upper[q] - step };
            match leave {
                None => {
                    // bound flip
                    self.state[q] = if dir > 0.0 { ColState::AtUpper } else { ColState::AtLower };
                    if opts.trace {
                        eprintln!("[lp] it {} flip col {q} step {step:.3e}", self.iterations);
                    }
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    if opts.trace {
                        eprintln!(
                            "[lp] it {} pivot row {r} col {q} leaves {out} step {step:.3e}",
                            self.iterations
                        );
                    }
                    self.pivot(r, q);
                    self.state[out] = if to_upper { ColState::AtUpper } else { ColState::AtLower };
                    self.xb[r] = entering_value;
                }
            }
            for v in self.xb.iter_mut() {
                if *v < 0.0 && *v > -opts.feasibility_tol {
                    *v = 0.0;
                }
            }
        }
    }
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let m = lp.constraints.len();
    let sign_obj = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };

    // internal structural columns
    let mut maps = Vec::with_capacity(n);
    let mut col_upper = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let map = if l.is_finite() {
            col_upper.push(u - l);
            VarMap::Shifted { col: col_upper.len() - 1, lower: l }
        } else if u.is_finite() {
            col_upper.push(f64::INFINITY);
            VarMap::Mirrored { col: col_upper.len() - 1, upper: u }
        } else {
            col_upper.push(f64::INFINITY);
            col_upper.push(f64::INFINITY);
            VarMap::Split { pos: col_upper.len() - 2, neg: col_upper.len() - 1 }
        };
        maps.push(map);
    }
    let n_struct = col_upper.len();
    let n_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
    let first_art = n_struct + n_slack;
    let ncols = first_art + m;

    let mut t = vec![0.0; m * ncols];
    let mut rhs = vec![0.0; m];
    let mut row_sign = vec![1.0; m];
    let mut c_internal = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = sign_obj * lp.objective[j];
        match *map {
            VarMap::Shifted { col, .. } => c_internal[col] = c,
            VarMap::Mirrored { col, .. } => c_internal[col] = -c,
            VarMap::Split { pos, neg } => {
                c_internal[pos] = c;
                c_internal[neg] = -c;
            }
        }
    }
    let mut slack = n_struct;
    for (i, con) in lp.constraints.iter().enumerate() {
        let row = &mut t[i * ncols..(i + 1) * ncols];
        let mut b = con.rhs;
        for (j, map) in maps.iter().enumerate() {
            let a = con.coeffs[j];
            if a == 0.0 {
                continue;
            }
            match *map {
                VarMap::Shifted { col, lower } => {
                    row[col] = a;
                    b -= a * lower;
                }
                VarMap::Mirrored { col, upper } => {
                    row[col] = -a;
                    b -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] = a;
                    row[neg] = -a;
                }
            }
        }
        match con.relation {
            Relation::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
        if b < 0.0 {
            for a in row.iter_mut() {
                *a = -*a;
            }
            b = -b;
            row_sign[i] = -1.0;
        }
        row[first_art + i] = 1.0;
        rhs[i] = b;
    }
    let mut upper = col_upper;
    upper.resize(ncols, f64::INFINITY);

    let mut tab = Tableau {
        m,
        ncols,
        t,
        xb: rhs.clone(),
        basis: (first_art..ncols).collect(),
        state: (0..ncols)
            .map(|j| if j >= first_art { ColState::Basic } else { ColState::AtLower })
            .collect(),
        upper,
        d: vec![0.0; ncols],
        banned: vec![false; ncols],
        first_art,
        iterations: 0,
    };
    if opts.trace {
        eprintln!("[lp] tableau {m} x {ncols} ({n_struct} structural, {n_slack} slack)");
    }

    // phase I
    let mut phase1 = vec![0.0; ncols];
    phase1[first_art..].iter_mut().for_each(|c| *c = 1.0);
    tab.set_costs(&phase1);
    tab.run(opts)?;
    let infeasibility: f64 = (0..m)
        .filter(|&r| tab.basis[r] >= first_art)
        .map(|r| tab.xb[r])
        .sum();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if infeasibility > opts.feasibility_tol * scale * 10.0 {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![f64::NAN; n],
            duals: vec![0.0; m],
            objective: f64::NAN,
            iterations: tab.iterations,
        });
    }
    // drive artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] < first_art {
            continue;
        }
        let row = tab.row(r);
        let candidate = (0..first_art)
            .filter(|&j| tab.state[j] != ColState::Basic)
            .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()).then(b.cmp(&a)));
        if let Some(q) = candidate {
            if tab.row(r)[q].abs() > 1e-7 {
                let value = tab.value(q);
                let out = tab.basis[r];
                tab.pivot(r, q);
                tab.state[out] = ColState::AtLower;
                tab.xb[r] = value;
            }
        }
    }
    for j in first_art..ncols {
        tab.banned[j] = true;
        tab.upper[j] = 0.0;
    }

    // phase II
    tab.set_costs(&c_internal);
    let outcome = tab.run(opts)?;
    if let Outcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![f64::NAN; n],
            duals: vec![0.0; m],
            objective: sign_obj * f64::NEG_INFINITY,
            iterations: tab.iterations,
        });
    }

    let mut values = vec![0.0; ncols];
    for j in 0..ncols {
        if tab.state[j] == ColState::AtUpper {
            values[j] = tab.upper[j];
        }
    }
    for r in 0..m {
        values[tab.basis[r]] = tab.xb[r];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            VarMap::Shifted { col, lower } => lower + values[col],
            VarMap::Mirrored { col, upper } => upper - values[col],
            VarMap::Split { pos, neg } => values[pos] - values[neg],
        })
        .collect();
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    // y = c_B B^-1; artificial i has unit column e_i and zero phase-II cost
    let duals = (0..m)
        .map(|i| -tab.d[tab.first_art + i] * row_sign[i] * sign_obj)
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        duals,
        objective,
        iterations: tab.iterations,
    })
}
