//! Thin assembly layer over the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

/// Affine expression Σ cᵢ·xᵢ + constant.
#[derive(Debug, Clone, Default)]
pub(crate) struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, c: f64) -> Self {
        Self {
            terms: vec![(i, c)],
            constant: 0.0,
        }
    }

    pub fn add(mut self, i: usize, c: f64) -> Self {
        self.terms.push((i, c));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_expr(mut self, other: &Affine, scale: f64) -> Self {
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConicStatus {
    Solved,
    Infeasible,
    Failed,
}

pub(crate) struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub detail: String,
}

/// Minimise cᵀx subject to affine expressions lying in cones.
#[derive(Default)]
pub(crate) struct ConicProgram {
    cost: Vec<f64>,
    zeros: Vec<Affine>,
    nonneg: Vec<Affine>,
    socs: Vec<Vec<Affine>>,
    powers: Vec<(f64, [Affine; 3])>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self) -> usize {
        self.cost.push(0.0);
        self.cost.len() - 1
    }

    pub fn add_cost(&mut self, i: usize, c: f64) {
        self.cost[i] += c;
    }

    /// expr = 0
    pub fn eq(&mut self, expr: Affine) {
        self.zeros.push(expr);
    }

    /// expr ≥ 0
    pub fn nonneg(&mut self, expr: Affine) {
        self.nonneg.push(expr);
    }

    /// head ≥ ‖tail‖
    pub fn soc(&mut self, head: Affine, tail: Vec<Affine>) {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.socs.push(rows);
    }

    /// t·u ≥ ‖x‖² with t, u ≥ 0.
    pub fn rotated(&mut self, t: Affine, u: Affine, x: Vec<Affine>) {
        let head = t.clone().add_expr(&u, 1.0);
        let mut tail = vec![t.add_expr(&u, -1.0)];
        tail.extend(x.into_iter().map(|e| e.scaled(2.0)));
        self.soc(head, tail);
    }

    /// x^α·y^(1−α) ≥ |z| with x, y ≥ 0.
    pub fn power(&mut self, alpha: f64, x: Affine, y: Affine, z: Affine) {
        self.powers.push((alpha, [x, y, z]));
    }

    pub fn solve(&self, tolerance: f64, max_iter: u32) -> ConicSolution {
        let n = self.cost.len();
        let mut rows: Vec<&Affine> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if !self.zeros.is_empty() {
            rows.extend(&self.zeros);
            cones.push(SupportedConeT::ZeroConeT(self.zeros.len()));
        }
        if !self.nonneg.is_empty() {
            rows.extend(&self.nonneg);
            cones.push(SupportedConeT::NonnegativeConeT(self.nonneg.len()));
        }
        for soc in &self.socs {
            rows.extend(soc);
            cones.push(SupportedConeT::SecondOrderConeT(soc.len()));
        }
        for (alpha, triple) in &self.powers {
            rows.extend(triple);
            cones.push(SupportedConeT::PowerConeT(*alpha));
        }

        // Clarabel form: A·x + s = b, s ∈ K, so s = expr gives A = −coef, b = const.
        let m = rows.len();
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut b = Vec::with_capacity(m);
        for (r, expr) in rows.iter().enumerate() {
            b.push(expr.constant);
            for &(i, c) in &expr.terms {
                if c != 0.0 {
                    columns[i].push((r, -c));
                }
            }
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &mut columns {
            col.sort_by_key(|&(r, _)| r);
            // merge duplicate row entries
            let mut last: Option<usize> = None;
            for &(r, v) in col.iter() {
                if last == Some(r) {
                    *nzval.last_mut().unwrap() += v;
                } else {
                    rowval.push(r);
                    nzval.push(v);
                    last = Some(r);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let p = CscMatrix::zeros((n, n));

        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(max_iter)
            .tol_gap_abs(tolerance)
            .tol_gap_rel(tolerance)
            .tol_feas(tolerance)
            .tol_ktratio(1e-7)
            .build()
            .expect("static solver settings");
        let mut solver = match DefaultSolver::new(&p, &self.cost, &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                return ConicSolution {
                    status: ConicStatus::Failed,
                    x: vec![0.0; n],
                    objective: f64::NAN,
                    detail: format!("setup: {e:?}"),
                }
            }
        };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => ConicStatus::Solved,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicStatus::Infeasible
            }
            _ => ConicStatus::Failed,
        };
        ConicSolution {
            status,
            x: sol.x.clone(),
            objective: sol.obj_val,
            detail: format!("{:?} after {} iterations", sol.status, sol.iterations),
        }
    }
}
