//! Theta-weighted time stepping for the convection-diffusion and
//! pseudo-parabolic benchmarks.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::linalg::{cond_estimate_1norm, LinearSolver, SparseLu, SparseMatrix};
use crate::localinterp::Op;
use crate::points::NodeSet;
use crate::scalar::{Point2, Real};

/// Growth factor over `max(1, |u0|_inf)` that counts as blow-up.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeScheme<T> {
    pub theta: T,
    pub dt: T,
    pub t_final: T,
}

impl<T: Real> TimeScheme<T> {
    pub fn new(theta: T, dt: T, t_final: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::one()) {
            return Err(Error::InvalidConfig(format!("theta must lie in [0, 1], got {theta}")));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(t_final >= T::zero()) || !t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "final time must be nonnegative, got {t_final}"
            )));
        }
        Ok(Self { theta, dt, t_final })
    }

    /// Number of full steps and, if `t_final` is not a multiple of `dt`, the
    /// length of the truncated last step.
    pub fn step_plan(&self) -> (usize, Option<T>) {
        let ratio = self.t_final / self.dt;
        let nearest = ratio.round();
        let tol = T::lit(1e-9) * nearest.max(T::one());
        if (ratio - nearest).abs() <= tol {
            return (nearest.to_usize().unwrap_or(0), None);
        }
        let full = ratio.floor();
        let rest = self.t_final - full * self.dt;
        (full.to_usize().unwrap_or(0), Some(rest))
    }

    /// Time after `k` full steps.
    pub fn time_at(&self, k: usize) -> T {
        T::from_usize_lossy(k) * self.dt
    }
}

/// `u_t = kappa Lap u + (nu, nu) . grad u` with exact solution
/// `a exp(b t) (exp(-c x) + exp(-c y))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvDiffSpec<T> {
    pub kappa: T,
    pub nu: T,
    pub a: T,
    pub b: T,
}

impl<T: Real> Default for ConvDiffSpec<T> {
    fn default() -> Self {
        Self {
            kappa: T::one(),
            nu: T::one(),
            a: T::one(),
            b: T::lit(0.1),
        }
    }
}

impl<T: Real> ConvDiffSpec<T> {
    /// Positive decay rate making the exact solution satisfy the PDE.
    pub fn c(&self) -> T {
        let four = T::lit(4.0);
        (self.nu + (self.nu * self.nu + four * self.b * self.kappa).sqrt()) / (T::lit(2.0) * self.kappa)
    }

    pub fn exact(&self, x: T, y: T, t: T) -> T {
        let c = self.c();
        self.a * (self.b * t).exp() * ((-c * x).exp() + (-c * y).exp())
    }

    pub fn velocity(&self) -> [T; 2] {
        [self.nu, self.nu]
    }
}

/// `u_t - alpha Lap u - beta Lap u_t = f` with exact solution `exp(2t)(cos x + sin y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PseudoParabolicSpec<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Default for PseudoParabolicSpec<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::lit(0.00025),
        }
    }
}

impl<T: Real> PseudoParabolicSpec<T> {
    pub fn exact(&self, x: T, y: T, t: T) -> T {
        (T::lit(2.0) * t).exp() * (x.cos() + y.sin())
    }

    pub fn forcing(&self, x: T, y: T, t: T) -> T {
        let two = T::lit(2.0);
        (two + self.alpha + two * self.beta) * self.exact(x, y, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Problem<T> {
    ConvDiff(ConvDiffSpec<T>),
    Pseudo(PseudoParabolicSpec<T>),
}

/// Which benchmark, without its coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    ConvDiff,
    Pseudo,
}

impl ProblemKind {
    pub fn tag(self) -> &'static str {
        match self {
            ProblemKind::ConvDiff => "convdiff",
            ProblemKind::Pseudo => "pseudo",
        }
    }

    /// The benchmark with its default coefficients.
    pub fn with_defaults<T: Real>(self) -> Problem<T> {
        match self {
            ProblemKind::ConvDiff => Problem::ConvDiff(ConvDiffSpec::default()),
            ProblemKind::Pseudo => Problem::Pseudo(PseudoParabolicSpec::default()),
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "convdiff" => Ok(ProblemKind::ConvDiff),
            "pseudo" => Ok(ProblemKind::Pseudo),
            _ => Err(Error::InvalidConfig(format!("unknown problem '{s}'"))),
        }
    }
}

impl<T: Real> Problem<T> {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::ConvDiff(_) => ProblemKind::ConvDiff,
            Problem::Pseudo(_) => ProblemKind::Pseudo,
        }
    }

    pub fn exact(&self, p: Point2<T>, t: T) -> T {
        match self {
            Problem::ConvDiff(s) => s.exact(p[0], p[1], t),
            Problem::Pseudo(s) => s.exact(p[0], p[1], t),
        }
    }

    /// Operators the scheme needs, in the order [`Operators`] expects them.
    fn required_ops(&self) -> &'static [Op] {
        match self {
            Problem::ConvDiff(_) => &[Op::Id, Op::Lap, Op::Dx, Op::Dy],
            Problem::Pseudo(_) => &[Op::Id, Op::Lap],
        }
    }

    /// The spatial operator `L` with `u_t = L u + ...`, interior rows only.
    pub fn spatial_operator(&self, ops: &Operators<T>) -> Result<SparseMatrix<T>> {
        match self {
            Problem::ConvDiff(s) => {
                let (dx, dy) = ops.gradient()?;
                let [v1, v2] = s.velocity();
                SparseMatrix::linear_combination(&[(s.kappa, &ops.lap_i), (v1, dx), (v2, dy)])
            }
            Problem::Pseudo(_) => Ok(ops.lap_i.clone()),
        }
    }
}

/// Assembled operators used by the time stepping.
#[derive(Clone, Debug)]
pub struct Operators<T> {
    /// Assembled identity operator `A`.
    pub a: SparseMatrix<T>,
    /// `A` with boundary rows zeroed.
    pub a_i: SparseMatrix<T>,
    pub lap_i: SparseMatrix<T>,
    pub dx_i: Option<SparseMatrix<T>>,
    pub dy_i: Option<SparseMatrix<T>>,
    pub interior_mask: Vec<bool>,
}

impl<T: Real> Operators<T> {
    pub fn assemble(disc: &Discretization<T>, problem: &Problem<T>) -> Result<Self> {
        let mut g = disc.assemble_ops(problem.required_ops())?.into_iter();
        let a = g.next().expect("identity requested");
        let lap = g.next().expect("laplacian requested");
        let dx_i = g.next().map(|o| o.interior());
        let dy_i = g.next().map(|o| o.interior());
        Ok(Self {
            a_i: a.interior(),
            lap_i: lap.interior(),
            interior_mask: a.interior_mask().to_vec(),
            a: a.matrix,
            dx_i,
            dy_i,
        })
    }

    fn gradient(&self) -> Result<(&SparseMatrix<T>, &SparseMatrix<T>)> {
        match (&self.dx_i, &self.dy_i) {
            (Some(dx), Some(dy)) => Ok((dx, dy)),
            _ => Err(Error::Dimension("gradient operators were not assembled".into())),
        }
    }
}

/// `C u^{n+1} = D u^n + v^{n+1}` for one step length.
#[derive(Clone, Debug)]
pub struct ThetaSystem<T> {
    pub c: SparseMatrix<T>,
    pub d: SparseMatrix<T>,
    pub dt: T,
}

/// `C = A + eta (kappa Lap_I + nu . grad_I)`, `D = A_I + zeta (...)` with
/// `eta = -theta dt`, `zeta = (1 - theta) dt`.
pub fn build_convdiff_system<T: Real>(
    spec: &ConvDiffSpec<T>,
    theta: T,
    dt: T,
    ops: &Operators<T>,
) -> Result<ThetaSystem<T>> {
    let eta = -theta * dt;
    let zeta = (T::one() - theta) * dt;
    let (dx, dy) = ops.gradient()?;
    let [v1, v2] = spec.velocity();
    let c = SparseMatrix::linear_combination(&[
        (T::one(), &ops.a),
        (eta * spec.kappa, &ops.lap_i),
        (eta * v1, dx),
        (eta * v2, dy),
    ])?;
    let d = SparseMatrix::linear_combination(&[
        (T::one(), &ops.a_i),
        (zeta * spec.kappa, &ops.lap_i),
        (zeta * v1, dx),
        (zeta * v2, dy),
    ])?;
    Ok(ThetaSystem { c, d, dt })
}

/// `C = A - (eta + beta) Lap_I`, `D = A_I + (zeta - beta) Lap_I` with
/// `eta = theta dt alpha`, `zeta = (1 - theta) dt alpha`.
pub fn build_pseudo_system<T: Real>(
    spec: &PseudoParabolicSpec<T>,
    theta: T,
    dt: T,
    ops: &Operators<T>,
) -> Result<ThetaSystem<T>> {
    let eta = theta * dt * spec.alpha;
    let zeta = (T::one() - theta) * dt * spec.alpha;
    let c = SparseMatrix::linear_combination(&[(T::one(), &ops.a), (-(eta + spec.beta), &ops.lap_i)])?;
    let d =
        SparseMatrix::linear_combination(&[(T::one(), &ops.a_i), (zeta - spec.beta, &ops.lap_i)])?;
    Ok(ThetaSystem { c, d, dt })
}

pub fn build_system<T: Real>(
    problem: &Problem<T>,
    theta: T,
    dt: T,
    ops: &Operators<T>,
) -> Result<ThetaSystem<T>> {
    match problem {
        Problem::ConvDiff(s) => build_convdiff_system(s, theta, dt, ops),
        Problem::Pseudo(s) => build_pseudo_system(s, theta, dt, ops),
    }
}

/// Right-hand side `v^{n+1}` for the step `t_prev -> t_prev + dt`.
pub fn rhs_vector<T: Real>(
    problem: &Problem<T>,
    nodes: &NodeSet<T>,
    theta: T,
    t_prev: T,
    dt: T,
) -> Vec<T> {
    let t_next = t_prev + dt;
    nodes
        .points()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if nodes.is_boundary(i) {
                return problem.exact(p, t_next);
            }
            match problem {
                Problem::ConvDiff(_) => T::zero(),
                Problem::Pseudo(s) => {
                    dt * (theta * s.forcing(p[0], p[1], t_next)
                        + (T::one() - theta) * s.forcing(p[0], p[1], t_prev))
                }
            }
        })
        .collect()
}

struct Factored<T> {
    sys: ThetaSystem<T>,
    lu: SparseLu<T>,
}

impl<T: Real> Factored<T> {
    fn new(sys: ThetaSystem<T>) -> Result<Self> {
        let lu = SparseLu::factor(&sys.c)?;
        Ok(Self { sys, lu })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions<T> {
    pub blowup_factor: T,
}

impl<T: Real> Default for StepOptions<T> {
    fn default() -> Self {
        Self {
            blowup_factor: T::lit(DEFAULT_BLOWUP_FACTOR),
        }
    }
}

/// Time loop state. `C` is factorized once and reused for every full step.
pub struct Stepper<'a, T: Real> {
    problem: Problem<T>,
    nodes: &'a NodeSet<T>,
    scheme: TimeScheme<T>,
    full: Factored<T>,
    last: Option<Factored<T>>,
    n_full: usize,
    u: Vec<T>,
    step: usize,
    t: T,
    limit: T,
    work: Vec<T>,
}

impl<'a, T: Real> Stepper<'a, T> {
    pub fn new(
        problem: Problem<T>,
        ops: &Operators<T>,
        nodes: &'a NodeSet<T>,
        scheme: TimeScheme<T>,
        u0: Vec<T>,
        options: StepOptions<T>,
    ) -> Result<Self> {
        if u0.len() != nodes.len() {
            return Err(Error::Dimension(format!(
                "initial vector has {} entries for {} nodes",
                u0.len(),
                nodes.len()
            )));
        }
        let (n_full, rest) = scheme.step_plan();
        let full = Factored::new(build_system(&problem, scheme.theta, scheme.dt, ops)?)?;
        let last = match rest {
            Some(h) => Some(Factored::new(build_system(&problem, scheme.theta, h, ops)?)?),
            None => None,
        };
        let scale = u0.iter().fold(T::one(), |m, v| m.max(v.abs()));
        Ok(Self {
            problem,
            nodes,
            scheme,
            full,
            last,
            n_full,
            limit: options.blowup_factor * scale,
            work: vec![T::zero(); u0.len()],
            u: u0,
            step: 0,
            t: T::zero(),
        })
    }

    pub fn total_steps(&self) -> usize {
        self.n_full + usize::from(self.last.is_some())
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> T {
        self.t
    }

    /// Current coefficient vector `u^n`.
    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn system_matrix(&self) -> &SparseMatrix<T> {
        &self.full.sys.c
    }

    /// 1-norm condition estimate of the full-step matrix `C`.
    pub fn condition_estimate(&self) -> T {
        cond_estimate_1norm(self.full.sys.c.norm1(), &self.full.lu)
    }

    /// Advances one step; returns `false` once the final time was reached.
    pub fn advance(&mut self) -> Result<bool> {
        if self.step >= self.total_steps() {
            return Ok(false);
        }
        let f = if self.step < self.n_full {
            &self.full
        } else {
            self.last.as_ref().expect("truncated step present")
        };
        let dt = f.sys.dt;
        let v = rhs_vector(&self.problem, self.nodes, self.scheme.theta, self.t, dt);
        f.sys.d.matvec_into(&self.u, &mut self.work);
        for (w, vi) in self.work.iter_mut().zip(&v) {
            *w += *vi;
        }
        f.lu.solve_in_place(&mut self.work);
        std::mem::swap(&mut self.u, &mut self.work);
        self.step += 1;
        self.t = if self.step <= self.n_full {
            self.scheme.time_at(self.step)
        } else {
            self.scheme.t_final
        };
        if self.u.iter().any(|x| !x.is_finite() || x.abs() > self.limit) {
            return Err(Error::BlowUp {
                step: self.step,
                time: self.t.to_f64_lossy(),
            });
        }
        Ok(true)
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.advance()? {}
        Ok(())
    }
}

/// Result of a complete solve.
#[derive(Clone, Debug)]
pub struct SolverRun<T> {
    /// Final coefficient vector `u^n`.
    pub u: Vec<T>,
    /// Nodal approximation `A u^n`.
    pub approx: Vec<T>,
    pub exact: Vec<T>,
    pub mae: T,
    pub cond_estimate: T,
    pub steps: usize,
    pub solve_seconds: f64,
}

/// Initial coefficients: the exact solution at `t = 0` sampled at the nodes.
pub fn initial_vector<T: Real>(problem: &Problem<T>, nodes: &NodeSet<T>) -> Vec<T> {
    nodes.points().iter().map(|&p| problem.exact(p, T::zero())).collect()
}

/// Steps from the exact initial data to `t_final` and measures the error there.
pub fn run<T: Real>(
    problem: &Problem<T>,
    scheme: &TimeScheme<T>,
    nodes: &NodeSet<T>,
    ops: &Operators<T>,
    options: StepOptions<T>,
) -> Result<SolverRun<T>> {
    let u0 = initial_vector(problem, nodes);
    let mut stepper = Stepper::new(*problem, ops, nodes, *scheme, u0, options)?;
    let cond_estimate = stepper.condition_estimate();
    let start = Instant::now();
    stepper.run_to_end()?;
    let solve_seconds = start.elapsed().as_secs_f64();
    let t = stepper.time();
    let u = stepper.u().to_vec();
    let approx = ops.a.matvec(&u);
    let exact: Vec<T> = nodes.points().iter().map(|&p| problem.exact(p, t)).collect();
    let mae = approx
        .iter()
        .zip(&exact)
        .fold(T::zero(), |m, (a, e)| m.max((*a - *e).abs()));
    Ok(SolverRun {
        steps: stepper.steps_taken(),
        u,
        approx,
        exact,
        mae,
        cond_estimate,
        solve_seconds,
    })
}
