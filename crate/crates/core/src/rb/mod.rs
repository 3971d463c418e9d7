//! Read–Bajraktarević operators on sampled functions and their fixed points.
//!
//! For a partition `{(X_i, u_i)}` with coefficient functions `λ_i`, `S_i`,
//! the operator acts piecewise on the images of the partition:
//!
//! ```text
//! (Φ f)(x') = λ_i(u_i⁻¹ x') + S_i(u_i⁻¹ x') · f(u_i⁻¹ x'),   x' ∈ u_i(X_i)
//! ```
//!
//! On a grid, every output node is tied once to its piece, its preimage and
//! an interpolation stencil into the input grid, so that each application is
//! a single affine pass.

mod spec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use spec::{FunctionKind, FunctionSpec, DEFAULT_PROBE, MAX_DEGREE};

use crate::error::{Error, Result};
use crate::geometry::{Partition, Point};
use crate::grid::{sup_distance, Grid, SampledFunction};

/// Fractional-index distance under which a preimage counts as a grid node.
const NODE_SNAP: f64 = 1e-9;

/// Below this many nodes an operator pass runs on the calling thread.
const PAR_THRESHOLD: usize = 1 << 12;

/// Partition plus the coefficient functions `λ_i` and `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFractalSystem {
    partition: Partition,
    lambdas: Vec<FunctionSpec>,
    scalings: Vec<FunctionSpec>,
    probe: usize,
    sup_lambdas: Vec<f64>,
    sup_scalings: Vec<f64>,
}

impl LocalFractalSystem {
    pub fn new(partition: Partition, lambdas: Vec<FunctionSpec>, scalings: Vec<FunctionSpec>) -> Result<Self> {
        let m = partition.len();
        if m == 0 {
            return Err(Error::Invalid("a system needs at least one piece".into()));
        }
        if lambdas.len() != m || scalings.len() != m {
            return Err(Error::Invalid(format!(
                "{m} pieces need {m} lambdas and {m} scalings, got {} and {}",
                lambdas.len(),
                scalings.len()
            )));
        }
        for (i, piece) in partition.pieces().iter().enumerate() {
            let tol = piece.subdomain.tol();
            for (name, spec) in [("lambda", &lambdas[i]), ("scaling", &scalings[i])] {
                if !spec.domain().approx_eq(&piece.subdomain, tol) {
                    return Err(Error::Invalid(format!(
                        "{name} {} is defined on {} but X_{} = {}",
                        i + 1,
                        spec.domain(),
                        i + 1,
                        piece.subdomain
                    )));
                }
            }
        }
        let mut sys = Self {
            partition,
            lambdas,
            scalings,
            probe: DEFAULT_PROBE,
            sup_lambdas: Vec::new(),
            sup_scalings: Vec::new(),
        };
        sys.refresh_norms();
        Ok(sys)
    }

    /// Probe count per axis for sup-norms of polynomial specs.
    pub fn with_probe(mut self, probe: usize) -> Self {
        self.probe = probe.max(2);
        self.refresh_norms();
        self
    }

    fn refresh_norms(&mut self) {
        self.sup_lambdas = self.lambdas.iter().map(|l| l.sup_norm(self.probe)).collect();
        self.sup_scalings = self.scalings.iter().map(|s| s.sup_norm(self.probe)).collect();
    }

    /// Same partition and scalings with new lambdas.
    pub fn with_lambdas(&self, lambdas: Vec<FunctionSpec>) -> Result<Self> {
        Ok(Self::new(self.partition.clone(), lambdas, self.scalings.clone())?.with_probe(self.probe))
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn lambdas(&self) -> &[FunctionSpec] {
        &self.lambdas
    }

    pub fn scalings(&self) -> &[FunctionSpec] {
        &self.scalings
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn probe(&self) -> usize {
        self.probe
    }

    /// `‖S_i‖_{∞,X_i}` for every piece.
    pub fn scaling_sup_norms(&self) -> &[f64] {
        &self.sup_scalings
    }

    pub fn lambda_sup_norms(&self) -> &[f64] {
        &self.sup_lambdas
    }

    pub fn max_scaling(&self) -> f64 {
        self.sup_scalings.iter().copied().fold(0.0, f64::max)
    }

    /// Returns `max_i ‖S_i‖` when it is below one.
    pub fn check_contraction(&self) -> Result<f64> {
        let s = self.max_scaling();
        if s < 1.0 {
            Ok(s)
        } else {
            Err(Error::Contraction { max_sup: s })
        }
    }

    /// `max ‖λ_i‖ / (1 − max ‖S_i‖)`, an upper bound for `‖𝔣‖_∞`; infinite
    /// when the operator is not contractive.
    pub fn fixed_point_bound(&self) -> f64 {
        let s = self.max_scaling();
        if s >= 1.0 {
            return f64::INFINITY;
        }
        self.sup_lambdas.iter().copied().fold(0.0, f64::max) / (1.0 - s)
    }
}

#[derive(Clone, Copy, Debug)]
struct Stencil {
    idx: [usize; 4],
    w: [f64; 4],
    len: usize,
}

impl Stencil {
    fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        let mut s = Stencil { idx: [0; 4], w: [0.0; 4], len: pairs.len() };
        for (k, &(i, w)) in pairs.iter().enumerate() {
            s.idx[k] = i;
            s.w[k] = w;
        }
        s
    }

    #[inline]
    fn eval(&self, f: &[f64]) -> f64 {
        (0..self.len).map(|k| self.w[k] * f[self.idx[k]]).sum()
    }
}

/// The RB operator discretised between an input and an output grid.
#[derive(Clone, Debug)]
pub struct RbOperator {
    input: Grid,
    output: Grid,
    piece: Vec<usize>,
    offset: Vec<f64>,
    factor: Vec<f64>,
    stencil: Vec<Stencil>,
    compatible: bool,
}

impl RbOperator {
    pub fn new(sys: &LocalFractalSystem, input: Grid, output: Grid) -> Result<Self> {
        let part = sys.partition();
        if !input.domain().approx_eq(part.domain(), part.domain().tol())
            || !output.domain().approx_eq(part.domain(), part.domain().tol())
        {
            return Err(Error::Config("grids must cover the system's domain".into()));
        }
        let n = output.len();
        let mut piece = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        let mut factor = Vec::with_capacity(n);
        let mut stencil = Vec::with_capacity(n);
        let mut compatible = true;
        let mut hits = vec![0usize; sys.len()];
        for x in output.nodes() {
            let (i, y) = part.locate(&x)?;
            hits[i] += 1;
            piece.push(i);
            offset.push(sys.lambdas[i].eval(&y));
            factor.push(sys.scalings[i].eval(&y));
            let pairs = input.stencil(&y, NODE_SNAP);
            compatible &= pairs.len() == 1;
            stencil.push(Stencil::from_pairs(&pairs));
        }
        if let Some(i) = hits.iter().position(|&h| h == 0) {
            return Err(Error::Config(format!(
                "no grid node of level {} falls in the image of piece {}; refine the grid",
                output.level(),
                i + 1
            )));
        }
        Ok(Self { input, output, piece, offset, factor, stencil, compatible })
    }

    pub fn on_grid(sys: &LocalFractalSystem, grid: Grid) -> Result<Self> {
        Self::new(sys, grid, grid)
    }

    pub fn input_grid(&self) -> &Grid {
        &self.input
    }

    pub fn output_grid(&self) -> &Grid {
        &self.output
    }

    /// Every preimage of an output node is an input node, so one pass is
    /// exact (no interpolation).
    pub fn is_grid_compatible(&self) -> bool {
        self.compatible
    }

    /// 0-based piece owning output node `k`.
    pub fn piece_of(&self, k: usize) -> usize {
        self.piece[k]
    }

    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        if f.grid() != &self.input {
            return Err(Error::Config("function is not sampled on the operator's input grid".into()));
        }
        let mut out = vec![0.0; self.output.len()];
        self.apply_values(f.values(), &mut out);
        SampledFunction::new(self.output, out)
    }

    /// Output values of the affine part only (`f ≡ 0`).
    pub fn offsets(&self) -> &[f64] {
        &self.offset
    }

    fn apply_values(&self, f: &[f64], out: &mut [f64]) {
        let body = |(k, o): (usize, &mut f64)| {
            *o = self.offset[k] + self.factor[k] * self.stencil[k].eval(f);
        };
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(body);
        } else {
            out.iter_mut().enumerate().for_each(body);
        }
    }

    /// `‖Φg − Φh‖_∞`, i.e. the sup-norm of the linear part applied to `g − h`.
    fn linear_sup(&self, diff: &[f64]) -> f64 {
        (0..self.output.len()).fold(0.0, |m, k| m.max((self.factor[k] * self.stencil[k].eval(diff)).abs()))
    }
}

/// One application of the RB operator on `f`'s own grid.
pub fn rb_apply(sys: &LocalFractalSystem, f: &SampledFunction) -> Result<SampledFunction> {
    RbOperator::on_grid(sys, *f.grid())?.apply(f)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    /// Grid level `L`: `2^L + 1` nodes per axis.
    pub level: u32,
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { level: 12, tol: 1e-10, max_iter: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    /// Operator applications that produced the returned iterate.
    pub iterations: usize,
    /// `‖Φ𝔣 − 𝔣‖_∞` of the returned iterate.
    pub final_residual: f64,
    /// Per iteration `k`: `‖Φf_k − Φf_{k−1}‖ / ‖f_k − f_{k−1}‖`.
    pub contraction_history: Vec<f64>,
    /// Per iteration `k`: `‖f_k − f_{k−1}‖_∞`.
    pub step_changes: Vec<f64>,
    pub converged: bool,
    pub grid_compatible: bool,
}

/// Iterates the RB operator from the zero function.
pub fn fixed_point(sys: &LocalFractalSystem, settings: &SolverSettings) -> Result<(SampledFunction, SolveDiagnostics)> {
    let grid = Grid::new(*sys.partition().domain(), settings.level)?;
    fixed_point_from(sys, settings, &SampledFunction::zeros(grid))
}

/// Iterates the RB operator from `initial` until `‖Φf − f‖_∞ < tol` and
/// returns `Φf` of that last iterate, which is within `max‖S‖·tol/(1 − max‖S‖)`
/// of the fixed point.
///
/// The residual of an iterate equals the step change of the next one, so the
/// residual test alone settles both halves of the stopping rule. Running out
/// of iterations is reported through `converged = false`, not as an error.
pub fn fixed_point_from(
    sys: &LocalFractalSystem,
    settings: &SolverSettings,
    initial: &SampledFunction,
) -> Result<(SampledFunction, SolveDiagnostics)> {
    sys.check_contraction()?;
    if !(settings.tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {}", settings.tol)));
    }
    let op = RbOperator::on_grid(sys, *initial.grid())?;
    let mut current = initial.values().to_vec();
    let mut next = vec![0.0; current.len()];
    op.apply_values(&current, &mut next);
    let mut residual = sup_distance(&next, &current);
    let mut diag = SolveDiagnostics {
        iterations: 0,
        final_residual: residual,
        contraction_history: Vec::new(),
        step_changes: Vec::new(),
        converged: residual < settings.tol,
        grid_compatible: op.is_grid_compatible(),
    };
    while !diag.converged && diag.iterations < settings.max_iter {
        std::mem::swap(&mut current, &mut next);
        diag.step_changes.push(residual);
        op.apply_values(&current, &mut next);
        let r = sup_distance(&next, &current);
        diag.contraction_history.push(if residual > 0.0 { r / residual } else { 0.0 });
        residual = r;
        diag.iterations += 1;
        diag.final_residual = r;
        diag.converged = r < settings.tol;
    }
    Ok((SampledFunction::new(*initial.grid(), next)?, diag))
}

/// Largest violation of `f(u_i(y)) = λ_i(y) + S_i(y)·f(y)` over grid nodes
/// `y` owned by piece `i` whose image is again a grid node, with the number
/// of such nodes.
pub fn self_referential_defect(sys: &LocalFractalSystem, f: &SampledFunction) -> Result<(f64, usize)> {
    let grid = f.grid();
    let part = sys.partition();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (k, y) in grid.nodes().enumerate() {
        for (i, piece) in part.pieces().iter().enumerate() {
            if !part.owns(i, &y) {
                continue;
            }
            let Some(img) = grid.node_index_of(&piece.map.apply(&y), NODE_SNAP) else {
                continue;
            };
            let rhs = sys.lambdas[i].eval(&y) + sys.scalings[i].eval(&y) * f.values()[k];
            worst = worst.max((f.values()[img] - rhs).abs());
            checked += 1;
        }
    }
    Ok((worst, checked))
}

/// Pointwise value from unrolling the self-referential equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactValue {
    pub value: f64,
    /// Bound on the neglected tail `Π S · 𝔣(·)`.
    pub tail_bound: f64,
    pub depth_reached: usize,
    /// The address chain left the domain before `depth` steps; the tail was
    /// taken as zero.
    pub exited: bool,
}

/// `Σ_{k<depth} (Π_{j<k} S_{i_j}) λ_{i_k}` along the address of `x`.
pub fn evaluate_exact(sys: &LocalFractalSystem, x: &Point, depth: usize) -> Result<ExactValue> {
    if depth == 0 {
        return Err(Error::Invalid("depth must be at least 1".into()));
    }
    let part = sys.partition();
    let (mut i, mut y) = part.locate(x)?;
    let mut value = 0.0;
    let mut weight = 1.0;
    let mut reached = 0;
    let mut exited = false;
    loop {
        value += weight * sys.lambdas[i].eval(&y);
        weight *= sys.scalings[i].eval(&y);
        reached += 1;
        if reached == depth || weight == 0.0 {
            break;
        }
        match part.locate(&y) {
            Ok((j, z)) => {
                i = j;
                y = z;
            }
            Err(_) => {
                exited = true;
                break;
            }
        }
    }
    let tail_bound = if exited || weight == 0.0 { 0.0 } else { weight.abs() * sys.fixed_point_bound() };
    Ok(ExactValue { value, tail_bound, depth_reached: reached, exited })
}

/// Empirical Lipschitz constant of the operator in the sup-norm: the largest
/// `‖Φg − Φh‖_∞ / ‖g − h‖_∞` over `trials` random pairs on a level-`level`
/// grid. Deterministic in `seed`.
pub fn sup_contraction_estimate(sys: &LocalFractalSystem, level: u32, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Invalid("at least one trial is required".into()));
    }
    let grid = Grid::new(*sys.partition().domain(), level)?;
    let op = RbOperator::on_grid(sys, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut diff = vec![0.0; grid.len()];
    for _ in 0..trials {
        for d in diff.iter_mut() {
            // g − h for independent uniform g, h on [−1, 1]
            *d = rng.gen_range(-1.0..=1.0) - rng.gen_range(-1.0..=1.0);
        }
        let denom = diff.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs()));
        if denom > 0.0 {
            best = best.max(op.linear_sup(&diff) / denom);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearityCheck {
    /// `‖𝔣(aλ + bλ′) − a𝔣(λ) − b𝔣(λ′)‖_∞` on the grid.
    pub deviation: f64,
    pub tol: f64,
}

impl LinearityCheck {
    pub fn holds(&self) -> bool {
        self.deviation <= self.tol
    }
}

/// Solves for `λ`, `λ′` and `aλ + bλ′` with shared scalings and compares.
pub fn lambda_linearity_check(
    sys_a: &LocalFractalSystem,
    sys_b: &LocalFractalSystem,
    a: f64,
    b: f64,
    tol: f64,
    settings: &SolverSettings,
) -> Result<LinearityCheck> {
    if sys_a.partition() != sys_b.partition() || sys_a.scalings() != sys_b.scalings() {
        return Err(Error::Invalid("systems must share partition and scalings".into()));
    }
    let lambdas = sys_a
        .lambdas()
        .iter()
        .zip(sys_b.lambdas())
        .map(|(la, lb)| FunctionSpec::linear_combination(a, la, b, lb))
        .collect::<Result<Vec<_>>>()?;
    let sys_ab = sys_a.with_lambdas(lambdas)?;
    let solve = |s: &LocalFractalSystem| -> Result<SampledFunction> {
        let (f, d) = fixed_point(s, settings)?;
        if !d.converged {
            return Err(Error::Config(format!(
                "fixed point did not converge in {} iterations (residual {})",
                d.iterations, d.final_residual
            )));
        }
        Ok(f)
    };
    let fa = solve(sys_a)?;
    let fb = solve(sys_b)?;
    let fab = solve(&sys_ab)?;
    let deviation = fab.sup_distance(&fa.combine(a, &fb, b)?);
    Ok(LinearityCheck { deviation, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisBox, Piece, Similitude};

    fn halving_partition() -> Partition {
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        Partition::new(
            x,
            vec![
                Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.0).unwrap() },
                Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.5).unwrap() },
            ],
        )
        .unwrap()
    }

    fn constant_system(lambda: f64, s: [f64; 2]) -> LocalFractalSystem {
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        LocalFractalSystem::new(
            halving_partition(),
            vec![FunctionSpec::constant(lambda, x).unwrap(); 2],
            s.iter().map(|&c| FunctionSpec::constant(c, x).unwrap()).collect(),
        )
        .unwrap()
    }

    /// λ₁(x) = x, λ₂(x) = 1 − x, S ≡ 1/2.
    fn affine_system() -> LocalFractalSystem {
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        LocalFractalSystem::new(
            halving_partition(),
            vec![
                FunctionSpec::polynomial(vec![0.0, 1.0], x).unwrap(),
                FunctionSpec::polynomial(vec![1.0, -1.0], x).unwrap(),
            ],
            vec![FunctionSpec::constant(0.5, x).unwrap(); 2],
        )
        .unwrap()
    }

    fn grid(level: u32) -> Grid {
        Grid::new(AxisBox::interval(0.0, 1.0).unwrap(), level).unwrap()
    }

    fn at(f: &SampledFunction, x: f64) -> f64 {
        f.values()[f.grid().node_index_of(&Point::x(x), 1e-9).unwrap()]
    }

    #[test]
    fn zero_scalings_ignore_the_input() {
        let sys = affine_system();
        let zero = sys.with_lambdas(sys.lambdas().to_vec()).unwrap();
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        let zero = LocalFractalSystem::new(
            zero.partition().clone(),
            zero.lambdas().to_vec(),
            vec![FunctionSpec::constant(0.0, x).unwrap(); 2],
        )
        .unwrap();
        let g = grid(6);
        let a = rb_apply(&zero, &SampledFunction::from_fn(g, |p| p[0].sin())).unwrap();
        let b = rb_apply(&zero, &SampledFunction::zeros(g)).unwrap();
        assert_eq!(a, b);
        assert_eq!(at(&a, 0.25), 0.5);
        assert_eq!(at(&a, 0.75), 0.5);
    }

    #[test]
    fn one_step_examples() {
        let sys = constant_system(1.0, [0.5, 0.5]);
        let g = grid(5);
        let from_zero = rb_apply(&sys, &SampledFunction::zeros(g)).unwrap();
        assert!(from_zero.values().iter().all(|&v| v == 1.0));
        let from_two = rb_apply(&sys, &SampledFunction::from_fn(g, |_| 2.0)).unwrap();
        assert!(from_two.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn constant_fixed_point() {
        let sys = constant_system(1.0, [0.5, 0.5]);
        let (f, d) = fixed_point(&sys, &SolverSettings { level: 8, ..Default::default() }).unwrap();
        assert!(d.converged && d.grid_compatible);
        assert!(f.values().iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert_eq!(d.contraction_history.len(), d.iterations);
    }

    #[test]
    fn affine_fixed_point_dyadic_values() {
        let (f, d) = fixed_point(&affine_system(), &SolverSettings { level: 10, ..Default::default() }).unwrap();
        assert!(d.converged);
        assert!(at(&f, 0.0).abs() < 1e-9);
        for x in [0.25, 0.5, 0.75] {
            assert!((at(&f, x) - 1.0).abs() < 1e-9, "f({x}) = {}", at(&f, x));
        }
        let (defect, n) = self_referential_defect(&affine_system(), &f).unwrap();
        assert!(n > 1000);
        assert!(defect <= 2e-10, "{defect}");
    }

    #[test]
    fn zero_scalings_converge_in_one_iteration() {
        let sys = constant_system(3.0, [0.0, 0.0]);
        let g = grid(6);
        let start = SampledFunction::from_fn(g, |p| 10.0 * p[0]);
        let (f, d) = fixed_point_from(&sys, &SolverSettings::default(), &start).unwrap();
        assert_eq!(d.iterations, 1);
        assert_eq!(d.final_residual, 0.0);
        assert!(f.values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn contraction_precondition() {
        let sys = constant_system(1.0, [1.0, 0.2]);
        match fixed_point(&sys, &SolverSettings::default()) {
            Err(Error::Contraction { max_sup }) => assert_eq!(max_sup, 1.0),
            other => panic!("expected contraction error, got {other:?}"),
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let sys = constant_system(1.0, [0.9, 0.9]);
        let (_, d) = fixed_point(&sys, &SolverSettings { level: 4, tol: 1e-12, max_iter: 5 }).unwrap();
        assert!(!d.converged);
        assert_eq!(d.iterations, 5);
        assert!(d.final_residual > 1e-12);
    }

    #[test]
    fn exact_evaluation() {
        let sys = constant_system(1.0, [0.5, 0.5]);
        let v = evaluate_exact(&sys, &Point::x(0.37), 30).unwrap();
        assert!((v.value - 2.0 * (1.0 - 0.5f64.powi(30))).abs() < 1e-15);
        assert!((v.value - 2.0).abs() < 1e-8);
        assert!(v.tail_bound <= 0.5f64.powi(30) * 2.0 + 1e-18);

        let aff = affine_system();
        for depth in [2, 5, 40] {
            assert_eq!(evaluate_exact(&aff, &Point::x(0.25), depth).unwrap().value, 1.0);
        }

        let zero = constant_system(1.5, [0.0, 0.0]);
        let v = evaluate_exact(&zero, &Point::x(0.8), 1).unwrap();
        assert_eq!((v.value, v.tail_bound), (1.5, 0.0));
        assert!(evaluate_exact(&zero, &Point::x(2.0), 3).is_err());
    }

    #[test]
    fn exact_evaluation_agrees_with_solver() {
        let sys = affine_system();
        let settings = SolverSettings { level: 8, ..Default::default() };
        let (f, _) = fixed_point(&sys, &settings).unwrap();
        for (k, x) in f.grid().nodes().enumerate().step_by(7) {
            let e = evaluate_exact(&sys, &x, 40).unwrap();
            assert!((e.value - f.values()[k]).abs() <= settings.tol + e.tail_bound + 1e-12);
        }
    }

    #[test]
    fn contraction_estimates() {
        let half = sup_contraction_estimate(&constant_system(1.0, [0.5, 0.5]), 8, 20, 7).unwrap();
        assert!(half <= 0.5 + 1e-9 && half > 0.4);
        let zero = sup_contraction_estimate(&constant_system(1.0, [0.0, 0.0]), 8, 5, 7).unwrap();
        assert_eq!(zero, 0.0);
        let mixed = sup_contraction_estimate(&constant_system(1.0, [0.9, 0.1]), 8, 20, 7).unwrap();
        assert!((0.5..=0.9 + 1e-9).contains(&mixed));
        let again = sup_contraction_estimate(&constant_system(1.0, [0.9, 0.1]), 8, 20, 7).unwrap();
        assert_eq!(mixed, again);
    }

    #[test]
    fn linearity_examples() {
        let settings = SolverSettings { level: 8, ..Default::default() };
        let sys = affine_system();
        assert!(lambda_linearity_check(&sys, &sys, 1.0, 0.0, 1e-12, &settings).unwrap().holds());
        let c = constant_system(1.0, [0.5, 0.5]);
        let check = lambda_linearity_check(&c, &c, 1.0, 1.0, 1e-9, &settings).unwrap();
        assert!(check.holds());
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        let other = sys
            .with_lambdas(vec![
                FunctionSpec::polynomial(vec![0.3, -1.0, 2.0], x).unwrap(),
                FunctionSpec::constant(-0.4, x).unwrap(),
            ])
            .unwrap();
        let check = lambda_linearity_check(&sys, &other, 2.0, -1.0, 10.0 * settings.tol, &settings).unwrap();
        assert!(check.holds(), "{check:?}");
    }

    #[test]
    fn uniqueness_from_different_starts() {
        let sys = affine_system();
        let settings = SolverSettings { level: 9, ..Default::default() };
        let g = grid(9);
        let (a, _) = fixed_point_from(&sys, &settings, &SampledFunction::zeros(g)).unwrap();
        let (b, _) = fixed_point_from(&sys, &settings, &SampledFunction::from_fn(g, |p| 5.0 - 3.0 * p[0])).unwrap();
        assert!(a.sup_distance(&b) <= 2.0 * settings.tol);
    }

    #[test]
    fn coarse_grid_is_a_configuration_error() {
        // middle image [0.6, 0.7) holds no node of a level-1 grid
        let x = AxisBox::interval(0.0, 1.0).unwrap();
        let half = AxisBox::interval(0.0, 0.5).unwrap();
        let p = Partition::new(
            x,
            vec![
                Piece { subdomain: x, map: Similitude::affine_1d(0.6, 0.0).unwrap() },
                Piece { subdomain: half, map: Similitude::affine_1d(0.2, 0.6).unwrap() },
                Piece { subdomain: x, map: Similitude::affine_1d(0.3, 0.7).unwrap() },
            ],
        )
        .unwrap();
        let c = |v: f64, d: AxisBox| FunctionSpec::constant(v, d).unwrap();
        let sys = LocalFractalSystem::new(
            p,
            vec![c(1.0, x), c(1.0, half), c(1.0, x)],
            vec![c(0.1, x), c(0.1, half), c(0.1, x)],
        )
        .unwrap();
        assert!(matches!(rb_apply(&sys, &SampledFunction::zeros(grid(1))), Err(Error::Config(_))));
        assert!(rb_apply(&sys, &SampledFunction::zeros(grid(6))).is_ok());
    }

    #[test]
    fn two_dimensional_constant_system() {
        let x = AxisBox::unit(2);
        let pieces = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]
            .iter()
            .map(|&(a, b)| Piece {
                subdomain: x,
                map: Similitude::new(0.5, crate::geometry::Ortho::identity(2), Point::xy(a, b)).unwrap(),
            })
            .collect();
        let part = Partition::new(x, pieces).unwrap();
        let sys = LocalFractalSystem::new(
            part,
            vec![FunctionSpec::constant(1.0, x).unwrap(); 4],
            vec![FunctionSpec::constant(0.25, x).unwrap(); 4],
        )
        .unwrap();
        let (f, d) = fixed_point(&sys, &SolverSettings { level: 5, ..Default::default() }).unwrap();
        assert!(d.grid_compatible && d.converged);
        assert!(f.values().iter().all(|v| (v - 4.0 / 3.0).abs() < 1e-9));
    }
}
