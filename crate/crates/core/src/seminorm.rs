//! Difference-based Besov and Triebel–Lizorkin seminorms of sampled functions.
//!
//! Differences are domain-restricted: `Δ_h^M f(x; X)` is zero as soon as one
//! of the nodes `x + μh` leaves the closed domain. The measure `dh/|h|^n` is
//! discretised on a geometric set of radii between `h_min` and `h_max`
//! (log-midpoint weights) times a set of directions (the two signs in 1-D,
//! `D` uniform angles in 2-D).

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::{Family, SpaceParams};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Partition, Point};
use crate::grid::{Grid, SampledFunction};

/// Relative change under `h_min` halving above which an estimate is flagged.
pub const DIVERGENCE_RATIO: f64 = 0.2;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("exponent must be positive, got {p}")))
    }
}

/// Composite trapezoid (`p < ∞`) or grid maximum (`p = ∞`) of `‖f‖_{L^p(X)}`.
pub fn lp_norm_grid(f: &SampledFunction, p: f64) -> Result<f64> {
    check_p(p)?;
    let g = f.grid();
    if p == f64::INFINITY {
        return Ok(f.sup_norm());
    }
    let sum: f64 = f.values().iter().enumerate().map(|(k, v)| g.trapezoid_weight(k) * v.abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// Signed coefficients `(−1)^{M−μ} C(M, μ)`, `μ = 0..=M`.
pub fn difference_coefficients(order: u32) -> Vec<f64> {
    let m = order as usize;
    let mut c = vec![1.0f64; m + 1];
    for mu in 1..=m {
        c[mu] = c[mu - 1] * (m + 1 - mu) as f64 / mu as f64;
    }
    for (mu, v) in c.iter_mut().enumerate() {
        if (m - mu) % 2 == 1 {
            *v = -*v;
        }
    }
    c
}

/// `Δ_h^M f(x; X)`: the binomial sum when every `x + μh` lies in the closure
/// of `domain`, zero otherwise. Off-grid values are interpolated.
pub fn forward_difference(f: &SampledFunction, x: &Point, h: &Point, order: u32, domain: &AxisBox) -> f64 {
    let tol = domain.tol();
    let coeffs = difference_coefficients(order);
    let mut acc = 0.0;
    for (mu, c) in coeffs.iter().enumerate() {
        let y = *x + *h * mu as f64;
        if !domain.contains_closed(&y, tol) {
            return 0.0;
        }
        acc += c * f.value_at(&y);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HGridSettings {
    /// Defaults to four grid spacings.
    pub h_min: Option<f64>,
    /// Defaults to the domain diameter.
    pub h_max: Option<f64>,
    pub radii: usize,
    /// Number of angles in 2-D; ignored in 1-D.
    pub directions: usize,
}

impl Default for HGridSettings {
    fn default() -> Self {
        Self { h_min: None, h_max: None, radii: 64, directions: 64 }
    }
}

/// One sampled step `h` with its quadrature weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub h: Point,
    pub radius: f64,
    /// Angle in 2-D; `0` or `π` in 1-D.
    pub theta: f64,
    pub weight: f64,
    /// Node offset along the axis when `h` is a multiple of the grid spacing.
    lattice: Option<isize>,
}

/// Quadrature for `∫ g(h) dh/|h|^n` over `h_min ≤ |h| ≤ h_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct HGrid {
    grid: Grid,
    settings: HGridSettings,
    h_min: f64,
    h_max: f64,
    radii: Vec<f64>,
    steps: Vec<Step>,
}

/// Log-midpoint weights: cell boundaries at geometric midpoints, half cells
/// at both ends. They add up to `log(r_last / r_first)`.
fn log_weights(radii: &[f64]) -> Vec<f64> {
    let k = radii.len();
    (0..k)
        .map(|j| {
            let lo = if j == 0 { radii[0] } else { (radii[j - 1] * radii[j]).sqrt() };
            let hi = if j + 1 == k { radii[k - 1] } else { (radii[j] * radii[j + 1]).sqrt() };
            (hi / lo).ln()
        })
        .collect()
}

impl HGrid {
    /// Steps adapted to `grid`. In 1-D every radius is snapped to a whole
    /// number of grid spacings, so differences read nodes directly.
    pub fn for_grid(grid: &Grid, settings: &HGridSettings) -> Result<Self> {
        let dx = grid.max_spacing();
        let h_min = settings.h_min.unwrap_or(4.0 * dx);
        let h_max = settings.h_max.unwrap_or(grid.domain().diameter());
        if !(h_min.is_finite() && h_max.is_finite()) {
            return Err(Error::Config("h range must be finite".into()));
        }
        if h_min < dx * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "h_min = {h_min} is below the grid spacing; the minimum admissible value is {dx}"
            )));
        }
        if !(h_max > h_min) {
            return Err(Error::Config(format!("need h_min < h_max, got {h_min} and {h_max}")));
        }
        if settings.radii < 2 {
            return Err(Error::Config("at least two radii are required".into()));
        }
        let ratio = (h_max / h_min).powf(1.0 / (settings.radii - 1) as f64);
        let geometric: Vec<f64> = (0..settings.radii)
            .map(|j| if j + 1 == settings.radii { h_max } else { h_min * ratio.powi(j as i32) })
            .collect();
        let mut steps = Vec::new();
        let radii = if grid.dim() == 1 {
            let mut mult: Vec<usize> = geometric.iter().map(|r| ((r / dx).round() as usize).max(1)).collect();
            mult.dedup();
            if mult.len() < 2 {
                return Err(Error::Config("h range collapses to a single lattice step".into()));
            }
            let radii: Vec<f64> = mult.iter().map(|&k| k as f64 * dx).collect();
            let w = log_weights(&radii);
            for (j, &k) in mult.iter().enumerate() {
                for sign in [1isize, -1] {
                    steps.push(Step {
                        h: Point::x(sign as f64 * radii[j]),
                        radius: radii[j],
                        theta: if sign > 0 { 0.0 } else { std::f64::consts::PI },
                        weight: w[j],
                        lattice: Some(sign * k as isize),
                    });
                }
            }
            radii
        } else {
            if settings.directions < 1 {
                return Err(Error::Config("at least one direction is required".into()));
            }
            let w = log_weights(&geometric);
            let dtheta = std::f64::consts::TAU / settings.directions as f64;
            for (j, &r) in geometric.iter().enumerate() {
                for d in 0..settings.directions {
                    let theta = d as f64 * dtheta;
                    steps.push(Step {
                        h: Point::xy(r * theta.cos(), r * theta.sin()),
                        radius: r,
                        theta,
                        weight: w[j] * dtheta,
                        lattice: None,
                    });
                }
            }
            geometric
        };
        Ok(Self {
            grid: *grid,
            settings: *settings,
            h_min: radii[0],
            h_max: *radii.last().expect("at least two radii"),
            radii,
            steps,
        })
    }

    /// Same construction with `h_min` halved and the radius density kept;
    /// `None` when the halved value drops below the grid spacing.
    pub fn refined(&self) -> Option<Self> {
        let h_min = self.h_min / 2.0;
        if h_min < self.grid.max_spacing() * (1.0 - 1e-12) {
            return None;
        }
        let k = self.settings.radii;
        let extra = ((k - 1) as f64 * 2f64.ln() / (self.h_max / self.h_min).ln()).ceil() as usize;
        let settings = HGridSettings { h_min: Some(h_min), h_max: Some(self.h_max), radii: k + extra, ..self.settings };
        Self::for_grid(&self.grid, &settings).ok()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn total_weight(&self) -> f64 {
        self.steps.iter().map(|s| s.weight).sum()
    }
}

/// Which differences enter an estimate, relative to the pieces of a
/// partition: interior differences have all nodes in one piece image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    All,
    Interior,
    Boundary,
}

/// Node offset and interpolation weight of `x + μh` relative to `x`, per axis.
#[derive(Clone, Copy)]
struct Shift {
    base: [isize; 2],
    w: [f64; 2],
}

struct DiffEval<'a> {
    f: &'a SampledFunction,
    coeffs: Vec<f64>,
    lattice: bool,
    steps: &'a [Step],
    /// Per step, one shift per difference node; empty when the step is on the lattice.
    shifts: Vec<Vec<Shift>>,
    split: Option<(&'a Partition, Region)>,
}

const SNAP: f64 = 1e-9;

impl<'a> DiffEval<'a> {
    fn new(f: &'a SampledFunction, order: u32, hg: &'a HGrid, split: Option<(&'a Partition, Region)>) -> Self {
        let coeffs = difference_coefficients(order);
        let lattice = hg.grid == *f.grid();
        let grid = f.grid();
        let shifts = hg
            .steps
            .iter()
            .map(|st| {
                if lattice && st.lattice.is_some() {
                    return Vec::new();
                }
                (0..coeffs.len())
                    .map(|mu| {
                        let mut sh = Shift { base: [0; 2], w: [0.0; 2] };
                        for k in 0..grid.dim() {
                            let t = st.h[k] * mu as f64 / grid.spacing(k);
                            let mut b = t.floor();
                            let mut w = t - b;
                            if w < SNAP {
                                w = 0.0;
                            } else if w > 1.0 - SNAP {
                                b += 1.0;
                                w = 0.0;
                            }
                            sh.base[k] = b as isize;
                            sh.w[k] = w;
                        }
                        sh
                    })
                    .collect()
            })
            .collect();
        Self { f, coeffs, lattice, steps: &hg.steps, shifts, split }
    }

    fn keep(&self, x: &Point, h: &Point) -> bool {
        let Some((part, region)) = self.split else { return true };
        if region == Region::All {
            return true;
        }
        let piece = |y: &Point| part.locate(y).map(|(i, _)| i).ok();
        let first = piece(x);
        let interior = first.is_some() && (1..self.coeffs.len()).all(|mu| piece(&(*x + *h * mu as f64)) == first);
        interior == (region == Region::Interior)
    }

    /// `Δ_h^M f` at a node for step `j`, zero when a difference node leaves the closed domain.
    fn at(&self, node: usize, j: usize) -> f64 {
        let grid = self.f.grid();
        let v = self.f.values();
        let step = &self.steps[j];
        let acc = match (self.lattice, step.lattice) {
            (true, Some(k)) => {
                let last = (self.coeffs.len() - 1) as isize;
                let end = node as isize + last * k;
                if end < 0 || end > grid.intervals() as isize {
                    return 0.0;
                }
                self.coeffs
                    .iter()
                    .enumerate()
                    .map(|(mu, c)| c * v[(node as isize + mu as isize * k) as usize])
                    .sum()
            }
            _ => {
                let n = grid.intervals() as isize;
                let idx = grid.multi_index(node);
                let mut acc = 0.0;
                for (c, sh) in self.coeffs.iter().zip(&self.shifts[j]) {
                    let mut at = [0usize; 2];
                    for k in 0..grid.dim() {
                        let i = idx[k] as isize + sh.base[k];
                        if i < 0 || i > n || (sh.w[k] > 0.0 && i == n) {
                            return 0.0;
                        }
                        at[k] = i as usize;
                    }
                    let val = match grid.dim() {
                        1 => {
                            let a = v[at[0]];
                            if sh.w[0] > 0.0 { a + sh.w[0] * (v[at[0] + 1] - a) } else { a }
                        }
                        _ => {
                            let (wx, wy) = (sh.w[0], sh.w[1]);
                            let (i1, j1) = (at[0] + usize::from(wx > 0.0), at[1] + usize::from(wy > 0.0));
                            let f = |a: usize, b: usize| v[grid.flat_index([a, b])];
                            (1.0 - wx) * (1.0 - wy) * f(at[0], at[1])
                                + wx * (1.0 - wy) * f(i1, at[1])
                                + (1.0 - wx) * wy * f(at[0], j1)
                                + wx * wy * f(i1, j1)
                        }
                    };
                    acc += c * val;
                }
                acc
            }
        };
        if self.split.is_some() && !self.keep(&grid.node(node), &step.h) {
            return 0.0;
        }
        acc
    }
}

/// `|v|^p` with the common exponents spelled out.
fn abs_pow(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else if p == 1.0 {
        v.abs()
    } else {
        v.abs().powf(p)
    }
}

/// `‖·‖_{L^p}` over grid nodes of a per-node quantity.
fn node_lp(grid: &Grid, vals: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == f64::INFINITY {
        return vals.fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = vals.enumerate().map(|(k, v)| grid.trapezoid_weight(k) * abs_pow(v, p)).sum();
    sum.powf(1.0 / p)
}

/// `(Σ w_j a_j^q)^{1/q}`, or `max a_j` at `q = ∞`.
fn weighted_lq(terms: impl Iterator<Item = (f64, f64)>, q: f64) -> f64 {
    if q == f64::INFINITY {
        terms.fold(0.0, |m, (_, a)| m.max(a))
    } else {
        terms.map(|(w, a)| w * abs_pow(a, q)).sum::<f64>().powf(1.0 / q)
    }
}

fn check_estimator(f: &SampledFunction, sp: &SpaceParams, family: Family) -> Result<()> {
    if sp.n() != f.grid().dim() {
        return Err(Error::Parameter(format!(
            "space dimension {} does not match the sampled function's dimension {}",
            sp.n(),
            f.grid().dim()
        )));
    }
    if family == Family::TriebelLizorkin && sp.p() == f64::INFINITY {
        return Err(Error::Parameter("Triebel-Lizorkin seminorms need p < inf".into()));
    }
    if family == Family::Lebesgue {
        return Err(Error::Parameter("Lebesgue spaces carry no difference seminorm".into()));
    }
    Ok(())
}

/// `|h|^{-s}‖Δ_h^M f‖_{L^p}` for every step of `hg` (the Besov h-profile).
fn besov_profile(ev: &DiffEval, sp: &SpaceParams, hg: &HGrid) -> Vec<f64> {
    let grid = ev.f.grid();
    hg.steps
        .par_iter()
        .enumerate()
        .map(|(j, st)| {
            st.radius.powf(-sp.s()) * node_lp(grid, (0..grid.len()).map(|k| ev.at(k, j)), sp.p())
        })
        .collect()
}

fn besov_value(ev: &DiffEval, sp: &SpaceParams, hg: &HGrid) -> f64 {
    let prof = besov_profile(ev, sp, hg);
    weighted_lq(hg.steps.iter().zip(&prof).map(|(st, a)| (st.weight, *a)), sp.q())
}

fn triebel_value(ev: &DiffEval, sp: &SpaceParams, hg: &HGrid) -> f64 {
    let grid = ev.f.grid();
    let inner: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            weighted_lq(
                hg.steps.iter().enumerate().map(|(j, st)| (st.weight, st.radius.powf(-sp.s()) * ev.at(k, j).abs())),
                sp.q(),
            )
        })
        .collect();
    node_lp(grid, inner.into_iter(), sp.p())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub level: u32,
    /// Estimate with `h_min` halved, when that still resolves on the grid.
    pub refined_value: Option<f64>,
    /// Halving `h_min` moved the estimate by more than 20%.
    pub divergence_flag: bool,
}

fn estimate(
    f: &SampledFunction,
    sp: &SpaceParams,
    hg: &HGrid,
    family: Family,
    split: Option<(&Partition, Region)>,
) -> Result<SeminormEstimate> {
    check_estimator(f, sp, family)?;
    let run = |g: &HGrid| {
        let ev = DiffEval::new(f, sp.order(), g, split);
        match family {
            Family::Besov => besov_value(&ev, sp, g),
            _ => triebel_value(&ev, sp, g),
        }
    };
    let value = run(hg);
    let refined_value = hg.refined().map(|g| run(&g));
    let divergence_flag = refined_value.is_some_and(|r| {
        let change = (r - value).abs();
        change > DIVERGENCE_RATIO * value.abs() && change > 0.0
    });
    Ok(SeminormEstimate {
        value,
        h_min: hg.h_min,
        h_max: hg.h_max,
        level: f.grid().level(),
        refined_value,
        divergence_flag,
    })
}

/// `(∫ |h|^{-sq} ‖Δ_h^M f‖_{L^p}^q dh/|h|^n)^{1/q}`, or the sup over `h` at
/// `q = ∞`.
pub fn besov_seminorm_estimate(f: &SampledFunction, sp: &SpaceParams, hg: &HGrid) -> Result<SeminormEstimate> {
    estimate(f, sp, hg, Family::Besov, None)
}

/// `‖(∫ |h|^{-sq} |Δ_h^M f(·)|^q dh/|h|^n)^{1/q}‖_{L^p}`, with the inner sup
/// at `q = ∞`.
pub fn triebel_seminorm_estimate(f: &SampledFunction, sp: &SpaceParams, hg: &HGrid) -> Result<SeminormEstimate> {
    estimate(f, sp, hg, Family::TriebelLizorkin, None)
}

pub fn seminorm_estimate(f: &SampledFunction, sp: &SpaceParams, hg: &HGrid, family: Family) -> Result<SeminormEstimate> {
    estimate(f, sp, hg, family, None)
}

/// Estimate restricted to differences that stay inside one piece image
/// (`Interior`) or straddle two of them (`Boundary`).
pub fn seminorm_by_region(
    f: &SampledFunction,
    sp: &SpaceParams,
    hg: &HGrid,
    family: Family,
    partition: &Partition,
    region: Region,
) -> Result<SeminormEstimate> {
    estimate(f, sp, hg, family, Some((partition, region)))
}

/// `(step, |h|^{-s}‖Δ_h^M f‖_{L^p})` for every step of `hg`.
pub fn h_profile(f: &SampledFunction, sp: &SpaceParams, hg: &HGrid) -> Result<Vec<(Step, f64)>> {
    check_estimator(f, sp, Family::Besov)?;
    let ev = DiffEval::new(f, sp.order(), hg, None);
    Ok(hg.steps.iter().copied().zip(besov_profile(&ev, sp, hg)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FullNorm {
    pub lp: f64,
    pub seminorm: SeminormEstimate,
    pub total: f64,
}

/// `‖f‖_{L^p} + |f|` with the seminorm of the requested family.
pub fn full_norm(f: &SampledFunction, sp: &SpaceParams, hg: &HGrid, family: Family) -> Result<FullNorm> {
    let lp = lp_norm_grid(f, sp.p())?;
    let seminorm = seminorm_estimate(f, sp, hg, family)?;
    Ok(FullNorm { lp, total: lp + seminorm.value, seminorm })
}
