//! Domains, similitudes and partitions of a bounded box domain.
//!
//! Boxes are half-open, `[lower, upper)` along every axis, so that the images
//! `u_i(X_i)` of a partition can tile the domain without shared boundaries.
//! Sampling grids live on the closure of the domain; a point on an upper face
//! of the domain is assigned to the piece whose image touches that face.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// Absolute tolerance for boundary and orthogonality tests on unit-sized data.
pub const GEOM_TOL: f64 = 1e-12;

/// A point (or vector) of dimension 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    xs: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Invalid(format!(
                "points must have 1 or 2 coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("point coordinates must be finite".into()));
        }
        let mut xs = [0.0; MAX_DIM];
        xs[..coords.len()].copy_from_slice(coords);
        Ok(Self { xs, dim: coords.len() })
    }

    pub fn x(x: f64) -> Self {
        Self { xs: [x, 0.0], dim: 1 }
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self { xs: [x, y], dim: 2 }
    }

    pub fn zeros(dim: usize) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        Self { xs: [0.0; MAX_DIM], dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.xs[..self.dim]
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    fn zip_with(self, other: Point, f: impl Fn(f64, f64) -> f64) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = self;
        for k in 0..self.dim {
            out.xs[k] = f(self.xs[k], other.xs[k]);
        }
        out
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.as_slice()[k]
    }
}

impl Add for Point {
    type Output = Point;

    fn add(self, rhs: Point) -> Point {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for Point {
    type Output = Point;

    fn sub(self, rhs: Point) -> Point {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for Point {
    type Output = Point;

    fn mul(mut self, rhs: f64) -> Point {
        for k in 0..self.dim {
            self.xs[k] *= rhs;
        }
        self
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "{}", self.xs[0]),
            _ => write!(f, "({}, {})", self.xs[0], self.xs[1]),
        }
    }
}

/// Axis-aligned half-open box `Π [lower_k, upper_k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox {
    lower: Point,
    upper: Point,
}

impl AxisBox {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::Invalid("box corners have different dimensions".into()));
        }
        for k in 0..lower.dim() {
            if !(lower[k] < upper[k]) {
                return Err(Error::Invalid(format!(
                    "box needs lower < upper on every axis, axis {k} has [{}, {})",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The interval `[a, b)`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(Point::x(a), Point::x(b))
    }

    /// The rectangle `[x0, x1) × [y0, y1)`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(Point::xy(x0, y0), Point::xy(x1, y1))
    }

    pub fn unit(dim: usize) -> Self {
        let mut upper = Point::zeros(dim);
        for k in 0..dim {
            upper.xs[k] = 1.0;
        }
        Self { lower: Point::zeros(dim), upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> Point {
        self.lower
    }

    pub fn upper(&self) -> Point {
        self.upper
    }

    pub fn side(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn diameter(&self) -> f64 {
        self.upper.distance(&self.lower)
    }

    pub fn center(&self) -> Point {
        (self.lower + self.upper) * 0.5
    }

    /// Absolute tolerance scaled to the size of the box.
    pub fn tol(&self) -> f64 {
        GEOM_TOL * self.diameter().max(1.0)
    }

    pub fn contains_half_open(&self, x: &Point) -> bool {
        let tol = self.tol();
        (0..self.dim()).all(|k| self.lower[k] - tol <= x[k] && x[k] < self.upper[k] - tol)
    }

    pub fn contains_closed(&self, x: &Point, tol: f64) -> bool {
        (0..self.dim()).all(|k| self.lower[k] - tol <= x[k] && x[k] <= self.upper[k] + tol)
    }

    pub fn contains_box(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.dim())
            .all(|k| self.lower[k] - tol <= other.lower[k] && other.upper[k] <= self.upper[k] + tol)
    }

    /// Whether the two half-open boxes share a set of positive measure.
    pub fn overlaps(&self, other: &AxisBox, tol: f64) -> bool {
        (0..self.dim())
            .all(|k| self.lower[k] < other.upper[k] - tol && other.lower[k] < self.upper[k] - tol)
    }

    pub fn approx_eq(&self, other: &AxisBox, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|k| {
                (self.lower[k] - other.lower[k]).abs() <= tol
                    && (self.upper[k] - other.upper[k]).abs() <= tol
            })
    }

    /// All 2^n corners of the box.
    pub fn corners(&self) -> Vec<Point> {
        match self.dim() {
            1 => vec![self.lower, self.upper],
            _ => vec![
                Point::xy(self.lower[0], self.lower[1]),
                Point::xy(self.upper[0], self.lower[1]),
                Point::xy(self.lower[0], self.upper[1]),
                Point::xy(self.upper[0], self.upper[1]),
            ],
        }
    }

    fn bounding(points: &[Point]) -> Result<AxisBox> {
        let dim = points[0].dim();
        let mut lo = points[0];
        let mut hi = points[0];
        for p in &points[1..] {
            for k in 0..dim {
                lo.xs[k] = lo.xs[k].min(p[k]);
                hi.xs[k] = hi.xs[k].max(p[k]);
            }
        }
        AxisBox::new(lo, hi)
    }
}

impl fmt::Display for AxisBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..self.dim())
            .map(|k| format!("[{}, {})", self.lower[k], self.upper[k]))
            .collect();
        write!(f, "{}", parts.join(" x "))
    }
}

/// Orthogonal linear part of a similitude (a 1x1 or 2x2 matrix).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ortho {
    m: [[f64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl Ortho {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (k, row) in m.iter_mut().enumerate().take(dim) {
            row[k] = 1.0;
        }
        Self { m, dim }
    }

    /// The 1-D reflection `x ↦ -x`.
    pub fn reflection() -> Self {
        Self { m: [[-1.0, 0.0], [0.0, 0.0]], dim: 1 }
    }

    /// Counter-clockwise planar rotation by `theta` radians.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { m: [[c, -s], [s, c]], dim: 2 }
    }

    /// Builds the matrix from row-major entries and checks `O Oᵀ = I`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) || entries.len() != dim * dim {
            return Err(Error::Invalid(format!(
                "orthogonal part of a {dim}-D similitude needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for r in 0..dim {
            for c in 0..dim {
                m[r][c] = entries[r * dim + c];
            }
        }
        let o = Self { m, dim };
        for r in 0..dim {
            for c in 0..dim {
                let dot: f64 = (0..dim).map(|k| o.m[r][k] * o.m[c][k]).sum();
                let expect = if r == c { 1.0 } else { 0.0 };
                if (dot - expect).abs() > GEOM_TOL {
                    return Err(Error::Invalid(format!(
                        "matrix {entries:?} is not orthogonal (row {r}·row {c} = {dot})"
                    )));
                }
            }
        }
        Ok(o)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.m[r][c]
    }

    pub fn apply(&self, x: &Point) -> Point {
        let mut out = Point::zeros(self.dim);
        for r in 0..self.dim {
            out.xs[r] = (0..self.dim).map(|c| self.m[r][c] * x[c]).sum();
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for (r, row) in m.iter_mut().enumerate().take(self.dim) {
            for (c, v) in row.iter_mut().enumerate().take(self.dim) {
                *v = self.m[c][r];
            }
        }
        Self { m, dim: self.dim }
    }

    /// True for signed permutation matrices, which map axis-aligned boxes
    /// onto axis-aligned boxes.
    pub fn is_axis_aligned(&self) -> bool {
        (0..self.dim).all(|r| {
            (0..self.dim).all(|c| {
                let v = self.m[r][c].abs();
                v < GEOM_TOL || (v - 1.0).abs() < GEOM_TOL
            })
        })
    }
}

/// A similitude `u(x) = γ·O·x + τ` with ratio `γ > 0` and orthogonal `O`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Similitude {
    gamma: f64,
    ortho: Ortho,
    tau: Point,
}

impl Similitude {
    pub fn new(gamma: f64, ortho: Ortho, tau: Point) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Invalid(format!("similitude ratio must be positive, got {gamma}")));
        }
        if ortho.dim() != tau.dim() {
            return Err(Error::Invalid("similitude parts have different dimensions".into()));
        }
        Ok(Self { gamma, ortho, tau })
    }

    /// The 1-D map `x ↦ γx + τ`.
    pub fn affine_1d(gamma: f64, tau: f64) -> Result<Self> {
        Self::new(gamma, Ortho::identity(1), Point::x(tau))
    }

    pub fn identity(dim: usize) -> Self {
        Self { gamma: 1.0, ortho: Ortho::identity(dim), tau: Point::zeros(dim) }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ortho(&self) -> &Ortho {
        &self.ortho
    }

    pub fn tau(&self) -> Point {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.tau.dim()
    }

    pub fn apply(&self, x: &Point) -> Point {
        self.ortho.apply(x) * self.gamma + self.tau
    }

    /// `u⁻¹(x) = γ⁻¹ Oᵀ (x − τ)`.
    pub fn invert(&self) -> Similitude {
        let ot = self.ortho.transpose();
        let inv_gamma = 1.0 / self.gamma;
        Similitude { gamma: inv_gamma, ortho: ot, tau: ot.apply(&self.tau) * (-inv_gamma) }
    }

    /// Inverse applied directly, without forming the inverse map.
    pub fn apply_inverse(&self, x: &Point) -> Point {
        self.ortho.transpose().apply(&(*x - self.tau)) * (1.0 / self.gamma)
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.ortho.is_axis_aligned()
    }

    /// Image of a box: exact for axis-aligned maps, the bounding box otherwise.
    pub fn image_box(&self, b: &AxisBox) -> AxisBox {
        let corners: Vec<Point> = b.corners().iter().map(|c| self.apply(c)).collect();
        AxisBox::bounding(&corners).expect("similitudes map boxes to boxes of positive measure")
    }
}

/// One piece `(X_i, u_i)` of a partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub subdomain: AxisBox,
    pub map: Similitude,
}

/// The domain `X` together with pieces `(X_i, u_i)` whose images should
/// partition `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    domain: AxisBox,
    pieces: Vec<Piece>,
    images: Vec<AxisBox>,
}

impl Partition {
    pub fn new(domain: AxisBox, pieces: Vec<Piece>) -> Result<Self> {
        for (i, p) in pieces.iter().enumerate() {
            if p.subdomain.dim() != domain.dim() || p.map.dim() != domain.dim() {
                return Err(Error::Invalid(format!(
                    "piece {} does not match the {}-D domain",
                    i + 1,
                    domain.dim()
                )));
            }
        }
        let images = pieces.iter().map(|p| p.map.image_box(&p.subdomain)).collect();
        Ok(Self { domain, pieces, images })
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Image of piece `i` (its bounding box when the map rotates).
    pub fn image_box(&self, i: usize) -> &AxisBox {
        &self.images[i]
    }

    /// Half-open membership of `x` in `u_i(X_i)`, with the upper faces of the
    /// domain closed so that every point of the closure has an owner.
    pub fn image_contains(&self, i: usize, x: &Point) -> bool {
        let tol = self.domain.tol();
        let piece = &self.pieces[i];
        if piece.map.is_axis_aligned() {
            let b = &self.images[i];
            (0..self.dim()).all(|k| {
                let lo = b.lower()[k];
                let hi = b.upper()[k];
                if x[k] < lo - tol {
                    return false;
                }
                if x[k] < hi - tol {
                    return true;
                }
                (hi - self.domain.upper()[k]).abs() <= tol && x[k] <= hi + tol
            })
        } else {
            let y = piece.map.apply_inverse(x);
            piece.subdomain.contains_closed(&y, tol)
        }
    }

    /// Index (0-based) of the piece whose image owns `x`, and the preimage
    /// `u_i⁻¹(x)`. Accepts any point of the closure of the domain.
    pub fn locate(&self, x: &Point) -> Result<(usize, Point)> {
        if x.dim() != self.dim() || !self.domain.contains_closed(x, self.domain.tol()) {
            return Err(Error::Domain(format!("point {x} lies outside the domain {}", self.domain)));
        }
        (0..self.len())
            .find(|&i| self.image_contains(i, x))
            .map(|i| (i, self.pieces[i].map.apply_inverse(x)))
            .ok_or_else(|| Error::Domain(format!("point {x} is not covered by any piece image")))
    }

    /// Whether a point `y` of the closure of `X_i` is mapped by `u_i` into the
    /// part of `X` that `locate` assigns to piece `i`.
    pub fn owns(&self, i: usize, y: &Point) -> bool {
        let piece = &self.pieces[i];
        if !piece.subdomain.contains_closed(y, self.domain.tol()) {
            return false;
        }
        let x = piece.map.apply(y);
        matches!(self.locate(&x), Ok((j, _)) if j == i)
    }

    /// Checks the partition property. Axis-aligned images are checked exactly
    /// on the cells cut out by all image faces; rotated images are probed on a
    /// `resolution`-per-axis grid of cell centres.
    pub fn validate(&self, resolution: usize) -> Result<ValidationReport> {
        if self.pieces.is_empty() {
            return Err(Error::Invalid("a partition needs at least one piece".into()));
        }
        if resolution < 2 {
            return Err(Error::Invalid("probe resolution must be at least 2".into()));
        }
        let tol = self.domain.tol();
        let mut report = ValidationReport {
            pieces: self.len(),
            subdomains_inside: true,
            images_inside: true,
            disjoint: true,
            covers: true,
            exact: self.pieces.iter().all(|p| p.map.is_axis_aligned()),
            overlapping_pairs: Vec::new(),
            failures: Vec::new(),
            failure_points: Vec::new(),
        };

        for (i, p) in self.pieces.iter().enumerate() {
            if !self.domain.contains_box(&p.subdomain, tol) {
                report.subdomains_inside = false;
                report.failures.push(format!(
                    "subdomain X_{} = {} is not contained in X = {}",
                    i + 1,
                    p.subdomain,
                    self.domain
                ));
            }
            // the image is the convex hull of the mapped corners
            if let Some(c) = p
                .subdomain
                .corners()
                .iter()
                .map(|c| p.map.apply(c))
                .find(|c| !self.domain.contains_closed(c, tol))
            {
                report.images_inside = false;
                report.failures.push(format!(
                    "image u_{}(X_{}) leaves X (corner maps to {c})",
                    i + 1,
                    i + 1
                ));
            }
        }

        let probes = if report.exact { self.exact_cells() } else { self.probe_points(resolution) };
        let mut pairs = std::collections::BTreeSet::new();
        for x in probes {
            let owners: Vec<usize> = (0..self.len()).filter(|&i| self.strict_contains(i, &x)).collect();
            match owners.len() {
                0 => {
                    report.covers = false;
                    report.push_point(x, format!("point {x} is not covered by any image"));
                }
                1 => {}
                _ => {
                    report.disjoint = false;
                    for a in 0..owners.len() {
                        for b in a + 1..owners.len() {
                            if pairs.insert((owners[a], owners[b])) {
                                report.failures.push(format!(
                                    "images of pieces {} and {} overlap (e.g. at {x})",
                                    owners[a] + 1,
                                    owners[b] + 1
                                ));
                            }
                        }
                    }
                    report.failure_points.push(x);
                }
            }
        }
        report.overlapping_pairs = pairs.into_iter().collect();
        report.failure_points.truncate(ValidationReport::MAX_POINTS);
        Ok(report)
    }

    /// Interior membership used by validation: no boundary tie-breaking.
    fn strict_contains(&self, i: usize, x: &Point) -> bool {
        let piece = &self.pieces[i];
        if piece.map.is_axis_aligned() {
            let b = &self.images[i];
            (0..self.dim()).all(|k| b.lower()[k] < x[k] && x[k] < b.upper()[k])
        } else {
            let y = piece.map.apply_inverse(x);
            let s = &piece.subdomain;
            (0..self.dim()).all(|k| s.lower()[k] < y[k] && y[k] < s.upper()[k])
        }
    }

    /// Centres of the cells formed by every image face inside the domain.
    /// Each such cell lies in the interior of, or outside, every image.
    fn exact_cells(&self) -> Vec<Point> {
        let dim = self.dim();
        let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); dim];
        for (k, axis) in cuts.iter_mut().enumerate() {
            axis.push(self.domain.lower()[k]);
            axis.push(self.domain.upper()[k]);
            for b in &self.images {
                for v in [b.lower()[k], b.upper()[k]] {
                    if v > self.domain.lower()[k] && v < self.domain.upper()[k] {
                        axis.push(v);
                    }
                }
            }
            axis.sort_by(f64::total_cmp);
            axis.dedup_by(|a, b| (*a - *b).abs() <= GEOM_TOL);
        }
        let mids: Vec<Vec<f64>> =
            cuts.iter().map(|c| c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()).collect();
        match dim {
            1 => mids[0].iter().map(|&x| Point::x(x)).collect(),
            _ => mids[1]
                .iter()
                .flat_map(|&y| mids[0].iter().map(move |&x| Point::xy(x, y)))
                .collect(),
        }
    }

    fn probe_points(&self, resolution: usize) -> Vec<Point> {
        let d = &self.domain;
        let coord = |k: usize, j: usize| d.lower()[k] + d.side(k) * (j as f64 + 0.5) / resolution as f64;
        match self.dim() {
            1 => (0..resolution).map(|j| Point::x(coord(0, j))).collect(),
            _ => (0..resolution)
                .flat_map(|b| (0..resolution).map(move |a| (a, b)))
                .map(|(a, b)| Point::xy(coord(0, a), coord(1, b)))
                .collect(),
        }
    }
}

/// Outcome of [`Partition::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub pieces: usize,
    /// Every `X_i ⊆ X`.
    pub subdomains_inside: bool,
    /// Every `u_i(X_i) ⊆ X̄`.
    pub images_inside: bool,
    /// Images pairwise disjoint.
    pub disjoint: bool,
    /// Images cover `X`.
    pub covers: bool,
    /// Exact cell decomposition (true) or probe grid (false).
    pub exact: bool,
    /// 0-based index pairs of overlapping images.
    pub overlapping_pairs: Vec<(usize, usize)>,
    pub failures: Vec<String>,
    pub failure_points: Vec<Point>,
}

impl ValidationReport {
    const MAX_POINTS: usize = 32;

    pub fn is_valid(&self) -> bool {
        self.subdomains_inside && self.images_inside && self.disjoint && self.covers
    }

    fn push_point(&mut self, x: Point, msg: String) {
        if self.failure_points.len() < Self::MAX_POINTS {
            self.failures.push(msg);
        }
        self.failure_points.push(x);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.is_valid() { "valid" } else { "INVALID" };
        let method = if self.exact { "exact" } else { "probe grid" };
        writeln!(f, "partition with {} pieces: {status} ({method})", self.pieces)?;
        let mark = |ok: bool| if ok { "ok" } else { "FAIL" };
        writeln!(f, "  subdomains inside X : {}", mark(self.subdomains_inside))?;
        writeln!(f, "  images inside X     : {}", mark(self.images_inside))?;
        writeln!(f, "  images disjoint     : {}", mark(self.disjoint))?;
        writeln!(f, "  images cover X      : {}", mark(self.covers))?;
        for msg in &self.failures {
            writeln!(f, "  - {msg}")?;
        }
        Ok(())
    }
}
