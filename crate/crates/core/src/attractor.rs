//! Set-valued local iterated function systems on finite point clouds.
//!
//! A local IFS applies each map only to the part of a set that lies in its
//! own domain: `F_loc(S) = ⋃ f_i(S ∩ X_i)`. Iterating from a dense sample
//! of the ambient box approximates the local attractor. The graph maps
//! `w_i(x, y) = (u_i(x), λ_i(x) + S_i(x)·y)` connect this to the RB operator:
//! they send the graph of `f` onto the graph of `Φf`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Partition, Point, Similitude};
use crate::rb::{FunctionSpec, LocalFractalSystem};

/// Points closer than this (per coordinate) are merged.
pub const DEDUP_TOL: f64 = 1e-12;

/// Largest point dimension: a graph over a 2-D domain.
pub const MAX_POINT_DIM: usize = 3;

/// Finite point cloud in `ℝ^d`, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_POINT_DIM {
            return Err(Error::Invalid(format!("point dimension must lie in 1..={MAX_POINT_DIM}, got {dim}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Invalid(format!("{} coordinates do not split into {dim}-D points", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("point coordinates must be finite".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new() }
    }

    /// Tensor lattice with `per_axis` points per axis on the closed box
    /// `[lower, upper]`, endpoints included.
    pub fn lattice(lower: &[f64], upper: &[f64], per_axis: usize) -> Result<Self> {
        let dim = lower.len();
        if dim != upper.len() || per_axis < 2 {
            return Err(Error::Invalid("lattice needs matching corners and at least 2 points per axis".into()));
        }
        let coord = |k: usize, j: usize| {
            if j + 1 == per_axis {
                upper[k]
            } else {
                lower[k] + (upper[k] - lower[k]) * j as f64 / (per_axis - 1) as f64
            }
        };
        let total = per_axis.pow(dim as u32);
        let mut coords = Vec::with_capacity(total * dim);
        for flat in 0..total {
            let mut rest = flat;
            for k in 0..dim {
                coords.push(coord(k, rest % per_axis));
                rest /= per_axis;
            }
        }
        Self::new(dim, coords)
    }

    /// `count` points drawn uniformly from the box `[lower, upper]`.
    pub fn uniform_random(lower: &[f64], upper: &[f64], count: usize, seed: u64) -> Result<Self> {
        if lower.len() != upper.len() || count == 0 {
            return Err(Error::Invalid("random set needs matching corners and at least one point".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(count * lower.len());
        for _ in 0..count {
            for (lo, hi) in lower.iter().zip(upper) {
                coords.push(lo + (hi - lo) * rng.gen::<f64>());
            }
        }
        Self::new(lower.len(), coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Lexicographic order with points closer than `tol` per coordinate
    /// merged into the first of them.
    pub fn deduplicated(&self, tol: f64) -> PointSet {
        let d = self.dim;
        let key = |p: &[f64]| -> [i64; MAX_POINT_DIM] {
            let mut k = [0i64; MAX_POINT_DIM];
            for (i, c) in p.iter().enumerate() {
                k[i] = (c / tol).round() as i64;
            }
            k
        };
        let mut idx: Vec<(usize, [i64; MAX_POINT_DIM])> = self.iter().enumerate().map(|(i, p)| (i, key(p))).collect();
        idx.par_sort_unstable_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        idx.dedup_by(|a, b| a.1 == b.1);
        let mut coords = Vec::with_capacity(idx.len() * d);
        for (i, _) in idx {
            coords.extend_from_slice(self.point(i));
        }
        PointSet { dim: d, coords }
    }

    /// Lower and upper corners of the bounding box.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.is_empty() {
            return None;
        }
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Some((lo, hi))
    }

    /// At most `cap` points: the box is cut into `2^k` cells per axis with
    /// the finest `k` that leaves at most `cap` occupied cells, and the first
    /// point of each cell (in storage order) is kept. Points are not moved.
    /// Returns the thinned set and the cell diameter (zero if untouched).
    pub fn thinned(&self, cap: usize) -> (PointSet, f64) {
        if self.len() <= cap || cap == 0 {
            return (self.clone(), 0.0);
        }
        let (lo, hi) = self.bounds().expect("non-empty");
        let extent = (0..self.dim).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        if extent == 0.0 {
            return (PointSet { dim: self.dim, coords: self.point(0).to_vec() }, 0.0);
        }
        let cell_keys = |k: u32| -> Vec<[u64; MAX_POINT_DIM]> {
            let n = (1u64 << k) as f64;
            let top = (1u64 << k) - 1;
            self.iter()
                .map(|p| {
                    let mut key = [0u64; MAX_POINT_DIM];
                    for (i, c) in p.iter().enumerate() {
                        key[i] = (((c - lo[i]) / extent * n).floor().max(0.0) as u64).min(top);
                    }
                    key
                })
                .collect()
        };
        let occupied = |k: u32| {
            let mut keys = cell_keys(k);
            keys.par_sort_unstable();
            keys.dedup();
            keys.len()
        };
        let (mut good, mut bad) = (0u32, 52u32);
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if occupied(mid) <= cap {
                good = mid;
            } else {
                bad = mid;
            }
        }
        let keys = cell_keys(good);
        let mut seen = HashSet::with_capacity(cap);
        let mut coords = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            if seen.insert(*key) {
                coords.extend_from_slice(self.point(i));
            }
        }
        let cell = extent / (1u64 << good) as f64 * (self.dim as f64).sqrt();
        (PointSet { dim: self.dim, coords }, cell)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

const LEAF: usize = 8;

/// Static k-d tree over a point set, split at medians along the axis of
/// largest spread.
struct KdTree<'a> {
    pts: &'a PointSet,
    idx: Vec<usize>,
    axis: Vec<u8>,
}

impl<'a> KdTree<'a> {
    fn new(pts: &'a PointSet) -> Self {
        let mut t = KdTree { pts, idx: (0..pts.len()).collect(), axis: vec![0; pts.len()] };
        t.build(0, pts.len());
        t
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF {
            return;
        }
        let d = self.pts.dim;
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..d {
            let (mn, mx) = self.idx[lo..hi]
                .iter()
                .map(|&i| self.pts.point(i)[k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if mx - mn > best.1 {
                best = (k, mx - mn);
            }
        }
        let k = best.0;
        let mid = (lo + hi) / 2;
        let pts = self.pts;
        self.idx[lo..hi].select_nth_unstable_by(mid - lo, |&i, &j| pts.point(i)[k].total_cmp(&pts.point(j)[k]));
        self.axis[mid] = k as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    fn nearest2(&self, p: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        self.search(p, 0, self.idx.len(), &mut best);
        best
    }

    fn search(&self, p: &[f64], lo: usize, hi: usize, best: &mut f64) {
        if hi - lo <= LEAF {
            for &i in &self.idx[lo..hi] {
                *best = best.min(dist2(p, self.pts.point(i)));
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let q = self.pts.point(self.idx[mid]);
        *best = best.min(dist2(p, q));
        let k = self.axis[mid] as usize;
        let diff = p[k] - q[k];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(p, near.0, near.1, best);
        if diff * diff < *best {
            self.search(p, far.0, far.1, best);
        }
    }
}

/// `sup_{a ∈ A} dist(a, B)`, exact, with nearest neighbours from a k-d tree.
pub fn directed_hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Hausdorff distance of an empty set".into()));
    }
    if a.dim != b.dim {
        return Err(Error::Domain("point sets of different dimensions".into()));
    }
    let tree = KdTree::new(b);
    let worst = (0..a.len()).into_par_iter().map(|i| tree.nearest2(a.point(i))).reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

pub fn hausdorff_distance(a: &PointSet, b: &PointSet) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// The same distance by comparing every pair of points.
pub fn hausdorff_distance_brute(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Hausdorff distance of an empty set".into()));
    }
    let dir = |x: &PointSet, y: &PointSet| {
        x.iter().map(|p| y.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    Ok(dir(a, b).max(dir(b, a)).sqrt())
}

/// A map of a local IFS.
#[derive(Clone, Debug, PartialEq)]
pub enum LocalMap {
    Similitude(Similitude),
    /// `(x, y) ↦ (u(x), λ(x) + S(x)·y)`.
    Graph { u: Similitude, lambda: FunctionSpec, scale: FunctionSpec },
}

impl LocalMap {
    fn apply_into(&self, p: &[f64], out: &mut Vec<f64>) {
        match self {
            LocalMap::Similitude(f) => {
                let x = Point::new(p).expect("point of the map's dimension");
                out.extend_from_slice(f.apply(&x).as_slice());
            }
            LocalMap::Graph { u, lambda, scale } => {
                let n = u.dim();
                let x = Point::new(&p[..n]).expect("base point");
                out.extend_from_slice(u.apply(&x).as_slice());
                out.push(lambda.eval(&x) + scale.eval(&x) * p[n]);
            }
        }
    }

    /// Similarity ratio of the map on the base space.
    pub fn gamma(&self) -> f64 {
        match self {
            LocalMap::Similitude(f) => f.gamma(),
            LocalMap::Graph { u, .. } => u.gamma(),
        }
    }
}

/// How a point is assigned to the domain `X_i` of a map.
#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Closed boxes, boundaries shared.
    Closed,
    /// Half-open boxes.
    HalfOpen,
    /// Base point owned by piece `i` of a partition: in the closure of
    /// `X_i` and sent by `u_i` into the part of `X` that `i` accounts for.
    Owned(Partition),
}

/// Maps with their domains inside an ambient box; graph systems add a
/// `y`-interval to every domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMapSystem {
    ambient: AxisBox,
    y_range: Option<(f64, f64)>,
    domains: Vec<AxisBox>,
    maps: Vec<LocalMap>,
    membership: Membership,
}

impl LocalMapSystem {
    pub fn new(ambient: AxisBox, domains: Vec<AxisBox>, maps: Vec<Similitude>, membership: Membership) -> Result<Self> {
        if domains.is_empty() || domains.len() != maps.len() {
            return Err(Error::Invalid("a local IFS needs equally many, non-zero domains and maps".into()));
        }
        for (d, f) in domains.iter().zip(&maps) {
            if d.dim() != ambient.dim() || f.dim() != ambient.dim() {
                return Err(Error::Invalid("domains and maps must share the ambient dimension".into()));
            }
            if !ambient.contains_box(d, ambient.tol()) {
                return Err(Error::Invalid(format!("domain {d} is not contained in {ambient}")));
            }
        }
        if let Membership::Owned(p) = &membership {
            if p.len() != maps.len() {
                return Err(Error::Invalid("ownership partition must have one piece per map".into()));
            }
        }
        Ok(Self {
            ambient,
            y_range: None,
            domains,
            maps: maps.into_iter().map(LocalMap::Similitude).collect(),
            membership,
        })
    }

    /// The partition's own maps on its subdomains (closed membership).
    pub fn from_partition(p: &Partition) -> Self {
        Self {
            ambient: *p.domain(),
            y_range: None,
            domains: p.pieces().iter().map(|pc| pc.subdomain).collect(),
            maps: p.pieces().iter().map(|pc| LocalMap::Similitude(pc.map)).collect(),
            membership: Membership::Closed,
        }
    }

    /// Every map on the whole ambient box.
    pub fn globalised(&self) -> Self {
        let mut out = self.clone();
        for d in out.domains.iter_mut() {
            *d = self.ambient;
        }
        if matches!(out.membership, Membership::Owned(_)) {
            out.membership = Membership::Closed;
        }
        out
    }

    pub fn ambient(&self) -> &AxisBox {
        &self.ambient
    }

    pub fn y_range(&self) -> Option<(f64, f64)> {
        self.y_range
    }

    pub fn domains(&self) -> &[AxisBox] {
        &self.domains
    }

    pub fn maps(&self) -> &[LocalMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Dimension of the points the system acts on.
    pub fn point_dim(&self) -> usize {
        self.ambient.dim() + usize::from(self.y_range.is_some())
    }

    /// Corners of the ambient region (including the `y`-interval).
    pub fn ambient_corners(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.ambient.lower().as_slice().to_vec();
        let mut hi = self.ambient.upper().as_slice().to_vec();
        if let Some((a, b)) = self.y_range {
            lo.push(a);
            hi.push(b);
        }
        (lo, hi)
    }

    pub fn ambient_diameter(&self) -> f64 {
        let (lo, hi) = self.ambient_corners();
        dist2(&lo, &hi).sqrt()
    }

    fn in_domain(&self, i: usize, p: &[f64]) -> bool {
        let n = self.ambient.dim();
        if let Some((a, b)) = self.y_range {
            let tol = 1e-12 * (b - a).abs().max(1.0);
            if p[n] < a - tol || p[n] > b + tol {
                return false;
            }
        }
        let x = Point::new(&p[..n]).expect("base point");
        let d = &self.domains[i];
        match &self.membership {
            Membership::Closed => d.contains_closed(&x, d.tol()),
            Membership::HalfOpen => d.contains_half_open(&x),
            Membership::Owned(part) => part.owns(i, &x),
        }
    }

    /// `F_loc(S) = ⋃ f_i(S ∩ X_i)`, map by map, points in input order.
    pub fn floc_apply(&self, s: &PointSet) -> Result<PointSet> {
        if s.dim != self.point_dim() {
            return Err(Error::Domain(format!(
                "point set of dimension {} for a system acting on dimension {}",
                s.dim,
                self.point_dim()
            )));
        }
        let mut coords = Vec::new();
        for (i, f) in self.maps.iter().enumerate() {
            let part: Vec<Vec<f64>> = (0..s.len())
                .into_par_iter()
                .filter_map(|k| {
                    let p = s.point(k);
                    self.in_domain(i, p).then(|| {
                        let mut out = Vec::with_capacity(s.dim);
                        f.apply_into(p, &mut out);
                        out
                    })
                })
                .collect();
            for p in part {
                coords.extend(p);
            }
        }
        Ok(PointSet { dim: s.dim, coords })
    }

    /// Default `K₀`: a lattice over the closed ambient region with about
    /// 4096 points in total.
    pub fn default_initial_set(&self) -> PointSet {
        let (lo, hi) = self.ambient_corners();
        let per_axis = match lo.len() {
            1 => 4096,
            2 => 64,
            _ => 16,
        };
        PointSet::lattice(&lo, &hi, per_axis).expect("valid ambient box")
    }
}

/// Graph maps `w_i(x, y) = (u_i(x), λ_i(x) + S_i(x)·y)` on `X̄ × [−y_bound, y_bound]`.
/// Base points are assigned to pieces by ownership, so each `x` of the
/// image has a single preimage. Without `y_bound`, `max‖λ‖/(1 − max‖S‖)` is used.
pub fn wloc_system(sys: &LocalFractalSystem, y_bound: Option<f64>) -> Result<LocalMapSystem> {
    sys.check_contraction()?;
    let yb = y_bound.unwrap_or_else(|| sys.fixed_point_bound());
    if !(yb >= 0.0 && yb.is_finite()) {
        return Err(Error::Invalid(format!("y bound must be finite and non-negative, got {yb}")));
    }
    let part = sys.partition();
    Ok(LocalMapSystem {
        ambient: *part.domain(),
        y_range: Some((-yb, yb)),
        domains: part.pieces().iter().map(|p| p.subdomain).collect(),
        maps: part
            .pieces()
            .iter()
            .zip(sys.lambdas().iter().zip(sys.scalings()))
            .map(|(p, (l, s))| LocalMap::Graph { u: p.map, lambda: l.clone(), scale: s.clone() })
            .collect(),
        membership: Membership::Owned(part.clone()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationSettings {
    /// Thinning cap on the number of points kept per step.
    pub max_points: usize,
    pub dedup_tol: f64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        Self { max_points: 1 << 16, dedup_tol: DEDUP_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    /// `d_H(K_ℓ, K_{ℓ+1})` of the stored clouds.
    pub distance: f64,
    /// Resolution of the clouds: the larger thinning cell diameter of the two
    /// (zero when neither was thinned).
    pub floor: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractorRun {
    pub set: PointSet,
    pub steps: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

/// `K_ℓ = F_loc(K_{ℓ−1})` for `steps` steps, deduplicated and thinned.
pub fn iterate_attractor(
    sys: &LocalMapSystem,
    k0: &PointSet,
    steps: usize,
    settings: &IterationSettings,
) -> Result<AttractorRun> {
    if k0.is_empty() {
        return Err(Error::Domain("initial set must be non-empty".into()));
    }
    let (mut current, mut cell) = k0.deduplicated(settings.dedup_tol).thinned(settings.max_points);
    let mut records = Vec::with_capacity(steps);
    let mut warnings = Vec::new();
    for step in 0..steps {
        let image = sys.floc_apply(&current)?;
        if image.is_empty() {
            warnings.push(format!("step {}: every point fell outside every domain; the set is empty", step + 1));
            current = image;
            break;
        }
        let (next, next_cell) = image.deduplicated(settings.dedup_tol).thinned(settings.max_points);
        records.push(StepRecord {
            distance: hausdorff_distance(&current, &next)?,
            floor: cell.max(next_cell),
            points: next.len(),
        });
        current = next;
        cell = next_cell;
    }
    Ok(AttractorRun { set: current, steps: records, warnings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AddressPoint {
    pub center: Vec<f64>,
    /// `Π γ_{σ_j} · diam(X)`.
    pub diameter_bound: f64,
}

fn box_image(f: &Similitude, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let corners: Vec<Point> = match lo.len() {
        1 => vec![Point::x(lo[0]), Point::x(hi[0])],
        _ => vec![Point::xy(lo[0], lo[1]), Point::xy(hi[0], lo[1]), Point::xy(lo[0], hi[1]), Point::xy(hi[0], hi[1])],
    };
    let imgs: Vec<Point> = corners.iter().map(|c| f.apply(c)).collect();
    let d = lo.len();
    let nlo = (0..d).map(|k| imgs.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min)).collect();
    let nhi = (0..d).map(|k| imgs.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
    (nlo, nhi)
}

/// `f_{σ₁} ∘ ⋯ ∘ f_{σ_k}(X)` for a similitude system, each map applied to the
/// part of the current box inside its domain. Codes are 1-based.
pub fn address_point(sys: &LocalMapSystem, code: &[usize]) -> Result<AddressPoint> {
    if code.is_empty() {
        return Err(Error::Domain("code must be non-empty".into()));
    }
    let m = sys.len();
    if let Some(&bad) = code.iter().find(|&&c| c == 0 || c > m) {
        return Err(Error::Domain(format!("code entry {bad} outside 1..={m}")));
    }
    let maps: Vec<&Similitude> = sys
        .maps
        .iter()
        .map(|f| match f {
            LocalMap::Similitude(s) => Ok(s),
            LocalMap::Graph { .. } => Err(Error::Invalid("addresses are defined for similitude systems".into())),
        })
        .collect::<Result<_>>()?;
    let compose = |prefix: &[usize]| -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = sys.ambient.lower().as_slice().to_vec();
        let mut hi = sys.ambient.upper().as_slice().to_vec();
        for &c in prefix.iter().rev() {
            let d = &sys.domains[c - 1];
            let tol = sys.ambient.tol();
            for k in 0..lo.len() {
                lo[k] = lo[k].max(d.lower()[k]);
                hi[k] = hi[k].min(d.upper()[k]);
                if lo[k] > hi[k] + tol {
                    return None;
                }
                hi[k] = hi[k].max(lo[k]);
            }
            (lo, hi) = box_image(maps[c - 1], &lo, &hi);
        }
        Some((lo, hi))
    };
    let Some((lo, hi)) = compose(code) else {
        let valid = (1..code.len()).rev().find(|&j| compose(&code[..j]).is_some()).unwrap_or(0);
        return Err(Error::AddressExit { piece: code[valid], valid_prefix: valid });
    };
    let center = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let diameter_bound = code.iter().map(|&c| maps[c - 1].gamma()).product::<f64>() * sys.ambient.diameter();
    Ok(AddressPoint { center, diameter_bound })
}

/// `Σ |σ_n − τ_n| / (m+1)^n` over two codes of equal length.
pub fn code_metric(a: &[usize], b: &[usize], m: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!("codes of different lengths {} and {}", a.len(), b.len())));
    }
    if let Some(&bad) = a.iter().chain(b).find(|&&c| c == 0 || c > m) {
        return Err(Error::Domain(format!("code entry {bad} outside 1..={m}")));
    }
    let base = 1.0 / (m + 1) as f64;
    let mut w = 1.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        w *= base;
        sum += x.abs_diff(*y) as f64 * w;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Piece;
    use crate::grid::{Grid, SampledFunction};
    use crate::rb::RbOperator;

    fn unit() -> AxisBox {
        AxisBox::interval(0.0, 1.0).unwrap()
    }

    fn halving() -> LocalMapSystem {
        LocalMapSystem::new(
            unit(),
            vec![unit(), unit()],
            vec![Similitude::affine_1d(0.5, 0.0).unwrap(), Similitude::affine_1d(0.5, 0.5).unwrap()],
            Membership::HalfOpen,
        )
        .unwrap()
    }

    fn set(xs: &[f64]) -> PointSet {
        PointSet::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn floc_examples() {
        let h = halving();
        assert!(h.floc_apply(&PointSet::empty(1)).unwrap().is_empty());
        assert_eq!(h.floc_apply(&set(&[0.0])).unwrap(), set(&[0.0, 0.5]));
        let local = LocalMapSystem::new(
            unit(),
            vec![unit(), AxisBox::interval(0.0, 0.5).unwrap()],
            vec![Similitude::affine_1d(0.5, 0.0).unwrap(), Similitude::affine_1d(0.5, 0.5).unwrap()],
            Membership::HalfOpen,
        )
        .unwrap();
        assert_eq!(local.floc_apply(&set(&[0.75])).unwrap(), set(&[0.375]));
    }

    #[test]
    fn hausdorff_examples() {
        let a = set(&[0.0, 1.0]);
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&set(&[0.0]), &set(&[1.0])).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&a, &set(&[0.0])).unwrap(), 1.0);
        assert!(hausdorff_distance(&a, &PointSet::empty(1)).is_err());
    }

    #[test]
    fn sweep_matches_brute_force() {
        let a = PointSet::new(2, (0..400).map(|i| ((i * 37 % 101) as f64 / 101.0).sin()).collect()).unwrap();
        let b = PointSet::new(2, (0..300).map(|i| ((i * 53 % 97) as f64 / 13.0).cos()).collect()).unwrap();
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), hausdorff_distance_brute(&a, &b).unwrap());
    }

    #[test]
    fn one_step_reproduces_floc() {
        let h = halving();
        let k0 = set(&[0.1, 0.6, 0.3]);
        let run = iterate_attractor(&h, &k0, 1, &IterationSettings::default()).unwrap();
        let direct = h.floc_apply(&k0).unwrap().deduplicated(DEDUP_TOL);
        assert_eq!(run.set, direct);
        assert_eq!(run.steps.len(), 1);
        let echo = iterate_attractor(&h, &k0, 0, &IterationSettings::default()).unwrap();
        assert_eq!(echo.set, k0.deduplicated(DEDUP_TOL));
    }

    #[test]
    fn empty_collapse_warns() {
        let sys = LocalMapSystem::new(
            unit(),
            vec![AxisBox::interval(0.0, 0.1).unwrap()],
            vec![Similitude::affine_1d(0.5, 0.9).unwrap()],
            Membership::Closed,
        )
        .unwrap();
        let run = iterate_attractor(&sys, &set(&[0.05]), 5, &IterationSettings::default()).unwrap();
        assert!(run.set.is_empty());
        assert_eq!(run.warnings.len(), 1);
        assert_eq!(run.steps.len(), 1);
    }

    #[test]
    fn thinning_keeps_original_points() {
        let s = set(&(0..1000).map(|i| i as f64 / 999.0).collect::<Vec<_>>());
        let (t, cell) = s.thinned(100);
        assert!(t.len() <= 100 && t.len() > 50);
        assert!(cell > 0.0);
        assert!(t.iter().all(|p| s.iter().any(|q| q == p)));
        assert!(hausdorff_distance(&s, &t).unwrap() <= cell);
    }

    #[test]
    fn addresses() {
        let h = LocalMapSystem { membership: Membership::Closed, ..halving() };
        let a = address_point(&h, &[1; 20]).unwrap();
        assert!(a.center[0] < 1e-6);
        assert!((a.diameter_bound - 2f64.powi(-20)).abs() < 1e-18);
        let b = address_point(&h, &[2]).unwrap();
        assert_eq!((b.center[0], b.diameter_bound), (0.75, 0.5));
        let c = address_point(&h, &[2, 1, 1, 2]).unwrap();
        assert!((0.5..0.75).contains(&c.center[0]));
        assert!(address_point(&h, &[3]).is_err());
    }

    #[test]
    fn address_exit_reports_prefix() {
        // f_2 maps into [0.9, 0.95], outside its own domain [0, 0.5]
        let sys = LocalMapSystem::new(
            unit(),
            vec![unit(), AxisBox::interval(0.0, 0.5).unwrap()],
            vec![Similitude::affine_1d(0.5, 0.0).unwrap(), Similitude::affine_1d(0.1, 0.9).unwrap()],
            Membership::Closed,
        )
        .unwrap();
        assert!(address_point(&sys, &[1, 2]).is_ok());
        match address_point(&sys, &[1, 2, 2]) {
            Err(Error::AddressExit { piece, valid_prefix }) => assert_eq!((piece, valid_prefix), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn code_metric_examples() {
        assert_eq!(code_metric(&[1, 2, 1], &[1, 2, 1], 2).unwrap(), 0.0);
        assert!((code_metric(&[1], &[2], 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((code_metric(&[1, 1], &[2, 2], 2).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!(code_metric(&[1], &[3], 2).is_err());
        assert!(code_metric(&[1], &[1, 1], 2).is_err());
    }

    fn constant_system(lambda: f64, s: f64) -> LocalFractalSystem {
        let x = unit();
        let part = Partition::new(
            x,
            vec![
                Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.0).unwrap() },
                Piece { subdomain: x, map: Similitude::affine_1d(0.5, 0.5).unwrap() },
            ],
        )
        .unwrap();
        LocalFractalSystem::new(
            part,
            vec![FunctionSpec::constant(lambda, x).unwrap(); 2],
            vec![FunctionSpec::constant(s, x).unwrap(); 2],
        )
        .unwrap()
    }

    fn graph(f: &SampledFunction) -> PointSet {
        let mut coords = Vec::new();
        for (x, v) in f.grid().nodes().zip(f.values()) {
            coords.extend_from_slice(x.as_slice());
            coords.push(*v);
        }
        PointSet::new(f.grid().dim() + 1, coords).unwrap()
    }

    #[test]
    fn graph_identity_on_the_refined_grid() {
        let sys = constant_system(0.7, 0.4);
        let coarse = Grid::new(unit(), 6).unwrap();
        let fine = Grid::new(unit(), 7).unwrap();
        let f = SampledFunction::from_fn(coarse, |p| (9.0 * p[0]).sin());
        let phi = RbOperator::new(&sys, coarse, fine).unwrap().apply(&f).unwrap();
        let w = wloc_system(&sys, Some(5.0)).unwrap();
        let lhs = w.floc_apply(&graph(&f)).unwrap().deduplicated(DEDUP_TOL);
        let rhs = graph(&phi).deduplicated(DEDUP_TOL);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn zero_scaling_graph_collapses_in_one_step() {
        let sys = constant_system(1.5, 0.0);
        let w = wloc_system(&sys, Some(2.0)).unwrap();
        let run = iterate_attractor(&w, &w.default_initial_set(), 1, &IterationSettings::default()).unwrap();
        assert!(run.set.iter().all(|p| p[1] == 1.5));
    }

    #[test]
    fn constant_graph_attractor_is_the_line_two() {
        let sys = constant_system(1.0, 0.5);
        let w = wloc_system(&sys, None).unwrap();
        let run = iterate_attractor(&w, &w.default_initial_set(), 24, &IterationSettings::default()).unwrap();
        assert!(run.set.iter().all(|p| (p[1] - 2.0).abs() < 1e-6));
    }
}
