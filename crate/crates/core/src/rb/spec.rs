use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Point};

/// Highest per-axis polynomial degree.
pub const MAX_DEGREE: usize = 4;

/// Default number of probe points per axis for sup-norms of non-constant specs.
pub const DEFAULT_PROBE: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    Constant(f64),
    /// Tensor polynomial `Σ c[a + (d+1)·b] x^a y^b` in global coordinates.
    Polynomial { degree: usize, coeffs: Vec<f64> },
    /// Samples on a uniform grid over this function's domain (first axis fastest),
    /// multilinearly interpolated and clamped to the domain.
    Samples { counts: [usize; 2], values: Vec<f64> },
}

/// A bounded function on a box, used for the `λ_i` and `S_i` of a system.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    kind: FunctionKind,
    domain: AxisBox,
}

impl FunctionSpec {
    pub fn constant(c: f64, domain: AxisBox) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::Invalid("constant must be finite".into()));
        }
        Ok(Self { kind: FunctionKind::Constant(c), domain })
    }

    /// Coefficients in increasing degree; in 2-D a row-major `(d+1)×(d+1)`
    /// table with the x-power varying fastest.
    pub fn polynomial(coeffs: Vec<f64>, domain: AxisBox) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("polynomial coefficients must be finite and non-empty".into()));
        }
        let per_axis = match domain.dim() {
            1 => coeffs.len(),
            _ => {
                let r = (coeffs.len() as f64).sqrt().round() as usize;
                if r * r != coeffs.len() {
                    return Err(Error::Invalid(format!(
                        "2-D polynomial needs a square coefficient table, got {} entries",
                        coeffs.len()
                    )));
                }
                r
            }
        };
        let degree = per_axis - 1;
        if degree > MAX_DEGREE {
            return Err(Error::Invalid(format!(
                "polynomial degree {degree} exceeds the maximum per-axis degree {MAX_DEGREE}"
            )));
        }
        Ok(Self { kind: FunctionKind::Polynomial { degree, coeffs }, domain })
    }

    pub fn samples(counts: &[usize], values: Vec<f64>, domain: AxisBox) -> Result<Self> {
        if counts.len() != domain.dim() {
            return Err(Error::Invalid("sample counts must match the domain dimension".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(Error::Invalid("sampled specs need at least 2 points per axis".into()));
        }
        let total: usize = counts.iter().product();
        if values.len() != total {
            return Err(Error::Invalid(format!(
                "sampled spec expects {total} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("sample values must be finite".into()));
        }
        let mut c = [1usize; 2];
        c[..counts.len()].copy_from_slice(counts);
        Ok(Self { kind: FunctionKind::Samples { counts: c, values }, domain })
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn domain(&self) -> &AxisBox {
        &self.domain
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            FunctionKind::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match &self.kind {
            FunctionKind::Constant(c) => *c,
            FunctionKind::Polynomial { degree, coeffs } => {
                let horner = |cs: &[f64], t: f64| cs.iter().rev().fold(0.0, |acc, c| acc * t + c);
                match self.domain.dim() {
                    1 => horner(coeffs, x[0]),
                    _ => {
                        let stride = degree + 1;
                        (0..stride)
                            .rev()
                            .fold(0.0, |acc, b| acc * x[1] + horner(&coeffs[b * stride..(b + 1) * stride], x[0]))
                    }
                }
            }
            FunctionKind::Samples { counts, values } => self.interpolate(counts, values, x),
        }
    }

    fn interpolate(&self, counts: &[usize; 2], values: &[f64], x: &Point) -> f64 {
        let dim = self.domain.dim();
        let mut cell = [(0usize, 0.0f64); 2];
        for k in 0..dim {
            let last = (counts[k] - 1) as f64;
            let t = ((x[k] - self.domain.lower()[k]) / self.domain.side(k) * last).clamp(0.0, last);
            let j = (t.floor() as usize).min(counts[k] - 2);
            cell[k] = (j, t - j as f64);
        }
        match dim {
            1 => {
                let (j, w) = cell[0];
                (1.0 - w) * values[j] + w * values[j + 1]
            }
            _ => {
                let (i, wx) = cell[0];
                let (j, wy) = cell[1];
                let at = |a: usize, b: usize| values[a + counts[0] * b];
                (1.0 - wx) * (1.0 - wy) * at(i, j)
                    + wx * (1.0 - wy) * at(i + 1, j)
                    + (1.0 - wx) * wy * at(i, j + 1)
                    + wx * wy * at(i + 1, j + 1)
            }
        }
    }

    /// `sup |f|` over this function's (closed) domain. Exact for constants and for
    /// samples (multilinear interpolants peak at nodes); polynomials are
    /// probed at `probe` points per axis, endpoints included.
    pub fn sup_norm(&self, probe: usize) -> f64 {
        match &self.kind {
            FunctionKind::Constant(c) => c.abs(),
            FunctionKind::Samples { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            FunctionKind::Polynomial { .. } => {
                let probe = probe.max(2);
                let d = &self.domain;
                let coord = |k: usize, j: usize| {
                    if j + 1 == probe {
                        d.upper()[k]
                    } else {
                        d.lower()[k] + d.side(k) * j as f64 / (probe - 1) as f64
                    }
                };
                match d.dim() {
                    1 => (0..probe).fold(0.0, |m, j| m.max(self.eval(&Point::x(coord(0, j))).abs())),
                    _ => (0..probe)
                        .flat_map(|b| (0..probe).map(move |a| (a, b)))
                        .fold(0.0, |m, (a, b)| {
                            m.max(self.eval(&Point::xy(coord(0, a), coord(1, b))).abs())
                        }),
                }
            }
        }
    }

    /// `a·f + b·g` for specs on the same domain. Constants and polynomials
    /// combine freely; sampled specs only with samples on the same lattice.
    pub fn linear_combination(a: f64, f: &FunctionSpec, b: f64, g: &FunctionSpec) -> Result<FunctionSpec> {
        if !f.domain.approx_eq(&g.domain, f.domain.tol()) {
            return Err(Error::Invalid("cannot combine specs on different domains".into()));
        }
        use FunctionKind::*;
        match (&f.kind, &g.kind) {
            (Constant(x), Constant(y)) => FunctionSpec::constant(a * x + b * y, f.domain),
            (Samples { counts: c1, values: v1 }, Samples { counts: c2, values: v2 }) if c1 == c2 => {
                let values = v1.iter().zip(v2).map(|(x, y)| a * x + b * y).collect();
                Ok(FunctionSpec { kind: Samples { counts: *c1, values }, domain: f.domain })
            }
            (Samples { .. }, _) | (_, Samples { .. }) => Err(Error::Invalid(
                "sampled specs combine only with samples on the same lattice".into(),
            )),
            _ => {
                let dim = f.domain.dim();
                let degree = f.degree().max(g.degree());
                let (pf, pg) = (f.padded_coeffs(degree), g.padded_coeffs(degree));
                let coeffs = pf.iter().zip(&pg).map(|(x, y)| a * x + b * y).collect();
                debug_assert_eq!(pf.len(), (degree + 1).pow(dim as u32));
                FunctionSpec::polynomial(coeffs, f.domain)
            }
        }
    }

    fn degree(&self) -> usize {
        match &self.kind {
            FunctionKind::Polynomial { degree, .. } => *degree,
            _ => 0,
        }
    }

    fn padded_coeffs(&self, degree: usize) -> Vec<f64> {
        let stride = degree + 1;
        let dim = self.domain.dim();
        let mut out = vec![0.0; stride.pow(dim as u32)];
        match &self.kind {
            FunctionKind::Constant(c) => out[0] = *c,
            FunctionKind::Polynomial { degree: d, coeffs } => {
                let s = d + 1;
                match dim {
                    1 => out[..s].copy_from_slice(coeffs),
                    _ => {
                        for b in 0..s {
                            for a in 0..s {
                                out[a + stride * b] = coeffs[a + s * b];
                            }
                        }
                    }
                }
            }
            FunctionKind::Samples { .. } => unreachable!("samples are handled before padding"),
        }
        out
    }
}
