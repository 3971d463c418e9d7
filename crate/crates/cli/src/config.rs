use std::path::Path;

use locfrac::attractor::{IterationSettings, LocalMapSystem, Membership, DEDUP_TOL};
use locfrac::seminorm::HGridSettings;
use locfrac::{AxisBox, FunctionSpec, LocalFractalSystem, Ortho, Partition, Piece, Point, Similitude, SolverSettings};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::query::SpaceQuery;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub domain: BoxConfig,
    #[serde(rename = "piece")]
    pub pieces: Vec<PieceConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, rename = "space")]
    pub spaces: Vec<SpaceQuery>,
    #[serde(default)]
    pub seminorm: SeminormConfig,
    #[serde(default)]
    pub attractor: AttractorConfig,
    #[serde(default = "default_validation_resolution")]
    pub validation_resolution: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PieceConfig {
    /// Defaults to the whole domain.
    pub subdomain: Option<BoxConfig>,
    pub gamma: f64,
    /// Row-major orthogonal matrix; identity when absent.
    pub ortho: Option<Vec<f64>>,
    pub tau: Vec<f64>,
    pub lambda: FunctionConfig,
    pub scaling: FunctionConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionConfig {
    Constant(f64),
    Polynomial(Vec<f64>),
    Samples { counts: Vec<usize>, values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub level: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub probe: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self { level: s.level, tol: s.tol, max_iter: s.max_iter, probe: locfrac::rb::DEFAULT_PROBE }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeminormConfig {
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub radii: usize,
    pub directions: usize,
}

impl Default for SeminormConfig {
    fn default() -> Self {
        let s = HGridSettings::default();
        Self { h_min: s.h_min, h_max: s.h_max, radii: s.radii, directions: s.directions }
    }
}

impl SeminormConfig {
    pub fn settings(&self) -> HGridSettings {
        HGridSettings { h_min: self.h_min, h_max: self.h_max, radii: self.radii, directions: self.directions }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AttractorMode {
    /// The maps `u_i` restricted to their subdomains.
    Local,
    /// The graph maps built from `λ_i` and `S_i`.
    Graph,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipConfig {
    Closed,
    HalfOpen,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttractorConfig {
    pub mode: AttractorMode,
    pub membership: MembershipConfig,
    pub steps: usize,
    pub max_points: usize,
    /// Random initial points when `--seed` is given; the default lattice otherwise.
    pub random_points: usize,
    pub y_bound: Option<f64>,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        Self {
            mode: AttractorMode::Local,
            membership: MembershipConfig::Closed,
            steps: 12,
            max_points: IterationSettings::default().max_points,
            random_points: 4096,
            y_bound: None,
        }
    }
}

fn default_validation_resolution() -> usize {
    256
}

/// Line and column (1-based) of a byte offset.
fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl SystemConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&src, &path.display().to_string())
    }

    pub fn parse(src: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| {
            let (line, col) = e.span().map_or((0, 0), |s| line_col(src, s.start));
            CliError::Parse { origin: origin.to_string(), line, col, message: e.message().to_string() }
        })
    }

    pub fn domain(&self) -> Result<AxisBox, CliError> {
        self.domain.to_box()
    }

    pub fn partition(&self) -> Result<Partition, CliError> {
        let domain = self.domain()?;
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| p.piece(&domain).map_err(|e| e.context(format!("piece {}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Partition::new(domain, pieces)?)
    }

    pub fn system(&self) -> Result<LocalFractalSystem, CliError> {
        let partition = self.partition()?;
        let mut lambdas = Vec::new();
        let mut scalings = Vec::new();
        for (i, (p, piece)) in self.pieces.iter().zip(partition.pieces()).enumerate() {
            let ctx = |what: &str| format!("piece {} {what}", i + 1);
            lambdas.push(p.lambda.spec(piece.subdomain).map_err(|e| e.context(ctx("lambda")))?);
            scalings.push(p.scaling.spec(piece.subdomain).map_err(|e| e.context(ctx("scaling")))?);
        }
        if self.solver.probe < 2 {
            return Err(CliError::Semantic("solver.probe must be at least 2".into()));
        }
        Ok(LocalFractalSystem::new(partition, lambdas, scalings)?.with_probe(self.solver.probe))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings { level: self.solver.level, tol: self.solver.tol, max_iter: self.solver.max_iter }
    }

    pub fn map_system(&self) -> Result<LocalMapSystem, CliError> {
        match self.attractor.mode {
            AttractorMode::Graph => Ok(locfrac::attractor::wloc_system(&self.system()?, self.attractor.y_bound)?),
            AttractorMode::Local => {
                let partition = self.partition()?;
                let membership = match self.attractor.membership {
                    MembershipConfig::Closed => Membership::Closed,
                    MembershipConfig::HalfOpen => Membership::HalfOpen,
                };
                Ok(LocalMapSystem::new(
                    *partition.domain(),
                    partition.pieces().iter().map(|p| p.subdomain).collect(),
                    partition.pieces().iter().map(|p| p.map).collect(),
                    membership,
                )?)
            }
        }
    }

    pub fn iteration_settings(&self) -> IterationSettings {
        IterationSettings { max_points: self.attractor.max_points, dedup_tol: DEDUP_TOL }
    }
}

impl BoxConfig {
    fn to_box(&self) -> Result<AxisBox, CliError> {
        Ok(AxisBox::new(Point::new(&self.lower)?, Point::new(&self.upper)?)?)
    }
}

impl PieceConfig {
    fn piece(&self, domain: &AxisBox) -> Result<Piece, CliError> {
        let d = domain.dim();
        let subdomain = match &self.subdomain {
            Some(b) => b.to_box()?,
            None => *domain,
        };
        let ortho = match &self.ortho {
            Some(m) => Ortho::from_row_major(d, m)?,
            None => Ortho::identity(d),
        };
        if self.tau.len() != d {
            return Err(CliError::Semantic(format!("tau has {} entries, the domain is {d}-D", self.tau.len())));
        }
        let map = Similitude::new(self.gamma, ortho, Point::new(&self.tau)?)?;
        Ok(Piece { subdomain, map })
    }
}

impl FunctionConfig {
    fn spec(&self, domain: AxisBox) -> Result<FunctionSpec, CliError> {
        Ok(match self {
            FunctionConfig::Constant(c) => FunctionSpec::constant(*c, domain)?,
            FunctionConfig::Polynomial(c) => FunctionSpec::polynomial(c.clone(), domain)?,
            FunctionConfig::Samples { counts, values } => FunctionSpec::samples(counts, values.clone(), domain)?,
        })
    }
}
