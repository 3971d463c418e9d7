//! Sufficient conditions for the fixed point of an RB operator to lie in
//! `L^p`, `B^s_{p,q}` or `F^s_{p,q}`, computed from the similarity ratios
//! `γ_i` and the sup-norms of the scalings `S_i`.
//!
//! All verdicts are one-directional: a failed condition means the criterion
//! does not apply, not that the function lies outside the space.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rb::LocalFractalSystem;

/// Relative tolerance for recognising `γ_i = 1/m`.
const UNIFORM_TOL: f64 = 1e-12;

/// `(Σ|v_i|^p)^{1/p}` for `p < ∞`, `max|v_i|` for `p = ∞`.
pub fn p_quasinorm(v: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("quasi-norm exponent must be positive, got {p}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("quasi-norm of a non-finite vector".into()));
    }
    if p == f64::INFINITY {
        return Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    // factor out the largest entry so large p neither overflows nor underflows
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = v.iter().map(|x| (x.abs() / top).powf(p)).sum();
    Ok(top * sum.powf(1.0 / p))
}

/// `1/min{p,1} − 1`.
pub fn sigma_p(p: f64) -> f64 {
    1.0 / p.min(1.0) - 1.0
}

/// `n/min{p,q}`.
pub fn sigma_npq(n: usize, p: f64, q: f64) -> f64 {
    n as f64 / p.min(q)
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must lie in (0, inf], got {v}")))
    }
}

/// Exponents `(p, q)`, smoothness `s` and difference order `M` of a space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceParams {
    n: usize,
    p: f64,
    q: f64,
    s: f64,
    order: u32,
}

impl SpaceParams {
    /// Requires `M > s ≥ M − 1`. The family thresholds `s > σ` are checked by
    /// the condition checkers, so that the `s = 0` endpoint stays representable.
    pub fn new(n: usize, p: f64, q: f64, s: f64, order: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        check_exponent("p", p)?;
        check_exponent("q", q)?;
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Parameter(format!("smoothness must be finite and non-negative, got {s}")));
        }
        if order == 0 {
            return Err(Error::Parameter("difference order M must be at least 1".into()));
        }
        let m = order as f64;
        if !(m > s && s >= m - 1.0) {
            return Err(Error::Parameter(format!("difference order M = {order} must satisfy M > s >= M - 1 for s = {s}")));
        }
        Ok(Self { n, p, q, s, order })
    }

    /// Smallest admissible order, `M = ⌊s⌋ + 1`.
    pub fn minimal(n: usize, p: f64, q: f64, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Parameter(format!("smoothness must be finite and non-negative, got {s}")));
        }
        Self::new(n, p, q, s, s.floor() as u32 + 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn order(&self) -> u32 {
        self.order
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lebesgue,
    Besov,
    TriebelLizorkin,
}

fn fmt_exp(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// `L^p`, `B^s_{p,q}` or `F^s_{p,q}` as text.
pub fn space_label(family: Family, p: f64, q: f64, s: f64) -> String {
    match family {
        Family::Lebesgue => format!("L^{}", fmt_exp(p)),
        Family::Besov => format!("B^{}_{{{},{}}}", s, fmt_exp(p), fmt_exp(q)),
        Family::TriebelLizorkin => format!("F^{}_{{{},{}}}", s, fmt_exp(p), fmt_exp(q)),
    }
}

/// What the criteria need to know about a system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemSummary {
    pub n: usize,
    pub gammas: Vec<f64>,
    pub sup_s: Vec<f64>,
    /// Every `S_i` is a constant function.
    pub constant_scalings: bool,
}

impl SystemSummary {
    pub fn new(n: usize, gammas: Vec<f64>, sup_s: Vec<f64>) -> Result<Self> {
        if n == 0 || gammas.is_empty() || gammas.len() != sup_s.len() {
            return Err(Error::Invalid("summary needs n > 0 and equally many, non-zero gammas and sup norms".into()));
        }
        if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) || sup_s.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Invalid("gammas must be positive and sup norms non-negative".into()));
        }
        Ok(Self { n, gammas, sup_s, constant_scalings: false })
    }

    /// Summary of a system whose scalings are the constants `s_i`.
    pub fn uniform_constant(n: usize, gammas: Vec<f64>, s: &[f64]) -> Result<Self> {
        let mut out = Self::new(n, gammas, s.iter().map(|v| v.abs()).collect())?;
        out.constant_scalings = true;
        Ok(out)
    }

    pub fn from_system(sys: &LocalFractalSystem) -> Self {
        Self {
            n: sys.dim(),
            gammas: sys.partition().pieces().iter().map(|p| p.map.gamma()).collect(),
            sup_s: sys.scaling_sup_norms().to_vec(),
            constant_scalings: sys.scalings().iter().all(|s| s.as_constant().is_some()),
        }
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// `m` when `n = 1`, every `γ_i = 1/m` and every `S_i` is constant.
    pub fn uniform_pieces(&self) -> Option<usize> {
        let m = self.len();
        let target = 1.0 / m as f64;
        let uniform = self.n == 1
            && self.constant_scalings
            && self.gammas.iter().all(|g| (g - target).abs() <= UNIFORM_TOL * target);
        uniform.then_some(m)
    }
}

/// `ξ_i = γ_i^{n/p}‖S_i‖` (`ξ_i = ‖S_i‖` at `p = ∞`).
pub fn xi_vector(sum: &SystemSummary, p: f64) -> Vec<f64> {
    let e = if p == f64::INFINITY { 0.0 } else { sum.n as f64 / p };
    sum.gammas.iter().zip(&sum.sup_s).map(|(g, s)| g.powf(e) * s).collect()
}

/// `η_i = γ_i^{n/p − s}‖S_i‖`, with `n/p = 0` at `p = ∞`.
pub fn eta_vector(sum: &SystemSummary, p: f64, s: f64) -> Vec<f64> {
    let np = if p == f64::INFINITY { 0.0 } else { sum.n as f64 / p };
    sum.gammas.iter().zip(&sum.sup_s).map(|(g, v)| g.powf(np - s) * v).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "sufficient")]
    Sufficient,
    #[serde(rename = "not-implied")]
    NotImplied,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Sufficient
        } else {
            Verdict::NotImplied
        }
    }

    pub fn is_sufficient(self) -> bool {
        self == Verdict::Sufficient
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sufficient => "sufficient",
            Verdict::NotImplied => "not-implied",
        })
    }
}

/// Closed-form specialisation of a criterion to `γ_i = 1/m` and constant
/// `S_i ≡ s_i` on an interval: `holds` iff `value < bound`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformFormula {
    pub formula: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl UniformFormula {
    fn new(formula: &str, value: f64, bound: f64) -> Self {
        Self { formula: formula.into(), value, bound, holds: value < bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub space: String,
    pub family: Family,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub s: Option<f64>,
    pub order: Option<u32>,
    pub xi: Vec<f64>,
    pub xi_norm: f64,
    pub eta: Option<Vec<f64>>,
    pub eta_norm: Option<f64>,
    /// `σ_p` (Besov) or `σ_{n,p,q}` (Triebel–Lizorkin).
    pub threshold: Option<f64>,
    pub verdict: Verdict,
    pub uniform_formula: Option<UniformFormula>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    /// Largest quantity that has to stay below one.
    pub fn criterion_value(&self) -> f64 {
        self.eta_norm.map_or(self.xi_norm, |e| e.max(self.xi_norm))
    }
}

fn exp_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

const ONE_SIDED: &str = "the criterion is sufficient only; not-implied says nothing about non-membership";

/// `‖ξ‖_p < 1` for `p < ∞`; `max ‖S_i‖ < 1` for `p = ∞`.
pub fn check_lp(sum: &SystemSummary, p: f64) -> Result<ConditionReport> {
    check_exponent("p", p)?;
    let xi = xi_vector(sum, p);
    let xi_norm = p_quasinorm(&xi, p)?;
    let mut notes = vec![ONE_SIDED.to_string()];
    let mut uniform_formula = None;
    if let (Some(m), true) = (sum.uniform_pieces(), p.is_finite()) {
        // ‖ξ‖_p^p = Σ |s_i|^p / m
        let v: f64 = sum.sup_s.iter().map(|s| s.powf(p)).sum();
        uniform_formula = Some(UniformFormula::new("sum |s_i|^p < m", v, m as f64));
    }
    if p == f64::INFINITY {
        notes.push("p = inf uses max ||S_i|| < 1".into());
    }
    Ok(ConditionReport {
        space: space_label(Family::Lebesgue, p, p, 0.0),
        family: Family::Lebesgue,
        p: exp_or_none(p),
        q: None,
        s: None,
        order: None,
        verdict: Verdict::from_bool(xi_norm < 1.0),
        xi,
        xi_norm,
        eta: None,
        eta_norm: None,
        threshold: None,
        uniform_formula,
        notes,
    })
}

fn check_dimension(sum: &SystemSummary, sp: &SpaceParams) -> Result<()> {
    if sum.n != sp.n {
        return Err(Error::Parameter(format!(
            "space dimension {} does not match the system dimension {}",
            sp.n, sum.n
        )));
    }
    Ok(())
}

/// `max{‖ξ‖_p, ‖η‖_q} < 1` with `s > σ_p`.
pub fn check_besov(sum: &SystemSummary, sp: &SpaceParams) -> Result<ConditionReport> {
    check_dimension(sum, sp)?;
    let threshold = sigma_p(sp.p);
    if !(sp.s > threshold) {
        return Err(Error::Parameter(format!(
            "Besov criterion needs s > sigma_p = {threshold}, got s = {}",
            sp.s
        )));
    }
    let xi = xi_vector(sum, sp.p);
    let eta = eta_vector(sum, sp.p, sp.s);
    let xi_norm = p_quasinorm(&xi, sp.p)?;
    let eta_norm = p_quasinorm(&eta, sp.q)?;
    let mut uniform_formula = None;
    if let Some(m) = sum.uniform_pieces() {
        let mf = m as f64;
        if sp.p == f64::INFINITY && sp.q == f64::INFINITY {
            let top = sum.sup_s.iter().fold(0.0f64, |a, b| a.max(*b));
            uniform_formula =
                Some(UniformFormula::new("max{max |s_i|, m^s max |s_i|} < 1", top.max(mf.powf(sp.s) * top), 1.0));
        } else if sp.p == sp.q {
            let v: f64 = sum.sup_s.iter().map(|s| s.powf(sp.p) * mf.powf(sp.p * sp.s - 1.0)).sum();
            uniform_formula = Some(UniformFormula::new("sum |s_i|^p m^(ps-1) < 1", v, 1.0));
        }
    }
    Ok(ConditionReport {
        space: space_label(Family::Besov, sp.p, sp.q, sp.s),
        family: Family::Besov,
        p: exp_or_none(sp.p),
        q: exp_or_none(sp.q),
        s: Some(sp.s),
        order: Some(sp.order),
        verdict: Verdict::from_bool(xi_norm.max(eta_norm) < 1.0),
        xi,
        xi_norm,
        eta: Some(eta),
        eta_norm: Some(eta_norm),
        threshold: Some(threshold),
        uniform_formula,
        notes: vec![ONE_SIDED.to_string()],
    })
}

/// `max{‖ξ‖_p, ‖η‖_p} < 1` with `p < ∞` and `s > σ_{n,p,q}`.
pub fn check_triebel(sum: &SystemSummary, sp: &SpaceParams) -> Result<ConditionReport> {
    check_dimension(sum, sp)?;
    if sp.p == f64::INFINITY {
        return Err(Error::Parameter("Triebel-Lizorkin spaces need p < inf".into()));
    }
    let threshold = sigma_npq(sp.n, sp.p, sp.q);
    if !(sp.s > threshold) {
        return Err(Error::Parameter(format!(
            "Triebel-Lizorkin criterion needs s > sigma_npq = {threshold}, got s = {}",
            sp.s
        )));
    }
    let xi = xi_vector(sum, sp.p);
    let eta = eta_vector(sum, sp.p, sp.s);
    let xi_norm = p_quasinorm(&xi, sp.p)?;
    let eta_norm = p_quasinorm(&eta, sp.p)?;
    let uniform_formula = sum.uniform_pieces().map(|m| {
        let mf = m as f64;
        let v: f64 = sum.sup_s.iter().map(|s| mf.powf(sp.p * sp.s - 1.0) * s.powf(sp.p)).sum();
        UniformFormula::new("sum m^(ps-1) |s_i|^p < 1", v, 1.0)
    });
    Ok(ConditionReport {
        space: space_label(Family::TriebelLizorkin, sp.p, sp.q, sp.s),
        family: Family::TriebelLizorkin,
        p: exp_or_none(sp.p),
        q: exp_or_none(sp.q),
        s: Some(sp.s),
        order: Some(sp.order),
        verdict: Verdict::from_bool(xi_norm.max(eta_norm) < 1.0),
        xi,
        xi_norm,
        eta: Some(eta),
        eta_norm: Some(eta_norm),
        threshold: Some(threshold),
        uniform_formula,
        notes: vec![ONE_SIDED.to_string(), "the condition does not depend on q".to_string()],
    })
}

/// Local Hardy space `h_p = F^0_{p,2}`. Its smoothness `s = 0` lies below the
/// Triebel–Lizorkin threshold, so the general checker is not run; the verdict
/// comes from `Σ|s_i|^p < m` in the uniform case and is not-implied otherwise.
pub fn check_local_hardy(sum: &SystemSummary, p: f64) -> Result<ConditionReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("local Hardy space needs 0 < p < inf, got {p}")));
    }
    let xi = xi_vector(sum, p);
    let xi_norm = p_quasinorm(&xi, p)?;
    let threshold = sigma_npq(sum.n, p, 2.0);
    let mut notes = vec![
        ONE_SIDED.to_string(),
        format!("s = 0 violates s > sigma_npq = {threshold}; reported for reference, general criterion not applied"),
    ];
    let uniform_formula = sum.uniform_pieces().map(|m| {
        let v: f64 = sum.sup_s.iter().map(|s| s.powf(p)).sum();
        UniformFormula::new("sum |s_i|^p < m", v, m as f64)
    });
    if uniform_formula.is_none() {
        notes.push("closed form available only for gamma_i = 1/m and constant S_i on an interval".into());
    }
    Ok(ConditionReport {
        space: format!("h^{}", fmt_exp(p)),
        family: Family::TriebelLizorkin,
        p: Some(p),
        q: Some(2.0),
        s: Some(0.0),
        order: Some(1),
        verdict: Verdict::from_bool(uniform_formula.as_ref().is_some_and(|u| u.holds)),
        eta: Some(xi.clone()),
        eta_norm: Some(xi_norm),
        xi,
        xi_norm,
        threshold: Some(threshold),
        uniform_formula,
        notes,
    })
}

/// Classical spaces identified with Besov or Triebel–Lizorkin spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    Lebesgue { p: f64 },
    /// `C^s = B^s_{∞,∞}`, `s > 0` not an integer.
    Hoelder { s: f64 },
    /// `W^{k,p} = F^k_{p,2}`, `1 < p < ∞`.
    Sobolev { k: u32, p: f64 },
    /// `W^{s,p} = B^s_{p,p} = F^s_{p,p}`, `1 ≤ p < ∞`, `s > 0` not an integer.
    Slodeckij { s: f64, p: f64 },
    /// `H^{s,p} = F^s_{p,2}`, `1 < p < ∞`, `s > 0`.
    Bessel { s: f64, p: f64 },
    /// `h_p = F^0_{p,2}`, `0 < p < ∞`.
    LocalHardy { p: f64 },
}

/// A preset resolved to the criterion it is checked with.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetSpace {
    pub name: String,
    pub family: Family,
    /// `None` for Lebesgue and local Hardy presets.
    pub params: Option<SpaceParams>,
    /// Equal space in the other family, when one applies.
    pub alternate: Option<(Family, SpaceParams)>,
    pub caveat: Option<String>,
}

fn is_integer(v: f64) -> bool {
    v.fract() == 0.0
}

/// Resolves a preset on `ℝⁿ`, choosing the minimal difference order.
pub fn classical_preset(n: usize, preset: Preset) -> Result<PresetSpace> {
    let inf = f64::INFINITY;
    let bad = |msg: String| Err(Error::Parameter(msg));
    let open_p = |p: f64| p > 1.0 && p < inf;
    match preset {
        Preset::Lebesgue { p } => {
            check_exponent("p", p)?;
            Ok(PresetSpace { name: format!("L^{}", fmt_exp(p)), family: Family::Lebesgue, params: None, alternate: None, caveat: None })
        }
        Preset::Hoelder { s } => {
            if !(s > 0.0 && s.is_finite()) || is_integer(s) {
                return bad(format!("Hoelder spaces C^s need s > 0 and s not an integer, got {s}"));
            }
            Ok(PresetSpace {
                name: format!("C^{s}"),
                family: Family::Besov,
                params: Some(SpaceParams::minimal(n, inf, inf, s)?),
                alternate: None,
                caveat: None,
            })
        }
        Preset::Sobolev { k, p } => {
            if k == 0 || !open_p(p) {
                return bad(format!("Sobolev spaces W^(k,p) need k >= 1 and 1 < p < inf, got k = {k}, p = {p}"));
            }
            let s = k as f64;
            let alternate = (p == 2.0).then(|| SpaceParams::minimal(n, 2.0, 2.0, s).map(|sp| (Family::Besov, sp))).transpose()?;
            Ok(PresetSpace {
                name: format!("W^({k},{p})"),
                family: Family::TriebelLizorkin,
                params: Some(SpaceParams::minimal(n, p, 2.0, s)?),
                alternate,
                caveat: None,
            })
        }
        Preset::Slodeckij { s, p } => {
            if !(p >= 1.0 && p < inf) || !(s > 0.0 && s.is_finite()) || is_integer(s) {
                return bad(format!(
                    "Slodeckij spaces W^(s,p) need 1 <= p < inf and s > 0 not an integer, got s = {s}, p = {p}"
                ));
            }
            let sp = SpaceParams::minimal(n, p, p, s)?;
            let tl_ok = s > sigma_npq(n, p, p);
            Ok(PresetSpace {
                name: format!("W^({s},{p})"),
                family: Family::Besov,
                params: Some(sp),
                alternate: tl_ok.then_some((Family::TriebelLizorkin, sp)),
                caveat: (!tl_ok).then(|| {
                    format!(
                        "F^{s}_({p},{p}) form not checked: s <= sigma_npq = {}",
                        sigma_npq(n, p, p)
                    )
                }),
            })
        }
        Preset::Bessel { s, p } => {
            if !open_p(p) || !(s > 0.0 && s.is_finite()) {
                return bad(format!("Bessel potential spaces H^(s,p) need 1 < p < inf and s > 0, got s = {s}, p = {p}"));
            }
            Ok(PresetSpace {
                name: format!("H^({s},{p})"),
                family: Family::TriebelLizorkin,
                params: Some(SpaceParams::minimal(n, p, 2.0, s)?),
                alternate: None,
                caveat: None,
            })
        }
        Preset::LocalHardy { p } => {
            if !(p > 0.0 && p < inf) {
                return bad(format!("local Hardy spaces h_p need 0 < p < inf, got {p}"));
            }
            Ok(PresetSpace {
                name: format!("h^{}", fmt_exp(p)),
                family: Family::TriebelLizorkin,
                params: None,
                alternate: None,
                caveat: Some(format!(
                    "h_p = F^0_(p,2) has s = 0 <= sigma_npq = {}; only the closed-form uniform criterion is reported",
                    sigma_npq(n, p, 2.0)
                )),
            })
        }
    }
}

/// Runs the criterion of a preset (and of its alternate form, if any).
pub fn check_preset(sum: &SystemSummary, preset: Preset) -> Result<Vec<ConditionReport>> {
    let space = classical_preset(sum.n, preset)?;
    let run = |family: Family, sp: &SpaceParams| match family {
        Family::Besov => check_besov(sum, sp),
        Family::TriebelLizorkin => check_triebel(sum, sp),
        Family::Lebesgue => check_lp(sum, sp.p),
    };
    let mut out = Vec::new();
    let mut primary = match (preset, space.params) {
        (Preset::Lebesgue { p }, _) => check_lp(sum, p)?,
        (Preset::LocalHardy { p }, _) => check_local_hardy(sum, p)?,
        (_, Some(sp)) => run(space.family, &sp)?,
        (_, None) => unreachable!("smoothness presets always carry parameters"),
    };
    primary.space = format!("{} = {}", space.name, primary.space);
    if let Some(c) = &space.caveat {
        primary.notes.push(c.clone());
    }
    out.push(primary);
    if let Some((family, sp)) = space.alternate {
        let mut alt = run(family, &sp)?;
        alt.space = format!("{} = {}", space.name, alt.space);
        out.push(alt);
    }
    Ok(out)
}
