use std::fmt;
use std::str::FromStr;

use locfrac::conditions::{
    check_besov, check_preset, check_triebel, classical_preset, ConditionReport, Family, Preset, SpaceParams,
    SystemSummary,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A function space named in a config `[[space]]` table or a `--space` flag.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceQuery {
    Lebesgue { p: f64 },
    Hoelder { s: f64 },
    Sobolev { k: u32, p: f64 },
    Slodeckij { s: f64, p: f64 },
    Bessel { s: f64, p: f64 },
    Hardy { p: f64 },
    Besov { p: f64, q: f64, s: f64, order: Option<u32> },
    Triebel { p: f64, q: f64, s: f64, order: Option<u32> },
}

/// What a seminorm estimate is computed for.
pub struct EstimatorTarget {
    pub family: Family,
    pub params: SpaceParams,
    pub note: Option<String>,
}

impl SpaceQuery {
    fn preset(self) -> Option<Preset> {
        Some(match self {
            SpaceQuery::Lebesgue { p } => Preset::Lebesgue { p },
            SpaceQuery::Hoelder { s } => Preset::Hoelder { s },
            SpaceQuery::Sobolev { k, p } => Preset::Sobolev { k, p },
            SpaceQuery::Slodeckij { s, p } => Preset::Slodeckij { s, p },
            SpaceQuery::Bessel { s, p } => Preset::Bessel { s, p },
            SpaceQuery::Hardy { p } => Preset::LocalHardy { p },
            SpaceQuery::Besov { .. } | SpaceQuery::Triebel { .. } => return None,
        })
    }

    fn raw(self, n: usize) -> Option<Result<(Family, SpaceParams), CliError>> {
        let (family, p, q, s, order) = match self {
            SpaceQuery::Besov { p, q, s, order } => (Family::Besov, p, q, s, order),
            SpaceQuery::Triebel { p, q, s, order } => (Family::TriebelLizorkin, p, q, s, order),
            _ => return None,
        };
        let sp = match order {
            Some(m) => SpaceParams::new(n, p, q, s, m),
            None => SpaceParams::minimal(n, p, q, s),
        };
        Some(sp.map(|sp| (family, sp)).map_err(CliError::from))
    }

    /// Condition reports from the library checkers, one per identification
    /// of the space.
    pub fn check(self, sum: &SystemSummary) -> Result<Vec<ConditionReport>, CliError> {
        if let Some(preset) = self.preset() {
            return Ok(check_preset(sum, preset)?);
        }
        let (family, sp) = self.raw(sum.n).expect("raw query")?;
        Ok(vec![match family {
            Family::Besov => check_besov(sum, &sp)?,
            _ => check_triebel(sum, &sp)?,
        }])
    }

    pub fn estimator_target(self, n: usize) -> Result<EstimatorTarget, CliError> {
        if let Some(r) = self.raw(n) {
            let (family, params) = r?;
            return Ok(EstimatorTarget { family, params, note: None });
        }
        if let SpaceQuery::Hoelder { s } = self {
            if s.fract() == 0.0 && s > 0.0 {
                return Ok(EstimatorTarget {
                    family: Family::Besov,
                    params: SpaceParams::minimal(n, f64::INFINITY, f64::INFINITY, s)?,
                    note: Some(format!("integer s = {s}: estimated as the Zygmund seminorm of B^{s}_(inf,inf)")),
                });
            }
        }
        let space = classical_preset(n, self.preset().expect("preset query"))?;
        match space.params {
            Some(params) => Ok(EstimatorTarget { family: space.family, params, note: space.caveat }),
            None => Err(CliError::Semantic(format!("{self} has no difference seminorm"))),
        }
    }
}

impl fmt::Display for SpaceQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ord = |o: &Option<u32>| o.map(|m| format!(",order={m}")).unwrap_or_default();
        match self {
            SpaceQuery::Lebesgue { p } => write!(f, "lebesgue:p={p}"),
            SpaceQuery::Hoelder { s } => write!(f, "hoelder:s={s}"),
            SpaceQuery::Sobolev { k, p } => write!(f, "sobolev:k={k},p={p}"),
            SpaceQuery::Slodeckij { s, p } => write!(f, "slodeckij:s={s},p={p}"),
            SpaceQuery::Bessel { s, p } => write!(f, "bessel:s={s},p={p}"),
            SpaceQuery::Hardy { p } => write!(f, "hardy:p={p}"),
            SpaceQuery::Besov { p, q, s, order } => write!(f, "besov:p={p},q={q},s={s}{}", ord(order)),
            SpaceQuery::Triebel { p, q, s, order } => write!(f, "triebel:p={p},q={q},s={s}{}", ord(order)),
        }
    }
}

/// `kind:key=value,...`, for example `besov:p=2,q=inf,s=0.5` or `sobolev:k=1,p=2`.
impl FromStr for SpaceQuery {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got `{item}`"))?;
            let v: f64 = v.trim().parse().map_err(|_| format!("`{}` is not a number", v.trim()))?;
            pairs.push((k.trim().to_string(), v));
        }
        let mut take = |key: &str| -> Result<Option<f64>, String> {
            match pairs.iter().position(|(k, _)| k == key) {
                Some(i) => Ok(Some(pairs.remove(i).1)),
                None => Ok(None),
            }
        };
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| format!("{kind} needs {key}="));
        let whole = |v: f64, key: &str| -> Result<u32, String> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(format!("{key} must be a non-negative integer, got {v}"))
            }
        };
        let q = match kind.trim() {
            "lebesgue" => SpaceQuery::Lebesgue { p: need(take("p")?, "p")? },
            "hoelder" => SpaceQuery::Hoelder { s: need(take("s")?, "s")? },
            "sobolev" => SpaceQuery::Sobolev { k: whole(need(take("k")?, "k")?, "k")?, p: need(take("p")?, "p")? },
            "slodeckij" => SpaceQuery::Slodeckij { s: need(take("s")?, "s")?, p: need(take("p")?, "p")? },
            "bessel" => SpaceQuery::Bessel { s: need(take("s")?, "s")?, p: need(take("p")?, "p")? },
            "hardy" => SpaceQuery::Hardy { p: need(take("p")?, "p")? },
            k @ ("besov" | "triebel") => {
                let p = need(take("p")?, "p")?;
                let q = need(take("q")?, "q")?;
                let s = need(take("s")?, "s")?;
                let order = take("order")?.map(|m| whole(m, "order")).transpose()?;
                if k == "besov" {
                    SpaceQuery::Besov { p, q, s, order }
                } else {
                    SpaceQuery::Triebel { p, q, s, order }
                }
            }
            other => return Err(format!("unknown space kind `{other}`")),
        };
        if let Some((k, _)) = pairs.first() {
            return Err(format!("unknown key `{k}` for {kind}"));
        }
        Ok(q)
    }
}
