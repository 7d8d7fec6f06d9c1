//! Run configuration: JSON file contents merged under command-line flags.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::priors::MixingParams;
use crate::quad::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 200_000,
            seed: 20_240_101,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub w_grid: Option<GridSpec>,
    pub mu_grid: Option<GridSpec>,
    pub i_list: Option<GridSpec>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: Option<u32>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub quad: QuadratureConfig,
    pub mc: McConfig,
    pub grids: GridConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))?;
        cfg.quad.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Mixing parameters with `overrides` taking precedence; the Stein
    /// prior in six dimensions fills any remaining gap.
    pub fn params(&self, overrides: ParamOverrides) -> Result<MixingParams> {
        MixingParams::new(
            overrides.d.or(self.d).unwrap_or(6),
            overrides.a.or(self.a).unwrap_or(0.0),
            overrides.b.or(self.b).unwrap_or(0.0),
            overrides.c.or(self.c).unwrap_or(0.0),
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamOverrides {
    pub d: Option<u32>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

/// A list of points: `1,2,5`, `log:LO:HI:N` or `lin:LO:HI:N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec(pub Vec<f64>);

impl GridSpec {
    pub fn points(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::Config(format!("grid '{s}': {why}"));
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("'{t}' is not a number")))
        };
        let s = s.trim();
        let points = if let Some(rest) = s.strip_prefix("log:").or_else(|| s.strip_prefix("lin:")) {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad("expected KIND:LO:HI:N"));
            }
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| bad("N must be a positive integer"))?;
            if n == 0 || !(hi >= lo) {
                return Err(bad("need N >= 1 and HI >= LO"));
            }
            let log = s.starts_with("log:");
            if log && !(lo > 0.0) {
                return Err(bad("log grids need LO > 0"));
            }
            (0..n)
                .map(|j| {
                    let t = if n == 1 {
                        0.0
                    } else {
                        j as f64 / (n - 1) as f64
                    };
                    if log {
                        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                    } else {
                        lo + t * (hi - lo)
                    }
                })
                .collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if points.is_empty() || points.iter().any(|v| !v.is_finite()) {
            return Err(bad("points must be finite"));
        }
        Ok(GridSpec(points))
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            List(Vec<f64>),
        }
        match Raw::deserialize(de)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::List(v) if !v.is_empty() => Ok(GridSpec(v)),
            Raw::List(_) => Err(serde::de::Error::custom("grid list is empty")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!("0, 2,5".parse::<GridSpec>().unwrap().0, vec![0.0, 2.0, 5.0]);
        let g: GridSpec = "log:1e-2:1e2:5".parse().unwrap();
        for (v, e) in g.0.iter().zip([1e-2, 1e-1, 1.0, 10.0, 100.0]) {
            assert!((v / e - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            "lin:0:1:3".parse::<GridSpec>().unwrap().0,
            vec![0.0, 0.5, 1.0]
        );
        assert!("log:0:1:3".parse::<GridSpec>().is_err());
        assert!("1,x".parse::<GridSpec>().is_err());
    }

    #[test]
    fn config_precedence() {
        let cfg = RunConfig::from_json(
            r#"{"d": 8, "a": -1, "mc": {"n": 5000}, "grids": {"mu_grid": [0, 1]}}"#,
        )
        .unwrap();
        let p = cfg
            .params(ParamOverrides {
                a: Some(0.5),
                ..Default::default()
            })
            .unwrap();
        assert_eq!((p.d(), p.a(), p.b()), (8, 0.5, 0.0));
        assert_eq!(cfg.mc.n, 5000);
        assert_eq!(cfg.mc.seed, McConfig::default().seed);
        assert_eq!(cfg.grids.mu_grid.unwrap().0, vec![0.0, 1.0]);
    }

    #[test]
    fn config_rejects_unknown_fields_and_bad_params() {
        assert!(RunConfig::from_json(r#"{"dim": 3}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"d": 4, "a": 1.5}"#).unwrap();
        assert!(cfg.params(ParamOverrides::default()).is_err());
    }
}
