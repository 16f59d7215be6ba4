//! Flat key-value run configuration.
//!
//! One `key = value` pair per line, `#` starts a comment. Every key must
//! be consumed by the command reading the file; leftovers are rejected so
//! typos cannot silently fall back to defaults. The raw text is retained
//! for the reproducibility copy written into run directories.

use std::collections::BTreeMap;
use std::path::Path;

use crate::catalog::{DensityFn, FamilySpec, GaugePhi, GaugeSpec, Heating};
use crate::error::{Error, Result};
use crate::flow::{BoussinesqParams, CompressibleParams};
use crate::pv::PvConvention;
use crate::timestep::{DtPolicy, ModelKind};

/// Parsed config file with used-key tracking.
pub struct ConfigFile {
    entries: BTreeMap<String, Entry>,
    raw: String,
}

struct Entry {
    value: String,
    used: std::cell::Cell<bool>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let stripped = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, found `{stripped}`"),
                )
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    "empty key or value",
                ));
            }
            if entries
                .insert(
                    key.clone(),
                    Entry {
                        value,
                        used: std::cell::Cell::new(false),
                    },
                )
                .is_some()
            {
                return Err(Error::config(key, "duplicate key"));
            }
        }
        Ok(ConfigFile {
            entries,
            raw: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path)?;
        ConfigFile::parse(&text)
    }

    /// Original file text, for the reproducibility copy.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    fn lookup(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| {
            e.used.set(true);
            e.value.as_str()
        })
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.lookup(key).unwrap_or(default).to_string()
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.lookup(key) {
            None => Ok(default),
            Some("inf") | Some("infinity") => Ok(f64::INFINITY),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("not a number: `{v}`"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.lookup(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("not an integer: `{v}`"))),
        }
    }

    pub fn get_i32(&self, key: &str, default: i32) -> Result<i32> {
        match self.lookup(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("not an integer: `{v}`"))),
        }
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        match self.lookup(key) {
            None => Err(Error::config(key, "required key is missing")),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("not an integer: `{v}`"))),
        }
    }

    /// Error if any key was never consumed; call after building configs.
    pub fn finish(&self) -> Result<()> {
        let unused: Vec<&str> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.used.get())
            .map(|(k, _)| k.as_str())
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::config(
                unused.join(", "),
                "unknown key(s) for this command",
            ))
        }
    }

    // --- typed sections -------------------------------------------------

    pub fn grid(&self) -> Result<crate::grid::Grid> {
        let n = self.require_u64("grid_n")? as usize;
        let box_length = self.get_f64("box_length", std::f64::consts::TAU)?;
        let dealias = self.get_f64("dealias_fraction", 2.0 / 3.0)?;
        crate::grid::Grid::new(n, box_length, dealias)
    }

    pub fn boussinesq_params(&self) -> Result<BoussinesqParams> {
        let params = BoussinesqParams {
            reynolds: self.get_f64("reynolds", f64::INFINITY)?,
            prandtl: self.get_f64("prandtl", 1.0)?,
            a0: self.get_f64("buoyancy_a0", 0.0)?,
            omega: [
                self.get_f64("omega_x", 0.0)?,
                self.get_f64("omega_y", 0.0)?,
                self.get_f64("omega_z", 0.0)?,
            ],
        };
        params.validate()?;
        Ok(params)
    }

    pub fn compressible_params(&self) -> Result<CompressibleParams> {
        let heating_name = self.get_str("heating", "zero");
        let heating = Heating::from_name(
            &heating_name,
            self.get_f64("heating_amplitude", 0.0)?,
            [
                self.get_i32("heating_kx", 1)?,
                self.get_i32("heating_ky", 0)?,
                self.get_i32("heating_kz", 0)?,
            ],
            self.get_f64("heating_t0", 0.0)?,
            self.get_f64("heating_tau", 1.0)?,
        )?;
        let params = CompressibleParams {
            mu: self.get_f64("mu", 0.02)?,
            mu_v: self.get_f64("mu_v", 0.01)?,
            gas_r: self.get_f64("gas_r", 1.0)?,
            c_v: self.get_f64("c_v", 1.5)?,
            heating,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn model(&self) -> Result<ModelKind> {
        match self.get_str("model", "boussinesq").as_str() {
            "euler" => Ok(ModelKind::Euler),
            "boussinesq" => Ok(ModelKind::Boussinesq),
            other => Err(Error::config(
                "model",
                format!("unknown model `{other}` (euler, boussinesq)"),
            )),
        }
    }

    pub fn dt_policy(&self) -> Result<DtPolicy> {
        match self.get_str("dt_policy", "cfl").as_str() {
            "fixed" => {
                let dt = self.get_f64("dt", 0.0)?;
                if !(dt > 0.0) {
                    return Err(Error::config("dt", "fixed policy needs dt > 0"));
                }
                Ok(DtPolicy::Fixed { dt })
            }
            "cfl" => {
                let factor = self.get_f64("cfl_factor", 0.25)?;
                if !(factor > 0.0 && factor <= 0.5) {
                    return Err(Error::config("cfl_factor", "must lie in (0, 0.5]"));
                }
                Ok(DtPolicy::Cfl {
                    factor,
                    dt_max: self.get_f64("dt_max", 0.1)?,
                })
            }
            other => Err(Error::config(
                "dt_policy",
                format!("unknown policy `{other}` (fixed, cfl)"),
            )),
        }
    }

    pub fn pv_convention(&self) -> Result<PvConvention> {
        match self.get_str("pv_convention", "relative").as_str() {
            "relative" => Ok(PvConvention::Relative),
            "rotating" => Ok(PvConvention::Rotating),
            other => Err(Error::config(
                "pv_convention",
                format!("unknown convention `{other}` (relative, rotating)"),
            )),
        }
    }

    pub fn gauge(&self) -> Result<GaugeSpec> {
        Ok(GaugeSpec {
            phi: GaugePhi::from_name(&self.get_str("gauge_phi", "zero"))?,
            psi: DensityFn::from_name("gauge_psi", &self.get_str("gauge_psi", "identity"))?,
        })
    }

    pub fn family(&self) -> Result<FamilySpec> {
        Ok(FamilySpec::new(DensityFn::from_name(
            "family",
            &self.get_str("family", "square_half"),
        )?))
    }

    pub fn seed(&self) -> Result<u64> {
        self.get_u64("seed", 1)
    }

    pub fn epsilon_rel(&self) -> Result<f64> {
        let eps = self.get_f64("epsilon_rel", crate::tolerances::DEFAULT_EPSILON_REL)?;
        if !(eps > 0.0) {
            return Err(Error::config("epsilon_rel", "must be positive"));
        }
        Ok(eps)
    }

    /// Step count: `steps` wins; otherwise derived from t_end and dt.
    pub fn steps(&self, dt: f64) -> Result<u64> {
        if let Some(v) = self.lookup("steps") {
            return v
                .parse()
                .map_err(|_| Error::config("steps", format!("not an integer: `{v}`")));
        }
        let t_end = self.get_f64("t_end", 0.0)?;
        if !(t_end > 0.0) {
            return Err(Error::config(
                "steps",
                "set `steps` or a positive `t_end`",
            ));
        }
        Ok((t_end / dt).ceil() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_usage() {
        let cfg = ConfigFile::parse("grid_n = 16\n# comment\nreynolds = 100 # inline\n").unwrap();
        let g = cfg.grid().unwrap();
        assert_eq!(g.n(), 16);
        // reynolds not consumed yet: finish must fail.
        assert!(cfg.finish().is_err());
        let p = cfg.boussinesq_params().unwrap();
        assert_eq!(p.reynolds, 100.0);
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_key_rejected_with_name() {
        let cfg = ConfigFile::parse("grid_n = 16\nnot_a_key = 3\n").unwrap();
        let _ = cfg.grid().unwrap();
        match cfg.finish() {
            Err(Error::Config { key, .. }) => assert!(key.contains("not_a_key")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_lines_and_duplicates() {
        assert!(ConfigFile::parse("grid_n 16\n").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2\n").is_err());
        assert!(ConfigFile::parse("a =\n").is_err());
    }

    #[test]
    fn infinity_spelling() {
        let cfg = ConfigFile::parse("reynolds = inf\n").unwrap();
        let p = cfg.boussinesq_params().unwrap();
        assert!(p.reynolds.is_infinite());
        cfg.finish().unwrap();
    }

    #[test]
    fn steps_from_t_end() {
        let cfg = ConfigFile::parse("t_end = 1.0\n").unwrap();
        assert_eq!(cfg.steps(0.25).unwrap(), 4);
        cfg.finish().unwrap();
        let cfg = ConfigFile::parse("steps = 7\nt_end = 99\n").unwrap();
        assert_eq!(cfg.steps(0.25).unwrap(), 7);
        // t_end untouched when steps wins: flagged as unknown.
        assert!(cfg.finish().is_err());
    }
}
