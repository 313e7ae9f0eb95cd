//! Strict JSON run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::MAX_N_MAX;
use crate::params::{derive_params, ModelParams, RawParams};
use crate::qed::{FockSpec, Orientation};
use crate::semiclassical::QuadratureSpec;
use crate::units::{UnitSystem, M_E_SI};

/// Molecule parameters as written in a config file, in `units`.
///
/// `curly_c` and `curly_b`, when present, replace `chiral_c` and `b0` by the
/// couplings that give these dimensionless values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeConfig {
    #[serde(default = "internal_units")]
    pub units: UnitSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_e: Option<f64>,
    /// Defaults to 1836 electron masses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
    #[serde(default)]
    pub chiral_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curly_c: Option<f64>,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    #[serde(default)]
    pub b0: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curly_b: Option<[f64; 3]>,
    #[serde(default)]
    pub q0: [f64; 3],
}

fn internal_units() -> UnitSystem {
    UnitSystem::Internal
}

impl MoleculeConfig {
    fn check(&self) -> Result<()> {
        let range = |m: String| Err(Error::RangeError(m));
        for (name, v) in [("omega_x", self.omega_x), ("omega_y", self.omega_y), ("omega_z", self.omega_z)] {
            if !(v.is_finite() && v > 0.0) {
                return range(format!("molecule.{name} = {v} must be positive"));
            }
        }
        for (name, v) in [("m_n", self.m_n), ("m_e", self.m_e), ("charge", self.charge)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return range(format!("molecule.{name} = {v} must be positive"));
                }
            }
        }
        let finite = [self.chiral_c, self.curly_c.unwrap_or(0.0)]
            .into_iter()
            .chain(self.b0)
            .chain(self.q0)
            .chain(self.curly_b.unwrap_or_default())
            .all(f64::is_finite);
        if !finite {
            return range("molecule fields must be finite".into());
        }
        Ok(())
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        self.check()?;
        let m_n = self.m_n.unwrap_or(match self.units {
            UnitSystem::Internal => 1836.0,
            UnitSystem::Si => 1836.0 * M_E_SI,
        });
        let raw = RawParams {
            units: self.units,
            m_e: self.m_e,
            m_n,
            charge: self.charge,
            chiral_c: self.chiral_c,
            omega: [self.omega_x, self.omega_y, self.omega_z],
            b0: self.b0,
            q0: self.q0,
        };
        let mut p = derive_params(&raw)?;
        if let Some(cc) = self.curly_c {
            p.chiral_c = p.chiral_c_for(cc);
        }
        if let Some(cb) = self.curly_b {
            for (a, v) in cb.iter().enumerate() {
                p.b0[a] = p.b_component_for(a, *v);
            }
        }
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub n_steps: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig { n_steps: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Pipelines {
    pub semiclassical: bool,
    pub qed_analytic: bool,
    pub qed_fock: bool,
    pub energy: bool,
}

impl Default for Pipelines {
    fn default() -> Self {
        Pipelines { semiclassical: true, qed_analytic: true, qed_fock: false, energy: true }
    }
}

/// Sweepable molecule fields, in the units of the molecule block.
pub const SWEEP_PARAMS: &[&str] = &[
    "b0",
    "b0_x",
    "b0_y",
    "b0_z",
    "curly_b_x",
    "curly_b_y",
    "curly_b_z",
    "chiral_c",
    "curly_c",
    "omega_0",
    "omega_x",
    "omega_y",
    "omega_z",
    "m_n",
    "q0_x",
    "q0_y",
    "q0_z",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn check(&self) -> Result<()> {
        let range = |m: String| Err(Error::RangeError(m));
        if !SWEEP_PARAMS.contains(&self.param.as_str()) {
            return range(format!(
                "unknown sweep parameter `{}` (expected one of {})",
                self.param,
                SWEEP_PARAMS.join(", ")
            ));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return range("sweep range must be finite".into());
        }
        if self.steps == 0 {
            return range("sweep needs at least one step".into());
        }
        if self.steps > 1 && !(self.from < self.to) {
            return range(format!("sweep range must be ordered (from {} to {})", self.from, self.to));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let n = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.from + (self.to - self.from) * i as f64 / n).collect()
    }

    /// Molecule block with the swept field set to `v`.
    pub fn apply(&self, m: &MoleculeConfig, v: f64) -> Result<MoleculeConfig> {
        let mut m = m.clone();
        let axis = |s: &str| match s.chars().last() {
            Some('x') => 0,
            Some('y') => 1,
            _ => 2,
        };
        match self.param.as_str() {
            "b0" => {
                let n = m.b0.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dir = if n > 0.0 { m.b0.map(|x| x / n) } else { [0.0, 0.0, 1.0] };
                m.b0 = dir.map(|d| d * v);
                m.curly_b = None;
            }
            "b0_x" | "b0_y" | "b0_z" => {
                m.b0[axis(&self.param)] = v;
                m.curly_b = None;
            }
            "curly_b_x" | "curly_b_y" | "curly_b_z" => {
                let mut cb = m.curly_b.unwrap_or_default();
                cb[axis(&self.param)] = v;
                m.curly_b = Some(cb);
            }
            "chiral_c" => {
                m.chiral_c = v;
                m.curly_c = None;
            }
            "curly_c" => m.curly_c = Some(v),
            "omega_0" => {
                let mean = (m.omega_x + m.omega_y + m.omega_z) / 3.0;
                let s = v / mean;
                m.omega_x *= s;
                m.omega_y *= s;
                m.omega_z *= s;
            }
            "omega_x" => m.omega_x = v,
            "omega_y" => m.omega_y = v,
            "omega_z" => m.omega_z = v,
            "m_n" => m.m_n = Some(v),
            "q0_x" | "q0_y" | "q0_z" => m.q0[axis(&self.param)] = v,
            other => return Err(Error::RangeError(format!("unknown sweep parameter `{other}`"))),
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub csv: String,
    pub provenance: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: ".".into(), csv: "results.csv".into(), provenance: "provenance.json".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub molecule: MoleculeConfig,
    /// Overrides `fock.n_max` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub fock: FockSpec,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub pipelines: Pipelines,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Fock settings with the top-level `n_max` applied.
    pub fn fock_spec(&self) -> FockSpec {
        FockSpec { n_max: self.n_max.unwrap_or(self.fock.n_max), ..self.fock.clone() }
    }

    pub fn check(&self) -> Result<()> {
        self.molecule.to_params()?;
        let n = self.n_max.unwrap_or(self.fock.n_max);
        if !(2..=MAX_N_MAX).contains(&n) {
            return Err(Error::RangeError(format!("n_max = {n} outside [2, {MAX_N_MAX}]")));
        }
        self.quadrature.validate()?;
        self.fock_spec().validate()?;
        if self.energy.n_steps < 2 {
            return Err(Error::RangeError(format!("energy.n_steps = {} must be at least 2", self.energy.n_steps)));
        }
        if let Some(s) = &self.sweep {
            s.check()?;
            for v in s.values() {
                s.apply(&self.molecule, v)?.to_params()?;
            }
        }
        Ok(())
    }
}

/// Parses and checks a configuration. Unknown keys are rejected by name.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        match msg.split_once("unknown field `").and_then(|(_, rest)| rest.split_once('`')) {
            Some((name, _)) => Error::UnknownField(name.to_string()),
            None => Error::ParseError(msg),
        }
    })?;
    cfg.check()?;
    Ok(cfg)
}

pub fn validate_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.quadrature, QuadratureSpec::default());
        assert_eq!(c.fock, FockSpec::default());
        assert_eq!(c.pipelines, Pipelines::default());
        assert_eq!(c.energy.n_steps, 10_000);
        let p = c.molecule.to_params().unwrap();
        assert_eq!(p.m_n, 1836.0);
        assert_eq!(p.chiral_c, 0.0);
        // echo round trip
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn negative_frequency_is_a_range_error() {
        let e = parse_config(r#"{"molecule": {"omega_x": -1, "omega_y": 1e-4, "omega_z": 1e-4}}"#).unwrap_err();
        assert_eq!(e.code(), "cli.RangeError");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn misspelled_field_is_named() {
        let e = parse_config(r#"{"molecule": {"omega_x": 1e-4, "omega_y": 1e-4, "omega_z": 1e-4, "chiral_cc": 1}}"#)
            .unwrap_err();
        assert_eq!(e, Error::UnknownField("chiral_cc".into()));
        let e = parse_config(r#"{"molecule": {"omega_x": 1e-4, "omega_y": 1e-4, "omega_z": 1e-4}, "swep": {}}"#)
            .unwrap_err();
        assert_eq!(e, Error::UnknownField("swep".into()));
        assert_eq!(parse_config("{").unwrap_err().code(), "cli.ParseError");
    }

    #[test]
    fn sweep_checks_and_values() {
        let s = SweepSpec { param: "b0".into(), from: 0.0, to: 1e-3, steps: 5 };
        s.check().unwrap();
        assert_eq!(s.values(), vec![0.0, 2.5e-4, 5e-4, 7.5e-4, 1e-3]);
        let bad = SweepSpec { from: 1.0, to: 0.0, ..s.clone() };
        assert_eq!(bad.check().unwrap_err().code(), "cli.RangeError");
        let bad = SweepSpec { param: "colour".into(), ..s.clone() };
        assert_eq!(bad.check().unwrap_err().code(), "cli.RangeError");
        let m = parse_config(MINIMAL).unwrap().molecule;
        let m2 = SweepSpec { param: "omega_0".into(), ..s }.apply(&m, 2e-4).unwrap();
        assert!(((m2.omega_x + m2.omega_y + m2.omega_z) / 3.0 - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn dimensionless_overrides() {
        let c = parse_config(
            r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4,
                "curly_c": 0.01, "curly_b": [0, 0, 0.01]}}"#,
        )
        .unwrap();
        let p = c.molecule.to_params().unwrap();
        let a = crate::params::anisotropy(&p);
        assert!((a.curly_c - 0.01).abs() < 1e-15);
        assert!((a.curly_b[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn si_units_are_converted() {
        let c = parse_config(
            r#"{"molecule": {"units": "si", "omega_x": 7.8e16, "omega_y": 7.8e16, "omega_z": 7.9e16, "b0": [0, 0, 10]}}"#,
        )
        .unwrap();
        let p = c.molecule.to_params().unwrap();
        assert!((p.omega[0] - 7.8e16 / crate::units::to_si(1.0, crate::units::FREQUENCY)).abs() < 1e-20);
        assert!((p.m_n - 1836.0).abs() < 1e-9);
    }
}
