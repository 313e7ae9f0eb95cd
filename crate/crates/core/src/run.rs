//! Evaluation of configured runs and their CSV and provenance output.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SweepSpec};
use crate::energy::{energy_ledger, EnergyLedger, MomentumResponse};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::qed::{p_cas_total, CasimirReport, PerpSource, ReportOptions};
use crate::semiclassical::{sc_integral_numeric, sc_momentum_closed, sc_prefactor, ScIntegral};

/// Relative tolerance on K = P_kin + P_total + P_abr.
pub const LEDGER_TOL: f64 = 1e-12;

/// One evaluated parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub param: Option<String>,
    pub value: Option<f64>,
    /// Absent when both QED pipelines are disabled.
    pub report: Option<CasimirReport>,
    pub p_sc: Option<Vector3<f64>>,
    pub p_sc_closed: Option<Vector3<f64>>,
    pub sc: Option<ScIntegral>,
    pub energy: Option<EnergyLedger>,
}

fn ledger_scale(r: &CasimirReport) -> f64 {
    [r.k.norm(), r.p_kin.norm(), r.p_total.norm(), r.p_abr.norm()].into_iter().fold(0.0, f64::max)
}

/// Evaluates every enabled pipeline at one parameter point.
pub fn evaluate(cfg: &RunConfig, p: &ModelParams) -> Result<Row> {
    let report = if cfg.pipelines.qed_analytic || cfg.pipelines.qed_fock {
        let perp = if cfg.pipelines.qed_fock { PerpSource::Fock(cfg.fock_spec()) } else { PerpSource::Analytic };
        let report = p_cas_total(p, &ReportOptions { orientation: cfg.orientation, perp })?;
        let resid = report.ledger_residual();
        if resid > LEDGER_TOL * ledger_scale(&report) {
            return Err(Error::Invariant(format!("momentum ledger residual {resid:e}")));
        }
        Some(report)
    } else {
        None
    };
    let (p_sc, p_sc_closed, sc) = if cfg.pipelines.semiclassical {
        let sc = sc_integral_numeric(p, &cfg.quadrature)?;
        (Some(p.b0 * (sc_prefactor(p) * sc.value())), Some(sc_momentum_closed(p)), Some(sc))
    } else {
        (None, None, None)
    };
    let energy = if cfg.pipelines.energy {
        let resp = match report.as_ref().and_then(|r| r.fock.as_ref()) {
            Some(f) => MomentumResponse::with_fock(p, f, cfg.orientation),
            None => MomentumResponse::analytic(p, cfg.orientation),
        };
        Some(energy_ledger(&p.b0, &p.q0, p, &resp, cfg.energy.n_steps)?)
    } else {
        None
    };
    Ok(Row { param: None, value: None, report, p_sc, p_sc_closed, sc, energy })
}

/// Rows of a run: one per sweep point, or a single row without a sweep.
pub fn run_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    cfg.check()?;
    match &cfg.sweep {
        None => Ok(vec![evaluate(cfg, &cfg.molecule.to_params()?)?]),
        Some(s) => s
            .values()
            .into_par_iter()
            .map(|v| {
                let p = s.apply(&cfg.molecule, v)?.to_params()?;
                let mut row = evaluate(cfg, &p)?;
                row.param = Some(s.param.clone());
                row.value = Some(v);
                Ok(row)
            })
            .collect(),
    }
}

fn vec_names(prefix: &str) -> [String; 3] {
    ["x", "y", "z"].map(|a| format!("{prefix}_{a}"))
}

/// Fixed CSV header.
pub fn csv_header() -> Vec<String> {
    let mut h = vec!["param".to_string(), "value".into()];
    for v in ["p_perp", "p_par", "p_total", "p_total_quoted", "p_kin", "p_abr", "p_optical", "p_sc", "p_sc_closed"] {
        h.extend(vec_names(v));
    }
    h.extend(
        [
            "delta_e_kin",
            "w_b0",
            "e_lamb_par",
            "e_lamb_perp",
            "e_diamag",
            "ledger_residual",
            "quoted_residual",
            "balance_residual",
            "sc_ladder_discrepancy",
            "fock_coefficient",
            "perp_method",
            "par_method",
            "orientation",
            "units",
            "n_max",
            "fd_step",
            "dispersion",
            "k_max",
            "fock_rel_tol",
            "cg_rel_tol",
            "sc_rel_tol",
            "extrapolation_tol",
            "eps_ladder",
            "eps_ladder_alt",
            "n_steps",
        ]
        .map(String::from),
    );
    h
}

fn num(x: f64) -> String {
    // no negative zero in the table
    format!("{:e}", if x == 0.0 { 0.0 } else { x })
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn ladder(l: &[f64]) -> String {
    l.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

fn record(cfg: &RunConfig, row: &Row) -> Vec<String> {
    let r = row.report.as_ref();
    let mut out = vec![row.param.clone().unwrap_or_default(), opt(row.value)];
    let mut push_vec = |v: Option<&Vector3<f64>>| {
        for a in 0..3 {
            out.push(opt(v.map(|v| v[a])));
        }
    };
    push_vec(r.map(|r| &r.p_perp));
    push_vec(r.map(|r| &r.p_par));
    push_vec(r.map(|r| &r.p_total));
    push_vec(r.map(|r| &r.p_total_quoted));
    push_vec(r.map(|r| &r.p_kin));
    push_vec(r.map(|r| &r.p_abr));
    push_vec(r.map(|r| &r.p_optical));
    push_vec(row.p_sc.as_ref());
    push_vec(row.p_sc_closed.as_ref());
    let e = row.energy.as_ref();
    let fock = cfg.fock_spec();
    let q = &cfg.quadrature;
    out.extend([
        opt(e.map(|e| e.delta_e_kin)),
        opt(e.map(|e| e.w_b0)),
        opt(e.map(|e| e.e_lamb_par)),
        opt(e.map(|e| e.e_lamb_perp)),
        opt(e.map(|e| e.e_diamag)),
        opt(r.map(|r| r.ledger_residual())),
        opt(r.map(|r| r.quoted_residual.norm())),
        opt(e.map(|e| e.balance_residual())),
        opt(row.sc.as_ref().map(|s| s.ladder_discrepancy())),
        opt(r.and_then(|r| r.fock.as_ref()).map(|f| f.coefficient)),
        r.map(|r| r.perp_method).unwrap_or_default().into(),
        r.map(|r| r.par_method).unwrap_or_default().into(),
        match cfg.orientation {
            crate::qed::Orientation::Averaged => "averaged".into(),
            crate::qed::Orientation::Fixed => "fixed".into(),
        },
        "internal".into(),
        fock.n_max.to_string(),
        num(fock.fd_step),
        fock.dispersion.name().into(),
        opt(fock.k_max),
        num(fock.rel_tol),
        num(fock.cg_rel_tol),
        num(q.rel_tol),
        num(q.extrapolation_tol),
        ladder(&q.eps_ladder),
        ladder(&q.eps_ladder_alt),
        cfg.energy.n_steps.to_string(),
    ]);
    out
}

pub fn csv_text(cfg: &RunConfig, rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(csv_header()).map_err(io)?;
    for row in rows {
        w.write_record(record(cfg, row)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Structured sidecar: the resolved configuration and per-row diagnostics.
pub fn provenance_text(cfg: &RunConfig, command: &str, rows: &[Row]) -> Result<String> {
    let diag: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "param": r.param,
                "value": r.value,
                "consistency": r.report.as_ref().map(|q| &q.consistency),
                "verdict": r.report.as_ref().map(|q| &q.verdict),
                "chiral_length": r.report.as_ref().map(|q| q.chiral_length),
                "fock": r.report.as_ref().and_then(|q| q.fock.as_ref()),
                "semiclassical": r.sc,
                "energy": r.energy,
            })
        })
        .collect();
    let doc = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "units": "internal (hbar = c = m_e = eps0 = 1)",
        "config": cfg,
        "columns": csv_header(),
        "rows": diag,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
}

/// CSV and provenance of a run, kept in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub csv: String,
    pub provenance: String,
}

pub fn run(cfg: &RunConfig, command: &str) -> Result<RunOutput> {
    let rows = run_rows(cfg)?;
    Ok(RunOutput { csv: csv_text(cfg, &rows)?, provenance: provenance_text(cfg, command, &rows)? })
}

/// Config with the sweep replaced by command-line values.
pub fn with_sweep(cfg: &RunConfig, sweep: SweepSpec) -> Result<RunConfig> {
    sweep.check()?;
    let c = RunConfig { sweep: Some(sweep), ..cfg.clone() };
    c.check()?;
    Ok(c)
}

/// Writes both files under `dir` and returns their paths.
pub fn write_output(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let csv = dir.join(&cfg.output.csv);
    let prov = dir.join(&cfg.output.provenance);
    std::fs::write(&csv, &out.csv).map_err(io)?;
    std::fs::write(&prov, &out.provenance).map_err(io)?;
    Ok((csv, prov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg() -> RunConfig {
        parse_config(
            r#"{"molecule": {"omega_x": 0.99e-4, "omega_y": 1e-4, "omega_z": 1.013e-4,
                "curly_c": 0.01, "curly_b": [0, 0, 0.01], "q0": [1e-6, 0, 2e-6]},
                "pipelines": {"semiclassical": false}}"#,
        )
        .unwrap()
    }

    #[test]
    fn header_and_rows_have_equal_width() {
        let c = cfg();
        let rows = run_rows(&c).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(record(&c, &rows[0]).len(), csv_header().len());
        let text = csv_text(&c, &rows).unwrap();
        assert_eq!(text.lines().count(), 2);
        // disabled pipeline leaves blank cells
        let idx = csv_header().iter().position(|h| h == "p_sc_x").unwrap();
        assert_eq!(record(&c, &rows[0])[idx], "");
    }

    #[test]
    fn qed_columns_are_blank_when_disabled() {
        let mut c = cfg();
        c.pipelines.qed_analytic = false;
        let rows = run_rows(&c).unwrap();
        assert!(rows[0].report.is_none());
        let rec = record(&c, &rows[0]);
        let h = csv_header();
        let col = |n: &str| h.iter().position(|x| x == n).unwrap();
        assert_eq!(rec[col("p_total_z")], "");
        assert_eq!(rec[col("ledger_residual")], "");
        assert!(!rec[col("w_b0")].is_empty());
    }

    #[test]
    fn sweep_rows_keep_order_and_are_reproducible() {
        let c = with_sweep(&cfg(), SweepSpec { param: "curly_c".into(), from: -0.01, to: 0.01, steps: 7 }).unwrap();
        let a = run(&c, "test").unwrap();
        let b = run(&c, "test").unwrap();
        assert_eq!(a, b);
        let values: Vec<String> = a.csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
        let want: Vec<String> = c.sweep.as_ref().unwrap().values().iter().map(|v| format!("{v:e}")).collect();
        assert_eq!(values, want);
        assert!(!a.provenance.contains("time"));
    }

    #[test]
    fn perp_is_odd_across_the_sweep() {
        let c = with_sweep(&cfg(), SweepSpec { param: "curly_c".into(), from: -0.01, to: 0.01, steps: 3 }).unwrap();
        let rows = run_rows(&c).unwrap();
        let perp = |i: usize| rows[i].report.as_ref().unwrap().p_perp;
        assert!((perp(0) + perp(2)).norm() <= 1e-12 * perp(2).norm());
        assert_eq!(perp(1).norm(), 0.0);
    }
}
