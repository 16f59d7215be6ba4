//! Identity-verification suites: one row per identity, tagged by the
//! equation labels used throughout the residual reports.

use std::path::Path;
use std::process::ExitCode;

use bfield::catalog::{DensityFn, GaugePhi, GaugeSpec};
use bfield::compressible::{self, ProjectionKind};
use bfield::config::ConfigFile;
use bfield::error::{Error, Result};
use bfield::manufactured;
use bfield::ops;
use bfield::pv;
use bfield::random::random_bandlimited;
use bfield::residual::{ResidualEntry, ResidualReport};
use bfield::tolerances as tol;

use crate::table;

pub struct Row {
    pub tag: String,
    pub entry: ResidualEntry,
    pub tolerance: f64,
}

impl Row {
    fn from_report(report: &ResidualReport, tag: &str, tolerance: f64) -> Row {
        Row {
            tag: tag.to_string(),
            entry: report.expect(tag),
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        self.entry.l2_rel <= self.tolerance
    }
}

pub fn verify(
    config_path: &Path,
    suite: &str,
    out: Option<&Path>,
    tolerance_override: Option<f64>,
) -> Result<ExitCode> {
    let cfg = ConfigFile::load(config_path)?;
    let mut rows = match suite {
        "ideal" => ideal_suite(&cfg)?,
        "boussinesq" => boussinesq_suite(&cfg)?,
        "compressible-q1" => compressible_suite(&cfg, ProjectionKind::Density)?,
        "compressible-q2" => compressible_suite(&cfg, ProjectionKind::LogDensity)?,
        other => {
            return Err(Error::config(
                "suite",
                format!(
                    "unknown suite `{other}` (ideal, boussinesq, compressible-q1, compressible-q2)"
                ),
            ))
        }
    };
    cfg.finish()?;
    if let Some(t) = tolerance_override {
        for row in &mut rows {
            row.tolerance = t;
        }
    }
    table::print_rows(suite, &rows);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        table::write_csv(&dir.join("residuals.csv"), &rows)?;
        std::fs::write(dir.join("config.conf"), cfg.raw())?;
    }
    if rows.iter().all(Row::pass) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

/// Ideal rotating-buoyant flow: Ertel decomposition, material PV
/// conservation, and the passive-scalar B-field transport laws.
fn ideal_suite(cfg: &ConfigFile) -> Result<Vec<Row>> {
    let grid = cfg.grid()?;
    let params = cfg.boussinesq_params()?;
    if params.reynolds.is_finite() {
        return Err(Error::config(
            "reynolds",
            "the ideal suite requires reynolds = inf",
        ));
    }
    let conv = cfg.pv_convention()?;
    let state = manufactured::incompressible_from_config(cfg, &grid)?;
    let tendency = bfield::flow::euler_tendency(&state, &params)?;
    let ertel = pv::ertel_residual(&state, &params, &tendency, conv)?;

    // Passive-scalar transport: an independent band-limited scalar rides
    // the same flow next to theta.
    let passive_kmax = cfg.get_u64("passive_kmax", 3)? as usize;
    let passive = random_bandlimited(&grid, cfg.seed()?.wrapping_add(0x515), passive_kmax, 1.0);
    let b1 = pv::b_ideal_residual(&state.u, &passive, &state.theta)?;

    Ok(vec![
        Row::from_report(&ertel, "q1A", tol::IDEAL_IDENTITY),
        Row::from_report(&ertel, "q1B", tol::IDEAL_IDENTITY),
        Row::from_report(&b1, "B1-transport", tol::IDEAL_IDENTITY),
        Row::from_report(&b1, "B1-stretch", tol::IDEAL_IDENTITY),
        Row::from_report(&b1, "B1-forms", tol::POINTWISE_EXACT),
    ])
}

/// Viscous stratified flow: the three forms of the PV tendency and the
/// stretching-and-folding theorem.
fn boussinesq_suite(cfg: &ConfigFile) -> Result<Vec<Row>> {
    let grid = cfg.grid()?;
    let params = cfg.boussinesq_params()?;
    if !params.reynolds.is_finite() {
        return Err(Error::config(
            "reynolds",
            "the viscous suite requires finite reynolds",
        ));
    }
    let conv = cfg.pv_convention()?;
    let eps = cfg.epsilon_rel()?;
    let state = manufactured::incompressible_from_config(cfg, &grid)?;
    let forms = pv::pv_tendency_forms(&state, &params, conv)?;
    let theorem = pv::theorem1_residuals(&state, &params, eps, conv)?;
    Ok(vec![
        Row::from_report(&forms.report, "ens9-12", tol::IDEAL_IDENTITY),
        Row::from_report(&forms.report, "ens9-13", tol::IDEAL_IDENTITY),
        Row::from_report(&forms.report, "ens9-23", tol::IDEAL_IDENTITY),
        Row::from_report(&forms.report, "ens9-buoyancy", tol::GAUGE_INVARIANCE),
        Row::from_report(&theorem, "ens13a", tol::VISCOUS_IDENTITY),
        Row::from_report(&theorem, "ens13b", tol::VISCOUS_IDENTITY),
        Row::from_report(&theorem, "ens14", tol::VISCOUS_IDENTITY),
    ])
}

/// Compressible balances for the chosen projection kind, plus the
/// gauge-invariance and kind-consistency cross-checks for the density
/// projection.
fn compressible_suite(cfg: &ConfigFile, kind: ProjectionKind) -> Result<Vec<Row>> {
    let grid = cfg.grid()?;
    let params = cfg.compressible_params()?;
    let gauge = cfg.gauge()?;
    let family = cfg.family()?;
    let eps = cfg.epsilon_rel()?;
    let state = manufactured::compressible_from_config(cfg, &grid)?;

    let quasi = compressible::quasi_conservation_residuals(&state, &params, kind, &gauge)?;
    let imperm = compressible::impermeability_check(&state, &params, kind, &gauge)?;
    let cons = compressible::conserved_family_residual(&state, &params, kind, &gauge, &family)?;
    let balances =
        compressible::pseudo_velocity_balance_residuals(&state, &params, kind, &gauge, eps)?;
    let blaw = compressible::compressible_b_residual(&state, &params, kind, &gauge, eps)?;

    let div_tag = match kind {
        ProjectionKind::Density => "q-calc2",
        ProjectionKind::LogDensity => "proj2B",
    };
    let mut rows = vec![
        Row::from_report(&quasi, div_tag, tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&quasi, "q1d-a", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&quasi, "q1d-b", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&imperm, "imperm", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&imperm, "imperm-gauge", tol::POINTWISE_EXACT),
        Row::from_report(&cons, "cons-a", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&cons, "cons-b", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&cons, "cons-int", tol::POINTWISE_EXACT),
        Row::from_report(&balances, "q1d2-a", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&balances, "q1d2-b", tol::COMPRESSIBLE_IDENTITY),
        Row::from_report(&blaw, "ceeqn1", tol::COMPRESSIBLE_B_IDENTITY),
    ];

    if kind == ProjectionKind::Density {
        let dom = compressible::compressible_vorticity_residual(&state, &params)?;
        rows.push(Row::from_report(&dom, "Dom", tol::COMPRESSIBLE_IDENTITY));

        // Gauge invariance: the balance residual magnitudes must not move
        // under a catalog gauge change.
        let alt_gauge = if gauge.phi == GaugePhi::SinX && gauge.psi == DensityFn::Identity {
            GaugeSpec {
                phi: GaugePhi::SinY,
                psi: DensityFn::SquareHalf,
            }
        } else {
            GaugeSpec {
                phi: GaugePhi::SinX,
                psi: DensityFn::Identity,
            }
        };
        let alt = compressible::quasi_conservation_residuals(&state, &params, kind, &alt_gauge)?;
        let delta = ["q1d-a", "q1d-b"]
            .iter()
            .map(|t| (quasi.expect(t).l2_rel - alt.expect(t).l2_rel).abs())
            .fold(0.0f64, f64::max);
        rows.push(Row {
            tag: "gauge-delta".into(),
            entry: ResidualEntry {
                l2_rel: delta,
                linf: delta,
                masked_fraction: 0.0,
            },
            tolerance: tol::GAUGE_INVARIANCE,
        });

        // Kind consistency: q_density = rho * q_log pointwise.
        let omega = ops::curl(&state.u);
        let qd = compressible::projection_q(&omega, &state.rho, ProjectionKind::Density)?;
        let ql = compressible::projection_q(&omega, &state.rho, ProjectionKind::LogDensity)?;
        let diff = qd.sub(&ops::mul_raw(&state.rho, &ql));
        rows.push(Row {
            tag: "kind-consistency".into(),
            entry: ResidualEntry {
                l2_rel: diff.l2() / qd.l2().max(1e-300),
                linf: diff.linf(),
                masked_fraction: 0.0,
            },
            tolerance: tol::GAUGE_INVARIANCE,
        });
    }
    Ok(rows)
}
