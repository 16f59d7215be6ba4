//! Fixed-step RK4 evolution of the stratified system with per-step
//! conservation series.
//!
//! The step size is frozen per run (optionally derived from a CFL
//! estimate of the initial state): determinism beats adaptivity for
//! identity verification. Blow-up does not destroy a run's artifacts;
//! the outcome is recorded and everything gathered so far is returned.

use crate::error::{Error, Result};
use crate::flow::{boussinesq_tendency, euler_tendency, BoussinesqParams, IncompressibleState, Tendency};
use crate::ops;
use crate::pv::{vorticity, PvConvention};

/// Which incompressible model drives the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Euler,
    Boussinesq,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Euler => "euler",
            ModelKind::Boussinesq => "boussinesq",
        }
    }

    pub fn tendency(
        &self,
        state: &IncompressibleState,
        params: &BoussinesqParams,
    ) -> Result<Tendency> {
        match self {
            ModelKind::Euler => euler_tendency(state, params),
            ModelKind::Boussinesq => boussinesq_tendency(state, params),
        }
    }
}

/// Step-size policy; both variants freeze dt for the whole run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// dt = factor * dx / max|u| at t = 0, capped by the viscous limit
    /// and dt_max.
    Cfl { factor: f64, dt_max: f64 },
}

/// CFL-derived time step: factor * dx / max|u|, with the explicit
/// diffusion limit factor * dx^2 / nu_max folded in for finite Reynolds
/// number, capped at dt_max (the only bound left when u = 0).
pub fn cfl_dt(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    factor: f64,
    dt_max: f64,
) -> f64 {
    assert!(factor > 0.0 && dt_max > 0.0);
    let dx = state.grid().dx();
    let mut dt = dt_max;
    let umax = state.u.max_magnitude();
    if umax > 0.0 {
        dt = dt.min(factor * dx / umax);
    }
    let nu_max = params.inv_re().max(params.inv_sigma_re());
    if nu_max > 0.0 {
        dt = dt.min(factor * dx * dx / nu_max);
    }
    dt
}

/// One classical RK4 step; the velocity is re-projected after the update.
pub fn rk4_step<F>(state: &IncompressibleState, tendency_fn: F, dt: f64) -> Result<IncompressibleState>
where
    F: Fn(&IncompressibleState) -> Result<Tendency>,
{
    assert!(dt != 0.0, "dt must be nonzero");
    let k1 = tendency_fn(state)?;
    let s2 = apply(state, &k1, 0.5 * dt);
    let k2 = tendency_fn(&s2)?;
    let s3 = apply(state, &k2, 0.5 * dt);
    let k3 = tendency_fn(&s3)?;
    let s4 = apply(state, &k3, dt);
    let k4 = tendency_fn(&s4)?;

    let sixth = dt / 6.0;
    let du = k1
        .du_dt
        .axpy(1.0, &k2.du_dt, 2.0)
        .add(&k3.du_dt.axpy(2.0, &k4.du_dt, 1.0));
    let dtheta = k1
        .dtheta_dt
        .axpy(1.0, &k2.dtheta_dt, 2.0)
        .add(&k3.dtheta_dt.axpy(2.0, &k4.dtheta_dt, 1.0));
    let u = ops::leray_project(&state.u.axpy(1.0, &du, sixth));
    let theta = state.theta.axpy(1.0, &dtheta, sixth);
    let next = IncompressibleState { u, theta };
    if !next.is_finite() {
        return Err(Error::BlowUp { time: f64::NAN, step: 0 });
    }
    Ok(next)
}

fn apply(state: &IncompressibleState, k: &Tendency, a: f64) -> IncompressibleState {
    IncompressibleState {
        u: state.u.axpy(1.0, &k.du_dt, a),
        theta: state.theta.axpy(1.0, &k.dtheta_dt, a),
    }
}

/// One per-step row of the conservation series.
#[derive(Clone, Copy, Debug)]
pub struct SeriesRow {
    pub t: f64,
    /// Kinetic energy, 0.5 * integral of |u|^2.
    pub energy: f64,
    pub int_theta: f64,
    /// Integral of the potential vorticity q = omega.grad(theta).
    pub int_q: f64,
    /// max |omega| (pointwise Euclidean magnitude).
    pub max_vorticity: f64,
    /// Fraction of cells below the pseudo-velocity threshold.
    pub masked_fraction: f64,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunOutcome {
    Completed,
    BlewUp { time: f64, step: u64 },
}

/// Everything a run produces: per-step series, snapshots at the stride,
/// final state, frozen dt, and the outcome.
pub struct RunArtifacts {
    pub series: Vec<SeriesRow>,
    pub snapshots: Vec<(f64, IncompressibleState)>,
    pub final_state: IncompressibleState,
    pub dt: f64,
    pub outcome: RunOutcome,
}

/// Run settings for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct RunSettings {
    pub model: ModelKind,
    pub params: BoussinesqParams,
    pub dt_policy: DtPolicy,
    pub steps: u64,
    pub snapshot_stride: u64,
    /// Threshold used for the masked-fraction series column.
    pub epsilon_rel: f64,
    pub convention: PvConvention,
}

/// Integrate `steps` RK4 steps from `state0`, collecting the series and
/// snapshots. On blow-up the partial artifacts carry the last good state.
pub fn integrate(state0: &IncompressibleState, settings: &RunSettings) -> Result<RunArtifacts> {
    settings.params.validate()?;
    state0.check_solenoidal()?;
    if settings.snapshot_stride == 0 {
        return Err(Error::config("snapshot_stride", "must be >= 1"));
    }
    let dt = match settings.dt_policy {
        DtPolicy::Fixed { dt } => {
            if !(dt > 0.0) {
                return Err(Error::config("dt", "must be positive"));
            }
            dt
        }
        DtPolicy::Cfl { factor, dt_max } => {
            if !(factor > 0.0 && factor <= 0.5) {
                return Err(Error::config("cfl_factor", "must lie in (0, 0.5]"));
            }
            cfl_dt(state0, &settings.params, factor, dt_max)
        }
    };

    let mut series = Vec::with_capacity(settings.steps as usize + 1);
    let mut snapshots = Vec::new();
    let mut state = state0.clone();
    let mut t = 0.0;
    series.push(series_row(&state, &settings.params, settings, t));
    snapshots.push((t, state.clone()));

    for step in 1..=settings.steps {
        let next = rk4_step(
            &state,
            |s| settings.model.tendency(s, &settings.params),
            dt,
        );
        match next {
            Ok(s) => {
                state = s;
                t = step as f64 * dt;
                series.push(series_row(&state, &settings.params, settings, t));
                if step % settings.snapshot_stride == 0 || step == settings.steps {
                    snapshots.push((t, state.clone()));
                }
            }
            Err(Error::BlowUp { .. }) => {
                // Flush the last good state as the final snapshot.
                if snapshots.last().map(|(st, _)| *st) != Some(t) {
                    snapshots.push((t, state.clone()));
                }
                return Ok(RunArtifacts {
                    series,
                    snapshots,
                    final_state: state,
                    dt,
                    outcome: RunOutcome::BlewUp {
                        time: step as f64 * dt,
                        step,
                    },
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunArtifacts {
        series,
        snapshots,
        final_state: state,
        dt,
        outcome: RunOutcome::Completed,
    })
}

fn series_row(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    settings: &RunSettings,
    t: f64,
) -> SeriesRow {
    let grid = state.grid();
    let energy = 0.5 * ops::dot_raw(&state.u, &state.u).integral();
    let int_theta = state.theta.integral();
    let omega = vorticity(state, params, settings.convention);
    let q = ops::dealias(&ops::dot_raw(&omega, &ops::gradient(&state.theta)));
    let int_q = q.integral();
    let max_vorticity = omega.max_magnitude();
    let qmax = q.linf();
    let masked_fraction = if qmax == 0.0 {
        1.0
    } else {
        let threshold = settings.epsilon_rel * qmax;
        q.values().iter().filter(|v| v.abs() < threshold).count() as f64 / grid.len() as f64
    };
    SeriesRow {
        t,
        energy,
        int_theta,
        int_q,
        max_vorticity,
        masked_fraction,
    }
}

/// Relative drift of a series column: max |x(t) - x(0)| / scale, with the
/// scale defaulting to |x(0)| and falling back to `fallback_scale` for
/// zero-initial quantities.
pub fn relative_drift(values: impl Iterator<Item = f64> + Clone, fallback_scale: f64) -> f64 {
    let mut iter = values.clone();
    let first = match iter.next() {
        Some(v) => v,
        None => return 0.0,
    };
    let scale = first.abs().max(fallback_scale).max(1e-300);
    values
        .skip(1)
        .fold(0.0f64, |m, v| m.max((v - first).abs()))
        / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ScalarField, VectorField};
    use crate::grid::Grid;
    use crate::random::{random_bandlimited, random_solenoidal};

    fn grid() -> Grid {
        Grid::standard(32).unwrap()
    }

    #[test]
    fn zero_tendency_leaves_state_bitwise_unchanged() {
        let g = grid();
        let state = IncompressibleState {
            u: random_solenoidal(&g, 1, 4, 1.0),
            theta: random_bandlimited(&g, 2, 4, 1.0),
        };
        let zero = |s: &IncompressibleState| -> Result<Tendency> {
            Ok(Tendency {
                du_dt: VectorField::zeros(s.grid()),
                dtheta_dt: ScalarField::zeros(s.grid()),
                drho_dt: None,
            })
        };
        let next = rk4_step(&state, zero, 0.1).unwrap();
        // theta is untouched bitwise; u passes through a Leray projection
        // it already satisfies, so values agree to round-off.
        assert_eq!(state.theta.values(), next.theta.values());
        assert!(next.u.sub(&state.u).linf() < 1e-15);
    }

    #[test]
    fn linear_decay_matches_rk4_amplification_polynomial() {
        let g = Grid::standard(8).unwrap();
        let lambda = 0.7;
        let dt = 0.3;
        let state = IncompressibleState {
            u: VectorField::zeros(&g),
            theta: ScalarField::constant(&g, 1.0),
        };
        let decay = |s: &IncompressibleState| -> Result<Tendency> {
            Ok(Tendency {
                du_dt: VectorField::zeros(s.grid()),
                dtheta_dt: s.theta.scaled(-lambda),
                drho_dt: None,
            })
        };
        let next = rk4_step(&state, decay, dt).unwrap();
        let z = -lambda * dt;
        let expected = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
        let got = next.theta.values()[0];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn passively_advected_mode_converges_fourth_order() {
        // theta advected by a uniform velocity: halving dt cuts the error
        // of a fixed-horizon run by ~16x.
        let g = Grid::standard(16).unwrap();
        let c = 0.8;
        let u = VectorField::from_fns(&g, move |_, _, _| c, |_, _, _| 0.0, |_, _, _| 0.0);
        let theta0 = ScalarField::from_fn(&g, |x, _, _| (2.0 * x).sin());
        let t_final = 1.0;
        let err = |steps: usize| -> f64 {
            let dt = t_final / steps as f64;
            let mut state = IncompressibleState {
                u: u.clone(),
                theta: theta0.clone(),
            };
            let params = BoussinesqParams::ideal(0.0, [0.0; 3]);
            for _ in 0..steps {
                state = rk4_step(&state, |s| euler_tendency(s, &params), dt).unwrap();
            }
            let exact =
                ScalarField::from_fn(&g, move |x, _, _| (2.0 * (x - c * t_final)).sin());
            state.theta.sub(&exact).linf()
        };
        let e1 = err(8);
        let e2 = err(16);
        let ratio = e1 / e2;
        assert!(
            (10.0..30.0).contains(&ratio),
            "expected ~16x reduction, got {ratio} ({e1} -> {e2})"
        );
    }

    #[test]
    fn cfl_dt_matches_hand_computation() {
        let g = grid();
        let state = IncompressibleState {
            u: VectorField::from_fns(&g, |_, _, z| z.sin(), |_, _, _| 0.0, |_, _, _| 0.0),
            theta: ScalarField::zeros(&g),
        };
        let params = BoussinesqParams::ideal(0.0, [0.0; 3]);
        let dt = cfl_dt(&state, &params, 0.25, 10.0);
        // dx = 2 pi / 32, max |u| = 1.
        let expect = 0.25 * (std::f64::consts::TAU / 32.0);
        assert!((dt - expect).abs() < 1e-12);
    }

    #[test]
    fn cfl_dt_caps_and_scalings() {
        let g = grid();
        let rest = IncompressibleState {
            u: VectorField::zeros(&g),
            theta: ScalarField::zeros(&g),
        };
        let params = BoussinesqParams::ideal(0.0, [0.0; 3]);
        assert_eq!(cfl_dt(&rest, &params, 0.25, 0.125), 0.125);

        let u1 = IncompressibleState {
            u: VectorField::from_fns(&g, |_, _, z| z.sin(), |_, _, _| 0.0, |_, _, _| 0.0),
            theta: ScalarField::zeros(&g),
        };
        let u2 = IncompressibleState {
            u: u1.u.scaled(2.0),
            theta: ScalarField::zeros(&g),
        };
        let d1 = cfl_dt(&u1, &params, 0.25, 10.0);
        let d2 = cfl_dt(&u2, &params, 0.25, 10.0);
        assert!((d1 / d2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_conserves_ideal_invariants() {
        let g = grid();
        let state = IncompressibleState {
            u: random_solenoidal(&g, 7, 1, 0.8),
            theta: random_bandlimited(&g, 8, 2, 0.5),
        };
        let settings = RunSettings {
            model: ModelKind::Euler,
            params: BoussinesqParams::ideal(0.0, [0.0; 3]),
            dt_policy: DtPolicy::Cfl {
                factor: 0.25,
                dt_max: 1.0,
            },
            steps: 40,
            snapshot_stride: 20,
            epsilon_rel: 1e-6,
            convention: PvConvention::Relative,
        };
        let run = integrate(&state, &settings).unwrap();
        assert_eq!(run.outcome, RunOutcome::Completed);
        assert_eq!(run.series.len(), 41);
        let e_drift = relative_drift(run.series.iter().map(|r| r.energy), 0.0);
        assert!(e_drift < 1e-8, "energy drift {e_drift:.3e}");
        let theta_scale = state.theta.l2() * g.volume();
        let th_drift = relative_drift(run.series.iter().map(|r| r.int_theta), theta_scale);
        assert!(th_drift < 1e-10, "theta drift {th_drift:.3e}");
    }

    #[test]
    fn determinism_bitwise() {
        let g = Grid::standard(16).unwrap();
        let state = IncompressibleState {
            u: random_solenoidal(&g, 9, 2, 0.5),
            theta: random_bandlimited(&g, 10, 2, 0.5),
        };
        let settings = RunSettings {
            model: ModelKind::Boussinesq,
            params: BoussinesqParams::viscous(100.0, 1.0, 0.4),
            dt_policy: DtPolicy::Fixed { dt: 0.05 },
            steps: 10,
            snapshot_stride: 5,
            epsilon_rel: 1e-6,
            convention: PvConvention::Relative,
        };
        let a = integrate(&state, &settings).unwrap();
        let b = integrate(&state, &settings).unwrap();
        for (ra, rb) in a.series.iter().zip(b.series.iter()) {
            assert_eq!(ra.energy.to_bits(), rb.energy.to_bits());
            assert_eq!(ra.int_q.to_bits(), rb.int_q.to_bits());
        }
        for ((_, sa), (_, sb)) in a.snapshots.iter().zip(b.snapshots.iter()) {
            assert_eq!(sa.u.x.values(), sb.u.x.values());
            assert_eq!(sa.theta.values(), sb.theta.values());
        }
    }

    #[test]
    fn time_reversal_smoke() {
        let g = grid();
        let state = IncompressibleState {
            u: random_solenoidal(&g, 11, 2, 0.5),
            theta: random_bandlimited(&g, 12, 2, 0.3),
        };
        let params = BoussinesqParams::ideal(0.2, [0.0; 3]);
        let dt = 0.02;
        let steps = 10;
        let mut s = state.clone();
        for _ in 0..steps {
            s = rk4_step(&s, |x| euler_tendency(x, &params), dt).unwrap();
        }
        for _ in 0..steps {
            s = rk4_step(&s, |x| euler_tendency(x, &params), -dt).unwrap();
        }
        let err = s.u.sub(&state.u).linf() / state.u.linf();
        assert!(err < 1e-6, "round-trip error {err:.3e}");
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Grid::standard(16).unwrap();
        let state = IncompressibleState {
            u: random_solenoidal(&g, 13, 2, 1.0),
            theta: ScalarField::constant(&g, 1.0),
        };
        let amplify = |s: &IncompressibleState| -> Result<Tendency> {
            Ok(Tendency {
                du_dt: VectorField::zeros(s.grid()),
                dtheta_dt: s.theta.map(|v| v * v * 1e150),
                drho_dt: None,
            })
        };
        let r = rk4_step(&state, amplify, 1e4);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
