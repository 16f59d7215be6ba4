//! Lagrangian marker surfaces and the surface-flux balance check.
//!
//! A surface patch is an M x M marker lattice with an implicit quad mesh.
//! Fluxes use midpoint quadrature on the quads with fields evaluated by
//! exact Fourier summation, so quadrature is the only spatial error
//! source (second order in M). The flux check co-integrates the
//! stratified state and the surface moving with the pseudo-velocity and
//! compares the centered-difference time derivative of the B-flux with
//! the flux of the driver D_q.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::flow::{BoussinesqParams, IncompressibleState};
use crate::grid::Grid;
use crate::mask::MaskedVelocity;
use crate::ops;
use crate::pv::{vorticity, PvConvention};
use crate::sample::FieldSampler;
use crate::timestep::ModelKind;

/// Topology of a marker lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceTopology {
    /// Open patch: (M-1)^2 quads, no wrap.
    OpenPatch,
    /// Closed sphere: polar rows degenerate to points, azimuth wraps.
    ClosedSphere,
}

/// Named surface seeds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SurfaceSeed {
    /// Planar square patch normal to z, side `extent`, centered at `center`.
    Plane { center: [f64; 3], extent: f64 },
    /// Sphere of radius `radius` centered at `center`.
    Sphere { center: [f64; 3], radius: f64 },
}

/// M x M lattice of marker positions parameterizing a surface patch.
#[derive(Clone, Debug)]
pub struct MarkerSurface {
    m: usize,
    positions: Vec<[f64; 3]>,
    topology: SurfaceTopology,
    pub timestamp: f64,
}

impl MarkerSurface {
    pub fn from_seed(seed: &SurfaceSeed, m: usize, timestamp: f64) -> MarkerSurface {
        assert!(m >= 8, "marker lattice needs M >= 8");
        let mut positions = Vec::with_capacity(m * m);
        match *seed {
            SurfaceSeed::Plane { center, extent } => {
                for i in 0..m {
                    let s = i as f64 / (m - 1) as f64 - 0.5;
                    for j in 0..m {
                        let t = j as f64 / (m - 1) as f64 - 0.5;
                        positions.push([
                            center[0] + extent * t,
                            center[1] + extent * s,
                            center[2],
                        ]);
                    }
                }
                MarkerSurface {
                    m,
                    positions,
                    topology: SurfaceTopology::OpenPatch,
                    timestamp,
                }
            }
            SurfaceSeed::Sphere { center, radius } => {
                for i in 0..m {
                    let polar = std::f64::consts::PI * i as f64 / (m - 1) as f64;
                    for j in 0..m {
                        let azim = std::f64::consts::TAU * j as f64 / m as f64;
                        positions.push([
                            center[0] + radius * polar.sin() * azim.cos(),
                            center[1] + radius * polar.sin() * azim.sin(),
                            center[2] + radius * polar.cos(),
                        ]);
                    }
                }
                MarkerSurface {
                    m,
                    positions,
                    topology: SurfaceTopology::ClosedSphere,
                    timestamp,
                }
            }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn topology(&self) -> SurfaceTopology {
        self.topology
    }

    pub fn is_finite(&self) -> bool {
        self.positions
            .iter()
            .all(|p| p.iter().all(|c| c.is_finite()))
    }

    /// Quad corner index quadruples (i, j) -> four linear marker indices,
    /// honoring the topology.
    fn quads(&self) -> Vec<[usize; 4]> {
        let m = self.m;
        let mut quads = Vec::new();
        match self.topology {
            SurfaceTopology::OpenPatch => {
                for i in 0..m - 1 {
                    for j in 0..m - 1 {
                        quads.push([
                            i * m + j,
                            i * m + j + 1,
                            (i + 1) * m + j + 1,
                            (i + 1) * m + j,
                        ]);
                    }
                }
            }
            SurfaceTopology::ClosedSphere => {
                for i in 0..m - 1 {
                    for j in 0..m {
                        let jn = (j + 1) % m;
                        quads.push([i * m + j, i * m + jn, (i + 1) * m + jn, (i + 1) * m + j]);
                    }
                }
            }
        }
        quads
    }

    /// Midpoints and area vectors of the quad mesh. The area vector of a
    /// (possibly non-planar) quad is half the cross product of its
    /// diagonals; degenerate polar quads reduce to triangles naturally.
    pub fn quadrature(&self) -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
        let quads = self.quads();
        let mut mids = Vec::with_capacity(quads.len());
        let mut areas = Vec::with_capacity(quads.len());
        for [a, b, c, d] in quads {
            let (pa, pb, pc, pd) = (
                self.positions[a],
                self.positions[b],
                self.positions[c],
                self.positions[d],
            );
            let mid = [
                0.25 * (pa[0] + pb[0] + pc[0] + pd[0]),
                0.25 * (pa[1] + pb[1] + pc[1] + pd[1]),
                0.25 * (pa[2] + pb[2] + pc[2] + pd[2]),
            ];
            let d1 = [pc[0] - pa[0], pc[1] - pa[1], pc[2] - pa[2]];
            let d2 = [pd[0] - pb[0], pd[1] - pb[1], pd[2] - pb[2]];
            let area = [
                0.5 * (d1[1] * d2[2] - d1[2] * d2[1]),
                0.5 * (d1[2] * d2[0] - d1[0] * d2[2]),
                0.5 * (d1[0] * d2[1] - d1[1] * d2[0]),
            ];
            mids.push(mid);
            areas.push(area);
        }
        (mids, areas)
    }

    /// Total surface area from the quad mesh.
    pub fn area(&self) -> f64 {
        let (_, areas) = self.quadrature();
        areas
            .iter()
            .map(|a| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt())
            .sum()
    }
}

/// Midpoint-quadrature flux of a grid vector field through the surface.
pub fn surface_flux(surface: &MarkerSurface, field: &VectorField) -> f64 {
    let sampler = FieldSampler::new(&[&field.x, &field.y, &field.z]);
    flux_from_sampler(surface, &sampler, 0, 3)
}

/// Flux with field components `offset..offset+3` of an existing sampler.
fn flux_from_sampler(
    surface: &MarkerSurface,
    sampler: &FieldSampler,
    offset: usize,
    _ncomp: usize,
) -> f64 {
    let (mids, areas) = surface.quadrature();
    let values = sampler.sample_batch(&mids);
    // Deterministic sequential reduction.
    let mut flux = 0.0;
    for (v, a) in values.iter().zip(areas.iter()) {
        flux += v[offset] * a[0] + v[offset + 1] * a[1] + v[offset + 2] * a[2];
    }
    flux
}

/// Advect markers through a frozen masked velocity field by one RK4 step.
///
/// Stage velocities come from exact Fourier summation of the stored
/// field. A marker whose stage position falls in a masked cell
/// invalidates the surface.
pub fn advect_markers(
    surface: &MarkerSurface,
    velocity: &MaskedVelocity,
    dt: f64,
) -> Result<MarkerSurface> {
    let sampler = FieldSampler::new(&[
        &velocity.field.x,
        &velocity.field.y,
        &velocity.field.z,
    ]);
    let grid = velocity.field.grid();
    let check = |positions: &[[f64; 3]], t: f64| -> Result<()> {
        for (index, p) in positions.iter().enumerate() {
            if !in_unmasked_cell(grid, &velocity.mask, *p) {
                return Err(Error::MarkerMasked { index, time: t });
            }
        }
        Ok(())
    };
    let eval = |positions: &[[f64; 3]]| -> Vec<[f64; 3]> {
        sampler
            .sample_batch(positions)
            .into_iter()
            .map(|v| [v[0], v[1], v[2]])
            .collect()
    };
    let t = surface.timestamp;
    check(&surface.positions, t)?;
    let x0 = &surface.positions;
    let k1 = eval(x0);
    let x2 = shift(x0, &k1, 0.5 * dt);
    check(&x2, t)?;
    let k2 = eval(&x2);
    let x3 = shift(x0, &k2, 0.5 * dt);
    check(&x3, t)?;
    let k3 = eval(&x3);
    let x4 = shift(x0, &k3, dt);
    check(&x4, t)?;
    let k4 = eval(&x4);
    let mut positions = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let mut p = [0.0; 3];
        for c in 0..3 {
            p[c] = x0[i][c] + dt / 6.0 * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
        }
        positions.push(p);
    }
    let out = MarkerSurface {
        m: surface.m,
        positions,
        topology: surface.topology,
        timestamp: surface.timestamp + dt,
    };
    check(&out.positions, out.timestamp)?;
    Ok(out)
}

fn shift(base: &[[f64; 3]], vel: &[[f64; 3]], a: f64) -> Vec<[f64; 3]> {
    base.iter()
        .zip(vel.iter())
        .map(|(p, v)| [p[0] + a * v[0], p[1] + a * v[1], p[2] + a * v[2]])
        .collect()
}

fn in_unmasked_cell(grid: &Grid, mask: &crate::mask::Region, p: [f64; 3]) -> bool {
    let n = grid.n() as isize;
    let l = grid.box_length();
    let wrap = |x: f64| -> usize {
        let cell = (x / l * n as f64).round() as isize;
        (cell.rem_euclid(n)) as usize
    };
    mask.contains(grid.index(wrap(p[0]), wrap(p[1]), wrap(p[2])))
}

/// One sampled window row of the flux check.
#[derive(Clone, Copy, Debug)]
pub struct FluxRow {
    pub t: f64,
    pub b_flux: f64,
    pub dq_flux: f64,
    /// Centered-difference d/dt of the B-flux (None at window endpoints).
    pub db_flux_dt: Option<f64>,
    /// |db_flux_dt - dq_flux| / scale (None at endpoints).
    pub rel_mismatch: Option<f64>,
}

/// Outcome of [`surface_flux_check`].
#[derive(Clone, Debug)]
pub struct FluxCheckReport {
    pub rows: Vec<FluxRow>,
    /// Worst interior mismatch.
    pub max_rel_mismatch: f64,
    /// max |B(t) - B(0)| / |B(0)| over the window.
    pub b_flux_drift: f64,
    pub masked_fraction_initial: f64,
    pub dt: f64,
    /// Set when a marker crossed into the masked region mid-run: the rows
    /// gathered so far remain valid and reportable.
    pub invalidated: Option<(usize, f64)>,
}

/// Settings for the flux check window.
#[derive(Clone, Copy, Debug)]
pub struct FluxCheckSettings {
    pub model: ModelKind,
    pub params: BoussinesqParams,
    pub convention: PvConvention,
    pub dt: f64,
    pub steps: u64,
    /// Fluxes are sampled every `stride` steps.
    pub stride: u64,
    pub m: usize,
    pub epsilon_rel: f64,
    /// Markers must satisfy |q| >= seed_margin * max|q| at seeding time.
    pub seed_margin: f64,
}

/// Fields needed to evaluate U_q and D_q at arbitrary points; rebuilt per
/// stage for the velocity and per flux sample for the driver.
struct PointwiseUq {
    sampler: FieldSampler,
    inv_re: f64,
    q_threshold: f64,
}

impl PointwiseUq {
    /// Sampler layout: [u1 u2 u3, g1 g2 g3, q].
    fn build(
        state: &IncompressibleState,
        params: &BoussinesqParams,
        conv: PvConvention,
        epsilon_rel: f64,
    ) -> Result<PointwiseUq> {
        let omega = vorticity(state, params, conv);
        let grad_theta = ops::gradient(&state.theta);
        let q = ops::dealias(&ops::dot_raw(&omega, &grad_theta));
        let lap_theta = ops::laplacian(&state.theta);
        let g = ops::cross(&ops::laplacian_vec(&state.u), &grad_theta)?
            .add(&ops::scale_vec(&lap_theta, &omega).scaled(1.0 / params.prandtl));
        let sampler = FieldSampler::new(&[
            &state.u.x, &state.u.y, &state.u.z, &g.x, &g.y, &g.z, &q,
        ]);
        Ok(PointwiseUq {
            sampler,
            inv_re: params.inv_re(),
            q_threshold: epsilon_rel * q.linf(),
        })
    }

    /// U_q at the given points; error if any point sits below the q
    /// threshold.
    fn velocities(&self, points: &[[f64; 3]], t: f64) -> Result<Vec<[f64; 3]>> {
        let raw = self.sampler.sample_batch(points);
        let mut out = Vec::with_capacity(raw.len());
        for (index, v) in raw.iter().enumerate() {
            let q = v[6];
            if q.abs() < self.q_threshold {
                return Err(Error::MarkerMasked { index, time: t });
            }
            let f = self.inv_re / q;
            out.push([v[0] - f * v[3], v[1] - f * v[4], v[2] - f * v[5]]);
        }
        Ok(out)
    }
}

/// Co-integrate the stratified state and a marker surface moving with
/// U_q; compare d/dt of the B-flux against the D_q-flux over the window.
pub fn surface_flux_check(
    state0: &IncompressibleState,
    seed: &SurfaceSeed,
    settings: &FluxCheckSettings,
) -> Result<FluxCheckReport> {
    settings.params.validate()?;
    state0.check_solenoidal()?;
    if settings.stride == 0 || settings.steps % settings.stride != 0 {
        return Err(Error::config(
            "surface_stride",
            "stride must divide the step count",
        ));
    }
    // Seed rejection: every marker clear of q zeros at t = 0.
    let uq0 = crate::pv::pseudo_velocity_incompressible(
        state0,
        &settings.params,
        settings.epsilon_rel,
        settings.convention,
    )?;
    let surface = MarkerSurface::from_seed(seed, settings.m, 0.0);
    {
        let pu = PointwiseUq::build(
            state0,
            &settings.params,
            settings.convention,
            settings.epsilon_rel,
        )?;
        let q_vals: Vec<f64> = pu
            .sampler
            .sample_batch(surface.positions())
            .iter()
            .map(|v| v[6])
            .collect();
        let qmax = q_vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let margin = settings.seed_margin * grid_qmax(state0, &settings.params, settings.convention);
        if q_vals.iter().any(|q| q.abs() < margin) {
            return Err(Error::MarkerMasked {
                index: q_vals
                    .iter()
                    .position(|q| q.abs() < margin)
                    .unwrap_or(0),
                time: 0.0,
            });
        }
        let _ = qmax;
    }

    let mut rows = Vec::new();
    let mut state = state0.clone();
    let mut surf = surface;
    let mut t = 0.0;
    let mut invalidated = None;
    rows.push(flux_sample(&state, &surf, settings, t)?);

    for step in 1..=settings.steps {
        let stepped = coupled_rk4_step(&state, &surf, settings, t).and_then(|(s, m)| {
            if step % settings.stride == 0 {
                let row = flux_sample(&s, &m, settings, step as f64 * settings.dt)?;
                Ok((s, m, Some(row)))
            } else {
                Ok((s, m, None))
            }
        });
        match stepped {
            Ok((next_state, next_surf, row)) => {
                state = next_state;
                surf = next_surf;
                t = step as f64 * settings.dt;
                if let Some(row) = row {
                    rows.push(row);
                }
            }
            Err(Error::MarkerMasked { index, time }) => {
                invalidated = Some((index, time));
                break;
            }
            Err(e) => return Err(e),
        }
    }

    // Centered differences over the sampled flux series.
    let window_dt = settings.stride as f64 * settings.dt;
    let dq_scale = rows
        .iter()
        .map(|r| r.dq_flux.abs())
        .fold(0.0f64, f64::max);
    let b0 = rows[0].b_flux;
    // When D_q is (numerically) zero the mismatch is measured against the
    // B-flux scale itself, turning the column into a drift-rate measure.
    let scale = if dq_scale > 1e-13 * b0.abs().max(1.0) {
        dq_scale
    } else {
        b0.abs().max(1e-300)
    };
    for k in 1..rows.len().saturating_sub(1) {
        let db = (rows[k + 1].b_flux - rows[k - 1].b_flux) / (2.0 * window_dt);
        rows[k].db_flux_dt = Some(db);
        rows[k].rel_mismatch = Some((db - rows[k].dq_flux).abs() / scale);
    }
    let max_rel_mismatch = rows
        .iter()
        .filter_map(|r| r.rel_mismatch)
        .fold(0.0f64, f64::max);
    let b_flux_drift = rows
        .iter()
        .map(|r| (r.b_flux - b0).abs())
        .fold(0.0f64, f64::max)
        / b0.abs().max(1e-300);
    Ok(FluxCheckReport {
        rows,
        max_rel_mismatch,
        b_flux_drift,
        masked_fraction_initial: uq0.masked_fraction,
        dt: settings.dt,
        invalidated,
    })
}

fn grid_qmax(state: &IncompressibleState, params: &BoussinesqParams, conv: PvConvention) -> f64 {
    let omega = vorticity(state, params, conv);
    ops::dealias(&ops::dot_raw(&omega, &ops::gradient(&state.theta))).linf()
}

/// RK4 step of the coupled (state, markers) system: marker stage
/// velocities use the matching stage states.
fn coupled_rk4_step(
    state: &IncompressibleState,
    surf: &MarkerSurface,
    settings: &FluxCheckSettings,
    t: f64,
) -> Result<(IncompressibleState, MarkerSurface)> {
    let dt = settings.dt;
    let stage_vel = |s: &IncompressibleState, pts: &[[f64; 3]]| -> Result<Vec<[f64; 3]>> {
        if settings.params.is_ideal() {
            let sampler = FieldSampler::new(&[&s.u.x, &s.u.y, &s.u.z]);
            Ok(sampler
                .sample_batch(pts)
                .into_iter()
                .map(|v| [v[0], v[1], v[2]])
                .collect())
        } else {
            let pu = PointwiseUq::build(s, &settings.params, settings.convention, settings.epsilon_rel)?;
            pu.velocities(pts, t)
        }
    };
    let tendency = |s: &IncompressibleState| settings.model.tendency(s, &settings.params);

    let x0 = surf.positions();
    let k1s = tendency(state)?;
    let k1m = stage_vel(state, x0)?;

    let s2 = IncompressibleState {
        u: state.u.axpy(1.0, &k1s.du_dt, 0.5 * dt),
        theta: state.theta.axpy(1.0, &k1s.dtheta_dt, 0.5 * dt),
    };
    let x2 = shift(x0, &k1m, 0.5 * dt);
    let k2s = tendency(&s2)?;
    let k2m = stage_vel(&s2, &x2)?;

    let s3 = IncompressibleState {
        u: state.u.axpy(1.0, &k2s.du_dt, 0.5 * dt),
        theta: state.theta.axpy(1.0, &k2s.dtheta_dt, 0.5 * dt),
    };
    let x3 = shift(x0, &k2m, 0.5 * dt);
    let k3s = tendency(&s3)?;
    let k3m = stage_vel(&s3, &x3)?;

    let s4 = IncompressibleState {
        u: state.u.axpy(1.0, &k3s.du_dt, dt),
        theta: state.theta.axpy(1.0, &k3s.dtheta_dt, dt),
    };
    let x4 = shift(x0, &k3m, dt);
    let k4s = tendency(&s4)?;
    let k4m = stage_vel(&s4, &x4)?;

    let sixth = dt / 6.0;
    let du = k1s
        .du_dt
        .axpy(1.0, &k2s.du_dt, 2.0)
        .add(&k3s.du_dt.axpy(2.0, &k4s.du_dt, 1.0));
    let dtheta = k1s
        .dtheta_dt
        .axpy(1.0, &k2s.dtheta_dt, 2.0)
        .add(&k3s.dtheta_dt.axpy(2.0, &k4s.dtheta_dt, 1.0));
    let next_state = IncompressibleState {
        u: ops::leray_project(&state.u.axpy(1.0, &du, sixth)),
        theta: state.theta.axpy(1.0, &dtheta, sixth),
    };
    if !next_state.is_finite() {
        return Err(Error::BlowUp {
            time: t + dt,
            step: 0,
        });
    }
    let mut positions = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let mut p = [0.0; 3];
        for c in 0..3 {
            p[c] = x0[i][c]
                + sixth * (k1m[i][c] + 2.0 * k2m[i][c] + 2.0 * k3m[i][c] + k4m[i][c]);
        }
        positions.push(p);
    }
    let next_surf = MarkerSurface {
        m: surf.m,
        positions,
        topology: surf.topology,
        timestamp: t + dt,
    };
    if !next_surf.is_finite() {
        return Err(Error::BlowUp {
            time: t + dt,
            step: 0,
        });
    }
    Ok((next_state, next_surf))
}

/// B-flux and D_q-flux through the surface at one instant.
fn flux_sample(
    state: &IncompressibleState,
    surf: &MarkerSurface,
    settings: &FluxCheckSettings,
    t: f64,
) -> Result<FluxRow> {
    let params = &settings.params;
    let omega = vorticity(state, params, settings.convention);
    let grad_theta = ops::gradient(&state.theta);
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_theta));
    let grad_q = ops::gradient(&q);
    let b = ops::dealias_vec(&ops::cross_raw(&grad_q, &grad_theta));
    let b_flux = surface_flux(surf, &b);

    let dq_flux = if params.is_ideal() {
        0.0
    } else {
        // D_q at quadrature midpoints via the quotient-expanded form:
        // -[grad(q div u) - Re^-1 grad(div G)
        //   + Re^-1 (grad(P)/q - P grad(q)/q^2)] x grad(theta).
        let lap_theta = ops::laplacian(&state.theta);
        let g = ops::cross(&ops::laplacian_vec(&state.u), &grad_theta)?
            .add(&ops::scale_vec(&lap_theta, &omega).scaled(1.0 / params.prandtl));
        let grad_qdivu = ops::gradient(&ops::mul(&q, &ops::divergence(&state.u)));
        let grad_div_g = ops::gradient(&ops::divergence(&g));
        let p_scalar = ops::dot(&g, &grad_q)?;
        let grad_p = ops::gradient(&p_scalar);
        let sampler = FieldSampler::new(&[
            &grad_qdivu.x, &grad_qdivu.y, &grad_qdivu.z, // 0..3
            &grad_div_g.x, &grad_div_g.y, &grad_div_g.z, // 3..6
            &grad_p.x, &grad_p.y, &grad_p.z,             // 6..9
            &p_scalar,                                   // 9
            &q,                                          // 10
            &grad_q.x, &grad_q.y, &grad_q.z,             // 11..14
            &grad_theta.x, &grad_theta.y, &grad_theta.z, // 14..17
        ]);
        let (mids, areas) = surf.quadrature();
        let vals = sampler.sample_batch(&mids);
        let inv_re = params.inv_re();
        let threshold = settings.epsilon_rel * q.linf();
        let mut flux = 0.0;
        for (index, (v, a)) in vals.iter().zip(areas.iter()).enumerate() {
            let qv = v[10];
            if qv.abs() < threshold {
                return Err(Error::MarkerMasked { index, time: t });
            }
            let mut w = [0.0; 3];
            for c in 0..3 {
                w[c] = v[c] - inv_re * v[3 + c]
                    + inv_re * (v[6 + c] / qv - v[9] * v[11 + c] / (qv * qv));
            }
            let gt = [v[14], v[15], v[16]];
            // D_q = -w x grad(theta)
            let dq = [
                -(w[1] * gt[2] - w[2] * gt[1]),
                -(w[2] * gt[0] - w[0] * gt[2]),
                -(w[0] * gt[1] - w[1] * gt[0]),
            ];
            flux += dq[0] * a[0] + dq[1] * a[1] + dq[2] * a[2];
        }
        flux
    };
    Ok(FluxRow {
        t,
        b_flux,
        dq_flux,
        db_flux_dt: None,
        rel_mismatch: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use crate::mask::Region;
    use crate::random::random_bandlimited;

    fn grid() -> Grid {
        Grid::standard(32).unwrap()
    }

    #[test]
    fn planar_patch_flux_of_constant_field() {
        let g = grid();
        let field = VectorField::from_fns(&g, |_, _, _| 0.0, |_, _, _| 0.0, |_, _, _| 2.5);
        let seed = SurfaceSeed::Plane {
            center: [3.0, 3.0, 3.0],
            extent: 1.0,
        };
        let surf = MarkerSurface::from_seed(&seed, 16, 0.0);
        let flux = surface_flux(&surf, &field);
        assert!((flux - 2.5).abs() < 1e-12, "flux {flux}");
        assert!((surf.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_sphere_flux_of_solenoidal_field_vanishes() {
        let g = grid();
        let w = VectorField {
            x: random_bandlimited(&g, 1, 2, 1.0),
            y: random_bandlimited(&g, 2, 2, 1.0),
            z: random_bandlimited(&g, 3, 2, 1.0),
        };
        let field = ops::curl(&w);
        let seed = SurfaceSeed::Sphere {
            center: [3.1, 3.1, 3.1],
            radius: 0.8,
        };
        let m = 32;
        let surf = MarkerSurface::from_seed(&seed, m, 0.0);
        let flux = surface_flux(&surf, &field);
        // Quadrature error bound: O(M^-2) relative to field scale * area.
        let bound = field.linf() * surf.area() * 25.0 / (m * m) as f64;
        assert!(flux.abs() < bound, "flux {flux} bound {bound}");
    }

    #[test]
    fn flux_converges_second_order_in_m() {
        let g = grid();
        let field = VectorField::from_fns(
            &g,
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            |x, y, _| (x).sin() * (y).cos(),
        );
        let seed = SurfaceSeed::Plane {
            center: [2.0, 4.0, 1.0],
            extent: 1.6,
        };
        let reference = surface_flux(&MarkerSurface::from_seed(&seed, 160, 0.0), &field);
        let e1 =
            (surface_flux(&MarkerSurface::from_seed(&seed, 10, 0.0), &field) - reference).abs();
        let e2 =
            (surface_flux(&MarkerSurface::from_seed(&seed, 20, 0.0), &field) - reference).abs();
        let order = (e1 / e2).log2();
        assert!(
            order > 1.6 && order < 2.6,
            "convergence order {order} ({e1} -> {e2})"
        );
    }

    #[test]
    fn markers_static_under_zero_velocity() {
        let g = grid();
        let mv = MaskedVelocity {
            field: VectorField::zeros(&g),
            mask: Region::full(&g),
            masked_fraction: 0.0,
            epsilon_rel: 1e-6,
        };
        let seed = SurfaceSeed::Plane {
            center: [3.0, 3.0, 3.0],
            extent: 1.0,
        };
        let surf = MarkerSurface::from_seed(&seed, 8, 0.0);
        let moved = advect_markers(&surf, &mv, 0.3).unwrap();
        assert_eq!(surf.positions(), moved.positions());
    }

    #[test]
    fn uniform_velocity_translates_rigidly() {
        let g = grid();
        let mv = MaskedVelocity {
            field: VectorField::from_fns(&g, |_, _, _| 0.7, |_, _, _| 0.0, |_, _, _| 0.0),
            mask: Region::full(&g),
            masked_fraction: 0.0,
            epsilon_rel: 1e-6,
        };
        let seed = SurfaceSeed::Plane {
            center: [3.0, 3.0, 3.0],
            extent: 1.0,
        };
        let surf = MarkerSurface::from_seed(&seed, 8, 0.0);
        let dt = 0.25;
        let moved = advect_markers(&surf, &mv, dt).unwrap();
        for (p, q) in surf.positions().iter().zip(moved.positions().iter()) {
            assert!((q[0] - p[0] - 0.7 * dt).abs() < 1e-12);
            assert!((q[1] - p[1]).abs() < 1e-14);
            assert!((q[2] - p[2]).abs() < 1e-14);
        }
        assert!((moved.timestamp - dt).abs() < 1e-15);
    }

    #[test]
    fn marker_trajectory_matches_reference_ode() {
        // Single-mode velocity (sin z, 0, 0),(0,0,c): trajectory solvable
        // by a high-accuracy reference integrator (tiny-step RK4).
        let g = grid();
        let mv = MaskedVelocity {
            field: VectorField::from_fns(
                &g,
                |_, _, z| z.sin(),
                |_, _, _| 0.0,
                |_, _, _| 0.4,
            ),
            mask: Region::full(&g),
            masked_fraction: 0.0,
            epsilon_rel: 1e-6,
        };
        let seed = SurfaceSeed::Plane {
            center: [3.0, 3.0, 2.0],
            extent: 0.5,
        };
        let mut surf = MarkerSurface::from_seed(&seed, 8, 0.0);
        let dt = 0.1;
        for _ in 0..10 {
            surf = advect_markers(&surf, &mv, dt).unwrap();
        }
        // Reference: per-marker RK4 with 1000x smaller steps on the
        // analytic velocity.
        let vel = |p: [f64; 3]| -> [f64; 3] { [p[2].sin(), 0.0, 0.4] };
        let init = MarkerSurface::from_seed(&seed, 8, 0.0);
        for (idx, p0) in init.positions().iter().enumerate() {
            let mut p = *p0;
            let h = dt / 1000.0;
            for _ in 0..10 * 1000 {
                let k1 = vel(p);
                let k2 = vel([p[0] + 0.5 * h * k1[0], p[1], p[2] + 0.5 * h * k1[2]]);
                let k3 = vel([p[0] + 0.5 * h * k2[0], p[1], p[2] + 0.5 * h * k2[2]]);
                let k4 = vel([p[0] + h * k3[0], p[1], p[2] + h * k3[2]]);
                p = [
                    p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    p[1],
                    p[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
                ];
            }
            let got = surf.positions()[idx];
            for c in 0..3 {
                assert!(
                    (got[c] - p[c]).abs() < 1e-8,
                    "marker {idx} axis {c}: {} vs {}",
                    got[c],
                    p[c]
                );
            }
        }
    }

    #[test]
    fn masked_region_invalidates_surface() {
        let g = grid();
        let n = g.n();
        let mut keep = vec![true; g.len()];
        // Mask a thick slab around z = pi.
        for iz in 14..18 {
            for iy in 0..n {
                for ix in 0..n {
                    keep[g.index(ix, iy, iz)] = false;
                }
            }
        }
        let mv = MaskedVelocity {
            field: VectorField::from_fns(&g, |_, _, _| 0.0, |_, _, _| 0.0, |_, _, _| 1.0),
            mask: Region::from_keep(&g, keep),
            masked_fraction: 4.0 / 32.0,
            epsilon_rel: 1e-6,
        };
        let seed = SurfaceSeed::Plane {
            center: [3.0, 3.0, 2.5],
            extent: 1.0,
        };
        let surf = MarkerSurface::from_seed(&seed, 8, 0.0);
        // Advect towards the slab until a marker crosses it.
        let mut s = surf;
        let mut hit = false;
        for _ in 0..12 {
            match advect_markers(&s, &mv, 0.1) {
                Ok(next) => s = next,
                Err(Error::MarkerMasked { .. }) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(hit, "marker should have entered the masked slab");
    }

    #[test]
    fn ideal_flux_check_conserves_b_flux() {
        let g = grid();
        let state = IncompressibleState {
            u: crate::random::random_solenoidal(&g, 31, 2, 0.5),
            theta: random_bandlimited(&g, 32, 2, 0.5),
        };
        let settings = FluxCheckSettings {
            model: ModelKind::Euler,
            params: BoussinesqParams::ideal(0.0, [0.0; 3]),
            convention: PvConvention::Relative,
            dt: 0.02,
            steps: 20,
            stride: 5,
            // The drift bound is quadrature-limited (second order in M):
            // the deforming surface re-samples its own discretization
            // error, so the marker lattice must out-resolve the patch.
            m: 32,
            epsilon_rel: 1e-6,
            seed_margin: 0.05,
        };
        let seed = pick_clear_seed_with_extent(&state, &settings, 0.6);
        let report = surface_flux_check(&state, &seed, &settings).unwrap();
        assert!(
            report.b_flux_drift < 1e-4,
            "ideal B-flux drift {:.3e}",
            report.b_flux_drift
        );
        for row in &report.rows {
            assert!(row.dq_flux.abs() < 1e-10);
        }
    }

    /// Deterministic seed scan used by tests: slide a small patch through
    /// the box until all markers clear the q-zero margin.
    fn pick_clear_seed(
        state: &IncompressibleState,
        settings: &FluxCheckSettings,
    ) -> SurfaceSeed {
        pick_clear_seed_with_extent(state, settings, 0.8)
    }

    fn pick_clear_seed_with_extent(
        state: &IncompressibleState,
        settings: &FluxCheckSettings,
        extent: f64,
    ) -> SurfaceSeed {
        let l = state.grid().box_length();
        for attempt in 0..64 {
            let seed = SurfaceSeed::Plane {
                center: [
                    l * (0.21 + 0.137 * attempt as f64) % l,
                    l * (0.37 + 0.211 * attempt as f64) % l,
                    l * (0.53 + 0.173 * attempt as f64) % l,
                ],
                extent,
            };
            if surface_flux_check(
                state,
                &seed,
                &FluxCheckSettings {
                    steps: 0,
                    ..*settings
                },
            )
            .is_ok()
            {
                return seed;
            }
        }
        panic!("no clear seed found");
    }

    #[test]
    fn viscous_flux_balance_within_tolerance() {
        let g = grid();
        let state = IncompressibleState {
            u: crate::random::random_solenoidal(&g, 41, 2, 0.5),
            theta: random_bandlimited(&g, 42, 2, 0.5),
        };
        let settings = FluxCheckSettings {
            model: ModelKind::Boussinesq,
            params: BoussinesqParams::viscous(100.0, 1.0, 0.3),
            convention: PvConvention::Relative,
            dt: 0.02,
            steps: 20,
            stride: 5,
            m: 32,
            epsilon_rel: 1e-6,
            seed_margin: 0.05,
        };
        let seed = pick_clear_seed(&state, &settings);
        let report = surface_flux_check(&state, &seed, &settings).unwrap();
        assert!(
            report.max_rel_mismatch < 0.05,
            "flux mismatch {:.3e}",
            report.max_rel_mismatch
        );
    }
}
