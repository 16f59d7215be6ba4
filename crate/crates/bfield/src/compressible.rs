//! Compressible vorticity-density diagnostics.
//!
//! Both projections of vorticity onto the density gradient are supported:
//! q = omega.grad(rho) and q = omega.grad(ln rho). Each carries a current
//! density whose divergence balances the PV tendency, a family of
//! conserved densities, an impermeability relation, and a B-field
//! transport law driven by D_q. Verification is instantaneous-only: the
//! compressible content is a set of kinematic balance identities checked
//! from one snapshot plus tendencies.
//!
//! As in the incompressible module, divisions by q stay pointwise and
//! outermost; the B-law residual is assembled in its quotient-free reduced
//! form, which is the chain rule of the two quasi-conservation laws.

use crate::catalog::{FamilySpec, GaugeSpec};
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::flow::{compressible_tendency, effective_pressure, CompressibleParams, CompressibleState};
use crate::mask::{MaskedVelocity, Region};
use crate::ops;
use crate::residual::{scalar_entry, value_entry, vector_entry, ResidualEntry, ResidualReport};
use crate::tolerances::MASK_EROSION_CELLS;

/// Which projection of vorticity defines q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionKind {
    /// q = omega . grad(rho)
    Density,
    /// q = omega . grad(ln rho)
    LogDensity,
}

impl ProjectionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProjectionKind::Density => "density",
            ProjectionKind::LogDensity => "log_density",
        }
    }
}

/// Projection of the vorticity onto the density gradient of the chosen kind.
pub fn projection_q(
    omega: &VectorField,
    rho: &ScalarField,
    kind: ProjectionKind,
) -> Result<ScalarField> {
    omega.grid().check_same(rho.grid())?;
    match kind {
        ProjectionKind::Density => Ok(ops::dealias(&ops::dot_raw(omega, &ops::gradient(rho)))),
        ProjectionKind::LogDensity => {
            let min = rho.min();
            if min <= 0.0 {
                return Err(crate::error::Error::NonPositiveDensity { min });
            }
            let ln_rho = ops::dealias(&rho.map(f64::ln));
            Ok(ops::dealias(&ops::dot_raw(omega, &ops::gradient(&ln_rho))))
        }
    }
}

/// Shared precomputations for the compressible diagnostics.
struct CompContext {
    omega: VectorField,
    div_u: ScalarField,
    grad_rho: VectorField,
    q: ScalarField,
    grad_q: VectorField,
    j: VectorField,
    /// d(q)/dt by the chain rule from the tendencies.
    dq_dt: ScalarField,
    drho_dt: ScalarField,
}

fn context(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    t: f64,
) -> Result<CompContext> {
    state.check_positive_density()?;
    let omega = ops::curl(&state.u);
    let div_u = ops::divergence(&state.u);
    let grad_rho = ops::gradient(&state.rho);
    let s = match kind {
        ProjectionKind::Density => state.rho.clone(),
        ProjectionKind::LogDensity => ops::dealias(&state.rho.map(f64::ln)),
    };
    let grad_s = ops::gradient(&s);
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_s));
    let grad_q = ops::gradient(&q);
    let j = current_density_from(state, params, kind, gauge, &omega, &div_u)?;
    let tendency = compressible_tendency(state, params, t)?;
    let drho_dt = tendency.drho_dt.clone().expect("compressible tendency");
    // d(q)/dt = curl(du/dt).grad(s) + omega.grad(ds/dt); for the log kind
    // ds/dt = (drho/dt)/rho pointwise.
    let ds_dt = match kind {
        ProjectionKind::Density => drho_dt.clone(),
        ProjectionKind::LogDensity => ops::dealias(&drho_dt.zip(&state.rho, |d, r| d / r)),
    };
    let dq_dt = ops::dot(&ops::curl(&tendency.du_dt), &grad_s)?
        .add(&ops::dot(&omega, &ops::gradient(&ds_dt))?);
    Ok(CompContext {
        omega,
        div_u,
        grad_rho,
        q,
        grad_q,
        j,
        dq_dt,
        drho_dt,
    })
}

/// The gauge contribution grad(phi) x grad(psi(rho)).
pub fn gauge_current(state: &CompressibleState, gauge: &GaugeSpec) -> Result<VectorField> {
    let grid = state.grid();
    if gauge.phi.is_zero() {
        return Ok(VectorField::zeros(grid));
    }
    let phi = gauge.phi.sample(grid);
    let psi = ops::dealias(&gauge.psi.eval_field(&state.rho));
    ops::cross(&ops::gradient(&phi), &ops::gradient(&psi))
}

fn current_density_from(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    omega: &VectorField,
    div_u: &ScalarField,
) -> Result<VectorField> {
    let grad_s = match kind {
        ProjectionKind::Density => ops::gradient(&state.rho),
        ProjectionKind::LogDensity => {
            ops::gradient(&ops::dealias(&state.rho.map(f64::ln)))
        }
    };
    let q = ops::dealias(&ops::dot_raw(omega, &grad_s));
    let mut j = ops::scale_vec(&q, &state.u);
    match kind {
        ProjectionKind::Density => {
            // + omega rho div(u) - mu Lap(u) x grad(ln rho)
            let rho_divu = ops::mul(&state.rho, div_u);
            j = j.add(&ops::scale_vec(&rho_divu, omega));
            if params.mu != 0.0 {
                let ln_rho = ops::dealias(&state.rho.map(f64::ln));
                let visc = ops::cross(&ops::laplacian_vec(&state.u), &ops::gradient(&ln_rho))?;
                j = j.sub(&visc.scaled(params.mu));
            }
        }
        ProjectionKind::LogDensity => {
            // + omega div(u) + mu Lap(u) x grad(1/rho)
            j = j.add(&ops::scale_vec(div_u, omega));
            if params.mu != 0.0 {
                let inv_rho = ops::dealias(&state.rho.map(|r| 1.0 / r));
                let visc = ops::cross(&ops::laplacian_vec(&state.u), &ops::gradient(&inv_rho))?;
                j = j.add(&visc.scaled(params.mu));
            }
        }
    }
    j = j.add(&gauge_current(state, gauge)?);
    Ok(j)
}

/// Current density J of the chosen projection kind and gauge.
pub fn current_density(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
) -> Result<VectorField> {
    state.check_positive_density()?;
    let omega = ops::curl(&state.u);
    let div_u = ops::divergence(&state.u);
    current_density_from(state, params, kind, gauge, &omega, &div_u)
}

fn annotate(report: &mut ResidualReport, kind: ProjectionKind, gauge: &GaugeSpec) {
    report.note("kind", kind.name());
    report.note("gauge_phi", gauge.phi.name());
    report.note("gauge_psi", gauge.psi.name());
}

/// Quasi-conservation residuals: the divergence-form balance specific to
/// the kind (`q-calc2` for the density projection, `proj2B` for the
/// log-density one), plus the two gauge-dressed laws
/// `q1d-a`: d(q)/dt + div(J) and `q1d-b`: q d(rho)/dt + J.grad(rho).
pub fn quasi_conservation_residuals(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
) -> Result<ResidualReport> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let grid = state.grid();
    let region = Region::full(grid);
    let mut report = ResidualReport::new(grid.n());
    annotate(&mut report, kind, gauge);

    // Bare divergence form (no gauge): d(q)/dt + div(q u) + div(extra).
    let div_qu = ops::divergence(&ops::scale_vec(&ctx.q, &state.u));
    let extra = match kind {
        ProjectionKind::Density => {
            let rho_divu = ops::mul(&state.rho, &ctx.div_u);
            let mut e = ops::scale_vec(&rho_divu, &ctx.omega);
            if params.mu != 0.0 {
                let ln_rho = ops::dealias(&state.rho.map(f64::ln));
                e = e.sub(
                    &ops::cross(&ops::laplacian_vec(&state.u), &ops::gradient(&ln_rho))?
                        .scaled(params.mu),
                );
            }
            e
        }
        ProjectionKind::LogDensity => {
            let mut e = ops::scale_vec(&ctx.div_u, &ctx.omega);
            if params.mu != 0.0 {
                let inv_rho = ops::dealias(&state.rho.map(|r| 1.0 / r));
                e = e.add(
                    &ops::cross(&ops::laplacian_vec(&state.u), &ops::gradient(&inv_rho))?
                        .scaled(params.mu),
                );
            }
            e
        }
    };
    let div_extra = ops::divergence(&extra);
    let r_div_form = ctx.dq_dt.add(&div_qu).add(&div_extra);
    let tag = match kind {
        ProjectionKind::Density => "q-calc2",
        ProjectionKind::LogDensity => "proj2B",
    };
    report.insert(
        tag,
        scalar_entry(&region, &r_div_form, &[&ctx.dq_dt, &div_qu, &div_extra]),
    );

    // (q1d-a) with the full gauge-dressed current.
    let div_j = ops::divergence(&ctx.j);
    let r_a = ctx.dq_dt.add(&div_j);
    report.insert("q1d-a", scalar_entry(&region, &r_a, &[&ctx.dq_dt, &div_j]));

    // (q1d-b) q d(rho)/dt + J.grad(rho), pointwise.
    let q_drho = ops::mul_raw(&ctx.q, &ctx.drho_dt);
    let j_gradrho = ops::dot_raw(&ctx.j, &ctx.grad_rho);
    let r_b = q_drho.add(&j_gradrho);
    report.insert("q1d-b", scalar_entry(&region, &r_b, &[&q_drho, &j_gradrho]));
    Ok(report)
}

/// Impermeability relation: J.grad(rho) - q div(rho u) = 0, plus the
/// verification that the gauge term contributes nothing to J.grad(rho).
pub fn impermeability_check(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
) -> Result<ResidualReport> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let grid = state.grid();
    let region = Region::full(grid);
    let mut report = ResidualReport::new(grid.n());
    annotate(&mut report, kind, gauge);

    let j_gradrho = ops::dot_raw(&ctx.j, &ctx.grad_rho);
    let div_rho_u = ops::divergence(&ops::scale_vec(&state.rho, &state.u));
    let q_divrhou = ops::mul_raw(&ctx.q, &div_rho_u);
    let r = j_gradrho.sub(&q_divrhou);
    report.insert(
        "imperm",
        scalar_entry(&region, &r, &[&j_gradrho, &q_divrhou]),
    );

    // (grad(phi) x grad(psi(rho))) . grad(rho) = 0 pointwise.
    let gauge_j = gauge_current(state, gauge)?;
    let gauge_proj = ops::dot_raw(&gauge_j, &ctx.grad_rho);
    let scale_field = ops::dot_raw(&ctx.j, &ctx.grad_rho);
    report.insert(
        "imperm-gauge",
        ResidualEntry {
            l2_rel: region.l2(&gauge_proj)
                / (gauge_j.l2() * ctx.grad_rho.l2()).max(region.l2(&scale_field)).max(1e-300),
            linf: region.linf(&gauge_proj),
            masked_fraction: 0.0,
        },
    );
    Ok(report)
}

/// Conserved-family residuals for the generator Phi:
/// `cons-a`: d/dt(q Phi'(rho)) + div(J Phi'(rho));
/// `cons-b`: the pointwise identity relating q Phi' to div(Phi omega);
/// `cons-int`: time derivative of the integral of q Phi'(rho).
pub fn conserved_family_residual(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    family: &FamilySpec,
) -> Result<ResidualReport> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let grid = state.grid();
    let region = Region::full(grid);
    let mut report = ResidualReport::new(grid.n());
    annotate(&mut report, kind, gauge);
    report.note("family", family.phi.name());

    let phi_p = ops::dealias(&family.phi.deriv_field(&state.rho));
    let phi_pp = ops::dealias(&state.rho.map(|r| family.phi.second_deriv(r)));

    // d/dt(q Phi') = Phi' dq/dt + q Phi'' drho/dt.
    let ddt = ops::mul(&phi_p, &ctx.dq_dt).add(&ops::dealias(&ops::mul_raw(
        &ctx.q,
        &ops::mul_raw(&phi_pp, &ctx.drho_dt),
    )));
    let div_jphi = ops::divergence(&ops::scale_vec(&phi_p, &ctx.j));
    let r_a = ddt.add(&div_jphi);
    report.insert("cons-a", scalar_entry(&region, &r_a, &[&ddt, &div_jphi]));

    // Pointwise density identity: div(Phi(rho) omega) = Phi'(rho) *
    // (omega.grad rho); the right side is q for the density kind and
    // rho q for the log kind.
    let phi_field = ops::dealias(&family.phi.eval_field(&state.rho));
    let div_phi_omega = ops::divergence(&ops::scale_vec(&phi_field, &ctx.omega));
    let q_density = match kind {
        ProjectionKind::Density => ctx.q.clone(),
        ProjectionKind::LogDensity => ops::mul(&state.rho, &ctx.q),
    };
    let lhs = ops::mul(&phi_p, &q_density);
    let r_b = lhs.sub(&div_phi_omega);
    report.insert(
        "cons-b",
        scalar_entry(&region, &r_b, &[&lhs, &div_phi_omega]),
    );

    // Integral conservation: d/dt of the domain integral of q Phi'.
    let drift = ddt.integral();
    let scale = ddt.l2().max(div_jphi.l2()) * grid.volume();
    report.insert("cons-int", value_entry(drift, scale));
    Ok(report)
}

/// Pseudo-velocity U_q = J / q, masked near zeros of q; carries the gauge
/// freedom of J.
pub fn pseudo_velocity_compressible(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    epsilon_rel: f64,
) -> Result<MaskedVelocity> {
    assert!(epsilon_rel > 0.0, "epsilon_rel must be positive");
    state.check_positive_density()?;
    let omega = ops::curl(&state.u);
    let div_u = ops::divergence(&state.u);
    let j = current_density_from(state, params, kind, gauge, &omega, &div_u)?;
    let grad_s = match kind {
        ProjectionKind::Density => ops::gradient(&state.rho),
        ProjectionKind::LogDensity => ops::gradient(&ops::dealias(&state.rho.map(f64::ln))),
    };
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_s));
    MaskedVelocity::from_quotient(&j, &q, epsilon_rel)
}

/// Continuity and density-advection residuals written with the
/// pseudo-velocity: `q1d2-a`: d(q)/dt + div(q U_q), with the flux q U_q
/// assembled as J (no division); `q1d2-b`: d(rho)/dt + U_q.grad(rho),
/// pointwise on the eroded unmasked region.
pub fn pseudo_velocity_balance_residuals(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    epsilon_rel: f64,
) -> Result<ResidualReport> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let uq = MaskedVelocity::from_quotient(&ctx.j, &ctx.q, epsilon_rel)?;
    let region = uq.mask.eroded(MASK_EROSION_CELLS);
    let grid = state.grid();
    let mut report = ResidualReport::new(grid.n());
    annotate(&mut report, kind, gauge);
    report.note("epsilon_rel", epsilon_rel);
    report.note("masked_fraction", uq.masked_fraction);

    let div_j = ops::divergence(&ctx.j);
    let r_a = ctx.dq_dt.add(&div_j);
    report.insert("q1d2-a", scalar_entry(&region, &r_a, &[&ctx.dq_dt, &div_j]));

    let adv = ops::dot_raw(&uq.field, &ctx.grad_rho);
    let r_b = ctx.drho_dt.add(&adv);
    report.insert("q1d2-b", scalar_entry(&region, &r_b, &[&ctx.drho_dt, &adv]));
    Ok(report)
}

/// The driver D_q = -grad(q div U_q) x grad(rho), zero-filled on the
/// mask, with quotient terms expanded so divisions stay pointwise:
/// grad(q div U_q) = grad(div J) - grad(P)/q + P grad(q)/q^2, P = J.grad(q).
pub fn d_q_vector_compressible(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    uq: &MaskedVelocity,
) -> Result<VectorField> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let grad_div_j = ops::gradient(&ops::divergence(&ctx.j));
    let p_scalar = ops::dot(&ctx.j, &ctx.grad_q)?;
    let grad_p = ops::gradient(&p_scalar);
    let qv = ctx.q.values();
    let keep = uq.mask.keep();
    let grid = state.grid();
    let component = |a: &ScalarField, gp: &ScalarField, gq: &ScalarField| -> ScalarField {
        let (av, gpv, pv, gqv) = (a.values(), gp.values(), p_scalar.values(), gq.values());
        ScalarField::from_values(
            grid,
            (0..qv.len())
                .map(|i| {
                    if keep[i] {
                        av[i] - gpv[i] / qv[i] + pv[i] * gqv[i] / (qv[i] * qv[i])
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    };
    let w = VectorField {
        x: component(&grad_div_j.x, &grad_p.x, &ctx.grad_q.x),
        y: component(&grad_div_j.y, &grad_p.y, &ctx.grad_q.y),
        z: component(&grad_div_j.z, &grad_p.z, &ctx.grad_q.z),
    };
    Ok(ops::cross_raw(&w.scaled(-1.0), &ctx.grad_rho))
}

/// Residual of the compressible B-law dB/dt - curl(U_q x B) = D_q with
/// B = grad(q) x grad(rho), in the quotient-free reduced form
/// dB/dt - grad(div(rho u)) x grad(q) + grad(div J) x grad(rho),
/// plus the informational size of div(U_q).
pub fn compressible_b_residual(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    epsilon_rel: f64,
) -> Result<ResidualReport> {
    compressible_b_residual_scaled(state, params, kind, gauge, epsilon_rel, 1.0)
}

/// B-law residual with the D_q term scaled by `dq_scale` (1 = the
/// identity; other values are negative controls).
pub fn compressible_b_residual_scaled(
    state: &CompressibleState,
    params: &CompressibleParams,
    kind: ProjectionKind,
    gauge: &GaugeSpec,
    epsilon_rel: f64,
    dq_scale: f64,
) -> Result<ResidualReport> {
    let ctx = context(state, params, kind, gauge, 0.0)?;
    let grid = state.grid();
    let uq = MaskedVelocity::from_quotient(&ctx.j, &ctx.q, epsilon_rel)?;
    let region = uq.mask.eroded(MASK_EROSION_CELLS);
    let mut report = ResidualReport::new(grid.n());
    annotate(&mut report, kind, gauge);
    report.note("epsilon_rel", epsilon_rel);
    report.note("masked_fraction", uq.masked_fraction);

    // dB/dt by the chain rule from the tendencies.
    let db_dt = ops::cross(&ops::gradient(&ctx.dq_dt), &ctx.grad_rho)?
        .add(&ops::cross(&ctx.grad_q, &ops::gradient(&ctx.drho_dt))?);
    let div_rho_u = ops::divergence(&ops::scale_vec(&state.rho, &state.u));
    let term_mass = ops::cross(&ops::gradient(&div_rho_u), &ctx.grad_q)?;
    let div_j = ops::divergence(&ctx.j);
    let term_current = ops::cross(&ops::gradient(&div_j), &ctx.grad_rho)?;
    let mut r = db_dt.sub(&term_mass).add(&term_current);
    if dq_scale != 1.0 {
        let dq = d_q_vector_compressible(state, params, kind, gauge, &uq)?;
        r = r.add(&dq.scaled(1.0 - dq_scale));
    }
    report.insert(
        "ceeqn1",
        vector_entry(&region, &r, &[&db_dt, &term_mass, &term_current]),
    );

    // div(U_q) = (div J - J.grad(q)/q)/q, pointwise on the region;
    // reported relative to div(u), the natural compression-rate scale.
    let p_scalar = ops::dot(&ctx.j, &ctx.grad_q)?;
    let qv = ctx.q.values();
    let keep = uq.mask.keep();
    let div_uq = ScalarField::from_values(
        grid,
        (0..qv.len())
            .map(|i| {
                if keep[i] {
                    (div_j.values()[i] - p_scalar.values()[i] / qv[i]) / qv[i]
                } else {
                    0.0
                }
            })
            .collect(),
    );
    report.insert(
        "divUq",
        ResidualEntry {
            l2_rel: region.l2(&div_uq) / region.l2(&ctx.div_u).max(1e-300),
            linf: region.linf(&div_uq),
            masked_fraction: region.excluded_fraction(),
        },
    );
    Ok(report)
}

/// Residual of the compressible vorticity law: curl(du/dt) against the
/// advective, diffusive, and baroclinic right-hand side
/// curl(u x omega) + mu rho^-1 Lap(omega) + grad(rho^-1) x (mu Lap(u) - grad(pi)).
///
/// The Bernoulli head contributes nothing here: the gradient of u^2/2
/// drops under the curl before the density factor enters, so the
/// baroclinic bracket carries the effective pressure alone.
pub fn compressible_vorticity_residual(
    state: &CompressibleState,
    params: &CompressibleParams,
) -> Result<ResidualReport> {
    state.check_positive_density()?;
    let grid = state.grid();
    let tendency = compressible_tendency(state, params, 0.0)?;
    let lhs = ops::curl(&tendency.du_dt);
    let rhs = compressible_vorticity_rhs(state, params)?;
    let region = Region::full(grid);
    let r = lhs.sub(&rhs);
    let mut report = ResidualReport::new(grid.n());
    report.insert("Dom", vector_entry(&region, &r, &[&lhs, &rhs]));
    Ok(report)
}

/// The analytic right-hand side of the compressible vorticity law.
pub fn compressible_vorticity_rhs(
    state: &CompressibleState,
    params: &CompressibleParams,
) -> Result<VectorField> {
    let u = &state.u;
    let omega = ops::curl(u);
    let div_u = ops::divergence(u);
    let mut rhs = ops::curl(&ops::cross(u, &omega)?);
    let inv_rho = ops::dealias(&state.rho.map(|r| 1.0 / r));
    let grad_inv_rho = ops::gradient(&inv_rho);
    let varpi = effective_pressure(state, params, &div_u);
    let mut bracket = ops::gradient(&varpi).scaled(-1.0);
    if params.mu != 0.0 {
        bracket = bracket.add(&ops::laplacian_vec(u).scaled(params.mu));
        rhs = rhs.add(&ops::scale_vec(
            &inv_rho,
            &ops::laplacian_vec(&omega),
        ).scaled(params.mu));
    }
    rhs = rhs.add(&ops::cross(&grad_inv_rho, &bracket)?);
    Ok(rhs)
}
