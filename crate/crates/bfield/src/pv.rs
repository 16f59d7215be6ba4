//! Incompressible potential-vorticity diagnostics.
//!
//! Everything here runs in the instantaneous regime: time derivatives of
//! derived quantities come from model tendencies via the chain rule. The
//! residual assemblies keep divisions by q pointwise and outermost — a
//! quotient never enters a spectral derivative. Where the transport
//! identity for the B-field needs derivatives of the pseudo-velocity, the
//! quotient terms are expanded by exact calculus first; the singular
//! pieces then cancel in the assembled residual and the check stays
//! well-posed on the whole grid.

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::flow::{BoussinesqParams, IncompressibleState, Tendency};
use crate::mask::{MaskedVelocity, Region};
use crate::ops;
use crate::residual::{scalar_entry, vector_entry, ResidualReport};
use crate::tolerances::MASK_EROSION_CELLS;

/// Which vorticity enters q: the relative curl or the rotating-frame
/// total including the planetary contribution 2 Omega.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PvConvention {
    Relative,
    Rotating,
}

/// Vorticity field under the chosen convention.
pub fn vorticity(state: &IncompressibleState, params: &BoussinesqParams, conv: PvConvention) -> VectorField {
    let mut w = ops::curl(&state.u);
    if conv == PvConvention::Rotating && params.has_rotation() {
        let [ox, oy, oz] = params.omega;
        w.x = w.x.map(|v| v + 2.0 * ox);
        w.y = w.y.map(|v| v + 2.0 * oy);
        w.z = w.z.map(|v| v + 2.0 * oz);
    }
    w
}

/// Potential vorticity q = omega . grad(theta). The caller supplies the
/// vorticity (relative or rotating).
pub fn potential_vorticity(omega: &VectorField, theta: &ScalarField) -> Result<ScalarField> {
    omega.grid().check_same(theta.grid())?;
    Ok(ops::dealias(&ops::dot_raw(omega, &ops::gradient(theta))))
}

/// B = grad(q) x grad(theta); divergence-free by construction.
pub fn b_field(q: &ScalarField, theta: &ScalarField) -> Result<VectorField> {
    q.grid().check_same(theta.grid())?;
    Ok(ops::dealias_vec(&ops::cross_raw(
        &ops::gradient(q),
        &ops::gradient(theta),
    )))
}

/// Shared precomputations for the viscous PV diagnostics.
struct PvContext {
    omega: VectorField,
    q: ScalarField,
    grad_q: VectorField,
    grad_theta: ScalarField3,
    /// Viscous combination Lap(u) x grad(theta) + sigma^-1 omega Lap(theta).
    visc: VectorField,
    dq_dt: ScalarField,
    tendency: Tendency,
}

// grad(theta) is used as a VectorField; alias for readability.
type ScalarField3 = VectorField;

fn pv_context(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    conv: PvConvention,
    tendency: Tendency,
) -> Result<PvContext> {
    let omega = vorticity(state, params, conv);
    let grad_theta = ops::gradient(&state.theta);
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_theta));
    let grad_q = ops::gradient(&q);
    let lap_u = ops::laplacian_vec(&state.u);
    let lap_theta = ops::laplacian(&state.theta);
    let visc = ops::cross(&lap_u, &grad_theta)?
        .add(&ops::scale_vec(&lap_theta, &omega).scaled(1.0 / params.prandtl));
    // d(q)/dt by the chain rule: curl(du/dt).grad(theta) + omega.grad(dtheta/dt).
    let domega_dt = ops::curl(&tendency.du_dt);
    let dq_dt = ops::dot(&domega_dt, &grad_theta)?
        .add(&ops::dot(&omega, &ops::gradient(&tendency.dtheta_dt))?);
    Ok(PvContext {
        omega,
        q,
        grad_q,
        grad_theta,
        visc,
        dq_dt,
        tendency,
    })
}

/// Residuals of the Ertel decomposition and of material PV conservation.
///
/// Entry `q1A`: Dq/Dt minus the decomposition
/// (D(omega)/Dt - omega.grad(u)).grad(theta) + omega.grad(Dtheta/Dt),
/// an exact chain-rule relation for any tendency. Entry `q1B`: the size
/// of Dq/Dt itself, which vanishes for ideal tendencies.
pub fn ertel_residual(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    tendency: &Tendency,
    conv: PvConvention,
) -> Result<ResidualReport> {
    state.grid().check_same(tendency.du_dt.grid())?;
    let ctx = pv_context(state, params, conv, tendency.clone())?;
    let u = &state.u;

    let dq_material = ctx.dq_dt.add(&ops::advect_scalar(u, &ctx.q));
    let domega_dt = ops::curl(&ctx.tendency.du_dt);
    let domega_material = domega_dt.add(&ops::advect_vector(u, &ctx.omega));
    let stretch = ops::advect_vector(&ctx.omega, u);
    let dtheta_material = ctx
        .tendency
        .dtheta_dt
        .add(&ops::advect_scalar(u, &state.theta));
    let decomposition = ops::dot(&domega_material.sub(&stretch), &ctx.grad_theta)?
        .add(&ops::dot(&ctx.omega, &ops::gradient(&dtheta_material))?);

    let region = Region::full(state.grid());
    let r_decomp = dq_material.sub(&decomposition);
    // Both sides of the decomposition vanish for ideal tendencies, so the
    // scale comes from the non-cancelling constituents.
    let advective = ops::advect_scalar(u, &ctx.q);
    let mut report = ResidualReport::new(state.grid().n());
    report.insert(
        "q1A",
        scalar_entry(&region, &r_decomp, &[&ctx.dq_dt, &advective]),
    );
    report.insert(
        "q1B",
        scalar_entry(&region, &dq_material, &[&ctx.dq_dt, &advective]),
    );
    report.note("convention", format!("{conv:?}"));
    Ok(report)
}

/// The three algebraically-equal forms of Dq/Dt for the viscous system.
pub struct PvTendencyForms {
    /// Chain-rule (Ertel decomposition) form.
    pub ertel: ScalarField,
    /// Substituted form: Re^-1 Lap(omega).grad(theta) + buoyancy term
    /// + (sigma Re)^-1 omega.grad(Lap theta).
    pub substituted: ScalarField,
    /// Divergence form: div(Re^-1 Lap(u) x grad(theta)
    /// + (sigma Re)^-1 omega Lap(theta)).
    pub divergence: ScalarField,
    /// Contribution of the buoyancy term, zero by the orthogonality
    /// perp_grad(theta).grad(theta) = 0.
    pub buoyancy_term: ScalarField,
    pub report: ResidualReport,
}

/// Compute Dq/Dt three ways and report all pairwise differences.
pub fn pv_tendency_forms(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    conv: PvConvention,
) -> Result<PvTendencyForms> {
    let tendency = crate::flow::boussinesq_tendency(state, params)?;
    let ctx = pv_context(state, params, conv, tendency)?;
    let u = &state.u;

    let ertel = ctx.dq_dt.add(&ops::advect_scalar(u, &ctx.q));

    let inv_re = params.inv_re();
    let lap_omega = ops::laplacian_vec(&ctx.omega);
    let buoyancy_term = ops::dot(
        &ops::perp_gradient(&state.theta).scaled(-params.a0),
        &ctx.grad_theta,
    )?;
    let lap_theta = ops::laplacian(&state.theta);
    let substituted = ops::dot(&lap_omega, &ctx.grad_theta)?
        .scaled(inv_re)
        .add(&buoyancy_term)
        .add(
            &ops::dot(&ctx.omega, &ops::gradient(&lap_theta))?
                .scaled(params.inv_sigma_re()),
        );

    let divergence = ops::divergence(&ctx.visc.scaled(inv_re));

    let region = Region::full(state.grid());
    let mut report = ResidualReport::new(state.grid().n());
    let pairs = [
        ("ens9-12", &ertel, &substituted),
        ("ens9-13", &ertel, &divergence),
        ("ens9-23", &substituted, &divergence),
    ];
    for (tag, a, b) in pairs {
        report.insert(tag, scalar_entry(&region, &a.sub(b), &[a, b]));
    }
    report.insert(
        "ens9-buoyancy",
        scalar_entry(&region, &buoyancy_term, &[&ertel]),
    );
    report.note("convention", format!("{conv:?}"));
    Ok(PvTendencyForms {
        ertel,
        substituted,
        divergence,
        buoyancy_term,
        report,
    })
}

/// Pseudo-velocity U_q = u - (q Re)^-1 (Lap(u) x grad(theta)
/// + sigma^-1 omega Lap(theta)), masked near zeros of q.
///
/// Masked cells carry the plain velocity u, which is also the exact
/// ideal-limit value.
pub fn pseudo_velocity_incompressible(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    epsilon_rel: f64,
    conv: PvConvention,
) -> Result<MaskedVelocity> {
    assert!(epsilon_rel > 0.0, "epsilon_rel must be positive");
    let omega = vorticity(state, params, conv);
    let grad_theta = ops::gradient(&state.theta);
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_theta));
    let lap_theta = ops::laplacian(&state.theta);
    let visc = ops::cross(&ops::laplacian_vec(&state.u), &grad_theta)?
        .add(&ops::scale_vec(&lap_theta, &omega).scaled(1.0 / params.prandtl));
    let numerator = visc.scaled(-params.inv_re());
    let mut mv = MaskedVelocity::from_quotient(&numerator, &q, epsilon_rel)?;
    mv.field = mv.field.add(&state.u);
    Ok(mv)
}

/// The divergence-free driver D_q = -grad(q div U_q) x grad(theta),
/// zero-filled on the mask.
///
/// Assembled with quotient terms expanded by exact calculus so the only
/// divisions are pointwise:
/// grad(q div U_q) = grad(q div u) - Re^-1 grad(div G)
///                 + Re^-1 [grad(P)/q - P grad(q)/q^2],  P = G.grad(q),
/// with G the viscous combination of the pseudo-velocity definition.
pub fn d_q_vector(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    uq: &MaskedVelocity,
    conv: PvConvention,
) -> Result<VectorField> {
    let omega = vorticity(state, params, conv);
    let grad_theta = ops::gradient(&state.theta);
    let q = ops::dealias(&ops::dot_raw(&omega, &grad_theta));
    let grad_q = ops::gradient(&q);
    let lap_theta = ops::laplacian(&state.theta);
    let g_visc = ops::cross(&ops::laplacian_vec(&state.u), &grad_theta)?
        .add(&ops::scale_vec(&lap_theta, &omega).scaled(1.0 / params.prandtl));
    let inv_re = params.inv_re();

    let grad_q_divu = ops::gradient(&ops::mul(&q, &ops::divergence(&state.u)));
    let grad_div_g = ops::gradient(&ops::divergence(&g_visc));
    let p_scalar = ops::dot(&g_visc, &grad_q)?;
    let grad_p = ops::gradient(&p_scalar);

    let qv = q.values();
    let keep = uq.mask.keep();
    let component = |smooth_a: &ScalarField,
                     smooth_b: &ScalarField,
                     gp: &ScalarField,
                     p: &ScalarField,
                     gq: &ScalarField|
     -> Vec<f64> {
        // grad(q div U_q) component = smooth_a - Re^-1 smooth_b
        //   + Re^-1 (gp/q - p*gq/q^2), pointwise.
        let (sa, sb, gpv, pv, gqv) = (
            smooth_a.values(),
            smooth_b.values(),
            gp.values(),
            p.values(),
            gq.values(),
        );
        (0..qv.len())
            .map(|i| {
                if keep[i] {
                    sa[i] - inv_re * sb[i] + inv_re * (gpv[i] / qv[i] - pv[i] * gqv[i] / (qv[i] * qv[i]))
                } else {
                    0.0
                }
            })
            .collect()
    };
    let grid = state.grid();
    let w = VectorField {
        x: ScalarField::from_values(
            grid,
            component(&grad_q_divu.x, &grad_div_g.x, &grad_p.x, &p_scalar, &grad_q.x),
        ),
        y: ScalarField::from_values(
            grid,
            component(&grad_q_divu.y, &grad_div_g.y, &grad_p.y, &p_scalar, &grad_q.y),
        ),
        z: ScalarField::from_values(
            grid,
            component(&grad_q_divu.z, &grad_div_g.z, &grad_p.z, &p_scalar, &grad_q.z),
        ),
    };
    // D_q = -grad(q div U_q) x grad(theta), pointwise (never re-transformed).
    Ok(ops::cross_raw(&w.scaled(-1.0), &grad_theta))
}

/// Residuals of the stretching-and-folding theorem for the viscous
/// stratified system: the PV continuity law, theta advection by the
/// pseudo-velocity, and the B-field transport law with driver D_q.
pub fn theorem1_residuals(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    epsilon_rel: f64,
    conv: PvConvention,
) -> Result<ResidualReport> {
    theorem1_residuals_scaled(state, params, epsilon_rel, conv, 1.0)
}

/// Theorem residuals with the D_q term scaled by `dq_scale`; a scale of 1
/// is the theorem. Other scales serve as negative controls: the B-law
/// residual must then jump to the size of D_q itself.
pub fn theorem1_residuals_scaled(
    state: &IncompressibleState,
    params: &BoussinesqParams,
    epsilon_rel: f64,
    conv: PvConvention,
    dq_scale: f64,
) -> Result<ResidualReport> {
    let tendency = crate::flow::boussinesq_tendency(state, params)?;
    let ctx = pv_context(state, params, conv, tendency)?;
    let u = &state.u;
    let inv_re = params.inv_re();
    let inv_sigma_re = params.inv_sigma_re();
    let grid = state.grid();

    let uq = pseudo_velocity_incompressible(state, params, epsilon_rel, conv)?;
    let region = uq.mask.eroded(MASK_EROSION_CELLS);

    let mut report = ResidualReport::new(grid.n());
    report.note("epsilon_rel", epsilon_rel);
    report.note("masked_fraction", uq.masked_fraction);
    report.note("convention", format!("{conv:?}"));

    // (ens13a) PV continuity: d(q)/dt + div(q U_q) with the flux assembled
    // without division, q U_q = q u - Re^-1 G.
    let flux = ops::scale_vec(&ctx.q, u).sub(&ctx.visc.scaled(inv_re));
    let div_flux = ops::divergence(&flux);
    let r_a = ctx.dq_dt.add(&div_flux);
    report.insert("ens13a", scalar_entry(&region, &r_a, &[&ctx.dq_dt, &div_flux]));

    // (ens13b) theta advection by the pseudo-velocity, pointwise algebra.
    let adv = ops::dot_raw(&uq.field, &ctx.grad_theta);
    let r_b = ctx.tendency.dtheta_dt.add(&adv);
    report.insert(
        "ens13b",
        scalar_entry(&region, &r_b, &[&ctx.tendency.dtheta_dt, &adv]),
    );

    // (ens14) B-law residual, reduced form. Expanding U_q x B and D_q by
    // exact calculus, the pointwise-quotient pieces cancel, leaving
    //   dB/dt - curl(u x B) + (sigma Re)^-1 curl(Lap(theta) grad(q))
    //   + grad(q div u) x grad(theta) - Re^-1 grad(div G) x grad(theta).
    let b = ops::dealias_vec(&ops::cross_raw(&ctx.grad_q, &ctx.grad_theta));
    let db_dt = ops::cross(&ops::gradient(&ctx.dq_dt), &ctx.grad_theta)?
        .add(&ops::cross(&ctx.grad_q, &ops::gradient(&ctx.tendency.dtheta_dt))?);
    let curl_ub = ops::curl(&ops::cross(u, &b)?);
    let lap_theta = ops::laplacian(&state.theta);
    let curl_diff = ops::curl(&ops::scale_vec(&lap_theta, &ctx.grad_q));
    let grad_qdivu = ops::gradient(&ops::mul(&ctx.q, &ops::divergence(u)));
    let grad_div_g = ops::gradient(&ops::divergence(&ctx.visc));
    let mut r_c = db_dt
        .sub(&curl_ub)
        .add(&curl_diff.scaled(inv_sigma_re))
        .add(&ops::cross(&grad_qdivu, &ctx.grad_theta)?)
        .sub(&ops::cross(&grad_div_g, &ctx.grad_theta)?.scaled(inv_re));
    if dq_scale != 1.0 {
        let dq = d_q_vector(state, params, &uq, conv)?;
        r_c = r_c.add(&dq.scaled(1.0 - dq_scale));
    }
    report.insert("ens14", vector_entry(&region, &r_c, &[&db_dt, &curl_ub]));
    Ok(report)
}

/// Transport residuals of B = grad(q) x grad(theta) for two passive
/// scalars riding on a solenoidal ideal flow: the conservative form
/// dB/dt - curl(u x B) and the material stretching form
/// DB/Dt - B.grad(u), plus their mutual agreement.
pub fn b_ideal_residual(
    u: &VectorField,
    q: &ScalarField,
    theta: &ScalarField,
) -> Result<ResidualReport> {
    u.grid().check_same(q.grid())?;
    u.grid().check_same(theta.grid())?;
    let grid = u.grid();
    let grad_q = ops::gradient(q);
    let grad_theta = ops::gradient(theta);
    let b = ops::dealias_vec(&ops::cross_raw(&grad_q, &grad_theta));

    // Ideal advection tendencies for the passive scalars.
    let dq_dt = ops::advect_scalar(u, q).scaled(-1.0);
    let dtheta_dt = ops::advect_scalar(u, theta).scaled(-1.0);
    let db_dt = ops::cross(&ops::gradient(&dq_dt), &grad_theta)?
        .add(&ops::cross(&grad_q, &ops::gradient(&dtheta_dt))?);

    let curl_ub = ops::curl(&ops::cross(u, &b)?);
    let transport = db_dt.sub(&curl_ub);

    let adv_b = ops::advect_vector(u, &b);
    let stretch = ops::advect_vector(&b, u);
    let material = db_dt.add(&adv_b).sub(&stretch);

    let region = Region::full(grid);
    let mut report = ResidualReport::new(grid.n());
    report.insert("B1-transport", vector_entry(&region, &transport, &[&db_dt, &curl_ub]));
    report.insert("B1-stretch", vector_entry(&region, &material, &[&db_dt, &stretch]));
    let forms = transport.sub(&material);
    report.insert("B1-forms", vector_entry(&region, &forms, &[&curl_ub, &stretch]));
    Ok(report)
}
