//! Centralized numerical thresholds.
//!
//! Every tolerance used by the library and its verification suites lives
//! here with a one-line justification, so no check carries an ad-hoc magic
//! number.

/// Exact spectral identities (div of curl, curl of grad, Parseval) on
/// band-limited fields: round-off accumulation over a few transforms.
pub const SPECTRAL_EXACT: f64 = 1e-12;

/// Pointwise algebraic identities (vortex stretching, orthogonality of
/// perpendicular gradients): round-off only, small head-room.
pub const POINTWISE_EXACT: f64 = 1e-10;

/// Solenoidality precondition for incompressible tendencies, relative to
/// the velocity-gradient norm.
pub const SOLENOIDAL_PRECONDITION: f64 = 1e-8;

/// Solenoidality of a produced incompressible tendency (Leray is exact in
/// spectral space; this allows transform round-off).
pub const TENDENCY_SOLENOIDAL: f64 = 1e-10;

/// Ideal-flow instantaneous identity residuals on smooth manufactured
/// states (material PV conservation, B-field transport): resolved-band
/// exact, dominated by round-off amplified through a few products.
pub const IDEAL_IDENTITY: f64 = 1e-8;

/// Viscous stratified identity residuals (continuity form of the PV
/// balance, theta advection by the pseudo-velocity, B-field driving):
/// covers aliasing of high-order products at stock resolution.
pub const VISCOUS_IDENTITY: f64 = 1e-6;

/// Compressible balance residuals (quasi-conservation, conserved family,
/// impermeability, vorticity law): same footing as VISCOUS_IDENTITY.
pub const COMPRESSIBLE_IDENTITY: f64 = 1e-6;

/// Compressible B-equation residual: one more derivative order than the
/// other balances, so one decade looser.
pub const COMPRESSIBLE_B_IDENTITY: f64 = 1e-5;

/// Gauge-invariance deltas and projection-kind consistency: exact algebra,
/// round-off only.
pub const GAUGE_INVARIANCE: f64 = 1e-12;

/// Default relative threshold below which |q| marks a cell as masked for
/// pseudo-velocity quotients.
pub const DEFAULT_EPSILON_REL: f64 = 1e-6;

/// Cells of erosion applied to the unmasked region before norm-taking.
pub const MASK_EROSION_CELLS: usize = 2;

/// Relative drift allowed for quadratic invariants of the ideal RK4 run
/// (energy, PV integral) over the stock 200-step window.
pub const CONSERVATION_DRIFT: f64 = 1e-8;

/// Relative drift of the theta integral under evolution (mean is
/// preserved exactly by the spectral divergence forms).
pub const THETA_DRIFT: f64 = 1e-10;

/// Surface-flux balance: relative mismatch between d/dt of the B-flux and
/// the D_q flux over the stock viscous window (quadrature plus centered
/// time differencing).
pub const SURFACE_FLUX_MISMATCH: f64 = 0.05;

/// Ideal-limit B-flux conservation through an advected surface.
pub const IDEAL_FLUX_DRIFT: f64 = 1e-4;

/// Floor used when forming relative quantities from possibly-zero scales.
pub const SCALE_FLOOR: f64 = 1e-300;
