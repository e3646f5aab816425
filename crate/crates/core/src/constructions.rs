//! Explicit admissible deformations and the scaling bound they realize.
//!
//! Two closed-form competitors are built from a pair of smooth profiles:
//! a mollified ramp `eta` that turns the slope on across the layer
//! [1/5, 2/5] while keeping its running integral exact beyond it, and an
//! inversion profile `w0` that carries the slope from -1 to +1 with
//! `w0(±1) = 0` and the strain-neutrality condition `∫ w0'² = 2`.
//!
//! The `invert` deformation flips the cone over a circle of radius δ/2
//! inside a transition annulus of width ~√(hδ); the `flatten` deformation
//! keeps the cone and absorbs the indentation in a boundary layer of width
//! √h at the rim. Both are sampled onto grids for the discrete energy; the
//! same closed forms feed an adaptive-quadrature reference evaluator so the
//! discretization error is measured rather than assumed.

use std::sync::{Arc, OnceLock};

use crate::bump::{
    smooth_step, smooth_step_d, smooth_step_dd, unit_bump, unit_bump_d, unit_bump_dd, Kernel,
};
use crate::cheb::Cheb;
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::field::{Params, RadialField};
use crate::grid::Grid;
use crate::quadrature::integrate_adaptive;

/// Half-width of the kernel that mollifies |x| - 1 in `profile_w0`.
const W0_KERNEL_RADIUS: f64 = 0.25;
/// Half-width of the downward bump correction in `profile_w0`.
const W0_BUMP_RADIUS: f64 = 0.75;

fn eta_amplitude() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let mass = integrate_adaptive(&unit_bump, &[-1.0, 0.0, 1.0], 1e-14);
        // mean condition: ∫_0^{2/5} eta = 2/5, with the step contributing 1/10
        3.0 / mass
    })
}

fn w0_bump(x: f64) -> f64 {
    unit_bump(x / W0_BUMP_RADIUS)
}

fn w0_bump_d(x: f64) -> f64 {
    unit_bump_d(x / W0_BUMP_RADIUS) / W0_BUMP_RADIUS
}

fn w0_bump_dd(x: f64) -> f64 {
    unit_bump_dd(x / W0_BUMP_RADIUS) / (W0_BUMP_RADIUS * W0_BUMP_RADIUS)
}

/// Mollified |x| - 1 and its derivatives: exact |x| - 1 outside the kernel.
fn mabs_shifted(x: f64) -> f64 {
    if x.abs() >= W0_KERNEL_RADIUS {
        x.abs() - 1.0
    } else {
        W0_KERNEL_RADIUS * Kernel::get().mabs(x / W0_KERNEL_RADIUS) - 1.0
    }
}

fn mabs_shifted_d(x: f64) -> f64 {
    if x.abs() >= W0_KERNEL_RADIUS {
        x.signum()
    } else {
        Kernel::get().mabs_d(x / W0_KERNEL_RADIUS)
    }
}

fn mabs_shifted_dd(x: f64) -> f64 {
    if x.abs() >= W0_KERNEL_RADIUS {
        0.0
    } else {
        Kernel::get().mabs_dd(x / W0_KERNEL_RADIUS) / W0_KERNEL_RADIUS
    }
}

/// Correction amplitude: the unique mu >= 0 with ∫ (m' - mu b')² = 2.
fn w0_amplitude() -> f64 {
    static MU: OnceLock<f64> = OnceLock::new();
    *MU.get_or_init(|| {
        let pts = [-1.0, -W0_BUMP_RADIUS, -W0_KERNEL_RADIUS, 0.0, W0_KERNEL_RADIUS, W0_BUMP_RADIUS, 1.0];
        let excess = |mu: f64| {
            let integrand = |x: f64| {
                let d = mabs_shifted_d(x) - mu * w0_bump_d(x);
                d * d
            };
            integrate_adaptive(&integrand, &pts, 1e-13) - 2.0
        };
        // mollification strictly lowers ∫ m'² below 2, and the bump term is
        // increasing in mu, so the root is unique and bracketable
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut tries = 0;
        while excess(hi) <= 0.0 {
            hi *= 2.0;
            tries += 1;
            assert!(tries < 60, "correction amplitude failed to bracket");
        }
        assert!(excess(lo) < 0.0, "mollification did not reduce the slope energy");
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

fn w0_value(x: f64) -> f64 {
    mabs_shifted(x) - w0_amplitude() * w0_bump(x)
}

fn w0_d1(x: f64) -> f64 {
    mabs_shifted_d(x) - w0_amplitude() * w0_bump_d(x)
}

fn w0_d2(x: f64) -> f64 {
    mabs_shifted_dd(x) - w0_amplitude() * w0_bump_dd(x)
}

/// Piecewise-Chebyshev antiderivative of 1 - w0'(x)² from -1, split at the
/// gluing points so each piece is fitted on a smooth stretch.
struct StrainIntegral {
    pieces: Vec<(f64, f64, Cheb)>,
    base: Vec<f64>,
}

impl StrainIntegral {
    fn build() -> StrainIntegral {
        let cuts = [
            -1.0,
            -W0_BUMP_RADIUS,
            -W0_KERNEL_RADIUS,
            W0_KERNEL_RADIUS,
            W0_BUMP_RADIUS,
            1.0,
        ];
        let q = |x: f64| {
            let d = w0_d1(x);
            1.0 - d * d
        };
        let mut pieces = Vec::new();
        let mut base = Vec::new();
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let anti = Cheb::fit(w[0], w[1], 320, q).antiderivative();
            base.push(acc);
            acc += anti.eval(w[1]);
            pieces.push((w[0], w[1], anti));
        }
        StrainIntegral { pieces, base }
    }

    fn get() -> &'static StrainIntegral {
        static G: OnceLock<StrainIntegral> = OnceLock::new();
        G.get_or_init(StrainIntegral::build)
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= -1.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return *self.base.last().unwrap()
                + self.pieces.last().unwrap().2.eval(1.0);
        }
        let i = self
            .pieces
            .iter()
            .position(|(a, b, _)| x >= *a && x <= *b)
            .unwrap();
        self.base[i] + self.pieces[i].2.eval(x)
    }
}

/// Running integral of 1 - w0'² from -1; vanishes at +1 by the integral
/// condition on w0.
pub(crate) fn w0_strain_antiderivative(x: f64) -> f64 {
    StrainIntegral::get().eval(x)
}

#[derive(Clone, Copy, Debug)]
enum ProfileKind {
    Eta,
    W0,
}

/// Closed-form C^∞ profile with evaluators for value and two derivatives.
#[derive(Clone, Debug)]
pub struct SmoothProfile {
    kind: ProfileKind,
    interval: (f64, f64),
    /// Width of the mollification layer (eta) or kernel radius (w0).
    pub mollification_width: f64,
    /// Amplitude of the bump correction solved from the integral condition.
    pub correction_amplitude: f64,
}

impl SmoothProfile {
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Eta => {
                smooth_step(5.0 * x - 1.0) + self.correction_amplitude * unit_bump(10.0 * x - 3.0)
            }
            ProfileKind::W0 => w0_value(x),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Eta => {
                5.0 * smooth_step_d(5.0 * x - 1.0)
                    + 10.0 * self.correction_amplitude * unit_bump_d(10.0 * x - 3.0)
            }
            ProfileKind::W0 => w0_d1(x),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Eta => {
                25.0 * smooth_step_dd(5.0 * x - 1.0)
                    + 100.0 * self.correction_amplitude * unit_bump_dd(10.0 * x - 3.0)
            }
            ProfileKind::W0 => w0_d2(x),
        }
    }
}

/// The slope ramp: 0 on [0, 1/5], 1 on [2/5, ∞), mean 1 over [0, 2/5].
///
/// The overshoot forced by the mean condition makes the running integral of
/// eta equal to x exactly for every x ≥ 2/5.
pub fn mollifier_eta() -> SmoothProfile {
    SmoothProfile {
        kind: ProfileKind::Eta,
        interval: (0.0, f64::INFINITY),
        mollification_width: 0.2,
        correction_amplitude: eta_amplitude(),
    }
}

/// The inversion profile on [-1, 1]: w0(±1) = 0, w0'(±1) = ±1, ∫ w0'² = 2.
///
/// Built by mollifying |x| - 1 with the plateau kernel and subtracting a
/// smooth bump whose amplitude restores the slope-energy condition.
pub fn profile_w0() -> SmoothProfile {
    SmoothProfile {
        kind: ProfileKind::W0,
        interval: (-1.0, 1.0),
        mollification_width: W0_KERNEL_RADIUS,
        correction_amplitude: w0_amplitude(),
    }
}

/// Which closed-form deformation to build or integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstructionKind {
    Invert,
    Flatten,
}

/// Closed-form slope, slope derivative, displacement, and displacement
/// derivative of a construction, as functions of r.
struct ClosedForm {
    wp: Box<dyn Fn(f64) -> f64 + Sync>,
    dwp: Box<dyn Fn(f64) -> f64 + Sync>,
    u: Box<dyn Fn(f64) -> f64 + Sync>,
    du: Box<dyn Fn(f64) -> f64 + Sync>,
    breakpoints: Vec<f64>,
}

fn closed_form(kind: ConstructionKind, params: &Params) -> Result<ClosedForm> {
    let h = params.h;
    let delta = params.delta;
    match kind {
        ConstructionKind::Invert => {
            if delta < h {
                return Err(Error::InvalidParameter(format!(
                    "inversion needs h <= delta, got h = {h}, delta = {delta}"
                )));
            }
            let eta = mollifier_eta();
            let w0 = profile_w0();
            let r_mid = 0.5 * delta;
            let l = 0.1 * (h * delta).sqrt();
            let (lo, hi) = (r_mid - l, r_mid + l);
            let wp = move |r: f64| {
                if r < lo {
                    -eta.value(r / h)
                } else if r <= hi {
                    w0.d1((r - r_mid) / l)
                } else {
                    1.0
                }
            };
            let eta2 = mollifier_eta();
            let w02 = profile_w0();
            let dwp = move |r: f64| {
                if r < lo {
                    -eta2.d1(r / h) / h
                } else if r <= hi {
                    w02.d2((r - r_mid) / l) / l
                } else {
                    0.0
                }
            };
            let u = move |r: f64| {
                if r <= lo {
                    0.0
                } else {
                    l * w0_strain_antiderivative(((r - r_mid) / l).min(1.0))
                }
            };
            let du = move |r: f64| {
                if r <= lo || r >= hi {
                    0.0
                } else {
                    let d = w0_d1((r - r_mid) / l);
                    1.0 - d * d
                }
            };
            // at delta = h the layer edge 0.4h and the transition start lo
            // coincide up to rounding; sorting keeps the chain monotone
            let mut breakpoints = vec![
                0.0,
                0.2 * h,
                0.4 * h,
                lo,
                r_mid - W0_BUMP_RADIUS * l,
                r_mid - W0_KERNEL_RADIUS * l,
                r_mid,
                r_mid + W0_KERNEL_RADIUS * l,
                r_mid + W0_BUMP_RADIUS * l,
                hi,
                1.0,
            ];
            breakpoints.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(ClosedForm {
                wp: Box::new(wp),
                dwp: Box::new(dwp),
                u: Box::new(u),
                du: Box::new(du),
                breakpoints,
            })
        }
        ConstructionKind::Flatten => {
            let eta = mollifier_eta();
            let eta2 = mollifier_eta();
            let cap = 1.0 - h.sqrt();
            let slope = 2.0 * delta / h;
            let wp = move |r: f64| {
                if r < cap {
                    eta.value(r / h)
                } else {
                    1.0 - slope * (r - cap)
                }
            };
            let dwp = move |r: f64| {
                if r < cap {
                    eta2.d1(r / h) / h
                } else {
                    -slope
                }
            };
            let u = move |r: f64| {
                if r <= cap {
                    0.0
                } else {
                    let s = r - cap;
                    slope * s * s - slope * slope * s * s * s / 3.0
                }
            };
            let du = move |r: f64| {
                if r <= cap {
                    0.0
                } else {
                    let t = 1.0 - slope * (r - cap);
                    1.0 - t * t
                }
            };
            let breakpoints = vec![0.0, 0.2 * h, 0.4 * h, cap, 1.0];
            Ok(ClosedForm {
                wp: Box::new(wp),
                dwp: Box::new(dwp),
                u: Box::new(u),
                du: Box::new(du),
                breakpoints,
            })
        }
    }
}

fn sample(form: &ClosedForm, grid: Arc<Grid>, delta: f64) -> RadialField {
    let mut field = RadialField::zeros(grid.clone());
    for (i, &r) in grid.nodes().iter().enumerate() {
        field.u[i] = (form.u)(r);
        field.wp[i] = (form.wp)(r);
    }
    field.project_onto_bc(delta);
    field
}

/// Inverts the cone over the circle r = δ/2: slope -eta(r/h) inside, the
/// w0 transition across an annulus of half-width √(hδ)/10, slope 1 outside,
/// with u chosen to cancel the strain in the transition.
pub fn construct_invert(params: &Params, grid: Arc<Grid>) -> Result<RadialField> {
    let form = closed_form(ConstructionKind::Invert, params)?;
    Ok(sample(&form, grid, params.delta))
}

/// Keeps the cone and tapers the slope across [1 - √h, 1], with u chosen to
/// cancel the taper strain; the indentation is paid as hoop stretching.
pub fn construct_flatten(params: &Params, grid: Arc<Grid>) -> Result<RadialField> {
    let form = closed_form(ConstructionKind::Flatten, params)?;
    Ok(sample(&form, grid, params.delta))
}

/// The scaling law h² log(1/h) + min(δ² h^{1/2}, δ^{1/2} h^{3/2}).
pub fn predicted_bound(params: &Params) -> f64 {
    let h = params.h;
    let delta = params.delta;
    let log_term = h * h * (1.0 / h).ln();
    let flatten = delta * delta * h.sqrt();
    let invert = delta.sqrt() * h * h.sqrt();
    log_term + flatten.min(invert)
}

/// Adaptive-quadrature energy of the closed-form construction, independent
/// of any grid. Serves as the reference value for discretization error.
pub fn reference_energy(kind: ConstructionKind, params: &Params) -> Result<EnergyBreakdown> {
    let form = closed_form(kind, params)?;
    let tol = 1e-9;
    let pts = &form.breakpoints;
    let hoop_stretch = integrate_adaptive(
        &|r: f64| {
            let u = (form.u)(r);
            if u == 0.0 {
                0.0
            } else {
                u * u / r
            }
        },
        pts,
        tol,
    );
    let radial_stretch = integrate_adaptive(
        &|r: f64| {
            let p = (form.wp)(r);
            let strain = (form.du)(r) + p * p - 1.0;
            r * strain * strain
        },
        pts,
        tol,
    );
    let h2 = params.h * params.h;
    let radial_bend = h2
        * integrate_adaptive(
            &|r: f64| {
                let d = (form.dwp)(r);
                r * d * d
            },
            pts,
            tol,
        );
    let hoop_bend = h2
        * integrate_adaptive(
            &|r: f64| {
                let p = (form.wp)(r);
                if p == 0.0 {
                    0.0
                } else {
                    p * p / r
                }
            },
            pts,
            tol,
        );
    Ok(EnergyBreakdown::finish(
        hoop_stretch,
        radial_stretch,
        radial_bend,
        hoop_bend,
    ))
}
