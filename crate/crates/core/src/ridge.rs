//! Fold-aligned ridge fields on a planar patch.
//!
//! A sharp fold is a map that is affine on both sides of a straight segment
//! and continuous across it. Such a map concentrates infinite bending energy
//! on the fold line; this module replaces the sharp crease inside a thin
//! lens-shaped strip by a smooth transition whose elastic energy scales like
//! `h^{5/3}` in the thickness `h`. The ingredients are a pair of transverse
//! profiles obtained by mollifying the crease, a strip width profile that
//! collapses like `x^{2/3}` near the fold endpoints, and a change of frame
//! that carries the canonical construction back to the patch position.
//!
//! `fold_coeffs` recovers the eight canonical coefficients of a sharp fold
//! from point samples of the map, `ridge_fields` assembles the smoothed
//! fields, and `patch_energy` integrates their membrane and bending densities
//! over the strip.

use crate::bump::Kernel;
use crate::cheb::Cheb;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use serde::Serialize;

/// Half-width of the mollification kernel in the transverse variable.
pub const PROFILE_KERNEL_HALF_WIDTH: f64 = 0.125;

/// A planar elastic map: in-plane displacement `v` and deflection `w`.
pub trait PlanarMap {
    fn v(&self, x: [f64; 2]) -> [f64; 2];
    fn w(&self, x: [f64; 2]) -> f64;
}

// ---------------------------------------------------------------------------
// transverse profiles

/// Smoothed crease profiles in the scaled transverse variable `t`.
///
/// `gamma3` interpolates between the two deflection slopes `a7` (above) and
/// `a8` (below); `gamma2` is the in-plane profile that keeps the transverse
/// membrane strain identically zero. Both equal their sharp counterparts for
/// `|t| >= 1/8` and carry a kernel correction of amplitude `lambda` chosen so
/// the slope energy of the smoothed crease matches the sharp one exactly.
#[derive(Debug, Clone)]
pub struct FoldProfile {
    pub a7: f64,
    pub a8: f64,
    pub lambda: f64,
    half_width: f64,
    mean: f64,
    jump: f64,
    // antiderivative of gamma3'^2 on [-half_width, half_width], zero at the left end
    slope_sq_primitive: Cheb,
    slope_sq_mid: f64,
}

/// Builds the transverse profiles for deflection slopes `a7`, `a8`.
pub fn gamma_profiles(a7: f64, a8: f64) -> Result<FoldProfile> {
    if !a7.is_finite() || !a8.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "fold slopes must be finite, got a7 = {a7}, a8 = {a8}"
        )));
    }
    let w = PROFILE_KERNEL_HALF_WIDTH;
    let mean = 0.5 * (a7 + a8);
    let jump = 0.5 * (a7 - a8);
    let k = Kernel::get();

    // The kernel amplitude solves a quadratic fixing the slope-energy budget
    // int gamma3'^2 = a7^2 + a8^2; the discriminant is positive whenever the
    // fold is genuine, and the root closer to zero is taken.
    let lambda = if jump == 0.0 {
        0.0
    } else {
        let qa = k.int_dphi_sq;
        let qb = 2.0 * jump * w * w * k.int_mabs_d_phi_d;
        let qc = jump * jump * w.powi(4) * (k.int_mabs_d_sq - 2.0);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::InvalidParameter(
                "slope-energy budget admits no real kernel amplitude".into(),
            ));
        }
        let big_half = -0.5 * (qb + qb.signum() * disc.sqrt());
        qc / big_half
    };

    let g3d = |t: f64| mean + jump * k.mabs_d(t / w) + lambda / (w * w) * k.dphi(t / w);
    let slope_sq_primitive = Cheb::fit(-w, w, 640, |t| {
        let s = g3d(t);
        s * s
    })
    .antiderivative();
    let slope_sq_mid = slope_sq_primitive.eval(w);

    Ok(FoldProfile {
        a7,
        a8,
        lambda,
        half_width: w,
        mean,
        jump,
        slope_sq_primitive,
        slope_sq_mid,
    })
}

impl FoldProfile {
    /// Smoothed deflection slope profile; equals `a7 t` above and `a8 t`
    /// below the kernel window.
    pub fn gamma3(&self, t: f64) -> f64 {
        let k = Kernel::get();
        let w = self.half_width;
        self.mean * t + self.jump * w * k.mabs(t / w) + self.lambda / w * k.phi(t / w)
    }

    pub fn gamma3_d(&self, t: f64) -> f64 {
        let k = Kernel::get();
        let w = self.half_width;
        self.mean + self.jump * k.mabs_d(t / w) + self.lambda / (w * w) * k.dphi(t / w)
    }

    pub fn gamma3_dd(&self, t: f64) -> f64 {
        let k = Kernel::get();
        let w = self.half_width;
        self.jump / w * k.mabs_dd(t / w) + self.lambda / (w * w * w) * k.ddphi(t / w)
    }

    // slope energy accumulated from t = -1; exact linear tails keep the
    // representation C^1 through the kernel window edges
    fn slope_energy_to(&self, t: f64) -> f64 {
        let w = self.half_width;
        let a7s = self.a7 * self.a7;
        let a8s = self.a8 * self.a8;
        if t <= -w {
            a8s * (t + 1.0)
        } else if t < w {
            a8s * (1.0 - w) + self.slope_sq_primitive.eval(t)
        } else {
            a8s * (1.0 - w) + self.slope_sq_mid + a7s * (t - w)
        }
    }

    /// In-plane transverse profile; `-a8^2 t / 2` below the window and
    /// `-a7^2 t / 2` above it.
    pub fn gamma2(&self, t: f64) -> f64 {
        0.5 * self.a8 * self.a8 - 0.5 * self.slope_energy_to(t)
    }

    /// `gamma2' = -gamma3'^2 / 2`, the zero-transverse-strain relation.
    pub fn gamma2_d(&self, t: f64) -> f64 {
        let s = self.gamma3_d(t);
        -0.5 * s * s
    }

    /// Affine defects `gamma_i - t gamma_i'`; both vanish outside the window.
    pub fn eta2(&self, t: f64) -> f64 {
        self.gamma2(t) - t * self.gamma2_d(t)
    }

    pub fn eta3(&self, t: f64) -> f64 {
        self.gamma3(t) - t * self.gamma3_d(t)
    }

    /// Longitudinal strain potential `t gamma2 + gamma3^2 / 2`; vanishes
    /// outside the window and at both endpoints.
    pub fn omega(&self, t: f64) -> f64 {
        let g3 = self.gamma3(t);
        t * self.gamma2(t) + 0.5 * g3 * g3
    }

    pub fn omega_d(&self, t: f64) -> f64 {
        self.gamma2(t) + t * self.gamma2_d(t) + self.gamma3(t) * self.gamma3_d(t)
    }

    /// `t omega' - omega`, the coefficient of `f'^2` in the membrane strain.
    pub fn xi(&self, t: f64) -> f64 {
        let g3 = self.gamma3(t);
        t * t * self.gamma2_d(t) + t * g3 * self.gamma3_d(t) - 0.5 * g3 * g3
    }
}

// ---------------------------------------------------------------------------
// strip width

/// Lens-shaped strip half-width `f` with `x^{2/3}` collapse at both ends.
///
/// `f` is the harmonic pairing of one-sided profiles
/// `f0(x) = tau (h^{1/3}(h+x)^{2/3} - h)` grown from either fold endpoint,
/// so `f <= tau min(x, l - x)` keeps the strip inside the fold rhombus.
#[derive(Debug, Clone, Copy)]
pub struct WidthProfile {
    pub tau: f64,
    pub h: f64,
    pub l: f64,
}

/// Builds the strip width profile; requires `0 < h < l / 8` and
/// `0 < tau <= 1`.
pub fn width_profile(tau: f64, h: f64, l: f64) -> Result<WidthProfile> {
    if !tau.is_finite() || !h.is_finite() || !l.is_finite() {
        return Err(Error::InvalidParameter(
            "width profile parameters must be finite".into(),
        ));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "width slope tau must lie in (0, 1], got {tau}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "thickness must be positive, got {h}"
        )));
    }
    if h >= l / 8.0 {
        return Err(Error::InvalidParameter(format!(
            "thickness {h} too large for fold length {l}; need h < l / 8"
        )));
    }
    Ok(WidthProfile { tau, h, l })
}

impl WidthProfile {
    // one-sided profile tau (h^{1/3}(h+x)^{2/3} - h) and its first two
    // derivatives; the expm1 form is exact at x = 0 and accurate for x << h
    fn one_sided(&self, x: f64) -> (f64, f64, f64) {
        let h = self.h;
        let e = (2.0 / 3.0 * (x / h).ln_1p()).exp();
        let f0 = self.tau * h * (2.0 / 3.0 * (x / h).ln_1p()).exp_m1();
        let f1 = 2.0 / 3.0 * self.tau * h * e / (h + x);
        let f2 = -2.0 / 9.0 * self.tau * h * e / ((h + x) * (h + x));
        (f0, f1, f2)
    }

    /// Strip half-width at longitudinal position `x` in `[0, l]`.
    pub fn f(&self, x: f64) -> f64 {
        let (u, _, _) = self.one_sided(x);
        let (v, _, _) = self.one_sided(self.l - x);
        u * v / (u + v)
    }

    pub fn f_d(&self, x: f64) -> f64 {
        let (u, ud, _) = self.one_sided(x);
        let (v, vd_r, _) = self.one_sided(self.l - x);
        let vd = -vd_r;
        (ud * v * v + vd * u * u) / ((u + v) * (u + v))
    }

    pub fn f_dd(&self, x: f64) -> f64 {
        let (u, ud, udd) = self.one_sided(x);
        let (v, vd_r, vdd_r) = self.one_sided(self.l - x);
        let (vd, vdd) = (-vd_r, vdd_r);
        let s = u + v;
        let n = ud * v * v + vd * u * u;
        let nd = udd * v * v + vdd * u * u + 2.0 * ud * vd * s;
        (nd * s - 2.0 * n * (ud + vd)) / (s * s * s)
    }

    // width, slope, and curvature in one evaluation
    fn bundle(&self, x: f64) -> XSample {
        let (u, ud, udd) = self.one_sided(x);
        let (v, vd_r, vdd_r) = self.one_sided(self.l - x);
        let (vd, vdd) = (-vd_r, vdd_r);
        let s = u + v;
        let n = ud * v * v + vd * u * u;
        let nd = udd * v * v + vdd * u * u + 2.0 * ud * vd * s;
        XSample {
            x,
            f: u * v / s,
            fd: n / (s * s),
            fdd: (nd * s - 2.0 * n * (ud + vd)) / (s * s * s),
        }
    }
}

// ---------------------------------------------------------------------------
// frames and patches

const ROT_J: [[f64; 2]; 2] = [[0.0, -1.0], [1.0, 0.0]];

fn mat2_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat2_t(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn mat2_vec(a: [[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

pub(crate) fn perp(x: [f64; 2]) -> [f64; 2] {
    [-x[1], x[0]]
}

/// Rigid change of frame between patch position and the canonical fold.
///
/// Canonical coordinates place the fold on `[0, l] x {0}`; the stored gauge
/// (`lambda` rotation of `v`, value offsets at the fold start) makes the
/// canonical fields vanish at the origin with symmetric in-plane gradient
/// along the fold.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub origin: [f64; 2],
    pub rot: [[f64; 2]; 2],
    pub lambda: f64,
    pub v_origin: [f64; 2],
    pub w_origin: f64,
}

impl Frame {
    pub fn identity() -> Frame {
        Frame {
            origin: [0.0, 0.0],
            rot: [[1.0, 0.0], [0.0, 1.0]],
            lambda: 0.0,
            v_origin: [0.0, 0.0],
            w_origin: 0.0,
        }
    }

    pub fn to_canonical(&self, x: [f64; 2]) -> [f64; 2] {
        mat2_vec(self.rot, [x[0] - self.origin[0], x[1] - self.origin[1]])
    }

    pub fn from_canonical(&self, p: [f64; 2]) -> [f64; 2] {
        let y = mat2_vec(mat2_t(self.rot), p);
        [y[0] + self.origin[0], y[1] + self.origin[1]]
    }

    /// Canonical deflection sample back to the patch frame.
    pub fn w_to_global(&self, w_c: f64) -> f64 {
        w_c + self.w_origin
    }

    /// Canonical in-plane sample at canonical point `p` back to the patch
    /// frame; undoes the `lambda` gauge rotation.
    pub fn v_to_global(&self, p: [f64; 2], v_c: [f64; 2]) -> [f64; 2] {
        let pp = perp(p);
        let y = mat2_vec(
            mat2_t(self.rot),
            [v_c[0] - self.lambda * pp[0], v_c[1] - self.lambda * pp[1]],
        );
        [y[0] + self.v_origin[0], y[1] + self.v_origin[1]]
    }

    pub fn dv_to_global(&self, dv_c: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut m = dv_c;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] -= self.lambda * ROT_J[i][j];
            }
        }
        mat2_mul(mat2_t(self.rot), mat2_mul(m, self.rot))
    }

    pub fn dw_to_global(&self, dw_c: [f64; 2]) -> [f64; 2] {
        mat2_vec(mat2_t(self.rot), dw_c)
    }

    pub fn d2w_to_global(&self, d2w_c: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        mat2_mul(mat2_t(self.rot), mat2_mul(d2w_c, self.rot))
    }
}

/// A sharp fold extracted from a quadrilateral patch of a planar map.
///
/// `coeffs = [a1..a8]` are the canonical fold coefficients: the map equals
/// `v = (a1 x1 + a2 x2, a3 x2)`, `w = a6 x1 + a7 x2` above the fold and the
/// `(a4, a5, a8)` variant below. `tau` is the largest rhombus slope that
/// keeps both off-fold vertices outside the open rhombus of the fold.
#[derive(Debug, Clone, Copy)]
pub struct RidgePatch {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub coeffs: [f64; 8],
    pub tau: f64,
    pub l: f64,
    pub frame: Frame,
}

impl RidgePatch {
    /// Largest compatibility defect among the five relations that make the
    /// two affine pieces an exact isometric fold to leading order.
    pub fn eq4_residual(&self) -> f64 {
        let [a1, a2, a3, a4, a5, a6, a7, a8] = self.coeffs;
        [
            2.0 * a1 + a6 * a6,
            a2 + a6 * a7,
            a4 + a6 * a8,
            2.0 * a3 + a7 * a7,
            2.0 * a5 + a8 * a8,
        ]
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

// affine data of one half-patch: value rows sampled into canonical frame
struct HalfAffine {
    dv: [[f64; 2]; 2],
    g2: f64,
}

// extracts the linear part of the canonical map on one side from the fold
// endpoints and the off-fold vertex; exact for affine data
fn half_affine(
    map: &dyn PlanarMap,
    frame: &Frame,
    l: f64,
    apex_c: [f64; 2],
    apex_g: [f64; 2],
    c_g: [f64; 2],
) -> HalfAffine {
    let va = frame.v_origin;
    let wa = frame.w_origin;
    let vc = map.v(c_g);
    let vb = map.v(apex_g);
    let rc = mat2_vec(frame.rot, [vc[0] - va[0], vc[1] - va[1]]);
    let rb = mat2_vec(frame.rot, [vb[0] - va[0], vb[1] - va[1]]);
    let col0 = [rc[0] / l, rc[1] / l];
    let col1 = [
        (rb[0] - col0[0] * apex_c[0]) / apex_c[1],
        (rb[1] - col0[1] * apex_c[0]) / apex_c[1],
    ];
    let g1 = (map.w(c_g) - wa) / l;
    let g2 = (map.w(apex_g) - wa - g1 * apex_c[0]) / apex_c[1];
    HalfAffine {
        dv: [[col0[0], col1[0]], [col0[1], col1[1]]],
        g2,
    }
}

/// Recovers the canonical fold coefficients of `map` on the quadrilateral
/// `[a, b, c, d]` whose diagonal `[a, c]` is the fold.
///
/// Fails when the fold is degenerate, when `b` and `d` do not lie strictly
/// on opposite sides, when the fold is not a crossing diagonal, or when the
/// sampled map is not affine on the two half-patches.
pub fn fold_coeffs(map: &dyn PlanarMap, quad: &[[f64; 2]; 4]) -> Result<RidgePatch> {
    let [a, mut b, c, mut d] = *quad;
    let l = ((c[0] - a[0]).powi(2) + (c[1] - a[1]).powi(2)).sqrt();
    if l <= 1e-12 {
        return Err(Error::InvalidParameter(
            "fold endpoints coincide; quadrilateral is degenerate".into(),
        ));
    }
    let u = [(c[0] - a[0]) / l, (c[1] - a[1]) / l];
    let rot = [[u[0], u[1]], [-u[1], u[0]]];

    let mut b_c = mat2_vec(rot, [b[0] - a[0], b[1] - a[1]]);
    let mut d_c = mat2_vec(rot, [d[0] - a[0], d[1] - a[1]]);
    if b_c[1] * d_c[1] >= 0.0 {
        return Err(Error::InvalidParameter(
            "off-fold vertices must lie strictly on opposite sides of the fold".into(),
        ));
    }
    if b_c[1] < 0.0 {
        std::mem::swap(&mut b, &mut d);
        std::mem::swap(&mut b_c, &mut d_c);
    }
    // the diagonals of a convex quadrilateral cross strictly inside
    let t_cross = b_c[1] / (b_c[1] - d_c[1]);
    let x_cross = b_c[0] + t_cross * (d_c[0] - b_c[0]);
    if !(x_cross > 0.0 && x_cross < l) {
        return Err(Error::InvalidParameter(
            "fold segment is not a crossing diagonal of the quadrilateral".into(),
        ));
    }

    let mut frame = Frame {
        origin: a,
        rot,
        lambda: 0.0,
        v_origin: map.v(a),
        w_origin: map.w(a),
    };

    let up = half_affine(map, &frame, l, b_c, b, c);
    let lo = half_affine(map, &frame, l, d_c, d, c);

    // tangential derivatives along the fold agree for a continuous map
    let lambda = -0.5 * (up.dv[1][0] + lo.dv[1][0]);
    let a1 = 0.5 * (up.dv[0][0] + lo.dv[0][0]);
    frame.lambda = lambda;
    let coeffs = [
        a1,
        up.dv[0][1] - lambda,
        up.dv[1][1],
        lo.dv[0][1] - lambda,
        lo.dv[1][1],
        (map.w(c) - frame.w_origin) / l,
        up.g2,
        lo.g2,
    ];

    let scale = coeffs
        .iter()
        .fold(1.0_f64.max(l), |m, v| m.max(v.abs()))
        .max(lambda.abs());
    let tol = 1e-9 * scale;
    if (up.dv[1][0] - lo.dv[1][0]).abs() > tol || (up.dv[0][0] - lo.dv[0][0]).abs() > tol {
        return Err(Error::InvalidParameter(
            "map is discontinuous along the fold segment".into(),
        ));
    }

    let patch = RidgePatch {
        a,
        b,
        c,
        d,
        coeffs,
        tau: rhombus_slope(b_c, d_c, l),
        l,
        frame,
    };

    // affineness of each half-patch, checked at edge midpoints and centroids;
    // the fold midpoint appears in both sets and doubles as a continuity check
    let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let cen = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        [
            (p[0] + q[0] + r[0]) / 3.0,
            (p[1] + q[1] + r[1]) / 3.0,
        ]
    };
    let upper_pts = [mid(a, b), mid(b, c), mid(a, c), cen(a, b, c)];
    let lower_pts = [mid(a, d), mid(d, c), mid(a, c), cen(a, d, c)];
    for (pts, side_up) in [(upper_pts, true), (lower_pts, false)] {
        for x in pts {
            let p = patch.frame.to_canonical(x);
            let pred_w = patch.frame.w_to_global(sharp_w(&coeffs, p, side_up));
            let pred_v = patch.frame.v_to_global(p, sharp_v(&coeffs, p, side_up));
            let got_w = map.w(x);
            let got_v = map.v(x);
            if (pred_w - got_w).abs() > tol
                || (pred_v[0] - got_v[0]).abs() > tol
                || (pred_v[1] - got_v[1]).abs() > tol
            {
                return Err(Error::InvalidParameter(
                    "map is not affine away from the fold on this patch".into(),
                ));
            }
        }
    }

    Ok(patch)
}

// largest rhombus slope keeping both off-fold vertices outside the open
// rhombus; a constraint is vacuous when the vertex projects outside (0, l)
fn rhombus_slope(b_c: [f64; 2], d_c: [f64; 2], l: f64) -> f64 {
    let mut tau = 1.0_f64;
    for (x, y) in [(b_c[0], b_c[1]), (d_c[0], -d_c[1])] {
        if x > 0.0 {
            tau = tau.min(y / x);
        }
        if x < l {
            tau = tau.min(y / (l - x));
        }
    }
    tau
}

// sharp two-sided affine fields in canonical coordinates
fn sharp_w(c: &[f64; 8], p: [f64; 2], upper: bool) -> f64 {
    let slope = if upper { c[6] } else { c[7] };
    c[5] * p[0] + slope * p[1]
}

fn sharp_v(c: &[f64; 8], p: [f64; 2], upper: bool) -> [f64; 2] {
    let (a_xy, a_yy) = if upper { (c[1], c[2]) } else { (c[3], c[4]) };
    [c[0] * p[0] + a_xy * p[1], a_yy * p[1]]
}

fn sharp_dv(c: &[f64; 8], upper: bool) -> [[f64; 2]; 2] {
    let (a_xy, a_yy) = if upper { (c[1], c[2]) } else { (c[3], c[4]) };
    [[c[0], a_xy], [0.0, a_yy]]
}

fn sharp_dw(c: &[f64; 8], upper: bool) -> [f64; 2] {
    [c[5], if upper { c[6] } else { c[7] }]
}

// ---------------------------------------------------------------------------
// smoothed strip fields

// transverse profile bundle at one scaled position t
#[derive(Debug, Clone, Copy)]
struct TSample {
    t: f64,
    g2: f64,
    g2d: f64,
    g3: f64,
    g3d: f64,
    g3dd: f64,
    e2: f64,
    e3: f64,
    om: f64,
    omd: f64,
    xi: f64,
}

impl TSample {
    fn new(p: &FoldProfile, t: f64) -> TSample {
        TSample {
            t,
            g2: p.gamma2(t),
            g2d: p.gamma2_d(t),
            g3: p.gamma3(t),
            g3d: p.gamma3_d(t),
            g3dd: p.gamma3_dd(t),
            e2: p.eta2(t),
            e3: p.eta3(t),
            om: p.omega(t),
            omd: p.omega_d(t),
            xi: p.xi(t),
        }
    }
}

// width bundle at one longitudinal position
#[derive(Debug, Clone, Copy)]
struct XSample {
    x: f64,
    f: f64,
    fd: f64,
    fdd: f64,
}

fn strip_w(c: &[f64; 8], xs: &XSample, ts: &TSample) -> f64 {
    c[5] * xs.x + xs.f * ts.g3
}

fn strip_v(c: &[f64; 8], xs: &XSample, ts: &TSample) -> [f64; 2] {
    [
        c[0] * xs.x - c[5] * xs.f * ts.g3 - xs.f * xs.fd * ts.om,
        xs.f * ts.g2,
    ]
}

fn strip_dw(c: &[f64; 8], xs: &XSample, ts: &TSample) -> [f64; 2] {
    [c[5] + xs.fd * ts.e3, ts.g3d]
}

fn strip_dv(c: &[f64; 8], xs: &XSample, ts: &TSample) -> [[f64; 2]; 2] {
    [
        [
            c[0] - c[5] * xs.fd * ts.e3 + xs.fd * xs.fd * ts.xi - xs.f * xs.fdd * ts.om,
            -c[5] * ts.g3d - xs.fd * ts.omd,
        ],
        [xs.fd * ts.e2, ts.g2d],
    ]
}

fn strip_d2w(xs: &XSample, ts: &TSample) -> [[f64; 2]; 2] {
    let cross = -xs.fd * ts.t * ts.g3dd / xs.f;
    [
        [xs.fdd * ts.e3 + xs.fd * xs.fd * ts.t * ts.t * ts.g3dd / xs.f, cross],
        [cross, ts.g3dd / xs.f],
    ]
}

// membrane strain dv + dv^T + dw (x) dw from precomputed bundles
fn strip_membrane(c: &[f64; 8], xs: &XSample, ts: &TSample) -> [[f64; 2]; 2] {
    let dv = strip_dv(c, xs, ts);
    let dw = strip_dw(c, xs, ts);
    membrane_of(dv, dw)
}

pub(crate) fn membrane_of(dv: [[f64; 2]; 2], dw: [f64; 2]) -> [[f64; 2]; 2] {
    [
        [2.0 * dv[0][0] + dw[0] * dw[0], dv[0][1] + dv[1][0] + dw[0] * dw[1]],
        [dv[0][1] + dv[1][0] + dw[0] * dw[1], 2.0 * dv[1][1] + dw[1] * dw[1]],
    ]
}

pub(crate) fn frob_sq(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[0][0] + 2.0 * m[0][1] * m[0][1] + m[1][1] * m[1][1]
}

/// A fold patch with the crease replaced by the smoothed strip fields.
///
/// Inside the strip `{0 < x1 < l, |x2| <= f(x1)}` (canonical coordinates)
/// the fields follow the profile construction; outside they coincide with
/// the sharp affine pieces. Global accessors route through the patch frame.
#[derive(Debug, Clone)]
pub struct RidgeMap {
    pub coeffs: [f64; 8],
    pub l: f64,
    pub h: f64,
    pub frame: Frame,
    profile: FoldProfile,
    width: WidthProfile,
}

/// Assembles the smoothed ridge fields for `patch` at thickness `h`.
///
/// The profile slopes must match the patch deflection coefficients, the
/// width profile must match the fold length and thickness, and the strip
/// must stay inside the fold rhombus (`width.tau <= patch.tau`).
pub fn ridge_fields(
    patch: &RidgePatch,
    profile: &FoldProfile,
    width: &WidthProfile,
    h: f64,
) -> Result<RidgeMap> {
    let scale = 1.0_f64.max(patch.coeffs[6].abs()).max(patch.coeffs[7].abs());
    if (profile.a7 - patch.coeffs[6]).abs() > 1e-10 * scale
        || (profile.a8 - patch.coeffs[7]).abs() > 1e-10 * scale
    {
        return Err(Error::InvalidParameter(
            "profile slopes do not match the patch deflection coefficients".into(),
        ));
    }
    if (width.l - patch.l).abs() > 1e-12 * patch.l.max(1.0) {
        return Err(Error::InvalidParameter(
            "width profile length does not match the fold length".into(),
        ));
    }
    if (width.h - h).abs() > 1e-12 * h {
        return Err(Error::InvalidParameter(
            "width profile thickness does not match the requested thickness".into(),
        ));
    }
    if width.tau > patch.tau * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "strip exits the quadrilateral: width slope {} exceeds rhombus slope {}",
            width.tau, patch.tau
        )));
    }
    let c = patch.coeffs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if patch.eq4_residual() > 1e-8 * c * c {
        return Err(Error::InvalidParameter(
            "patch coefficients violate the fold compatibility relations".into(),
        ));
    }
    Ok(RidgeMap {
        coeffs: patch.coeffs,
        l: patch.l,
        h,
        frame: patch.frame,
        profile: profile.clone(),
        width: *width,
    })
}

impl RidgeMap {
    /// Whether the canonical point lies inside the smoothing strip.
    pub fn in_strip_aligned(&self, p: [f64; 2]) -> bool {
        p[0] > 0.0 && p[0] < self.l && p[1].abs() <= self.width.f(p[0])
    }

    pub fn in_strip(&self, x: [f64; 2]) -> bool {
        self.in_strip_aligned(self.frame.to_canonical(x))
    }

    fn bundles(&self, p: [f64; 2]) -> (XSample, TSample) {
        let xs = self.width.bundle(p[0]);
        let ts = TSample::new(&self.profile, p[1] / xs.f);
        (xs, ts)
    }

    /// Deflection in canonical coordinates.
    pub fn w_aligned(&self, p: [f64; 2]) -> f64 {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            strip_w(&self.coeffs, &xs, &ts)
        } else {
            sharp_w(&self.coeffs, p, p[1] >= 0.0)
        }
    }

    /// In-plane displacement in canonical coordinates.
    pub fn v_aligned(&self, p: [f64; 2]) -> [f64; 2] {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            strip_v(&self.coeffs, &xs, &ts)
        } else {
            sharp_v(&self.coeffs, p, p[1] >= 0.0)
        }
    }

    pub fn dw_aligned(&self, p: [f64; 2]) -> [f64; 2] {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            strip_dw(&self.coeffs, &xs, &ts)
        } else {
            sharp_dw(&self.coeffs, p[1] >= 0.0)
        }
    }

    pub fn dv_aligned(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            strip_dv(&self.coeffs, &xs, &ts)
        } else {
            sharp_dv(&self.coeffs, p[1] >= 0.0)
        }
    }

    pub fn d2w_aligned(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            strip_d2w(&xs, &ts)
        } else {
            [[0.0; 2]; 2]
        }
    }

    /// Membrane strain `Dv + Dv^T + Dw (x) Dw` in canonical coordinates.
    pub fn membrane_aligned(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        membrane_of(self.dv_aligned(p), self.dw_aligned(p))
    }

    /// Closed form of the longitudinal membrane component inside the strip;
    /// the shear and transverse components vanish identically there.
    pub fn m11_closed(&self, p: [f64; 2]) -> f64 {
        if self.in_strip_aligned(p) {
            let (xs, ts) = self.bundles(p);
            2.0 * (xs.fd * xs.fd * ts.xi - xs.f * xs.fdd * ts.om)
                + xs.fd * xs.fd * ts.e3 * ts.e3
        } else {
            let dv = sharp_dv(&self.coeffs, p[1] >= 0.0);
            let dw = sharp_dw(&self.coeffs, p[1] >= 0.0);
            membrane_of(dv, dw)[0][0]
        }
    }

    /// Deflection at a patch-frame point.
    pub fn w_global(&self, x: [f64; 2]) -> f64 {
        self.frame.w_to_global(self.w_aligned(self.frame.to_canonical(x)))
    }

    /// In-plane displacement at a patch-frame point.
    pub fn v_global(&self, x: [f64; 2]) -> [f64; 2] {
        let p = self.frame.to_canonical(x);
        self.frame.v_to_global(p, self.v_aligned(p))
    }

    pub fn dv_global(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        self.frame.dv_to_global(self.dv_aligned(self.frame.to_canonical(x)))
    }

    pub fn dw_global(&self, x: [f64; 2]) -> [f64; 2] {
        self.frame.dw_to_global(self.dw_aligned(self.frame.to_canonical(x)))
    }

    pub fn d2w_global(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        self.frame.d2w_to_global(self.d2w_aligned(self.frame.to_canonical(x)))
    }
}

impl PlanarMap for RidgeMap {
    fn v(&self, x: [f64; 2]) -> [f64; 2] {
        self.v_global(x)
    }

    fn w(&self, x: [f64; 2]) -> f64 {
        self.w_global(x)
    }
}

// ---------------------------------------------------------------------------
// patch energy quadrature

/// Quadrature controls for the strip energy.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Gauss-Legendre points per cell and panel.
    pub points: usize,
    /// Number of successive mesh halvings used to assess convergence.
    pub refine: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { points: 8, refine: 1 }
    }
}

/// Membrane and bending energy of one smoothed fold strip.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PatchEnergy {
    pub membrane: f64,
    pub bending: f64,
    /// Relative change between the two finest quadrature levels.
    pub refine_rel: f64,
    /// Whether the refinement changed the total by at most one percent.
    pub converged: bool,
}

impl PatchEnergy {
    pub fn total(&self) -> f64 {
        self.membrane + self.bending
    }
}

// scaled transverse breakpoints: the sharp tails, the kernel window, and a
// graded subdivision of the kernel's plateau shoulders where its second
// derivative concentrates
const T_BREAKS: [f64; 17] = [
    -1.0, -0.75, -0.125, -0.1125, -0.1, -0.0875, -0.075, -0.0375, 0.0, 0.0375, 0.075, 0.0875,
    0.1, 0.1125, 0.125, 0.75, 1.0,
];

// geometric cells growing from both ends of [lo, hi], first cell `first` wide
fn geometric_cells(lo: f64, hi: f64, first: f64, ratio: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let mut left = Vec::new();
    let mut x = lo;
    let mut w = first;
    while x + w < mid {
        left.push((x, x + w));
        x += w;
        w *= ratio;
    }
    left.push((x, mid));
    let mut cells = left.clone();
    for &(p, q) in left.iter().rev() {
        cells.push((lo + hi - q, lo + hi - p));
    }
    cells
}

/// Strip energy of `map` at thickness `h`.
///
/// Integrates over the strip away from the fold endpoints (a margin of
/// `h / sqrt(2)` at each end is left to a separate vertex treatment), using
/// per-cell Gauss-Legendre quadrature on a longitudinal mesh graded toward
/// the endpoints. Each refinement level halves every cell; the result is
/// flagged unconverged when the finest halving still moves the total by
/// more than one percent.
pub fn patch_energy(map: &RidgeMap, h: f64, opts: &QuadOptions) -> Result<PatchEnergy> {
    if (h - map.h).abs() > 1e-12 * h.max(map.h) {
        return Err(Error::InvalidParameter(format!(
            "requested thickness {h} does not match the map thickness {}",
            map.h
        )));
    }
    if opts.points < 2 || opts.points > 64 {
        return Err(Error::InvalidParameter(format!(
            "quadrature points per cell must lie in [2, 64], got {}",
            opts.points
        )));
    }
    if opts.refine == 0 || opts.refine > 8 {
        return Err(Error::InvalidParameter(format!(
            "refinement levels must lie in [1, 8], got {}",
            opts.refine
        )));
    }

    let margin = h / std::f64::consts::SQRT_2;
    let lo = margin;
    let hi = map.l - margin;
    if lo >= hi {
        return Err(Error::InvalidParameter(
            "strip window is empty; thickness too large for fold length".into(),
        ));
    }
    let base_cells = geometric_cells(lo, hi, 0.5 * h, 1.5);

    let (gl_x, gl_w) = gauss_legendre(opts.points);
    let mut prev = (0.0, 0.0);
    let mut rel = f64::INFINITY;
    let mut finest = (0.0, 0.0);
    for level in 0..=opts.refine {
        let split = 1usize << level;
        finest = level_energy(map, h, &base_cells, split, &gl_x, &gl_w);
        let tot = finest.0 + finest.1;
        if level > 0 {
            let prev_tot = prev.0 + prev.1;
            rel = if tot == 0.0 && prev_tot == 0.0 {
                0.0
            } else {
                (tot - prev_tot).abs() / tot.abs().max(1e-300)
            };
        }
        prev = finest;
    }

    Ok(PatchEnergy {
        membrane: finest.0,
        bending: finest.1,
        refine_rel: rel,
        converged: rel <= 0.01,
    })
}

// one quadrature level: every base cell and panel split `split` ways
fn level_energy(
    map: &RidgeMap,
    h: f64,
    base_cells: &[(f64, f64)],
    split: usize,
    gl_x: &[f64],
    gl_w: &[f64],
) -> (f64, f64) {
    // transverse nodes are shared across the whole strip
    let mut t_nodes = Vec::new();
    for pair in T_BREAKS.windows(2) {
        let (p0, p1) = (pair[0], pair[1]);
        for k in 0..split {
            let a = p0 + (p1 - p0) * k as f64 / split as f64;
            let b = p0 + (p1 - p0) * (k + 1) as f64 / split as f64;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (z, wq) in gl_x.iter().zip(gl_w) {
                let t = mid + half * z;
                t_nodes.push((TSample::new(&map.profile, t), wq * half));
            }
        }
    }

    let mut membrane = 0.0;
    let mut bending = 0.0;
    let c = &map.coeffs;
    for &(a0, b0) in base_cells {
        for k in 0..split {
            let a = a0 + (b0 - a0) * k as f64 / split as f64;
            let b = a0 + (b0 - a0) * (k + 1) as f64 / split as f64;
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (z, wq) in gl_x.iter().zip(gl_w) {
                let xs = map.width.bundle(mid + half * z);
                // dx2 = f dt under the scaled transverse substitution
                let wx = wq * half * xs.f;
                for (ts, wt) in &t_nodes {
                    let m = strip_membrane(c, &xs, ts);
                    let d2 = strip_d2w(&xs, ts);
                    membrane += wx * wt * frob_sq(m);
                    bending += wx * wt * h * h * frob_sq(d2);
                }
            }
        }
    }
    (membrane, bending)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fit_exponent;
    use crate::quadrature::integrate_adaptive;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng as _};

    // sharp two-sided affine fold with compatible coefficients
    struct CanonicalFold {
        c: [f64; 8],
    }

    impl CanonicalFold {
        fn new(a6: f64, a7: f64, a8: f64) -> CanonicalFold {
            CanonicalFold {
                c: [
                    -0.5 * a6 * a6,
                    -a6 * a7,
                    -0.5 * a7 * a7,
                    -a6 * a8,
                    -0.5 * a8 * a8,
                    a6,
                    a7,
                    a8,
                ],
            }
        }
    }

    impl PlanarMap for CanonicalFold {
        fn v(&self, x: [f64; 2]) -> [f64; 2] {
            sharp_v(&self.c, x, x[1] >= 0.0)
        }

        fn w(&self, x: [f64; 2]) -> f64 {
            sharp_w(&self.c, x, x[1] >= 0.0)
        }
    }

    // the same fold observed from a rotated, shifted, re-gauged frame
    struct MovedFold {
        inner: CanonicalFold,
        rot: [[f64; 2]; 2],
        shift: [f64; 2],
        mu: f64,
        v_shift: [f64; 2],
        w_shift: f64,
    }

    impl PlanarMap for MovedFold {
        fn v(&self, x: [f64; 2]) -> [f64; 2] {
            let y = [
                self.rot[0][0] * x[0] + self.rot[0][1] * x[1] + self.shift[0],
                self.rot[1][0] * x[0] + self.rot[1][1] * x[1] + self.shift[1],
            ];
            let vi = self.inner.v(y);
            let vr = mat2_vec(mat2_t(self.rot), vi);
            [
                vr[0] - self.mu * x[1] + self.v_shift[0],
                vr[1] + self.mu * x[0] + self.v_shift[1],
            ]
        }

        fn w(&self, x: [f64; 2]) -> f64 {
            let y = [
                self.rot[0][0] * x[0] + self.rot[0][1] * x[1] + self.shift[0],
                self.rot[1][0] * x[0] + self.rot[1][1] * x[1] + self.shift[1],
            ];
            self.inner.w(y) + self.w_shift
        }
    }

    fn square_quad(l: f64) -> [[f64; 2]; 4] {
        [
            [0.0, 0.0],
            [0.5 * l, 0.5 * l],
            [l, 0.0],
            [0.5 * l, -0.5 * l],
        ]
    }

    fn tent_map(l: f64, tau: f64, h: f64, a7: f64, a8: f64) -> RidgeMap {
        let fold = CanonicalFold::new(0.3, a7, a8);
        let patch = fold_coeffs(&fold, &square_quad(l)).unwrap();
        let profile = gamma_profiles(a7, a8).unwrap();
        let width = width_profile(tau, h, l).unwrap();
        ridge_fields(&patch, &profile, &width, h).unwrap()
    }

    #[test]
    fn trivial_profiles_vanish_identically() {
        let p = gamma_profiles(0.0, 0.0).unwrap();
        assert_eq!(p.lambda, 0.0);
        for i in 0..=40 {
            let t = -1.0 + i as f64 / 20.0;
            assert_eq!(p.gamma3(t), 0.0);
            assert_eq!(p.gamma2(t), 0.0);
            assert_eq!(p.omega(t), 0.0);
            assert_eq!(p.xi(t), 0.0);
        }
    }

    #[test]
    fn profiles_match_sharp_slopes_outside_window() {
        let p = gamma_profiles(1.3, -0.7).unwrap();
        for &t in &[0.125, 0.2, 0.75, 1.0] {
            assert_relative_eq!(p.gamma3(t), 1.3 * t, epsilon = 1e-13);
            assert_relative_eq!(p.gamma3_d(t), 1.3, epsilon = 1e-13);
            assert_relative_eq!(p.gamma2(t), -0.5 * 1.3 * 1.3 * t, epsilon = 1e-12);
            assert_relative_eq!(p.gamma3(-t), 0.7 * t, epsilon = 1e-13);
            assert_relative_eq!(p.gamma3_d(-t), -0.7, epsilon = 1e-13);
            assert_relative_eq!(p.gamma2(-t), 0.5 * 0.7 * 0.7 * t, epsilon = 1e-12);
        }
    }

    #[test]
    fn slope_energy_budget_is_exact() {
        for &(a7, a8) in &[(1.0, -1.0), (0.9, 0.4), (-2.0, 0.3), (1.5, 1.5)] {
            let p = gamma_profiles(a7, a8).unwrap();
            let pts = [-1.0, -0.125, 0.125, 1.0];
            let got = integrate_adaptive(
                &|t| {
                    let s = p.gamma3_d(t);
                    s * s
                },
                &pts,
                1e-13,
            );
            assert_relative_eq!(got, a7 * a7 + a8 * a8, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn transverse_strain_relation_holds_pointwise() {
        let p = gamma_profiles(0.8, -1.1).unwrap();
        for i in 0..=1000 {
            let t = -1.0 + 2.0 * i as f64 / 1000.0;
            let s = p.gamma3_d(t);
            assert_relative_eq!(p.gamma2_d(t), -0.5 * s * s, epsilon = 1e-10);
        }
    }

    #[test]
    fn auxiliaries_vanish_outside_window_and_at_endpoints() {
        let p = gamma_profiles(1.2, 0.5).unwrap();
        for &t in &[-1.0, -0.75, -0.4, 0.125, 0.3, 0.75, 1.0] {
            assert!(p.eta2(t).abs() < 1e-10, "eta2({t}) = {}", p.eta2(t));
            assert!(p.eta3(t).abs() < 1e-10, "eta3({t}) = {}", p.eta3(t));
            assert!(p.omega(t).abs() < 1e-10, "omega({t}) = {}", p.omega(t));
            assert!(p.xi(t).abs() < 1e-10, "xi({t}) = {}", p.xi(t));
        }
        assert!(p.omega(1.0).abs() < 1e-10);
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let p = gamma_profiles(-0.9, 1.4).unwrap();
        let e = 1e-6;
        for &t in &[-0.9, -0.126, -0.1, -0.03, 0.0, 0.02, 0.11, 0.124, 0.6] {
            let fd3 = (p.gamma3(t + e) - p.gamma3(t - e)) / (2.0 * e);
            assert_relative_eq!(p.gamma3_d(t), fd3, epsilon = 1e-7, max_relative = 1e-6);
            let fd3d = (p.gamma3_d(t + e) - p.gamma3_d(t - e)) / (2.0 * e);
            assert_relative_eq!(p.gamma3_dd(t), fd3d, epsilon = 1e-4, max_relative = 1e-4);
            let fd2 = (p.gamma2(t + e) - p.gamma2(t - e)) / (2.0 * e);
            assert_relative_eq!(p.gamma2_d(t), fd2, epsilon = 1e-7, max_relative = 1e-6);
            let fdo = (p.omega(t + e) - p.omega(t - e)) / (2.0 * e);
            assert_relative_eq!(p.omega_d(t), fdo, epsilon = 1e-7, max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn profile_budget_and_tails_hold_for_random_slopes(
            a7 in -3.0_f64..3.0,
            a8 in -3.0_f64..3.0,
        ) {
            let p = gamma_profiles(a7, a8).unwrap();
            let scale = 1.0_f64.max(a7.abs()).max(a8.abs());
            // sharp tails
            prop_assert!((p.gamma3(1.0) - a7).abs() < 1e-12 * scale);
            prop_assert!((p.gamma3(-1.0) + a8).abs() < 1e-12 * scale);
            prop_assert!((p.gamma3_d(0.75) - a7).abs() < 1e-12 * scale);
            prop_assert!((p.gamma3_d(-0.75) - a8).abs() < 1e-12 * scale);
            // auxiliaries vanish outside the window
            for &t in &[-0.75, -0.2, 0.2, 0.75] {
                prop_assert!(p.omega(t).abs() < 1e-10 * scale * scale);
                prop_assert!(p.xi(t).abs() < 1e-10 * scale * scale);
            }
            prop_assert!(p.omega(1.0).abs() < 1e-10 * scale * scale);
        }
    }

    #[test]
    fn width_vanishes_at_ends_and_is_symmetric() {
        let wp = width_profile(0.7, 1e-3, 1.0).unwrap();
        assert_eq!(wp.f(0.0), 0.0);
        assert_relative_eq!(wp.f(1.0), 0.0, epsilon = 1e-18);
        assert_relative_eq!(wp.f(0.25), wp.f(0.75), epsilon = 1e-12);
        assert_relative_eq!(wp.f_d(0.5), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn width_tracks_one_sided_profile_up_to_constants() {
        let (tau, h, l) = (1.0, 1e-3, 1.0);
        let wp = width_profile(tau, h, l).unwrap();
        for i in 1..=1001 {
            let x = h + (0.5 * l - h) * i as f64 / 1001.0;
            let (f0, f0d, f0dd) = wp.one_sided(x);
            let ratio = wp.f(x) / f0;
            assert!(
                (0.5..=1.0 + 1e-12).contains(&ratio),
                "f/f0 = {ratio} at x = {x}"
            );
            assert!(wp.f_d(x).abs() <= 8.0 * f0d.abs());
            assert!(wp.f_dd(x).abs() <= 8.0 * f0dd.abs());
        }
    }

    #[test]
    fn width_stays_inside_rhombus() {
        let wp = width_profile(0.9, 1e-2, 2.0).unwrap();
        for i in 1..200 {
            let x = 2.0 * i as f64 / 200.0;
            assert!(wp.f(x) <= 0.9 * x.min(2.0 - x) + 1e-15);
        }
    }

    #[test]
    fn width_derivatives_match_finite_differences() {
        let wp = width_profile(0.6, 5e-3, 1.3).unwrap();
        let e1 = 1e-7;
        // a second difference needs a wider step to stay above roundoff
        let e2 = 1e-5;
        for &x in &[0.01, 0.1, 0.65, 1.0, 1.2] {
            let fd1 = (wp.f(x + e1) - wp.f(x - e1)) / (2.0 * e1);
            assert_relative_eq!(wp.f_d(x), fd1, epsilon = 1e-7, max_relative = 1e-6);
            let fd2 = (wp.f(x + e2) - 2.0 * wp.f(x) + wp.f(x - e2)) / (e2 * e2);
            assert_relative_eq!(wp.f_dd(x), fd2, epsilon = 1e-5, max_relative = 1e-4);
        }
    }

    #[test]
    fn width_rejects_thick_sheets_and_bad_slopes() {
        assert!(matches!(
            width_profile(1.0, 0.2, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            width_profile(0.0, 1e-3, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            width_profile(1.5, 1e-3, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn fold_coeffs_recovers_canonical_coefficients() {
        let fold = CanonicalFold::new(0.4, 1.1, -0.8);
        let patch = fold_coeffs(&fold, &square_quad(1.0)).unwrap();
        for (got, want) in patch.coeffs.iter().zip(&fold.c) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
        assert_relative_eq!(patch.tau, 1.0, epsilon = 1e-12);
        assert_relative_eq!(patch.l, 1.0, epsilon = 1e-15);
        assert!(patch.frame.lambda.abs() < 1e-12);
        assert!(patch.eq4_residual() < 1e-12);
    }

    #[test]
    fn fold_coeffs_is_frame_covariant() {
        let th = 0.7_f64;
        let rot = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
        let moved = MovedFold {
            inner: CanonicalFold::new(-0.2, 0.9, 0.1),
            rot,
            shift: [0.3, -1.2],
            mu: 0.45,
            v_shift: [2.0, -0.7],
            w_shift: 1.5,
        };
        // quad' = R^T (quad - z) maps through x -> R x + z onto the original
        let quad0 = square_quad(1.0);
        let mut quad = [[0.0; 2]; 4];
        for (dst, src) in quad.iter_mut().zip(&quad0) {
            let s = [src[0] - moved.shift[0], src[1] - moved.shift[1]];
            *dst = mat2_vec(mat2_t(rot), s);
        }
        let patch = fold_coeffs(&moved, &quad).unwrap();
        let want = CanonicalFold::new(-0.2, 0.9, 0.1).c;
        for (got, want) in patch.coeffs.iter().zip(&want) {
            assert_relative_eq!(got, want, epsilon = 1e-9);
        }
        assert_relative_eq!(patch.tau, 1.0, epsilon = 1e-9);

        // the frame must reproduce the observed map, not just the coefficients
        let p = [0.4, 0.2];
        let x = patch.frame.from_canonical(p);
        assert_relative_eq!(
            patch.frame.w_to_global(sharp_w(&patch.coeffs, p, true)),
            moved.w(x),
            epsilon = 1e-9
        );
        let v = patch.frame.v_to_global(p, sharp_v(&patch.coeffs, p, true));
        let got = moved.v(x);
        assert_relative_eq!(v[0], got[0], epsilon = 1e-9);
        assert_relative_eq!(v[1], got[1], epsilon = 1e-9);
    }

    #[test]
    fn fold_coeffs_rejects_bad_quadrilaterals() {
        let fold = CanonicalFold::new(0.0, 1.0, -1.0);
        // both off-fold vertices above the fold
        let same_side = [[0.0, 0.0], [0.4, 0.5], [1.0, 0.0], [0.6, 0.2]];
        assert!(matches!(
            fold_coeffs(&fold, &same_side),
            Err(Error::InvalidParameter(_))
        ));
        // coincident fold endpoints
        let degenerate = [[0.2, 0.1], [0.4, 0.5], [0.2, 0.1], [0.6, -0.2]];
        assert!(matches!(
            fold_coeffs(&fold, &degenerate),
            Err(Error::InvalidParameter(_))
        ));
        // dart: the off-fold diagonal crosses outside the fold segment
        let dart = [[0.0, 0.0], [-0.5, 0.4], [1.0, 0.0], [-0.5, -0.4]];
        assert!(matches!(
            fold_coeffs(&fold, &dart),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn fold_coeffs_rejects_non_affine_maps() {
        struct Bent;
        impl PlanarMap for Bent {
            fn v(&self, x: [f64; 2]) -> [f64; 2] {
                [x[0] * x[0], 0.0]
            }
            fn w(&self, x: [f64; 2]) -> f64 {
                x[1].abs()
            }
        }
        assert!(matches!(
            fold_coeffs(&Bent, &square_quad(1.0)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn tau_ignores_vertices_beyond_the_fold_ends() {
        // b projects past c, so only the near-end constraint is active
        let fold = CanonicalFold::new(0.0, 0.6, -0.6);
        let quad = [[0.0, 0.0], [1.4, 0.5], [1.0, 0.0], [0.5, -0.5]];
        let patch = fold_coeffs(&fold, &quad).unwrap();
        assert_relative_eq!(patch.tau, 0.5 / 1.4, epsilon = 1e-12);
    }

    #[test]
    fn ridge_fields_checks_consistency() {
        let fold = CanonicalFold::new(0.0, 1.0, -1.0);
        let patch = fold_coeffs(&fold, &square_quad(1.0)).unwrap();
        let h = 1e-2;
        let width = width_profile(1.0, h, 1.0).unwrap();
        let wrong = gamma_profiles(0.5, -1.0).unwrap();
        assert!(ridge_fields(&patch, &wrong, &width, h).is_err());
        let profile = gamma_profiles(1.0, -1.0).unwrap();
        let wrong_l = width_profile(1.0, h, 2.0).unwrap();
        assert!(ridge_fields(&patch, &profile, &wrong_l, h).is_err());
        assert!(ridge_fields(&patch, &profile, &width, 2.0 * h).is_err());
        assert!(ridge_fields(&patch, &profile, &width, h).is_ok());
    }

    #[test]
    fn ridge_fields_rejects_strips_leaving_the_quad() {
        // narrow quad: tau = 0.2, but the width profile asks for 0.5
        let fold = CanonicalFold::new(0.0, 0.7, -0.7);
        let quad = [[0.0, 0.0], [0.5, 0.1], [1.0, 0.0], [0.5, -0.1]];
        let patch = fold_coeffs(&fold, &quad).unwrap();
        let profile = gamma_profiles(0.7, -0.7).unwrap();
        let width = width_profile(0.5, 1e-2, 1.0).unwrap();
        assert!(matches!(
            ridge_fields(&patch, &profile, &width, 1e-2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn strip_membrane_identities_hold() {
        let map = tent_map(1.0, 1.0, 1e-2, 0.9, -1.2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        let mut checked = 0;
        while checked < 10_000 {
            let x = rng.gen_range(1e-4..1.0 - 1e-4);
            let f = map.width.f(x);
            let t = rng.gen_range(-1.0..1.0);
            let p = [x, t * f];
            if !map.in_strip_aligned(p) {
                continue;
            }
            checked += 1;
            let m = map.membrane_aligned(p);
            assert!(m[0][1].abs() < 1e-9, "shear {} at {:?}", m[0][1], p);
            assert!(m[1][1].abs() < 1e-9, "transverse {} at {:?}", m[1][1], p);
            assert_relative_eq!(m[0][0], map.m11_closed(p), epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn strip_fields_match_sharp_map_at_the_margin() {
        // the profiles are exactly affine beyond the kernel window, so the
        // strip formulas must agree with the sharp branch on the strip edge
        let map = tent_map(1.0, 1.0, 1e-2, 1.1, 0.3);
        for i in 1..40 {
            let x = i as f64 / 40.0;
            let f = map.width.f(x);
            for s in [-1.0, 1.0] {
                let p = [x, s * f];
                let upper = s > 0.0;
                assert!(map.in_strip_aligned(p));
                assert_relative_eq!(
                    map.w_aligned(p),
                    sharp_w(&map.coeffs, p, upper),
                    epsilon = 1e-9
                );
                let vi = map.v_aligned(p);
                let vo = sharp_v(&map.coeffs, p, upper);
                assert_relative_eq!(vi[0], vo[0], epsilon = 1e-9);
                assert_relative_eq!(vi[1], vo[1], epsilon = 1e-9);
                let di = map.dw_aligned(p);
                let dd = sharp_dw(&map.coeffs, upper);
                assert_relative_eq!(di[0], dd[0], epsilon = 1e-8);
                assert_relative_eq!(di[1], dd[1], epsilon = 1e-8);
                let gi = map.dv_aligned(p);
                let go = sharp_dv(&map.coeffs, upper);
                for r in 0..2 {
                    for c in 0..2 {
                        assert_relative_eq!(gi[r][c], go[r][c], epsilon = 1e-8);
                    }
                }
                // bending shuts off at the strip edge
                let d2 = map.d2w_aligned(p);
                assert!(frob_sq(d2) < 1e-16);
            }
        }
    }

    #[test]
    fn strip_field_derivatives_match_finite_differences() {
        let map = tent_map(1.0, 1.0, 1e-2, 0.8, -0.5);
        let e = 1e-6;
        for &(x, tf) in &[(0.3, 0.05), (0.5, -0.9), (0.7, 0.4), (0.1, 0.0)] {
            let f = map.width.f(x);
            let p = [x, tf * f];
            let num_dw = [
                (map.w_aligned([p[0] + e, p[1]]) - map.w_aligned([p[0] - e, p[1]])) / (2.0 * e),
                (map.w_aligned([p[0], p[1] + e]) - map.w_aligned([p[0], p[1] - e])) / (2.0 * e),
            ];
            let dw = map.dw_aligned(p);
            assert_relative_eq!(dw[0], num_dw[0], epsilon = 1e-6, max_relative = 1e-5);
            assert_relative_eq!(dw[1], num_dw[1], epsilon = 1e-6, max_relative = 1e-5);
            let dv = map.dv_aligned(p);
            for (i, comp) in [0usize, 1].into_iter().enumerate() {
                let num = [
                    (map.v_aligned([p[0] + e, p[1]])[comp]
                        - map.v_aligned([p[0] - e, p[1]])[comp])
                        / (2.0 * e),
                    (map.v_aligned([p[0], p[1] + e])[comp]
                        - map.v_aligned([p[0], p[1] - e])[comp])
                        / (2.0 * e),
                ];
                assert_relative_eq!(dv[i][0], num[0], epsilon = 1e-5, max_relative = 1e-4);
                assert_relative_eq!(dv[i][1], num[1], epsilon = 1e-5, max_relative = 1e-4);
            }
            let d2 = map.d2w_aligned(p);
            let num_d2_01 = (map.dw_aligned([p[0], p[1] + e])[0]
                - map.dw_aligned([p[0], p[1] - e])[0])
                / (2.0 * e);
            assert_relative_eq!(d2[0][1], num_d2_01, epsilon = 1e-4, max_relative = 1e-4);
            let num_d2_11 = (map.dw_aligned([p[0], p[1] + e])[1]
                - map.dw_aligned([p[0], p[1] - e])[1])
                / (2.0 * e);
            assert_relative_eq!(d2[1][1], num_d2_11, epsilon = 1e-4, max_relative = 1e-4);
        }
    }

    #[test]
    fn global_fields_respect_the_frame() {
        let th = -0.4_f64;
        let rot = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
        let moved = MovedFold {
            inner: CanonicalFold::new(0.3, 1.0, -0.6),
            rot,
            shift: [-0.8, 0.25],
            mu: -0.3,
            v_shift: [0.1, 0.9],
            w_shift: -2.0,
        };
        let quad0 = square_quad(1.0);
        let mut quad = [[0.0; 2]; 4];
        for (dst, src) in quad.iter_mut().zip(&quad0) {
            let s = [src[0] - moved.shift[0], src[1] - moved.shift[1]];
            *dst = mat2_vec(mat2_t(rot), s);
        }
        let patch = fold_coeffs(&moved, &quad).unwrap();
        let profile = gamma_profiles(patch.coeffs[6], patch.coeffs[7]).unwrap();
        let width = width_profile(1.0, 1e-2, patch.l).unwrap();
        let map = ridge_fields(&patch, &profile, &width, 1e-2).unwrap();

        // outside the strip the global fields reproduce the sampled map
        let x = patch.frame.from_canonical([0.5, 0.4]);
        assert!(!map.in_strip(x));
        assert_relative_eq!(map.w_global(x), moved.w(x), epsilon = 1e-9);
        let got = map.v_global(x);
        let want = moved.v(x);
        assert_relative_eq!(got[0], want[0], epsilon = 1e-9);
        assert_relative_eq!(got[1], want[1], epsilon = 1e-9);

        // inside the strip the global derivative fields stay frame-consistent
        let xin = patch.frame.from_canonical([0.5, 0.0]);
        assert!(map.in_strip(xin));
        let e = 1e-6;
        let dwg = map.dw_global(xin);
        for k in 0..2 {
            let mut xp = xin;
            let mut xm = xin;
            xp[k] += e;
            xm[k] -= e;
            let fd = (map.w_global(xp) - map.w_global(xm)) / (2.0 * e);
            assert_relative_eq!(dwg[k], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn membrane_energy_is_frame_invariant() {
        let h = 1e-2;
        let canonical = tent_map(1.0, 1.0, h, 0.9, -0.9);
        let th = 1.1_f64;
        let rot = [[th.cos(), -th.sin()], [th.sin(), th.cos()]];
        let moved = MovedFold {
            inner: CanonicalFold::new(0.3, 0.9, -0.9),
            rot,
            shift: [0.4, -0.2],
            mu: 0.2,
            v_shift: [-1.0, 0.5],
            w_shift: 0.7,
        };
        let quad0 = square_quad(1.0);
        let mut quad = [[0.0; 2]; 4];
        for (dst, src) in quad.iter_mut().zip(&quad0) {
            let s = [src[0] - moved.shift[0], src[1] - moved.shift[1]];
            *dst = mat2_vec(mat2_t(rot), s);
        }
        let patch = fold_coeffs(&moved, &quad).unwrap();
        let profile = gamma_profiles(patch.coeffs[6], patch.coeffs[7]).unwrap();
        let width = width_profile(1.0, h, patch.l).unwrap();
        let map = ridge_fields(&patch, &profile, &width, h).unwrap();

        let opts = QuadOptions::default();
        let e0 = patch_energy(&canonical, h, &opts).unwrap();
        let e1 = patch_energy(&map, h, &opts).unwrap();
        assert_relative_eq!(e0.total(), e1.total(), max_relative = 1e-9);
    }

    #[test]
    fn patch_energy_vanishes_without_a_fold() {
        let map = tent_map(1.0, 1.0, 1e-2, 0.0, 0.0);
        let e = patch_energy(&map, 1e-2, &QuadOptions::default()).unwrap();
        assert!(e.total() <= 1e-12, "foldless strip energy {}", e.total());
        assert!(e.converged);
    }

    #[test]
    fn patch_energy_converges_at_default_resolution() {
        let map = tent_map(1.0, 1.0, 1e-3, 0.9, -0.9);
        let e = patch_energy(&map, 1e-3, &QuadOptions::default()).unwrap();
        assert!(e.converged, "refinement moved the total by {}", e.refine_rel);
        assert!(e.membrane > 0.0 && e.bending > 0.0);
    }

    #[test]
    fn patch_energy_scales_like_h_to_five_thirds() {
        let alpha = (std::f64::consts::PI / 4.0).sqrt();
        let mut totals = Vec::new();
        let mut bendings = Vec::new();
        for k in 0..5 {
            let h = 10f64.powf(-4.0 + 0.5 * k as f64);
            let map = tent_map(1.0, 1.0, h, alpha, -alpha);
            let e = patch_energy(&map, h, &QuadOptions::default()).unwrap();
            assert!(e.converged);
            totals.push((h, e.total()));
            bendings.push((h, e.bending));
        }
        let slope = fit_exponent(&totals, "h").unwrap().slope;
        assert!(
            (1.55..=1.80).contains(&slope),
            "total energy slope {slope} outside [1.55, 1.80]"
        );
        let bend_slope = fit_exponent(&bendings, "h").unwrap().slope;
        assert!(
            (1.55..=1.80).contains(&bend_slope),
            "bending slope {bend_slope} outside [1.55, 1.80]"
        );
    }

    #[test]
    fn patch_energy_validates_options() {
        let map = tent_map(1.0, 1.0, 1e-2, 1.0, -1.0);
        assert!(patch_energy(&map, 2e-2, &QuadOptions::default()).is_err());
        assert!(patch_energy(&map, 1e-2, &QuadOptions { points: 1, refine: 1 }).is_err());
        assert!(patch_energy(&map, 1e-2, &QuadOptions { points: 8, refine: 0 }).is_err());
    }
}
