//! Symmetry-breaking pyramid assembled from smoothed folds.
//!
//! The sharp pyramid pairs a tent deflection over the diamond
//! `|x1| + |x2| <= 1` with a per-quadrant affine in-plane displacement whose
//! symmetric gradient cancels the slope tensor exactly, so every face is
//! strain free.  No continuous choice of displacement exists: the dislocation
//! forced by the tent equals the angular deficit of the unit cone, and the
//! displacement jumps across the slit `x2 = 0, x1 < 0` by `[0, 4 ALPHA^2 x1]`.
//!
//! Bending concentrates on the twelve creases and their nine endpoints.  Each
//! crease carries a ridge strip and each endpoint a mollified ball of radius
//! `h`; together they bound the elastic energy by the `h^{5/3}` scale while
//! the wells of the radial problem only allow `h^{3/2}`.

use crate::bump::{smooth_step, unit_bump};
use crate::error::{Error, Result};
use crate::ridge::{
    fold_coeffs, frob_sq, gamma_profiles, membrane_of, patch_energy, perp, ridge_fields,
    width_profile, PlanarMap, QuadOptions, RidgeMap, RidgePatch,
};
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

/// Tent slope of the sharp pyramid.
///
/// Equals `sqrt(pi / 4)`, the unique slope whose in-plane dislocation
/// `4 ALPHA^2` matches the `pi` angular deficit of the unit cone, so the
/// pyramid competes in the same admissible class as the radial minimizers.
pub const ALPHA: f64 = 0.886_226_925_452_757_9;

// ---------------------------------------------------------------------------
// sharp map

/// Piecewise affine pyramid over the plane.
///
/// The deflection is `ALPHA * min(s, 1 - s)` with `s = |x1| + |x2|`; the
/// displacement is affine on each quadrant and continuous except across the
/// slit.  The corrected variant subtracts `4 ALPHA^2 x^perp` on `x2 > 0`,
/// which moves the jump from the slit to the positive `x1` axis so that fold
/// patches straddling the slit see continuous boundary data.
#[derive(Clone, Copy, Debug)]
pub struct SharpPyramid {
    corrected: bool,
}

/// Sharp pyramid with the displacement jump on the slit.
pub fn sharp_pyramid() -> SharpPyramid {
    SharpPyramid { corrected: false }
}

/// Sharp pyramid in the gauge that is continuous across the slit.
pub fn sharp_pyramid_corrected() -> SharpPyramid {
    SharpPyramid { corrected: true }
}

/// Displacement jump across the slit at `(x1, 0)`, upper minus lower limit.
pub fn sigma_jump(x1: f64) -> [f64; 2] {
    [0.0, 4.0 * ALPHA * ALPHA * x1]
}

impl SharpPyramid {
    // the corrected gauge takes slit values from below, so both affine pieces
    // of a slit fold sample the limit they agree on
    fn quadrant(&self, x: [f64; 2]) -> usize {
        let upper = if self.corrected { x[1] > 0.0 } else { x[1] >= 0.0 };
        match (x[0] >= 0.0, upper) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        }
    }

    /// Tent deflection; negative outside the diamond.
    pub fn w(&self, x: [f64; 2]) -> f64 {
        let s = x[0].abs() + x[1].abs();
        ALPHA * s.min(1.0 - s)
    }

    /// Deflection gradient; one-sided on the creases.
    pub fn dw(&self, x: [f64; 2]) -> [f64; 2] {
        let s = x[0].abs() + x[1].abs();
        let sign = if s <= 0.5 { ALPHA } else { -ALPHA };
        [sign * x[0].signum(), sign * x[1].signum()]
    }

    /// In-plane displacement; one-sided on its jump line.
    pub fn v(&self, x: [f64; 2]) -> [f64; 2] {
        let a2 = ALPHA * ALPHA;
        let raw = match self.quadrant(x) {
            0 => [x[0] + x[1], x[0] + x[1]],
            1 => [x[0] + x[1], -3.0 * x[0] + x[1]],
            2 => [x[0] - 3.0 * x[1], 5.0 * x[0] + x[1]],
            _ => [x[0] - 3.0 * x[1], x[0] + x[1]],
        };
        let mut v = [-0.5 * a2 * raw[0], -0.5 * a2 * raw[1]];
        if self.corrected && x[1] > 0.0 {
            let p = perp(x);
            v[0] -= 4.0 * a2 * p[0];
            v[1] -= 4.0 * a2 * p[1];
        }
        v
    }

    /// Displacement gradient; constant on each quadrant.
    pub fn dv(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let a2 = ALPHA * ALPHA;
        let t = match self.quadrant(x) {
            0 => [[1.0, 1.0], [1.0, 1.0]],
            1 => [[1.0, 1.0], [-3.0, 1.0]],
            2 => [[1.0, -3.0], [5.0, 1.0]],
            _ => [[1.0, -3.0], [1.0, 1.0]],
        };
        let mut dv = [
            [-0.5 * a2 * t[0][0], -0.5 * a2 * t[0][1]],
            [-0.5 * a2 * t[1][0], -0.5 * a2 * t[1][1]],
        ];
        if self.corrected && x[1] > 0.0 {
            // the correction has gradient 4 ALPHA^2 J, purely antisymmetric
            dv[0][1] += 4.0 * a2;
            dv[1][0] -= 4.0 * a2;
        }
        dv
    }

    /// Membrane strain `Dv + Dv^T + Dw (x) Dw`; vanishes off the creases.
    pub fn membrane(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        membrane_of(self.dv(x), self.dw(x))
    }
}

impl PlanarMap for SharpPyramid {
    fn v(&self, x: [f64; 2]) -> [f64; 2] {
        self.v(x)
    }

    fn w(&self, x: [f64; 2]) -> f64 {
        self.w(x)
    }
}

// ---------------------------------------------------------------------------
// crease layout

/// One crease segment together with the quadrilateral that hosts its strip.
#[derive(Clone, Copy, Debug)]
pub struct FoldSpec {
    /// First crease endpoint.
    pub a: [f64; 2],
    /// Second crease endpoint.
    pub c: [f64; 2],
    /// Quadrilateral apex on one side of the crease.
    pub b: [f64; 2],
    /// Apex on the other side.
    pub d: [f64; 2],
    /// Whether the crease lies on the displacement slit.
    pub on_sigma: bool,
}

/// The twelve creases of the pyramid, grouped as four rotated copies of each
/// of the three base creases: inner axis, outer axis, mid-diamond diagonal.
///
/// Apexes are chosen so the quadrilaterals tile without overlap and every
/// fold gets the same strip slope `tau = sqrt(2) - 1`.
pub fn pyramid_folds() -> Vec<FoldSpec> {
    let rho = (2.0 - SQRT_2) / 4.0;
    let ox = 0.75 - SQRT_2 / 8.0;
    let oy = SQRT_2 / 8.0;
    let base: [([f64; 2], [f64; 2], [f64; 2], [f64; 2]); 3] = [
        ([0.0, 0.0], [0.5, 0.0], [rho, rho], [rho, -rho]),
        ([0.5, 0.0], [1.0, 0.0], [ox, oy], [ox, -oy]),
        ([0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [rho, rho]),
    ];
    let mut folds = Vec::with_capacity(12);
    for (a, c, b, d) in base {
        let mut pts = [a, c, b, d];
        for _ in 0..4 {
            let [a, c, b, d] = pts;
            let on_sigma = a[1] == 0.0 && c[1] == 0.0 && a[0] + c[0] < 0.0;
            folds.push(FoldSpec { a, c, b, d, on_sigma });
            pts = pts.map(|p| [-p[1], p[0]]);
        }
    }
    folds
}

// ---------------------------------------------------------------------------
// assembled construction

/// A fold strip fitted to one crease of the pyramid.
#[derive(Clone, Debug)]
pub struct BuiltPatch {
    pub spec: FoldSpec,
    pub patch: RidgePatch,
    pub map: RidgeMap,
    /// Whether the strip stores corrected-gauge displacements, which happens
    /// exactly when the quadrilateral touches the slit from below.
    pub corrected_gauge: bool,
}

/// The pyramid with every crease replaced by a ridge strip.
///
/// Away from the strips the fields coincide with the sharp map.  Strips over
/// slit creases are built from the corrected gauge; [`Self::v_true`] restores
/// the physical displacement by adding the dislocation back.
#[derive(Clone, Debug)]
pub struct PyramidConstruction {
    pub h: f64,
    pub patches: Vec<BuiltPatch>,
}

impl PyramidConstruction {
    /// Fits all twelve strips at thickness `h`.
    ///
    /// Requires `0 < h < 1/16` so each strip is slimmer than an eighth of its
    /// fold length.
    pub fn build(h: f64) -> Result<PyramidConstruction> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "thickness must be positive and finite, got {h}"
            )));
        }
        if h >= 1.0 / 16.0 {
            return Err(Error::InvalidParameter(format!(
                "thickness {h} too large: strips need h < 1/16"
            )));
        }
        let plain = sharp_pyramid();
        let corrected = sharp_pyramid_corrected();
        let mut patches = Vec::with_capacity(12);
        for spec in pyramid_folds() {
            let quad = [spec.a, spec.b, spec.c, spec.d];
            // the plain gauge takes slit values from above, so any
            // quadrilateral meeting the slit from below must sample the
            // corrected gauge to see consistent one-sided data
            let touches_slit = quad.iter().any(|p| p[1] == 0.0 && p[0] < 0.0);
            let dips_below = quad.iter().any(|p| p[1] < 0.0);
            let corrected_gauge = touches_slit && dips_below;
            let map_ref: &dyn PlanarMap = if corrected_gauge { &corrected } else { &plain };
            let patch = fold_coeffs(map_ref, &quad)?;
            let profile = gamma_profiles(patch.coeffs[6], patch.coeffs[7])?;
            let width = width_profile(patch.tau, h, patch.l)?;
            let map = ridge_fields(&patch, &profile, &width, h)?;
            patches.push(BuiltPatch {
                spec,
                patch,
                map,
                corrected_gauge,
            });
        }
        Ok(PyramidConstruction { h, patches })
    }

    /// Crease endpoints, where strips pinch off and bending would diverge
    /// without the vertex mollification.
    pub fn vertex_centers() -> [[f64; 2]; 9] {
        [
            [0.0, 0.0],
            [0.5, 0.0],
            [0.0, 0.5],
            [-0.5, 0.0],
            [0.0, -0.5],
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, 0.0],
            [0.0, -1.0],
        ]
    }

    /// The strip containing `x`, if any; strips are pairwise disjoint.
    pub fn locate(&self, x: [f64; 2]) -> Option<&BuiltPatch> {
        self.patches.iter().find(|bp| bp.map.in_strip(x))
    }

    /// Deflection with all creases smoothed.
    pub fn w(&self, x: [f64; 2]) -> f64 {
        match self.locate(x) {
            Some(bp) => bp.map.w_global(x),
            None => sharp_pyramid().w(x),
        }
    }

    /// Deflection gradient; one-sided on the sharp creases at strip tips.
    pub fn dw(&self, x: [f64; 2]) -> [f64; 2] {
        match self.locate(x) {
            Some(bp) => bp.map.dw_global(x),
            None => sharp_pyramid().dw(x),
        }
    }

    /// Physical displacement, including the slit dislocation.
    pub fn v_true(&self, x: [f64; 2]) -> [f64; 2] {
        match self.locate(x) {
            Some(bp) => {
                let mut v = bp.map.v_global(x);
                if bp.corrected_gauge && x[1] > 0.0 {
                    let a2 = ALPHA * ALPHA;
                    let p = perp(x);
                    v[0] += 4.0 * a2 * p[0];
                    v[1] += 4.0 * a2 * p[1];
                }
                v
            }
            None => sharp_pyramid().v(x),
        }
    }

    /// Displacement in the gauge continuous across the slit.
    pub fn v_corrected(&self, x: [f64; 2]) -> [f64; 2] {
        let mut v = self.v_true(x);
        if x[1] > 0.0 {
            let a2 = ALPHA * ALPHA;
            let p = perp(x);
            v[0] -= 4.0 * a2 * p[0];
            v[1] -= 4.0 * a2 * p[1];
        }
        v
    }

    // displacement gradient up to an antisymmetric gauge term on slit strips;
    // its symmetric part is exact everywhere, which is all the strain sees
    fn dv_at(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match self.locate(x) {
            Some(bp) => bp.map.dv_global(x),
            None => sharp_pyramid().dv(x),
        }
    }

    /// Membrane strain for an externally supplied deflection gradient.
    pub fn strain(&self, x: [f64; 2], dw: [f64; 2]) -> [[f64; 2]; 2] {
        membrane_of(self.dv_at(x), dw)
    }

    /// Membrane strain of the construction itself.
    pub fn membrane(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        self.strain(x, self.dw(x))
    }
}

// ---------------------------------------------------------------------------
// vertex mollification

// grid nodes per ball radius; spacing is h / 32
const NODES_PER_RADIUS: i32 = 32;
// stored half-extent in nodes, wide enough for stencils at the ball rim
const GRID_HALF: i32 = 36;

/// Deflection near one crease endpoint, mollified at scale `h`.
///
/// Inside radius `h/2` the field is the convolution of the source with a
/// discrete bump of radius `h`; outside radius `h` it equals the source
/// exactly; in between the two are blended by a smooth cutoff.  Values live
/// on a uniform grid of spacing `h/32` so second differences resolve the
/// `1/h` curvature scale the mollifier produces.
#[derive(Clone, Debug)]
pub struct SmoothedVertex {
    pub center: [f64; 2],
    pub h: f64,
    /// Node spacing, `h / 32`.
    pub spacing: f64,
    half: i32,
    values: Vec<f64>,
}

/// Mollifies `w` around `center` at scale `h`.
pub fn vertex_smooth<F>(w: &F, center: [f64; 2], h: f64) -> Result<SmoothedVertex>
where
    F: Fn([f64; 2]) -> f64,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing radius must be positive and finite, got {h}"
        )));
    }
    if !center[0].is_finite() || !center[1].is_finite() {
        return Err(Error::NonFinite("vertex center".into()));
    }
    let n = NODES_PER_RADIUS;
    let half = GRID_HALF;
    let spacing = h / n as f64;

    // source samples, wide enough for every convolution the grid needs
    let src_half = half + n;
    let src_dim = (2 * src_half + 1) as usize;
    let mut src = vec![0.0; src_dim * src_dim];
    for i in -src_half..=src_half {
        for j in -src_half..=src_half {
            let x = [
                center[0] + spacing * i as f64,
                center[1] + spacing * j as f64,
            ];
            src[((i + src_half) as usize) * src_dim + (j + src_half) as usize] = w(x);
        }
    }

    // discrete bump, normalized by its own sum so affine fields are exact
    let kdim = (2 * n + 1) as usize;
    let mut kernel = vec![0.0; kdim * kdim];
    let mut ksum = 0.0;
    for k in -n..=n {
        for m in -n..=n {
            let r = ((k * k + m * m) as f64).sqrt() / n as f64;
            let val = unit_bump(r);
            kernel[((k + n) as usize) * kdim + (m + n) as usize] = val;
            ksum += val;
        }
    }

    let dim = (2 * half + 1) as usize;
    let mut values = vec![0.0; dim * dim];
    for i in -half..=half {
        for j in -half..=half {
            let direct = src[((i + src_half) as usize) * src_dim + (j + src_half) as usize];
            let r = spacing * ((i * i + j * j) as f64).sqrt();
            let psi = smooth_step(2.0 - 2.0 * r / h);
            let out = if psi == 0.0 {
                direct
            } else {
                let mut acc = 0.0;
                for k in -n..=n {
                    let row = ((i - k + src_half) as usize) * src_dim;
                    let krow = ((k + n) as usize) * kdim;
                    for m in -n..=n {
                        acc += kernel[krow + (m + n) as usize]
                            * src[row + (j - m + src_half) as usize];
                    }
                }
                let conv = acc / ksum;
                psi * conv + (1.0 - psi) * direct
            };
            values[((i + half) as usize) * dim + (j + half) as usize] = out;
        }
    }

    Ok(SmoothedVertex {
        center,
        h,
        spacing,
        half,
        values,
    })
}

impl SmoothedVertex {
    fn dim(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    /// Stored half-extent of the grid in nodes.
    pub fn grid_half(&self) -> i32 {
        self.half
    }

    /// Value at grid node `(i, j)`, offsets from the center in nodes.
    pub fn node(&self, i: i32, j: i32) -> f64 {
        debug_assert!(i.abs() <= self.half && j.abs() <= self.half);
        self.values[((i + self.half) as usize) * self.dim() + (j + self.half) as usize]
    }

    /// Whether `x` lies in the mollified ball.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        dx.hypot(dy) <= self.h
    }

    /// Bilinear interpolation of the stored values; requires
    /// `|x - center|_inf < (grid_half - 1) * spacing`.
    pub fn w(&self, x: [f64; 2]) -> f64 {
        let u = (x[0] - self.center[0]) / self.spacing;
        let v = (x[1] - self.center[1]) / self.spacing;
        let hi = (self.half - 1) as f64;
        debug_assert!(u.abs() <= hi && v.abs() <= hi);
        let iu = u.floor().clamp(-(self.half as f64), hi) as i32;
        let iv = v.floor().clamp(-(self.half as f64), hi) as i32;
        let fu = u - iu as f64;
        let fv = v - iv as f64;
        let v00 = self.node(iu, iv);
        let v10 = self.node(iu + 1, iv);
        let v01 = self.node(iu, iv + 1);
        let v11 = self.node(iu + 1, iv + 1);
        v00 * (1.0 - fu) * (1.0 - fv) + v10 * fu * (1.0 - fv) + v01 * (1.0 - fu) * fv
            + v11 * fu * fv
    }

    /// Central-difference gradient at a node.
    pub fn dw_node(&self, i: i32, j: i32) -> [f64; 2] {
        let d = self.spacing;
        [
            (self.node(i + 1, j) - self.node(i - 1, j)) / (2.0 * d),
            (self.node(i, j + 1) - self.node(i, j - 1)) / (2.0 * d),
        ]
    }

    /// Central-difference Hessian at a node.
    pub fn d2w_node(&self, i: i32, j: i32) -> [[f64; 2]; 2] {
        let d2 = self.spacing * self.spacing;
        let c = self.node(i, j);
        let dxx = (self.node(i + 1, j) - 2.0 * c + self.node(i - 1, j)) / d2;
        let dyy = (self.node(i, j + 1) - 2.0 * c + self.node(i, j - 1)) / d2;
        let dxy = (self.node(i + 1, j + 1) - self.node(i + 1, j - 1) - self.node(i - 1, j + 1)
            + self.node(i - 1, j - 1))
            / (4.0 * d2);
        [[dxx, dxy], [dxy, dyy]]
    }

    /// Squared `L^2` norm of the Hessian over the open ball of radius `h`.
    pub fn bending_l2(&self) -> f64 {
        let n = NODES_PER_RADIUS;
        let cell = self.spacing * self.spacing;
        let mut acc = 0.0;
        for i in -n + 1..n {
            for j in -n + 1..n {
                if i * i + j * j >= n * n {
                    continue;
                }
                acc += frob_sq(self.d2w_node(i, j)) * cell;
            }
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// energy assembly

/// Energy of one mollified vertex ball, restricted to the unit disc.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct BallReport {
    pub center: [f64; 2],
    pub membrane: f64,
    pub bending: f64,
}

/// Integrates the ball energy on the mollifier grid.
///
/// The strain combines the construction's displacement gradient with the
/// mollified deflection gradient; bending uses the mollified Hessian.  Nodes
/// outside the unit disc are skipped, since rim balls extend past the domain.
pub fn ball_energy(cons: &PyramidConstruction, sv: &SmoothedVertex) -> BallReport {
    let n = NODES_PER_RADIUS;
    let cell = sv.spacing * sv.spacing;
    let h2 = sv.h * sv.h;
    let mut membrane = 0.0;
    let mut bending = 0.0;
    for i in -n + 1..n {
        for j in -n + 1..n {
            if i * i + j * j >= n * n {
                continue;
            }
            let x = [
                sv.center[0] + sv.spacing * i as f64,
                sv.center[1] + sv.spacing * j as f64,
            ];
            if x[0] * x[0] + x[1] * x[1] > 1.0 {
                continue;
            }
            let m = cons.strain(x, sv.dw_node(i, j));
            membrane += frob_sq(m) * cell;
            bending += h2 * frob_sq(sv.d2w_node(i, j)) * cell;
        }
    }
    BallReport {
        center: sv.center,
        membrane,
        bending,
    }
}

/// Energy of one fold strip window.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PatchReport {
    pub a: [f64; 2],
    pub c: [f64; 2],
    pub l: f64,
    pub tau: f64,
    pub a7: f64,
    pub a8: f64,
    pub on_sigma: bool,
    pub membrane: f64,
    pub bending: f64,
    pub refine_rel: f64,
    pub converged: bool,
}

/// Full energy ledger of the smoothed pyramid.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct PyramidEnergy {
    pub h: f64,
    pub membrane: f64,
    pub bending: f64,
    pub total: f64,
    /// Whether every strip quadrature met its refinement target.
    pub converged: bool,
    pub patches: Vec<PatchReport>,
    pub vertex_balls: Vec<BallReport>,
}

/// Knobs for the pyramid energy evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct PyramidOptions {
    pub quad: QuadOptions,
}

/// Construction plus its nine mollified vertices, ready for evaluation.
pub struct PyramidAssembly {
    pub construction: PyramidConstruction,
    pub vertices: Vec<SmoothedVertex>,
}

impl PyramidAssembly {
    /// Builds the strips and mollifies every vertex ball.
    pub fn assemble(h: f64) -> Result<PyramidAssembly> {
        let construction = PyramidConstruction::build(h)?;
        let vertices = PyramidConstruction::vertex_centers()
            .par_iter()
            .map(|&z| vertex_smooth(&|x| construction.w(x), z, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(PyramidAssembly {
            construction,
            vertices,
        })
    }

    /// Deflection with strip and ball smoothing applied.
    pub fn w(&self, x: [f64; 2]) -> f64 {
        for sv in &self.vertices {
            if sv.contains(x) {
                return sv.w(x);
            }
        }
        self.construction.w(x)
    }

    /// Integrates all strip windows and vertex balls.
    pub fn energy(&self, opts: &PyramidOptions) -> Result<PyramidEnergy> {
        let h = self.construction.h;
        let patches = self
            .construction
            .patches
            .par_iter()
            .map(|bp| -> Result<PatchReport> {
                let pe = patch_energy(&bp.map, h, &opts.quad)?;
                Ok(PatchReport {
                    a: bp.spec.a,
                    c: bp.spec.c,
                    l: bp.patch.l,
                    tau: bp.patch.tau,
                    a7: bp.patch.coeffs[6],
                    a8: bp.patch.coeffs[7],
                    on_sigma: bp.spec.on_sigma,
                    membrane: pe.membrane,
                    bending: pe.bending,
                    refine_rel: pe.refine_rel,
                    converged: pe.converged,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let vertex_balls: Vec<BallReport> = self
            .vertices
            .par_iter()
            .map(|sv| ball_energy(&self.construction, sv))
            .collect();

        let membrane = patches.iter().map(|p| p.membrane).sum::<f64>()
            + vertex_balls.iter().map(|b| b.membrane).sum::<f64>();
        let bending = patches.iter().map(|p| p.bending).sum::<f64>()
            + vertex_balls.iter().map(|b| b.bending).sum::<f64>();
        let converged = patches.iter().all(|p| p.converged);
        Ok(PyramidEnergy {
            h,
            membrane,
            bending,
            total: membrane + bending,
            converged,
            patches,
            vertex_balls,
        })
    }
}

/// Builds the smoothed pyramid at thickness `h` and integrates its energy.
pub fn pyramid_energy(h: f64, opts: &PyramidOptions) -> Result<PyramidEnergy> {
    PyramidAssembly::assemble(h)?.energy(opts)
}
