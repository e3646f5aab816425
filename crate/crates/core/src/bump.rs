//! Smooth cutoffs and the compactly supported mollification kernel.
//!
//! Everything here is built from `exp(-1/z)`: a monotone step that is flat
//! to all orders at 0 and 1, a bump supported on (-1, 1), and a plateau
//! kernel that is constant on [-0.6, 0.6] and decays to zero at |y| = 1.
//! The kernel is stored as a Chebyshev series rescaled to unit mass, and its
//! primitives (cumulative distribution, first moment, mollified |x|) are
//! exact coefficient operations on that series, so endpoint identities like
//! `cdf(1) = 1` hold to rounding error rather than to fit error.

use crate::cheb::Cheb;
use crate::quadrature::integrate_adaptive;
use std::sync::OnceLock;

/// `exp(-1/z)` continued by zero for z <= 0.
fn exp_recip(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        (-1.0 / z).exp()
    }
}

/// Monotone step: 0 for z <= 0, 1 for z >= 1, flat to all orders at both ends.
pub fn smooth_step(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let a = exp_recip(z);
        a / (a + exp_recip(1.0 - z))
    }
}

// smooth_step = 1/(1 + exp(g)) with g(z) = 1/z - 1/(1-z); the logistic
// factor s(1-s) kills the 1/z^k poles of g', g'' at both endpoints.
fn step_core(z: f64) -> (f64, f64, f64) {
    let s = smooth_step(z);
    let v = s * (1.0 - s);
    if v == 0.0 {
        return (s, 0.0, 0.0);
    }
    let zi = 1.0 / z;
    let wi = 1.0 / (1.0 - z);
    let dg = -zi * zi - wi * wi;
    let ddg = 2.0 * (zi * zi * zi - wi * wi * wi);
    let d1 = -dg * v;
    let d2 = -ddg * v + dg * dg * v * (1.0 - 2.0 * s);
    (s, d1, d2)
}

/// First derivative of `smooth_step`.
pub fn smooth_step_d(z: f64) -> f64 {
    step_core(z).1
}

/// Second derivative of `smooth_step`.
pub fn smooth_step_dd(z: f64) -> f64 {
    step_core(z).2
}

/// Bump `exp(-1/(1-y^2))` on (-1, 1), zero outside.
pub fn unit_bump(y: f64) -> f64 {
    let s = 1.0 - y * y;
    if s <= 0.0 {
        return 0.0;
    }
    (-1.0 / s).exp()
}

/// First derivative of `unit_bump`.
pub fn unit_bump_d(y: f64) -> f64 {
    let b = unit_bump(y);
    if b == 0.0 {
        return 0.0;
    }
    let s = 1.0 - y * y;
    b * (-2.0 * y / (s * s))
}

/// Second derivative of `unit_bump`.
pub fn unit_bump_dd(y: f64) -> f64 {
    let b = unit_bump(y);
    if b == 0.0 {
        return 0.0;
    }
    let s = 1.0 - y * y;
    let q = -2.0 * y / (s * s);
    b * (q * q - 2.0 / (s * s) - 8.0 * y * y / (s * s * s))
}

/// Unit-mass plateau kernel on [-1, 1] together with its primitives and the
/// scalar integrals that recur in profile constructions.
pub struct Kernel {
    phi: Cheb,
    dphi: Cheb,
    ddphi: Cheb,
    cdf: Cheb,
    first_moment: Cheb,
    /// Integral of `phi^2` over [-1, 1].
    pub int_phi_sq: f64,
    /// Integral of `phi'^2` over [-1, 1].
    pub int_dphi_sq: f64,
    /// Integral of `mabs_d^2` over [-1, 1].
    pub int_mabs_d_sq: f64,
    /// Integral of `mabs_d * phi'` over [-1, 1]; close to `-2 int_phi_sq`
    /// but stored exactly as integrated, since the fitted kernel does not
    /// vanish identically at the support ends.
    pub int_mabs_d_phi_d: f64,
}

static KERNEL: OnceLock<Kernel> = OnceLock::new();

impl Kernel {
    /// The shared kernel instance; built once on first use.
    pub fn get() -> &'static Kernel {
        KERNEL.get_or_init(Kernel::build)
    }

    fn build() -> Kernel {
        let raw = |y: f64| smooth_step((1.0 - y.abs()) / 0.4);
        let mut phi = Cheb::fit(-1.0, 1.0, 240, raw);
        // the kernel is even; zeroing odd coefficients makes the symmetry and
        // the vanishing first moment exact in the representation
        let even: Vec<f64> = phi
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 0 { c } else { 0.0 })
            .collect();
        phi = Cheb::from_coeffs(-1.0, 1.0, even);
        let mass = phi.integral();
        phi.scale(1.0 / mass);

        let dphi = phi.derivative();
        let ddphi = dphi.derivative();
        let cdf = phi.antiderivative();
        let first_moment = phi.mul_x().antiderivative();

        let pe = |s: f64| phi.eval(s);
        let de = |s: f64| dphi.eval(s);
        let me = |s: f64| 2.0 * cdf.eval(s) - 1.0;
        let pts = [-1.0, -0.6, 0.6, 1.0];
        let int_phi_sq = integrate_adaptive(&|s| pe(s) * pe(s), &pts, 1e-14);
        let int_dphi_sq = integrate_adaptive(&|s| de(s) * de(s), &pts, 1e-14);
        let int_mabs_d_sq = integrate_adaptive(&|s| me(s) * me(s), &pts, 1e-14);
        let int_mabs_d_phi_d = integrate_adaptive(&|s| me(s) * de(s), &pts, 1e-14);

        Kernel {
            phi,
            dphi,
            ddphi,
            cdf,
            first_moment,
            int_phi_sq,
            int_dphi_sq,
            int_mabs_d_sq,
            int_mabs_d_phi_d,
        }
    }

    /// Kernel value; zero outside [-1, 1].
    pub fn phi(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.phi.eval(s)
        }
    }

    /// Kernel derivative; zero outside [-1, 1].
    pub fn dphi(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.dphi.eval(s)
        }
    }

    /// Kernel second derivative; zero outside [-1, 1].
    pub fn ddphi(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.ddphi.eval(s)
        }
    }

    /// Cumulative mass from the left; 0 below -1, 1 above +1.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= -1.0 {
            0.0
        } else if s >= 1.0 {
            1.0
        } else {
            self.cdf.eval(s)
        }
    }

    /// Kernel-mollified |s|: equals |s| outside [-1, 1], smooth inside.
    pub fn mabs(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            s.abs()
        } else {
            s * (2.0 * self.cdf.eval(s) - 1.0) - 2.0 * self.first_moment.eval(s)
        }
    }

    /// Derivative of `mabs`: the sign function mollified through the kernel.
    pub fn mabs_d(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            s.signum()
        } else {
            2.0 * self.cdf.eval(s) - 1.0
        }
    }

    /// Second derivative of `mabs`.
    pub fn mabs_dd(&self, s: f64) -> f64 {
        2.0 * self.phi(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_ends_are_exact_and_interior_monotone() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert_relative_eq!(smooth_step(0.5), 0.5, epsilon = 1e-15);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = smooth_step(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn step_is_symmetric() {
        for i in 1..50 {
            let z = i as f64 / 50.0;
            assert_relative_eq!(
                smooth_step(z) + smooth_step(1.0 - z),
                1.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let e = 1e-6;
        for &y in &[-0.9, -0.5, -0.1, 0.0, 0.3, 0.7, 0.95] {
            let fd1 = (unit_bump(y + e) - unit_bump(y - e)) / (2.0 * e);
            assert_relative_eq!(unit_bump_d(y), fd1, epsilon = 1e-9, max_relative = 1e-6);
            let fd2 = (unit_bump(y + e) - 2.0 * unit_bump(y) + unit_bump(y - e)) / (e * e);
            assert_relative_eq!(unit_bump_dd(y), fd2, epsilon = 1e-4, max_relative = 1e-3);
        }
        assert_eq!(unit_bump_d(1.0), 0.0);
        assert_eq!(unit_bump_dd(-1.0), 0.0);
    }

    #[test]
    fn kernel_has_unit_mass_and_exact_primitive_endpoints() {
        let k = Kernel::get();
        assert_relative_eq!(k.cdf(-1.0), 0.0, epsilon = 1e-14);
        assert_relative_eq!(k.cdf(1.0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(k.cdf(0.0), 0.5, epsilon = 1e-13);
        assert_relative_eq!(k.mabs(1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(k.mabs(-1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(k.mabs_d(1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(k.mabs_d(-1.0), -1.0, epsilon = 1e-13);
    }

    #[test]
    fn kernel_second_derivative_matches_finite_differences() {
        let k = Kernel::get();
        let e = 1e-6;
        for &s in &[-0.95, -0.7, -0.3, 0.0, 0.4, 0.8, 0.97] {
            let fd = (k.dphi(s + e) - k.dphi(s - e)) / (2.0 * e);
            assert_relative_eq!(k.ddphi(s), fd, epsilon = 1e-5, max_relative = 1e-5);
        }
        assert_eq!(k.ddphi(1.0), 0.0);
        assert_eq!(k.ddphi(-1.3), 0.0);
    }

    #[test]
    fn kernel_fit_is_converged_and_even() {
        let k = Kernel::get();
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            assert_relative_eq!(k.phi(s), k.phi(-s), epsilon = 1e-13);
        }
        // plateau region is flat at the normalized height up to fit error
        let height = k.phi(0.0);
        for &s in &[0.1, 0.3, 0.55] {
            assert_relative_eq!(k.phi(s), height, epsilon = 1e-8, max_relative = 1e-8);
        }
        assert!(k.phi(0.999).abs() < 1e-6);
    }

    #[test]
    fn kernel_scalars_have_expected_magnitudes() {
        let k = Kernel::get();
        // unit-mass density on [-1, 1] has squared norm at least 1/2
        assert!(k.int_phi_sq > 0.5 && k.int_phi_sq < 1.0);
        assert!(k.int_dphi_sq > 0.0 && k.int_dphi_sq < 10.0);
        // |mabs_d| < 1 strictly inside the support
        assert!(k.int_mabs_d_sq > 0.0 && k.int_mabs_d_sq < 2.0);
        // integration by parts gives -2 int_phi_sq up to the residual kernel
        // values at the support ends
        assert_relative_eq!(
            k.int_mabs_d_phi_d,
            -2.0 * k.int_phi_sq,
            max_relative = 1e-6
        );
    }

    #[test]
    fn mollified_abs_glues_smoothly_to_abs() {
        let k = Kernel::get();
        for &s in &[1.0, 1.5, -1.2, -1.0] {
            assert_eq!(k.mabs(s), s.abs());
            assert_eq!(k.mabs_d(s), s.signum());
            assert_eq!(k.mabs_dd(s), 0.0);
        }
        // value continuity just inside the glue points
        assert_relative_eq!(k.mabs(1.0 - 1e-9), 1.0, epsilon = 1e-8);
        assert_relative_eq!(k.mabs_d(-1.0 + 1e-9), -1.0, epsilon = 1e-8);
    }

    #[test]
    fn mollified_abs_dominates_abs_inside() {
        // convexity of the mollification pushes mabs above |s|
        let k = Kernel::get();
        for i in 0..=20 {
            let s = -1.0 + 2.0 * i as f64 / 20.0;
            assert!(k.mabs(s) >= s.abs() - 1e-13);
        }
        assert!(k.mabs(0.0) > 0.1);
    }

    #[test]
    fn step_derivatives_match_finite_differences() {
        // finite differences are well conditioned only where the step is
        // not yet saturated near 1; the upper half is covered by symmetry
        let fd = |f: &dyn Fn(f64) -> f64, z: f64, e: f64| (f(z + e) - f(z - e)) / (2.0 * e);
        for i in 1..=28 {
            let z = i as f64 / 40.0;
            let e = 1e-6;
            assert_relative_eq!(
                smooth_step_d(z),
                fd(&smooth_step, z, e),
                max_relative = 1e-6,
                epsilon = 1e-12
            );
            // the absolute floor covers finite-difference roundoff near the
            // symmetric point z = 1/2 where the second derivative vanishes
            assert_relative_eq!(
                smooth_step_dd(z),
                fd(&smooth_step_d, z, e),
                max_relative = 1e-5,
                epsilon = 1e-8
            );
        }
        for i in 1..40 {
            let z = i as f64 / 40.0;
            // the absolute floor covers saturation: deep in the tails one
            // side rounds to exactly 1 and reports a zero derivative
            assert_relative_eq!(
                smooth_step_d(z),
                smooth_step_d(1.0 - z),
                max_relative = 1e-7,
                epsilon = 1e-12
            );
            assert_relative_eq!(
                smooth_step_dd(z),
                -smooth_step_dd(1.0 - z),
                max_relative = 1e-7,
                epsilon = 1e-8
            );
        }
        // flat continuation outside (0, 1)
        assert_eq!(smooth_step_d(0.0), 0.0);
        assert_eq!(smooth_step_d(1.0), 0.0);
        assert_eq!(smooth_step_dd(-0.5), 0.0);
        assert_eq!(smooth_step_dd(1.5), 0.0);
    }
}
