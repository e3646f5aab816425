//! Chebyshev series on an interval: fitting, evaluation, and calculus.
//!
//! A series is stored in the plain convention `p(x) = sum c_k T_k(t)` with
//! `t` the affine map of `x` onto [-1, 1]. Fitting samples the target at
//! first-kind Chebyshev points and projects with the discrete cosine sums,
//! which is enough accuracy for the modest degrees used here. Derivatives
//! and antiderivatives are exact coefficient recurrences, so primitives of a
//! fitted function are consistent with it to rounding error.

/// Chebyshev series on [a, b].
#[derive(Clone, Debug)]
pub struct Cheb {
    a: f64,
    b: f64,
    c: Vec<f64>,
}

impl Cheb {
    /// Fits a series of degree `n` to `f` on [a, b].
    pub fn fit<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Self {
        assert!(b > a, "empty interval");
        let m = n + 1;
        let mut samples = Vec::with_capacity(m);
        for k in 0..m {
            let theta = std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
            let t = theta.cos();
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            samples.push((theta, f(x)));
        }
        let mut c = vec![0.0; m];
        for (j, cj) in c.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (theta, fx) in &samples {
                acc += fx * (j as f64 * theta).cos();
            }
            *cj = acc * if j == 0 { 1.0 } else { 2.0 } / m as f64;
        }
        Cheb { a, b, c }
    }

    /// Builds a series from raw coefficients on [a, b].
    pub fn from_coeffs(a: f64, b: f64, c: Vec<f64>) -> Self {
        assert!(b > a && !c.is_empty());
        Cheb { a, b, c }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Largest |coefficient| among the trailing `k` entries; a convergence
    /// indicator for fitted series.
    pub fn tail_magnitude(&self, k: usize) -> f64 {
        let start = self.c.len().saturating_sub(k);
        self.c[start..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn to_t(&self, x: f64) -> f64 {
        (2.0 * x - self.a - self.b) / (self.b - self.a)
    }

    /// Evaluates the series by Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.to_t(x);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &ck in self.c.iter().rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        // undo the doubling of the final step
        b1 - t * b2
    }

    /// Scales all coefficients in place.
    pub fn scale(&mut self, s: f64) {
        for ck in &mut self.c {
            *ck *= s;
        }
    }

    /// Series of the derivative.
    pub fn derivative(&self) -> Cheb {
        let n = self.c.len();
        if n == 1 {
            return Cheb::from_coeffs(self.a, self.b, vec![0.0]);
        }
        let mut d = vec![0.0; n - 1];
        let mut dkp1 = 0.0; // d_{k+1}
        let mut dkp2 = 0.0; // d_{k+2}
        for k in (0..n - 1).rev() {
            let dk = dkp2 + 2.0 * (k as f64 + 1.0) * self.c[k + 1];
            dkp2 = dkp1;
            dkp1 = dk;
            d[k] = dk;
        }
        d[0] *= 0.5;
        let scale = 2.0 / (self.b - self.a);
        for dk in &mut d {
            *dk *= scale;
        }
        Cheb::from_coeffs(self.a, self.b, d)
    }

    /// Series of the antiderivative vanishing at the left endpoint.
    pub fn antiderivative(&self) -> Cheb {
        let n = self.c.len();
        let get = |k: usize| if k < n { self.c[k] } else { 0.0 };
        let mut aco = vec![0.0; n + 1];
        aco[1] = get(0) - 0.5 * get(2);
        for (m, a) in aco.iter_mut().enumerate().skip(2) {
            *a = (get(m - 1) - get(m + 1)) / (2.0 * m as f64);
        }
        let scale = 0.5 * (self.b - self.a);
        for a in aco.iter_mut().skip(1) {
            *a *= scale;
        }
        // fix the constant so the antiderivative vanishes at x = a (t = -1)
        let mut at_left = 0.0;
        let mut sign = -1.0;
        for a in aco.iter().skip(1) {
            at_left += sign * a;
            sign = -sign;
        }
        aco[0] = -at_left;
        Cheb::from_coeffs(self.a, self.b, aco)
    }

    /// Definite integral over the full interval.
    pub fn integral(&self) -> f64 {
        let mut acc = 0.0;
        for (k, ck) in self.c.iter().enumerate().step_by(2) {
            let kf = k as f64;
            acc += ck * 2.0 / (1.0 - kf * kf);
        }
        acc * 0.5 * (self.b - self.a)
    }

    /// Series of `x * p(x)` mapped through the interval's affine chart.
    pub fn mul_x(&self) -> Cheb {
        let n = self.c.len();
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.b - self.a);
        // x = mid + half * t and t*T_k = (T_{k+1} + T_{k-1}) / 2
        let mut out = vec![0.0; n + 1];
        for (k, &ck) in self.c.iter().enumerate() {
            out[k] += mid * ck;
            if k == 0 {
                out[1] += half * ck;
            } else {
                out[k + 1] += 0.5 * half * ck;
                out[k - 1] += 0.5 * half * ck;
            }
        }
        Cheb::from_coeffs(self.a, self.b, out)
    }
}
