//! Deterministic quadrature of the flatland integrals.
//!
//! The light A integral is done in closed form: the integrand is a rational
//! function of the emitter coordinates, and the strip shadow removes an
//! interval of `x2.x` that is found geometrically. Light B is only seen
//! through the hole, so its contribution is integrated over the hole disk
//! and projected onto the emitter. None of this uses the path samplers.

use crate::scene::FlatScene;
use cmlt_core::Rgb;
use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use std::f64::consts::TAU;

pub struct Quadrature {
    scene: FlatScene,
    radial: GaussLegendre,
    angular: usize,
}

/// Antiderivative of `(c0 + c1 u + c2 u^2) / (u^2 + k^2)`.
fn rational(u: f64, k: f64, c: [f64; 3]) -> f64 {
    let at = (u / k).atan();
    c[0] / k * at + 0.5 * c[1] * (u * u + k * k).ln() + c[2] * (u - k * at)
}

impl Quadrature {
    pub fn new(scene: FlatScene) -> Self {
        Self { scene, radial: GaussLegendre::new(16).expect("degree >= 2"), angular: 64 }
    }

    /// Ranges of `x2.x` on light A that the strip does not shadow from
    /// ground point `(x, y)`.
    fn light_a_intervals(&self, x: f64, y: f64) -> Vec<(f64, f64)> {
        let s = &self.scene;
        if y <= s.strip_y {
            return vec![(0.0, 1.0)];
        }
        let k = s.strip_y / y;
        let lo = (s.strip_x[0] - x * k) / (1.0 - k);
        let hi = (s.strip_x[1] - x * k) / (1.0 - k);
        let mut out = Vec::new();
        if lo > 0.0 {
            out.push((0.0, lo.min(1.0)));
        }
        if hi < 1.0 {
            out.push((hi.max(0.0), 1.0));
        }
        out
    }

    /// Integral over light A of the contribution at ground point `(x, y)`.
    pub fn light_a(&self, x: f64, y: f64) -> Rgb {
        let s = &self.scene;
        if s.light_a_scale == 0.0 || y <= 0.0 {
            return Rgb::BLACK;
        }
        // Integrating E(a) b y / (c + b^2)^2 over b in [0,1] with
        // c = (a - x)^2 + y^2 leaves E(a) y / 2 (1 / c - 1 / (c + 1)).
        let k0 = y;
        let k1 = (y * y + 1.0).sqrt();
        let red = [1.0 + 9.0 * x, 9.0, 0.0];
        let other = [x + 9.0 * x * x, 1.0 + 18.0 * x, 9.0];
        let integral = |c: [f64; 3], a0: f64, a1: f64| {
            let f = |u: f64| rational(u, k0, c) - rational(u, k1, c);
            f(a1 - x) - f(a0 - x)
        };
        let (mut r, mut g) = (0.0, 0.0);
        for (a0, a1) in self.light_a_intervals(x, y) {
            r += integral(red, a0, a1);
            g += integral(other, a0, a1);
        }
        let w = 0.5 * y * s.light_a_scale;
        Rgb::new(r * w, g * w, g * w)
    }

    /// Integral of the green contribution of light B at `(x, y)`.
    pub fn light_b(&self, x: f64, y: f64) -> f64 {
        let s = &self.scene;
        if y >= s.blocker_y || s.light_b_green == 0.0 {
            return 0.0;
        }
        let dy = s.light_b_y - y;
        // Hole point h projects to x2 = x1 + t (h - x1) on the emitter.
        let t = dy / (s.blocker_y - y);
        let rr = s.hole_radius;
        let mut sum = 0.0;
        let radial = self.radial.nodes().zip(self.radial.weights()).map(|(n, w)| (0.5 * rr * (n + 1.0), 0.5 * rr * w));
        for (r, wr) in radial {
            for k in 0..self.angular {
                let phi = TAU * (k as f64 + 0.5) / self.angular as f64;
                let hx = s.hole_center[0] + r * phi.cos();
                let hz = s.hole_center[1] + r * phi.sin();
                let x2 = x + t * (hx - x);
                let z2 = t * hz;
                if !(0.0..=1.0).contains(&x2) || !(0.0..=1.0).contains(&z2) {
                    continue;
                }
                if self.strip_blocks(x, y, x2, z2) {
                    continue;
                }
                let d2 = (x2 - x).powi(2) + dy * dy + z2 * z2;
                let g = z2 * dy / (d2 * d2);
                sum += wr * r * (TAU / self.angular as f64) * t * t * g;
            }
        }
        s.light_b_green * sum
    }

    fn strip_blocks(&self, x: f64, y: f64, x2: f64, z2: f64) -> bool {
        let s = &self.scene;
        if y >= s.strip_y {
            return false;
        }
        let l = (s.strip_y - y) / (s.light_b_y - y);
        let xs = x + l * (x2 - x);
        xs >= s.strip_x[0] && xs <= s.strip_x[1] && l * z2 <= 1.0
    }

    /// Full color integral over the emitters at ground point `(x, z)`.
    pub fn irradiance(&self, x: f64, y: f64) -> Rgb {
        self.light_a(x, y) + Rgb::new(0.0, self.light_b(x, y), 0.0)
    }

    /// Integral of the scalar contribution (largest channel per path).
    pub fn star(&self, x: f64, y: f64) -> f64 {
        self.light_a(x, y).r + self.light_b(x, y)
    }

    /// Integrals of the scalar contribution over each cell of a
    /// `bins x bins` grid on the ground, row-major with `y` as the row.
    pub fn star_bins(&self, bins: usize, order: usize) -> Vec<f64> {
        self.cell_integrals(bins, order, |x, z| self.star(x, z))
    }

    /// Mean over the ground of the full color integral.
    pub fn mean_irradiance(&self, cells: usize, order: usize) -> Rgb {
        let r = self.cell_integrals(cells, order, |x, z| self.light_a(x, z).r);
        let g = self.cell_integrals(cells, order, |x, z| self.irradiance(x, z).g);
        let b = self.cell_integrals(cells, order, |x, z| self.light_a(x, z).b);
        Rgb::new(r.iter().sum(), g.iter().sum(), b.iter().sum()) * (1.0 / self.scene.ground_area())
    }

    fn cell_integrals<F>(&self, bins: usize, order: usize, f: F) -> Vec<f64>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let gl = GaussLegendre::new(order.max(2)).expect("degree >= 2");
        let pts: Vec<(f64, f64)> = gl.nodes().zip(gl.weights()).map(|(&n, &w)| (n, w)).collect();
        let cell = 1.0 / bins as f64;
        (0..bins * bins)
            .into_par_iter()
            .map(|i| {
                let (bx, bz) = ((i % bins) as f64 * cell, (i / bins) as f64 * cell);
                let mut sum = 0.0;
                for &(nx, wx) in &pts {
                    for &(nz, wz) in &pts {
                        let x = bx + 0.5 * cell * (nx + 1.0);
                        let z = bz + 0.5 * cell * (nz + 1.0);
                        sum += 0.25 * cell * cell * wx * wz * f(x, z);
                    }
                }
                sum
            })
            .collect()
    }
}
