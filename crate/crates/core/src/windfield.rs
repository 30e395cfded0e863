//! Planar spatio-temporal wind: mean flow, frozen Von Kármán turbulence
//! advected with the mean flow, and deterministic one-minus-cosine gusts.
//!
//! Protected areas are modelled as rectangles in which the wind is exactly
//! zero, optionally blended to the free-stream value over an edge band.

use crate::geom::Vec2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindError {
    #[error("turbulence grid size {0} is not a power of two")]
    InvalidGrid(usize),
    #[error("invalid wind parameter: {0}")]
    InvalidParams(String),
}

fn default_spreading() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceParams {
    /// Turbulence intensity (standard deviation per component) [m/s].
    pub sigma: f64,
    /// Von Kármán length scale [m].
    pub length_scale: f64,
    /// Cells per side; must be a power of two.
    pub grid_size: usize,
    /// Cell size [m].
    pub cell: f64,
    /// RNG seed; scenarios replace it with the run seed.
    #[serde(default)]
    pub seed: u64,
    /// Exponent `s` of the `cos^(2s)(theta/2)` spreading function.
    #[serde(default = "default_spreading")]
    pub spreading_exponent: f64,
    /// Principal direction of the spreading function [rad]. Overridden by the
    /// mean-wind direction when the field has a non-zero mean.
    #[serde(default)]
    pub heading: f64,
}

impl TurbulenceParams {
    pub fn validate(&self) -> Result<(), WindError> {
        if self.grid_size < 2 || !self.grid_size.is_power_of_two() {
            return Err(WindError::InvalidGrid(self.grid_size));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(WindError::InvalidParams(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.length_scale > 0.0) || !self.length_scale.is_finite() {
            return Err(WindError::InvalidParams(format!("length_scale must be > 0, got {}", self.length_scale)));
        }
        if !(self.cell > 0.0) || !self.cell.is_finite() {
            return Err(WindError::InvalidParams(format!("cell must be > 0, got {}", self.cell)));
        }
        if !(self.spreading_exponent >= 0.0) {
            return Err(WindError::InvalidParams("spreading_exponent must be >= 0".into()));
        }
        Ok(())
    }
}

/// One-sided Von Kármán spectrum of a single velocity component,
/// `sigma^2 (2L/pi) / (1 + (1.339 L k)^2)^(5/6)`; integrates to `sigma^2`.
pub fn von_karman_psd(sigma: f64, length_scale: f64, k: f64) -> f64 {
    sigma * sigma * (2.0 * length_scale / PI)
        / (1.0 + (1.339 * length_scale * k).powi(2)).powf(5.0 / 6.0)
}

/// Angular spreading `cos^(2s)(theta/2)` normalized to unit integral over a full turn.
#[derive(Debug, Clone, Copy)]
pub struct Spreading {
    exponent: f64,
    norm: f64,
}

impl Spreading {
    pub fn new(exponent: f64) -> Self {
        // The integrand is smooth and periodic, so the midpoint rule converges spectrally.
        let n = 4096;
        let h = 2.0 * PI / n as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let th = -PI + (i as f64 + 0.5) * h;
                (th / 2.0).cos().abs().powf(2.0 * exponent)
            })
            .sum::<f64>()
            * h;
        Self { exponent, norm: integral }
    }

    pub fn density(&self, theta: f64) -> f64 {
        (theta / 2.0).cos().abs().powf(2.0 * self.exponent) / self.norm
    }

    /// Point-symmetric part `(D(theta) + D(theta + pi)) / 2`; the spectrum of a
    /// real field can only carry this part.
    pub fn symmetric_density(&self, theta: f64) -> f64 {
        0.5 * (self.density(theta) + self.density(theta + PI))
    }
}

/// Periodic two-component turbulence grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbulenceGrid {
    pub n: usize,
    pub cell: f64,
    /// Row-major (`index = iy * n + ix`) x-component.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl TurbulenceGrid {
    pub fn at(&self, ix: usize, iy: usize) -> Vec2 {
        let k = iy * self.n + ix;
        Vec2::new(self.u[k], self.v[k])
    }

    /// Bilinear interpolation with periodic wrap.
    pub fn sample(&self, p: &Vec2) -> Vec2 {
        let n = self.n as f64;
        let gx = (p.x / self.cell).rem_euclid(n);
        let gy = (p.y / self.cell).rem_euclid(n);
        let x0 = gx.floor();
        let y0 = gy.floor();
        let fx = gx - x0;
        let fy = gy - y0;
        let i0 = (x0 as usize) % self.n;
        let j0 = (y0 as usize) % self.n;
        let i1 = (i0 + 1) % self.n;
        let j1 = (j0 + 1) % self.n;
        self.at(i0, j0) * ((1.0 - fx) * (1.0 - fy))
            + self.at(i1, j0) * (fx * (1.0 - fy))
            + self.at(i0, j1) * ((1.0 - fx) * fy)
            + self.at(i1, j1) * (fx * fy)
    }
}

fn signed_index(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Spectral synthesis of a frozen turbulence grid.
///
/// Each Fourier mode gets an independent complex Gaussian amplitude with
/// variance `S(k) dk^2`, where `S = Phi(|k|) D_sym(theta) / |k|` is the polar
/// density of the Von Kármán spectrum shaped by the spreading function.
/// Amplitudes are Hermitian-symmetrized and inverse transformed; the two
/// velocity components are drawn independently.
pub fn synthesize_turbulence(params: &TurbulenceParams) -> Result<TurbulenceGrid, WindError> {
    params.validate()?;
    let n = params.grid_size;
    if params.sigma == 0.0 {
        return Ok(TurbulenceGrid { n, cell: params.cell, u: vec![0.0; n * n], v: vec![0.0; n * n] });
    }
    let dk = 2.0 * PI / (n as f64 * params.cell);
    let spreading = Spreading::new(params.spreading_exponent);

    let mut amp = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let kx = signed_index(i, n) * dk;
            let ky = signed_index(j, n) * dk;
            let k = kx.hypot(ky);
            if k == 0.0 {
                continue;
            }
            let theta = ky.atan2(kx) - params.heading;
            let s = von_karman_psd(params.sigma, params.length_scale, k) * spreading.symmetric_density(theta) / k;
            amp[j * n + i] = s.sqrt() * dk;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut component = || -> Vec<f64> {
        let mut spec = vec![Complex::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                let pi_ = (n - i) % n;
                let pj = (n - j) % n;
                let pidx = pj * n + pi_;
                if pidx < idx {
                    continue;
                }
                let a = amp[idx];
                if pidx == idx {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    spec[idx] = Complex::new(a * z, 0.0);
                } else {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let c = Complex::new(re, im) * (a / 2f64.sqrt());
                    spec[idx] = c;
                    spec[pidx] = c.conj();
                }
            }
        }
        // rows
        for row in spec.chunks_mut(n) {
            fft.process(row);
        }
        // columns
        let mut col = vec![Complex::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                col[j] = spec[j * n + i];
            }
            fft.process(&mut col);
            for j in 0..n {
                spec[j * n + i] = col[j];
            }
        }
        spec.iter().map(|c| c.re).collect()
    };
    let u = component();
    let v = component();
    Ok(TurbulenceGrid { n, cell: params.cell, u, v })
}

/// Deterministic one-minus-cosine gust travelling along its direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GustEvent {
    /// Peak gust speed [m/s].
    pub amplitude: f64,
    /// Unit direction of the gust velocity and of front propagation.
    pub direction: Vec2,
    pub t_start: f64,
    pub duration: f64,
    /// Point at which the front arrives at `t_start`.
    #[serde(default = "Vec2::zeros")]
    pub origin: Vec2,
    /// Front propagation speed [m/s]; non-positive means the front arrives everywhere at once.
    #[serde(default)]
    pub propagation_speed: f64,
    /// Full width of the front across the propagation direction [m]; unbounded when absent.
    #[serde(default)]
    pub front_width: Option<f64>,
}

impl GustEvent {
    pub fn validate(&self) -> Result<(), WindError> {
        if !(self.amplitude >= 0.0) {
            return Err(WindError::InvalidParams("gust amplitude must be >= 0".into()));
        }
        if !(self.duration > 0.0) {
            return Err(WindError::InvalidParams("gust duration must be > 0".into()));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(WindError::InvalidParams("gust direction must be a unit vector".into()));
        }
        if let Some(w) = self.front_width {
            if !(w > 0.0) {
                return Err(WindError::InvalidParams("gust front_width must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn arrival_time(&self, p: &Vec2) -> f64 {
        if self.propagation_speed > 0.0 {
            self.t_start + (p - self.origin).dot(&self.direction) / self.propagation_speed
        } else {
            self.t_start
        }
    }

    fn lateral_envelope(&self, p: &Vec2) -> f64 {
        let Some(w) = self.front_width else { return 1.0 };
        let d = p - self.origin;
        let lat = (self.direction.x * d.y - self.direction.y * d.x).abs();
        let half = 0.5 * w;
        let taper = 0.25 * w;
        if lat <= half {
            1.0
        } else if lat >= half + taper {
            0.0
        } else {
            0.5 * (1.0 + (PI * (lat - half) / taper).cos())
        }
    }
}

/// Gust velocity contributed by `event` at position `p` and time `t`.
pub fn gust_profile(event: &GustEvent, p: &Vec2, t: f64) -> Vec2 {
    let tau = t - event.arrival_time(p);
    if tau < 0.0 || tau > event.duration {
        return Vec2::zeros();
    }
    let envelope = 0.5 * (1.0 - (2.0 * PI * tau / event.duration).cos());
    event.direction * (event.amplitude * envelope * event.lateral_envelope(p))
}

/// Axis-aligned protected area with zero wind inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskRegion {
    pub min: Vec2,
    pub max: Vec2,
    /// Width of the band outside the rectangle over which wind ramps up [m].
    #[serde(default)]
    pub edge: f64,
}

impl MaskRegion {
    /// Multiplier on the free-stream wind: 0 inside, smoothstep across the edge band, 1 beyond.
    pub fn factor(&self, p: &Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        let d = dx.hypot(dy);
        if d == 0.0 {
            0.0
        } else if d >= self.edge {
            1.0
        } else {
            let s = d / self.edge;
            s * s * (3.0 - 2.0 * s)
        }
    }
}

/// Serializable description of a wind field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub mean: Vec2,
    pub turbulence: Option<TurbulenceParams>,
    pub gusts: Vec<GustEvent>,
    pub masks: Vec<MaskRegion>,
}

#[derive(Debug, Clone)]
pub struct WindField {
    pub mean: Vec2,
    pub turbulence: Option<TurbulenceGrid>,
    pub gusts: Vec<GustEvent>,
    pub masks: Vec<MaskRegion>,
}

impl WindField {
    pub fn calm() -> Self {
        Self { mean: Vec2::zeros(), turbulence: None, gusts: Vec::new(), masks: Vec::new() }
    }

    pub fn uniform(mean: Vec2) -> Self {
        Self { mean, ..Self::calm() }
    }

    pub fn build(cfg: &WindConfig) -> Result<Self, WindError> {
        for g in &cfg.gusts {
            g.validate()?;
        }
        for m in &cfg.masks {
            if !(m.min.x <= m.max.x && m.min.y <= m.max.y) || !(m.edge >= 0.0) {
                return Err(WindError::InvalidParams("mask needs min <= max and edge >= 0".into()));
            }
        }
        let turbulence = match &cfg.turbulence {
            Some(tp) => {
                let mut tp = tp.clone();
                if cfg.mean.norm() > 0.0 {
                    tp.heading = cfg.mean.y.atan2(cfg.mean.x);
                }
                Some(synthesize_turbulence(&tp)?)
            }
            None => None,
        };
        Ok(Self { mean: cfg.mean, turbulence, gusts: cfg.gusts.clone(), masks: cfg.masks.clone() })
    }

    fn mask_factor(&self, p: &Vec2) -> f64 {
        self.masks.iter().map(|m| m.factor(p)).fold(1.0, f64::min)
    }

    /// Wind velocity at planar position `p` and time `t`.
    pub fn sample(&self, p: &Vec2, t: f64) -> Vec2 {
        let factor = self.mask_factor(p);
        if factor == 0.0 {
            return Vec2::zeros();
        }
        let mut w = self.mean;
        if let Some(grid) = &self.turbulence {
            // Taylor frozen field: the pattern is carried by the mean flow.
            w += grid.sample(&(p - self.mean * t));
        }
        for g in &self.gusts {
            w += gust_profile(g, p, t);
        }
        w * factor
    }

    /// Sampled field as CSV rows `x,y,u,v` on a regular grid.
    pub fn grid_csv(&self, min: Vec2, max: Vec2, step: f64, t: f64) -> String {
        let mut out = String::from("x,y,u,v\n");
        let nx = ((max.x - min.x) / step).floor() as usize + 1;
        let ny = ((max.y - min.y) / step).floor() as usize + 1;
        for j in 0..ny {
            for i in 0..nx {
                let p = Vec2::new(min.x + i as f64 * step, min.y + j as f64 * step);
                let w = self.sample(&p, t);
                let _ = writeln!(out, "{:.3},{:.3},{:.6},{:.6}", p.x, p.y, w.x, w.y);
            }
        }
        out
    }
}

/// Convenience wrapper matching the free-function form used elsewhere.
pub fn sample_wind(field: &WindField, p: &Vec2, t: f64) -> Vec2 {
    field.sample(p, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(sigma: f64, seed: u64) -> TurbulenceParams {
        TurbulenceParams {
            sigma,
            length_scale: 50.0,
            grid_size: 64,
            cell: 2.0,
            seed,
            spreading_exponent: 2.0,
            heading: 0.0,
        }
    }

    #[test]
    fn von_karman_integrates_to_variance() {
        // trapezoid on a log-spaced grid out to far beyond the -5/3 tail
        let (sigma, l) = (1.7, 40.0);
        let n = 200_000;
        let (a, b) = (1e-7f64.ln(), 1e4f64.ln());
        let h = (b - a) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let k0 = (a + i as f64 * h).exp();
            let k1 = (a + (i + 1) as f64 * h).exp();
            total += 0.5 * (von_karman_psd(sigma, l, k0) + von_karman_psd(sigma, l, k1)) * (k1 - k0);
        }
        // the k^-5/3 tail beyond 1e4 holds ~3 * (2L/pi) / (2 (1.339 L)^(5/3) k^(2/3)) of the variance
        assert!((total / (sigma * sigma) - 1.0).abs() < 2e-3, "{total}");
    }

    #[test]
    fn spreading_has_unit_integral() {
        for s in [0.0, 1.0, 2.0, 3.5] {
            let d = Spreading::new(s);
            let n = 10_000;
            let h = 2.0 * PI / n as f64;
            let total: f64 = (0..n).map(|i| d.symmetric_density(-PI + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
        // s = 2: integral of cos^4(theta/2) over a full turn is 3 pi / 4
        assert_abs_diff_eq!(Spreading::new(2.0).density(0.0), 4.0 / (3.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn zero_sigma_gives_zero_grid() {
        let g = synthesize_turbulence(&params(0.0, 3)).unwrap();
        assert!(g.u.iter().chain(g.v.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn same_seed_same_grid() {
        let a = synthesize_turbulence(&params(1.0, 11)).unwrap();
        let b = synthesize_turbulence(&params(1.0, 11)).unwrap();
        assert_eq!(a, b);
        let c = synthesize_turbulence(&params(1.0, 12)).unwrap();
        assert_ne!(a.u, c.u);
    }

    #[test]
    fn grid_is_zero_mean_and_real_valued() {
        let g = synthesize_turbulence(&params(1.0, 5)).unwrap();
        let mean_u: f64 = g.u.iter().sum::<f64>() / g.u.len() as f64;
        assert!(mean_u.abs() < 1e-12);
        assert!(g.u.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut p = params(1.0, 1);
        p.grid_size = 100;
        assert_eq!(synthesize_turbulence(&p), Err(WindError::InvalidGrid(100)));
    }

    #[test]
    fn bilinear_sample_hits_nodes_and_wraps() {
        let g = synthesize_turbulence(&params(1.0, 2)).unwrap();
        let node = g.at(3, 5);
        assert_abs_diff_eq!(g.sample(&Vec2::new(6.0, 10.0)), node, epsilon = 1e-12);
        let period = g.n as f64 * g.cell;
        assert_abs_diff_eq!(g.sample(&Vec2::new(6.0 + period, 10.0 - 2.0 * period)), node, epsilon = 1e-9);
        let mid = g.sample(&Vec2::new(7.0, 10.0));
        assert_abs_diff_eq!(mid, (g.at(3, 5) + g.at(4, 5)) * 0.5, epsilon = 1e-12);
    }

    fn gust() -> GustEvent {
        GustEvent {
            amplitude: 18.0,
            direction: Vec2::new(0.0, 1.0),
            t_start: 5.0,
            duration: 10.0,
            origin: Vec2::new(0.0, -20.0),
            propagation_speed: 10.0,
            front_width: None,
        }
    }

    #[test]
    fn gust_envelope() {
        let g = gust();
        let p = Vec2::new(3.0, 0.0);
        let t_arr = 5.0 + 20.0 / 10.0;
        assert_eq!(gust_profile(&g, &p, t_arr - 0.01), Vec2::zeros());
        assert_abs_diff_eq!(gust_profile(&g, &p, t_arr + 5.0), Vec2::new(0.0, 18.0), epsilon = 1e-12);
        // 1/2 (1 - cos(pi/2)) = 1/2
        assert_abs_diff_eq!(gust_profile(&g, &p, t_arr + 2.5), Vec2::new(0.0, 9.0), epsilon = 1e-12);
        assert_eq!(gust_profile(&g, &p, t_arr + 10.01), Vec2::zeros());
    }

    #[test]
    fn gust_envelope_is_c1_at_both_ends() {
        let g = gust();
        let p = Vec2::zeros();
        let t_arr = g.arrival_time(&p);
        let h = 1e-4;
        for t in [t_arr, t_arr + g.duration] {
            let slope_in = (gust_profile(&g, &p, t + h) - gust_profile(&g, &p, t)).norm() / h;
            let slope_out = (gust_profile(&g, &p, t) - gust_profile(&g, &p, t - h)).norm() / h;
            assert!(slope_in < 1e-3 && slope_out < 1e-3);
        }
    }

    #[test]
    fn gust_front_width_limits_lateral_extent() {
        let mut g = gust();
        g.front_width = Some(20.0);
        let t = g.arrival_time(&Vec2::zeros()) + 5.0;
        assert_abs_diff_eq!(gust_profile(&g, &Vec2::new(9.0, 0.0), t).norm(), 18.0, epsilon = 1e-12);
        assert_eq!(gust_profile(&g, &Vec2::new(16.0, 0.0), t), Vec2::zeros());
        let mid = gust_profile(&g, &Vec2::new(12.5, 0.0), t).norm();
        assert!(mid > 0.0 && mid < 18.0);
    }

    #[test]
    fn calm_field_is_zero() {
        let w = WindField::calm();
        assert_eq!(w.sample(&Vec2::new(12.0, -3.0), 4.0), Vec2::zeros());
    }

    #[test]
    fn masked_region_is_exactly_zero() {
        let cfg = WindConfig {
            mean: Vec2::new(9.0, 0.0),
            turbulence: Some(params(1.0, 4)),
            gusts: vec![],
            masks: vec![MaskRegion { min: Vec2::new(-10.0, -10.0), max: Vec2::new(10.0, 10.0), edge: 4.0 }],
        };
        let w = WindField::build(&cfg).unwrap();
        assert_eq!(w.sample(&Vec2::new(0.0, 0.0), 3.0), Vec2::zeros());
        assert_eq!(w.sample(&Vec2::new(10.0, 10.0), 3.0), Vec2::zeros());
        let edge = w.sample(&Vec2::new(12.0, 0.0), 3.0);
        let free = w.sample(&Vec2::new(40.0, 0.0), 3.0);
        assert!(edge.norm() < free.norm() + 5.0);
        assert!(free.x > 3.0);
    }

    #[test]
    fn gust_peak_through_field() {
        let g = GustEvent { origin: Vec2::zeros(), propagation_speed: 0.0, t_start: 0.0, amplitude: 19.0, ..gust() };
        let w = WindField { gusts: vec![g], ..WindField::calm() };
        assert_abs_diff_eq!(w.sample(&Vec2::new(4.0, 4.0), 5.0).norm(), 19.0, epsilon = 1e-12);
    }

    #[test]
    fn frozen_field_advects_with_mean() {
        let cfg = WindConfig { mean: Vec2::new(5.0, 0.0), turbulence: Some(params(1.0, 9)), ..Default::default() };
        let w = WindField::build(&cfg).unwrap();
        let p = Vec2::new(3.0, 7.0);
        let a = w.sample(&p, 0.0);
        let b = w.sample(&(p + Vec2::new(5.0, 0.0) * 2.0), 2.0);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }

    #[test]
    fn grid_csv_layout() {
        let w = WindField::uniform(Vec2::new(1.0, 0.5));
        let csv = w.grid_csv(Vec2::zeros(), Vec2::new(2.0, 1.0), 1.0, 0.0);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,u,v");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert_eq!(lines[1], "0.000,0.000,1.000000,0.500000");
    }
}
