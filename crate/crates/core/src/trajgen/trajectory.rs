//! Planar desired trajectory built from superposed heading and speed
//! sigmoids, with analytic derivatives through fourth order and cached
//! position quadrature.

use super::sigmoid::{fit_sigmoid, tau_min_heading, tau_min_speed, SegmentKind, SigmoidSegment};
use super::TrajError;
use crate::geom::{lift, Vec2, Vec3};

/// Five-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub p: Vec3,
    pub v: Vec3,
    pub a: Vec3,
    pub jerk: Vec3,
    pub snap: Vec3,
    /// Frame-local course angle [rad].
    pub heading: f64,
    /// Frame-local speed [m/s].
    pub speed: f64,
}

/// `p_d(t) = anchor + v_frame (t - t_a) + integral of v (cos phi, sin phi)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t_anchor: f64,
    pub anchor: Vec2,
    pub z: f64,
    /// Velocity of the planning frame relative to the inertial frame.
    pub frame_velocity: Vec2,
    pub phi0: f64,
    pub v0: f64,
    pub segments: Vec<SigmoidSegment>,
    knots: Vec<Vec2>,
    dt_cache: f64,
}

impl Trajectory {
    pub fn new(t_anchor: f64, anchor: Vec2, z: f64, phi0: f64, v0: f64, frame_velocity: Vec2, dt_cache: f64) -> Self {
        Self {
            t_anchor,
            anchor,
            z,
            frame_velocity,
            phi0,
            v0,
            segments: Vec::new(),
            knots: vec![Vec2::zeros()],
            dt_cache,
        }
    }

    /// Latest time at which any segment is still active.
    pub fn end_time(&self) -> f64 {
        self.segments.iter().map(|s| s.t_end()).fold(self.t_anchor, f64::max)
    }

    fn final_value(&self, kind: SegmentKind, base: f64) -> f64 {
        base + self.segments.iter().filter(|s| s.kind == kind).map(|s| s.delta()).sum::<f64>()
    }

    pub fn final_heading(&self) -> f64 {
        self.final_value(SegmentKind::Heading, self.phi0)
    }

    pub fn final_speed(&self) -> f64 {
        self.final_value(SegmentKind::Speed, self.v0)
    }

    fn jet(&self, kind: SegmentKind, base: f64, t: f64) -> [f64; 5] {
        let mut out = [base, 0.0, 0.0, 0.0, 0.0];
        for s in self.segments.iter().filter(|s| s.kind == kind) {
            let d = s.increment_jet(t);
            for k in 0..5 {
                out[k] += d[k];
            }
        }
        out
    }

    pub fn heading_jet(&self, t: f64) -> [f64; 5] {
        self.jet(SegmentKind::Heading, self.phi0, t)
    }

    pub fn speed_jet(&self, t: f64) -> [f64; 5] {
        self.jet(SegmentKind::Speed, self.v0, t)
    }

    /// Frame-local planar velocity and its first three time derivatives.
    pub fn velocity_jet(&self, t: f64) -> [Vec2; 4] {
        let phi = self.heading_jet(t);
        let v = self.speed_jet(t);
        // Taylor coefficients a_k = f^(k) / k!
        let fact = [1.0, 1.0, 2.0, 6.0];
        let pa: Vec<f64> = (0..4).map(|k| phi[k] / fact[k]).collect();
        let va: Vec<f64> = (0..4).map(|k| v[k] / fact[k]).collect();
        let mut s = [0.0; 4];
        let mut c = [0.0; 4];
        s[0] = pa[0].sin();
        c[0] = pa[0].cos();
        for k in 1..4 {
            let (mut ds, mut dc) = (0.0, 0.0);
            for j in 1..=k {
                ds += j as f64 * pa[j] * c[k - j];
                dc -= j as f64 * pa[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        let mut out = [Vec2::zeros(); 4];
        for k in 0..4 {
            let (mut x, mut y) = (0.0, 0.0);
            for j in 0..=k {
                x += va[j] * c[k - j];
                y += va[j] * s[k - j];
            }
            out[k] = Vec2::new(x, y) * fact[k];
        }
        out
    }

    fn local_velocity(&self, t: f64) -> Vec2 {
        let phi = self.heading_jet(t)[0];
        let v = self.speed_jet(t)[0];
        Vec2::new(v * phi.cos(), v * phi.sin())
    }

    /// Integral of the frame-local velocity over [a, b], split at segment edges.
    fn integrate(&self, a: f64, b: f64) -> Vec2 {
        if b <= a {
            return Vec2::zeros();
        }
        let mut cuts: Vec<f64> = vec![a, b];
        for s in &self.segments {
            for e in [s.t0, s.t_end()] {
                if e > a && e < b {
                    cuts.push(e);
                }
            }
        }
        cuts.sort_by(|x, y| x.total_cmp(y));
        let mut total = Vec2::zeros();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, wgt) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                total += self.local_velocity(mid + half * x) * (wgt * half);
            }
        }
        total
    }

    fn knot_time(&self, k: usize) -> f64 {
        self.t_anchor + k as f64 * self.dt_cache
    }

    /// Extend the position cache up to time `t`.
    pub fn advance_cache(&mut self, t: f64) {
        while self.knot_time(self.knots.len()) <= t {
            let k = self.knots.len();
            let next = self.knots[k - 1] + self.integrate(self.knot_time(k - 1), self.knot_time(k));
            self.knots.push(next);
        }
    }

    fn displacement(&self, t: f64) -> Vec2 {
        let k = (((t - self.t_anchor) / self.dt_cache).floor().max(0.0) as usize).min(self.knots.len() - 1);
        let mut base = self.knots[k];
        let mut from = self.knot_time(k);
        // past the cache: integrate the remainder knot by knot
        while from + self.dt_cache < t {
            base += self.integrate(from, from + self.dt_cache);
            from += self.dt_cache;
        }
        base + self.integrate(from, t)
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        let vj = self.velocity_jet(t);
        let q = self.displacement(t);
        let p = self.anchor + self.frame_velocity * (t - self.t_anchor) + q;
        TrajectorySample {
            p: lift(&p, self.z),
            v: lift(&(vj[0] + self.frame_velocity), 0.0),
            a: lift(&vj[1], 0.0),
            jerk: lift(&vj[2], 0.0),
            snap: lift(&vj[3], 0.0),
            heading: self.heading_jet(t)[0],
            speed: self.speed_jet(t)[0],
        }
    }

    pub fn accel_norm(&self, t: f64) -> f64 {
        self.velocity_jet(t)[1].norm()
    }

    /// Peak planar acceleration over [from, to] by dense sampling with
    /// golden-section refinement around every local maximum.
    pub fn peak_accel(&self, from: f64, to: f64) -> f64 {
        if to <= from {
            return self.accel_norm(from);
        }
        let shortest = self.segments.iter().map(|s| s.tau_f).fold(f64::INFINITY, f64::min);
        let h = (shortest / 200.0).clamp(1e-4, 5e-3);
        let n = ((to - from) / h).ceil() as usize;
        let ts: Vec<f64> = (0..=n).map(|i| (from + i as f64 * h).min(to)).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| self.accel_norm(t)).collect();
        let mut best = vals.iter().cloned().fold(0.0, f64::max);
        // The ends of each transition are a jump in rate, so the supremum can
        // be a one-sided limit that no interior sample approaches closely.
        for s in &self.segments {
            for b in [s.t0, s.t_end()] {
                let eps = 1e-12 * (1.0 + b.abs());
                for t in [b - eps, b + eps] {
                    if t >= from && t <= to {
                        best = best.max(self.accel_norm(t));
                    }
                }
            }
        }
        for i in 0..vals.len() {
            let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < vals.len() { vals[i + 1] } else { f64::NEG_INFINITY };
            if vals[i] >= left && vals[i] >= right && vals[i] > 0.5 * best {
                let lo = (ts[i] - h).max(from);
                let hi = (ts[i] + h).min(to);
                best = best.max(self.golden_max(lo, hi));
            }
        }
        best
    }

    fn golden_max(&self, mut a: f64, mut b: f64) -> f64 {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let mut f1 = self.accel_norm(x1);
        let mut f2 = self.accel_norm(x2);
        for _ in 0..60 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = self.accel_norm(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = self.accel_norm(x1);
            }
        }
        f1.max(f2)
    }

    /// Push a segment without feasibility checks; cached knots after its start are dropped.
    pub fn push_segment(&mut self, seg: SigmoidSegment) {
        let keep = (((seg.t0 - self.t_anchor) / self.dt_cache).floor().max(0.0) as usize) + 1;
        self.knots.truncate(keep.max(1));
        self.segments.push(seg);
    }

    /// Rebase the trajectory at `t`, folding segments that already finished
    /// into the base heading and speed.
    pub fn prune(&mut self, t: f64) {
        if !self.segments.iter().any(|s| s.t_end() < t) {
            return;
        }
        let here = self.sample(t);
        let mut phi0 = self.phi0;
        let mut v0 = self.v0;
        let mut active = Vec::new();
        for s in &self.segments {
            if s.t_end() < t {
                match s.kind {
                    SegmentKind::Heading => phi0 += s.delta(),
                    SegmentKind::Speed => v0 += s.delta(),
                }
            } else {
                active.push(*s);
            }
        }
        *self = Trajectory {
            t_anchor: t,
            anchor: Vec2::new(here.p.x, here.p.y),
            phi0,
            v0,
            segments: active,
            knots: vec![Vec2::zeros()],
            ..self.clone()
        };
    }
}

/// Fraction of `a_max` tolerated above the limit when checking peaks.
const PEAK_TOL: f64 = 1e-12;

/// Append `seg` (already fitted from the trajectory's final value) no
/// earlier than `t_now`. If the combined peak acceleration would exceed
/// `a_max`, the start is delayed by bisection; if delaying past the end of
/// the existing segments still is not enough, the timespan is stretched.
/// Returns the segment as placed.
pub fn append_transition(traj: &mut Trajectory, seg: SigmoidSegment, t_now: f64, a_max: f64) -> SigmoidSegment {
    if seg.c1 == 0.0 {
        return seg;
    }
    let delta = seg.delta();
    let x_prev = seg.x_prev();
    let t_start = seg.t0.max(t_now);
    let feasible = |t0: f64, tau: f64| -> bool {
        let s = refit(seg.kind, x_prev, delta, tau, t0);
        let mut trial = traj.clone();
        trial.segments.push(s);
        let hi = trial.end_time();
        trial.peak_accel(t0, hi) <= a_max * (1.0 + PEAK_TOL)
    };
    let placed = if feasible(t_start, seg.tau_f) {
        refit(seg.kind, x_prev, delta, seg.tau_f, t_start)
    } else {
        let d_hi = (traj.end_time() - t_start).max(0.0);
        if d_hi > 0.0 && feasible(t_start + d_hi, seg.tau_f) {
            let (mut lo, mut hi) = (0.0, d_hi);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if feasible(t_start + mid, seg.tau_f) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            refit(seg.kind, x_prev, delta, seg.tau_f, t_start + hi)
        } else {
            let t0 = t_start + d_hi;
            let mut hi = 2.0;
            while !feasible(t0, seg.tau_f * hi) && hi < 1e6 {
                hi *= 2.0;
            }
            let mut lo = hi / 2.0;
            if lo < 1.0 {
                lo = 1.0;
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if feasible(t0, seg.tau_f * mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            refit(seg.kind, x_prev, delta, seg.tau_f * hi, t0)
        }
    };
    traj.push_segment(placed);
    placed
}

fn refit(kind: SegmentKind, x_prev: f64, delta: f64, tau: f64, t0: f64) -> SigmoidSegment {
    fit_sigmoid(x_prev, x_prev + delta, tau, kind, 0.0).expect("positive timespan").starting_at(t0)
}

impl Trajectory {
    /// Plan a heading change of `dphi` starting no earlier than `t_now`,
    /// sized for speed `v_timing` and never shorter than `tau_floor`.
    pub fn command_heading(&mut self, dphi: f64, t_now: f64, v_timing: f64, a_max: f64, tau_floor: f64) -> Result<Option<SigmoidSegment>, TrajError> {
        if dphi.abs() < 1e-9 {
            return Ok(None);
        }
        if !(a_max > 0.0) {
            return Err(TrajError::NoAuthority);
        }
        let tau = tau_min_heading(dphi, v_timing, a_max).max(tau_floor);
        let x0 = self.final_heading();
        let seg = fit_sigmoid(x0, x0 + dphi, tau, SegmentKind::Heading, 0.0)?.starting_at(t_now);
        Ok(Some(append_transition(self, seg, t_now, a_max)))
    }

    /// Plan a speed change to `v_new` starting no earlier than `t_now`.
    pub fn command_speed(&mut self, v_new: f64, t_now: f64, a_max: f64, tau_floor: f64) -> Result<Option<SigmoidSegment>, TrajError> {
        let v0 = self.final_speed();
        if (v_new - v0).abs() < 1e-9 {
            return Ok(None);
        }
        if !(a_max > 0.0) {
            return Err(TrajError::NoAuthority);
        }
        let tau = tau_min_speed(v_new - v0, a_max).max(tau_floor);
        let seg = fit_sigmoid(v0, v_new, tau, SegmentKind::Speed, 0.0)?.starting_at(t_now);
        Ok(Some(append_transition(self, seg, t_now, a_max)))
    }
}
