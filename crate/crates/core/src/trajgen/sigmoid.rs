//! Hyperbolic-tangent transitions `x(tau) = c1 tanh(c2 tau - c3) + c4`.

use super::TrajError;
use serde::{Deserialize, Serialize};

/// Endpoint saturation: the transition covers `1 - EPS_S` of the tanh range.
pub const EPS_S: f64 = 0.01;

/// `atanh(1 - EPS_S)`.
pub fn c3() -> f64 {
    (1.0 - EPS_S).atanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Heading,
    Speed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidSegment {
    pub kind: SegmentKind,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub t0: f64,
    pub tau_f: f64,
}

/// Shortest heading transition whose peak lateral acceleration at speed
/// `v_c` equals `a_max`.
pub fn tau_min_heading(dphi: f64, v_c: f64, a_max: f64) -> f64 {
    dphi.abs() * c3() * v_c / ((1.0 - EPS_S) * a_max)
}

/// Shortest speed transition whose peak longitudinal acceleration equals `a_max`.
pub fn tau_min_speed(dv: f64, a_max: f64) -> f64 {
    dv.abs() * c3() / ((1.0 - EPS_S) * a_max)
}

/// Derivatives of `tanh` at `u`, orders 0 through 4.
pub fn tanh_derivatives(u: f64) -> [f64; 5] {
    let t = u.tanh();
    let s = 1.0 - t * t;
    [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0), 16.0 * t * s * s - 8.0 * t * t * t * s]
}

/// Fit a transition from `x_prev` to `x_new` over `tau_f`, exact at both ends.
pub fn fit_sigmoid(
    x_prev: f64,
    x_new: f64,
    tau_f: f64,
    kind: SegmentKind,
    tau_f_min: f64,
) -> Result<SigmoidSegment, TrajError> {
    if !(tau_f > 0.0) || tau_f < tau_f_min {
        return Err(TrajError::TooShort { tau_f, tau_f_min });
    }
    let c3 = c3();
    Ok(SigmoidSegment {
        kind,
        c1: (x_new - x_prev) / (2.0 * (1.0 - EPS_S)),
        c2: 2.0 * c3 / tau_f,
        c3,
        c4: 0.5 * (x_new + x_prev),
        t0: 0.0,
        tau_f,
    })
}

impl SigmoidSegment {
    pub fn starting_at(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn x_prev(&self) -> f64 {
        self.c4 - self.c1 * (1.0 - EPS_S)
    }

    pub fn x_new(&self) -> f64 {
        self.c4 + self.c1 * (1.0 - EPS_S)
    }

    pub fn delta(&self) -> f64 {
        2.0 * self.c1 * (1.0 - EPS_S)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.tau_f
    }

    /// Peak rate `c1 c2`.
    pub fn peak_rate(&self) -> f64 {
        (self.c1 * self.c2).abs()
    }

    /// Value at absolute time `t`, held at the endpoint values outside the window.
    pub fn value(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        if tau <= 0.0 {
            self.x_prev()
        } else if tau >= self.tau_f {
            self.x_new()
        } else {
            self.c1 * (self.c2 * tau - self.c3).tanh() + self.c4
        }
    }

    /// Change from `x_prev` and its time derivatives (orders 0 to 4) at `t`.
    pub fn increment_jet(&self, t: f64) -> [f64; 5] {
        let tau = t - self.t0;
        if tau <= 0.0 {
            return [0.0; 5];
        }
        if tau >= self.tau_f {
            return [self.delta(), 0.0, 0.0, 0.0, 0.0];
        }
        let d = tanh_derivatives(self.c2 * tau - self.c3);
        let mut out = [0.0; 5];
        let mut scale = self.c1;
        for k in 0..5 {
            out[k] = scale * d[k];
            scale *= self.c2;
        }
        out[0] = self.c1 * d[0] + self.c4 - self.x_prev();
        out
    }
}
