//! Exact solutions, manufactured sources and initial data of the benchmark problems.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::BoundaryData;
use crate::geometry::Rect;
use crate::nonlinear::Nonlinearity;
use crate::timestepper::InitialData;

/// Everything needed to pose one benchmark on its rectangle.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: &'static str,
    pub domain: Rect<f64>,
    pub gamma: f64,
    pub nonlinearity: Nonlinearity<f64>,
    pub boundary: BoundaryData<f64>,
    pub initial: InitialData<f64>,
    pub source: Option<fn(f64, f64, f64) -> f64>,
    pub exact: Option<fn(f64, f64, f64) -> f64>,
}

/// Line soliton `4 atan(exp(x + y − t))` on `[−7, 7]²`.
pub fn kink_exact(x: f64, y: f64, t: f64) -> f64 {
    4.0 * (x + y - t).exp().atan()
}

/// `∂_t` of the kink at `t = 0`: `−4eˢ/(1 + e²ˢ) = −2/cosh s` with `s = x + y`.
pub fn kink_velocity(x: f64, y: f64) -> f64 {
    -2.0 / (x + y).cosh()
}

pub fn test1() -> Problem {
    Problem {
        name: "test1",
        domain: Rect::new(-7.0, 7.0, -7.0, 7.0),
        gamma: 0.0,
        nonlinearity: Nonlinearity::sine_gordon(),
        boundary: BoundaryData::dirichlet(kink_exact),
        initial: InitialData::new(|x, y| kink_exact(x, y, 0.0), kink_velocity),
        source: None,
        exact: Some(kink_exact),
    }
}

fn bubble(x: f64, y: f64) -> f64 {
    x * y * (1.0 - x) * (1.0 - y)
}

/// `e^{−t} xy(1−x)(1−y)`
pub fn decay_exact(x: f64, y: f64, t: f64) -> f64 {
    (-t).exp() * bubble(x, y)
}

/// `u_tt − Δu − u²` for [`decay_exact`].
pub fn decay_source(x: f64, y: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let q = bubble(x, y);
    e * q + 2.0 * e * (x * (1.0 - x) + y * (1.0 - y)) - e * e * q * q
}

pub fn test2() -> Problem {
    Problem {
        name: "test2",
        domain: Rect::unit(),
        gamma: 0.0,
        nonlinearity: Nonlinearity::quadratic(),
        boundary: BoundaryData::homogeneous_dirichlet(),
        initial: InitialData::new(bubble, |x, y| -bubble(x, y)),
        source: Some(decay_source),
        exact: Some(decay_exact),
    }
}

/// `sin t · sin πx · sin πy`
pub fn oscillation_exact(x: f64, y: f64, t: f64) -> f64 {
    t.sin() * (PI * x).sin() * (PI * y).sin()
}

/// `u_tt − Δu + sin u = (2π² − 1) u + sin u` for [`oscillation_exact`].
pub fn oscillation_source(x: f64, y: f64, t: f64) -> f64 {
    let u = oscillation_exact(x, y, t);
    (2.0 * PI * PI - 1.0) * u + u.sin()
}

pub fn test3() -> Problem {
    Problem {
        name: "test3",
        domain: Rect::unit(),
        gamma: 0.0,
        nonlinearity: Nonlinearity::sine_gordon(),
        boundary: BoundaryData::homogeneous_dirichlet(),
        initial: InitialData::new(|_, _| 0.0, |x, y| (PI * x).sin() * (PI * y).sin()),
        source: Some(oscillation_source),
        exact: Some(oscillation_exact),
    }
}

pub const RING_CENTER: (f64, f64) = (-3.0, -7.0);
pub const RING_RADIUS: f64 = 4.0;
pub const RING_WIDTH: f64 = 0.436;
pub const RING_SPEED: f64 = 4.13;
pub const SOLITON_GAMMA: f64 = 0.05;

fn ring_offset(x: f64, y: f64) -> f64 {
    let r = ((x - RING_CENTER.0).powi(2) + (y - RING_CENTER.1).powi(2)).sqrt();
    (RING_RADIUS - r) / RING_WIDTH
}

pub fn ring_displacement(x: f64, y: f64) -> f64 {
    4.0 * ring_offset(x, y).exp().atan()
}

/// Initial velocity of the ring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingVelocity {
    /// `4.13 sech((4 − r)/0.436)`, localised on the ring.
    #[default]
    Sech,
    /// `4.13 / cosh(exp((4 − r)/0.436))`, which tends to 4.13 away from the
    /// ring and lifts the whole far field.
    CoshOfExp,
}

impl RingVelocity {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        let s = ring_offset(x, y);
        match self {
            Self::Sech => RING_SPEED / s.cosh(),
            Self::CoshOfExp => RING_SPEED / s.exp().cosh(),
        }
    }
}

pub fn solitons() -> Problem {
    solitons_with(RingVelocity::default())
}

/// Circular ring soliton on the quarter domain `[−10, 10] × [−7, 7]`.
pub fn solitons_with(velocity: RingVelocity) -> Problem {
    Problem {
        name: "solitons",
        domain: Rect::new(-10.0, 10.0, -7.0, 7.0),
        gamma: SOLITON_GAMMA,
        nonlinearity: Nonlinearity::sine_gordon(),
        boundary: BoundaryData::NeumannHomogeneous,
        initial: InitialData::new(ring_displacement, move |x, y| velocity.eval(x, y)),
        source: None,
        exact: None,
    }
}
