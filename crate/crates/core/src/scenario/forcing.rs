use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stepper::Forcing;

/// Forcing selected in a run configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForcingSpec {
    /// Counterclockwise drive between offset circles, ramped over `t ∈ [0, 1]`.
    OffsetCircles,
    /// Body force of a manufactured solution on the unit square.
    Mms { steady: bool },
    Zero,
}

impl ForcingSpec {
    pub fn as_str(self) -> &'static str {
        match self {
            ForcingSpec::OffsetCircles => "offset-circles",
            ForcingSpec::Mms { steady: true } => "mms-steady",
            ForcingSpec::Mms { steady: false } => "mms",
            ForcingSpec::Zero => "zero",
        }
    }

    /// The forcing for kinematic viscosity `nu`.
    pub fn build(self, nu: f64) -> Box<dyn Forcing + Send + Sync> {
        match self {
            ForcingSpec::OffsetCircles => Box::new(OffsetCircles),
            ForcingSpec::Mms { steady } => Box::new(Manufactured::new(nu, steady)),
            ForcingSpec::Zero => Box::new(|_: [f64; 2], _: f64| [0.0, 0.0]),
        }
    }
}

impl fmt::Display for ForcingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ForcingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "offset-circles" => ForcingSpec::OffsetCircles,
            "mms" => ForcingSpec::Mms { steady: false },
            "mms-steady" => ForcingSpec::Mms { steady: true },
            "zero" => ForcingSpec::Zero,
            _ => {
                return Err(Error::Config(format!(
                    "unknown forcing `{s}` (expected offset-circles, mms, mms-steady or zero)"
                )))
            }
        })
    }
}

/// `f = min(t, 1)(1 − x² − y²)(−4y, 4x)`
pub fn forcing_offset_circles([x, y]: [f64; 2], t: f64) -> [f64; 2] {
    let s = t.min(1.0) * (1.0 - x * x - y * y);
    [-4.0 * y * s, 4.0 * x * s]
}

#[derive(Clone, Copy, Debug)]
pub struct OffsetCircles;

impl Forcing for OffsetCircles {
    fn force(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        forcing_offset_circles(x, t)
    }
}

/// Manufactured Navier–Stokes solution on the unit square.
///
/// Stream function `ψ = g(t) sin²(πx) sin²(πy)`, so `v = (∂_y ψ, −∂_x ψ)`
/// is divergence free and vanishes with its normal derivative on the
/// boundary; pressure `p = g(t) cos(πx) cos(πy)` has zero mean.
/// `g = cos(πt)` or, for the steady variant, `g = 1`.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub nu: f64,
    pub steady: bool,
}

fn a0(s: f64) -> f64 {
    (PI * s).sin().powi(2)
}
fn a1(s: f64) -> f64 {
    PI * (2.0 * PI * s).sin()
}
fn a2(s: f64) -> f64 {
    2.0 * PI * PI * (2.0 * PI * s).cos()
}
fn a3(s: f64) -> f64 {
    -4.0 * PI.powi(3) * (2.0 * PI * s).sin()
}

impl Manufactured {
    pub fn new(nu: f64, steady: bool) -> Self {
        Manufactured { nu, steady }
    }

    fn g(&self, t: f64) -> (f64, f64) {
        if self.steady {
            (1.0, 0.0)
        } else {
            ((PI * t).cos(), -PI * (PI * t).sin())
        }
    }

    pub fn velocity(&self, [x, y]: [f64; 2], t: f64) -> [f64; 2] {
        let g = self.g(t).0;
        [g * a0(x) * a1(y), -g * a1(x) * a0(y)]
    }

    pub fn pressure(&self, [x, y]: [f64; 2], t: f64) -> f64 {
        self.g(t).0 * (PI * x).cos() * (PI * y).cos()
    }
}

impl Forcing for Manufactured {
    fn force(&self, [x, y]: [f64; 2], t: f64) -> [f64; 2] {
        let (g, dg) = self.g(t);
        let (ax, ay) = (a0(x), a0(y));
        let (bx, by) = (a1(x), a1(y));
        let (cx, cy) = (a2(x), a2(y));
        let (dx, dy) = (a3(x), a3(y));
        let v = [g * ax * by, -g * bx * ay];
        let grad = [[g * bx * by, g * ax * cy], [-g * cx * ay, -g * bx * by]];
        let lap = [g * (cx * by + ax * dy), -g * (dx * ay + bx * cy)];
        let dp = [
            -g * PI * (PI * x).sin() * (PI * y).cos(),
            -g * PI * (PI * x).cos() * (PI * y).sin(),
        ];
        let shape = [ax * by, -bx * ay];
        let mut f = [0.0; 2];
        for i in 0..2 {
            f[i] = dg * shape[i] + v[0] * grad[i][0] + v[1] * grad[i][1] - self.nu * lap[i] + dp[i];
        }
        f
    }
}
