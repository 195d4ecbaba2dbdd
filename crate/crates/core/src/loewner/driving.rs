//! Driving functions of the Loewner equations.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::pchip::{MonotoneCubic, Rows};
use super::LoewnerError;

/// Real driving function of `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalarDriver {
    Const(f64),
    /// `slope * lambda`.
    Linear(f64),
    /// Polynomial coefficients, constant term first.
    Poly(Vec<f64>),
    /// Rows `[lambda, value]` with strictly increasing `lambda`.
    Table(MonotoneCubic),
}

impl ScalarDriver {
    pub fn value(&self, lambda: f64) -> f64 {
        match self {
            ScalarDriver::Const(c) => *c,
            ScalarDriver::Linear(s) => s * lambda,
            ScalarDriver::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * lambda + a),
            ScalarDriver::Table(t) => t.eval(lambda),
        }
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        match self {
            ScalarDriver::Const(_) => 0.0,
            ScalarDriver::Linear(s) => *s,
            ScalarDriver::Poly(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * lambda + k as f64 * a),
            ScalarDriver::Table(t) => t.derivative(lambda),
        }
    }

    fn domain(&self) -> Option<(f64, f64)> {
        match self {
            ScalarDriver::Table(t) => Some(t.domain()),
            _ => None,
        }
    }
}

/// Table of complex samples, interpolated in modulus and unwrapped argument so
/// that unit-modulus samples stay on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rows<3>", into = "Vec<[f64; 3]>")]
pub struct ComplexTable {
    rows: Vec<[f64; 3]>,
    modulus: MonotoneCubic,
    argument: MonotoneCubic,
}

impl TryFrom<Vec<[f64; 3]>> for ComplexTable {
    type Error = String;

    fn try_from(rows: Vec<[f64; 3]>) -> Result<Self, String> {
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let zs: Vec<C64> = rows.iter().map(|r| C64::new(r[1], r[2])).collect();
        if zs.iter().any(|z| z.norm() == 0.0) {
            return Err("complex driving samples must be non-zero".into());
        }
        let mut arg: Vec<f64> = Vec::with_capacity(zs.len());
        for z in &zs {
            let a = z.arg();
            let a = match arg.last() {
                None => a,
                Some(&prev) => {
                    let turns = ((prev - a) / std::f64::consts::TAU).round();
                    a + turns * std::f64::consts::TAU
                }
            };
            arg.push(a);
        }
        Ok(Self {
            modulus: MonotoneCubic::new(xs.clone(), zs.iter().map(|z| z.norm()).collect())?,
            argument: MonotoneCubic::new(xs, arg)?,
            rows,
        })
    }
}

impl TryFrom<Rows<3>> for ComplexTable {
    type Error = String;

    fn try_from(rows: Rows<3>) -> Result<Self, String> {
        Self::try_from(rows.0)
    }
}

impl From<ComplexTable> for Vec<[f64; 3]> {
    fn from(t: ComplexTable) -> Self {
        t.rows
    }
}

/// Complex driving function of `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ComplexDriver {
    Const([f64; 2]),
    /// Rows `[lambda, re, im]` with strictly increasing `lambda`.
    Table(ComplexTable),
}

impl ComplexDriver {
    pub fn constant(z: C64) -> Self {
        ComplexDriver::Const([z.re, z.im])
    }

    pub fn value(&self, lambda: f64) -> C64 {
        match self {
            ComplexDriver::Const(c) => C64::new(c[0], c[1]),
            ComplexDriver::Table(t) => {
                C64::from_polar(t.modulus.eval(lambda), t.argument.eval(lambda))
            }
        }
    }

    fn domain(&self) -> Option<(f64, f64)> {
        match self {
            ComplexDriver::Table(t) => Some(t.modulus.domain()),
            _ => None,
        }
    }

    fn sample_points(&self) -> Vec<f64> {
        match self {
            ComplexDriver::Table(t) => t.modulus.knots().to_vec(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DrivingData {
    /// `dG/dlambda = -w G' (sigma + w)/(sigma - w) phi'`.
    Radial {
        sigma: ComplexDriver,
        phi: ScalarDriver,
        /// Allows `|sigma| != 1`.
        #[serde(default)]
        relaxed: bool,
    },
    /// `dH/dlambda = -H' a1' / (U - w)`.
    Chordal { u: ScalarDriver, a1: ScalarDriver },
}

const UNIT_TOL: f64 = 1e-12;

impl DrivingData {
    pub fn radial_const(sigma: C64) -> Self {
        DrivingData::Radial {
            sigma: ComplexDriver::constant(sigma),
            phi: ScalarDriver::Linear(1.0),
            relaxed: false,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, DrivingData::Radial { .. })
    }

    /// `sigma(lambda)` for radial data, `U(lambda)` for chordal data.
    pub fn point(&self, lambda: f64) -> C64 {
        match self {
            DrivingData::Radial { sigma, .. } => sigma.value(lambda),
            DrivingData::Chordal { u, .. } => C64::new(u.value(lambda), 0.0),
        }
    }

    /// `phi'(lambda)` for radial data, `a1'(lambda)` for chordal data.
    pub fn rate(&self, lambda: f64) -> f64 {
        match self {
            DrivingData::Radial { phi, .. } => phi.derivative(lambda),
            DrivingData::Chordal { a1, .. } => a1.derivative(lambda),
        }
    }

    /// `phi(lambda)` for radial data, `a1(lambda)` for chordal data.
    pub fn scale(&self, lambda: f64) -> f64 {
        match self {
            DrivingData::Radial { phi, .. } => phi.value(lambda),
            DrivingData::Chordal { a1, .. } => a1.value(lambda),
        }
    }

    /// Checks the invariants on `grid`: tables cover it, `|sigma| = 1` unless
    /// relaxed, `phi` strictly increasing, `a1` monotone.
    pub fn validate(&self, grid: &[f64]) -> Result<(), LoewnerError> {
        let (Some(&first), Some(&last)) = (grid.first(), grid.last()) else {
            return Err(LoewnerError::InvalidGrid("empty grid".into()));
        };
        let covers = |d: Option<(f64, f64)>, name: &str| match d {
            Some((a, b)) if first < a || last > b => Err(LoewnerError::InvalidDriving(format!(
                "{name} table covers [{a}, {b}] but the grid spans [{first}, {last}]"
            ))),
            _ => Ok(()),
        };
        match self {
            DrivingData::Radial {
                sigma,
                phi,
                relaxed,
            } => {
                covers(sigma.domain(), "sigma")?;
                covers(phi.domain(), "phi")?;
                if !relaxed {
                    for &l in grid.iter().chain(&sigma.sample_points()) {
                        let m = sigma.value(l).norm();
                        if (m - 1.0).abs() > UNIT_TOL {
                            return Err(LoewnerError::InvalidDriving(format!(
                                "|sigma({l})| = {m} is not 1; set \"relaxed\" to allow this"
                            )));
                        }
                    }
                }
                if grid.len() > 1 {
                    let vals: Vec<f64> = grid.iter().map(|&l| phi.value(l)).collect();
                    if vals.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(LoewnerError::InvalidDriving(
                            "phi must be strictly increasing on the grid".into(),
                        ));
                    }
                }
            }
            DrivingData::Chordal { u, a1 } => {
                covers(u.domain(), "U")?;
                covers(a1.domain(), "a1")?;
                let vals: Vec<f64> = grid.iter().map(|&l| a1.value(l)).collect();
                let up = vals.windows(2).all(|w| w[1] >= w[0]);
                let down = vals.windows(2).all(|w| w[1] <= w[0]);
                if !(up || down) {
                    return Err(LoewnerError::InvalidDriving(
                        "a1 must be monotone on the grid".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
