//! Explicit solutions of the Loewner equations: a vertical slit and two real rays
//! in the half-plane, a radial slit and a cardioid-like exterior map in the disc.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::driving::{ComplexDriver, DrivingData, ScalarDriver};
use super::{loewner_rate, ConformalFamily, LoewnerError, Orientation, Result};
use crate::series::{Expansion, Series};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClosedFormRepr", into = "ClosedFormRepr")]
pub enum ClosedForm {
    /// `H = U + w sqrt(1 - 2U/w + (U^2 - 2 lambda)/w^2)`, `a1 = -lambda`, `U` constant.
    ChordalSlit { u: f64 },
    /// `H = w + lambda^2/(w - 2 lambda)`, `a1 = lambda^2`, `U = 3 lambda`.
    ChordalTwoRays,
    /// Slit from `sigma` along the ray through `sigma`, `phi = lambda`.
    RadialSlit { sigma: C64 },
    /// `G = e^lambda (w + sigma)^2 / w`, `phi = lambda`.
    RadialCardioidLike { sigma: C64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClosedFormRepr {
    example: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<[f64; 2]>,
}

impl TryFrom<ClosedFormRepr> for ClosedForm {
    type Error = String;

    fn try_from(r: ClosedFormRepr) -> std::result::Result<Self, String> {
        let sigma = r.sigma.map(|s| C64::new(s[0], s[1])).unwrap_or(ONE);
        let cf = match r.example.as_str() {
            "A.1.1" => ClosedForm::ChordalSlit { u: r.u.unwrap_or(0.0) },
            "A.1.2" => ClosedForm::ChordalTwoRays,
            "A.2.1" => ClosedForm::RadialSlit { sigma },
            "A.2.2" => ClosedForm::RadialCardioidLike { sigma },
            other => {
                return Err(format!(
                    "unknown example {other:?}; expected A.1.1, A.1.2, A.2.1 or A.2.2"
                ))
            }
        };
        cf.check_params().map_err(|e| e.to_string())?;
        Ok(cf)
    }
}

impl From<ClosedForm> for ClosedFormRepr {
    fn from(c: ClosedForm) -> Self {
        let (u, sigma) = match c {
            ClosedForm::ChordalSlit { u } => (Some(u), None),
            ClosedForm::ChordalTwoRays => (None, None),
            ClosedForm::RadialSlit { sigma } | ClosedForm::RadialCardioidLike { sigma } => {
                (None, Some([sigma.re, sigma.im]))
            }
        };
        ClosedFormRepr {
            example: c.id().to_string(),
            u,
            sigma,
        }
    }
}

fn sqrt_series(x: &Series) -> Result<Series> {
    Ok(x.sqrt()?)
}

impl ClosedForm {
    pub fn id(&self) -> &'static str {
        match self {
            ClosedForm::ChordalSlit { .. } => "A.1.1",
            ClosedForm::ChordalTwoRays => "A.1.2",
            ClosedForm::RadialSlit { .. } => "A.2.1",
            ClosedForm::RadialCardioidLike { .. } => "A.2.2",
        }
    }

    /// Looks up an example by id with default parameters (`U = 0`, `sigma = 1`).
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "A.1.1" => Some(ClosedForm::ChordalSlit { u: 0.0 }),
            "A.1.2" => Some(ClosedForm::ChordalTwoRays),
            "A.2.1" => Some(ClosedForm::RadialSlit { sigma: ONE }),
            "A.2.2" => Some(ClosedForm::RadialCardioidLike { sigma: ONE }),
            _ => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(
            self,
            ClosedForm::RadialSlit { .. } | ClosedForm::RadialCardioidLike { .. }
        )
    }

    pub fn orientation(&self) -> Orientation {
        if self.is_radial() {
            Orientation::ExteriorG
        } else {
            Orientation::HalfPlaneH
        }
    }

    fn check_params(&self) -> Result<()> {
        match *self {
            ClosedForm::ChordalSlit { u } if !u.is_finite() => {
                Err(LoewnerError::Parameter("U must be finite".into()))
            }
            ClosedForm::RadialSlit { sigma } if sigma.norm() == 0.0 || !sigma.norm().is_finite() => {
                Err(LoewnerError::Parameter("sigma must be non-zero".into()))
            }
            ClosedForm::RadialCardioidLike { sigma } if (sigma.norm() - 1.0).abs() > 1e-12 => {
                Err(LoewnerError::Parameter("sigma must lie on the unit circle".into()))
            }
            _ => Ok(()),
        }
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        self.check_params()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(LoewnerError::Parameter(format!("lambda = {lambda} must be >= 0")));
        }
        Ok(())
    }

    pub fn driving(&self) -> DrivingData {
        match *self {
            ClosedForm::ChordalSlit { u } => DrivingData::Chordal {
                u: ScalarDriver::Const(u),
                a1: ScalarDriver::Linear(-1.0),
            },
            ClosedForm::ChordalTwoRays => DrivingData::Chordal {
                u: ScalarDriver::Linear(3.0),
                a1: ScalarDriver::Poly(vec![0.0, 0.0, 1.0]),
            },
            ClosedForm::RadialSlit { sigma } | ClosedForm::RadialCardioidLike { sigma } => {
                DrivingData::Radial {
                    sigma: ComplexDriver::constant(sigma),
                    phi: ScalarDriver::Linear(1.0),
                    relaxed: (sigma.norm() - 1.0).abs() > 1e-12,
                }
            }
        }
    }

    /// `H` or `G` at `lambda` on the window `[-depth, 1]`.
    pub fn exterior(&self, lambda: f64, depth: i32) -> Result<Series> {
        self.check_lambda(lambda)?;
        let inf = Expansion::AtInfinity;
        let c = |v: f64| C64::new(v, 0.0);
        match *self {
            ClosedForm::ChordalSlit { u } => {
                let x = Series::from_fn(inf, -(depth + 1), 0, |k| match k {
                    0 => ONE,
                    -1 => c(-2.0 * u),
                    -2 => c(u * u - 2.0 * lambda),
                    _ => ZERO,
                });
                let mut h = sqrt_series(&x)?.shift(1);
                // U + (-U) cancels exactly in the normalization
                h.set(0, ZERO);
                Ok(h)
            }
            ClosedForm::ChordalTwoRays => Ok(Series::from_fn(inf, -depth, 1, |k| match k {
                1 => ONE,
                0 => ZERO,
                _ => c(lambda * lambda * (2.0 * lambda).powi(-k - 1)),
            })),
            ClosedForm::RadialSlit { sigma } => {
                let e = lambda.exp();
                let lin = Series::from_fn(inf, -(depth + 1), 0, |k| match k {
                    0 => ONE,
                    -1 => sigma,
                    _ => ZERO,
                });
                let rad = Series::from_fn(inf, -(depth + 1), 0, |k| match k {
                    0 => ONE,
                    -1 => 2.0 * sigma * (1.0 - 2.0 / e),
                    -2 => sigma * sigma,
                    _ => ZERO,
                });
                let inner = lin.mul(&lin)?.add(&lin.mul(&sqrt_series(&rad)?)?)?;
                let g = inner.scale(c(e / 2.0)).shift(1);
                Ok(g.add_constant(-sigma))
            }
            ClosedForm::RadialCardioidLike { sigma } => {
                let e = lambda.exp();
                Ok(Series::from_fn(inf, -depth, 1, |k| match k {
                    1 => c(e),
                    0 => 2.0 * sigma * e,
                    -1 => sigma * sigma * e,
                    _ => ZERO,
                }))
            }
        }
    }

    /// `F` at `lambda` on the window `[1, depth + 2]` for the radial examples.
    pub fn interior(&self, lambda: f64, depth: i32) -> Result<Option<Series>> {
        self.check_lambda(lambda)?;
        let orig = Expansion::AtOrigin;
        let hi = depth + 2;
        match *self {
            ClosedForm::ChordalSlit { .. } | ClosedForm::ChordalTwoRays => Ok(None),
            ClosedForm::RadialSlit { sigma } => {
                // F = -sigma + 2 sigma (w + sigma)/(w + sigma + sigma sqrt(Q)), the
                // rationalized form, which avoids cancelling terms of size e^lambda
                let e = lambda.exp();
                let si = sigma.inv();
                let lin = Series::from_fn(orig, 0, hi + 1, |k| match k {
                    0 => sigma,
                    1 => ONE,
                    _ => ZERO,
                });
                let rad = Series::from_fn(orig, 0, hi + 1, |k| match k {
                    0 => ONE,
                    1 => 2.0 * si * (1.0 - 2.0 / e),
                    2 => si * si,
                    _ => ZERO,
                });
                let den = lin.add(&sqrt_series(&rad)?.scale(sigma))?;
                let f = lin.div(&den)?.scale(2.0 * sigma).add_constant(-sigma);
                let residue = f.coeff(0).norm();
                if residue > 1e-10 {
                    return Err(LoewnerError::Parameter(format!(
                        "interior slit map lost normalization ({residue:e})"
                    )));
                }
                Ok(Some(f.restrict(1, hi)))
            }
            ClosedForm::RadialCardioidLike { sigma } => {
                let em = (-lambda).exp();
                let s = -sigma.conj();
                Ok(Some(Series::from_fn(orig, 1, hi, |k| {
                    s.powi(k - 1) * (k as f64 * em)
                })))
            }
        }
    }

    /// Pointwise value of `H` or `G` on the branch asymptotic to the identity.
    pub fn evaluate_exterior(&self, lambda: f64, w: C64) -> Result<C64> {
        self.check_lambda(lambda)?;
        Ok(match *self {
            ClosedForm::ChordalSlit { u } => {
                let mut s = ((w - u) * (w - u) - 2.0 * lambda).sqrt();
                if s.im < 0.0 || (s.im == 0.0 && (s * (w - u).conj()).re < 0.0) {
                    s = -s;
                }
                u + s
            }
            ClosedForm::ChordalTwoRays => w + lambda * lambda / (w - 2.0 * lambda),
            ClosedForm::RadialSlit { sigma } => {
                let e = lambda.exp();
                let b = sigma * (1.0 - 2.0 / e);
                let mut s = (w * w + 2.0 * b * w + sigma * sigma).sqrt();
                if (s * (w + b).conj()).re < 0.0 {
                    s = -s;
                }
                -sigma + e / 2.0 * ((w + sigma) * (w + sigma) + (w + sigma) * s) / w
            }
            ClosedForm::RadialCardioidLike { sigma } => lambda.exp() * (w + sigma) * (w + sigma) / w,
        })
    }

    fn family_of(
        &self,
        grid: &[f64],
        orientation: Orientation,
        map: impl Fn(f64) -> Result<Series>,
    ) -> Result<ConformalFamily> {
        if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LoewnerError::InvalidGrid("grid must be non-empty and ascending".into()));
        }
        let driving = self.driving();
        let maps = grid.iter().map(|&l| map(l)).collect::<Result<Vec<_>>>()?;
        let rates = grid
            .iter()
            .zip(&maps)
            .map(|(&l, m)| loewner_rate(orientation, &driving, l, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConformalFamily {
            driving,
            orientation,
            grid: grid.to_vec(),
            maps,
            rates,
        })
    }

    /// The exterior (or half-plane) maps sampled on `grid`.
    pub fn family(&self, grid: &[f64], depth: i32) -> Result<ConformalFamily> {
        self.family_of(grid, self.orientation(), |l| self.exterior(l, depth))
    }

    /// The interior maps sampled on `grid`; radial examples only.
    pub fn interior_family(&self, grid: &[f64], depth: i32) -> Result<ConformalFamily> {
        if !self.is_radial() {
            return Err(LoewnerError::Parameter("chordal examples have no interior map".into()));
        }
        self.family_of(grid, Orientation::InteriorF, |l| {
            Ok(self.interior(l, depth)?.expect("radial"))
        })
    }
}
