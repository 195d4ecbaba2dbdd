//! Radial and chordal Loewner equations integrated as ODEs on series coefficients,
//! and the closed-form families used as references.

mod closed_form;
mod driving;
pub(crate) mod pchip;

pub use closed_form::ClosedForm;
pub use driving::{ComplexDriver, ComplexTable, DrivingData, ScalarDriver};
pub use pchip::MonotoneCubic;

use num_complex::Complex64 as C64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::series::{Expansion, Series, SeriesError};

/// Default RK4 step in `lambda`.
pub const DEFAULT_STEP: f64 = 1e-3;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoewnerError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid driving data: {0}")]
    InvalidDriving(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid initial map: {0}")]
    InvalidInitial(String),
    #[error("RK4 step at lambda = {lambda} produced a non-finite coefficient")]
    StepRejected { lambda: f64 },
    #[error("lambda = {lambda} outside [{lo}, {hi}]")]
    OutOfRange { lambda: f64, lo: f64, hi: f64 },
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, LoewnerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `G(w) = e^phi w + ...` on the exterior disc.
    ExteriorG,
    /// `F(w) = e^-phi w + ...` on the unit disc.
    InteriorF,
    /// `H(w) = w + a1/w + ...` on the upper half-plane.
    HalfPlaneH,
}

/// Maps on an ascending `lambda` grid. Between grid points the family is the cubic
/// Hermite interpolant through the maps and their `lambda`-derivatives.
#[derive(Debug, Clone)]
pub struct ConformalFamily {
    pub driving: DrivingData,
    pub orientation: Orientation,
    pub grid: Vec<f64>,
    pub maps: Vec<Series>,
    /// `d/dlambda` of each map, from the Loewner vector field.
    pub rates: Vec<Series>,
}

impl Serialize for ConformalFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.grid.len()))?;
        for (l, m) in self.grid.iter().zip(&self.maps) {
            seq.serialize_element(&(l, m))?;
        }
        seq.end()
    }
}

impl ConformalFamily {
    pub fn lambda_range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().expect("non-empty grid"))
    }

    /// The map at `lambda`, interpolated between grid points.
    pub fn at(&self, lambda: f64) -> Result<Series> {
        let (lo, hi) = self.lambda_range();
        if !(lambda >= lo && lambda <= hi) {
            return Err(LoewnerError::OutOfRange { lambda, lo, hi });
        }
        let n = self.grid.len();
        let i = self.grid.partition_point(|&g| g <= lambda);
        if i > 0 && self.grid[i - 1] == lambda {
            return Ok(self.maps[i - 1].clone());
        }
        let i = (i.max(1) - 1).min(n - 2);
        let h = self.grid[i + 1] - self.grid[i];
        let s = (lambda - self.grid[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let c = |v: f64| C64::new(v, 0.0);
        let a = self.maps[i].scale(c(2.0 * s3 - 3.0 * s2 + 1.0));
        let b = self.rates[i].scale(c((s3 - 2.0 * s2 + s) * h));
        let d = self.maps[i + 1].scale(c(-2.0 * s3 + 3.0 * s2));
        let e = self.rates[i + 1].scale(c((s3 - s2) * h));
        Ok(a.add(&b)?.add(&d)?.add(&e)?)
    }
}

// -w G' (sigma + w)/(sigma - w) phi', with (sigma+w)/(sigma-w) = -1 - 2 sum sigma^k w^-k.
fn rhs_radial(g: &Series, sigma: C64, dphi: f64) -> Result<Series> {
    let wdg = g.derivative().shift(1);
    let lo = g.lo() - g.hi();
    let kernel = Series::from_fn(Expansion::AtInfinity, lo.min(-1), 0, |k| {
        if k == 0 {
            -ONE
        } else {
            -2.0 * sigma.powi(-k)
        }
    });
    Ok(wdg.mul(&kernel)?.scale(C64::new(-dphi, 0.0)))
}

// -w F' (eta + w)/(eta - w) phi', with (eta+w)/(eta-w) = 1 + 2 sum eta^-k w^k.
fn rhs_interior(f: &Series, eta: C64, dphi: f64) -> Result<Series> {
    let wdf = f.derivative().shift(1);
    let hi = f.hi() - f.lo();
    let inv = eta.inv();
    let kernel = Series::from_fn(Expansion::AtOrigin, 0, hi.max(1), |k| {
        if k == 0 {
            ONE
        } else {
            2.0 * inv.powi(k)
        }
    });
    Ok(wdf.mul(&kernel)?.scale(C64::new(-dphi, 0.0)))
}

// -H' a1' / (U - w), with 1/(U - w) = -sum U^k w^{-k-1}.
fn rhs_chordal(h: &Series, u: f64, da1: f64) -> Result<Series> {
    let dh = h.derivative();
    let lo = h.lo() - 2;
    let kernel = Series::from_fn(Expansion::AtInfinity, lo.min(-1), -1, |k| {
        C64::new(-u.powi(-k - 1), 0.0)
    });
    Ok(dh.mul(&kernel)?.scale(C64::new(-da1, 0.0)))
}

fn rhs(orientation: Orientation, driving: &DrivingData, lambda: f64, s: &Series) -> Result<Series> {
    let p = driving.point(lambda);
    let r = driving.rate(lambda);
    match orientation {
        Orientation::ExteriorG => rhs_radial(s, p, r),
        Orientation::InteriorF => rhs_interior(s, p, r),
        Orientation::HalfPlaneH => rhs_chordal(s, p.re, r),
    }
}

/// `d/dlambda` of a map in the family, from the Loewner equation.
pub fn loewner_rate(
    orientation: Orientation,
    driving: &DrivingData,
    lambda: f64,
    map: &Series,
) -> Result<Series> {
    rhs(orientation, driving, lambda, map)
}

fn rk4_step(
    orientation: Orientation,
    driving: &DrivingData,
    lambda: f64,
    h: f64,
    y: &Series,
) -> Result<Series> {
    let c = |v: f64| C64::new(v, 0.0);
    let k1 = rhs(orientation, driving, lambda, y)?;
    let y2 = y.add(&k1.scale(c(h / 2.0)))?;
    let k2 = rhs(orientation, driving, lambda + h / 2.0, &y2)?;
    let y3 = y.add(&k2.scale(c(h / 2.0)))?;
    let k3 = rhs(orientation, driving, lambda + h / 2.0, &y3)?;
    let y4 = y.add(&k3.scale(c(h)))?;
    let k4 = rhs(orientation, driving, lambda + h, &y4)?;
    let incr = k1.add(&k2.scale(c(2.0)))?.add(&k3.scale(c(2.0)))?.add(&k4)?;
    let next = y.add(&incr.scale(c(h / 6.0)))?;
    // keep the state window fixed
    let next = next.restrict(y.lo(), y.hi());
    if next.coeffs().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(LoewnerError::StepRejected { lambda: lambda + h });
    }
    Ok(next)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(LoewnerError::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|l| !l.is_finite()) {
        return Err(LoewnerError::InvalidGrid("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LoewnerError::InvalidGrid("grid must be strictly ascending".into()));
    }
    Ok(())
}

fn integrate(
    orientation: Orientation,
    driving: &DrivingData,
    initial: &Series,
    grid: &[f64],
    step: f64,
) -> Result<ConformalFamily> {
    check_grid(grid)?;
    if !(step > 0.0) {
        return Err(LoewnerError::InvalidGrid(format!("step must be positive, got {step}")));
    }
    driving.validate(grid)?;
    let mut maps = vec![initial.clone()];
    let mut rates = vec![rhs(orientation, driving, grid[0], initial)?];
    let mut y = initial.clone();
    for w in grid.windows(2) {
        let n = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        for i in 0..n {
            y = rk4_step(orientation, driving, w[0] + i as f64 * h, h, &y)?;
        }
        rates.push(rhs(orientation, driving, w[1], &y)?);
        maps.push(y.clone());
    }
    Ok(ConformalFamily {
        driving: driving.clone(),
        orientation,
        grid: grid.to_vec(),
        maps,
        rates,
    })
}

fn check_linear(s: &Series, tag: Expansion, want: C64, what: &str) -> Result<()> {
    if s.tag() != tag || s.leading_exponent() != Some(1) {
        return Err(LoewnerError::InvalidInitial(format!(
            "{what} must be {tag:?} with leading exponent 1"
        )));
    }
    if (s.coeff(1) - want).norm() > 1e-10 * want.norm() {
        return Err(LoewnerError::InvalidInitial(format!(
            "{what} linear coefficient {} differs from {}",
            s.coeff(1),
            want
        )));
    }
    Ok(())
}

/// RK4 for `dG/dlambda = -w G' (sigma+w)/(sigma-w) phi'` near infinity.
pub fn integrate_radial(
    driving: &DrivingData,
    initial: &Series,
    grid: &[f64],
    step: f64,
) -> Result<ConformalFamily> {
    let DrivingData::Radial { phi, .. } = driving else {
        return Err(LoewnerError::InvalidDriving("radial equation needs radial data".into()));
    };
    check_grid(grid)?;
    let want = C64::new(phi.value(grid[0]).exp(), 0.0);
    check_linear(initial, Expansion::AtInfinity, want, "G")?;
    integrate(Orientation::ExteriorG, driving, initial, grid, step)
}

/// RK4 for `dF/dlambda = -w F' (eta+w)/(eta-w) phi'` near the origin, `eta = sigma`.
pub fn integrate_interior(
    driving: &DrivingData,
    initial: &Series,
    grid: &[f64],
    step: f64,
) -> Result<ConformalFamily> {
    let DrivingData::Radial { phi, .. } = driving else {
        return Err(LoewnerError::InvalidDriving("radial equation needs radial data".into()));
    };
    check_grid(grid)?;
    let want = C64::new((-phi.value(grid[0])).exp(), 0.0);
    check_linear(initial, Expansion::AtOrigin, want, "F")?;
    integrate(Orientation::InteriorF, driving, initial, grid, step)
}

/// RK4 for `dH/dlambda = -H' a1'/(U - w)` near infinity.
pub fn integrate_chordal(
    driving: &DrivingData,
    initial: &Series,
    grid: &[f64],
    step: f64,
) -> Result<ConformalFamily> {
    if driving.is_radial() {
        return Err(LoewnerError::InvalidDriving("chordal equation needs chordal data".into()));
    }
    check_linear(initial, Expansion::AtInfinity, ONE, "H")?;
    if initial.coeff(0).norm() > 1e-12 {
        return Err(LoewnerError::InvalidInitial("H must have zero constant term".into()));
    }
    integrate(Orientation::HalfPlaneH, driving, initial, grid, step)
}

/// `conj(G(1/conj w))^{-1}` as a series near the origin.
pub fn reflect(g: &Series) -> Result<Series> {
    if g.leading_exponent() != Some(1) {
        return Err(LoewnerError::InvalidInitial(
            "reflection needs leading exponent 1".into(),
        ));
    }
    Ok(g.conj_flip().recip()?)
}

/// Reflects every map of an exterior family into the interior family.
pub fn reflect_family(family: &ConformalFamily) -> Result<ConformalFamily> {
    if family.orientation != Orientation::ExteriorG {
        return Err(LoewnerError::InvalidInitial("expected an exterior family".into()));
    }
    let maps = family.maps.iter().map(reflect).collect::<Result<Vec<_>>>()?;
    let rates = family
        .grid
        .iter()
        .zip(&maps)
        .map(|(&l, m)| rhs(Orientation::InteriorF, &family.driving, l, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConformalFamily {
        driving: family.driving.clone(),
        orientation: Orientation::InteriorF,
        grid: family.grid.clone(),
        maps,
        rates,
    })
}

/// Uniform grid `start, start + step, ..., end` (the last point is `end`).
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round().max(0.0) as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| start + (end - start) * i as f64 / n.max(1) as f64).collect();
    if n == 0 {
        g.truncate(1);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn slit_oracle(lambda: f64, sigma: C64) -> [(i32, C64); 4] {
        let (e, em) = (lambda.exp(), (-lambda).exp());
        [
            (1, c(e, 0.0)),
            (0, 2.0 * sigma * (e - 1.0)),
            (-1, sigma * sigma * (e - em)),
            (-2, 2.0 * sigma.powi(3) * em * (1.0 - em)),
        ]
    }

    #[test]
    fn radial_slit_matches_printed_expansion() {
        let sigma = C64::from_polar(1.0, 0.9);
        let d = DrivingData::radial_const(sigma);
        let g0 = Series::identity(Expansion::AtInfinity, 16);
        let fam = integrate_radial(&d, &g0, &[0.0, 0.5], DEFAULT_STEP).unwrap();
        let g = &fam.maps[1];
        for (k, want) in slit_oracle(0.5, sigma) {
            assert!((g.coeff(k) - want).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn single_point_grid_returns_initial() {
        let d = DrivingData::radial_const(ONE);
        let g0 = Series::identity(Expansion::AtInfinity, 8);
        let fam = integrate_radial(&d, &g0, &[0.0], DEFAULT_STEP).unwrap();
        assert_eq!(fam.maps, vec![g0.clone()]);
        let f0 = Series::identity(Expansion::AtOrigin, 8);
        let fam = integrate_interior(&d, &f0, &[0.0], DEFAULT_STEP).unwrap();
        assert_eq!(fam.maps, vec![f0]);
    }

    #[test]
    fn cardioid_initial_condition_scales_exactly() {
        let sigma = C64::from_polar(1.0, -0.4);
        let d = DrivingData::radial_const(sigma);
        let g0 = Series::from_fn(Expansion::AtInfinity, -16, 1, |k| match k {
            1 => ONE,
            0 => 2.0 * sigma,
            -1 => sigma * sigma,
            _ => ZERO,
        });
        let fam = integrate_radial(&d, &g0, &[0.0, 0.7], DEFAULT_STEP).unwrap();
        let want = g0.scale(c(0.7f64.exp(), 0.0));
        assert!(fam.maps[1].max_abs_diff(&want).unwrap() < 1e-9);
    }

    #[test]
    fn chordal_two_rays() {
        let d = DrivingData::Chordal {
            u: ScalarDriver::Linear(3.0),
            a1: ScalarDriver::Poly(vec![0.0, 0.0, 1.0]),
        };
        let h0 = Series::identity(Expansion::AtInfinity, 16);
        let fam = integrate_chordal(&d, &h0, &[0.0, 0.4], DEFAULT_STEP).unwrap();
        let l: f64 = 0.4;
        let h = &fam.maps[1];
        assert_eq!(h.coeff(1), ONE);
        assert_eq!(h.coeff(0), ZERO);
        for (k, want) in [(-1, l * l), (-2, 2.0 * l.powi(3)), (-3, 4.0 * l.powi(4))] {
            assert!((h.coeff(k) - want).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = Series::from_fn(Expansion::AtInfinity, -12, 1, |k| {
            if k == 1 {
                c(1.5, 0.0)
            } else {
                c(0.3, -0.2 * k as f64) * 0.5f64.powi(-k)
            }
        });
        let f = reflect(&g).unwrap();
        assert_eq!(f.tag(), Expansion::AtOrigin);
        assert!((f.coeff(1) - c(1.0 / 1.5, 0.0)).norm() < 1e-15);
        let back = reflect(&f).unwrap();
        assert!(back.max_abs_diff(&g).unwrap() < 1e-12);
        let id = Series::identity(Expansion::AtInfinity, 5);
        assert!(reflect(&id)
            .unwrap()
            .max_abs_diff(&Series::identity(Expansion::AtOrigin, 7))
            .unwrap()
            == 0.0);
    }

    #[test]
    fn interior_integration_is_reflection_of_exterior() {
        let sigma = C64::from_polar(1.0, 2.0);
        let d = DrivingData::radial_const(sigma);
        let grid = [0.0, 0.2, 0.4];
        let ext = integrate_radial(&d, &Series::identity(Expansion::AtInfinity, 16), &grid, DEFAULT_STEP)
            .unwrap();
        let int = integrate_interior(&d, &Series::identity(Expansion::AtOrigin, 18), &grid, DEFAULT_STEP)
            .unwrap();
        for (e, i) in ext.maps.iter().zip(&int.maps) {
            let err = reflect(e).unwrap().max_abs_diff(i).unwrap();
            assert!(err < 1e-8, "{err}");
        }
    }

    #[test]
    fn hermite_interpolation_hits_nodes_and_tracks_solution() {
        let d = DrivingData::radial_const(ONE);
        let g0 = Series::identity(Expansion::AtInfinity, 16);
        let grid = uniform_grid(0.0, 1.0, 0.01);
        let fam = integrate_radial(&d, &g0, &grid, DEFAULT_STEP).unwrap();
        assert_eq!(fam.at(0.5).unwrap(), fam.maps[50]);
        let mid = fam.at(0.505).unwrap();
        let direct = integrate_radial(&d, &g0, &[0.0, 0.505], DEFAULT_STEP).unwrap();
        let err = mid.max_abs_diff(&direct.maps[1]).unwrap();
        assert!(err < 1e-6, "{err}");
        assert!(fam.at(1.1).is_err());
    }

    #[test]
    fn uniform_grid_ends_exactly() {
        let g = uniform_grid(0.0, 1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(uniform_grid(0.5, 0.5, 0.1), vec![0.5]);
    }
}
