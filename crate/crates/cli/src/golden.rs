//! Closed-form reference values for the four examples: Faber polynomials, flow
//! coefficients and hodograph solutions.

use lowner::loewner::ClosedForm;
use lowner::reduction::TimeVector;
use lowner::{Complex64 as C64, LaurentPolynomial};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `Phi_2 = w^2 - 2 lambda`, `Phi_3 = w^3 - 3 lambda w - 3 lambda U` for the slit.
pub fn slit_faber(u: f64, lambda: f64) -> [LaurentPolynomial; 2] {
    [
        LaurentPolynomial { lo: 0, coeffs: vec![c(-2.0 * lambda), c(0.0), c(1.0)] },
        LaurentPolynomial {
            lo: 0,
            coeffs: vec![c(-3.0 * lambda * u), c(-3.0 * lambda), c(0.0), c(1.0)],
        },
    ]
}

/// Expected flow coefficients `(n, value)` at `lambda`.
pub fn flow_coefficients(form: ClosedForm, lambda: f64) -> Vec<(i32, C64)> {
    let e = lambda.exp();
    match form {
        ClosedForm::ChordalSlit { u } => vec![(1, c(1.0)), (2, c(2.0 * u)), (3, c(3.0 * u * u - 3.0 * lambda))],
        ClosedForm::ChordalTwoRays => vec![(1, c(1.0)), (2, c(6.0 * lambda)), (3, c(30.0 * lambda * lambda))],
        ClosedForm::RadialSlit { sigma } => vec![
            (0, c(1.0)),
            (1, sigma * e),
            (2, 2.0 * sigma * sigma * e * (3.0 * e - 2.0)),
        ],
        ClosedForm::RadialCardioidLike { sigma } => {
            vec![(0, c(1.0)), (1, sigma * e), (2, 6.0 * e * e * sigma * sigma)]
        }
    }
}

/// `lambda(t)` in closed form, where the times have the required shape:
/// `t3 = 0` (A.1.2), `t_n = 0` for `n > 3` (A.1.1), only `t0`, `t1` (A.2.1), only
/// `t0`, `t1`, `t2` with the `+` root (A.2.2).
pub fn lambda(form: ClosedForm, t: &TimeVector) -> f64 {
    let x = t.base();
    let tr = |n: i32| t.get(n).re;
    match form {
        ClosedForm::ChordalSlit { u } => (x + tr(1) + 2.0 * u * tr(2) + 3.0 * u * u * tr(3)) / (3.0 * tr(3)),
        ClosedForm::ChordalTwoRays => -(x + tr(1)) / (6.0 * tr(2)),
        ClosedForm::RadialSlit { sigma } => (-x / (2.0 * (t.get(1) * sigma).re)).ln(),
        ClosedForm::RadialCardioidLike { sigma } => {
            let a = (t.get(1) * sigma).re;
            let b = (t.get(2) * sigma * sigma).re;
            if b == 0.0 {
                (-x / (2.0 * a)).ln()
            } else {
                ((-a + (a * a - 12.0 * x * b).sqrt()) / (12.0 * b)).ln()
            }
        }
    }
}

/// The parameters and time vector used by `golden` for each example.
pub fn default_case(id: &str) -> Option<(ClosedForm, TimeVector)> {
    let sigma = C64::from_polar(1.0, 0.9);
    let case = match id {
        // lambda = 0.3
        "A.1.1" => (
            ClosedForm::ChordalSlit { u: 0.5 },
            TimeVector::dkp(0.45 - 0.5 - 0.375, [(1, 0.0), (2, 0.5), (3, 0.5)]),
        ),
        // lambda = 1/3
        "A.1.2" => (ClosedForm::ChordalTwoRays, TimeVector::dkp(-1.0, [(2, 0.5)])),
        // lambda = log 1.5
        "A.2.1" => (
            ClosedForm::RadialSlit { sigma },
            TimeVector::dtoda(15.0, [(1, C64::new(-5.0, 2.0) / sigma)]),
        ),
        // lambda = log 1.5
        "A.2.2" => (
            ClosedForm::RadialCardioidLike { sigma },
            TimeVector::dtoda(15.0, [(1, C64::new(-5.0, 2.0) / sigma)]),
        ),
        _ => return None,
    };
    Some((case.0, case.1.expect("valid default times")))
}

pub const EXAMPLES: [&str; 4] = ["A.1.1", "A.1.2", "A.2.1", "A.2.2"];
