//! Monotone piecewise-cubic interpolation (Fritsch-Carlson slopes).

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Rows<2>", into = "Vec<[f64; 2]>")]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, String> {
        if xs.len() != ys.len() {
            return Err("abscissae and values differ in length".into());
        }
        if xs.len() < 2 {
            return Err("a table needs at least two rows".into());
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err("table contains a non-finite value".into());
        }
        if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(format!(
                "lambda column must be strictly increasing (row {} has {} after {})",
                i + 1,
                xs[i + 1],
                xs[i]
            ));
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, ds })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("non-empty"))
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let x = x.clamp(self.xs[0], *self.xs.last().expect("non-empty"));
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        (i, (x - self.xs[i]) / h, h)
    }

    /// Value at `x`; clamped to the end values outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        let (i, s, h) = self.locate(x);
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.ys[i]
            + (s3 - 2.0 * s2 + s) * h * self.ds[i]
            + (-2.0 * s3 + 3.0 * s2) * self.ys[i + 1]
            + (s3 - s2) * h * self.ds[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, s, h) = self.locate(x);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * self.ys[i] + (-6.0 * s2 + 6.0 * s) * self.ys[i + 1]) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * self.ds[i]
            + (3.0 * s2 - 2.0 * s) * self.ds[i + 1]
    }
}

// Three-point end slope, limited so the end interval stays monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

impl TryFrom<Vec<[f64; 2]>> for MonotoneCubic {
    type Error = String;

    fn try_from(rows: Vec<[f64; 2]>) -> Result<Self, String> {
        Self::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
    }
}

impl TryFrom<Rows<2>> for MonotoneCubic {
    type Error = String;

    fn try_from(rows: Rows<2>) -> Result<Self, String> {
        Self::try_from(rows.0)
    }
}

/// Table rows whose first column is checked while parsing, so a decoding error
/// points at the offending row.
pub(crate) struct Rows<const N: usize>(pub Vec<[f64; N]>);

impl<const N: usize> serde::Serialize for Rows<N> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|r| r.to_vec()))
    }
}

impl<'de, const N: usize> Deserialize<'de> for Rows<N> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<const N: usize>(PhantomData<[f64; N]>);

        impl<'de, const N: usize> Visitor<'de> for V<N> {
            type Value = Rows<N>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a list of rows with {N} numbers each")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Rows<N>, A::Error> {
                let mut rows: Vec<[f64; N]> = Vec::new();
                while let Some(row) = seq.next_element::<Vec<f64>>()? {
                    let row: [f64; N] = row.try_into().map_err(|r: Vec<f64>| {
                        de::Error::custom(format!(
                            "row {} has {} entries, expected {N}",
                            rows.len(),
                            r.len()
                        ))
                    })?;
                    if let Some(prev) = rows.last() {
                        if row[0] <= prev[0] {
                            return Err(de::Error::custom(format!(
                                "lambda column must be strictly increasing (row {} has {} after {})",
                                rows.len(),
                                row[0],
                                prev[0]
                            )));
                        }
                    }
                    rows.push(row);
                }
                if rows.len() < 2 {
                    return Err(de::Error::custom("a table needs at least two rows"));
                }
                Ok(Rows(rows))
            }
        }

        d.deserialize_seq(V::<N>(PhantomData))
    }
}

impl From<MonotoneCubic> for Vec<[f64; 2]> {
    fn from(m: MonotoneCubic) -> Self {
        m.xs.iter().zip(&m.ys).map(|(&x, &y)| [x, y]).collect()
    }
}
