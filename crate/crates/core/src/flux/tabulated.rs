//! Custom flux given as samples `u,f,df,d2f`.

use serde::Deserialize;

use super::Shape;
use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Debug, Deserialize)]
struct Row {
    u: f64,
    f: f64,
    df: f64,
    d2f: f64,
}

/// Samples of a flux and its two derivatives on an increasing grid.
///
/// `f` is Hermite-interpolated from `(f, df)`, `f'` from `(df, d2f)`, and `f''`
/// is piecewise linear, so each level is continuous.
#[derive(Debug, Clone)]
pub struct TabulatedFlux {
    u: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
    d2f: Vec<f64>,
}

impl TabulatedFlux {
    pub fn from_csv_str(text: &str) -> Result<TabulatedFlux> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let want = ["u", "f", "df", "d2f"];
        if headers.len() != 4 || headers.iter().zip(want).any(|(h, w)| h != w) {
            return Err(Error::Parse(format!("flux table header must be u,f,df,d2f, got {:?}", headers)));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            rows.push(rec?);
        }
        Self::new(
            rows.iter().map(|r| r.u).collect(),
            rows.iter().map(|r| r.f).collect(),
            rows.iter().map(|r| r.df).collect(),
            rows.iter().map(|r| r.d2f).collect(),
        )
    }

    pub fn new(u: Vec<f64>, f: Vec<f64>, df: Vec<f64>, d2f: Vec<f64>) -> Result<TabulatedFlux> {
        let n = u.len();
        if n < 4 {
            return Err(Error::Parse(format!("flux table needs at least 4 rows, got {n}")));
        }
        if f.len() != n || df.len() != n || d2f.len() != n {
            return Err(Error::Parse("flux table columns differ in length".into()));
        }
        if u.iter().chain(&f).chain(&df).chain(&d2f).any(|v| !v.is_finite()) {
            return Err(Error::Parse("flux table contains a non-finite value".into()));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("flux table u column must be strictly increasing".into()));
        }
        let t = TabulatedFlux { u, f, df, d2f };
        t.check_consistency()?;
        Ok(t)
    }

    /// Each column must agree with the next one to the order of the sampling.
    fn check_consistency(&self) -> Result<()> {
        let fs = self.f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let ds = self.df.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let ss = self.d2f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..self.u.len() - 1 {
            let h = self.u[i + 1] - self.u[i];
            let pred_f = h / 2.0 * (self.df[i] + self.df[i + 1]) + h * h / 12.0 * (self.d2f[i] - self.d2f[i + 1]);
            let res_f = (self.f[i + 1] - self.f[i] - pred_f).abs();
            if res_f > 1e-3 * h * ds + 1e-9 * fs {
                return Err(Error::Parse(format!(
                    "flux table: f and df disagree on [{}, {}] (residual {res_f:.3e})",
                    self.u[i],
                    self.u[i + 1]
                )));
            }
            let pred_d = h / 2.0 * (self.d2f[i] + self.d2f[i + 1]);
            let res_d = (self.df[i + 1] - self.df[i] - pred_d).abs();
            if res_d > 1e-2 * h * ss + 1e-9 * ds {
                return Err(Error::Parse(format!(
                    "flux table: df and d2f disagree on [{}, {}] (residual {res_d:.3e})",
                    self.u[i],
                    self.u[i + 1]
                )));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.u[0], hi: self.u[self.u.len() - 1] }
    }

    pub fn shape(&self) -> Shape {
        let tol = 1e-12 * self.d2f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if self.d2f.iter().all(|&v| v >= -tol) {
            Shape::Convex
        } else if self.d2f.iter().all(|&v| v <= tol) {
            Shape::Concave
        } else {
            Shape::General
        }
    }

    fn locate(&self, x: f64) -> (usize, f64, f64) {
        let n = self.u.len();
        let x = x.clamp(self.u[0], self.u[n - 1]);
        let i = match self.u.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.u[i + 1] - self.u[i];
        (i, (x - self.u[i]) / h, h)
    }

    pub fn f(&self, x: f64) -> f64 {
        let (i, s, h) = self.locate(x);
        hermite(self.f[i], self.f[i + 1], self.df[i], self.df[i + 1], s, h)
    }

    pub fn df(&self, x: f64) -> f64 {
        let (i, s, h) = self.locate(x);
        hermite(self.df[i], self.df[i + 1], self.d2f[i], self.d2f[i + 1], s, h)
    }

    pub fn d2f(&self, x: f64) -> f64 {
        let (i, s, _) = self.locate(x);
        self.d2f[i] + s * (self.d2f[i + 1] - self.d2f[i])
    }
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, s: f64, h: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * m1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burgers_table(n: usize) -> String {
        let mut s = String::from("u,f,df,d2f\n");
        for i in 0..n {
            let u = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            s.push_str(&format!("{u},{},{u},1\n", 0.5 * u * u));
        }
        s
    }

    #[test]
    fn reproduces_quadratic() {
        let t = TabulatedFlux::from_csv_str(&burgers_table(21)).unwrap();
        for x in [-0.93, -0.1, 0.0, 0.37, 0.999] {
            assert!((t.f(x) - 0.5 * x * x).abs() < 1e-14);
            assert!((t.df(x) - x).abs() < 1e-14);
            assert_eq!(t.d2f(x), 1.0);
        }
        assert_eq!(t.shape(), Shape::Convex);
    }

    #[test]
    fn rejects_inconsistent_columns() {
        let text = burgers_table(21).replacen("0.5,0.125,0.5,1", "0.5,0.125,0.9,1", 1);
        assert!(matches!(TabulatedFlux::from_csv_str(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_bad_header_and_order() {
        assert!(TabulatedFlux::from_csv_str("x,f,df,d2f\n0,0,0,1\n").is_err());
        let text = "u,f,df,d2f\n0,0,0,1\n0.2,0.02,0.2,1\n0.1,0.005,0.1,1\n0.3,0.045,0.3,1\n";
        assert!(TabulatedFlux::from_csv_str(text).is_err());
        assert!(TabulatedFlux::from_csv_str("u,f,df,d2f\n0,0,0,1\n").is_err());
    }
}
