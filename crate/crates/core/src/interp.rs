//! Table lookups used by every component map.
//!
//! All lookups are exact at grid nodes and refuse to extrapolate.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A strictly increasing list of abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Axis(Vec<f64>);

impl Axis {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config(alloc::format!(
                "axis needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("axis contains non-finite value".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Config(alloc::format!(
                "axis not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self(points))
    }

    /// `count` evenly spaced points from `lo` to `hi` inclusive. The end points
    /// are stored exactly.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config("linspace needs count >= 2".into()));
        }
        let step = (hi - lo) / (count - 1) as f64;
        let mut pts: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
        pts[count - 1] = hi;
        Self::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.first() && x <= self.last()
    }

    /// Cell index and fractional position of `x`.
    ///
    /// A value equal to an interior node maps to the cell starting at that node
    /// with fraction exactly 0; the last node maps to the last cell with
    /// fraction exactly 1.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if !self.contains(x) {
            return None;
        }
        let p = &self.0;
        let n = p.len();
        // first index with p[i] > x
        let upper = p.partition_point(|&v| v <= x);
        if upper >= n {
            return Some((n - 2, 1.0));
        }
        let i = upper - 1;
        let t = if x == p[i] { 0.0 } else { (x - p[i]) / (p[i + 1] - p[i]) };
        Some((i, t))
    }

    pub(crate) fn envelope_error(&self, quantity: &'static str, x: f64) -> Error {
        Error::Envelope {
            quantity,
            value: x,
            min: self.first(),
            max: self.last(),
        }
    }
}

impl TryFrom<Vec<f64>> for Axis {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Axis> for Vec<f64> {
    fn from(a: Axis) -> Self {
        a.0
    }
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

/// Piecewise-linear curve `y(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    x: Axis,
    y: Vec<f64>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let x = Axis::new(x)?;
        if x.len() != y.len() {
            return Err(Error::Shape(alloc::format!(
                "curve has {} abscissae and {} values",
                x.len(),
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("curve contains non-finite value".into()));
        }
        Ok(Self { x, y })
    }

    pub fn xs(&self) -> &[f64] {
        self.x.points()
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn axis(&self) -> &Axis {
        &self.x
    }

    pub fn eval(&self, x: f64, quantity: &'static str) -> Result<f64> {
        let (i, t) = self
            .x
            .locate(x)
            .ok_or_else(|| self.x.envelope_error(quantity, x))?;
        Ok(lerp(self.y[i], self.y[i + 1], t))
    }

    /// Like [`Curve::eval`] but holds the end values outside the axis.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        if x <= self.x.first() {
            self.y[0]
        } else if x >= self.x.last() {
            self.y[self.y.len() - 1]
        } else {
            let (i, t) = self.x.locate(x).expect("inside axis");
            lerp(self.y[i], self.y[i + 1], t)
        }
    }

    pub fn max_value(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bilinear table `z(x, y)` stored row-major by `y` (one row per `y` node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    x: Axis,
    y: Axis,
    z: Vec<f64>,
}

impl Table2 {
    /// `rows[j][i]` is the value at `(x[i], y[j])`.
    pub fn from_rows(x: Axis, y: Axis, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::Shape(alloc::format!(
                "table has {} rows for {} row-axis nodes",
                rows.len(),
                y.len()
            )));
        }
        let mut z = Vec::with_capacity(x.len() * y.len());
        for (j, row) in rows.into_iter().enumerate() {
            if row.len() != x.len() {
                return Err(Error::Shape(alloc::format!(
                    "table row {} has {} values, expected {}",
                    j,
                    row.len(),
                    x.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(alloc::format!("table row {j} has non-finite value")));
            }
            z.extend(row);
        }
        Ok(Self { x, y, z })
    }

    pub fn from_fn(x: Axis, y: Axis, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut z = Vec::with_capacity(x.len() * y.len());
        for &yv in y.points() {
            for &xv in x.points() {
                z.push(f(xv, yv));
            }
        }
        Self { x, y, z }
    }

    pub fn x(&self) -> &Axis {
        &self.x
    }

    pub fn y(&self) -> &Axis {
        &self.y
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.z[j * self.x.len() + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.z.chunks(self.x.len())
    }

    pub(crate) fn map_values(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.z {
            *v = f(*v);
        }
    }

    pub fn eval(&self, x: f64, y: f64, qx: &'static str, qy: &'static str) -> Result<f64> {
        let (i, tx) = self.x.locate(x).ok_or_else(|| self.x.envelope_error(qx, x))?;
        let (j, ty) = self.y.locate(y).ok_or_else(|| self.y.envelope_error(qy, y))?;
        Ok(self.cell_eval(i, j, tx, ty))
    }

    #[inline]
    pub(crate) fn cell_eval(&self, i: usize, j: usize, tx: f64, ty: f64) -> f64 {
        let z00 = self.node(i, j);
        let z10 = self.node(i + 1, j);
        let z01 = self.node(i, j + 1);
        let z11 = self.node(i + 1, j + 1);
        lerp(lerp(z00, z10, tx), lerp(z01, z11, tx), ty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_table(corners: [f64; 4]) -> Table2 {
        // corners: (x0,y0), (x1,y0), (x0,y1), (x1,y1)
        Table2::from_rows(
            Axis::new(vec![0.0, 1.0]).unwrap(),
            Axis::new(vec![0.0, 1.0]).unwrap(),
            vec![vec![corners[0], corners[1]], vec![corners[2], corners[3]]],
        )
        .unwrap()
    }

    #[test]
    fn axis_rejects_non_increasing() {
        assert!(Axis::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Axis::new(vec![1.0]).is_err());
        assert!(Axis::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn locate_nodes_exactly() {
        let a = Axis::new(vec![0.0, 0.1, 0.3, 0.7]).unwrap();
        assert_eq!(a.locate(0.0), Some((0, 0.0)));
        assert_eq!(a.locate(0.1), Some((1, 0.0)));
        assert_eq!(a.locate(0.7), Some((2, 1.0)));
        assert_eq!(a.locate(0.8), None);
        assert_eq!(a.locate(-1e-12), None);
    }

    #[test]
    fn linspace_hits_end_points() {
        let a = Axis::linspace(0.3, 0.8, 101).unwrap();
        assert_eq!(a.first(), 0.3);
        assert_eq!(a.last(), 0.8);
        assert_eq!(a.len(), 101);
    }

    #[test]
    fn bilinear_cell_centres() {
        assert_eq!(unit_table([10.0, 10.0, 20.0, 20.0]).eval(0.5, 0.5, "x", "y").unwrap(), 15.0);
        assert_eq!(unit_table([8.0, 12.0, 16.0, 24.0]).eval(0.5, 0.5, "x", "y").unwrap(), 15.0);
        let v = unit_table([0.70, 0.80, 0.82, 0.92]).eval(0.5, 0.5, "x", "y").unwrap();
        assert!((v - 0.81).abs() < 1e-15);
    }

    #[test]
    fn curve_midpoint_and_envelope() {
        let c = Curve::new(vec![0.0, 10.0], vec![100.0, 200.0]).unwrap();
        assert_eq!(c.eval(5.0, "t").unwrap(), 150.0);
        assert!(matches!(c.eval(11.0, "t"), Err(Error::Envelope { .. })));
        assert_eq!(c.eval_clamped(11.0), 200.0);
    }

    #[test]
    fn ragged_table_rejected() {
        let r = Table2::from_rows(
            Axis::new(vec![0.0, 1.0]).unwrap(),
            Axis::new(vec![0.0, 1.0]).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0]],
        );
        assert!(matches!(r, Err(Error::Shape(_))));
    }
}
