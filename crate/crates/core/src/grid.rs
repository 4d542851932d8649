//! Uniform square meshes and piecewise-constant fields.
//!
//! Cells are addressed mathematically by `(j1, j2) ∈ {1..n}²` with centers
//! `((j1 - 1/2) h, (j2 - 1/2) h)`. Storage is 0-based row-major: cell `(j1, j2)`
//! lives at flat index `(j1 - 1) * n + (j2 - 1)`, so rows run along `x1`.

use crate::error::{Error, Result};

/// Uniform mesh of `(0, L)²` with `n` cells per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh2 {
    side: f64,
    cells: usize,
}

impl Mesh2 {
    pub fn new(side: f64, cells: usize) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain side must be positive and finite, got {side}"
            )));
        }
        if cells < 2 || cells % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "cells per side must be even and at least 2, got {cells}"
            )));
        }
        Ok(Self { side, cells })
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.cells
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.side / self.cells as f64
    }

    /// Total number of cells, `n²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.cells * self.cells
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center of the 0-based cell `(i, j)`.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Center of the 1-based cell `(j1, j2)`.
    pub fn center_1based(&self, j1: usize, j2: usize) -> (f64, f64) {
        assert!(j1 >= 1 && j2 >= 1 && j1 <= self.cells && j2 <= self.cells);
        self.center(j1 - 1, j2 - 1)
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.cells + j
    }

    /// Same cell geometry (within relative roundoff on `h`).
    pub fn compatible_h(&self, h: f64) -> bool {
        (self.h() - h).abs() <= 1e-12 * self.h()
    }
}

/// Piecewise-constant scalar field: one value per cell, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2 {
    mesh: Mesh2,
    values: Vec<f64>,
}

impl Field2 {
    /// Wraps `values`; rejects wrong lengths and non-finite entries.
    pub fn new(mesh: Mesh2, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::InvalidSize(format!(
                "expected {} values for a {}x{} mesh, got {}",
                mesh.len(),
                mesh.cells(),
                mesh.cells(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { mesh, values })
    }

    pub(crate) fn from_raw(mesh: Mesh2, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.len());
        Self { mesh, values }
    }

    pub fn constant(mesh: Mesh2, value: f64) -> Self {
        Self {
            mesh,
            values: vec![value; mesh.len()],
        }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(mesh: Mesh2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        cell_average_field(f, mesh, 1)
    }

    #[inline]
    pub fn mesh(&self) -> &Mesh2 {
        &self.mesh
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.flat(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field2::new(self.mesh, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Cell averages of `f` by `m × m` midpoint tensor quadrature; `m = 1` samples centers.
///
/// Fails if `f` returns a non-finite value anywhere.
pub fn cell_average_field(
    f: impl Fn(f64, f64) -> f64,
    mesh: Mesh2,
    subsamples: usize,
) -> Result<Field2> {
    if subsamples == 0 {
        return Err(Error::InvalidArgument("subsamples must be >= 1".into()));
    }
    let n = mesh.cells();
    let h = mesh.h();
    let sub = h / subsamples as f64;
    let inv = 1.0 / (subsamples * subsamples) as f64;
    let mut values = Vec::with_capacity(mesh.len());
    for i in 0..n {
        for j in 0..n {
            let v = if subsamples == 1 {
                let (x1, x2) = mesh.center(i, j);
                f(x1, x2)
            } else {
                let x0 = i as f64 * h;
                let y0 = j as f64 * h;
                let mut acc = 0.0;
                for a in 0..subsamples {
                    let x1 = x0 + (a as f64 + 0.5) * sub;
                    for b in 0..subsamples {
                        acc += f(x1, y0 + (b as f64 + 0.5) * sub);
                    }
                }
                acc * inv
            };
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    index: values.len(),
                });
            }
            values.push(v);
        }
    }
    Ok(Field2::from_raw(mesh, values))
}

/// Makes opposite boundary layers equal so the field can be treated as periodic.
///
/// Interior cells are untouched; each side cell (corners excluded) is replaced by
/// the mean with the cell facing it across the domain, and the four corners are
/// replaced by their joint mean.
pub fn periodic_border_average(u: &Field2) -> Field2 {
    let n = u.cells();
    let last = n - 1;
    let mesh = *u.mesh();
    let mut out = u.values.clone();
    let at = |i: usize, j: usize| u.values[mesh.flat(i, j)];

    for k in 1..last {
        let rows = 0.5 * (at(0, k) + at(last, k));
        out[mesh.flat(0, k)] = rows;
        out[mesh.flat(last, k)] = rows;

        let cols = 0.5 * (at(k, 0) + at(k, last));
        out[mesh.flat(k, 0)] = cols;
        out[mesh.flat(k, last)] = cols;
    }

    let corners = ((at(0, 0) + at(0, last)) + (at(last, 0) + at(last, last))) * 0.25;
    for (i, j) in [(0, 0), (0, last), (last, 0), (last, last)] {
        out[mesh.flat(i, j)] = corners;
    }
    Field2::from_raw(mesh, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_mesh_examples() {
        let m = Mesh2::new(1.0, 100).unwrap();
        assert_eq!(m.cells(), 100);
        assert!((m.h() - 0.01).abs() < 1e-16);

        let m = Mesh2::new(1.0, 2).unwrap();
        assert_eq!(m.center_1based(1, 1), (0.25, 0.25));
        assert_eq!(m.center_1based(1, 2), (0.25, 0.75));
        assert_eq!(m.center_1based(2, 1), (0.75, 0.25));
        assert_eq!(m.center_1based(2, 2), (0.75, 0.75));

        assert_eq!(Mesh2::new(2.0, 4).unwrap().h(), 0.5);
    }

    #[test]
    fn build_mesh_rejects_bad_input() {
        assert!(Mesh2::new(1.0, 3).is_err());
        assert!(Mesh2::new(1.0, 0).is_err());
        assert!(Mesh2::new(0.0, 4).is_err());
        assert!(Mesh2::new(-1.0, 4).is_err());
    }

    #[test]
    fn flat_index_is_row_major() {
        let m = Mesh2::new(1.0, 4).unwrap();
        // (j1, j2) = (2, 3) -> (2-1)*4 + (3-1)
        assert_eq!(m.flat(1, 2), 6);
    }

    #[test]
    fn field_rejects_non_finite_and_bad_len() {
        let m = Mesh2::new(1.0, 2).unwrap();
        assert!(Field2::new(m, vec![0.0; 3]).is_err());
        assert!(matches!(
            Field2::new(m, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(Error::NonFiniteValue { index: 1 })
        ));
    }

    #[test]
    fn cell_average_constant_and_linear() {
        let m = Mesh2::new(1.0, 2).unwrap();
        let c = cell_average_field(|_, _| 3.5, m, 4).unwrap();
        assert!(c.values().iter().all(|&v| v == 3.5));

        let lin = cell_average_field(|x1, _| x1, m, 4).unwrap();
        for j in 0..2 {
            assert!((lin.get(0, j) - 0.25).abs() < 1e-15);
            assert!((lin.get(1, j) - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_average_propagates_failure() {
        let m = Mesh2::new(1.0, 4).unwrap();
        let r = cell_average_field(|x1, _| if x1 > 0.5 { f64::NAN } else { 1.0 }, m, 2);
        assert!(matches!(r, Err(Error::NonFiniteValue { .. })));
        assert!(cell_average_field(|_, _| 1.0, m, 0).is_err());
    }

    #[test]
    fn border_average_constant_and_minimal_mesh() {
        let m = Mesh2::new(1.0, 6).unwrap();
        let c = Field2::constant(m, 1.25);
        assert_eq!(periodic_border_average(&c), c);

        let m = Mesh2::new(1.0, 2).unwrap();
        let u = Field2::new(m, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = periodic_border_average(&u);
        assert!(p.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn border_average_leaves_interior() {
        let m = Mesh2::new(1.0, 6).unwrap();
        let u = Field2::from_fn(m, |x, y| x * 3.0 + y * y).unwrap();
        let p = periodic_border_average(&u);
        for i in 1..5 {
            for j in 1..5 {
                assert_eq!(p.get(i, j), u.get(i, j));
            }
        }
        assert_eq!(p.get(0, 3), p.get(5, 3));
        assert_eq!(p.get(2, 0), p.get(2, 5));
    }
}
