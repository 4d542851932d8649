//! Reference data for the manufactured-solution experiment, error metrics and
//! field diagnostics.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::grid::{Field2, Mesh2};
use crate::kernels::erf;

/// One axis of a Gaussian mode: mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub mu: f64,
    pub sigma: f64,
}

impl Axis {
    #[inline]
    fn density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * PI).sqrt())
    }

    /// Mass of the unit-mass 1D Gaussian on `[a, b]`.
    #[inline]
    fn mass(&self, a: f64, b: f64) -> f64 {
        let s = self.sigma * SQRT_2;
        0.5 * (erf((b - self.mu) / s) - erf((a - self.mu) / s))
    }
}

/// Sum of two separable Gaussian bumps, each of unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProductDatum {
    pub modes: [[Axis; 2]; 2],
}

impl Default for GaussianProductDatum {
    fn default() -> Self {
        let ax = |mu, sigma| Axis { mu, sigma };
        Self {
            modes: [
                [ax(0.55, 0.05), ax(0.5, 0.1)],
                [ax(0.45, 0.025), ax(0.5, 0.025)],
            ],
        }
    }
}

impl GaussianProductDatum {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.modes
            .iter()
            .map(|[a, b]| a.density(x1) * b.density(x2))
            .sum()
    }

    /// Mean of the datum over the square `(x1 - r, x1 + r) × (x2 - r, x2 + r)`.
    pub fn box_average(&self, x1: f64, x2: f64, r: f64) -> f64 {
        let total: f64 = self
            .modes
            .iter()
            .map(|[a, b]| a.mass(x1 - r, x1 + r) * b.mass(x2 - r, x2 + r))
            .sum();
        total / (4.0 * r * r)
    }

    /// Mean of the datum over the axis-aligned rectangle `[a1, b1] × [a2, b2]`.
    pub fn rect_average(&self, a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
        let total: f64 = self
            .modes
            .iter()
            .map(|[a, b]| a.mass(a1, b1) * b.mass(a2, b2))
            .sum();
        total / ((b1 - a1) * (b2 - a2))
    }

    /// Center samples on `mesh`.
    pub fn sample(&self, mesh: Mesh2) -> Field2 {
        Field2::from_fn(mesh, |x1, x2| self.eval(x1, x2)).expect("datum is finite")
    }

    /// Exact cell averages on `mesh`.
    pub fn cell_averages(&self, mesh: Mesh2) -> Field2 {
        let h = mesh.h();
        let n = mesh.cells();
        let mut values = Vec::with_capacity(mesh.len());
        for i in 0..n {
            for j in 0..n {
                let (a1, a2) = (i as f64 * h, j as f64 * h);
                values.push(self.rect_average(a1, a1 + h, a2, a2 + h));
            }
        }
        Field2::new(mesh, values).expect("datum is finite")
    }
}

pub fn eval_u0(x: (f64, f64)) -> f64 {
    GaussianProductDatum::default().eval(x.0, x.1)
}

pub fn exact_solution_exp1(t: f64, x: (f64, f64), lambda: f64) -> f64 {
    (-lambda * t).exp() * eval_u0(x)
}

pub fn exact_box_average_u0(x: (f64, f64), r: f64) -> f64 {
    GaussianProductDatum::default().box_average(x.0, x.1, r)
}

/// `Σ|approx - reference| / Σ|reference|` over cells.
pub fn relative_error(approx: &Field2, reference: &Field2) -> Result<f64> {
    if approx.cells() != reference.cells() {
        return Err(Error::InvalidSize(format!(
            "relative error between {}x{} and {}x{} fields",
            approx.cells(),
            approx.cells(),
            reference.cells(),
            reference.cells()
        )));
    }
    let den: f64 = reference.values().iter().map(|v| v.abs()).sum();
    if den == 0.0 {
        return Err(Error::DivisionByZero("reference field is identically zero"));
    }
    let num: f64 = approx
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(num / den)
}

/// `h² Σ u`.
pub fn mass(u: &Field2) -> f64 {
    let h = u.mesh().h();
    h * h * u.values().iter().sum::<f64>()
}

pub fn max_abs(u: &Field2) -> f64 {
    u.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}
