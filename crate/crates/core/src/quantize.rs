//! Range quantization on decreasing uniform meshes, plus the decreasing
//! rearrangement and distribution function of a field.

use crate::error::{Error, Result};
use crate::grid::Field2;

/// Decreasing uniform mesh `q_i = c_max - i s`, `i = 0..=levels`, of `[c_min, c_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantMesh {
    c_min: f64,
    c_max: f64,
    step: f64,
    values: Vec<f64>,
}

/// `rho = value + remainder` with `value` the nearest mesh level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantDecomp {
    pub index: usize,
    pub value: f64,
    pub remainder: f64,
}

impl QuantMesh {
    pub fn new(c_min: f64, c_max: f64, levels: usize) -> Result<Self> {
        if !(c_max > c_min) || !c_min.is_finite() || !c_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "quantization range needs c_max > c_min, got [{c_min}, {c_max}]"
            )));
        }
        if levels < 1 {
            return Err(Error::InvalidArgument("levels must be >= 1".into()));
        }
        let step = (c_max - c_min) / levels as f64;
        let mut values: Vec<f64> = (0..=levels).map(|i| c_max - i as f64 * step).collect();
        values[levels] = c_min;
        Ok(Self {
            c_min,
            c_max,
            step,
            values,
        })
    }

    /// Mesh over `[min, max]`; a degenerate range `min == max = c` is widened to `[c - 1, c + 1]`.
    pub fn spanning(min: f64, max: f64, levels: usize) -> Result<Self> {
        if min == max {
            Self::new(min - 1.0, max + 1.0, levels)
        } else {
            Self::new(min, max, levels)
        }
    }

    pub fn c_min(&self) -> f64 {
        self.c_min
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Number of intervals `L_S`.
    pub fn levels(&self) -> usize {
        self.values.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn level(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Index of the nearest level; ties go to the smaller index, out-of-range
    /// inputs clamp to the endpoint levels.
    #[inline]
    pub fn index_of(&self, rho: f64) -> usize {
        let last = self.levels();
        if rho >= self.c_max {
            return 0;
        }
        if rho <= self.c_min {
            return last;
        }
        let t = (self.c_max - rho) / self.step;
        let mut best = ((t - 0.5).ceil().max(0.0) as usize).min(last);
        // The guess can be one off from roundoff; settle it on the stored levels.
        let mut best_d = (rho - self.values[best]).abs();
        if best > 0 {
            let d = (rho - self.values[best - 1]).abs();
            if d <= best_d {
                best -= 1;
                best_d = d;
            }
        }
        if best < last {
            let d = (rho - self.values[best + 1]).abs();
            if d < best_d {
                best += 1;
            }
        }
        best
    }

    pub fn quantize(&self, rho: f64) -> QuantDecomp {
        let index = self.index_of(rho);
        let value = self.values[index];
        QuantDecomp {
            index,
            value,
            remainder: rho - value,
        }
    }
}

pub fn quantize(rho: f64, mesh: &QuantMesh) -> QuantDecomp {
    mesh.quantize(rho)
}

/// Per-cell level index; the preimages of each index are the level sets `U_i`.
pub fn field_level_indices(u: &Field2, mesh: &QuantMesh) -> Vec<usize> {
    u.values().iter().map(|&v| mesh.index_of(v)).collect()
}

pub fn field_bounds(u: &Field2) -> (f64, f64) {
    u.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Cell values sorted non-increasingly (each entry stands for a cell of measure `h²`).
pub fn decreasing_rearrangement(u: &Field2) -> Vec<f64> {
    let mut v = u.values().to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Measure of `{x : u(x) > q}`.
pub fn distribution_function(u: &Field2, q: f64) -> f64 {
    let h = u.mesh().h();
    let count = u.values().iter().filter(|&&v| v > q).count();
    h * h * count as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mesh2;
    use proptest::prelude::*;

    #[test]
    fn mesh_examples() {
        let m = QuantMesh::new(0.0, 1.0, 4).unwrap();
        assert_eq!(m.values(), &[1.0, 0.75, 0.5, 0.25, 0.0]);
        assert_eq!(m.step(), 0.25);

        let m = QuantMesh::new(0.0, 1.0, 500).unwrap();
        assert!((m.step() - 0.002).abs() < 1e-18);
        assert_eq!(m.values().len(), 501);

        let m = QuantMesh::new(-3.0, 5.0, 1).unwrap();
        assert_eq!(m.values(), &[5.0, -3.0]);
        assert_eq!(m.step(), 8.0);
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(QuantMesh::new(1.0, 1.0, 4).is_err());
        assert!(QuantMesh::new(2.0, 1.0, 4).is_err());
        assert!(QuantMesh::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn degenerate_range_widens() {
        let m = QuantMesh::spanning(3.0, 3.0, 10).unwrap();
        assert_eq!(m.c_min(), 2.0);
        assert_eq!(m.c_max(), 4.0);
        assert_eq!(m.quantize(3.0).remainder, 0.0);
    }

    #[test]
    fn quantize_examples() {
        let m = QuantMesh::new(0.0, 1.0, 4).unwrap();
        let d = quantize(0.6, &m);
        assert_eq!(d.index, 2);
        assert_eq!(d.value, 0.5);
        assert!((d.remainder - 0.1).abs() < 1e-15);

        // equidistant from 1.0 and 0.75: smaller index wins
        let d = quantize(0.875, &m);
        assert_eq!(d.index, 0);
        assert_eq!(d.value, 1.0);
        assert_eq!(d.remainder, -0.125);

        for (i, &q) in m.values().iter().enumerate() {
            let d = quantize(q, &m);
            assert_eq!((d.index, d.value, d.remainder), (i, q, 0.0));
        }
    }

    #[test]
    fn quantize_clamps_out_of_range() {
        let m = QuantMesh::new(0.0, 1.0, 4).unwrap();
        let d = quantize(1.7, &m);
        assert_eq!(d.index, 0);
        assert!((d.remainder - 0.7).abs() < 1e-15);
        let d = quantize(-0.3, &m);
        assert_eq!(d.index, 4);
        assert!((d.remainder + 0.3).abs() < 1e-15);
    }

    #[test]
    fn level_indices_examples() {
        let mesh = Mesh2::new(1.0, 4).unwrap();
        let qm = QuantMesh::new(0.0, 1.0, 4).unwrap();
        let u = Field2::constant(mesh, qm.level(3));
        assert!(field_level_indices(&u, &qm).iter().all(|&i| i == 3));

        let vals: Vec<f64> = (0..16).map(|k| qm.level(k % 5)).collect();
        let u = Field2::new(mesh, vals.clone()).unwrap();
        let idx = field_level_indices(&u, &qm);
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(i, k % 5);
            assert_eq!(qm.level(i), vals[k]);
        }
    }

    #[test]
    fn bounds_and_rearrangement() {
        let mesh = Mesh2::new(1.0, 2).unwrap();
        let u = Field2::new(mesh, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(field_bounds(&u), (1.0, 4.0));
        let c = Field2::constant(mesh, 7.0);
        assert_eq!(field_bounds(&c), (7.0, 7.0));
        assert_eq!(decreasing_rearrangement(&c), vec![7.0; 4]);

        let u = Field2::new(mesh, vec![1.0, 3.0, 2.0, 2.0]).unwrap();
        assert_eq!(decreasing_rearrangement(&u), vec![3.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn distribution_function_examples() {
        let mesh = Mesh2::new(1.0, 2).unwrap();
        let c = Field2::constant(mesh, 2.0);
        assert_eq!(distribution_function(&c, 2.0), 0.0);
        assert_eq!(distribution_function(&c, 1.0), 1.0);
        let u = Field2::new(mesh, vec![1.0, 3.0, 2.0, 2.0]).unwrap();
        assert_eq!(distribution_function(&u, 1.5), 0.75);
    }

    fn random_field(values: Vec<f64>) -> Field2 {
        let mesh = Mesh2::new(1.0, 4).unwrap();
        Field2::new(mesh, values).unwrap()
    }

    proptest! {
        #[test]
        fn quantize_reconstructs(rho in -10.0f64..10.0, lo in -5.0f64..0.0, width in 0.1f64..8.0, levels in 1usize..600) {
            let m = QuantMesh::new(lo, lo + width, levels).unwrap();
            let d = m.quantize(rho);
            prop_assert!((d.value + d.remainder - rho).abs() <= 1e-15 * rho.abs().max(1.0));
            if rho >= m.c_min() && rho <= m.c_max() {
                prop_assert!(d.remainder.abs() <= m.step() / 2.0 + 1e-15);
            }
            // nearest level, smaller index on ties
            for (i, &q) in m.values().iter().enumerate() {
                let dq = (rho - q).abs();
                prop_assert!(dq > d.remainder.abs() || (dq == d.remainder.abs() && i >= d.index));
            }
        }

        #[test]
        fn rearrangement_is_sorted_permutation(values in proptest::collection::vec(-50.0f64..50.0, 16)) {
            let u = random_field(values.clone());
            let r = decreasing_rearrangement(&u);
            prop_assert!(r.windows(2).all(|w| w[0] >= w[1]));
            let mut a = values.clone();
            a.sort_by(f64::total_cmp);
            let mut b = r.clone();
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn distribution_function_non_increasing(values in proptest::collection::vec(-5.0f64..5.0, 16), q1 in -6.0f64..6.0, dq in 0.0f64..3.0) {
            let u = random_field(values);
            prop_assert!(distribution_function(&u, q1 + dq) <= distribution_function(&u, q1));
        }

        #[test]
        fn levels_reconstruct_within_half_step(values in proptest::collection::vec(0.0f64..1.0, 16), levels in 1usize..50) {
            let u = random_field(values);
            let qm = QuantMesh::new(0.0, 1.0, levels).unwrap();
            for (&v, i) in u.values().iter().zip(field_level_indices(&u, &qm)) {
                prop_assert!((v - qm.level(i)).abs() <= qm.step() / 2.0 + 1e-15);
            }
        }
    }
}
