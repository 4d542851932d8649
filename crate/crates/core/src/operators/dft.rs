//! Two-dimensional DFT on row-major arrays, backed by `rustfft`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernels::Stencil;

/// Planned forward/inverse transforms for one `rows × cols` shape.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSize(format!("DFT of a {rows}x{cols} array")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Unnormalized forward transform, in place. `tmp` is resized as needed.
    pub fn forward(&self, data: &mut [Complex64], tmp: &mut Vec<Complex64>) {
        self.run(data, tmp, &self.row_fwd, &self.col_fwd);
    }

    /// Unnormalized inverse transform, in place (no `1/(rows cols)` factor).
    pub fn inverse_unscaled(&self, data: &mut [Complex64], tmp: &mut Vec<Complex64>) {
        self.run(data, tmp, &self.row_inv, &self.col_inv);
    }

    fn run(
        &self,
        data: &mut [Complex64],
        tmp: &mut Vec<Complex64>,
        row: &Arc<dyn Fft<f64>>,
        col: &Arc<dyn Fft<f64>>,
    ) {
        assert_eq!(data.len(), self.rows * self.cols);
        row.process(data);
        tmp.resize(data.len(), Complex64::default());
        transpose(data, tmp, self.rows, self.cols);
        col.process(tmp);
        transpose(tmp, data, self.cols, self.rows);
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`, blocked for cache reuse.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

fn check_shape(len: usize, rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || len != rows * cols {
        return Err(Error::InvalidSize(format!(
            "array of {len} entries is not {rows}x{cols}"
        )));
    }
    Ok(())
}

/// `X[k] = Σ_p x[p] e^{-2πi k·p/N}` over a row-major `rows × cols` array.
pub fn dft2_forward(values: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    check_shape(values.len(), rows, cols)?;
    let plan = Fft2::new(rows, cols)?;
    let mut out = values.to_vec();
    plan.forward(&mut out, &mut Vec::new());
    Ok(out)
}

/// Inverse of [`dft2_forward`], including the `1/(rows cols)` factor.
pub fn dft2_inverse(values: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    check_shape(values.len(), rows, cols)?;
    let plan = Fft2::new(rows, cols)?;
    let mut out = values.to_vec();
    plan.inverse_unscaled(&mut out, &mut Vec::new());
    let scale = 1.0 / (rows * cols) as f64;
    for z in &mut out {
        *z *= scale;
    }
    Ok(out)
}

/// Places `w[o]` at `(o1 mod size, o2 mod size)` of a `size × size` zero array.
pub fn embed_stencil_periodic(w: &Stencil, size: usize) -> Result<Vec<f64>> {
    let r = w.radius();
    if size < 2 * r + 1 {
        return Err(Error::InvalidArgument(format!(
            "stencil of radius {r} does not fit a periodic grid of size {size}"
        )));
    }
    let mut out = vec![0.0; size * size];
    let wrap = |o: isize| o.rem_euclid(size as isize) as usize;
    for o1 in -(r as isize)..=(r as isize) {
        for o2 in -(r as isize)..=(r as isize) {
            out[wrap(o1) * size + wrap(o2)] = w.weight(o1, o2);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mesh2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..rows * cols)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    // O(N²) oracle
    fn naive_dft(x: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); rows * cols];
        for k1 in 0..rows {
            for k2 in 0..cols {
                let mut acc = Complex64::default();
                for p1 in 0..rows {
                    for p2 in 0..cols {
                        let phase = -2.0
                            * std::f64::consts::PI
                            * ((k1 * p1) as f64 / rows as f64 + (k2 * p2) as f64 / cols as f64);
                        acc += x[p1 * cols + p2] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k1 * cols + k2] = acc;
            }
        }
        out
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = vec![Complex64::default(); 12];
        x[0] = Complex64::new(1.0, 0.0);
        let s = dft2_forward(&x, 3, 4).unwrap();
        assert!(s
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn matches_naive_dft() {
        for &(r, c) in &[(8, 8), (3, 5), (6, 10), (1, 7)] {
            let x = random(r, c, 7);
            let fast = dft2_forward(&x, r, c).unwrap();
            let slow = naive_dft(&x, r, c);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn roundtrip() {
        let x = random(8, 8, 3);
        let back = dft2_inverse(&dft2_forward(&x, 8, 8).unwrap(), 8, 8).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(dft2_forward(&[], 0, 3).is_err());
        assert!(dft2_forward(&[Complex64::default(); 5], 2, 3).is_err());
    }

    #[test]
    fn embedding_examples() {
        let mesh = Mesh2::new(1.0, 8).unwrap();
        let p = Stencil::point(&mesh);
        let e = embed_stencil_periodic(&p, 8).unwrap();
        assert_eq!(e[0], 64.0);
        assert_eq!(e.iter().filter(|&&v| v != 0.0).count(), 1);

        let b = crate::kernels::box_stencil(1.5 * mesh.h(), &mesh).unwrap();
        assert_eq!(b.radius(), 1);
        let e = embed_stencil_periodic(&b, 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let inside = [0, 1, 7].contains(&i) && [0, 1, 7].contains(&j);
                assert_eq!(e[i * 8 + j] != 0.0, inside);
            }
        }
        assert_eq!(e.iter().sum::<f64>(), b.weights().iter().sum::<f64>());
        assert!(embed_stencil_periodic(&b, 2).is_err());
    }
}
