//! Fourier-slice backend: for each value level `q_i` the convolution
//! `w * A(u - q_i)` is computed on the periodic grid by FFT, and every cell reads
//! its own level's slice (or interpolates between the two bracketing slices).

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{periodic_border_average, Field2};
use crate::kernels::{RangeKernel, Stencil};
use crate::quantize::{field_bounds, QuantMesh};

use super::check_mesh;
use super::dft::{embed_stencil_periodic, Fft2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FftConfig {
    /// Slice levels `L_Q` (the mesh has `L_Q + 1` slices).
    pub levels: usize,
    /// Blend the two bracketing slices linearly instead of taking the nearest.
    pub interpolate: bool,
    /// Zero-pad each axis to a power of two.
    pub pad_pow2: bool,
    /// Rebuild the slice mesh from the current field at every call; otherwise
    /// the range of the first field seen by the workspace is kept.
    pub requantize: bool,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self {
            levels: 10,
            interpolate: true,
            pad_pow2: false,
            requantize: false,
        }
    }
}

impl FftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::InvalidConfig("L_Q must be >= 1".into()));
        }
        Ok(())
    }
}

/// Transform size per axis for an `n`-cell grid and a stencil of radius `r`.
///
/// Unpadded runs use the grid itself. Padded runs need room for `r` wrapped
/// cells on each side, so the size is the next power of two `>= n + 2r`
/// (or `n` itself when it already is a power of two).
pub fn padded_size(n: usize, r: usize, pad_pow2: bool) -> usize {
    if !pad_pow2 || n.is_power_of_two() {
        n
    } else {
        (n + 2 * r).next_power_of_two()
    }
}

/// Per-run cache: transform plans, the kernel spectrum and the pinned slice range.
#[derive(Debug, Default, Clone)]
pub struct SpectrumWorkspace {
    key: Option<(Stencil, usize)>,
    plan: Option<Fft2>,
    spectrum: Vec<f64>,
    pinned: Option<(f64, f64)>,
    pub parallel: bool,
}

impl SpectrumWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Padded size of the cached spectrum.
    pub fn size(&self) -> Option<usize> {
        self.key.as_ref().map(|k| k.1)
    }

    /// Drops the pinned slice range so the next call measures the field again.
    pub fn reset_range(&mut self) {
        self.pinned = None;
    }

    fn prepare(&mut self, w: &Stencil, size: usize) -> Result<()> {
        if matches!(&self.key, Some((s, p)) if s == w && *p == size) {
            return Ok(());
        }
        if size < 2 * w.radius() + 1 {
            return Err(Error::InvalidArgument(format!(
                "stencil of radius {} does not fit a periodic grid of {} cells",
                w.radius(),
                size
            )));
        }
        let plan = Fft2::new(size, size)?;
        let mut buf: Vec<Complex64> = embed_stencil_periodic(w, size)?
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect();
        plan.forward(&mut buf, &mut Vec::new());
        // The embedded kernel is real and even, so its spectrum is real.
        self.spectrum = buf.iter().map(|z| z.re).collect();
        self.plan = Some(plan);
        self.key = Some((w.clone(), size));
        Ok(())
    }
}

pub fn op_fft(u: &Field2, w: &Stencil, a: RangeKernel, cfg: &FftConfig) -> Result<Field2> {
    op_fft_with(u, w, a, cfg, &mut SpectrumWorkspace::new())
}

/// Which slices a cell reads and with what weight.
struct Gather {
    /// `(cell, weight)` grouped by slice, cells ascending within each slice.
    by_slice: Vec<Vec<(u32, f64)>>,
}

fn gather_plan(v: &[f64], mesh: &QuantMesh, interpolate: bool) -> Gather {
    let nl = mesh.values().len();
    let mut by_slice: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nl];
    let last = nl - 1;
    let step = mesh.step();
    for (j, &x) in v.iter().enumerate() {
        let k = mesh.index_of(x);
        if !interpolate {
            by_slice[k].push((j as u32, 1.0));
            continue;
        }
        // bracket q_{i+1} <= x <= q_i; outside the mesh the end interval extrapolates
        let i = if x <= mesh.level(k) {
            k.min(last - 1)
        } else {
            k.saturating_sub(1)
        };
        let (qi, qn) = (mesh.level(i), mesh.level(i + 1));
        by_slice[i].push((j as u32, (x - qn) / step));
        by_slice[i + 1].push((j as u32, (qi - x) / step));
    }
    Gather { by_slice }
}

pub fn op_fft_with(
    u: &Field2,
    w: &Stencil,
    a: RangeKernel,
    cfg: &FftConfig,
    ws: &mut SpectrumWorkspace,
) -> Result<Field2> {
    check_mesh(u, w)?;
    cfg.validate()?;
    let n = u.cells();
    let r = w.radius();
    let size = padded_size(n, r, cfg.pad_pow2);
    ws.prepare(w, size)?;

    let v = periodic_border_average(u);
    let (lo, hi) = match (cfg.requantize, ws.pinned) {
        (false, Some(range)) => range,
        _ => {
            let b = field_bounds(&v);
            if !cfg.requantize {
                ws.pinned = Some(b);
            }
            b
        }
    };
    let qmesh = QuantMesh::spanning(lo, hi, cfg.levels)?;
    let plan = gather_plan(v.values(), &qmesh, cfg.interpolate);
    let needed: Vec<usize> = (0..plan.by_slice.len())
        .filter(|&i| !plan.by_slice[i].is_empty())
        .collect();

    let h = w.h();
    let scale = h * h / (size * size) as f64;
    let fft = ws.plan.as_ref().expect("prepared");
    let spectrum = &ws.spectrum;
    let vals = v.values();

    // Two real slices share one complex transform: H_a + i H_b.
    let slice_pair = |pair: &[usize]| -> Vec<Complex64> {
        let qa = qmesh.level(pair[0]);
        let qb = pair.get(1).map(|&i| qmesh.level(i));
        let mut buf = vec![Complex64::default(); size * size];
        let src = |p: usize| -> usize {
            // wrap-correct placement of the n-periodic field on the padded torus
            if p < n + r {
                p % n
            } else if p >= size - r {
                n - (size - p)
            } else {
                usize::MAX
            }
        };
        for p1 in 0..size {
            let s1 = src(p1);
            if s1 == usize::MAX {
                continue;
            }
            for p2 in 0..size {
                let s2 = src(p2);
                if s2 == usize::MAX {
                    continue;
                }
                let x = vals[s1 * n + s2];
                buf[p1 * size + p2] =
                    Complex64::new(a.eval(x - qa), qb.map_or(0.0, |q| a.eval(x - q)));
            }
        }
        let mut tmp = Vec::new();
        fft.forward(&mut buf, &mut tmp);
        for (z, &k) in buf.iter_mut().zip(spectrum) {
            *z *= k * scale;
        }
        fft.inverse_unscaled(&mut buf, &mut tmp);
        buf
    };

    let pairs: Vec<&[usize]> = needed.chunks(2).collect();
    let batch = if ws.parallel {
        rayon::current_num_threads().max(1) * 2
    } else {
        1
    };
    let mut out = vec![0.0; n * n];
    for group in pairs.chunks(batch) {
        let results: Vec<Vec<Complex64>> = if ws.parallel {
            group.par_iter().map(|p| slice_pair(p)).collect()
        } else {
            group.iter().map(|p| slice_pair(p)).collect()
        };
        // slices are accumulated in increasing index order regardless of batching
        for (pair, buf) in group.iter().zip(&results) {
            for (half, &slice) in pair.iter().enumerate() {
                for &(cell, weight) in &plan.by_slice[slice] {
                    let cell = cell as usize;
                    let (i, j) = (cell / n, cell % n);
                    let z = buf[i * size + j];
                    let f = if half == 0 { z.re } else { z.im };
                    out[cell] += weight * f;
                }
            }
        }
    }
    Ok(Field2::from_raw(*u.mesh(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_sizes() {
        assert_eq!(padded_size(100, 30, false), 100);
        assert_eq!(padded_size(100, 6, true), 128);
        assert_eq!(padded_size(100, 30, true), 256);
        assert_eq!(padded_size(300, 18, true), 512);
        assert_eq!(padded_size(300, 90, true), 512);
        assert_eq!(padded_size(64, 10, true), 64);
    }

    #[test]
    fn gather_weights_are_convex_inside_range() {
        let m = QuantMesh::new(0.0, 1.0, 4).unwrap();
        let v = [0.6, 1.0, 0.0, 0.25, 0.9];
        let g = gather_plan(&v, &m, true);
        let mut total = [0.0; 5];
        let mut recon = [0.0; 5];
        for (s, list) in g.by_slice.iter().enumerate() {
            for &(c, wgt) in list {
                assert!((-1e-15..=1.0 + 1e-15).contains(&wgt));
                total[c as usize] += wgt;
                recon[c as usize] += wgt * m.level(s);
            }
        }
        for c in 0..5 {
            assert!((total[c] - 1.0).abs() < 1e-15);
            assert!((recon[c] - v[c]).abs() < 1e-15);
        }
    }
}
