//! Direct summation over all stencil offsets.

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Field2;
use crate::kernels::{RangeKernel, Stencil};

use super::check_mesh;

/// `out[j] = h² Σ_o w[o] A(u[j+o] - u[j])` over offsets that stay inside the grid.
pub fn op_ptw(u: &Field2, w: &Stencil, a: RangeKernel) -> Result<Field2> {
    op_ptw_with(u, w, a, false)
}

pub fn op_ptw_with(u: &Field2, w: &Stencil, a: RangeKernel, parallel: bool) -> Result<Field2> {
    check_mesh(u, w)?;
    Ok(match a {
        RangeKernel::Identity => clipped(u, w, parallel, |s| s),
        RangeKernel::Power(_) => clipped(u, w, parallel, |s| a.eval(s)),
    })
}

fn clipped(u: &Field2, w: &Stencil, parallel: bool, a: impl Fn(f64) -> f64 + Sync) -> Field2 {
    let n = u.cells();
    let r = w.radius() as isize;
    let side = w.side();
    let h = w.h();
    let h2 = h * h;
    let vals = u.values();
    let weights = w.weights();

    let row = |i: usize, out: &mut [f64]| {
        let o1_lo = (-r).max(-(i as isize));
        let o1_hi = r.min((n - 1 - i) as isize);
        for (j, slot) in out.iter_mut().enumerate() {
            let uj = vals[i * n + j];
            let o2_lo = (-r).max(-(j as isize));
            let o2_hi = r.min((n - 1 - j) as isize);
            let mut acc = 0.0;
            for o1 in o1_lo..=o1_hi {
                let urow = &vals[((i as isize + o1) as usize) * n..][..n];
                let wrow = &weights[((o1 + r) as usize) * side..][..side];
                for o2 in o2_lo..=o2_hi {
                    let v = urow[(j as isize + o2) as usize];
                    acc += wrow[(o2 + r) as usize] * a(v - uj);
                }
            }
            *slot = h2 * acc;
        }
    };

    let mut out = vec![0.0; n * n];
    if parallel {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, o)| row(i, o));
    } else {
        out.chunks_mut(n).enumerate().for_each(|(i, o)| row(i, o));
    }
    Field2::from_raw(*u.mesh(), out)
}

/// `out[j] = h² Σ_o w[o] u[j+o]` over in-grid offsets (the clipped convolution).
pub fn convolve_clipped(u: &Field2, w: &Stencil) -> Result<Field2> {
    check_mesh(u, w)?;
    let n = u.cells() as isize;
    let r = w.radius() as isize;
    let h = w.h();
    let vals = u.values();
    let mut out = Vec::with_capacity(vals.len());
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for o1 in (-r).max(-i)..=r.min(n - 1 - i) {
                for o2 in (-r).max(-j)..=r.min(n - 1 - j) {
                    acc += w.weight(o1, o2) * vals[((i + o1) * n + j + o2) as usize];
                }
            }
            out.push(h * h * acc);
        }
    }
    Ok(Field2::from_raw(*u.mesh(), out))
}

/// Periodic counterpart of [`op_ptw`]: offsets wrap around the torus of `n × n` cells.
pub fn op_ptw_periodic(u: &Field2, w: &Stencil, a: RangeKernel) -> Result<Field2> {
    check_mesh(u, w)?;
    let n = u.cells() as isize;
    let r = w.radius() as isize;
    let h = w.h();
    let vals = u.values();
    let mut out = Vec::with_capacity(vals.len());
    for i in 0..n {
        for j in 0..n {
            let uj = vals[(i * n + j) as usize];
            let mut acc = 0.0;
            for o1 in -r..=r {
                let p1 = (i + o1).rem_euclid(n);
                for o2 in -r..=r {
                    let p2 = (j + o2).rem_euclid(n);
                    acc += w.weight(o1, o2) * a.eval(vals[(p1 * n + p2) as usize] - uj);
                }
            }
            out.push(h * h * acc);
        }
    }
    Ok(Field2::from_raw(*u.mesh(), out))
}
