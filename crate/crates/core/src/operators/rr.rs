//! Quantized-rearrangement backend: the field and the stencil are both
//! quantized, `A` is tabulated once per level pair, and each cell reduces to a
//! dot product between a table column and its weighted level histogram.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Field2;
use crate::kernels::{RangeKernel, Stencil};
use crate::quantize::{field_bounds, QuantMesh};

use super::check_mesh;

/// How many levels to use for the kernel mesh over `[0, max w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelLevels {
    /// Smallest count (up to 4096) that represents every weight exactly; if
    /// none does, the number of distinct weight values, capped at 4096.
    Auto,
    Fixed(usize),
}

pub const MAX_KERNEL_LEVELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrConfig {
    /// Value levels `L_Q`.
    pub levels: usize,
    pub kernel_levels: KernelLevels,
    /// Rebuild the value mesh from the current field at every call; otherwise
    /// the range of the first field seen by the workspace is kept.
    pub requantize: bool,
}

impl Default for RrConfig {
    fn default() -> Self {
        Self {
            levels: 500,
            kernel_levels: KernelLevels::Auto,
            requantize: true,
        }
    }
}

impl RrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::InvalidConfig("L_Q must be >= 1".into()));
        }
        if self.kernel_levels == KernelLevels::Fixed(0) {
            return Err(Error::InvalidConfig("L_R must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stencil weights rounded to integer multiples of `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedStencil {
    radius: usize,
    levels: usize,
    step: f64,
    mult: Vec<i64>,
}

impl QuantizedStencil {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Quantized weight at row-major offset index.
    pub fn weight_at(&self, k: usize) -> f64 {
        self.mult[k] as f64 * self.step
    }

    pub fn distinct_nonzero(&self) -> usize {
        let mut m: Vec<i64> = self.mult.iter().copied().filter(|&m| m != 0).collect();
        m.sort_unstable();
        m.dedup();
        m.len()
    }
}

fn multiples(w: &Stencil, levels: usize) -> (f64, Vec<i64>) {
    let max = w.max_weight();
    let mesh = QuantMesh::new(0.0, max, levels).expect("max weight is positive");
    let mult = w
        .weights()
        .iter()
        .map(|&x| (levels - mesh.index_of(x)) as i64)
        .collect();
    (mesh.step(), mult)
}

pub fn quantize_stencil(w: &Stencil, kl: KernelLevels) -> Result<QuantizedStencil> {
    let max = w.max_weight();
    if !(max > 0.0) {
        return Err(Error::InvalidArgument(
            "stencil has no positive weight".into(),
        ));
    }
    let levels = match kl {
        KernelLevels::Fixed(0) => return Err(Error::InvalidConfig("L_R must be >= 1".into())),
        KernelLevels::Fixed(l) => l,
        KernelLevels::Auto => auto_levels(w),
    };
    let (step, mult) = multiples(w, levels);
    Ok(QuantizedStencil {
        radius: w.radius(),
        levels,
        step,
        mult,
    })
}

fn auto_levels(w: &Stencil) -> usize {
    let max = w.max_weight();
    let mut distinct: Vec<f64> = w.weights().iter().copied().filter(|&x| x > 0.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    for levels in 1..=MAX_KERNEL_LEVELS {
        let step = max / levels as f64;
        let exact = distinct.iter().all(|&x| {
            let m = (x / step).round();
            m >= 1.0 && (m * step - x).abs() <= 1e-12 * max
        });
        if exact {
            return levels;
        }
    }
    distinct.len().clamp(1, MAX_KERNEL_LEVELS)
}

/// Caches for repeated applications with the same stencil.
#[derive(Debug, Default, Clone)]
pub struct RrWorkspace {
    stencil: Option<(Stencil, KernelLevels, QuantizedStencil)>,
    table: Option<(Vec<f64>, RangeKernel, Vec<f64>)>,
    pinned: Option<(f64, f64)>,
    pub parallel: bool,
}

impl RrWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// `L_R` of the cached quantized stencil.
    pub fn kernel_levels(&self) -> Option<usize> {
        self.stencil.as_ref().map(|s| s.2.levels)
    }

    fn quantized(&mut self, w: &Stencil, kl: KernelLevels) -> Result<&QuantizedStencil> {
        let hit = matches!(&self.stencil, Some((s, k, _)) if s == w && *k == kl);
        if !hit {
            let q = quantize_stencil(w, kl)?;
            self.stencil = Some((w.clone(), kl, q));
        }
        Ok(&self.stencil.as_ref().unwrap().2)
    }
}

/// Table transposed for contiguous access by own level: `t[k * nl + i] = A(q_i - q_k)`.
fn build_table(mesh: &QuantMesh, a: RangeKernel) -> Vec<f64> {
    let q = mesh.values();
    let nl = q.len();
    let mut t = vec![0.0; nl * nl];
    for k in 0..nl {
        for i in 0..nl {
            t[k * nl + i] = a.eval(q[i] - q[k]);
        }
    }
    t
}

pub fn op_rr(u: &Field2, w: &Stencil, a: RangeKernel, cfg: &RrConfig) -> Result<Field2> {
    op_rr_with(u, w, a, cfg, &mut RrWorkspace::new())
}

pub fn op_rr_with(
    u: &Field2,
    w: &Stencil,
    a: RangeKernel,
    cfg: &RrConfig,
    ws: &mut RrWorkspace,
) -> Result<Field2> {
    check_mesh(u, w)?;
    cfg.validate()?;

    let (lo, hi) = match (cfg.requantize, ws.pinned) {
        (false, Some(range)) => range,
        _ => {
            let b = field_bounds(u);
            if !cfg.requantize {
                ws.pinned = Some(b);
            }
            b
        }
    };
    let qmesh = QuantMesh::spanning(lo, hi, cfg.levels)?;

    let table_hit =
        matches!(&ws.table, Some((q, ak, _)) if q.as_slice() == qmesh.values() && *ak == a);
    if !table_hit {
        ws.table = Some((qmesh.values().to_vec(), a, build_table(&qmesh, a)));
    }
    let parallel = ws.parallel;
    let qs = ws.quantized(w, cfg.kernel_levels)?.clone();
    let table = &ws.table.as_ref().unwrap().2;

    let levels: Vec<u32> = u
        .values()
        .iter()
        .map(|&v| qmesh.index_of(v) as u32)
        .collect();
    let out = assemble(
        u.cells(),
        &levels,
        qmesh.values().len(),
        table,
        &qs,
        w.h(),
        parallel,
    );
    Ok(Field2::from_raw(*u.mesh(), out))
}

/// Nonzero entries `(o1, δ, m[o1][δ] - m[o1][δ+1])` of the row-wise difference
/// stencil: moving one column right adds `e` copies of column `j + δ`.
fn difference_stencil(qs: &QuantizedStencil) -> Vec<(isize, isize, i64)> {
    let r = qs.radius as isize;
    let side = 2 * qs.radius + 1;
    let m = |o1: isize, o2: isize| -> i64 {
        if o2 < -r || o2 > r {
            0
        } else {
            qs.mult[((o1 + r) as usize) * side + (o2 + r) as usize]
        }
    };
    let mut d = Vec::new();
    for o1 in -r..=r {
        for delta in (-r - 1)..=r {
            let e = m(o1, delta) - m(o1, delta + 1);
            if e != 0 {
                d.push((o1, delta, e));
            }
        }
    }
    d
}

/// Sliding-window minimum and maximum over `[j - r, j + r] ∩ [0, n)`.
fn window_extrema(col_min: &[u32], col_max: &[u32], r: usize) -> (Vec<u32>, Vec<u32>) {
    let n = col_min.len();
    let mut lo = vec![0; n];
    let mut hi = vec![0; n];
    let mut dmin: VecDeque<usize> = VecDeque::new();
    let mut dmax: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for j in 0..n {
        let right = (j + r).min(n - 1);
        while next <= right {
            while dmin.back().is_some_and(|&b| col_min[b] >= col_min[next]) {
                dmin.pop_back();
            }
            dmin.push_back(next);
            while dmax.back().is_some_and(|&b| col_max[b] <= col_max[next]) {
                dmax.pop_back();
            }
            dmax.push_back(next);
            next += 1;
        }
        let left = j.saturating_sub(r);
        while dmin.front().is_some_and(|&f| f < left) {
            dmin.pop_front();
        }
        while dmax.front().is_some_and(|&f| f < left) {
            dmax.pop_front();
        }
        lo[j] = col_min[dmin[0]];
        hi[j] = col_max[dmax[0]];
    }
    (lo, hi)
}

fn assemble(
    n: usize,
    levels: &[u32],
    nl: usize,
    table: &[f64],
    qs: &QuantizedStencil,
    h: f64,
    parallel: bool,
) -> Vec<f64> {
    let r = qs.radius;
    let side = 2 * r + 1;
    let scale = h * h * qs.step;
    let nnz = qs.mult.iter().filter(|&&m| m != 0).count();
    let diff = difference_stencil(qs);
    let sliding = 2 * diff.len() < nnz;

    let dot = |hist: &[i64], k: u32, lo: u32, hi: u32| -> f64 {
        let row = &table[k as usize * nl..][..nl];
        let mut acc = 0.0;
        for i in lo as usize..=hi as usize {
            acc += row[i] * hist[i] as f64;
        }
        acc * scale
    };

    let row_generic = |i: usize, out: &mut [f64], hist: &mut Vec<i64>| {
        let ri = r as isize;
        let o1_lo = (-ri).max(-(i as isize));
        let o1_hi = ri.min((n - 1 - i) as isize);
        for (j, slot) in out.iter_mut().enumerate() {
            let o2_lo = (-ri).max(-(j as isize));
            let o2_hi = ri.min((n - 1 - j) as isize);
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            for o1 in o1_lo..=o1_hi {
                let lrow = &levels[((i as isize + o1) as usize) * n..][..n];
                let mrow = &qs.mult[((o1 + ri) as usize) * side..][..side];
                for o2 in o2_lo..=o2_hi {
                    let m = mrow[(o2 + ri) as usize];
                    if m != 0 {
                        let l = lrow[(j as isize + o2) as usize];
                        hist[l as usize] += m;
                        lo = lo.min(l);
                        hi = hi.max(l);
                    }
                }
            }
            if lo > hi {
                *slot = 0.0;
                continue;
            }
            *slot = dot(hist, levels[i * n + j], lo, hi);
            hist[lo as usize..=hi as usize].fill(0);
        }
    };

    let row_sliding = |i: usize, out: &mut [f64], hist: &mut Vec<i64>| {
        let b_lo = i.saturating_sub(r);
        let b_hi = (i + r).min(n - 1);
        let mut col_min = vec![u32::MAX; n];
        let mut col_max = vec![0u32; n];
        for b in b_lo..=b_hi {
            for c in 0..n {
                let l = levels[b * n + c];
                col_min[c] = col_min[c].min(l);
                col_max[c] = col_max[c].max(l);
            }
        }
        let (win_lo, win_hi) = window_extrema(&col_min, &col_max, r);

        // full histogram for j = 0
        let ri = r as isize;
        for o1 in -ri..=ri {
            let row = i as isize + o1;
            if row < 0 || row >= n as isize {
                continue;
            }
            for o2 in 0..=ri.min(n as isize - 1) {
                let m = qs.mult[((o1 + ri) as usize) * side + (o2 + ri) as usize];
                hist[levels[row as usize * n + o2 as usize] as usize] += m;
            }
        }
        for j in 0..n {
            if j > 0 {
                for &(o1, delta, e) in &diff {
                    let row = i as isize + o1;
                    let col = j as isize + delta;
                    if row < 0 || row >= n as isize || col < 0 || col >= n as isize {
                        continue;
                    }
                    hist[levels[row as usize * n + col as usize] as usize] += e;
                }
            }
            out[j] = dot(hist, levels[i * n + j], win_lo[j], win_hi[j]);
        }
        let band_lo = *col_min.iter().min().unwrap() as usize;
        let band_hi = *col_max.iter().max().unwrap() as usize;
        hist[band_lo..=band_hi].fill(0);
    };

    let row = |i: usize, out: &mut [f64], hist: &mut Vec<i64>| {
        if sliding {
            row_sliding(i, out, hist)
        } else {
            row_generic(i, out, hist)
        }
    };

    let mut out = vec![0.0; n * n];
    if parallel {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each_init(|| vec![0i64; nl], |hist, (i, o)| row(i, o, hist));
    } else {
        let mut hist = vec![0i64; nl];
        for (i, o) in out.chunks_mut(n).enumerate() {
            row(i, o, &mut hist);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mesh2;
    use crate::kernels::{box_stencil, gaussian_stencil};

    #[test]
    fn auto_levels_for_box_is_exact() {
        let mesh = Mesh2::new(1.0, 100).unwrap();
        let b = box_stencil(0.1, &mesh).unwrap();
        let q = quantize_stencil(&b, KernelLevels::Auto).unwrap();
        assert_eq!(q.levels(), 4);
        for (k, &x) in b.weights().iter().enumerate() {
            assert!((q.weight_at(k) - x).abs() <= 1e-12 * b.max_weight());
        }
        let b = box_stencil(1.5 * mesh.h(), &mesh).unwrap();
        assert_eq!(
            quantize_stencil(&b, KernelLevels::Auto).unwrap().levels(),
            1
        );
    }

    #[test]
    fn auto_levels_for_gaussian_counts_distinct_values() {
        let mesh = Mesh2::new(1.0, 100).unwrap();
        let g = gaussian_stencil(0.03, &mesh).unwrap();
        let q = quantize_stencil(&g, KernelLevels::Auto).unwrap();
        assert_eq!(q.levels(), g.distinct_nonzero().min(MAX_KERNEL_LEVELS));
    }

    #[test]
    fn quantized_stencil_stays_symmetric() {
        let mesh = Mesh2::new(1.0, 50).unwrap();
        let g = gaussian_stencil(0.02, &mesh).unwrap();
        for l in [1, 2, 7, 100] {
            let q = quantize_stencil(&g, KernelLevels::Fixed(l)).unwrap();
            let n = q.mult.len();
            assert!((0..n).all(|k| q.mult[k] == q.mult[n - 1 - k]));
        }
        assert!(quantize_stencil(&g, KernelLevels::Fixed(0)).is_err());
    }

    #[test]
    fn window_extrema_matches_brute_force() {
        let mins = [5u32, 3, 8, 1, 9, 4, 4, 7];
        let maxs = [6u32, 9, 8, 2, 9, 5, 10, 7];
        for r in 0..5 {
            let (lo, hi) = window_extrema(&mins, &maxs, r);
            for j in 0..mins.len() {
                let a = j.saturating_sub(r);
                let b = (j + r).min(mins.len() - 1);
                assert_eq!(lo[j], *mins[a..=b].iter().min().unwrap());
                assert_eq!(hi[j], *maxs[a..=b].iter().max().unwrap());
            }
        }
    }
}
