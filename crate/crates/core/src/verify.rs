//! Self-checks: numerics substrate and operator oracles on small problems.
//!
//! Each check compares a library routine against an independent reference
//! (naive DFT, direct double loops, Taylor series, the pointwise operator) and
//! reports the worst deviation next to its tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{periodic_border_average, Field2, Mesh2};
use crate::kernels::{box_stencil, erf, gaussian_stencil, RangeKernel, Reaction, Stencil};
use crate::metrics::{max_abs, GaussianProductDatum};
use crate::operators::{
    dft2_forward, dft2_inverse, embed_stencil_periodic, op_fft, op_ptw, op_rr, Complex64,
    FftConfig, KernelLevels, OperatorBackend, RrConfig,
};
use crate::quantize::{decreasing_rearrangement, distribution_function, field_bounds};
use crate::solver::{check_stability, run, SolverConfig, StencilSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Measured deviation and tolerance, or a short reason.
    pub detail: String,
}

impl Check {
    fn within(name: &'static str, err: f64, tol: f64) -> Self {
        Check {
            name,
            passed: err <= tol,
            detail: format!("max deviation {err:.3e} (tolerance {tol:.1e})"),
        }
    }

    fn from_result(name: &'static str, r: Result<Check>) -> Self {
        r.unwrap_or_else(|e| Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        })
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_field(mesh: Mesh2, rng: &mut ChaCha8Rng) -> Result<Field2> {
    let v = (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field2::new(mesh, v)
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation over cells at least `margin` cells away from the boundary.
pub fn interior_max_dev(a: &Field2, b: &Field2, margin: usize) -> f64 {
    let n = a.cells();
    let mut worst = 0.0f64;
    for i in margin..n.saturating_sub(margin) {
        for j in margin..n.saturating_sub(margin) {
            worst = worst.max((a.get(i, j) - b.get(i, j)).abs());
        }
    }
    worst
}

fn dft_roundtrip() -> Result<Check> {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for (rows, cols) in [(8, 8), (12, 10), (7, 16)] {
        let x: Vec<Complex64> = (0..rows * cols)
            .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let back = dft2_inverse(&dft2_forward(&x, rows, cols)?, rows, cols)?;
        for (a, b) in x.iter().zip(&back) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(Check::within("dft roundtrip", worst, 1e-10))
}

fn convolution_theorem() -> Result<Check> {
    let size = 8;
    let mut r = rng(2);
    let f: Vec<f64> = (0..size * size).map(|_| r.gen_range(-1.0..1.0)).collect();
    let g: Vec<f64> = (0..size * size).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut direct = vec![0.0; size * size];
    for p1 in 0..size {
        for p2 in 0..size {
            let mut acc = 0.0;
            for q1 in 0..size {
                for q2 in 0..size {
                    acc += f[q1 * size + q2]
                        * g[((p1 + size - q1) % size) * size + (p2 + size - q2) % size];
                }
            }
            direct[p1 * size + p2] = acc;
        }
    }
    let cx = |v: &[f64]| {
        v.iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect::<Vec<_>>()
    };
    let ff = dft2_forward(&cx(&f), size, size)?;
    let gg = dft2_forward(&cx(&g), size, size)?;
    let prod: Vec<Complex64> = ff.iter().zip(&gg).map(|(a, b)| a * b).collect();
    let back: Vec<f64> = dft2_inverse(&prod, size, size)?
        .iter()
        .map(|z| z.re)
        .collect();
    Ok(Check::within(
        "circular convolution theorem",
        max_dev(&direct, &back),
        1e-10,
    ))
}

fn stencil_embedding() -> Result<Check> {
    let mesh = Mesh2::new(1.0, 20)?;
    let w = gaussian_stencil(0.05, &mesh)?;
    let size = 16;
    let emb = embed_stencil_periodic(&w, size)?;
    let r = w.radius() as isize;
    let mut worst = 0.0f64;
    for o1 in -r..=r {
        for o2 in -r..=r {
            let p = (o1.rem_euclid(size as isize) as usize) * size
                + o2.rem_euclid(size as isize) as usize;
            worst = worst.max((emb[p] - w.weight(o1, o2)).abs());
        }
    }
    let total: f64 = emb.iter().sum();
    worst = worst.max((total - w.weights().iter().sum::<f64>()).abs());
    Ok(Check::within(
        "periodic stencil embedding",
        worst / w.max_weight(),
        1e-13,
    ))
}

fn pad_vs_unpad() -> Result<Check> {
    let mut r = rng(3);
    let mesh = Mesh2::new(1.0, 30)?;
    let mut worst = 0.0f64;
    for sigma in [0.03, 0.06] {
        let w = gaussian_stencil(sigma, &mesh)?;
        let u = random_field(mesh, &mut r)?;
        for a in [RangeKernel::Identity, RangeKernel::Power(3.0)] {
            let base = FftConfig {
                levels: 40,
                ..FftConfig::default()
            };
            let plain = op_fft(&u, &w, a, &base)?;
            let padded = op_fft(
                &u,
                &w,
                a,
                &FftConfig {
                    pad_pow2: true,
                    ..base
                },
            )?;
            worst = worst.max(max_dev(plain.values(), padded.values()));
        }
    }
    Ok(Check::within("pow2 padding vs unpadded", worst, 1e-9))
}

fn erf_taylor() -> Check {
    // erf(x) = 2/√π Σ (-1)^k x^(2k+1) / (k! (2k+1)), 20 terms
    let taylor = |x: f64| {
        let mut term = x;
        let mut sum = x;
        for k in 1..20 {
            term *= -x * x / k as f64;
            sum += term / (2 * k + 1) as f64;
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    };
    let worst = (-200..=200)
        .map(|i| i as f64 / 100.0)
        .map(|x| (erf(x) - taylor(x)).abs())
        .fold(0.0, f64::max);
    Check::within("erf vs Taylor series on [-2, 2]", worst, 1e-7)
}

fn equimeasurability() -> Result<Check> {
    let mut r = rng(4);
    let mesh = Mesh2::new(1.0, 12)?;
    let values = (0..mesh.len())
        .map(|_| r.gen_range(0..9) as f64 * 0.5)
        .collect();
    let u = Field2::new(mesh, values)?;
    let star = Field2::new(mesh, decreasing_rearrangement(&u))?;
    let mut mismatches = 0;
    for k in -1..=9 {
        let t = k as f64 * 0.5 + 0.25;
        for q in [t, t - 0.25] {
            if distribution_function(&u, q) != distribution_function(&star, q) {
                mismatches += 1;
            }
        }
    }
    Ok(Check {
        name: "equimeasurability of the decreasing rearrangement",
        passed: mismatches == 0,
        detail: format!("{mismatches} threshold mismatches"),
    })
}

/// `5 Lip(A) q` with `q` the value-mesh step and `Lip` over the value spread.
fn quantization_bound(u: &Field2, a: RangeKernel, levels: usize) -> f64 {
    let (lo, hi) = field_bounds(u);
    let q = (hi - lo) / levels as f64;
    5.0 * a.lipschitz_bound(hi - lo) * q
}

fn rr_vs_ptw() -> Result<Check> {
    let mut r = rng(5);
    let mesh = Mesh2::new(1.0, 16)?;
    let w = box_stencil(3.0 * mesh.h(), &mesh)?;
    let cfg = RrConfig {
        levels: 500,
        ..RrConfig::default()
    };
    let mut ratio = 0.0f64;
    for trial in 0..20 {
        let u = random_field(mesh, &mut r)?;
        let a = if trial % 2 == 0 {
            RangeKernel::Identity
        } else {
            RangeKernel::Power(3.0)
        };
        let dev = max_dev(
            op_rr(&u, &w, a, &cfg)?.values(),
            op_ptw(&u, &w, a)?.values(),
        );
        ratio = ratio.max(dev / quantization_bound(&u, a, cfg.levels));
    }
    Ok(Check {
        name: "rr vs ptw on 20 random 16x16 fields",
        passed: ratio <= 1.0,
        detail: format!("worst deviation / (5 Lip q) = {ratio:.3}"),
    })
}

fn fft_vs_ptw() -> Result<Check> {
    let mut r = rng(6);
    let mesh = Mesh2::new(1.0, 16)?;
    let w = box_stencil(3.0 * mesh.h(), &mesh)?;
    let cfg = FftConfig {
        levels: 500,
        ..FftConfig::default()
    };
    let mut ratio = 0.0f64;
    for trial in 0..20 {
        let u = periodic_border_average(&random_field(mesh, &mut r)?);
        let a = if trial % 2 == 0 {
            RangeKernel::Identity
        } else {
            RangeKernel::Power(3.0)
        };
        let dev = interior_max_dev(&op_fft(&u, &w, a, &cfg)?, &op_ptw(&u, &w, a)?, w.radius());
        ratio = ratio.max(dev / (quantization_bound(&u, a, cfg.levels) + 1e-9));
    }
    Ok(Check {
        name: "fft vs ptw on 20 periodic 16x16 fields (interior)",
        passed: ratio <= 1.0,
        detail: format!("worst deviation / (5 Lip q + 1e-9) = {ratio:.3}"),
    })
}

fn exact_quantization() -> Result<Check> {
    let mut r = rng(7);
    let n = 16;
    let mesh = Mesh2::new(1.0, n)?;
    let mut worst = 0.0f64;
    // integer values hit the 9-step mesh over [0, 9] exactly; a box of radius
    // 2.5h covers whole cells only, so its single weight is exact on any kernel mesh
    let w = box_stencil(2.5 * mesh.h(), &mesh)?;
    let a = RangeKernel::Power(3.0);
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n * n).map(|_| r.gen_range(0..10) as f64).collect();
        v[n + 1] = 0.0;
        v[n + 2] = 9.0;
        // opposite borders equal, so border averaging leaves the field alone
        for k in 0..n {
            v[(n - 1) * n + k] = v[k];
        }
        for k in 0..n {
            v[k * n + n - 1] = v[k * n];
        }
        let u = Field2::new(mesh, v)?;
        let ptw = op_ptw(&u, &w, a)?;
        let rr = op_rr(
            &u,
            &w,
            a,
            &RrConfig {
                levels: 9,
                kernel_levels: KernelLevels::Fixed(2),
                requantize: true,
            },
        )?;
        worst = worst.max(max_dev(rr.values(), ptw.values()));
        let fft = op_fft(
            &u,
            &w,
            a,
            &FftConfig {
                levels: 9,
                interpolate: false,
                ..FftConfig::default()
            },
        )?;
        worst = worst.max(interior_max_dev(&fft, &ptw, w.radius()));
    }
    Ok(Check::within(
        "exact quantization: rr and fft equal ptw",
        worst,
        1e-10,
    ))
}

fn conservation() -> Result<Check> {
    let mesh = Mesh2::new(1.0, 24)?;
    let u0 = GaussianProductDatum::default().sample(mesh);
    let mut worst = 0.0f64;
    for backend in [
        OperatorBackend::Ptw,
        OperatorBackend::Rr(RrConfig::default()),
    ] {
        let mut cfg = SolverConfig::new(0.1, 0.01, backend, StencilSpec::Gaussian { sigma: 0.05 });
        cfg.kernel = RangeKernel::Power(3.0);
        cfg.record_mass = true;
        let res = run(&cfg, &u0)?;
        let trace = res.mass_trace.unwrap_or_default();
        let m0 = trace[0];
        for m in &trace {
            worst = worst.max((m - m0).abs() / m0.abs());
        }
    }
    Ok(Check::within(
        "mass conservation of ptw and rr (f = 0)",
        worst,
        1e-11,
    ))
}

fn stability_flag() -> Result<Check> {
    let mesh = Mesh2::new(1.0, 50)?;
    let m = max_abs(&GaussianProductDatum::default().sample(mesh));
    let a = RangeKernel::Power(3.0);
    let coarse = check_stability(0.1, a, &Reaction::Zero, m);
    let fine = check_stability(1e-4, a, &Reaction::Zero, m);
    Ok(Check {
        name: "stability advisory for p = 3",
        passed: !coarse.is_satisfied() && fine.is_satisfied(),
        detail: format!("bound {:.3e} at M = {m:.2}", coarse.bound()),
    })
}

fn stencil_mass() -> Result<Check> {
    let mesh = Mesh2::new(1.0, 50)?;
    let mut worst = 0.0f64;
    let stencils: Vec<Stencil> = vec![
        box_stencil(0.1, &mesh)?,
        box_stencil(0.055, &mesh)?,
        gaussian_stencil(0.03, &mesh)?,
    ];
    for w in &stencils {
        worst = worst.max((w.mass() - 1.0).abs());
    }
    Ok(Check::within("stencils integrate to one", worst, 1e-12))
}

/// Runs every check; a few seconds in release builds.
pub fn run_all() -> Vec<Check> {
    vec![
        Check::from_result("dft roundtrip", dft_roundtrip()),
        Check::from_result("circular convolution theorem", convolution_theorem()),
        Check::from_result("periodic stencil embedding", stencil_embedding()),
        Check::from_result("pow2 padding vs unpadded", pad_vs_unpad()),
        erf_taylor(),
        Check::from_result("equimeasurability", equimeasurability()),
        Check::from_result("stencils integrate to one", stencil_mass()),
        Check::from_result("rr vs ptw", rr_vs_ptw()),
        Check::from_result("fft vs ptw", fft_vs_ptw()),
        Check::from_result("exact quantization", exact_quantization()),
        Check::from_result("mass conservation", conservation()),
        Check::from_result("stability advisory", stability_flag()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
