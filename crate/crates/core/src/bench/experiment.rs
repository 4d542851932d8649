//! Sweep execution: one solver run per `(n, kernel parameter, τ, method)`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field2, Mesh2};
use crate::kernels::{Exp1Reaction, RangeKernel, Reaction};
use crate::metrics::{relative_error, GaussianProductDatum};
use crate::operators::{quantize_stencil, FftConfig, OperatorBackend, RrConfig};
use crate::solver::{check_stability, run, SolverConfig, StencilSpec};

use super::config::{ExperimentSpec, InitialDatum, KernelFamily, Method};
use super::output::{CsvRow, FAILED};

/// Magic bytes opening a reference sidecar, followed by `n` as a little-endian
/// `u64` and `n²` little-endian `f64` values in row-major order.
pub const REFERENCE_MAGIC: &[u8; 8] = b"NLREF001";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    pub n: usize,
    pub kernel_param: f64,
    pub tau: f64,
    pub method: Method,
}

impl ExperimentSpec {
    /// Every sweep point, grid-major, then kernel parameter, step and method.
    pub fn points(&self) -> Vec<RunPoint> {
        let mut out = Vec::new();
        for &n in &self.grids {
            for &kernel_param in &self.kernel_params {
                for &tau in &self.taus {
                    for &method in &self.methods {
                        out.push(RunPoint {
                            n,
                            kernel_param,
                            tau,
                            method,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn range_kernel(&self) -> Result<RangeKernel> {
        match self.p {
            None => Ok(RangeKernel::Identity),
            Some(p) => RangeKernel::power(p),
        }
    }

    pub fn stencil(&self, param: f64) -> StencilSpec {
        match self.kernel {
            KernelFamily::Box => StencilSpec::Box { radius: param },
            KernelFamily::Gaussian => StencilSpec::Gaussian { sigma: param },
        }
    }

    pub fn backend(&self, method: Method) -> OperatorBackend {
        let fft = FftConfig {
            levels: self.fft_slices,
            interpolate: self.interpolate,
            pad_pow2: false,
            requantize: self.fft_requantize,
        };
        match method {
            Method::Ptw => OperatorBackend::Ptw,
            Method::Rr => OperatorBackend::Rr(RrConfig {
                levels: self.lq,
                kernel_levels: self.lr,
                requantize: self.rr_requantize,
            }),
            Method::Fft => OperatorBackend::Fft(fft),
            Method::Ffto => OperatorBackend::Fft(FftConfig {
                pad_pow2: true,
                ..fft
            }),
        }
    }

    pub fn reaction(&self, param: f64) -> Reaction {
        match self.lambda {
            Some(lambda) => {
                Reaction::Exp1(Exp1Reaction::new(lambda, param).with_integral(self.source))
            }
            None => Reaction::Zero,
        }
    }

    /// Solver settings of one sweep point (single-threaded inside the run).
    pub fn solver_config(&self, point: &RunPoint) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(
            self.final_time,
            point.tau,
            self.backend(point.method),
            self.stencil(point.kernel_param),
        );
        cfg.kernel = self.range_kernel()?;
        cfg.reaction = self.reaction(point.kernel_param);
        cfg.record_mass = true;
        Ok(cfg)
    }
}

/// Initial field on an `n × n` grid of the unit square.
pub fn initial_field(spec: &ExperimentSpec, n: usize) -> Result<Field2> {
    let mesh = Mesh2::new(1.0, n)?;
    match spec.init {
        InitialDatum::Gaussians => Ok(GaussianProductDatum::default().sample(mesh)),
        InitialDatum::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ n as u64);
            let values = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            Field2::new(mesh, values)
        }
    }
}

fn exact_final(spec: &ExperimentSpec, u0: &Field2) -> Option<Field2> {
    if !spec.has_exact_solution() {
        return None;
    }
    let decay = (-spec.lambda? * spec.final_time).exp();
    u0.map(|v| decay * v).ok()
}

/// Sidecar path of the Ptw reference for grid `n` and kernel parameter `param`.
pub fn reference_path(spec: &ExperimentSpec, n: usize, param: f64) -> Option<PathBuf> {
    let tau = spec.reference_tau?;
    let kernel = match spec.kernel {
        KernelFamily::Box => "box",
        KernelFamily::Gaussian => "gauss",
    };
    let p = spec.p.map_or("id".to_string(), |p| format!("{p}"));
    let init = match spec.init {
        InitialDatum::Gaussians => "g".to_string(),
        InitialDatum::Random => format!("rand{}", spec.seed),
    };
    let lambda = spec.lambda.map_or("none".to_string(), |l| format!("{l}"));
    let name = format!(
        "ref_{}_n{n}_{kernel}{param}_p{p}_l{lambda}_tau{tau}_T{}_{init}.bin",
        spec.experiment, spec.final_time
    );
    Some(spec.out.join("reference").join(name))
}

pub fn write_reference(path: &Path, u: &Field2) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut bytes = Vec::with_capacity(16 + 8 * u.values().len());
    bytes.extend_from_slice(REFERENCE_MAGIC);
    bytes.extend_from_slice(&(u.cells() as u64).to_le_bytes());
    for v in u.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

/// Reads a sidecar written by [`write_reference`]; the grid must match `mesh`.
pub fn read_reference(path: &Path, mesh: Mesh2) -> Result<Field2> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let corrupt = |what: &str| Error::InvalidArgument(format!("{}: {what}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != REFERENCE_MAGIC {
        return Err(corrupt("not a reference file"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if n != mesh.cells() {
        return Err(corrupt("grid size does not match"));
    }
    if bytes.len() != 16 + 8 * n * n {
        return Err(corrupt("truncated"));
    }
    let values = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Field2::new(mesh, values)
}

/// Loads the cached reference or computes and stores it. `None` when the experiment
/// has no reference step or the reference run itself fails.
fn reference_field(spec: &ExperimentSpec, n: usize, param: f64) -> Result<Option<Field2>> {
    let (Some(tau), Some(path)) = (spec.reference_tau, reference_path(spec, n, param)) else {
        return Ok(None);
    };
    let u0 = initial_field(spec, n)?;
    if path.exists() {
        if let Ok(f) = read_reference(&path, *u0.mesh()) {
            return Ok(Some(f));
        }
    }
    let point = RunPoint {
        n,
        kernel_param: param,
        tau,
        method: Method::Ptw,
    };
    let mut cfg = spec.solver_config(&point)?;
    cfg.record_mass = false;
    match run(&cfg, &u0) {
        Ok(res) => {
            write_reference(&path, &res.final_field)?;
            Ok(Some(res.final_field))
        }
        Err(_) => Ok(None),
    }
}

/// Runs one sweep point and turns the outcome into a row. Solver failures are
/// recorded in the row; `reference` overrides the closed-form solution.
pub fn run_point(spec: &ExperimentSpec, point: &RunPoint, reference: Option<&Field2>) -> CsvRow {
    let mut row = CsvRow {
        experiment: spec.experiment.to_string(),
        method: point.method.as_str().to_string(),
        n: point.n,
        tau: point.tau,
        kernel_param: point.kernel_param,
        p: spec.p,
        l_q: match point.method {
            Method::Ptw => None,
            Method::Rr => Some(spec.lq),
            Method::Fft | Method::Ffto => Some(spec.fft_slices),
        },
        l_r: None,
        runtime_s: 0.0,
        rel_err: FAILED.to_string(),
        mass_drift: None,
        max_abs_final: None,
        stability_advisory: String::new(),
    };

    let prepared = spec
        .solver_config(point)
        .and_then(|cfg| Ok((cfg, initial_field(spec, point.n)?)));
    let (cfg, u0) = match prepared {
        Ok(x) => x,
        Err(_) => return row,
    };
    if point.method == Method::Rr {
        let levels = cfg
            .stencil
            .build(u0.mesh())
            .and_then(|w| quantize_stencil(&w, spec.lr));
        row.l_r = levels.ok().map(|q| q.levels());
    }
    row.stability_advisory = check_stability(
        cfg.tau,
        cfg.kernel,
        &cfg.reaction,
        crate::metrics::max_abs(&u0),
    )
    .label()
    .to_string();

    let res = match run(&cfg, &u0) {
        Ok(res) => res,
        Err(Error::NonFiniteState { elapsed_s, .. }) | Err(Error::Diverged { elapsed_s, .. }) => {
            row.runtime_s = elapsed_s;
            return row;
        }
        Err(_) => return row,
    };
    row.runtime_s = res.wall_time_s;
    row.max_abs_final = Some(crate::metrics::max_abs(&res.final_field));
    if let Some(trace) = &res.mass_trace {
        let m0 = trace[0];
        if m0 != 0.0 {
            let drift = trace.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
            row.mass_drift = Some(drift / m0.abs());
        }
    }
    let exact = exact_final(spec, &u0);
    row.rel_err = match reference.or(exact.as_ref()) {
        Some(r) => match relative_error(&res.final_field, r) {
            Ok(e) => format!("{e}"),
            Err(_) => String::new(),
        },
        None => String::new(),
    };
    row
}

/// Executes every sweep point of a validated spec. With `threads > 1` points
/// run concurrently on a dedicated pool; timings are then not comparable.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CsvRow>> {
    spec.validate()?;
    let points = spec.points();
    let threads = spec.threads.unwrap_or(1).max(1);

    let body = || -> Result<Vec<CsvRow>> {
        let mut keys: Vec<(usize, f64)> = Vec::new();
        if !spec.has_exact_solution() && spec.reference_tau.is_some() {
            for p in &points {
                if !keys.contains(&(p.n, p.kernel_param)) {
                    keys.push((p.n, p.kernel_param));
                }
            }
        }
        let refs: Vec<Option<Field2>> = if threads > 1 {
            keys.par_iter()
                .map(|&(n, k)| reference_field(spec, n, k))
                .collect::<Result<_>>()?
        } else {
            keys.iter()
                .map(|&(n, k)| reference_field(spec, n, k))
                .collect::<Result<_>>()?
        };
        let lookup = |p: &RunPoint| {
            keys.iter()
                .position(|&(n, k)| n == p.n && k == p.kernel_param)
                .and_then(|i| refs[i].as_ref())
        };
        Ok(if threads > 1 {
            points
                .par_iter()
                .map(|p| run_point(spec, p, lookup(p)))
                .collect()
        } else {
            points
                .iter()
                .map(|p| run_point(spec, p, lookup(p)))
                .collect()
        })
    };

    if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(body)
    } else {
        body()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::config::{ExperimentId, Scale};

    fn tiny(exp: ExperimentId, dir: &Path) -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(exp, Scale::Desk);
        s.grids = vec![20];
        s.taus = vec![0.1];
        s.kernel_params = vec![s.kernel_params[2]];
        s.out = dir.to_path_buf();
        s
    }

    #[test]
    fn exp1_rows_carry_errors() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny(ExperimentId::Exp1, dir.path());
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            let e = r.rel_err_value().unwrap();
            assert!(e > 0.0 && e < 0.1, "{r:?}");
            assert_eq!(r.stability_advisory, "satisfied");
        }
        assert_eq!(rows[1].l_r, Some(4));
    }

    #[test]
    fn reference_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Mesh2::new(1.0, 6).unwrap();
        let u = Field2::from_fn(mesh, |x, y| x * 3.0 - y).unwrap();
        let path = dir.path().join("r.bin");
        write_reference(&path, &u).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], REFERENCE_MAGIC);
        assert_eq!(bytes.len(), 16 + 8 * 36);
        assert_eq!(read_reference(&path, mesh).unwrap(), u);
        assert!(read_reference(&path, Mesh2::new(1.0, 8).unwrap()).is_err());
    }

    #[test]
    fn exp3_compares_against_cached_reference() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = tiny(ExperimentId::Exp3, dir.path());
        spec.taus = vec![0.01];
        spec.reference_tau = Some(0.01);
        spec.methods = vec![Method::Ptw, Method::Rr];
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows[0].rel_err_value(), Some(0.0));
        // coarse grid: only ten distinct kernel values, so L_R = 10
        assert!(rows[1].rel_err_value().unwrap() < 5e-2);
        let path = reference_path(&spec, 20, spec.kernel_params[0]).unwrap();
        assert!(path.exists());
        let again = run_experiment(&spec).unwrap();
        assert_eq!(again[1].rel_err, rows[1].rel_err);
    }

    #[test]
    fn random_datum_is_seeded() {
        let mut spec = ExperimentSpec::preset(ExperimentId::Custom, Scale::Desk);
        spec.init = InitialDatum::Random;
        spec.seed = 9;
        let a = initial_field(&spec, 8).unwrap();
        assert_eq!(a, initial_field(&spec, 8).unwrap());
        spec.seed = 10;
        assert_ne!(a, initial_field(&spec, 8).unwrap());
    }
}
