//! Explicit Euler time stepping over any operator backend.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{periodic_border_average, Field2, Mesh2};
use crate::kernels::{
    box_stencil, gaussian_stencil, RangeKernel, Reaction, SourceIntegral, Stencil,
};
use crate::metrics::{mass, max_abs};
use crate::operators::{apply, convolve_clipped, OperatorBackend, Workspace};

/// Spatial kernel description, resolved against a mesh at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StencilSpec {
    Box {
        radius: f64,
    },
    Gaussian {
        sigma: f64,
    },
    /// Identity convolution (weight `1/h²` at the origin).
    Point,
}

impl StencilSpec {
    pub fn build(&self, mesh: &Mesh2) -> Result<Stencil> {
        match *self {
            StencilSpec::Box { radius } => box_stencil(radius, mesh),
            StencilSpec::Gaussian { sigma } => gaussian_stencil(sigma, mesh),
            StencilSpec::Point => Ok(Stencil::point(mesh)),
        }
    }

    /// Box radius or Gaussian sigma; 0 for the point stencil.
    pub fn param(&self) -> f64 {
        match *self {
            StencilSpec::Box { radius } => radius,
            StencilSpec::Gaussian { sigma } => sigma,
            StencilSpec::Point => 0.0,
        }
    }
}

/// Growth of `max |u|` treated as a blow-up. Stable runs of the scheme stay
/// within a modest multiple of the initial maximum.
pub const DEFAULT_DIVERGENCE_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub final_time: f64,
    pub tau: f64,
    pub backend: OperatorBackend,
    pub kernel: RangeKernel,
    pub stencil: StencilSpec,
    pub reaction: Reaction,
    pub record_mass: bool,
    pub record_bounds: bool,
    /// Let backends split work across the rayon pool.
    pub parallel: bool,
    /// Abort once `max |u^n|` exceeds this multiple of `max(max |u^0|, 1)`.
    pub divergence_factor: Option<f64>,
}

impl SolverConfig {
    pub fn new(final_time: f64, tau: f64, backend: OperatorBackend, stencil: StencilSpec) -> Self {
        Self {
            final_time,
            tau,
            backend,
            kernel: RangeKernel::Identity,
            stencil,
            reaction: Reaction::Zero,
            record_mass: false,
            record_bounds: false,
            parallel: false,
            divergence_factor: Some(DEFAULT_DIVERGENCE_FACTOR),
        }
    }

    /// `N = T / τ`, required to be an integer within `1e-12`.
    pub fn steps(&self) -> Result<usize> {
        steps_for(self.final_time, self.tau)
    }
}

/// Number of steps of size `tau` covering `[0, final_time]`.
pub fn steps_for(final_time: f64, tau: f64) -> Result<usize> {
    if !(final_time > 0.0) || !(tau > 0.0) || !final_time.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "need T > 0 and tau > 0, got T = {final_time}, tau = {tau}"
        )));
    }
    let n = (final_time / tau).round();
    if n < 1.0 || (n * tau - final_time).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "tau = {tau} does not divide T = {final_time}"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityAdvisory {
    Satisfied { bound: f64 },
    Violated { bound: f64 },
}

impl StabilityAdvisory {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, StabilityAdvisory::Satisfied { .. })
    }

    pub fn bound(&self) -> f64 {
        match *self {
            StabilityAdvisory::Satisfied { bound } | StabilityAdvisory::Violated { bound } => bound,
        }
    }

    pub fn label(&self) -> &'static str {
        if self.is_satisfied() {
            "satisfied"
        } else {
            "violated"
        }
    }
}

/// Sufficient step bound `1 / (2 Lip(A, M) + Lip_s(f))`.
///
/// The sup-norm part of the reaction norm only shifts the bound on `|u|`, which
/// the caller already folds into `M`; the check is advisory and never aborts a run.
pub fn check_stability(tau: f64, a: RangeKernel, f: &Reaction, m: f64) -> StabilityAdvisory {
    let denom = 2.0 * a.lipschitz_bound(m) + f.state_lipschitz();
    let bound = if denom > 0.0 {
        1.0 / denom
    } else {
        f64::INFINITY
    };
    if tau < bound || tau == 0.0 {
        StabilityAdvisory::Satisfied { bound }
    } else {
        StabilityAdvisory::Violated { bound }
    }
}

/// Precomputed per-run state: stencil, caches and the reaction profile.
#[derive(Debug, Clone)]
pub struct Stepper {
    cfg: SolverConfig,
    stencil: Stencil,
    workspace: Workspace,
    profile: Option<(f64, Field2)>,
}

impl Stepper {
    pub fn new(cfg: SolverConfig, mesh: &Mesh2) -> Result<Self> {
        cfg.backend.validate()?;
        let stencil = cfg.stencil.build(mesh)?;
        let profile = match cfg.reaction {
            Reaction::Zero => None,
            Reaction::Exp1(r) => {
                let field = match r.integral {
                    SourceIntegral::Exact => Field2::from_fn(*mesh, |x1, x2| r.profile(x1, x2))?,
                    SourceIntegral::Scheme => {
                        let u0 = r.datum.sample(*mesh);
                        let conv = convolve_clipped(&u0, &stencil)?;
                        let values = u0
                            .values()
                            .iter()
                            .zip(conv.values())
                            .map(|(&u, &c)| (1.0 - r.lambda) * u - c)
                            .collect();
                        Field2::new(*mesh, values)?
                    }
                };
                Some((r.lambda, field))
            }
        };
        Ok(Self {
            cfg,
            stencil,
            workspace: Workspace::new(cfg.parallel),
            profile,
        })
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    /// `u + τ (A_h(u) + f(t, x_j, u))`.
    pub fn step(&mut self, u: &Field2, t: f64) -> Result<Field2> {
        let cfg = self.cfg;
        step(u, t, &cfg, self)
    }
}

/// One explicit Euler step from `(t_n, u_n)`; `ws` must have been built for `cfg`.
pub fn step(u: &Field2, t: f64, cfg: &SolverConfig, ws: &mut Stepper) -> Result<Field2> {
    let op = apply(&cfg.backend, u, &ws.stencil, cfg.kernel, &mut ws.workspace)?;
    let tau = cfg.tau;
    let mut next = op.into_values();
    match &ws.profile {
        None => {
            for (x, &v) in next.iter_mut().zip(u.values()) {
                *x = v + tau * *x;
            }
        }
        Some((lambda, profile)) => {
            let decay = (-lambda * t).exp();
            for ((x, &v), &p) in next.iter_mut().zip(u.values()).zip(profile.values()) {
                *x = v + tau * (*x + decay * p);
            }
        }
    }
    Ok(Field2::from_raw(*u.mesh(), next))
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_field: Field2,
    /// Seconds spent in the stepping loop only.
    pub wall_time_s: f64,
    pub steps: usize,
    pub mass_trace: Option<Vec<f64>>,
    pub max_abs_trace: Option<Vec<f64>>,
    pub advisory: StabilityAdvisory,
    /// Kernel levels `L_R` used by the rearrangement backend.
    pub kernel_levels: Option<usize>,
}

/// Integrates from `u0` to `T`. Fourier backends start from the border-averaged datum.
pub fn run(cfg: &SolverConfig, u0: &Field2) -> Result<RunResult> {
    let steps = cfg.steps()?;
    let mut stepper = Stepper::new(*cfg, u0.mesh())?;
    let advisory = check_stability(cfg.tau, cfg.kernel, &cfg.reaction, max_abs(u0));
    let mut u = if cfg.backend.is_periodic() {
        periodic_border_average(u0)
    } else {
        u0.clone()
    };

    let mut mass_trace = cfg.record_mass.then(|| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(mass(&u));
        v
    });
    let mut max_trace = cfg.record_bounds.then(|| {
        let mut v = Vec::with_capacity(steps + 1);
        v.push(max_abs(&u));
        v
    });

    let ceiling = cfg
        .divergence_factor
        .map_or(f64::INFINITY, |g| g * max_abs(&u).max(1.0));
    let start = Instant::now();
    for n in 0..steps {
        let t = n as f64 * cfg.tau;
        u = stepper.step(&u, t)?;
        if !u.is_finite() {
            return Err(Error::NonFiniteState {
                step: n + 1,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        let top = max_abs(&u);
        if top > ceiling {
            return Err(Error::Diverged {
                step: n + 1,
                max_abs: top,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
        }
        if let Some(tr) = mass_trace.as_mut() {
            tr.push(mass(&u));
        }
        if let Some(tr) = max_trace.as_mut() {
            tr.push(top);
        }
    }
    let wall_time_s = start.elapsed().as_secs_f64();

    Ok(RunResult {
        final_field: u,
        wall_time_s,
        steps,
        mass_trace,
        max_abs_trace: max_trace,
        advisory,
        kernel_levels: stepper.workspace.rr.kernel_levels(),
    })
}
