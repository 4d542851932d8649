//! Discrete nonlocal diffusion operators.
//!
//! All backends approximate `A_h(u)[j] = h² Σ_o w[o] A(u[j+o] - u[j])`:
//!
//! * [`op_ptw`] sums over offsets directly, clipping the stencil at the boundary;
//! * [`op_rr`] quantizes values and weights and works with weighted level histograms;
//! * [`op_fft`] convolves per-level slices on the periodic grid.

pub mod dft;
mod fft;
mod ptw;
mod rr;

pub use self::dft::{dft2_forward, dft2_inverse, embed_stencil_periodic, Fft2};
pub use self::fft::{op_fft, op_fft_with, padded_size, FftConfig, SpectrumWorkspace};
pub use self::ptw::{convolve_clipped, op_ptw, op_ptw_periodic, op_ptw_with};
pub use self::rr::{
    op_rr, op_rr_with, quantize_stencil, KernelLevels, QuantizedStencil, RrConfig, RrWorkspace,
    MAX_KERNEL_LEVELS,
};
pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Field2;
use crate::kernels::{RangeKernel, Stencil};

pub(crate) fn check_mesh(u: &Field2, w: &Stencil) -> Result<()> {
    if !u.mesh().compatible_h(w.h()) {
        return Err(Error::MeshMismatch {
            stencil_h: w.h(),
            field_h: u.mesh().h(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorBackend {
    Ptw,
    Rr(RrConfig),
    Fft(FftConfig),
}

impl OperatorBackend {
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorBackend::Ptw => Ok(()),
            OperatorBackend::Rr(c) => c.validate(),
            OperatorBackend::Fft(c) => c.validate(),
        }
    }

    /// Short label: `ptw`, `rr`, `fft`, or `ffto` for the zero-padded variant.
    pub fn label(&self) -> &'static str {
        match self {
            OperatorBackend::Ptw => "ptw",
            OperatorBackend::Rr(_) => "rr",
            OperatorBackend::Fft(c) if c.pad_pow2 => "ffto",
            OperatorBackend::Fft(_) => "fft",
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, OperatorBackend::Fft(_))
    }
}

/// Caches carried across the steps of one run.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    pub rr: RrWorkspace,
    pub fft: SpectrumWorkspace,
    parallel: bool,
}

impl Workspace {
    pub fn new(parallel: bool) -> Self {
        let mut ws = Self::default();
        ws.set_parallel(parallel);
        ws
    }

    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
        self.rr.parallel = parallel;
        self.fft.parallel = parallel;
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }
}

/// Applies the selected backend.
pub fn apply(
    backend: &OperatorBackend,
    u: &Field2,
    w: &Stencil,
    a: RangeKernel,
    ws: &mut Workspace,
) -> Result<Field2> {
    match backend {
        OperatorBackend::Ptw => op_ptw_with(u, w, a, ws.parallel),
        OperatorBackend::Rr(c) => op_rr_with(u, w, a, c, &mut ws.rr),
        OperatorBackend::Fft(c) => op_fft_with(u, w, a, c, &mut ws.fft),
    }
}
