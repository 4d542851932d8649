//! Explicit solvers for nonlocal diffusion evolution problems
//!
//! ```text
//! du/dt(t, x) = ∫_Ω J(x - y) A(u(t, y) - u(t, x)) dy + f(t, x, u)
//! ```
//!
//! on the unit-style square `(0, L)²`, with three interchangeable quadratures of the
//! nonlocal term:
//!
//! * [`operators::op_ptw`]: direct pointwise summation over the kernel support,
//! * [`operators::op_rr`]: range quantization plus per-cell weighted level histograms
//!   (the discrete relative-rearrangement form, `O(L_Q)` evaluations of `A` per step),
//! * [`operators::op_fft`]: Fourier slices `w ⊛ A(u - q_i)` read off or linearly
//!   interpolated at each cell's level.
//!
//! The [`solver`] module drives an explicit Euler scheme over any backend and
//! [`bench`] reproduces the accuracy/runtime sweeps used to compare them.

pub mod bench;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod metrics;
pub mod operators;
pub mod quantize;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{cell_average_field, periodic_border_average, Field2, Mesh2};
pub use kernels::{
    box_stencil, erf, gaussian_stencil, Exp1Reaction, RangeKernel, Reaction, SourceIntegral,
    Stencil,
};
pub use metrics::GaussianProductDatum;
pub use operators::{op_fft, op_ptw, op_rr, FftConfig, KernelLevels, OperatorBackend, RrConfig};
pub use quantize::{quantize, QuantDecomp, QuantMesh};
pub use solver::{run, RunResult, SolverConfig, StabilityAdvisory, StencilSpec};
