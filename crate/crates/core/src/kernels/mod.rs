//! Spatial stencils, range kernels and reaction terms.

mod erf;

pub use self::erf::erf;

use crate::error::{Error, Result};
use crate::grid::Mesh2;
use crate::metrics::GaussianProductDatum;

/// Convolutional spatial kernel sampled on integer cell offsets `o ∈ {-R..R}²`.
///
/// Weights are stored row-major over `(o1, o2)` and satisfy `w[o] == w[-o]`,
/// `w[o] >= 0` and `h² Σ w = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    radius: usize,
    weights: Vec<f64>,
    h: f64,
}

impl Stencil {
    /// Checks shape, non-negativity and exact point symmetry.
    pub fn from_weights(radius: usize, weights: Vec<f64>, h: f64) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::InvalidSize(format!(
                "stencil of radius {radius} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cell size must be positive, got {h}"
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "stencil weights must be finite and >= 0".into(),
            ));
        }
        let n = weights.len();
        if (0..n).any(|k| weights[k] != weights[n - 1 - k]) {
            return Err(Error::InvalidArgument(
                "stencil weights must satisfy w[o] == w[-o]".into(),
            ));
        }
        Ok(Self { radius, weights, h })
    }

    /// Single-cell stencil with weight `1/h²`: convolution with it is the identity.
    pub fn point(mesh: &Mesh2) -> Self {
        let h = mesh.h();
        Self {
            radius: 0,
            weights: vec![1.0 / (h * h)],
            h,
        }
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Row-major weights over offsets `(o1, o2)`, `o1` slowest.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(o1, o2)`; zero outside the support.
    pub fn weight(&self, o1: isize, o2: isize) -> f64 {
        let r = self.radius as isize;
        if o1.abs() > r || o2.abs() > r {
            return 0.0;
        }
        self.weights[((o1 + r) as usize) * self.side() + (o2 + r) as usize]
    }

    /// `h² Σ w`, which is 1 for a normalized kernel.
    pub fn mass(&self) -> f64 {
        self.h * self.h * self.weights.iter().sum::<f64>()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Number of distinct nonzero weight values.
    pub fn distinct_nonzero(&self) -> usize {
        let mut v: Vec<f64> = self.weights.iter().copied().filter(|&w| w > 0.0).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    }
}

/// Unit-mass box kernel `1/(4r²) 1_{(-r,r)²}`, integrated exactly over each cell.
///
/// Cells straddling the box edge get the fractional overlap, so the stencil is
/// normalized for any `r`, not only for multiples of `h`.
pub fn box_stencil(radius: f64, mesh: &Mesh2) -> Result<Stencil> {
    if !(radius > 0.0) || radius >= mesh.side() / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "box radius must lie in (0, L/2) = (0, {}), got {radius}",
            mesh.side() / 2.0
        )));
    }
    let h = mesh.h();
    let max_r = (radius / h - 0.5).ceil().max(0.0) as usize + 1;
    // overlap of [-r, r] with the cell [o h - h/2, o h + h/2], for o >= 0
    let mut overlap: Vec<f64> = (0..=max_r)
        .map(|o| {
            let lo = (o as f64 - 0.5) * h;
            let hi = (o as f64 + 0.5) * h;
            (hi.min(radius) - lo.max(-radius)).max(0.0)
        })
        .collect();
    while overlap.len() > 1 && overlap[overlap.len() - 1] <= 1e-12 * h {
        overlap.pop();
    }
    let r = overlap.len() - 1;
    let side = 2 * r + 1;
    let one_d = |o: isize| overlap[o.unsigned_abs()];
    let scale = 1.0 / (4.0 * radius * radius * h * h);
    let mut weights = Vec::with_capacity(side * side);
    for o1 in -(r as isize)..=(r as isize) {
        for o2 in -(r as isize)..=(r as isize) {
            weights.push(one_d(o1) * one_d(o2) * scale);
        }
    }
    Ok(Stencil {
        radius: r,
        weights,
        h,
    })
}

/// Truncated Gaussian `exp(-|x|²/(2σ²))` on the square of half-width `6σ`,
/// sampled at offset centers and normalized so that `h² Σ w = 1`.
pub fn gaussian_stencil(sigma: f64, mesh: &Mesh2) -> Result<Stencil> {
    let support = 6.0 * sigma;
    if !(sigma > 0.0) || support >= mesh.side() / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "gaussian needs 0 < 6 sigma < L/2, got sigma = {sigma}"
        )));
    }
    let h = mesh.h();
    let r = (support / h + 1e-9).floor() as usize;
    let side = 2 * r + 1;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut weights = Vec::with_capacity(side * side);
    for o1 in -(r as isize)..=(r as isize) {
        for o2 in -(r as isize)..=(r as isize) {
            let d2 = ((o1 * o1 + o2 * o2) as f64) * h * h;
            weights.push((-d2 * inv).exp());
        }
    }
    let norm = 1.0 / (h * h * weights.iter().sum::<f64>());
    for w in &mut weights {
        *w *= norm;
    }
    Ok(Stencil {
        radius: r,
        weights,
        h,
    })
}

/// Odd range kernel `A` applied to value differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeKernel {
    /// `A(s) = s`, evaluated inline.
    Identity,
    /// `A(s) = |s|^(p-2) s`, `p >= 1`, with `A(0) = 0`.
    Power(f64),
}

impl RangeKernel {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
        }
        Ok(RangeKernel::Power(p))
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            RangeKernel::Identity => s,
            RangeKernel::Power(p) => power_kernel(p, s),
        }
    }

    /// `sup |A'|` on `(-M, M)`; infinite for `p < 2`, where `A'` blows up at 0.
    pub fn lipschitz_bound(&self, m: f64) -> f64 {
        match *self {
            RangeKernel::Identity => 1.0,
            RangeKernel::Power(p) if p >= 2.0 => (p - 1.0) * m.powf(p - 2.0),
            RangeKernel::Power(_) => f64::INFINITY,
        }
    }

    /// The `p` exponent for reporting; `None` for the inline identity.
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            RangeKernel::Identity => None,
            RangeKernel::Power(p) => Some(p),
        }
    }
}

// Kept out of line: the power kernel is the "user-supplied function" case, as
// opposed to the identity that the pointwise loop inlines.
#[inline(never)]
fn power_kernel(p: f64, s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.abs().powf(p - 2.0) * s
    }
}

pub fn eval_range_kernel(a: RangeKernel, s: f64) -> f64 {
    a.eval(s)
}

pub fn lipschitz_bound(a: RangeKernel, m: f64) -> f64 {
    a.lipschitz_bound(m)
}

/// How the solver evaluates the box integral `I(x)` of the manufactured source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceIntegral {
    /// Closed form through `erf`, over the full box `B_r(x)`.
    #[default]
    Exact,
    /// The scheme's own quadrature: `h² Σ_o w[o] u0_h[j+o]` with the run's stencil,
    /// clipped at the boundary. The discrete operator then cancels against the
    /// source exactly, leaving only the time-stepping error.
    Scheme,
}

/// Parameters of the manufactured source making `e^{-λt} u0` an exact solution
/// under the box kernel of radius `radius` and `A = id`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exp1Reaction {
    pub lambda: f64,
    pub datum: GaussianProductDatum,
    pub radius: f64,
    pub integral: SourceIntegral,
}

impl Exp1Reaction {
    pub fn new(lambda: f64, radius: f64) -> Self {
        Self {
            lambda,
            datum: GaussianProductDatum::default(),
            radius,
            integral: SourceIntegral::Exact,
        }
    }

    pub fn with_integral(mut self, integral: SourceIntegral) -> Self {
        self.integral = integral;
        self
    }

    /// Time-independent factor `(1 - λ) u0(x) - I(x)`, with `I` in closed form.
    pub fn profile(&self, x1: f64, x2: f64) -> f64 {
        (1.0 - self.lambda) * self.datum.eval(x1, x2) - self.datum.box_average(x1, x2, self.radius)
    }

    pub fn eval(&self, t: f64, x1: f64, x2: f64) -> f64 {
        (-self.lambda * t).exp() * self.profile(x1, x2)
    }
}

pub fn reaction_exp1(t: f64, x: (f64, f64), params: &Exp1Reaction) -> f64 {
    params.eval(t, x.0, x.1)
}

/// Source term `f(t, x, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Reaction {
    #[default]
    Zero,
    Exp1(Exp1Reaction),
}

impl Reaction {
    pub fn eval(&self, t: f64, x1: f64, x2: f64, _s: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::Exp1(r) => r.eval(t, x1, x2),
        }
    }

    /// Lipschitz constant of `f` in the state argument.
    pub fn state_lipschitz(&self) -> f64 {
        match self {
            Reaction::Zero | Reaction::Exp1(_) => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Mesh2 {
        Mesh2::new(1.0, n).unwrap()
    }

    fn assert_stencil_invariants(s: &Stencil) {
        let w = s.weights();
        let n = w.len();
        for k in 0..n {
            assert_eq!(w[k], w[n - 1 - k]);
            assert!(w[k] >= 0.0);
        }
        assert!((s.mass() - 1.0).abs() < 1e-12, "mass {}", s.mass());
    }

    #[test]
    fn box_weights_r002() {
        let s = box_stencil(0.02, &mesh(100)).unwrap();
        assert_eq!(s.radius(), 2);
        let expect_1d = [0.5, 1.0, 1.0, 1.0, 0.5];
        for o1 in -2..=2isize {
            for o2 in -2..=2isize {
                let e = 625.0 * expect_1d[(o1 + 2) as usize] * expect_1d[(o2 + 2) as usize];
                assert!((s.weight(o1, o2) - e).abs() < 1e-9, "{o1} {o2}");
            }
        }
        assert!((s.weight(0, 0) - 625.0).abs() < 1e-9);
        assert!((s.weight(2, 0) - 312.5).abs() < 1e-9);
        assert!((s.weight(2, -2) - 156.25).abs() < 1e-9);
        assert_stencil_invariants(&s);
    }

    #[test]
    fn box_fractional_radius() {
        let m = mesh(40);
        let h = m.h();
        for r in [1.5 * h, 0.37 * h, 2.2 * h, 0.1, 0.3, 0.49] {
            let s = box_stencil(r, &m).unwrap();
            assert_stencil_invariants(&s);
        }
        // r = 1.5h covers whole cells only
        let s = box_stencil(1.5 * h, &m).unwrap();
        assert_eq!(s.radius(), 1);
        let c = s.weight(0, 0);
        assert!(s.weights().iter().all(|&w| (w - c).abs() <= 1e-12 * c));
    }

    #[test]
    fn box_rejects_bad_radius() {
        assert!(box_stencil(0.0, &mesh(10)).is_err());
        assert!(box_stencil(0.5, &mesh(10)).is_err());
        assert!(box_stencil(-0.1, &mesh(10)).is_err());
    }

    #[test]
    fn gaussian_shape() {
        let s = gaussian_stencil(0.01, &mesh(100)).unwrap();
        assert_eq!(s.radius(), 6);
        assert_stencil_invariants(&s);
        let c = s.weight(0, 0);
        assert!(s.weights().iter().all(|&w| w <= c));
        assert_eq!(s.weights().iter().filter(|&&w| w == c).count(), 1);
        for o in 0..6isize {
            assert!(s.weight(o, 0) > s.weight(o + 1, 0));
            assert!(s.weight(0, -o) > s.weight(0, -o - 1));
        }
        for a in -6..=6isize {
            for b in -6..=6isize {
                assert_eq!(s.weight(a, b), s.weight(b, a));
                assert_eq!(s.weight(a, b), s.weight(-a, -b));
            }
        }
        assert!(gaussian_stencil(0.1, &mesh(100)).is_err());
        assert!(gaussian_stencil(0.0, &mesh(100)).is_err());
    }

    #[test]
    fn range_kernel_examples() {
        let p3 = RangeKernel::power(3.0).unwrap();
        assert_eq!(p3.eval(2.0), 4.0);
        assert_eq!(p3.eval(-2.0), -4.0);
        assert_eq!(RangeKernel::Identity.eval(0.37), 0.37);
        assert_eq!(RangeKernel::power(2.0).unwrap().eval(0.37), 0.37);
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert_eq!(RangeKernel::Power(p).eval(0.0), 0.0);
        }
        assert!(RangeKernel::power(0.5).is_err());
    }

    #[test]
    fn range_kernel_odd() {
        for p in [1.0, 1.3, 2.0, 2.5, 3.0, 4.0] {
            let a = RangeKernel::Power(p);
            for k in 0..500 {
                let s = (k as f64 - 250.0) * 0.0173;
                assert_eq!(a.eval(-s), -a.eval(s));
                assert!(a.eval(s) * s >= 0.0);
            }
        }
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(RangeKernel::Identity.lipschitz_bound(123.0), 1.0);
        assert_eq!(RangeKernel::Power(3.0).lipschitz_bound(10.0), 20.0);
        assert_eq!(RangeKernel::Power(2.0).lipschitz_bound(5.0), 1.0);
        assert!(RangeKernel::Power(1.5).lipschitz_bound(5.0).is_infinite());
    }

    #[test]
    fn exp1_reaction_branches() {
        let params = Exp1Reaction::new(1.0, 0.1);
        for &(x1, x2) in &[(0.5, 0.5), (0.45, 0.5), (0.6, 0.45)] {
            let v = reaction_exp1(0.7, (x1, x2), &params);
            let expect = -(-0.7f64).exp() * params.datum.box_average(x1, x2, 0.1);
            assert!((v - expect).abs() < 1e-12 * expect.abs());
            assert!(v < 0.0);
        }

        let params = Exp1Reaction::new(0.5, 0.1);
        let d = params.datum;
        let v = reaction_exp1(0.0, (0.5, 0.5), &params);
        assert!((v - (0.5 * d.eval(0.5, 0.5) - d.box_average(0.5, 0.5, 0.1))).abs() < 1e-13);

        // small box: I -> u0, so f(0, x) -> -λ u0
        let tiny = Exp1Reaction::new(0.5, 1e-4);
        let x = (0.52, 0.49);
        let f0 = reaction_exp1(0.0, x, &tiny);
        let target = -0.5 * d.eval(x.0, x.1);
        assert!((f0 - target).abs() < 1e-3 * target.abs());
        assert_eq!(Reaction::Exp1(tiny).state_lipschitz(), 0.0);
    }
}
