//! Experiment specifications: presets, flat `key = value` files and validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::SourceIntegral;
use crate::operators::KernelLevels;
use crate::solver::steps_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    Custom,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::Custom => "custom",
        }
    }
}

impl FromStr for ExperimentId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exp1" => Ok(ExperimentId::Exp1),
            "exp2" => Ok(ExperimentId::Exp2),
            "exp3" => Ok(ExperimentId::Exp3),
            "custom" => Ok(ExperimentId::Custom),
            _ => Err(format!(
                "unknown experiment '{s}' (expected exp1, exp2, exp3 or custom)"
            )),
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl FromStr for Scale {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            _ => Err(format!("unknown scale '{s}' (expected desk or paper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Ptw,
    Rr,
    Fft,
    Ffto,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ptw, Method::Rr, Method::Fft, Method::Ffto];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ptw => "ptw",
            Method::Rr => "rr",
            Method::Fft => "fft",
            Method::Ffto => "ffto",
        }
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ptw" => Ok(Method::Ptw),
            "rr" => Ok(Method::Rr),
            "fft" => Ok(Method::Fft),
            "ffto" => Ok(Method::Ffto),
            _ => Err(format!(
                "unknown method '{s}' (expected ptw, rr, fft or ffto)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Box,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialDatum {
    /// The two-mode Gaussian datum sampled at cell centers.
    Gaussians,
    /// Uniform noise in `[0, 1)` drawn from `seed`.
    Random,
}

/// One sweep: every combination of grid, step, kernel parameter and method.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub grids: Vec<usize>,
    pub taus: Vec<f64>,
    pub kernel: KernelFamily,
    /// Box radii or Gaussian sigmas.
    pub kernel_params: Vec<f64>,
    pub methods: Vec<Method>,
    /// Value levels of the rearrangement backend.
    pub lq: usize,
    pub lr: KernelLevels,
    /// Slice levels of the Fourier backends.
    pub fft_slices: usize,
    /// Range kernel exponent; `None` is the inline identity.
    pub p: Option<f64>,
    /// Decay rate of the manufactured solution; `None` disables the source.
    pub lambda: Option<f64>,
    pub source: SourceIntegral,
    pub final_time: f64,
    pub interpolate: bool,
    pub rr_requantize: bool,
    pub fft_requantize: bool,
    pub init: InitialDatum,
    /// Step of the Ptw reference run used when there is no exact solution.
    pub reference_tau: Option<f64>,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: u64,
}

const RADII: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.3];
const SIGMAS: [f64; 5] = [0.01, 0.02, 0.03, 0.04, 0.05];

impl ExperimentSpec {
    /// Built-in parameter sets.
    pub fn preset(experiment: ExperimentId, scale: Scale) -> Self {
        let (grids, taus) = match scale {
            Scale::Paper => (vec![100, 200, 300], vec![0.1, 0.01, 0.001]),
            Scale::Desk => (vec![50, 100], vec![0.01, 0.001]),
        };
        let base = Self {
            experiment,
            grids,
            taus,
            kernel: KernelFamily::Box,
            kernel_params: RADII.to_vec(),
            methods: vec![Method::Ptw, Method::Rr, Method::Fft],
            lq: 500,
            lr: KernelLevels::Auto,
            fft_slices: 10,
            p: None,
            lambda: Some(0.5),
            source: SourceIntegral::Scheme,
            final_time: 1.0,
            interpolate: true,
            rr_requantize: true,
            fft_requantize: false,
            init: InitialDatum::Gaussians,
            reference_tau: None,
            out: PathBuf::from("results"),
            threads: None,
            seed: 0,
        };
        match experiment {
            ExperimentId::Exp1 | ExperimentId::Custom => base,
            ExperimentId::Exp2 => Self {
                p: Some(2.0),
                ..base
            },
            ExperimentId::Exp3 => Self {
                taus: base.taus.iter().copied().filter(|&t| t < 0.1).collect(),
                kernel: KernelFamily::Gaussian,
                kernel_params: SIGMAS.to_vec(),
                methods: Method::ALL.to_vec(),
                fft_slices: 150,
                p: Some(3.0),
                lambda: None,
                reference_tau: Some(0.001),
                ..base
            },
        }
    }

    /// Parses a config file, starting from the preset its `experiment` (and
    /// optional `scale`) keys select.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_with(&text, None, Scale::Paper)
    }

    /// Parses `text`; `experiment` from the caller wins over the file's key and
    /// `scale` is used when the file has none.
    pub fn from_str_with(
        text: &str,
        experiment: Option<ExperimentId>,
        scale: Scale,
    ) -> Result<Self> {
        Self::resolve(text, experiment, scale, None, &[])
    }

    /// Full merge: preset (chosen by `experiment` or the file), then file
    /// pairs, then `overrides` (reported as line 0). A forced scale beats the
    /// file's `scale` key, which beats `default_scale`.
    pub fn resolve(
        text: &str,
        experiment: Option<ExperimentId>,
        default_scale: Scale,
        forced_scale: Option<Scale>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        let mut exp = experiment;
        let mut scale = default_scale;
        for (line, key, value) in &pairs {
            match key.as_str() {
                "experiment" if exp.is_none() => exp = Some(parse_value(*line, key, value)?),
                "scale" => scale = parse_value(*line, key, value)?,
                _ => {}
            }
        }
        let scale = forced_scale.unwrap_or(scale);
        let exp = exp.ok_or_else(|| Error::Validation(vec!["experiment required".into()]))?;
        let mut spec = Self::preset(exp, scale);
        for (line, key, value) in &pairs {
            spec.set(*line, key, value)?;
        }
        for (key, value) in overrides {
            spec.set(0, key, value)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Applies one `key = value` pair; `line` is used in error messages.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" | "scale" => {}
            "grids" => self.grids = parse_list(line, key, value)?,
            "taus" => self.taus = parse_list(line, key, value)?,
            "kernel" => {
                self.kernel = match value {
                    "box" => KernelFamily::Box,
                    "gaussian" => KernelFamily::Gaussian,
                    _ => return Err(bad(line, key, value, "expected box or gaussian")),
                }
            }
            "kernel_params" => self.kernel_params = parse_list(line, key, value)?,
            "methods" => self.methods = parse_list(line, key, value)?,
            "lq" => self.lq = parse_value(line, key, value)?,
            "lr" => {
                self.lr = if value == "auto" {
                    KernelLevels::Auto
                } else {
                    KernelLevels::Fixed(parse_value(line, key, value)?)
                }
            }
            "fft_slices" => self.fft_slices = parse_value(line, key, value)?,
            "p" => {
                self.p = if value == "identity" {
                    None
                } else {
                    Some(parse_value(line, key, value)?)
                }
            }
            "lambda" => {
                self.lambda = if value == "none" {
                    None
                } else {
                    Some(parse_value(line, key, value)?)
                }
            }
            "source" => {
                self.source = match value {
                    "exact" => SourceIntegral::Exact,
                    "scheme" => SourceIntegral::Scheme,
                    _ => return Err(bad(line, key, value, "expected exact or scheme")),
                }
            }
            "final_time" => self.final_time = parse_value(line, key, value)?,
            "interpolate" => self.interpolate = parse_value(line, key, value)?,
            "rr_requantize" => self.rr_requantize = parse_value(line, key, value)?,
            "fft_requantize" => self.fft_requantize = parse_value(line, key, value)?,
            "init" => {
                self.init = match value {
                    "gaussians" => InitialDatum::Gaussians,
                    "random" => InitialDatum::Random,
                    _ => return Err(bad(line, key, value, "expected gaussians or random")),
                }
            }
            "reference_tau" => {
                self.reference_tau = if value == "none" {
                    None
                } else {
                    Some(parse_value(line, key, value)?)
                }
            }
            "out" => self.out = PathBuf::from(value),
            "threads" => {
                let t: usize = parse_value(line, key, value)?;
                self.threads = (t > 1).then_some(t);
            }
            "single_thread" => {
                if parse_value::<bool>(line, key, value)? {
                    self.threads = None;
                }
            }
            "seed" => self.seed = parse_value(line, key, value)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key '{key}'"),
                })
            }
        }
        Ok(())
    }

    /// Collects every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.grids.is_empty() {
            errs.push("grids: at least one grid size required".to_string());
        }
        for &n in &self.grids {
            if n < 2 || n % 2 != 0 {
                errs.push(format!("grids: {n} is not an even size >= 2"));
            }
        }
        if self.taus.is_empty() {
            errs.push("taus: at least one time step required".to_string());
        }
        for &tau in self.taus.iter().chain(self.reference_tau.iter()) {
            if steps_for(self.final_time, tau).is_err() {
                errs.push(format!(
                    "taus: {tau} does not divide final_time = {}",
                    self.final_time
                ));
            }
        }
        if self.kernel_params.is_empty() || self.kernel_params.iter().any(|&k| !(k > 0.0)) {
            errs.push("kernel_params: need positive radii/sigmas".to_string());
        }
        if self.methods.is_empty() {
            errs.push("methods: at least one method required".to_string());
        }
        if self.lq < 1 {
            errs.push("lq: must be >= 1".to_string());
        }
        if self.lr == KernelLevels::Fixed(0) {
            errs.push("lr: must be >= 1".to_string());
        }
        if self.fft_slices < 1 {
            errs.push("fft_slices: must be >= 1".to_string());
        }
        if let Some(p) = self.p {
            if !(p >= 1.0) {
                errs.push(format!("p: {p} must be >= 1"));
            }
        }
        if self.lambda.is_some() && self.kernel != KernelFamily::Box {
            errs.push("lambda: the manufactured source needs kernel = box".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// Whether runs are compared against the closed-form solution.
    pub fn has_exact_solution(&self) -> bool {
        self.lambda.is_some() && self.init == InitialDatum::Gaussians
    }
}

/// Keys accepted in config files, with one-line descriptions (shown by `--help`).
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    (
        "experiment",
        "exp1 | exp2 | exp3 | custom (selects the preset)",
    ),
    ("scale", "desk | paper (preset grid and step lists)"),
    ("grids", "comma-separated cells per side, even"),
    (
        "taus",
        "comma-separated time steps, each dividing final_time",
    ),
    ("kernel", "box | gaussian"),
    (
        "kernel_params",
        "comma-separated box radii or gaussian sigmas",
    ),
    ("methods", "comma-separated subset of ptw, rr, fft, ffto"),
    ("lq", "value levels of the rr backend"),
    ("lr", "kernel levels of the rr backend, or auto"),
    ("fft_slices", "slice levels of the fft/ffto backends"),
    ("p", "range kernel exponent, or identity"),
    ("lambda", "decay rate of the manufactured solution, or none"),
    (
        "source",
        "exact | scheme: how the source's box integral is evaluated",
    ),
    ("final_time", "final time T"),
    (
        "interpolate",
        "true | false: interpolate between fft slices",
    ),
    (
        "rr_requantize",
        "true | false: rebuild rr value levels every step",
    ),
    (
        "fft_requantize",
        "true | false: rebuild fft slice levels every step",
    ),
    ("init", "gaussians | random (uniform noise from seed)"),
    (
        "reference_tau",
        "time step of the ptw reference run, or none",
    ),
    ("out", "output directory"),
    ("threads", "worker threads (1 = single-threaded)"),
    ("single_thread", "true forces single-threaded runs"),
    ("seed", "seed for random initial data"),
];

fn bad(line: usize, key: &str, value: &str, why: &str) -> Error {
    Error::Parse {
        line,
        message: format!("{key} = {value}: {why}"),
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| bad(line, key, value, &e.to_string()))
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(line, key, s))
        .collect()
}

/// Splits `key = value` lines; `#` starts a comment.
fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected key = value, got '{content}'"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty key".into(),
            });
        }
        out.push((line, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let e1 = ExperimentSpec::preset(ExperimentId::Exp1, Scale::Paper);
        assert_eq!(e1.grids, vec![100, 200, 300]);
        assert_eq!(e1.taus, vec![0.1, 0.01, 0.001]);
        assert_eq!(e1.kernel_params, RADII.to_vec());
        assert_eq!(e1.fft_slices, 10);
        assert_eq!(e1.p, None);

        let e3 = ExperimentSpec::preset(ExperimentId::Exp3, Scale::Paper);
        assert_eq!(e3.kernel, KernelFamily::Gaussian);
        assert_eq!(e3.fft_slices, 150);
        assert_eq!(e3.p, Some(3.0));
        assert_eq!(e3.taus, vec![0.01, 0.001]);
        assert_eq!(e3.methods.len(), 4);

        let d = ExperimentSpec::preset(ExperimentId::Exp1, Scale::Desk);
        assert_eq!(d.grids, vec![50, 100]);
        assert_eq!(d.taus, vec![0.01, 0.001]);
        for exp in [ExperimentId::Exp1, ExperimentId::Exp2, ExperimentId::Exp3] {
            for scale in [Scale::Desk, Scale::Paper] {
                ExperimentSpec::preset(exp, scale).validate().unwrap();
            }
        }
    }

    #[test]
    fn parse_overrides_and_comments() {
        let text = "# sweep\nexperiment = exp1\ngrids = 40, 60 # two grids\n\nmethods=ptw,rr\nlr = 2\np = 2\n";
        let s = ExperimentSpec::from_str_with(text, None, Scale::Paper).unwrap();
        assert_eq!(s.grids, vec![40, 60]);
        assert_eq!(s.methods, vec![Method::Ptw, Method::Rr]);
        assert_eq!(s.lr, KernelLevels::Fixed(2));
        assert_eq!(s.p, Some(2.0));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = ExperimentSpec::from_str_with("experiment = exp1\nfoo = 1\n", None, Scale::Paper)
            .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e =
            ExperimentSpec::from_str_with("experiment = exp1\n\ngrids = a\n", None, Scale::Paper)
                .unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = ExperimentSpec::from_str_with("experiment exp1\n", None, Scale::Paper).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn validation_errors() {
        let e = ExperimentSpec::from_str_with("", None, Scale::Paper).unwrap_err();
        assert!(e.to_string().contains("experiment required"));

        let e = ExperimentSpec::from_str_with("experiment = exp1\ntau = 0.3\n", None, Scale::Paper)
            .unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = ExperimentSpec::from_str_with(
            "experiment = exp1\ntaus = 0.3\ngrids = 7\n",
            None,
            Scale::Paper,
        )
        .unwrap_err();
        match e {
            Error::Validation(v) => {
                assert_eq!(v.len(), 2);
                assert!(v[0].starts_with("grids"));
                assert!(v[1].starts_with("taus"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn every_key_is_documented() {
        let mut s = ExperimentSpec::preset(ExperimentId::Exp1, Scale::Desk);
        for (key, _) in CONFIG_KEYS {
            // unknown keys error out; documented ones must not
            let r = s.set(1, key, "");
            assert!(
                !matches!(r, Err(Error::Parse { ref message, .. }) if message.starts_with("unknown key")),
                "{key}"
            );
        }
    }
}
