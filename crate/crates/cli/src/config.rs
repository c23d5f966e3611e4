//! Flat TOML experiment configuration with per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use collapse_thermo::bench::FpScheme;
use collapse_thermo::{Model, ModelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Frictionless,
    Friction,
    QLinear,
    BenchLinearization,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::Frictionless,
        Experiment::Friction,
        Experiment::QLinear,
        Experiment::BenchLinearization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Frictionless => "frictionless",
            Experiment::Friction => "friction",
            Experiment::QLinear => "q-linear",
            Experiment::BenchLinearization => "bench-linearization",
        }
    }

    pub fn uses_grid(self) -> bool {
        matches!(self, Experiment::QLinear | Experiment::BenchLinearization)
    }
}

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub model: Option<Model>,
    pub mass: Option<f64>,
    pub omega: Option<f64>,
    pub cutoff: Option<f64>,
    pub beta: Option<f64>,
    pub csl_rate: Option<f64>,
    pub hbar: Option<f64>,
    pub g: Option<f64>,
    pub initial_nbar: Option<Vec<f64>>,
    pub target_nbar: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub diffusion: Option<Vec<f64>>,
    pub friction: Option<Vec<f64>>,
    pub sigma_eq: Option<f64>,
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub grid: Option<usize>,
    pub window: Option<f64>,
    pub scheme: Option<FpScheme>,
    pub substeps: Option<usize>,
    pub record_every: Option<usize>,
    pub out: Option<PathBuf>,
    pub plots: Option<bool>,
    pub workers: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub plots: bool,
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub grid: Option<usize>,
    pub window: Option<f64>,
}

/// Fully resolved configuration, recorded in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    pub initial_nbar: Vec<f64>,
    /// Target occupations (frictionless and q-linear).
    pub target_nbar: Vec<f64>,
    /// Dissipation strengths swept by q-linear.
    pub betas: Vec<f64>,
    /// `(D, f)` pairs of the benchmark.
    pub presets: Vec<(f64, f64)>,
    /// Overrides `2D/f` as the benchmark target when set.
    pub sigma_eq: Option<f64>,
    pub horizon: f64,
    pub steps: usize,
    pub dt: f64,
    pub grid: usize,
    pub window: f64,
    pub scheme: FpScheme,
    pub substeps: Option<usize>,
    /// Benchmark diagnostics are sampled every this many steps.
    pub record_every: usize,
    pub out: PathBuf,
    pub plots: bool,
    pub workers: usize,
}

/// A config problem, located at a line of the file when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.source, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, _) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Text and origin of a config file, kept to locate keys in messages.
#[derive(Debug, Clone, Default)]
pub struct Source {
    pub path: Option<PathBuf>,
    pub text: String,
}

impl Source {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            text,
        })
    }

    /// Line (1-based) on which `key` is assigned.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
    }

    pub fn error(&self, key: Option<&str>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            source: self.path.clone(),
            line: key.and_then(|k| self.line_of(k)),
            message: message.into(),
        }
    }

    pub fn parse(&self) -> Result<RawConfig, ConfigError> {
        toml::from_str(&self.text).map_err(|e| {
            let line = e
                .span()
                .map(|s| self.text[..s.start.min(self.text.len())].matches('\n').count() + 1);
            ConfigError {
                source: self.path.clone(),
                line,
                message: e.message().trim().to_string(),
            }
        })
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Values used for each experiment when nothing is set.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            params: ModelParams::default(),
            initial_nbar: vec![0.0],
            target_nbar: vec![],
            betas: vec![],
            presets: vec![],
            sigma_eq: None,
            horizon: 20.0,
            steps: 10_000,
            dt: 20.0 / 10_000.0,
            grid: 800,
            window: 4.0,
            scheme: FpScheme::OrnsteinUhlenbeck,
            substeps: None,
            record_every: 1,
            out: PathBuf::from(format!("out/{}", experiment.name())),
            plots: false,
            workers: default_workers(),
        };
        match experiment {
            Experiment::Frictionless => Self {
                target_nbar: vec![0.05, 0.1, 0.15, 0.2, 0.25],
                ..base
            },
            Experiment::Friction => Self {
                params: ModelParams::default().with_beta(3.0),
                initial_nbar: vec![0.0, 1.0, 2.0],
                ..base
            },
            Experiment::QLinear => Self {
                params: ModelParams::csl(1.0, 1.0, 0.9, 0.01, 1.0),
                initial_nbar: vec![0.1],
                target_nbar: vec![0.1, 0.15, 0.2, 0.25],
                betas: vec![0.01, 1.0, 100.0],
                horizon: 40e-6,
                steps: 40,
                dt: 1e-6,
                window: 6.0,
                ..base
            },
            Experiment::BenchLinearization => Self {
                initial_nbar: vec![0.0, 0.5, 1.0],
                presets: collapse_thermo::bench::PRESETS.to_vec(),
                horizon: 40.0,
                steps: 4000,
                dt: 0.01,
                record_every: 5,
                ..base
            },
        }
    }

    /// Applies file values, then flag overrides, on top of the defaults.
    pub fn resolve(
        experiment: Option<Experiment>,
        src: &Source,
        flags: &Overrides,
    ) -> Result<Self, ConfigError> {
        let raw = src.parse()?;
        let experiment = match (experiment, raw.experiment) {
            (Some(cmd), Some(file)) if cmd != file => {
                return Err(src.error(
                    Some("experiment"),
                    format!("file is for `{}` but `{}` was requested", file.name(), cmd.name()),
                ))
            }
            (Some(e), _) | (None, Some(e)) => e,
            (None, None) => {
                return Err(src.error(None, "no `experiment` key; set it or use an experiment subcommand"))
            }
        };
        let mut c = Self::defaults(experiment);

        let p = &mut c.params;
        if let Some(model) = raw.model {
            p.model = model;
        }
        for (slot, value) in [
            (&mut p.mass, raw.mass),
            (&mut p.omega, raw.omega),
            (&mut p.cutoff, raw.cutoff),
            (&mut p.beta, raw.beta),
            (&mut p.csl_rate, raw.csl_rate),
            (&mut p.hbar, raw.hbar),
            (&mut p.g, raw.g),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(v) = raw.initial_nbar {
            c.initial_nbar = v;
        }
        if let Some(v) = raw.target_nbar {
            c.target_nbar = v;
        }
        if let Some(v) = raw.betas {
            c.betas = v;
        }
        match (raw.diffusion, raw.friction) {
            (Some(d), Some(f)) => {
                if d.len() != f.len() {
                    return Err(src.error(
                        Some("friction"),
                        format!("`diffusion` has {} entries but `friction` has {}", d.len(), f.len()),
                    ));
                }
                c.presets = d.into_iter().zip(f).collect();
            }
            (None, None) => {}
            (Some(_), None) => return Err(src.error(Some("diffusion"), "`diffusion` needs a matching `friction` list")),
            (None, Some(_)) => return Err(src.error(Some("friction"), "`friction` needs a matching `diffusion` list")),
        }
        c.sigma_eq = raw.sigma_eq.or(c.sigma_eq);
        if let Some(s) = raw.scheme {
            c.scheme = s;
        }
        c.substeps = raw.substeps.or(c.substeps);
        if let Some(v) = raw.record_every {
            c.record_every = v;
        }
        if let Some(v) = raw.plots {
            c.plots = v;
        }
        if let Some(v) = raw.workers {
            c.workers = v;
        }
        c.out = flags.out.clone().or(raw.out).unwrap_or(c.out);
        c.plots |= flags.plots;
        c.grid = flags.grid.or(raw.grid).unwrap_or(c.grid);
        c.window = flags.window.or(raw.window).unwrap_or(c.window);

        c.resolve_time(
            src,
            raw.horizon,
            flags.steps.or(raw.steps),
            flags.dt.or(raw.dt),
            flags.steps.is_some() || flags.dt.is_some(),
        )?;
        c.check(src)?;
        Ok(c)
    }

    /// Any two of horizon, steps and dt fix the third; with one or none the
    /// default horizon (or step count) is kept.
    fn resolve_time(
        &mut self,
        src: &Source,
        horizon: Option<f64>,
        steps: Option<usize>,
        dt: Option<f64>,
        from_flags: bool,
    ) -> Result<(), ConfigError> {
        let key = |k: &'static str| (!from_flags).then_some(k);
        if let Some(0) = steps {
            return Err(src.error(key("steps"), "`steps` must be at least 1"));
        }
        if let Some(d) = dt {
            if !(d > 0.0 && d.is_finite()) {
                return Err(src.error(key("dt"), format!("`dt` must be > 0, got {d}")));
            }
        }
        if let Some(h) = horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(src.error(Some("horizon"), format!("`horizon` must be > 0, got {h}")));
            }
        }
        match (horizon, steps, dt) {
            (Some(h), Some(n), Some(d)) => {
                if (n as f64 * d - h).abs() > 1e-9 * h {
                    return Err(src.error(
                        Some("horizon"),
                        format!("horizon {h} differs from steps × dt = {n} × {d}"),
                    ));
                }
                (self.horizon, self.steps, self.dt) = (h, n, d);
            }
            (_, Some(n), Some(d)) => (self.horizon, self.steps, self.dt) = (n as f64 * d, n, d),
            (h, Some(n), None) => {
                let h = h.unwrap_or(self.horizon);
                (self.horizon, self.steps, self.dt) = (h, n, h / n as f64);
            }
            (h, None, Some(d)) => {
                let h = h.unwrap_or(self.horizon);
                let n = (h / d).round();
                if !(n >= 1.0) || (n * d - h).abs() > 1e-9 * h {
                    return Err(src.error(
                        key("dt"),
                        format!("horizon {h} is not a whole number of steps of {d}"),
                    ));
                }
                (self.horizon, self.steps, self.dt) = (h, n as usize, d);
            }
            (Some(h), None, None) => {
                // Keep the default step size for grid runs, the step count otherwise.
                if self.experiment.uses_grid() {
                    let n = (h / self.dt).round().max(1.0);
                    (self.horizon, self.steps, self.dt) = (n * self.dt, n as usize, self.dt);
                } else {
                    (self.horizon, self.dt) = (h, h / self.steps as f64);
                }
            }
            (None, None, None) => {}
        }
        Ok(())
    }

    fn check(&self, src: &Source) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| src.error(param_key(&e.to_string()), e.to_string()))?;
        let nonneg = |key: &'static str, v: &[f64]| match v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            Some(x) => Err(src.error(Some(key), format!("`{key}` entries must be finite and >= 0, got {x}"))),
            None => Ok(()),
        };
        nonneg("initial_nbar", &self.initial_nbar)?;
        nonneg("target_nbar", &self.target_nbar)?;
        nonneg("betas", &self.betas)?;
        if self.initial_nbar.is_empty() {
            return Err(src.error(Some("initial_nbar"), "need at least one initial occupation"));
        }
        match self.experiment {
            Experiment::Frictionless | Experiment::QLinear if self.target_nbar.is_empty() => {
                return Err(src.error(Some("target_nbar"), "need at least one target occupation"));
            }
            Experiment::Friction if !(self.params.beta > 0.0) => {
                return Err(src.error(Some("beta"), "the friction experiment needs beta > 0"));
            }
            Experiment::QLinear if self.betas.is_empty() => {
                return Err(src.error(Some("betas"), "need at least one beta"));
            }
            Experiment::QLinear if self.params.model != Model::Csl => {
                return Err(src.error(Some("model"), "the Husimi generator needs the one-dimensional CSL kernel"));
            }
            Experiment::BenchLinearization if self.presets.is_empty() => {
                return Err(src.error(Some("diffusion"), "need at least one (diffusion, friction) pair"));
            }
            Experiment::BenchLinearization => {
                if let Some((d, f)) = self.presets.iter().find(|(d, f)| !(*d > 0.0 && *f > 0.0)) {
                    return Err(src.error(Some("friction"), format!("pairs need D > 0 and f > 0, got ({d}, {f})")));
                }
            }
            _ => {}
        }
        if self.experiment == Experiment::Frictionless && self.initial_nbar.len() != 1 {
            return Err(src.error(Some("initial_nbar"), "the frictionless run takes a single initial state"));
        }
        if self.experiment.uses_grid() {
            if self.grid < collapse_thermo::grid::MIN_POINTS {
                return Err(src.error(
                    Some("grid"),
                    format!("grid needs at least {} points per axis, got {}", collapse_thermo::grid::MIN_POINTS, self.grid),
                ));
            }
            if !(self.window > 0.0 && self.window.is_finite()) {
                return Err(src.error(Some("window"), format!("`window` must be > 0, got {}", self.window)));
            }
        } else if self.steps < 2 {
            return Err(src.error(Some("steps"), "the moment integrator needs at least 2 steps"));
        }
        if self.workers == 0 {
            return Err(src.error(Some("workers"), "`workers` must be at least 1"));
        }
        Ok(())
    }
}

/// Config key named in a parameter error from the library.
fn param_key(message: &str) -> Option<&'static str> {
    ["mass", "omega", "cutoff", "beta", "csl_rate", "hbar", "g"]
        .into_iter()
        .find(|k| message.contains(&format!("`{k}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(text: &str) -> Source {
        Source {
            path: Some("run.toml".into()),
            text: text.into(),
        }
    }

    #[test]
    fn defaults_resolve_for_every_experiment() {
        for e in Experiment::ALL {
            let c = ExperimentConfig::resolve(Some(e), &Source::default(), &Overrides::default()).unwrap();
            assert_eq!(c, ExperimentConfig::defaults(e));
            assert!((c.steps as f64 * c.dt - c.horizon).abs() < 1e-12 * c.horizon);
        }
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = ExperimentConfig::resolve(None, &src("experiment = \"friction\"\n\nbogus = 1\n"), &Overrides::default())
            .unwrap_err();
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().starts_with("run.toml:3:"), "{err}");
    }

    #[test]
    fn type_error_reports_its_line() {
        let err = ExperimentConfig::resolve(Some(Experiment::Friction), &src("beta = \"x\"\n"), &Overrides::default())
            .unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn invalid_value_reports_its_line() {
        let text = "experiment = \"friction\"\nmass = -1.0\n";
        let err = ExperimentConfig::resolve(None, &src(text), &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(2), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let text = "experiment = \"friction\"\nsteps = 100\nhorizon = 10.0\n";
        let flags = Overrides {
            steps: Some(200),
            ..Overrides::default()
        };
        let c = ExperimentConfig::resolve(None, &src(text), &flags).unwrap();
        assert_eq!((c.steps, c.horizon, c.dt), (200, 10.0, 0.05));
    }

    #[test]
    fn time_triplet_must_agree() {
        let text = "horizon = 1.0\nsteps = 10\ndt = 0.2\n";
        let err = ExperimentConfig::resolve(Some(Experiment::Friction), &src(text), &Overrides::default()).unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn subcommand_and_file_must_agree() {
        let err = ExperimentConfig::resolve(
            Some(Experiment::Friction),
            &src("experiment = \"q-linear\""),
            &Overrides::default(),
        )
        .unwrap_err();
        assert_eq!(err.line, Some(1));
    }

    #[test]
    fn bench_pairs_must_match() {
        let text = "diffusion = [1.0]\nfriction = [1.0, 2.0]\n";
        let err = ExperimentConfig::resolve(Some(Experiment::BenchLinearization), &src(text), &Overrides::default())
            .unwrap_err();
        assert_eq!(err.line, Some(2));
    }
}
