//! Experiment drivers: each writes CSVs (plus optional SVG plots) into the
//! output directory and returns a JSON summary for the manifest.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use collapse_thermo::bench::{run_state, stationary_drift, BenchConfig, BenchRun};
use collapse_thermo::entropy::EntropySeries;
use collapse_thermo::gaussian::propagate;
use collapse_thermo::qlindblad::q_entropy_experiment;
use collapse_thermo::{CovarianceState, Error, GridGeometry, Regime};
use serde_json::{json, Value};

use crate::config::{ConfigError, Experiment, ExperimentConfig, Source};
use crate::plot::{line_chart, Series};

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation { .. } | Error::NegativeDensity { .. } | Error::SingularCovariance(_) => {
                Failure::Numerical(e.to_string())
            }
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => Failure::Other(e.into()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}

/// Runs `f` over `items` on at most `workers` threads; results keep the
/// order of `items`, and the first error by index is returned.
pub fn sweep<T, R, E>(items: &[T], workers: usize, f: impl Fn(&T) -> Result<R, E> + Sync) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
{
    let slots: Vec<Mutex<Option<Result<R, E>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                *slots[i].lock().expect("worker panicked") = Some(f(item));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("worker panicked").expect("every item ran"))
        .collect()
}

/// Short, stable label for a number in file names.
pub fn tag(x: f64) -> String {
    let s = format!("{x}");
    if s.len() <= 8 {
        s
    } else {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Outcome of the dry-run checks.
#[derive(Debug, Default)]
pub struct Checks {
    pub warnings: Vec<String>,
}

pub fn bench_configs(c: &ExperimentConfig) -> Result<Vec<BenchConfig>, Error> {
    let geometry = GridGeometry::square(c.grid, c.window)?;
    Ok(c.presets
        .iter()
        .map(|&(d, f)| BenchConfig {
            omega: c.params.omega,
            geometry,
            horizon: c.horizon,
            dt: c.dt,
            initial_nbar: c.initial_nbar.clone(),
            sigma_eq: c.sigma_eq.unwrap_or(2.0 * d / f),
            scheme: c.scheme,
            substeps: c.substeps,
            record_every: c.record_every,
            ..BenchConfig::new(d, f)
        })
        .collect())
}

/// Invariant checks that need no time stepping.
pub fn check(c: &ExperimentConfig, src: &Source) -> Result<Checks, ConfigError> {
    let mut out = Checks::default();
    let p = &c.params;
    match c.experiment {
        Experiment::Friction => {
            match p.beta_critical() {
                Ok(bc) if p.beta > bc => out.warnings.push(format!(
                    "beta = {} exceeds beta_c = {bc:.6}: the stationary state would violate the uncertainty bound",
                    p.beta
                )),
                Ok(_) => {}
                Err(e) => out.warnings.push(format!("no upper bound on beta: {e}")),
            }
            if let Err(e) = p.beta_equilibrium() {
                out.warnings.push(format!("no equilibrium temperature: {e}"));
            }
        }
        Experiment::QLinear => {
            collapse_thermo::qlindblad::QGenerator::new(*p).map_err(|e| src.error(Some("model"), e.to_string()))?;
        }
        Experiment::BenchLinearization => {
            for cfg in bench_configs(c).map_err(|e| src.error(Some("grid"), e.to_string()))? {
                cfg.validate().map_err(|e| {
                    let key = match e {
                        Error::Stability(_) if c.substeps.is_some() => "substeps",
                        Error::InvalidParameter { name: "record_every", .. } => "record_every",
                        _ => "dt",
                    };
                    src.error(Some(key), e.to_string())
                })?;
            }
        }
        Experiment::Frictionless => {}
    }
    if c.experiment.uses_grid() {
        // Widest per-axis standard deviation among the states put on the grid.
        let widest = match c.experiment {
            Experiment::QLinear => c
                .initial_nbar
                .iter()
                .chain(&c.target_nbar)
                .map(|n| ((n + 1.0) / 2.0).sqrt())
                .fold(0.0, f64::max),
            _ => {
                let states = c.initial_nbar.iter().map(|n| (2.0 * n + 1.0).sqrt());
                let targets = c
                    .presets
                    .iter()
                    .map(|(d, f)| (c.sigma_eq.unwrap_or(2.0 * d / f) / 2.0).sqrt());
                states.chain(targets).fold(0.0, f64::max)
            }
        };
        let ratio = c.window / widest;
        if ratio < 2.0 {
            return Err(src.error(
                Some("window"),
                format!("window {} is only {ratio:.2} standard deviations of the widest state ({widest:.3})", c.window),
            ));
        }
        if ratio < 4.0 {
            out.warnings.push(format!(
                "window {} covers {ratio:.2} standard deviations of the widest state; edge truncation will show in the mass",
                c.window
            ));
        }
    }
    Ok(out)
}

pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

impl Artifacts {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            summary: Value::Null,
        }
    }

    fn path(&mut self, dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        self.files.push(p.clone());
        p
    }
}

pub fn execute(c: &ExperimentConfig) -> Result<Artifacts, Failure> {
    std::fs::create_dir_all(&c.out)?;
    match c.experiment {
        Experiment::Frictionless => frictionless(c),
        Experiment::Friction => friction(c),
        Experiment::QLinear => q_linear(c),
        Experiment::BenchLinearization => bench(c),
    }
}

fn entropy_plots(a: &mut Artifacts, dir: &Path, series: &[(String, &EntropySeries)]) -> std::io::Result<()> {
    let k: Vec<Series> = series.iter().map(|(l, s)| Series::new(l.as_str(), &s.t, &s.k)).collect();
    let p = a.path(dir, "relative_entropy.svg");
    line_chart(&p, "Relative entropy", "t", "K(t)", &k)?;
    let pi: Vec<Series> = series.iter().map(|(l, s)| Series::new(l.as_str(), &s.t_mid, &s.pi)).collect();
    let p = a.path(dir, "entropy_production.svg");
    line_chart(&p, "Entropy production rate", "t", "Pi(t)", &pi)
}

fn frictionless(c: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let mut a = Artifacts::new();
    let start = CovarianceState::thermal(c.initial_nbar[0])?;
    let rec = propagate(start, &c.params, Regime::Frictionless, c.horizon, c.steps)?;
    rec.write_csv(&a.path(&c.out, "trajectory.csv"))?;

    let series = sweep(&c.target_nbar, c.workers, |&n| {
        EntropySeries::gaussian(&rec.samples, &CovarianceState::thermal(n)?, format!("thermal nbar={n}"))
    })?;
    let mut crossings = Vec::new();
    for (n, s) in c.target_nbar.iter().zip(&series) {
        s.write_csv(&a.path(&c.out, &format!("entropy_nbar{}.csv", tag(*n))))?;
        crossings.push(json!({ "target_nbar": n, "first_negative_pi": s.first_negative_crossing() }));
    }
    let d = c.params.frictionless_diffusion()?;
    let end = rec.samples.last().expect("at least two samples");
    a.summary = json!({
        "diffusion": d,
        "scaled_diffusion": 2.0 * d / (c.params.mass * c.params.omega),
        "final": end,
        "crossings": crossings,
    });
    if c.plots {
        variance_plots(&mut a, &c.out, &[(format!("nbar={}", c.initial_nbar[0]), &rec.samples)])?;
        let labelled: Vec<(String, &EntropySeries)> =
            c.target_nbar.iter().zip(&series).map(|(n, s)| (format!("target nbar={n}"), s)).collect();
        entropy_plots(&mut a, &c.out, &labelled)?;
    }
    Ok(a)
}

fn variance_plots(a: &mut Artifacts, dir: &Path, runs: &[(String, &Vec<CovarianceState>)]) -> std::io::Result<()> {
    let t = |s: &Vec<CovarianceState>| s.iter().map(|x| x.t).collect::<Vec<_>>();
    let mut var = Vec::new();
    let mut cov = Vec::new();
    for (label, s) in runs {
        let ts = t(s);
        let q: Vec<f64> = s.iter().map(|x| x.var_q).collect();
        let p: Vec<f64> = s.iter().map(|x| x.var_p).collect();
        let c: Vec<f64> = s.iter().map(|x| x.cov_qp).collect();
        var.push(Series::new(format!("var_q {label}"), &ts, &q));
        var.push(Series::new(format!("var_p {label}"), &ts, &p).dashed());
        cov.push(Series::new(format!("cov_qp {label}"), &ts, &c));
    }
    let p = a.path(dir, "variances.svg");
    line_chart(&p, "Variances", "t", "variance", &var)?;
    let p = a.path(dir, "covariance.svg");
    line_chart(&p, "Covariance", "t", "cov_qp", &cov)
}

fn friction(c: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let mut a = Artifacts::new();
    let sigma = c.params.sigma_eq()?;
    let target = CovarianceState::isotropic(sigma);
    let runs = sweep(&c.initial_nbar, c.workers, |&n| -> Result<_, Error> {
        let rec = propagate(CovarianceState::thermal(n)?, &c.params, Regime::LinearFriction, c.horizon, c.steps)?;
        let s = EntropySeries::gaussian(&rec.samples, &target, format!("equilibrium sigma2={sigma}"))?;
        Ok((rec, s))
    })?;
    let mut per_state = Vec::new();
    for (n, (rec, s)) in c.initial_nbar.iter().zip(&runs) {
        rec.write_csv(&a.path(&c.out, &format!("trajectory_nbar{}.csv", tag(*n))))?;
        s.write_csv(&a.path(&c.out, &format!("entropy_nbar{}.csv", tag(*n))))?;
        per_state.push(json!({
            "initial_nbar": n,
            "final": rec.samples.last(),
            "min_pi": s.min_pi(),
            "final_pi": s.pi.last(),
        }));
    }
    let coeffs = c.params.coefficients()?;
    a.summary = json!({
        "sigma_eq": sigma,
        "beta_critical": c.params.beta_critical().ok(),
        "beta_equilibrium": c.params.beta_equilibrium().ok(),
        "coefficients": coeffs,
        "states": per_state,
    });
    if c.plots {
        let labelled: Vec<(String, &Vec<CovarianceState>)> =
            c.initial_nbar.iter().zip(&runs).map(|(n, (r, _))| (format!("nbar={n}"), &r.samples)).collect();
        variance_plots(&mut a, &c.out, &labelled)?;
        let es: Vec<(String, &EntropySeries)> =
            c.initial_nbar.iter().zip(&runs).map(|(n, (_, s))| (format!("nbar={n}"), s)).collect();
        entropy_plots(&mut a, &c.out, &es)?;
    }
    Ok(a)
}

fn q_linear(c: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let mut a = Artifacts::new();
    let geometry = GridGeometry::square(c.grid, c.window)?;
    let jobs: Vec<(f64, f64)> = c
        .initial_nbar
        .iter()
        .flat_map(|&n| c.betas.iter().map(move |&b| (n, b)))
        .collect();
    let results = sweep(&jobs, c.workers, |&(n, b)| {
        q_entropy_experiment(&c.params.with_beta(b), n, &c.target_nbar, c.steps, c.dt, geometry)
    })?;
    let mut summary = Vec::new();
    for exp in &results {
        let mut mins = Vec::new();
        for (target, s) in exp.targets.iter().zip(&exp.series) {
            let name = format!("q_init{}_beta{}_target{}.csv", tag(exp.initial_nbar), tag(exp.beta), tag(*target));
            s.write_csv(&a.path(&c.out, &name))?;
            mins.push(json!({ "target_nbar": target, "min_pi": s.min_pi() }));
        }
        summary.push(json!({
            "initial_nbar": exp.initial_nbar,
            "beta": exp.beta,
            "min_value": exp.min_value,
            "wehrl_defined": exp.series.first().is_some_and(|s| s.entropy.is_some()),
            "targets": mins,
        }));
        if c.plots {
            let pi: Vec<Series> = exp
                .targets
                .iter()
                .zip(&exp.series)
                .map(|(t, s)| Series::new(format!("target nbar={t}"), &s.t_mid, &s.pi))
                .collect();
            let name = format!("pi_init{}_beta{}.svg", tag(exp.initial_nbar), tag(exp.beta));
            let p = a.path(&c.out, &name);
            line_chart(&p, &format!("Entropy production, beta={}", exp.beta), "t", "Pi(t)", &pi)?;
        }
    }
    a.summary = json!({ "runs": summary });
    Ok(a)
}

fn bench(c: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let mut a = Artifacts::new();
    let configs = bench_configs(c)?;
    let jobs: Vec<(usize, f64)> = (0..configs.len())
        .flat_map(|k| c.initial_nbar.iter().map(move |&n| (k, n)))
        .collect();
    let runs: Vec<BenchRun> = sweep(&jobs, c.workers, |&(k, n)| run_state(&configs[k], n))?;
    let drifts = sweep(&configs, c.workers, |cfg| stationary_drift(cfg, 10))?;

    let mut presets = Vec::new();
    for (k, cfg) in configs.iter().enumerate() {
        let label = format!("D{}_f{}", tag(cfg.diffusion), tag(cfg.friction));
        let mine: Vec<&BenchRun> = jobs.iter().zip(&runs).filter(|(j, _)| j.0 == k).map(|(_, r)| r).collect();
        let mut states = Vec::new();
        for r in &mine {
            r.write_csv(&a.path(&c.out, &format!("bench_{label}_nbar{}.csv", tag(r.initial_nbar))))?;
            states.push(json!({
                "initial_nbar": r.initial_nbar,
                "early_discrepancy": r.early_discrepancy(1.0),
                "min_pi_exact": r.pi_exact.iter().copied().fold(f64::INFINITY, f64::min),
                "min_pi_lin": r.min_pi_lin(),
                "final_l2": r.l2.last(),
                "mass_drift": r.mass_drift(),
                "exact_final_distance": r.exact_final_distance,
                "lin_final_distance": r.lin_final_distance,
                "min_det_lin": r.lin_moments.iter().map(|m| m.det()).fold(f64::INFINITY, f64::min),
            }));
        }
        presets.push(json!({
            "diffusion": cfg.diffusion,
            "friction": cfg.friction,
            "sigma_eq": cfg.sigma_eq,
            "stationary_drift": drifts[k],
            "states": states,
        }));
        if c.plots {
            let mut pi = Vec::new();
            let mut l2 = Vec::new();
            for r in &mine {
                pi.push(Series::new(format!("exact nbar={}", r.initial_nbar), &r.t, &r.pi_exact));
                pi.push(Series::new(format!("linearized nbar={}", r.initial_nbar), &r.t, &r.pi_lin).dashed());
                l2.push(Series::new(format!("nbar={}", r.initial_nbar), &r.t, &r.l2));
            }
            let title = format!("D={}, f={}", cfg.diffusion, cfg.friction);
            let p = a.path(&c.out, &format!("pi_{label}.svg"));
            line_chart(&p, &format!("Entropy production, {title}"), "t", "Pi(t)", &pi)?;
            let p = a.path(&c.out, &format!("l2_{label}.svg"));
            line_chart(&p, &format!("L2 distance, {title}"), "t", "D_L2(t)", &l2)?;
        }
    }
    a.summary = json!({ "presets": presets });
    let path = a.path(&c.out, "bench_summary.json");
    std::fs::write(path, serde_json::to_string_pretty(&a.summary).map_err(|e| Failure::Other(e.into()))?)?;
    Ok(a)
}
