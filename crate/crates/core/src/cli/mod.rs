//! Batch front end: ingestion, analysis runs, the simulation study and
//! their on-disk reports.

mod io;
pub mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ModelError, ModelKind, ModelSpec};
use crate::network::{network_summary, DataError, Dataset, TreatmentId};
use crate::posterior::{self, default_grid, EffectCurve, PosteriorError, END_OF_PERIOD};
use crate::sampler::{self, monitors, PosteriorSamples, SamplerConfig, SamplerError};
use crate::simgen::{self, SimError};

pub use io::{ingest, parse_records, write_csv, HEADER};
pub use report::{AnalysisSummary, SimStudyReport, FORMAT_VERSION};
use report::{ConfigEcho, DataEcho, EffectEntry, ExclusionWindows, ScenarioComparison, SimRun};

/// Split R-hat at or above this value is reported as a warning.
pub const RHAT_WARNING: f64 = 1.05;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("header must be exactly `{}`, found `{found}`", HEADER.join(","))]
    Header { found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Model(_) => EXIT_USAGE,
            CliError::Sampler(SamplerError::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Sampler(SamplerError::Model(_)) => EXIT_USAGE,
            CliError::Sim(SimError::InvalidScenario(_)) => EXIT_USAGE,
            CliError::Sampler(SamplerError::Initialization { .. }) | CliError::Posterior(_) => {
                EXIT_NUMERICAL
            }
            CliError::Io { .. }
            | CliError::Header { .. }
            | CliError::Row { .. }
            | CliError::Csv(_)
            | CliError::Data(_)
            | CliError::Sim(_)
            | CliError::Json(_) => EXIT_DATA,
        }
    }
}

/// Thread pool capped by `TNMA_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TNMA_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "TNMA_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub model: ModelKind,
    pub baseline: Option<String>,
    pub time_varying: Vec<String>,
    pub sampler: SamplerConfig,
    pub out_dir: PathBuf,
    pub grid: usize,
    pub write_samples: bool,
    pub format_version: u32,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, model: ModelKind, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            model,
            baseline: None,
            time_varying: Vec::new(),
            sampler: SamplerConfig::default(),
            out_dir: out_dir.into(),
            grid: posterior::DEFAULT_GRID,
            write_samples: false,
            format_version: FORMAT_VERSION,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.model != ModelKind::Bnma && self.time_varying.is_empty() {
            return Err(CliError::Usage(format!(
                "model {} needs at least one time-varying treatment",
                self.model
            )));
        }
        if self.grid < 2 {
            return Err(CliError::Usage("grid needs at least 2 points".into()));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported report format version {}",
                self.format_version
            )));
        }
        self.sampler.validate()?;
        Ok(())
    }
}

fn resolve(data: &Dataset, labels: &[String]) -> Result<Vec<TreatmentId>, CliError> {
    labels
        .iter()
        .map(|l| {
            data.treatment_by_label(l)
                .ok_or_else(|| CliError::Data(DataError::UnknownTreatment(l.clone())))
        })
        .collect()
}

fn effect_entry(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
) -> Result<EffectEntry, CliError> {
    let e = posterior::end_of_period(samples, spec, data, k)?;
    Ok(EffectEntry {
        treatment: e.label,
        time_varying: spec.is_time_varying(k),
        year: data.to_calendar(END_OF_PERIOD),
        mean: e.mean,
        lower: e.lower,
        upper: e.upper,
        prob_inferior: e.prob_negative,
        prob_superior: e.prob_positive,
    })
}

fn rhat_warnings(samples: &PosteriorSamples) -> Vec<String> {
    samples
        .unconverged(RHAT_WARNING)
        .into_iter()
        .map(|d| match d.rhat {
            _ if d.degenerate => format!("{}: degenerate chain", d.name),
            Some(r) => format!("{}: split R-hat {r:.3} >= {RHAT_WARNING}", d.name),
            None => format!("{}: split R-hat unavailable", d.name),
        })
        .collect()
}

fn samples_csv(samples: &PosteriorSamples, spec: &ModelSpec, data: &Dataset) -> String {
    let mons = monitors(spec);
    let mut s = String::from("chain,draw");
    for m in &mons {
        s.push(',');
        s.push_str(&m.name(data));
    }
    s.push_str(",m_mu,sigma2_mu,m_d,sigma2_d\n");
    for (c, chain) in samples.chains.iter().enumerate() {
        for (i, st) in chain.iter().enumerate() {
            s.push_str(&format!("{c},{i}"));
            for m in &mons {
                s.push_str(&format!(",{}", m.value(st)));
            }
            s.push_str(&format!(
                ",{},{},{},{}\n",
                st.m_mu, st.sigma2_mu, st.m_d, st.sigma2_d
            ));
        }
    }
    s
}

/// Fits one model and writes `summary.json`, `curves.csv` and optionally
/// `samples.csv` to the output directory. Curves cover the time-varying
/// treatments, or every non-baseline treatment when there are none.
pub fn run_analysis(config: &RunConfig) -> Result<AnalysisSummary, CliError> {
    config.validate()?;
    let mut data = ingest(&config.input)?;
    if let Some(b) = &config.baseline {
        data = data.with_baseline_label(b)?;
    }
    let tv = resolve(&data, &config.time_varying)?;
    let spec = ModelSpec::new(config.model, &data, &tv)?;
    let samples = sampler::run(&data, &spec, &config.sampler)?;

    let grid = default_grid(config.grid);
    let curve_set: Vec<TreatmentId> = if tv.is_empty() {
        (0..data.n_treatments())
            .map(TreatmentId)
            .filter(|&k| k != spec.baseline())
            .collect()
    } else {
        tv.clone()
    };
    let curves = curve_set
        .iter()
        .map(|&k| posterior::effect_curve(&samples, &spec, &data, k, &grid))
        .collect::<Result<Vec<EffectCurve>, _>>()?;
    let effects = (0..data.n_treatments())
        .map(TreatmentId)
        .filter(|&k| k != spec.baseline())
        .map(|k| effect_entry(&samples, &spec, &data, k))
        .collect::<Result<Vec<_>, _>>()?;
    let warnings = rhat_warnings(&samples);
    let summary = AnalysisSummary {
        format_version: FORMAT_VERSION,
        model: config.model,
        baseline: data.label(spec.baseline()).to_string(),
        time_varying: tv.iter().map(|&k| data.label(k).to_string()).collect(),
        seed: config.sampler.seed,
        config: ConfigEcho {
            input: config.input.display().to_string(),
            n_chains: config.sampler.n_chains,
            n_iter: config.sampler.n_iter,
            burn_in: config.sampler.burn_in,
            thin: config.sampler.thin,
            adapt_window: config.sampler.adapt_window,
            effect_update: config.sampler.effect_update,
            grid: config.grid,
        },
        data: DataEcho {
            studies: data.n_studies(),
            treatments: data.n_treatments(),
            arms: network_summary(&data).n_arms,
            time_origin: data.time_origin(),
            time_scale: data.time_scale(),
        },
        effects,
        exclusion: curves
            .iter()
            .map(|c| ExclusionWindows {
                treatment: c.label.clone(),
                windows: report::exclusion_windows(c),
            })
            .collect(),
        diagnostics: samples.diagnostics.clone(),
        acceptance: samples.acceptance.clone(),
        converged: warnings.is_empty(),
        warnings,
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    io::write_text(&config.out_dir.join("summary.json"), &json)?;
    io::write_text(
        &config.out_dir.join("curves.csv"),
        &report::curves_csv(&curves),
    )?;
    if config.write_samples {
        io::write_text(
            &config.out_dir.join("samples.csv"),
            &samples_csv(&samples, &spec, &data),
        )?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStudyConfig {
    pub skeleton: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Global baseline; defaults to the second most common treatment.
    pub baseline: Option<String>,
    /// Treatment with the injected time-varying effect; defaults to the
    /// most common treatment.
    pub target: Option<String>,
    pub sampler: SamplerConfig,
    pub grid: usize,
}

impl SimStudyConfig {
    pub fn new(skeleton: impl Into<PathBuf>, out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        SimStudyConfig {
            skeleton: skeleton.into(),
            out_dir: out_dir.into(),
            seed,
            baseline: None,
            target: None,
            sampler: SamplerConfig {
                seed,
                ..SamplerConfig::default()
            },
            grid: posterior::DEFAULT_GRID,
        }
    }
}

/// Treatments ordered by occurrence count, ties to the lowest index.
fn by_frequency(data: &Dataset) -> Vec<TreatmentId> {
    let occ = network_summary(data).occurrences;
    let mut ks: Vec<TreatmentId> = (0..data.n_treatments()).map(TreatmentId).collect();
    ks.sort_by_key(|k| (std::cmp::Reverse(occ[k.0]), k.0));
    ks
}

/// Generates the constant, quadratic and sigmoidal datasets on the
/// skeleton, fits all three models to each and scores the target's curve
/// against the truth. Writes `simstudy.json`, `simstudy_curves.csv` and the
/// generated datasets.
pub fn run_simstudy(config: &SimStudyConfig) -> Result<SimStudyReport, CliError> {
    config.sampler.validate()?;
    if config.grid < 2 {
        return Err(CliError::Usage("grid needs at least 2 points".into()));
    }
    let skeleton = ingest(&config.skeleton)?;
    let ranked = by_frequency(&skeleton);
    let target = match &config.target {
        Some(t) => t.clone(),
        None => skeleton.label(ranked[0]).to_string(),
    };
    let baseline = match &config.baseline {
        Some(b) => b.clone(),
        None => skeleton
            .label(
                *ranked
                    .iter()
                    .find(|&&k| skeleton.label(k) != target)
                    .expect("two treatments"),
            )
            .to_string(),
    };
    let skeleton = skeleton.with_baseline_label(&baseline)?;
    let scenarios = simgen::default_scenarios(&target, config.seed);
    let generated = scenarios
        .iter()
        .map(|s| simgen::generate(&skeleton, s))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = default_grid(config.grid);

    let jobs: Vec<(usize, ModelKind)> = (0..scenarios.len())
        .flat_map(|s| ModelKind::ALL.into_iter().map(move |m| (s, m)))
        .collect();
    let fitted = jobs
        .par_iter()
        .map(|&(s, kind)| {
            let (data, truth) = &generated[s];
            let spec = ModelSpec::new(kind, data, &[truth.target])?;
            let samples = sampler::run(data, &spec, &config.sampler)?;
            let curve = posterior::effect_curve(&samples, &spec, data, truth.target, &grid)?;
            Ok::<_, CliError>((spec, samples, curve))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut runs = Vec::new();
    let mut warnings = Vec::new();
    let mut csv = String::from("scenario,model,time,truth,mean,q025,q50,q975\n");
    for (&(s, kind), (spec, samples, curve)) in jobs.iter().zip(&fitted) {
        let (data, truth) = &generated[s];
        let name = scenarios[s].shape.name().to_string();
        let f = |t: f64| truth.effect(truth.target, t);
        for i in 0..curve.len() {
            csv.push_str(&format!(
                "{name},{kind},{},{},{},{},{},{}\n",
                curve.times[i],
                f(curve.grid[i]),
                curve.mean[i],
                curve.q025[i],
                curve.q50[i],
                curve.q975[i]
            ));
        }
        let w = rhat_warnings(samples);
        warnings.extend(w.iter().map(|m| format!("{name}/{kind}: {m}")));
        runs.push(SimRun {
            scenario: name,
            model: kind,
            rmse: curve.rmse(f),
            coverage: curve.coverage(f),
            mean_width: curve.mean_width(),
            end_of_period: effect_entry(samples, spec, data, truth.target)?,
            max_rhat: samples
                .diagnostics
                .iter()
                .filter_map(|d| d.rhat)
                .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r)))),
            converged: w.is_empty(),
            diagnostics: samples.diagnostics.clone(),
            acceptance: samples.acceptance.clone(),
        });
    }
    let mut comparison = Vec::new();
    for (s, sc) in scenarios.iter().enumerate() {
        let pairs: Vec<(&PosteriorSamples, &ModelSpec)> = jobs
            .iter()
            .zip(&fitted)
            .filter(|((js, _), _)| *js == s)
            .map(|(_, (spec, samples, _))| (samples, spec))
            .collect();
        comparison.push(ScenarioComparison {
            scenario: sc.shape.name().to_string(),
            rows: posterior::compare_models(&pairs, &generated[s].0)?,
        });
    }
    let report = SimStudyReport {
        format_version: FORMAT_VERSION,
        seed: config.seed,
        baseline,
        target,
        config: ConfigEcho {
            input: config.skeleton.display().to_string(),
            n_chains: config.sampler.n_chains,
            n_iter: config.sampler.n_iter,
            burn_in: config.sampler.burn_in,
            thin: config.sampler.thin,
            adapt_window: config.sampler.adapt_window,
            effect_update: config.sampler.effect_update,
            grid: config.grid,
        },
        scenarios,
        runs,
        comparison,
        warnings,
    };

    std::fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))?;
    for (sc, (data, _)) in report.scenarios.iter().zip(&generated) {
        write_csv(
            data,
            &config.out_dir.join(format!("sim_{}.csv", sc.shape.name())),
        )?;
    }
    io::write_text(&config.out_dir.join("simstudy_curves.csv"), &csv)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    io::write_text(&config.out_dir.join("simstudy.json"), &json)?;
    Ok(report)
}
