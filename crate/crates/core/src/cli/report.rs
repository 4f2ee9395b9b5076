//! Serialized report types and their tabular renderings.

use serde::{Deserialize, Serialize};

use crate::model::ModelKind;
use crate::posterior::{ComparisonRow, EffectCurve};
use crate::sampler::{BlockAcceptance, EffectUpdate, ScalarDiagnostic};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub n_chains: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub adapt_window: usize,
    pub effect_update: EffectUpdate,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEcho {
    pub studies: usize,
    pub treatments: usize,
    pub arms: usize,
    /// Decimal year of normalized time 0.
    pub time_origin: f64,
    /// Decimal years spanned by normalized time 0..1.
    pub time_scale: f64,
}

/// End-of-period effect of one treatment against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEntry {
    pub treatment: String,
    pub time_varying: bool,
    /// Decimal year the effect refers to.
    pub year: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    /// P(effect < 0): the treatment is less effective than the baseline.
    pub prob_inferior: f64,
    /// P(effect > 0).
    pub prob_superior: f64,
}

/// Calendar spans where a curve's 95% band excludes zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionWindows {
    pub treatment: String,
    pub windows: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub format_version: u32,
    pub model: ModelKind,
    pub baseline: String,
    pub time_varying: Vec<String>,
    pub seed: u64,
    pub config: ConfigEcho,
    pub data: DataEcho,
    pub effects: Vec<EffectEntry>,
    pub exclusion: Vec<ExclusionWindows>,
    pub diagnostics: Vec<ScalarDiagnostic>,
    pub acceptance: Vec<BlockAcceptance>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub scenario: String,
    pub model: ModelKind,
    /// RMSE of the posterior mean curve of the target against the truth.
    pub rmse: f64,
    /// Fraction of grid points whose 95% band contains the truth.
    pub coverage: f64,
    pub mean_width: f64,
    pub end_of_period: EffectEntry,
    pub max_rhat: Option<f64>,
    pub converged: bool,
    pub diagnostics: Vec<ScalarDiagnostic>,
    pub acceptance: Vec<BlockAcceptance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub scenario: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStudyReport {
    pub format_version: u32,
    pub seed: u64,
    pub baseline: String,
    pub target: String,
    pub config: ConfigEcho,
    pub scenarios: Vec<crate::simgen::Scenario>,
    pub runs: Vec<SimRun>,
    pub comparison: Vec<ScenarioComparison>,
    pub warnings: Vec<String>,
}

impl SimStudyReport {
    pub fn run(&self, scenario: &str, model: ModelKind) -> Option<&SimRun> {
        self.runs
            .iter()
            .find(|r| r.scenario == scenario && r.model == model)
    }
}

/// Spans of consecutive grid points whose band lies entirely on one side
/// of zero.
pub fn exclusion_windows(curve: &EffectCurve) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=curve.len() {
        let excl = i < curve.len() && (curve.q025[i] > 0.0 || curve.q975[i] < 0.0);
        match (excl, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push([curve.times[s], curve.times[i - 1]]);
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// `treatment,time,mean,q025,q50,q975` rows.
pub fn curves_csv(curves: &[EffectCurve]) -> String {
    let mut s = String::from("treatment,time,mean,q025,q50,q975\n");
    for c in curves {
        for i in 0..c.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.label, c.times[i], c.mean[i], c.q025[i], c.q50[i], c.q975[i]
            ));
        }
    }
    s
}
