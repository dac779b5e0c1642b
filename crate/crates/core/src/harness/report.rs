use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use super::stats::ExperimentStats;
use super::HarnessError;

/// One experiment with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub stats: ExperimentStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "K_prime")]
    KPrime,
    L,
    K,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "K_prime" | "k_prime" | "kprime" => Ok(SweepAxis::KPrime),
            "L" | "l" => Ok(SweepAxis::L),
            "K" | "k" => Ok(SweepAxis::K),
            other => Err(format!("unknown axis `{other}`, expected K_prime, L or K")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<ExperimentReport>,
    /// Whether detection is non-decreasing in `K'` up to three standard
    /// errors; only set for that axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
}

#[derive(Serialize)]
struct CsvRow {
    strategy: String,
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "K_prime")]
    k_prime: u32,
    #[serde(rename = "L")]
    l: u32,
    trials: u64,
    detected: u64,
    detection_rate: f64,
    ci_low: f64,
    ci_high: f64,
    eve_fraction_mean: f64,
    key_growth: f64,
    rounds_per_trial: u32,
    master_seed: u64,
}

impl From<&ExperimentReport> for CsvRow {
    fn from(r: &ExperimentReport) -> Self {
        CsvRow {
            strategy: r.config.strategy.to_string(),
            k: r.config.k,
            k_prime: r.config.k_prime,
            l: r.config.attack_budget,
            trials: r.stats.trials,
            detected: r.stats.detected,
            detection_rate: r.stats.detection_rate,
            ci_low: r.stats.ci_low,
            ci_high: r.stats.ci_high,
            eve_fraction_mean: r.stats.eve_fraction_mean,
            key_growth: r.stats.key_growth_per_round,
            rounds_per_trial: r.config.rounds_per_trial,
            master_seed: r.config.master_seed,
        }
    }
}

fn csv_of<'a>(rows: impl IntoIterator<Item = &'a ExperimentReport>) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_of<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn write_text(text: &str, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, text)?;
    Ok(())
}

impl ExperimentReport {
    pub fn render(&self, format: OutputFormat) -> Result<String, HarnessError> {
        match format {
            OutputFormat::Csv => csv_of([self]),
            OutputFormat::Json => json_of(self),
        }
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
        write_text(&self.render(format)?, path)
    }
}

impl SweepTable {
    pub fn render(&self, format: OutputFormat) -> Result<String, HarnessError> {
        match format {
            OutputFormat::Csv => csv_of(&self.rows),
            OutputFormat::Json => json_of(self),
        }
    }

    pub fn write(&self, path: &Path, format: OutputFormat) -> Result<(), HarnessError> {
        write_text(&self.render(format)?, path)
    }
}
