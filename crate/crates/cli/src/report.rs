//! JSON documents written by the commands.

use std::collections::BTreeMap;

use profile_sketch::harness::{ErrorSummary, StreamSpec, TrialSummary};
use serde::Serialize;

pub const FORMAT_VERSION: u32 = 1;

/// Output of `estimate`.
#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub version: u32,
    pub error_type: String,
    pub epsilon: f64,
    pub tau: usize,
    pub algo: String,
    /// `phi^_i` for `i = 1..=tau`.
    pub profile: BTreeMap<u64, f64>,
    #[serde(rename = "D_hat")]
    pub d_hat: f64,
    #[serde(rename = "S_hat")]
    pub s_hat: f64,
    pub m: u64,
    pub warnings: Vec<String>,
}

/// Output of `exact`.
#[derive(Debug, Serialize)]
pub struct ExactReport {
    pub version: u32,
    pub profile: BTreeMap<u64, u64>,
    #[serde(rename = "D")]
    pub distinct: u64,
    pub m: u64,
}

/// Summary written by `evaluate`.
#[derive(Debug, Serialize)]
pub struct CampaignReport {
    pub version: u32,
    pub algo: String,
    pub error_type: String,
    pub epsilon: f64,
    pub tau: usize,
    pub trials: usize,
    pub seed: u64,
    pub spec: StreamSpec,
    /// Pass rate of the guarantee selected by `error_type`.
    pub pass_rate: f64,
    pub head_pass_rate: f64,
    pub head_pass_stderr: f64,
    pub full_pass_rate: f64,
    pub full_pass_stderr: f64,
    pub target_rate: f64,
    pub head_l1: ErrorSummary,
    pub full_l1: ErrorSummary,
}

impl CampaignReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        algo: &str,
        error_type: &str,
        head_guarantee: bool,
        epsilon: f64,
        tau: usize,
        seed: u64,
        spec: StreamSpec,
        summary: TrialSummary,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            algo: algo.to_string(),
            error_type: error_type.to_string(),
            epsilon,
            tau,
            trials: summary.trials,
            seed,
            spec,
            pass_rate: if head_guarantee { summary.head_pass_rate } else { summary.full_pass_rate },
            head_pass_rate: summary.head_pass_rate,
            head_pass_stderr: summary.head_pass_stderr,
            full_pass_rate: summary.full_pass_rate,
            full_pass_stderr: summary.full_pass_stderr,
            target_rate: summary.target_rate,
            head_l1: summary.head_l1,
            full_l1: summary.full_l1,
        }
    }
}
