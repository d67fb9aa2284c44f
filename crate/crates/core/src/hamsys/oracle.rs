use serde::Serialize;

use super::integrate::{integrate_system, IntegratorSettings, OracleTrace};
use super::{make_prepared_initial, InitialKind, SystemSpec};
use crate::{check_interval, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OracleOutcome {
    AllTrialsOscillated,
    SomeTrialDidNot,
    Unreliable,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub zero_times: Vec<f64>,
    pub reliable: bool,
    pub max_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub trace: Option<OracleTrace>,
}

/// Sampled numerical evidence; never a proof of (non)oscillation.
#[derive(Debug, Clone, Serialize)]
pub struct OracleEvidence {
    pub interval: [f64; 2],
    pub outcome: OracleOutcome,
    pub trials: Vec<TrialResult>,
    pub label: String,
}

impl OracleEvidence {
    pub fn zero_counts(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.zero_times.len()).collect()
    }
}

/// Seed used for trial `k` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64)
}

/// Integrate `trials` prepared solutions `(I, H_k)` with seeded random
/// hermitian `H_k` over `[a, b]`. Trials run on separate threads.
pub fn oracle_verdict(
    spec: &SystemSpec,
    a: f64,
    b: f64,
    trials: usize,
    seed: u64,
    settings: &IntegratorSettings,
) -> Result<OracleEvidence> {
    oracle_verdict_with(spec, a, b, trials, seed, &InitialKind::RandomHermitian, settings)
}

/// As [`oracle_verdict`] with every trial started from `kind`; seeds only
/// matter for [`InitialKind::RandomHermitian`].
pub fn oracle_verdict_with(
    spec: &SystemSpec,
    a: f64,
    b: f64,
    trials: usize,
    seed: u64,
    kind: &InitialKind,
    settings: &IntegratorSettings,
) -> Result<OracleEvidence> {
    check_interval(a, b)?;
    if trials == 0 {
        return Err(crate::Error::InvalidArgument("trials must be at least 1".into()));
    }
    let results: Vec<TrialResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..trials)
            .map(|k| {
                scope.spawn(move || {
                    let s = trial_seed(seed, k);
                    let run = make_prepared_initial(spec.n, kind, s)
                        .and_then(|init| integrate_system(spec, &init, a, b, settings));
                    match run {
                        Ok(trace) => TrialResult {
                            trial: k,
                            seed: s,
                            zero_times: trace.det_zero_times.clone(),
                            reliable: trace.reliable,
                            max_drift: trace.max_drift,
                            error: None,
                            trace: Some(trace),
                        },
                        Err(e) => TrialResult {
                            trial: k,
                            seed: s,
                            zero_times: Vec::new(),
                            reliable: false,
                            max_drift: f64::NAN,
                            error: Some(e.to_string()),
                            trace: None,
                        },
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle trial panicked")).collect()
    });
    let outcome = if results.iter().any(|r| !r.reliable) {
        OracleOutcome::Unreliable
    } else if results.iter().all(|r| !r.zero_times.is_empty()) {
        OracleOutcome::AllTrialsOscillated
    } else {
        OracleOutcome::SomeTrialDidNot
    };
    Ok(OracleEvidence {
        interval: [a, b],
        outcome,
        trials: results,
        label: format!(
            "numerical evidence from {trials} sampled prepared solutions on [{a}, {b}]; \
             a finite integration cannot establish zeros beyond the horizon"
        ),
    })
}
