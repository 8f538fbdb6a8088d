//! The invariant battery behind `phasefrac verify`.

use serde::Serialize;

use crate::decomposition::{angle_form_residuals, confinement_residuals, split_residual_max};
use crate::error::{Error, Result};
use crate::oracle::cross_check;
use crate::scenarios::Scenario;

use super::analysis::Analysis;

pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` when the check does not apply to this scenario.
    pub value: Option<f64>,
    pub limit: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn with_note(mut self, note: String) -> Self {
        self.note = Some(note);
        self
    }

    fn new(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value: Some(value), limit, passed: value <= limit, note: None }
    }

    fn skipped(name: &str, limit: f64, note: &str) -> Self {
        Self { name: name.into(), value: None, limit, passed: true, note: Some(note.into()) }
    }

    fn failed(name: &str, limit: f64, note: String) -> Self {
        Self { name: name.into(), value: None, limit, passed: false, note: Some(note) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioVerdict {
    pub scenario: String,
    pub steps: usize,
    pub checks: Vec<Check>,
    /// Numerical failure that stopped the battery, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub numerical_failure: bool,
}

impl ScenarioVerdict {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub steps: Option<usize>,
    pub tol: f64,
    pub oracle_tol: f64,
    pub deep: bool,
    pub strict_nodes: bool,
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

pub fn verify_scenario(scenario: &Scenario, opts: &VerifyOptions) -> ScenarioVerdict {
    let steps = opts.steps.unwrap_or(scenario.default_steps);
    let mut verdict = ScenarioVerdict {
        scenario: scenario.name.clone(),
        steps,
        checks: Vec::new(),
        error: None,
        numerical_failure: false,
    };
    match battery(scenario, steps, opts) {
        Ok(checks) => verdict.checks = checks,
        Err(e @ Error::NodeEncountered { .. }) => {
            verdict.checks.push(Check::failed("node_policy", 0.0, e.to_string()));
        }
        Err(e) => {
            verdict.numerical_failure = !e.is_input_error();
            verdict.error = Some(e.to_string());
        }
    }
    verdict
}

fn battery(scenario: &Scenario, steps: usize, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let tol = opts.tol;
    let a = Analysis::run(scenario, steps, opts.strict_nodes)?;
    let mut checks = vec![
        Check::new("split_reconstruction", split_residual_max(&a.traj)?, tol),
        Check::new(
            "angle_form_reconstruction",
            max_of(angle_form_residuals(&a.traj, &a.angles, &a.orth).into_iter().flatten()),
            tol,
        ),
        Check::new("orthogonal_confinement", max_of(confinement_residuals(&a.traj, &a.orth)), tol),
        Check::new("additivity", a.ledger.additivity_max(), tol),
        Check::new("fractional_law", a.ledger.fractional_law.max_abs(), tol),
        Check::new("fraction_ratio", a.ledger.ratio_check.max_deviation, tol),
        Check::new("length_forms", a.geometry.step_lengths.max_step_difference(), tol),
        Check::new("geodesic_bound", (a.geometry.geodesic_angle - a.geometry.total_length).max(0.0), tol),
        Check::new("circuitousness_sign", max_of(a.geometry.circuitousness.cumulative.iter().map(|c| -c)), tol),
        metric_check(&a.geometry.metric, tol),
        Check::new("metric_forms", a.geometry.metric.form_disagreement(), tol),
    ];
    if scenario.is_single_segment() {
        let q = a.speed_limits()?;
        checks.push(Check::new("mt_inequality", (q.mt_bound - q.t).max(0.0), tol));
        if q.sign_conflict_steps == 0 {
            checks.push(Check::new("geometric_qsl", (q.geometric_bound_rot - q.t).max(0.0), tol));
        } else {
            let note = format!("{} sign-conflict steps", q.sign_conflict_steps);
            checks.push(Check::skipped("geometric_qsl", tol, &note));
        }
    } else {
        checks.push(Check::skipped("mt_inequality", tol, "multi-segment schedule"));
        checks.push(Check::skipped("geometric_qsl", tol, "multi-segment schedule"));
    }
    if opts.deep {
        for r in cross_check(&a.traj)? {
            let mut c = Check::new(&format!("oracle:{}", r.quantity), r.rel_diff, opts.oracle_tol);
            if r.unmatched > 0 {
                c.passed = false;
                c.note = Some(format!("{} samples defined on one side only", r.unmatched));
            }
            checks.push(c);
        }
    }
    Ok(checks)
}

pub fn render_table(verdicts: &[ScenarioVerdict]) -> String {
    let mut out = format!("{:<18} {:<30} {:>12} {:>10}  {}\n", "scenario", "check", "max", "limit", "status");
    for v in verdicts {
        if let Some(e) = &v.error {
            out.push_str(&format!("{:<18} {:<30} {:>12} {:>10}  ERROR {e}\n", v.scenario, "-", "-", "-"));
        }
        for c in &v.checks {
            let value = c.value.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "n/a".into());
            let status = if c.passed { "ok" } else { "FAIL" };
            let note = c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
            out.push_str(&format!(
                "{:<18} {:<30} {:>12} {:>10.1e}  {status}{note}\n",
                v.scenario, c.name, value, c.limit
            ));
        }
    }
    let total: usize = verdicts.iter().map(|v| v.checks.len()).sum();
    let failed: usize = verdicts.iter().map(|v| v.checks.iter().filter(|c| !c.passed).count()).sum();
    let errors = verdicts.iter().filter(|v| v.error.is_some()).count();
    out.push_str(&format!("{} scenarios, {total} checks, {failed} failed, {errors} errors\n", verdicts.len()));
    out
}

fn metric_check(metric: &crate::geometry::MetricResiduals, tol: f64) -> Check {
    let bridged = metric.node_bridging_steps();
    let check = Check::new("metric_rotating", metric.max_rotating_off_nodes(), tol);
    if bridged > 0 {
        check.with_note(format!("{bridged} node-bridging steps excluded"))
    } else {
        check
    }
}
