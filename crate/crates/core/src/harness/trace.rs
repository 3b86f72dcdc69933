//! Plot-ready convergence curves.

use std::fmt::Write as _;

use crate::admm::AdmmTrace;
use crate::blur::BlurOperator;
use crate::error::{Error, Result};
use crate::image::Image;

use super::experiment::{configs_for, degrade, run_method, ExperimentSpec, Method, MethodRun};

/// `(iteration, log10 rmse)` from the starting point (iteration 0) to the last iterate.
pub fn emit_convergence_trace(trace: &AdmmTrace) -> Result<Vec<(usize, f64)>> {
    if trace.records.is_empty() {
        return Err(Error::Config("the trace has no iterations".into()));
    }
    let missing = || Error::Config("the trace has no reference RMSE".into());
    let mut rows = vec![(0, trace.initial_rmse.ok_or_else(missing)?.log10())];
    for r in &trace.records {
        rows.push((r.iter, r.rmse.ok_or_else(missing)?.log10()));
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[(usize, f64)]) -> String {
    let mut out = String::from("iteration,log10_rmse\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

/// Number of steps whose log RMSE rose above the previous value.
pub fn increasing_steps(rows: &[(usize, f64)]) -> usize {
    rows.windows(2).filter(|w| w[1].1 > w[0].1).count()
}

/// A single restoration with its convergence curve.
#[derive(Clone, Debug)]
pub struct TraceRun {
    pub observation: Image,
    pub run: MethodRun,
    pub curve: Vec<(usize, f64)>,
}

/// Realization 0 at the first SNR of `spec`, with the spec's configs (tuned if requested).
pub fn trace_run(spec: &ExperimentSpec, method: Method) -> Result<TraceRun> {
    spec.validate()?;
    let clean = spec.source.load()?;
    let op: BlurOperator = spec.blur.operator(clean.side())?;
    let (configs, _) = configs_for(spec, 0, &clean, &op)?;
    let d = degrade(&clean, &op, spec.snrs[0], spec.realization_seed(0, 0))?;
    let run = run_method(method, &configs, &d.y, &op, &clean)?;
    let curve = emit_convergence_trace(&run.trace)?;
    Ok(TraceRun {
        observation: d.y,
        run,
        curve,
    })
}
