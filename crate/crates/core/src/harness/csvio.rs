//! Trajectory CSV files.
//!
//! Layout: a header `tau,residual,cond_estimate,x_r_11,x_r_21,…,x_i_11,…` with
//! state columns in `[vec(X_r); vec(X_i)]` order, one row per sample written
//! with 17 significant digits, and a trailing `# stats …` comment line.

use std::io::{Read, Write};

use super::HarnessError;
use crate::linalg::RVector;
use crate::ode::{IntegratorStats, Trajectory};

/// Column-major state labels for an `m×n` unknown.
pub fn state_columns(m: usize, n: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(2 * m * n);
    for part in ["r", "i"] {
        for j in 1..=n {
            for i in 1..=m {
                cols.push(format!("x_{part}_{i}{j}"));
            }
        }
    }
    cols
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `log10(max(r, 1e-300))`.
pub fn log_residual(r: f64) -> f64 {
    r.max(1e-300).log10()
}

/// Extra `key=value` pairs recorded on the stats line.
pub type Metadata = Vec<(String, String)>;

pub fn write_trajectory<W: Write>(
    out: W,
    m: usize,
    n: usize,
    tr: &Trajectory,
    meta: &Metadata,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["tau".to_string(), "residual".into(), "cond_estimate".into()];
    header.extend(state_columns(m, n));
    w.write_record(&header)?;
    for k in 0..tr.len() {
        let mut row = vec![fmt_f64(tr.taus[k]), fmt_f64(tr.residuals[k]), fmt_f64(tr.cond_estimates[k])];
        row.extend(tr.states[k].iter().map(|v| fmt_f64(*v)));
        w.write_record(&row)?;
    }
    let mut inner = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    let s = tr.stats;
    write!(
        inner,
        "# stats accepted={} rejected={} fallback={} rhs_evals={}",
        s.accepted_steps, s.rejected_steps, s.fallback_solves, s.rhs_evals
    )?;
    for (k, v) in meta {
        write!(inner, " {k}={v}")?;
    }
    writeln!(inner)?;
    inner.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Format(msg.into())
}

/// Reads a file produced by [`write_trajectory`] back into a trajectory and its metadata.
pub fn read_trajectory<R: Read>(mut input: R) -> Result<(Trajectory, Metadata), HarnessError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut body = String::new();
    let mut stats_line = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(s) = rest.trim().strip_prefix("stats") {
                stats_line = Some(s.trim().to_string());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }

    let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let width = r.headers()?.len();
    if width < 3 {
        return Err(bad("expected at least tau,residual,cond_estimate columns"));
    }
    let mut tr = Trajectory {
        taus: Vec::new(),
        states: Vec::new(),
        residuals: Vec::new(),
        cond_estimates: Vec::new(),
        stats: IntegratorStats::default(),
        steps: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| bad(format!("not a number: `{f}`"))))
            .collect::<Result<Vec<f64>, _>>()?;
        tr.taus.push(vals[0]);
        tr.residuals.push(vals[1]);
        tr.cond_estimates.push(vals[2]);
        tr.states.push(RVector(vals[3..].to_vec()));
    }

    let mut meta = Metadata::new();
    if let Some(line) = stats_line {
        for pair in line.split_whitespace() {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad(format!("malformed stats entry `{pair}`")))?;
            let count = || v.parse::<usize>().map_err(|_| bad(format!("malformed count `{pair}`")));
            match k {
                "accepted" => tr.stats.accepted_steps = count()?,
                "rejected" => tr.stats.rejected_steps = count()?,
                "fallback" => tr.stats.fallback_solves = count()?,
                "rhs_evals" => tr.stats.rhs_evals = count()?,
                _ => meta.push((k.to_string(), v.to_string())),
            }
        }
    }
    Ok((tr, meta))
}

/// Writes a wide table `tau,<col>,…` where every column has one value per sample.
pub fn write_table<W: Write>(out: W, taus: &[f64], columns: &[(String, Vec<f64>)]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["tau".to_string()];
    header.extend(columns.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    for (k, tau) in taus.iter().enumerate() {
        let mut row = vec![fmt_f64(*tau)];
        row.extend(columns.iter().map(|(_, v)| fmt_f64(v[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
