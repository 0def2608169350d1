//! CSV schemas. Column order is part of the interface; the golden-file test
//! pins it.

use std::io::Write;

use persec_core::config::SweepPoint;
use persec_core::cost::{CostLedger, Counters, Phase, Role};
use persec_core::harness::{AttackCsvRow, MetricRow};
use persec_core::params::SweepRow;

pub const METRICS_HEADER: [&str; 5] = ["run", "role", "phase", "counter", "value"];

pub const ATTACK_HEADER: [&str; 8] =
    ["run", "index", "honest_contributors", "colluding_contributors", "server_view", "true_sum", "leaked", "violation"];

pub const THEOREM_HEADER: [&str; 7] =
    ["d", "delta_d", "eta_d", "ell", "delta_max", "recovery_feasible", "security_holds"];

const SWEEP_FIXED: [&str; 10] = [
    "axis",
    "value",
    "run",
    "status",
    "abort_phase",
    "cause",
    "scope_len",
    "revealed_in_scope",
    "revealed_fraction",
    "oracle_match",
];

/// Grid rates are multiples of the step; print them without binary noise.
fn rate(v: f64) -> String {
    format!("{}", (v * 1e9).round() / 1e9)
}

pub fn write_metrics<W: Write>(out: W, rows: &[MetricRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([r.run.to_string(), r.role.clone(), r.phase.clone(), r.counter.clone(), r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_attacks<W: Write>(out: W, rows: &[AttackCsvRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ATTACK_HEADER)?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.index.to_string(),
            r.honest_contributors.to_string(),
            r.colluding_contributors.to_string(),
            r.server_view.map(|v| v.to_string()).unwrap_or_default(),
            r.true_sum.to_string(),
            r.leaked.to_string(),
            r.violation.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_theorem<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THEOREM_HEADER)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            rate(r.delta_d),
            rate(r.eta_d),
            r.ell.to_string(),
            r.delta_max.to_string(),
            r.recovery_feasible.to_string(),
            r.security_holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed columns, then one `role.phase.counter` column per ledger cell.
pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> = SWEEP_FIXED.iter().map(|s| s.to_string()).collect();
    for role in Role::ALL {
        for phase in Phase::ALL {
            for counter in Counters::NAMES {
                h.push(format!("{}.{}.{}", role.name(), phase.name(), counter));
            }
        }
    }
    h
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header())?;
    for p in points {
        let mut rec = vec![
            p.axis.name().to_string(),
            rate(p.value),
            p.run.to_string(),
            p.status.to_string(),
            p.abort_phase.clone().unwrap_or_default(),
            p.cause.clone().unwrap_or_default(),
            p.scope_len.to_string(),
            p.revealed_in_scope.to_string(),
            format!("{:.6}", p.revealed_fraction()),
            p.oracle_match.to_string(),
        ];
        rec.extend(ledger_values(&p.ledger));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn ledger_values(l: &CostLedger) -> impl Iterator<Item = String> + '_ {
    l.rows().into_iter().map(|(_, _, _, v)| v.to_string())
}
