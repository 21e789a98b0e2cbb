//! CSV and JSON output. All CSV uses `,` separators and `.` decimals; `k` is
//! always a grid index (data = `k · σ`).

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::general::{Policy, ValueTable};
use crate::model::{Action, LocationId};
use crate::monotone::ThresholdPolicy;
use crate::sim::experiment::ExperimentTable;

/// Columns `t,k,l,action`.
pub fn write_policy_csv<W: Write>(policy: &Policy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "l", "action"])?;
    for t in 1..=policy.horizon() {
        for k in 0..policy.grid_len() {
            for l in 0..policy.num_locations() {
                let l = LocationId::from_zero_based(l);
                w.serialize((t, k, l.get(), policy.get(t, k, l).code()))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `t,k,l,value`, including the terminal stage `T + 1`.
pub fn write_values_csv<W: Write>(values: &ValueTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "l", "value"])?;
    for t in 1..=values.horizon() + 1 {
        for k in 0..values.grid_len() {
            for l in 0..values.num_locations() {
                let l = LocationId::from_zero_based(l);
                w.serialize((t, k, l.get(), values.get(t, k, l)))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `l,t,k_star`; `k_star = K/σ + 1` means cellular is never chosen.
pub fn write_thresholds_csv<W: Write>(tp: &ThresholdPolicy, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["l", "t", "k_star"])?;
    for l in 0..tp.num_locations() {
        let l = LocationId::from_zero_based(l);
        for t in 1..=tp.horizon() {
            w.serialize((l.get(), t, tp.k_star(l, t)))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Action matrix for one location: row `t − 1`, column `k`.
pub type PolicyMap = Vec<Vec<Action>>;

pub fn threshold_map(tp: &ThresholdPolicy, l: LocationId) -> PolicyMap {
    (1..=tp.horizon())
        .map(|t| {
            (0..=tp.grid_steps())
                .map(|k| tp.decide(crate::model::State::new(k, l), t))
                .collect()
        })
        .collect()
}

/// Header `t,0,1,…,K/σ`, then one row of action codes per slot.
pub fn write_policy_map<W: Write>(map: &PolicyMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = map.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|k| k.to_string()));
    w.write_record(&header)?;
    for (i, row) in map.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(|a| a.code().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sweep_value: Option<f64>,
    scheme: &'a str,
    completion_prob: f64,
    completion_ci: f64,
    mean_cost: f64,
    cost_ci: f64,
    mean_payment: f64,
    payment_ci: f64,
    slots_cellular: f64,
    slots_wifi: f64,
    slots_waiting: f64,
}

/// One row per `(sweep_value, scheme)`; `sweep_value` is empty without a sweep.
pub fn write_experiment_csv<W: Write>(table: &ExperimentTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &table.rows {
        let m = &r.metrics;
        w.serialize(CsvRow {
            sweep_value: r.sweep_value,
            scheme: r.scheme.name(),
            completion_prob: m.completion.mean,
            completion_ci: m.completion.half_width,
            mean_cost: m.cost.mean,
            cost_ci: m.cost.half_width,
            mean_payment: m.payment.mean,
            payment_ci: m.payment.half_width,
            slots_cellular: m.slots_cellular,
            slots_wifi: m.slots_wifi,
            slots_waiting: m.slots_waiting,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Rows plus the full configuration and modelling metadata.
pub fn write_experiment_json<W: Write>(table: &ExperimentTable, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, table)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::general::solve;
    use crate::model::{LinkParams, Mobility, NetworkModel, PenaltyFn, ProblemSpec};

    fn tiny() -> (NetworkModel, ProblemSpec) {
        let m = NetworkModel::new(
            Mobility::identity(2).unwrap(),
            &[LocationId::new(2)],
            &[LinkParams {
                cellular_rate: 1.0,
                wifi_rate: 1.0,
                cellular_price: 1.0,
                wifi_price: 0.0,
            }; 2],
        )
        .unwrap();
        let s = ProblemSpec::on_grid(2, 2, 1.0, PenaltyFn::Quadratic { b: 5.0 }, LocationId::new(1)).unwrap();
        (m, s)
    }

    #[test]
    fn policy_csv_layout() {
        let (m, s) = tiny();
        let sol = solve(&m, &s).unwrap();
        let mut buf = Vec::new();
        write_policy_csv(&sol.policy, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,k,l,action");
        assert_eq!(lines.len(), 1 + 2 * 3 * 2);
        assert_eq!(lines[1], "1,0,1,0");
    }

    #[test]
    fn policy_map_layout() {
        let (m, s) = tiny();
        let sol = solve(&m, &s).unwrap();
        let mut buf = Vec::new();
        write_policy_map(&sol.policy.location_map(LocationId::new(2)), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,0,1,2\n1,0,2,2\n2,0,2,2\n");
    }
}
