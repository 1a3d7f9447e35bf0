use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::runner::{ExperimentOutcome, GroundTruthMap};
use crate::{Error, Result, RigidTransform};

/// Writes every artifact of a run into `dir`, creating it if needed.
///
/// Files: `stiffness_map.csv`, `probe_log.csv`, `report.json`, `heatmap.pgm`,
/// `registration_trace.csv` (winning seed of the final registration),
/// `registration_history.csv` (one row per probe cycle) and
/// `registered_probes.csv` (stiffness samples placed on the model).
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, "stiffness_map.csv", &stiffness_map_csv(outcome))?;
    write(dir, "probe_log.csv", &probe_log_csv(outcome))?;
    let report = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    write(dir, "report.json", &(report + "\n"))?;
    let (nx, ny) = outcome.roi.grid_shape();
    write_pgm(&dir.join("heatmap.pgm"), nx, ny, &outcome.prediction.mean)?;
    write(dir, "registration_trace.csv", &trace_csv(outcome))?;
    write(dir, "registration_history.csv", &history_csv(outcome))?;
    write(dir, "registered_probes.csv", &registered_csv(outcome))?;
    Ok(())
}

/// `ground_truth.csv` and `ground_truth.pgm` for a phantom's stiffness field.
pub fn write_ground_truth(map: &GroundTruthMap, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut csv = String::from("x_mm,y_mm,stiffness\n");
    for (p, v) in map.points.iter().zip(&map.values) {
        let _ = writeln!(csv, "{},{},{}", p.x, p.y, v);
    }
    write(dir, "ground_truth.csv", &csv)?;
    write_pgm(&dir.join("ground_truth.pgm"), map.nx, map.ny, &map.values)
}

/// Binary 8-bit PGM, rows in grid order, linear min–max scaling to 0..=255.
pub fn write_pgm(path: &Path, nx: usize, ny: usize, values: &[f64]) -> Result<()> {
    if values.len() != nx * ny {
        return Err(Error::InvalidInput(format!(
            "heatmap of {nx}×{ny} needs {} values, got {}",
            nx * ny,
            values.len()
        )));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut bytes = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    bytes.extend(values.iter().map(|&v| {
        if span > 0.0 {
            (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn stiffness_map_csv(o: &ExperimentOutcome) -> String {
    let mut s = String::from("x_mm,y_mm,mean,std,ei\n");
    for (i, p) in o.grid.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.x,
            p.y,
            o.prediction.mean[i],
            o.prediction.std(i),
            o.expected_improvement[i]
        );
    }
    s
}

fn probe_log_csv(o: &ExperimentOutcome) -> String {
    let stiffness = o.measurement_stiffness();
    let mut s = String::from(
        "probe,target_x_mm,target_y_mm,sample,depth_mm,force_n,x_mm,y_mm,z_mm,stiffness_n_per_mm\n",
    );
    for (pi, probe) in o.probes.iter().enumerate() {
        for (k, mi) in probe.measurements.clone().enumerate() {
            let m = &o.measurements[mi];
            let c = stiffness[mi].map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                pi,
                probe.target.x,
                probe.target.y,
                k + 1,
                o.depths[mi],
                m.force,
                m.position.x,
                m.position.y,
                m.position.z,
                c
            );
        }
    }
    s
}

const TRANSFORM_COLUMNS: &str = "tx_mm,ty_mm,tz_mm,rx_deg,ry_deg,rz_deg";

fn transform_fields(t: &RigidTransform) -> String {
    t.to_euler_deg()
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn trace_csv(o: &ExperimentOutcome) -> String {
    let mut s = format!("iteration,objective,{TRANSFORM_COLUMNS}\n");
    let winner = &o.registration.seeds[o.registration.seed_index];
    for e in &winner.trace {
        let _ = writeln!(
            s,
            "{},{},{}",
            e.iteration,
            e.objective,
            transform_fields(&e.transform)
        );
    }
    s
}

fn history_csv(o: &ExperimentOutcome) -> String {
    let mut s = format!("cycle,probe_count,objective,{TRANSFORM_COLUMNS}\n");
    for c in &o.history {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            c.cycle,
            c.probe_count,
            c.objective,
            transform_fields(&c.transform)
        );
    }
    s
}

fn registered_csv(o: &ExperimentOutcome) -> String {
    let t = &o.registration.transform;
    let mut s = String::from("set,x_mm,y_mm,z_mm,stiffness_n_per_mm\n");
    for sample in &o.samples {
        let p = t.apply(&o.measurements[o.sets[sample.set_index].reference].position);
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            sample.set_index, p.x, p.y, p.z, sample.stiffness
        );
    }
    s
}
