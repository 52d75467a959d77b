//! Executes a scenario config and writes its report files.
//!
//! Every scenario writes `config.json` (the config as given), `summary.json`
//! and `timing.json` into the output directory, plus its own tables and
//! snapshots. All files except `timing.json` are reproducible byte for byte.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::config::{Scenario, ScenarioConfig};
use crate::error::Result;
use crate::mesh::{min_segment_length, SimParams, TriodState};
use crate::report::{
    convergence_table, epsilon_table, fmt_f64, junction_table, mass_conditioning_table, svg_snapshot,
    system_conditioning_table, trace_table, Summary, Table,
};
use crate::scenarios::{
    conditioning_mass, conditioning_system, convergence_study, epsilon_study, make_initial,
    self_intersect_run, spiral_study, RunDiagnostics, TracedRun,
};
use crate::stepper::{evolve_observed, StoppingRule};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        let p = self.path(name);
        table.write(&p)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(p, text)?;
        Ok(())
    }

    fn snapshot(&mut self, name: &str, state: &TriodState, title: &str) -> Result<()> {
        self.text(name, &svg_snapshot(state, title))
    }
}

fn diagnostics(summary: &mut Summary, prefix: &str, d: &RunDiagnostics) {
    summary.insert(format!("{prefix}.final_energy"), d.final_energy);
    summary.insert(format!("{prefix}.initial_energy"), d.initial_energy);
    summary.insert(format!("{prefix}.max_energy_increase"), d.max_energy_increase);
    summary.insert(format!("{prefix}.junction_exact"), d.junction_exact);
    summary.insert(format!("{prefix}.endpoints_exact"), d.endpoints_exact);
    summary.insert(format!("{prefix}.max_cg_iterations"), d.max_cg_iterations);
    summary.insert(format!("{prefix}.min_segment_length"), d.min_segment_length);
}

fn state_summary(summary: &mut Summary, prefix: &str, state: &TriodState) {
    let p = state.junction();
    summary.insert(format!("{prefix}.junction"), json!([p.x, p.y]));
    summary.insert(format!("{prefix}.final_time"), state.time);
}

fn traced(summary: &mut Summary, w: &mut Writer, key: &str, run: &TracedRun) -> Result<()> {
    let prefix = format!("result.{key}");
    summary.insert(format!("{prefix}.N_tot"), run.params.steps);
    state_summary(summary, &prefix, &run.final_state);
    diagnostics(summary, &prefix, &run.diagnostics);
    let lengths: Vec<f64> = run.trace.iter().map(|t| t.2).collect();
    let (k_min, min) = lengths
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let last = *lengths.last().expect("trace has the initial state");
    summary.insert(format!("{prefix}.min_segment_length_min"), min);
    summary.insert(format!("{prefix}.min_segment_length_min_time"), run.trace[k_min].1);
    summary.insert(format!("{prefix}.min_segment_length_final"), last);
    summary.insert(format!("{prefix}.min_segment_length_recovered"), last > min);
    for (t, s) in &run.snapshots {
        w.snapshot(
            &format!("{key}_t{}.svg", fmt_f64(*t)),
            s,
            &format!("{key}, t = {}", fmt_f64(*t)),
        )?;
    }
    Ok(())
}

/// Runs `config`, writing reports to `output_dir`.
pub fn run_scenario(config: &ScenarioConfig, output_dir: &Path) -> Result<RunOutcome> {
    let scenario = config.resolve()?;
    std::fs::create_dir_all(output_dir)?;
    let mut w = Writer {
        dir: output_dir.to_path_buf(),
        files: Vec::new(),
    };
    let started = Instant::now();

    let mut stored = config.clone();
    stored.output_dir = None;
    let mut summary = Summary::default();
    summary.flatten("params", &serde_json::to_value(&stored)?);
    w.text("config.json", &(serde_json::to_string_pretty(&stored)? + "\n"))?;

    match &scenario {
        Scenario::Convergence(setup) => {
            let out = convergence_study(setup)?;
            w.table("convergence.csv", &convergence_table(&out.rows))?;
            summary.insert("result.axis", serde_json::to_value(setup.axis)?);
            for r in &out.rows {
                let p = format!("result.J{}_N{}", r.elements, r.steps);
                summary.insert(format!("{p}.E1"), r.errors.e1);
                summary.insert(format!("{p}.E2"), r.errors.e2);
                summary.insert(format!("{p}.E3"), r.errors.e3);
                summary.insert(format!("{p}.E4"), r.errors.e4);
                diagnostics(&mut summary, &p, &r.diagnostics);
            }
            diagnostics(&mut summary, "result.reference", &out.reference_diagnostics);
        }
        Scenario::EpsilonStudy(setup) => {
            let rows = epsilon_study(setup)?;
            w.table("epsilon_study.csv", &epsilon_table(&rows))?;
            w.table("junction_balance.csv", &junction_table(&rows))?;
            for r in &rows {
                let key = format!("eps_{}", fmt_f64(r.epsilon));
                let p = format!("result.{key}");
                summary.insert(format!("{p}.N_tot"), r.n_tot);
                summary.insert(format!("{p}.relaxed"), r.relaxed);
                summary.insert(format!("{p}.E_ang"), r.e_ang);
                summary.insert(format!("{p}.E_pos"), r.e_pos);
                state_summary(&mut summary, &p, &r.final_state);
                diagnostics(&mut summary, &p, &r.diagnostics);
                w.snapshot(&format!("relaxed_{key}.svg"), &r.final_state, &format!("relaxed, epsilon = {}", fmt_f64(r.epsilon)))?;
            }
        }
        Scenario::ConditioningMass {
            elements,
            delta,
            epsilons,
            rotation_deg,
        } => {
            let rows = conditioning_mass(*elements, *delta, epsilons, *rotation_deg)?;
            w.table("conditioning_mass.csv", &mass_conditioning_table(&rows))?;
            for (l, r) in rows.iter().enumerate() {
                summary.insert(format!("result.l{}.cond2", l + 1), r.spectrum.cond2);
            }
        }
        Scenario::ConditioningSystem {
            elements,
            delta_factor,
            epsilons,
            convention,
        } => {
            let rows = conditioning_system(elements, *delta_factor, *epsilons, *convention)?;
            w.table("conditioning_system.csv", &system_conditioning_table(&rows, *epsilons))?;
            summary.insert("result.convention", serde_json::to_value(convention)?);
            for r in &rows {
                summary.insert(format!("result.J{}.ratio", r.elements), r.ratio);
            }
        }
        Scenario::Spiral {
            elements,
            epsilon,
            deltas,
            final_time,
            snapshot_times,
        } => {
            let runs = spiral_study(*elements, *epsilon, deltas, *final_time, snapshot_times)?;
            w.table("min_segment_length.csv", &trace_table(&runs))?;
            summary.insert("result.delta_sweep", "chosen default");
            for run in &runs {
                traced(&mut summary, &mut w, &format!("spiral_delta_{}", fmt_f64(run.params.delta)), run)?;
            }
        }
        Scenario::SelfIntersect {
            elements,
            epsilon,
            delta,
            final_time,
            junction_fix,
            snapshot_times,
        } => {
            let run = self_intersect_run(*elements, *epsilon, *delta, *final_time, *junction_fix, snapshot_times)?;
            w.table("min_segment_length.csv", &trace_table(std::slice::from_ref(&run)))?;
            summary.insert("result.junction_fix", serde_json::to_value(junction_fix)?);
            traced(&mut summary, &mut w, "self_intersect", &run)?;
        }
        Scenario::Custom {
            initial,
            elements,
            epsilon,
            delta,
            steps,
            threshold,
            z,
            junction_fix,
            snapshot_stride,
        } => {
            let start = make_initial(*initial, *elements, *z, *junction_fix)?;
            let params = SimParams::new(*epsilon, *elements, *delta, *steps)?;
            let stop = threshold.map_or(StoppingRule::FixedSteps, StoppingRule::VelocityBelow);
            let mut table = Table::new(&["step", "time", "energy", "min_segment_length", "cg_iterations", "max_nodal_speed"]);
            let mut snaps = Vec::new();
            let run = evolve_observed(&start, &params, stop, |n, s, r| {
                let energy = match r {
                    Some(r) => r.energy_after,
                    None => crate::mesh::energy(s, *epsilon)?,
                };
                table.push(vec![
                    n.to_string(),
                    fmt_f64(s.time),
                    fmt_f64(energy),
                    fmt_f64(min_segment_length(s)),
                    r.map_or(String::new(), |r| r.cg_iterations.to_string()),
                    r.map_or(String::new(), |r| fmt_f64(r.max_nodal_speed)),
                ]);
                if snapshot_stride.is_some_and(|k| k > 0 && n % k == 0) {
                    snaps.push((n, s.clone()));
                }
                Ok(())
            })?;
            w.table("trace.csv", &table)?;
            for (n, s) in &snaps {
                w.snapshot(&format!("step_{n:06}.svg"), s, &format!("step {n}"))?;
            }
            summary.insert("result.N_tot", run.steps_taken);
            summary.insert(
                "result.final_energy",
                run.reports.last().map_or(crate::mesh::energy(&start, *epsilon)?, |r| r.energy_after),
            );
            state_summary(&mut summary, "result", &run.final_state);
        }
    }

    let summary_path = w.path("summary.json");
    summary.write(&summary_path)?;
    let timing = json!({ "wall_time_s": started.elapsed().as_secs_f64() });
    w.text("timing.json", &(serde_json::to_string_pretty(&timing)? + "\n"))?;
    Ok(RunOutcome {
        output_dir: output_dir.to_path_buf(),
        files: w.files,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DeltaSpec, OneOrMany, ScenarioKind};
    use crate::scenarios::InitialShape;

    fn custom() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::Custom),
            initial: Some(InitialShape::Spiral),
            epsilon: Some(1e-3),
            j: Some(OneOrMany::One(12)),
            delta: Some(DeltaSpec::Rule("0.4h^2".into())),
            steps: Some(OneOrMany::One(5)),
            snapshot_stride: Some(5),
            ..Default::default()
        }
    }

    #[test]
    fn custom_run_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_scenario(&custom(), dir.path()).unwrap();
        for name in ["config.json", "trace.csv", "summary.json", "timing.json", "step_000000.svg", "step_000005.svg"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        assert_eq!(out.summary.get("result.N_tot"), Some(&json!(5)));
        assert_eq!(out.summary.get("params.initial"), Some(&json!("spiral")));
        let t = Table::read(&dir.path().join("trace.csv")).unwrap();
        assert_eq!(t.rows.len(), 6);
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = custom();
        c.steps = None;
        assert!(run_scenario(&c, &dir.path().join("out")).is_err());
        assert!(!dir.path().join("out").exists());
    }
}
