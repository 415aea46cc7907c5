//! Experiment drivers: a validated config in, result tables out.

use std::path::{Path, PathBuf};

use fluxlab::bohm::{crossing_ensemble, TrajectoryOutcome};
use fluxlab::conescan::{momentum_cone_probability, sict_convergence_scan, MomentumProfile, RadialSpec};
use fluxlab::flux::{
    asymptotic_window_flux, asymptotic_window_flux_in_time, fas_distance, finite_window_flux,
    integrated_flux_with_profile, remainder_bounds_with, time_cutoff, RemainderOptions, PROFILE_ORDER,
};
use fluxlab::geometry::cone_quadrature;
use fluxlab::{Cone, SphereCap};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use crate::table::{write_file, Cell, Table, SCHEMA};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `ensemble.seed` from the config.
    pub seed: Option<u64>,
    /// Also emit one row per Bohmian crossing.
    pub dump_crossings: bool,
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub experiment: ExperimentKind,
    /// The first table is the experiment's main output.
    pub tables: Vec<Table>,
    pub seed: Option<u64>,
}

impl Artifacts {
    pub fn summary(&self) -> Value {
        let tables: Vec<Value> = self.tables.iter().map(Table::to_json).collect();
        json!({
            "schema": SCHEMA,
            "experiment": self.experiment.name(),
            "seed": self.seed,
            "tables": tables,
        })
    }

    /// Write every table as CSV plus `<experiment>.json`; returns the paths.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
            path: out_dir.to_path_buf(),
            source: e,
        })?;
        let mut paths = Vec::new();
        for t in &self.tables {
            let p = out_dir.join(format!("{}.csv", t.name));
            write_file(&p, &t.to_csv()?)?;
            paths.push(p);
        }
        let p = out_dir.join(format!("{}.json", self.experiment.name()));
        let text = serde_json::to_string_pretty(&self.summary()).expect("summary serializes") + "\n";
        write_file(&p, &text)?;
        paths.push(p);
        Ok(paths)
    }
}

pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Artifacts> {
    if opts.dump_crossings && config.experiment != ExperimentKind::Bohm {
        return Err(CliError::Usage("--dump-crossings only applies to bohm".into()));
    }
    let mut seed = None;
    let tables = match config.experiment {
        ExperimentKind::FasScan => vec![fas_scan(config)?],
        ExperimentKind::Sict => vec![sict(config)?],
        ExperimentKind::Bohm => {
            let ens = config.ensemble.expect("validated bohm config has an ensemble");
            let s = opts.seed.unwrap_or(ens.seed);
            seed = Some(s);
            bohm(config, s, opts.dump_crossings)?
        }
        ExperimentKind::Remainder => remainder(config)?,
        ExperimentKind::Window => vec![window(config)?],
    };
    Ok(Artifacts {
        experiment: config.experiment,
        tables,
        seed,
    })
}

fn full_sphere_rule(config: &ExperimentConfig) -> Result<fluxlab::CapQuadrature> {
    let full = Cone::full(config.packet.preferred_axis())?;
    Ok(cone_quadrature(&full, config.tolerances.angular_order)?)
}

/// Columns: R, T, signed, absolute, inward, tail_bound, quad_error,
/// momentum_prob, gap = |signed - momentum_prob|, and for T > 0 the
/// asymptotic flux over [T, T_max] by the speed and time routes.
fn fas_scan(config: &ExperimentConfig) -> Result<Table> {
    let p = &config.packet;
    let cone = config.cone();
    let tol = &config.tolerances;
    let rule = cone_quadrature(&cone, tol.angular_order)?;
    let profile = MomentumProfile::new(p, PROFILE_ORDER)?;
    let m = momentum_cone_probability(p, &cone, &RadialSpec::default())?.value;
    let mut t = Table::new(
        "fas-scan",
        &[
            "R",
            "T",
            "signed",
            "absolute",
            "inward",
            "tail_bound",
            "quad_error",
            "momentum_prob",
            "gap",
            "asymptotic_v",
            "asymptotic_t",
        ],
    );
    for &r in &config.radii {
        let cap = SphereCap::new(r, cone)?;
        let f = integrated_flux_with_profile(p, &cap, config.t_start, tol.epsilon_tail, &rule, tol.time_tol, &profile)?;
        let (av, at) = if config.t_start > 0.0 {
            let t_max = time_cutoff(&profile, r, tol.epsilon_tail)?.t_max;
            (
                Some(asymptotic_window_flux(p, &cap, config.t_start, t_max, &rule)?),
                Some(asymptotic_window_flux_in_time(p, &cap, config.t_start, t_max, &rule, tol.time_tol)?),
            )
        } else {
            (None, None)
        };
        t.push(vec![
            r.into(),
            config.t_start.into(),
            f.signed.into(),
            f.absolute.into(),
            f.inward.into(),
            f.tail_bound.into(),
            f.quad_error.into(),
            m.into(),
            (f.signed - m).abs().into(),
            av.into(),
            at.into(),
        ]);
    }
    Ok(t)
}

/// Columns: t, position_prob, momentum_prob, gap.
fn sict(config: &ExperimentConfig) -> Result<Table> {
    let rows = sict_convergence_scan(&config.packet, &config.cone(), &config.times)?;
    let mut t = Table::new("sict", &["t", "position_prob", "momentum_prob", "gap"]);
    for r in rows {
        t.push(vec![r.t.into(), r.position_prob.into(), r.momentum_prob.into(), r.gap.into()]);
    }
    Ok(t)
}

const BOHM_COLUMNS: [&str; 20] = [
    "R",
    "cone_axis_x",
    "cone_axis_y",
    "cone_axis_z",
    "half_angle_deg",
    "n",
    "aborted",
    "estimate",
    "ci95",
    "mean_signed_crossings",
    "ci95_signed",
    "mean_total_crossings",
    "ci95_total",
    "flux_signed",
    "flux_absolute",
    "multi_cross_frac",
    "abort_frac",
    "acceptance_rate",
    "t_budget",
    "seed",
];

const CROSSING_COLUMNS: [&str; 14] = [
    "R",
    "trajectory",
    "x0_x",
    "x0_y",
    "x0_z",
    "status",
    "ordinal",
    "time",
    "direction",
    "exit_x",
    "exit_y",
    "exit_z",
    "in_cap",
    "reason",
];

/// One row per radius with the ensemble statistics next to the signed and
/// absolute flux integrals they estimate.
fn bohm(config: &ExperimentConfig, seed: u64, dump: bool) -> Result<Vec<Table>> {
    let p = &config.packet;
    let cone = config.cone();
    let ens = config.ensemble.expect("validated bohm config has an ensemble");
    let tol = &config.tolerances;
    let rule = cone_quadrature(&cone, tol.angular_order)?;
    let profile = MomentumProfile::new(p, PROFILE_ORDER)?;
    let mut t = Table::new("bohm", &BOHM_COLUMNS);
    let mut dump_table = Table::new("crossings", &CROSSING_COLUMNS);
    for &r in &config.radii {
        let (s, outcomes) = crossing_ensemble(p, r, &cone, ens.n, seed, ens.t_budget, tol.ode_tol)?;
        let f = integrated_flux_with_profile(p, &SphereCap::new(r, cone)?, 0.0, tol.epsilon_tail, &rule, tol.time_tol, &profile)?;
        let axis = cone.axis();
        t.push(vec![
            r.into(),
            axis.x.into(),
            axis.y.into(),
            axis.z.into(),
            cone.half_angle().to_degrees().into(),
            s.n.into(),
            s.aborted.into(),
            s.estimate.into(),
            s.ci95.into(),
            s.mean_signed_crossings.into(),
            s.ci95_signed.into(),
            s.mean_total_crossings.into(),
            s.ci95_total.into(),
            f.signed.into(),
            f.absolute.into(),
            s.multi_cross_frac.into(),
            s.abort_frac.into(),
            s.acceptance_rate.into(),
            s.t_budget.into(),
            seed.into(),
        ]);
        if dump {
            dump_crossings(&mut dump_table, r, &cone, &outcomes);
        }
    }
    let mut tables = vec![t];
    if dump {
        tables.push(dump_table);
    }
    Ok(tables)
}

fn dump_crossings(table: &mut Table, r: f64, cone: &Cone, outcomes: &[TrajectoryOutcome]) {
    for (i, o) in outcomes.iter().enumerate() {
        let lead = |x0: &fluxlab::Vec3, status: &str| -> Vec<Cell> {
            vec![r.into(), i.into(), x0.x.into(), x0.y.into(), x0.z.into(), status.into()]
        };
        match o {
            TrajectoryOutcome::Aborted { x0, reason } => {
                let mut row = lead(x0, "aborted");
                row.extend(std::iter::repeat_n(Cell::Empty, 7));
                row.push(reason.as_str().into());
                table.push(row);
            }
            TrajectoryOutcome::Completed { x0, trace } if trace.crossings.is_empty() => {
                let mut row = lead(x0, "no-crossing");
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                table.push(row);
            }
            TrajectoryOutcome::Completed { x0, trace } => {
                for c in &trace.crossings {
                    let mut row = lead(x0, "completed");
                    row.extend([
                        c.ordinal.into(),
                        c.time.into(),
                        Cell::Int(c.direction as i64),
                        c.exit_point.x.into(),
                        c.exit_point.y.into(),
                        c.exit_point.z.into(),
                        Cell::Int(cone.contains(&c.exit_point) as i64),
                        Cell::Empty,
                    ]);
                    table.push(row);
                }
            }
        }
    }
}

/// Main table: R, T, fas_distance (direct), fas_distance_remainders (from f
/// and g). Second table: the remainder bounds and their sampled suprema.
fn remainder(config: &ExperimentConfig) -> Result<Vec<Table>> {
    let p = &config.packet;
    let tol = &config.tolerances;
    let rule = full_sphere_rule(config)?;
    let diag = remainder_bounds_with(
        p,
        &RemainderOptions {
            radii: config.radii.clone(),
            t_start: config.t_start,
            epsilon_tail: tol.epsilon_tail,
            time_tol: tol.time_tol,
            angular_order: tol.angular_order,
            ..Default::default()
        },
    )?;
    let mut t = Table::new("remainder", &["R", "T", "fas_distance", "fas_distance_remainders"]);
    for &(r, via_remainders) in &diag.cross_term_decay {
        let direct = fas_distance(p, r, config.t_start, tol.epsilon_tail, &rule, tol.time_tol)?;
        t.push(vec![r.into(), config.t_start.into(), direct.into(), via_remainders.into()]);
    }
    let mut b = Table::new(
        "remainder_bounds",
        &[
            "c_f",
            "c_g",
            "sup_f_sampled",
            "sup_g_sampled",
            "samples",
            "violations",
            "l1_norm",
            "l1_moment",
            "refinement_change",
        ],
    );
    b.push(vec![
        diag.c_f.into(),
        diag.c_g.into(),
        diag.sup_f_sampled.into(),
        diag.sup_g_sampled.into(),
        diag.samples.into(),
        diag.violations.into(),
        diag.l1_norm.into(),
        diag.l1_moment.into(),
        diag.refinement_change.into(),
    ]);
    Ok(vec![t, b])
}

/// Columns: R, t1, t2, window_flux (absolute flux over the whole sphere).
fn window(config: &ExperimentConfig) -> Result<Table> {
    let (t1, t2) = config.window.expect("validated window config has a window");
    let rule = full_sphere_rule(config)?;
    let mut t = Table::new("window", &["R", "t1", "t2", "window_flux"]);
    for &r in &config.radii {
        let w = finite_window_flux(&config.packet, r, t1, t2, &rule, config.tolerances.time_tol)?;
        t.push(vec![r.into(), t1.into(), t2.into(), w.into()]);
    }
    Ok(t)
}
