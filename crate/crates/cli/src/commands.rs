use std::path::PathBuf;

use cubiclab::config::Config;
use cubiclab::evolve;
use cubiclab::experiments::{
    distance_scaling, drift_scaling, evolve_series, lifespan_sweep, model_audit, morawetz_scaling, soliton_suite,
};
use cubiclab::functionals::{InteractionSpec, MassMonitor, MorawetzMonitor};
use cubiclab::norms::{
    audit_bootstrap, band_masses, build_envelope, interpolation_audit, AuditSpec, ENVELOPE_DELTA,
};
use cubiclab::persist::*;
use cubiclab::symbols::{check_hypotheses, SampleSpec};
use cubiclab::{selftest as suite, QuarticCorrection};
use serde_json::json;

use crate::{CliError, Common, Experiment};

/// Validated configuration plus where to write.
pub struct Prepared {
    command: String,
    config: Config,
    out: PathBuf,
}

impl Common {
    /// Load the config and apply overrides, then `extra` (flag-derived
    /// overrides, applied last). Nothing is computed before this succeeds.
    pub fn prepare(self, command: &str, extra: Vec<String>) -> Result<Prepared, CliError> {
        if let Some(bad) = self.overrides.iter().find(|o| !o.contains('=')) {
            return Err(CliError::Usage(format!("override `{bad}` must look like key=value")));
        }
        let mut overrides = self.overrides;
        overrides.extend(extra);
        let config = match &self.config {
            Some(path) if !path.is_file() => {
                return Err(CliError::Usage(format!("config file `{}` not found", path.display())));
            }
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(e.to_string()))?;
                Config::from_toml_str(&text, &overrides)?
            }
            None => Config::from_toml_str("", &overrides)?,
        };
        Ok(Prepared {
            command: command.to_string(),
            config,
            out: self.out,
        })
    }
}

fn progress(msg: &str) {
    eprintln!("cubiclab: {msg}");
}

/// Open the output directory, run `body`, and always write the manifest.
fn with_output(
    p: &Prepared,
    body: impl FnOnce(&mut OutputDir) -> cubiclab::Result<()>,
) -> Result<(), CliError> {
    let manifest = Manifest::new(&p.command, p.config.to_json(), p.config.seeds());
    let mut dir = OutputDir::create(&p.out, manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcome = body(&mut dir);
    let status = outcome.as_ref().map(|_| ()).map_err(|e| e.to_string());
    let path = dir.finish(status).map_err(|e| CliError::Runtime(e.to_string()))?;
    progress(&format!("manifest {}", path.display()));
    outcome.map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn run(p: &Prepared) -> Result<(), CliError> {
    let cfg = &p.config;
    with_output(p, |dir| {
        let plan = cfg.plan()?;
        let grid = *plan.grid();
        let u0 = cfg.data.sample(&grid, cfg.run.eps)?;
        let correction = QuarticCorrection::for_symbol(plan.symbol(), cfg.run.band, &grid, cfg.run.correction_kmax)?;
        let m = &cfg.morawetz;
        let mut mass = MassMonitor::new(correction);
        let mut morawetz = MorawetzMonitor::new(InteractionSpec::new(m.band_a, m.band_b, m.xi0, m.x0));
        progress(&format!("run {} on N={} to t={}", plan.symbol().label(), grid.n_points(), cfg.evolve.t_end));
        let out = evolve::run(&u0, &cfg.evolve_config()?, &plan, &mut [&mut mass, &mut morawetz])?;

        let remainder = morawetz.report().ok().map(|r| r.remainder);
        let rows: Vec<SeriesRecord> = (0..mass.times.len())
            .map(|i| SeriesRecord {
                time: mass.times[i],
                mass: mass.mass[i],
                corrected_mass: mass.corrected[i],
                interaction: morawetz.interaction[i],
                j4: morawetz.j4[i],
                remainder: remainder
                    .as_ref()
                    .and_then(|r| i.checked_sub(1).and_then(|j| r.get(j)).copied()),
            })
            .collect();
        dir.write_csv("series.csv", SERIES_SCHEMA, &rows)?;

        let notes = &mut dir.manifest.notes;
        notes.insert("strategy".into(), json!(plan.kind()));
        notes.insert("rank".into(), json!(plan.rank()));
        notes.insert("dt".into(), json!(out.dt));
        notes.insert("steps".into(), json!(out.state.step));
        notes.insert("final_time".into(), json!(out.state.time));
        notes.insert("exit".into(), json!(out.state.exit));
        Ok(())
    })
}

pub fn sweep(p: &Prepared, experiment: Experiment) -> Result<(), CliError> {
    let cfg = &p.config;
    with_output(p, |dir| {
        match experiment {
            Experiment::Drift => {
                let setup = cfg.drift_setup()?;
                progress(&format!("drift sweep over {} amplitudes", setup.eps.len()));
                let out = drift_scaling(&cfg.symbol()?, &setup)?;
                let rows: Vec<DriftRecord> = out.rows.iter().map(DriftRecord::from).collect();
                dir.write_csv("drift.csv", DRIFT_SCHEMA, &rows)?;
                let fits: Vec<FitRecord> = [(&out.raw, "raw_rate", 4.0), (&out.corrected, "corrected_rate", 6.0)]
                    .into_iter()
                    .filter_map(|(f, q, r)| f.as_ref().map(|f| FitRecord::new("drift", q, f, Some(r))))
                    .collect();
                dir.write_csv("fits.csv", FITS_SCHEMA, &fits)?;
                dir.manifest.notes.insert("correction_size".into(), json!(out.correction_size));
                dir.manifest.notes.insert("excluded".into(), json!(out.excluded));
            }
            Experiment::Lifespan => {
                let setup = cfg.lifespan_setup()?;
                progress(&format!("lifespan sweep over {} amplitudes, cap {}", setup.eps.len(), setup.cap));
                let rows = lifespan_sweep(&cfg.symbol()?, &setup)?;
                let records: Vec<LifespanRecord> = rows.iter().map(LifespanRecord::from).collect();
                dir.write_csv("lifespan.csv", LIFESPAN_SCHEMA, &records)?;
            }
            Experiment::Morawetz => {
                let setup = cfg.morawetz_setup()?;
                progress(&format!("Morawetz sweep over {} amplitudes", setup.eps.len()));
                let out = morawetz_scaling(&cfg.symbol()?, &setup)?;
                let rows: Vec<MorawetzRecord> = out.rows.iter().map(MorawetzRecord::from).collect();
                dir.write_csv("morawetz.csv", MORAWETZ_SCHEMA, &rows)?;
                let fits: Vec<FitRecord> = [(&out.sup_fit, "remainder_sup"), (&out.l1_fit, "remainder_l1")]
                    .into_iter()
                    .filter_map(|(f, q)| f.as_ref().map(|f| FitRecord::new("morawetz", q, f, None)))
                    .collect();
                dir.write_csv("fits.csv", FITS_SCHEMA, &fits)?;
            }
            Experiment::Distance => {
                progress(&format!("distance sweep over {:?}", cfg.distance.distances));
                let out = distance_scaling(&cfg.distance)?;
                dir.write_csv("distance.csv", DISTANCE_SCHEMA, &out.rows)?;
                let fit = FitRecord::new("distance", "bilinear", &out.fit, Some(0.5));
                dir.write_csv("fits.csv", FITS_SCHEMA, &[fit])?;
            }
        }
        Ok(())
    })
}

pub fn soliton(p: &Prepared) -> Result<(), CliError> {
    let setup = &p.config.soliton;
    with_output(p, |dir| {
        progress(&format!("soliton table for lambda {:?} to T={}", setup.lambdas, setup.t_end));
        let rows = soliton_suite(setup)?;
        dir.write_csv("soliton.csv", SOLITON_SCHEMA, &rows)?;
        Ok(())
    })
}

/// Widest band index considered by the bootstrap audit.
const AUDIT_BAND_LIMIT: i64 = 16;

pub fn audit(p: &Prepared) -> Result<(), CliError> {
    let cfg = &p.config;
    with_output(p, |dir| {
        progress(&format!("model audit at norms {:?}", cfg.audit.norms));
        let rows = model_audit(&cfg.audit)?;
        let datum = cfg.audit.datum.name();
        let mut windows = Vec::new();
        for row in &rows {
            for (audit, n) in [(&row.coarse, cfg.audit.n_points), (&row.fine, 2 * cfg.audit.n_points)] {
                windows.extend(audit.rows.iter().map(|w| WindowRecord::new(datum, row.norm, n, w)));
            }
            let key = format!("norm {}", row.norm);
            dir.manifest.oracle_errors.insert(format!("refinement defect, {key}"), row.defect);
            dir.manifest.notes.insert(format!("status, {key}"), json!(row.status.label()));
        }
        dir.write_csv("windows.csv", WINDOWS_SCHEMA, &windows)?;

        let grid = cfg.grid()?;
        let eps = cfg.run.eps;
        let u0 = cfg.data.sample(&grid, eps)?;
        let top = ((grid.n_points() / 2) as f64 * grid.dk()).floor() as i64 - 1;
        let kmax = top.clamp(0, AUDIT_BAND_LIMIT);
        let masses = band_masses(&u0, -kmax, kmax)?;
        let peak = masses.iter().cloned().fold(0.0, f64::max);
        let present: Vec<i64> = (-kmax..=kmax)
            .zip(&masses)
            .filter(|(_, m)| **m > 1e-8 * peak)
            .map(|(k, _)| k)
            .collect();
        let (Some(&lo), Some(&hi)) = (present.first(), present.last()) else {
            return Err(cubiclab::Error::Precondition("data has no mass in the audited bands".into()));
        };
        let envelope = build_envelope(&masses[(lo + kmax) as usize..=(hi + kmax) as usize], lo, eps, ENVELOPE_DELTA)?;
        let samples = ((cfg.evolve.t_end / (cfg.evolve.dt * cfg.evolve.cadence as f64)).round() as usize).max(2);
        progress(&format!("bootstrap audit over bands {lo}..={hi}, {samples} samples"));
        let (series, status) =
            evolve_series(&cfg.symbol()?, &u0, cfg.evolve.t_end, cfg.evolve.dt, samples, cfg.evolve.health)?;
        let spec = AuditSpec {
            bands: present.clone(),
            pairs: present.iter().skip(1).map(|&k| (lo, k)).collect(),
            x0: cfg.morawetz.x0,
        };
        let bootstrap: Vec<BootstrapRecord> = audit_bootstrap(&series, &envelope, eps, &spec)?
            .iter()
            .map(BootstrapRecord::from)
            .collect();
        dir.write_csv("bootstrap.csv", BOOTSTRAP_SCHEMA, &bootstrap)?;
        let interpolation: Vec<InterpolationRecord> = interpolation_audit(&series, &present, series.span())?
            .iter()
            .map(|e| InterpolationRecord::new(cfg.data.name(), grid.n_points(), e))
            .collect();
        dir.write_csv("interpolation.csv", INTERPOLATION_SCHEMA, &interpolation)?;

        let notes = &mut dir.manifest.notes;
        notes.insert("bootstrap status".into(), json!(status.label()));
        notes.insert("envelope admissibility".into(), json!(envelope.admissibility));
        notes.insert("envelope raised bands".into(), json!(envelope.raised));
        Ok(())
    })
}

pub fn symbol_inspect(p: &Prepared) -> Result<(), CliError> {
    let cfg = &p.config;
    with_output(p, |dir| {
        let plan = cfg.plan()?;
        let symbol = plan.symbol();
        let hypotheses = check_hypotheses(symbol, &SampleSpec::default())?;
        let report = json!({
            "spec": cfg.symbol.spec,
            "structure": symbol.structure_name(),
            "strategy": plan.kind(),
            "rank": plan.rank(),
            "pad_factor": plan.pad_factor(),
            "n_points": plan.grid().n_points(),
            "sup_on_grid": symbol.sup_on_grid(plan.grid()),
            "hypotheses": hypotheses,
        });
        println!("{report}");
        dir.write_json("symbol.json", SYMBOL_SCHEMA, &report)?;
        Ok(())
    })
}

pub fn selftest(p: &Prepared) -> Result<(), CliError> {
    with_output(p, |dir| {
        let checks = suite::run_suite();
        for c in &checks {
            println!("{}", c.line());
            dir.manifest.oracle_errors.insert(c.name.clone(), c.error);
        }
        dir.write_csv("selftest.csv", SELFTEST_SCHEMA, &checks)?;
        let failed = checks.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            return Err(cubiclab::Error::Precondition(format!("{failed} of {} checks failed", checks.len())));
        }
        Ok(())
    })
}
