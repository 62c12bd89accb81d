use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cvlab_core::analysis::{
    paired_summary, prop1_check, prop2_check, rate_from_table, run_replications, z_scaling_from_table,
    ReplicationTable,
};
use cvlab_core::config::{ExperimentConfig, ReportKind};
use cvlab_core::{Dgp, Error};

use crate::manifest::RunManifest;
use crate::{presets, read_to_string, with_workers, CliError, CliResult, RunArgs};

/// Resolve the config named by `args` and apply the command-line overrides.
pub fn resolve_config(args: &RunArgs) -> CliResult<ExperimentConfig> {
    let (text, origin) = match (&args.config, &args.preset) {
        (Some(path), _) => (read_to_string(path, "config")?, path.display().to_string()),
        (None, Some(name)) => (presets::get(name)?.to_string(), format!("preset {name}")),
        (None, None) => return Err(CliError::usage("one of --config or --preset is required")),
    };
    let mut cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| CliError::usage(format!("{origin}: {e}")))?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.replications = reps;
    }
    if let Some(n) = &args.n {
        cfg.n_grid = n.clone();
    }
    cfg.validate()
        .map_err(|(key, msg)| CliError::usage(format!("override of {key}: {msg}")))?;
    Ok(cfg)
}

/// Execute `cvlab run`; returns the manifest that was written.
pub fn run(args: &RunArgs) -> CliResult<RunManifest> {
    let start = Instant::now();
    let cfg = resolve_config(args)?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::usage(format!("cannot create {}: {e}", args.out.display())))?;

    let resolved = cfg.to_toml();
    let mut manifest = RunManifest::new(&resolved, cfg.master_seed, cfg.replications, cfg.n_grid.clone());
    let dgp = cfg.dgp.build()?;
    eprintln!(
        "cvlab: {} replications x {} sizes x {} learners",
        cfg.replications,
        cfg.n_grid.len(),
        cfg.learners.len()
    );
    let table = with_workers(args.workers, || run_replications(&cfg))??;

    let mut out = Artifacts {
        dir: args.out.clone(),
        written: Vec::new(),
    };
    out.write_with("config.resolved.toml", |w| Ok(w.write_all(resolved.as_bytes())?))?;
    out.write_with("replications.csv", |w| table.write_csv(w))?;
    for kind in &cfg.reports {
        match kind {
            ReportKind::Prop1 => prop1_reports(&mut out, &table, &dgp)?,
            ReportKind::Prop2 => prop2_report(&mut out, &table, &cfg, &dgp)?,
            ReportKind::Scaling => scaling_reports(&mut out, &table, &cfg, &dgp)?,
            ReportKind::Rates => rate_reports(&mut out, &table)?,
            ReportKind::Figures => figure_reports(&mut out, &table, &cfg)?,
        }
    }

    manifest.artifacts = out.written.clone();
    manifest.finish(start.elapsed());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(args.out.join("manifest.json"), json + "\n")?;
    eprintln!("cvlab: wrote {} artifacts to {}", out.written.len() + 1, args.out.display());
    Ok(manifest)
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> cvlab_core::Result<()>,
    ) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(|e| io_context(&path, e))?);
        f(&mut w)?;
        w.flush().map_err(|e| io_context(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, name: &str, body: impl Display) -> CliResult<()> {
        self.write_with(name, |w| Ok(write!(w, "{body}")?))
    }

    /// A report that does not apply to this table still leaves a file saying why.
    fn skipped(&mut self, name: &str, e: &Error) -> CliResult<()> {
        eprintln!("cvlab: {name} skipped: {e}");
        self.text(name, format_args!("skipped = {e}\n"))
    }
}

fn io_context(path: &Path, e: std::io::Error) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}

/// Reports are skipped, not fatal, when the table cannot support them.
fn inapplicable(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_) | Error::InsufficientData { .. } | Error::LogDomain(_)
    )
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn prop1_reports(out: &mut Artifacts, table: &ReplicationTable, dgp: &Dgp) -> CliResult<()> {
    for learner in table.learners() {
        for n in table.ns() {
            let name = format!("prop1_{}_n{n}.txt", slug(&learner));
            match prop1_check(&table.subset(Some(&learner), Some(n)), dgp) {
                Ok(report) => out.text(&name, report)?,
                Err(e) if inapplicable(&e) => out.skipped(&name, &e)?,
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn prop2_report(
    out: &mut Artifacts,
    table: &ReplicationTable,
    cfg: &ExperimentConfig,
    dgp: &Dgp,
) -> CliResult<()> {
    let rates = cfg
        .learners
        .iter()
        .map(|s| s.build(dgp).map(|l| l.declared_rate()))
        .collect::<cvlab_core::Result<Vec<_>>>()?;
    let declared = match rates.as_slice() {
        [Some(a), Some(b)] => Some((*a, *b)),
        _ => None,
    };
    match prop2_check(table, declared) {
        Ok(report) => out.text("prop2.txt", report),
        Err(e) if inapplicable(&e) => out.skipped("prop2.txt", &e),
        Err(e) => Err(e.into()),
    }
}

fn scaling_reports(
    out: &mut Artifacts,
    table: &ReplicationTable,
    cfg: &ExperimentConfig,
    dgp: &Dgp,
) -> CliResult<()> {
    for spec in &cfg.learners {
        let learner = spec.build(dgp)?;
        let stem = format!("scaling_{}", slug(learner.name()));
        let Some(rate) = learner.declared_rate() else {
            let e = Error::InvalidInput(format!("learner `{}` has no declared rate", learner.name()));
            out.skipped(&format!("{stem}.txt"), &e)?;
            continue;
        };
        match z_scaling_from_table(table, learner.name(), rate.gamma) {
            Ok(report) => {
                out.text(&format!("{stem}.txt"), &report)?;
                out.write_with(&format!("{stem}.csv"), |w| report.write_csv(w))?;
            }
            Err(e) if inapplicable(&e) => out.skipped(&format!("{stem}.txt"), &e)?,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn rate_reports(out: &mut Artifacts, table: &ReplicationTable) -> CliResult<()> {
    for learner in table.learners() {
        let stem = format!("rates_{}", slug(&learner));
        if table.rows.iter().any(|r| r.oracle_excess_risk.is_nan()) {
            let e = Error::InvalidInput("oracle excess risk was not computed (mc_draws_oracle = 0)".into());
            out.skipped(&format!("{stem}.txt"), &e)?;
            continue;
        }
        match rate_from_table(table, &learner) {
            Ok(report) => {
                out.text(&format!("{stem}.txt"), &report)?;
                out.write_with(&format!("{stem}.csv"), |w| report.write_csv(w))?;
            }
            Err(e) if inapplicable(&e) => out.skipped(&format!("{stem}.txt"), &e)?,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn figure_reports(out: &mut Artifacts, table: &ReplicationTable, cfg: &ExperimentConfig) -> CliResult<()> {
    for n in table.ns() {
        let summary = format!("figures_n{n}.txt");
        match paired_summary(table, n, cfg.histogram_bins) {
            Ok(fig) => {
                out.text(&summary, &fig)?;
                out.write_with(&format!("fig1_marginals_n{n}.csv"), |w| fig.write_marginals_csv(w))?;
                out.write_with(&format!("fig1_hist_n{n}.csv"), |w| fig.write_marginal_hist_csv(w))?;
                out.write_with(&format!("fig2_diff_hist_n{n}.csv"), |w| fig.write_diff_hist_csv(w))?;
                out.write_with(&format!("fig2_scatter_n{n}.csv"), |w| fig.write_scatter_csv(w))?;
            }
            Err(e) if inapplicable(&e) => out.skipped(&summary, &e)?,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
