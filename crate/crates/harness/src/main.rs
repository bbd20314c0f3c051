use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use ristap_harness::config::{parse_config, Profile};
use ristap_harness::experiment::{run_experiment, RunOptions, RunRecord};
use ristap_harness::output::{write_outputs, Metadata};
use ristap_harness::oracle;

#[derive(Parser)]
#[command(name = "ristap", version, about = "Multi-RIS ISAC joint design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Seed list overriding the config, e.g. `0..10` or `1,4,7`.
        #[arg(long)]
        seeds: Option<String>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Scenario used when the config has no `[scenario]` table.
        #[arg(long, value_enum, default_value_t = Profile::Desk)]
        profile: Profile,
    },
    /// Parse and validate a config file.
    Validate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Profile::Desk)]
        profile: Profile,
    },
    /// Print the table of a named reference computation.
    Oracle {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(oracle::NAMES))]
        name: String,
    },
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {s}");
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| Ok(t.trim().parse()?)).collect()
}

fn report(rows: &[RunRecord]) {
    for r in rows {
        println!(
            "point {:>10.4} {:<11} seed {:>3} {:<10} SCNR {:>8.3} dB  BER {:.4}  iters {:>2}",
            r.point,
            r.scheme.name(),
            r.seed,
            r.status.name(),
            r.scnr_db(),
            r.ber,
            r.outer_iterations
        );
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seeds, jobs, out_dir, profile } => {
            let mut cfg = parse_config(&config, profile)?;
            if let Some(s) = seeds {
                cfg.experiment.seeds = parse_seeds(&s)?;
            }
            cfg.validate(profile)?;
            let scenario = cfg.resolved_scenario(profile);
            let spec = &cfg.experiment;
            let rows = run_experiment(&scenario, spec, &RunOptions { jobs, ..RunOptions::default() })?;
            report(&rows);
            let dir = out_dir.or_else(|| spec.out_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let meta = Metadata {
                experiment: spec.name.clone(),
                kind: spec.kind,
                profile: if cfg.scenario.is_some() { "config".into() } else { profile.name().into() },
                seeds: spec.seeds.clone(),
            };
            let written = write_outputs(&dir, spec, &meta, &rows)?;
            for f in written.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Validate { config, profile } => {
            let cfg = parse_config(&config, profile)?;
            let scenario = cfg.resolved_scenario(profile);
            println!(
                "ok: {} ({}), {} grid points, {} seeds, N={} K={} M={} L={} Nr={} R={}",
                cfg.experiment.name,
                cfg.experiment.kind.name(),
                cfg.experiment.grid.len(),
                cfg.experiment.seeds.len(),
                scenario.n_tx_antennas,
                scenario.n_users,
                scenario.n_pulses,
                scenario.n_slots,
                scenario.n_ris_elements,
                scenario.n_ris
            );
        }
        Command::Oracle { name } => print!("{}", oracle::run(&name)?),
    }
    Ok(())
}
