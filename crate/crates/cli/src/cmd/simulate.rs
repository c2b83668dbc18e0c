use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tbr_core::baseline::{build_baseline, residuals};
use tbr_core::estimator::fit_season;
use tbr_core::ingest::{parse_events, write_events};
use tbr_core::standardize::center_effects;
use tbr_core::synthetic::{generate, synthetic_roster, Mode, SyntheticConfig, SyntheticData};
use tbr_core::{EffectEstimates, Effects, EmptyCellPolicy, GridSpec, IngestOptions, Residual};

use crate::args::require_paths;
use crate::error::CliError;
use crate::output::{Kind, Meta, Outputs};

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Generator config (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long, env = "TBR_OUT_DIR", default_value = "tbr-out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Run the pipeline on the generated data and report recovery error
    #[arg(long)]
    pub check: bool,
}

/// Recovery error of the centered effects for one season.
#[derive(Debug, Clone, Serialize)]
pub struct SeasonCheck {
    pub season: i32,
    pub park_max_abs_error: f64,
    pub park_rmse: f64,
    pub defense_max_abs_error: f64,
    pub defense_rmse: f64,
    /// Only meaningful when residuals come straight from the generator.
    pub intercept_error: Option<f64>,
    pub weighted_rss: f64,
}

fn summarize(errors: &[f64]) -> (f64, f64) {
    let max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len().max(1) as f64).sqrt();
    (max, rmse)
}

fn check(cfg: &SyntheticConfig, data: &SyntheticData, events_csv: &[u8]) -> Result<Vec<SeasonCheck>, CliError> {
    let res: Vec<Residual> = match cfg.mode {
        Mode::Residual => data.residuals.clone(),
        Mode::EndToEnd => {
            let roster = synthetic_roster(cfg.n_teams);
            let (balls, _) = parse_events(events_csv, &roster, &IngestOptions::default())?;
            let grid = build_baseline(&balls, GridSpec::default())?;
            residuals(&balls, &grid, EmptyCellPolicy::Drop)?.0
        }
    };
    let universe = cfg.universe();
    let mut out = Vec::new();
    for spec in &cfg.seasons {
        let est: EffectEstimates = fit_season(&res, spec.season, &universe, cfg.references())?;
        let c = center_effects(&Effects::from(&est)).effects;
        let t = &data.truth;
        let park: Vec<f64> = c.park.iter().map(|(k, v)| v - t.park[k]).collect();
        let def: Vec<f64> = c.def.iter().map(|(k, v)| v - t.def[k]).collect();
        let (park_max_abs_error, park_rmse) = summarize(&park);
        let (defense_max_abs_error, defense_rmse) = summarize(&def);
        out.push(SeasonCheck {
            season: spec.season,
            park_max_abs_error,
            park_rmse,
            defense_max_abs_error,
            defense_rmse,
            intercept_error: (cfg.mode == Mode::Residual).then(|| c.intercept - t.intercept_for(spec.season)),
            weighted_rss: est.weighted_rss,
        });
    }
    Ok(out)
}

pub fn run(args: &SimulateArgs) -> Result<Outputs, CliError> {
    require_paths([args.config.as_path()])?;
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let cfg: SyntheticConfig = toml::from_str(&text).map_err(|e| CliError::usage("config", e).in_file(&args.config))?;
    let data = generate(&cfg)?;

    let meta = Meta::new("simulate", &serde_json::json!({ "args": args, "synthetic": cfg }));
    let mut out = Outputs::create(&args.out, meta)?;
    let mut events = Vec::new();
    write_events(&mut events, data.event_rows())?;
    out.write("events.csv", Kind::Csv, |w| {
        w.extend_from_slice(&events);
        Ok(())
    })?;
    out.write_json("truth.json", &data.truth)?;
    let roster = synthetic_roster(cfg.n_teams);
    out.write("roster.toml", Kind::Toml, |w| {
        w.extend_from_slice(roster.to_toml_string().as_bytes());
        Ok(())
    })?;
    eprintln!("simulate: {} balls over {} season(s), {} teams", data.residuals.len(), cfg.seasons.len(), cfg.n_teams);
    if cfg.mode == Mode::Residual {
        eprintln!("note: residual mode writes every ball as an out; only --check sees the generated residuals");
    }

    if args.check {
        let checks = check(&cfg, &data, &events)?;
        for c in &checks {
            let intercept = c.intercept_error.map(|e| format!(", intercept error {e:+.5}")).unwrap_or_default();
            println!(
                "season {}: park max |err| {:.5} rmse {:.5}; defense max |err| {:.5} rmse {:.5}{intercept}",
                c.season, c.park_max_abs_error, c.park_rmse, c.defense_max_abs_error, c.defense_rmse
            );
        }
        out.write_json("check.json", &checks)?;
    }
    Ok(out)
}
