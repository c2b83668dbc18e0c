//! Monte Carlo pilot for statistical recovery on a 30-team balanced season.
//!
//! Usage: cargo run --release -p tbr-core --example recovery_pilot [replicates] [balls] [noise_sd]

use tbr_core::estimator::{aggregate_cells, fit_wls};
use tbr_core::standardize::center_effects;
use tbr_core::synthetic::{generate, SyntheticConfig};
use tbr_core::Effects;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let replicates: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let balls: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let noise: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.9);

    let mut max_errors = Vec::new();
    let mut rmses = Vec::new();
    let mut within_per_effect = 0usize;
    let mut total_effects = 0usize;
    for rep in 0..replicates {
        let cfg = SyntheticConfig::balanced(1_000 + rep, 30, balls, 0.05, noise);
        let data = generate(&cfg).expect("connected schedule");
        let cells = aggregate_cells(&data.residuals);
        let est = fit_wls(&cells, &cfg.universe(), cfg.references()).expect("identified");
        let centered = center_effects(&Effects::from(&est)).effects;
        let errors: Vec<f64> = centered
            .park
            .iter()
            .map(|(k, v)| v - data.truth.park[k])
            .chain(centered.def.iter().map(|(k, v)| v - data.truth.def[k]))
            .collect();
        let max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
        within_per_effect += errors.iter().filter(|e| e.abs() <= 0.005).count();
        total_effects += errors.len();
        max_errors.push(max);
        rmses.push(rmse);
    }
    max_errors.sort_by(f64::total_cmp);
    let q = |p: f64| max_errors[((p * (max_errors.len() - 1) as f64).round()) as usize];
    let all_within = max_errors.iter().filter(|&&m| m <= 0.005).count();
    println!("replicates={replicates} balls={balls} noise_sd={noise}");
    println!("mean RMSE of centered effects      = {:.5}", rmses.iter().sum::<f64>() / rmses.len() as f64);
    println!("max |error| per replicate: median  = {:.5}, 95th pct = {:.5}", q(0.5), q(0.95));
    println!("replicates with every effect within 0.005 = {all_within}/{replicates}");
    println!("individual effects within 0.005   = {within_per_effect}/{total_effects}");
}
