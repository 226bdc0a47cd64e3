use ruptura_core::rdd::{batch_estimate, buffer_ablation, write_outcomes_csv, WindowConfig};

use super::{ensure_dir, load_events, load_panel, parse_epoch, window_config, write_json};
use crate::args::EstimateArgs;
use crate::manifest::{manifest_in_dir, RunManifest};
use crate::CliError;

fn parse_buffers(spec: &str, config: &WindowConfig) -> Result<Vec<usize>, CliError> {
    let buffers: Vec<usize> = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::usage(format!("--ablate-buffers `{spec}` is not integers")))?;
    for &b in &buffers {
        if b >= config.half_width {
            return Err(CliError::usage(format!(
                "ablation buffer {b} must be below the half-width {}",
                config.half_width
            )));
        }
    }
    Ok(buffers)
}

pub fn run(args: EstimateArgs) -> Result<(), CliError> {
    let epoch = parse_epoch(&args.epoch_date)?;
    let config = window_config(&args.window)?;
    let panel = load_panel(&args.panel, &args.score_name, epoch)?;
    let events = load_events(&args.events, epoch)?;

    let (outcomes, stats) = batch_estimate(&panel, &events, &args.event_type, &config)
        .map_err(|e| CliError::domain(e.to_string()))?;

    ensure_dir(&args.out_dir)?;
    let outcomes_path = args.out_dir.join("outcomes.csv");
    let stats_path = args.out_dir.join("stats.json");
    write_outcomes_csv(&outcomes, &outcomes_path).map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&stats, &stats_path)?;

    let mut manifest = RunManifest::new(
        "estimate",
        serde_json::json!({
            "score_name": args.score_name,
            "event_type": args.event_type,
            "window": config,
            "epoch_date": args.epoch_date,
            "n_outcomes": outcomes.len(),
            "n_skipped": stats.skipped.len(),
        }),
    );
    manifest.add_input(&args.panel)?;
    manifest.add_input(&args.events)?;
    manifest.add_output(&outcomes_path);
    manifest.add_output(&stats_path);

    if let Some(spec) = &args.ablate_buffers {
        let buffers = parse_buffers(spec, &config)?;
        let results = buffer_ablation(&panel, &events, &args.event_type, &config, &buffers)
            .map_err(|e| CliError::domain(e.to_string()))?;
        for (buffer, (ablation_outcomes, ablation_stats)) in results {
            let outcomes_b = args.out_dir.join(format!("outcomes_b{buffer}.csv"));
            let stats_b = args.out_dir.join(format!("stats_b{buffer}.json"));
            write_outcomes_csv(&ablation_outcomes, &outcomes_b)
                .map_err(|e| CliError::domain(e.to_string()))?;
            write_json(&ablation_stats, &stats_b)?;
            manifest.add_output(&outcomes_b);
            manifest.add_output(&stats_b);
        }
    }

    manifest.write(&manifest_in_dir(&args.out_dir))?;
    Ok(())
}
