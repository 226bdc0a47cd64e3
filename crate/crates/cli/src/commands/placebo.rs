use ruptura_core::placebo::placebo_run;

use super::{load_panel, parse_epoch, window_config, write_json};
use crate::args::PlaceboArgs;
use crate::manifest::{manifest_beside, RunManifest};
use crate::{resolve_seed, CliError};

pub fn run(args: PlaceboArgs) -> Result<(), CliError> {
    let epoch = parse_epoch(&args.epoch_date)?;
    let config = window_config(&args.window)?;
    let seed = resolve_seed(args.seed);
    let panel = load_panel(&args.panel, &args.score_name, epoch)?;

    let summary = placebo_run(&panel, args.episodes, &config, seed)
        .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&summary, &args.out)?;

    let mut manifest = RunManifest::new(
        "placebo",
        serde_json::json!({
            "score_name": args.score_name,
            "episodes": args.episodes,
            "window": config,
            "epoch_date": args.epoch_date,
        }),
    )
    .with_seed(seed);
    manifest.add_input(&args.panel)?;
    manifest.add_output(&args.out);
    manifest.write(&manifest_beside(&args.out))?;
    Ok(())
}
