use ruptura_core::did::did_pipeline;
use ruptura_core::panel::{load_region_meta, RegionId};

use super::{load_events, load_panel, parse_epoch, window_config, write_json};
use crate::args::DidArgs;
use crate::manifest::{manifest_beside, RunManifest};
use crate::CliError;

pub fn run(args: DidArgs) -> Result<(), CliError> {
    if args.k == 0 {
        return Err(CliError::usage("--k must be >= 1"));
    }
    let epoch = parse_epoch(&args.epoch_date)?;
    let config = window_config(&args.window)?;
    let panel = load_panel(&args.panel, &args.score_name, epoch)?;
    let events = load_events(&args.events, epoch)?;
    let metas = load_region_meta(&args.meta)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.meta.display())))?;

    let result = did_pipeline(
        &panel,
        &events,
        &metas,
        &RegionId::from(args.target.as_str()),
        &args.event_type,
        args.k,
        &config,
    )
    .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&result, &args.out)?;

    let mut manifest = RunManifest::new(
        "did",
        serde_json::json!({
            "score_name": args.score_name,
            "target": args.target,
            "event_type": args.event_type,
            "k": args.k,
            "window": config,
            "epoch_date": args.epoch_date,
        }),
    );
    manifest.add_input(&args.panel)?;
    manifest.add_input(&args.events)?;
    manifest.add_input(&args.meta)?;
    manifest.add_output(&args.out);
    manifest.write(&manifest_beside(&args.out))?;
    Ok(())
}
