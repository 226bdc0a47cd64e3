use ruptura_core::panel;

use super::{load_panel, parse_epoch};
use crate::args::IngestArgs;
use crate::manifest::{manifest_beside, RunManifest};
use crate::CliError;

pub fn run(args: IngestArgs) -> Result<(), CliError> {
    let epoch = parse_epoch(&args.epoch_date)?;
    let mut loaded = load_panel(&args.panel, &args.score_name, epoch)?;

    // transform order mirrors the upstream assessment pipeline:
    // difference (seasonal control), reliability filter, z-score
    if let Some(lag) = args.difference_lag {
        loaded = loaded
            .difference(lag)
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    if let Some(min_users) = args.min_users {
        loaded = loaded.filter_reliability(min_users);
    }
    if args.zscore {
        loaded = loaded.zscore_per_region();
    }

    panel::write_panel(&loaded, &args.out).map_err(|e| CliError::domain(e.to_string()))?;

    let config = serde_json::json!({
        "score_name": args.score_name,
        "min_users": args.min_users,
        "difference_lag": args.difference_lag,
        "zscore": args.zscore,
        "epoch_date": args.epoch_date,
        "transform_log": loaded.transform_log,
        "n_regions": loaded.n_regions(),
        "n_observations": loaded.n_observations(),
    });
    let mut manifest = RunManifest::new("ingest", config);
    manifest.add_input(&args.panel)?;
    manifest.add_output(&args.out);
    manifest.write(&manifest_beside(&args.out))?;
    Ok(())
}
