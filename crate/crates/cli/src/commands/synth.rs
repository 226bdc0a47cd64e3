use ruptura_core::panel;
use ruptura_core::synth::{generate, SynthConfig};

use super::{ensure_dir, write_json};
use crate::args::SynthArgs;
use crate::manifest::{manifest_in_dir, RunManifest};
use crate::CliError;

pub fn run(args: SynthArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.config.display())))?;
    let config: SynthConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("synth config: {e}")))?;

    let data = generate(&config).map_err(|e| CliError::usage(e.to_string()))?;
    ensure_dir(&args.out_dir)?;

    let files = [
        ("panel.csv", args.out_dir.join("panel.csv")),
        ("events.csv", args.out_dir.join("events.csv")),
        ("region_meta.csv", args.out_dir.join("region_meta.csv")),
        ("embeddings.csv", args.out_dir.join("embeddings.csv")),
        ("ground_truth.json", args.out_dir.join("ground_truth.json")),
    ];
    panel::write_panel(&data.panel, &files[0].1).map_err(|e| CliError::domain(e.to_string()))?;
    panel::write_events(&data.events, &files[1].1).map_err(|e| CliError::domain(e.to_string()))?;
    panel::write_region_meta(&data.meta, &files[2].1)
        .map_err(|e| CliError::domain(e.to_string()))?;
    panel::write_embeddings(&data.embeddings, &files[3].1)
        .map_err(|e| CliError::domain(e.to_string()))?;
    write_json(&data.truth, &files[4].1)?;

    let mut manifest = RunManifest::new(
        "synth",
        serde_json::to_value(&config).unwrap_or_default(),
    )
    .with_seed(config.seed);
    manifest.add_input(&args.config)?;
    for (_, path) in &files {
        manifest.add_output(path);
    }
    manifest.write(&manifest_in_dir(&args.out_dir))?;
    Ok(())
}
