//! Runs a registry sweep and writes the dataset as CSV and JSON together
//! with a gnuplot script. Worker count follows `LINDBLADLAB_THREADS`.
//!
//! ```text
//! cargo run --release --example sweep_to_csv -- [out_dir]
//! ```

use std::fs;
use std::path::PathBuf;

use lindbladlab::cli::{dataset_from_json, dataset_to_json, emit_dataset, gnuplot_script, Format};
use lindbladlab::experiments::{lookup, run_sweep, sweep_threads, Observable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweep_out".into()));
    fs::create_dir_all(&dir)?;

    let entry = lookup("fig5")?;
    println!("{}: {}", entry.id, entry.citation);
    let mut sweep = entry.sweep(None).unwrap();
    sweep.base.observables = vec![Observable::Fidelity, Observable::PopPsiPlus];
    sweep.base.time.samples = 81;
    println!("running {} grid points on {} threads", sweep.points().len(), sweep_threads());
    let ds = run_sweep(&sweep)?;

    let csv = dir.join("fig5.csv");
    emit_dataset(&ds, Format::Csv, Some(&csv))?;
    emit_dataset(&ds, Format::Json, Some(&dir.join("fig5.json")))?;
    fs::write(dir.join("fig5.gp"), gnuplot_script(&ds, &csv))?;

    let back = dataset_from_json(&dataset_to_json(&ds))?;
    assert_eq!(back, ds);
    println!("{} rows written to {}", ds.records.len(), dir.display());
    Ok(())
}
