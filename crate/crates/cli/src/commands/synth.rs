use gpcal_core::data::{self, SynthConfig};
use gpcal_core::Result;

use crate::{create_out_dir, read_synth_config, SynthArgs};

pub fn run(args: &SynthArgs) -> Result<()> {
    let mut cfg = match &args.synth_config {
        Some(p) => read_synth_config(p)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dataset = data::synthesize(&cfg)?;
    create_out_dir(&args.out)?;
    let path = args.out.join("dataset.csv");
    data::save_csv(&dataset, &path)?;

    let speeds = dataset.wind_speeds();
    let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("wrote {}", path.display());
    println!(
        "runs:   {} ({})",
        dataset.run_ids().len(),
        dataset.run_ids().join(", ")
    );
    println!("points: {}", dataset.len());
    println!("speed:  {lo:.3} .. {hi:.3} m/s");
    Ok(())
}
