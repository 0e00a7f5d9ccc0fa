//! Library form of `cvarloc run` / `reevaluate` / `compare` / `plot-data`:
//! writes run directories under the system temp directory.

use std::path::PathBuf;
use std::time::Duration;

use cvarloc::frontier::ModelFamily;
use cvarloc::runner::{
    compare_files, emit_plot_data, reevaluate, run_experiment, InstanceSource, Method, Reference, RiskLevel, RunConfig,
};

fn main() -> cvarloc::Result<()> {
    let root = std::env::temp_dir().join("cvarloc-example");
    let instance = InstanceSource::Generated { nodes: 21, scenarios: 10 };
    let mut files: Vec<PathBuf> = Vec::new();
    for (method, model) in [
        (Method::Epsilon, ModelFamily::Classical),
        (Method::BalancedBox, ModelFamily::Subset),
        (Method::Epsilon, ModelFamily::SubsetFrozen),
    ] {
        let out = root.join(format!("{method}-{model}"));
        let config = RunConfig {
            instance: instance.clone(),
            method,
            model,
            risk: RiskLevel::Alpha(0.7),
            time_limit_total: Some(Duration::from_secs(600)),
            time_limit_per_point: None,
            kappa: 2,
            seed: 1,
            out: out.clone(),
        };
        let rec = run_experiment(&config)?;
        println!("{:?}", rec);
        files.push(out.join("frontier.json"));
    }
    let re = root.join("e-mb-bar-re").join("frontier.json");
    reevaluate(&files[2], &instance, 1, RiskLevel::Alpha(0.7), &re)?;
    files.push(re);

    let reference = Reference::File(files[0].clone());
    compare_files(&files, &reference, &mut std::io::stdout())?;
    emit_plot_data(&files, &mut std::io::stdout())?;
    Ok(())
}
