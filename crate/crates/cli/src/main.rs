use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use palpation::experiment::{
    compare_strategies, ground_truth_map, run_experiment, write_ground_truth, write_outputs,
    ExperimentConfig, ExperimentReport,
};
use palpation::simulator::PhantomSpec;
use palpation::{Error, TriMesh};

/// Simulated stiffness palpation with simultaneous registration.
#[derive(Parser)]
#[command(name = "palpate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write its outputs.
    Run { config: PathBuf },
    /// Run the configured experiment with both EI and uniform sampling.
    Compare { config: PathBuf },
    /// Write the ground-truth stiffness map of a phantom.
    GroundTruth {
        phantom: PathBuf,
        /// Grid spacing in mm.
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        /// Output directory.
        #[arg(long, default_value = "ground_truth")]
        out: PathBuf,
    },
    /// Load a mesh and print basic statistics.
    MeshCheck { mesh: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_experiment(&config)?;
            write_outputs(&outcome, &config.output_dir)?;
            print_report(&outcome.report);
            println!("outputs: {}", config.output_dir.display());
        }
        Command::Compare { config } => {
            let config = ExperimentConfig::load(&config)?;
            let cmp = compare_strategies(&config)?;
            for outcome in [&cmp.ei, &cmp.uniform] {
                let dir = config.output_dir.join(outcome.report.strategy.name());
                write_outputs(outcome, &dir)?;
                print_report(&outcome.report);
                println!();
            }
            let path = config.output_dir.join("comparison.json");
            let text = serde_json::to_string_pretty(&cmp.summary).expect("summary serializes");
            std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
            let s = &cmp.summary;
            println!(
                "top-decile RMSE: ei {:.4}  uniform {:.4}  ({} wins)",
                s.ei_top_decile_rmse,
                s.uniform_top_decile_rmse,
                if s.ei_wins { "ei" } else { "uniform" }
            );
            println!("outputs: {}", config.output_dir.display());
        }
        Command::GroundTruth {
            phantom,
            spacing,
            out,
        } => {
            if spacing.is_nan() || spacing <= 0.0 {
                return Err(Error::Config("--spacing must be positive".into()));
            }
            let phantom = PhantomSpec::load(&phantom)?;
            let map = ground_truth_map(&phantom, spacing)?;
            write_ground_truth(&map, &out)?;
            println!("{}×{} grid written to {}", map.nx, map.ny, out.display());
        }
        Command::MeshCheck { mesh } => {
            let mesh = TriMesh::load(&mesh)?;
            println!("vertices: {}", mesh.vertices().len());
            println!("faces:    {}", mesh.face_count());
            println!("area:     {:.3} mm²", mesh.surface_area());
            if let Some((lo, hi)) = mesh.bounding_box() {
                println!(
                    "bounds:   [{:.3}, {:.3}, {:.3}] .. [{:.3}, {:.3}, {:.3}]",
                    lo.x, lo.y, lo.z, hi.x, hi.y, hi.z
                );
            }
        }
    }
    Ok(())
}

fn print_report(r: &ExperimentReport) {
    let t = r.estimated_transform.as_array();
    println!("strategy:          {}", r.strategy.name());
    println!(
        "probes:            {} ({} stiffness sets)",
        r.probe_count, r.stiffness_sets
    );
    println!(
        "estimate:          t = ({:.3}, {:.3}, {:.3}) mm, r = ({:.3}, {:.3}, {:.3}) deg",
        t[0], t[1], t[2], t[3], t[4], t[5]
    );
    let [ex, ey, ez] = r.translation_error_mm;
    let [ax, ay, az] = r.rotation_error_deg;
    println!("translation error: ({ex:.3}, {ey:.3}, {ez:.3}) mm");
    println!("rotation error:    ({ax:.3}, {ay:.3}, {az:.3}) deg");
    println!("registration RMS:  {:.4} mm", r.rms_mm);
    println!("objective:         {:.6}", r.objective);
    println!(
        "map RMSE:          {:.4} N/mm (correlation {:.3}, top decile {:.4})",
        r.map_rmse, r.map_correlation, r.top_decile_rmse
    );
    println!("wall clock:        {:.2} s", r.wall_clock_seconds);
}
