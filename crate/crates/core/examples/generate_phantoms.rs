//! Writes the bundled phantoms and experiment configs into a directory.
//!
//! ```text
//! cargo run -p palpation --example generate_phantoms -- data
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use palpation::simulator::phantoms;
use palpation::simulator::PhantomSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir)?;

    phantoms::organ_surface().save(dir.join("organ.obj"))?;
    write_phantom(&dir, "multimodal_phantom.json", &phantoms::example_one())?;
    write_phantom(&dir, "artery_phantom.json", &phantoms::artery_phantom())?;

    let roi = r#"{"xmin": 0.0, "xmax": 40.0, "ymin": 0.0, "ymax": 40.0, "spacing": 2.0}"#;
    let configs = [
        (
            "example1.json",
            "multimodal_phantom.json",
            "",
            r#""noise": {"position_sigma": 0.0, "force_sigma": 0.0},"#,
            "1e-8",
            "out/example1",
        ),
        (
            "example2.json",
            "multimodal_phantom.json",
            r#""bump_perturbation_mm": 2.0,"#,
            r#""noise": {"position_sigma": 0.3, "force_sigma": 0.1},"#,
            "1e-2",
            "out/example2",
        ),
        (
            "artery.json",
            "artery_phantom.json",
            "",
            r#""noise": {"position_sigma": 0.0, "force_sigma": 0.0},"#,
            "1e-8",
            "out/artery",
        ),
    ];
    for (name, phantom, extra, noise, jitter, out) in configs {
        let text = format!(
            r#"{{
  "phantom": "{phantom}",
  {extra}
  "roi": {roi},
  "probe": {{"probe_radius": 9.0, "contact_force": 0.5, "depth_increment": 0.3, "max_depth": 3.0}},
  {noise}
  "kernel": {{"sigma_f": 1.0, "length_scale": 3.0, "jitter": {jitter}}},
  "policy": {{"exploration_period": 5, "uncertainty_fraction": 0.9}},
  "cmu": {{"max_iterations": 200}},
  "budget": 100,
  "strategy": "ei",
  "output_dir": "{out}",
  "seed": 1
}}
"#
        );
        // normalise away the blank line left by an empty `extra`
        let value: serde_json::Value = serde_json::from_str(&text)?;
        fs::write(dir.join(name), serde_json::to_string_pretty(&value)? + "\n")?;
    }
    println!("wrote phantoms and configs to {}", dir.display());
    Ok(())
}

fn write_phantom(
    dir: &Path,
    name: &str,
    spec: &PhantomSpec,
) -> Result<(), Box<dyn std::error::Error>> {
    let doc = spec.to_document("organ.obj");
    fs::write(dir.join(name), serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
