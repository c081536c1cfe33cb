//! Parses a config file, prints the resolved configuration and runs it.

use std::path::PathBuf;

use odelora::cli::{cmd_run, load_config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "\
[problem]
kind = sensing
m = 24
n = 24
o = 24
r = 3
delta = 0.1   # restricted isometry constant

[solver]
scheme = ode_rk2
h = 0.2
iterations = 120
";
    let dir = std::env::temp_dir().join("odelora_config_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("run.cfg");
    std::fs::write(&path, text)?;
    let cfg = load_config(Some(&path), Some(4))?;
    print!("{cfg}");
    let out: PathBuf = dir.join("out");
    let outcome = cmd_run(&cfg, &out)?;
    println!("final loss {:.3e}, written to {}", outcome.log.final_loss(), out.display());
    Ok(())
}
