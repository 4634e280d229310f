//! The command-line workflow driven in-process: synth, backtest, infer, frontier.
//!
//! Run with `cargo run --release --example cli_pipeline -- /tmp/eapo-demo`.

use std::path::PathBuf;

fn main() {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("eapo-demo"));
    let (data, out) = (root.join("data"), root.join("out"));
    let (data, out) = (
        data.to_string_lossy().into_owned(),
        out.to_string_lossy().into_owned(),
    );
    let report = |s: &str| format!("{out}/report_{s}.json");
    let steps: Vec<Vec<String>> = vec![
        vec!["--seed", "7", "--out", &data, "synth"],
        vec!["--out", &out, "backtest", &data, "--strategy", "all"],
        vec!["--out", &out, "infer", &report("eapo"), &report("ew")],
        vec!["--out", &out, "frontier", &data],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in steps {
        println!("$ eapo {}", args.join(" "));
        let code = eapo::cli::run_cli(std::iter::once("eapo".to_string()).chain(args));
        if code != 0 {
            std::process::exit(code);
        }
    }
    println!("outputs in {out}");
}
