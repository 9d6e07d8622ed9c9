//! Every method on one scene through the experiment harness, configured from
//! key=value text.
//!
//!     cargo run --release --example full_experiment -- /tmp/run 1000

use dipan::harness::{cmd_run, ExperimentConfig};

fn main() -> dipan::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "run_out".into());
    let iterations = args.next().unwrap_or_else(|| "1000".into());
    let cfg = ExperimentConfig::parse(&format!(
        "seed = 1\noutput = {out}\nscene.source = synthetic\nscene.height = 512\nscene.width = 512\ntrain.iterations = {iterations}\n"
    ))?;
    let summary = cmd_run(&cfg)?;
    println!("{}", dipan::harness::RESULTS_HEADER);
    for (m, r) in &summary.rows {
        println!("{}", r.csv_row_metrics(m.label()));
    }
    for (m, t, p) in &summary.timings {
        println!("{:<14} train {t:>7.1} s  predict {p:.3} s", m.label());
    }
    for (m, e) in &summary.errors {
        println!("{} failed: {e}", m.label());
    }
    Ok(())
}
