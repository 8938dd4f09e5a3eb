//! A small benchmark sweep over blur × SNR × model, printed as CSV.
//!
//! `cargo run --release --example benchmark_table -- [size]`

use kldtgv::cli::{cmd_benchmark, BenchmarkRow, RunManifest};
use kldtgv::Result;

fn main() -> Result<()> {
    let size = std::env::args().nth(1).unwrap_or_else(|| "64".into());
    let mut m = RunManifest::default();
    for (key, value) in [
        ("size", size.as_str()),
        ("stripes", "10"),
        ("seed", "7"),
        ("blurs", "disk:5, gaussian:2"),
        ("snrs", "43, 37"),
        ("models", "dtgv, tgv"),
        ("lambda_grid", "100, 1000, 10000"),
    ] {
        m.set(key, value)?;
    }
    println!("{}", BenchmarkRow::CSV_HEADER);
    for row in cmd_benchmark(&m)? {
        println!("{}", row.to_csv_row());
    }
    Ok(())
}
