//! A campaign summarized per metric, including a custom event-pair metric,
//! with the histogram and CSV exports.
//!
//! ```text
//! cargo run --release --example metrics_report
//! ```

use dse::metrics::{write_histogram_csv, write_samples_csv};
use dse::simulator::{run_campaign_with, CampaignOptions};
use dse::{fixtures, MetricSpec};

fn main() {
    let m = fixtures::stream3();
    let mut opts = CampaignOptions::new(500, 11);
    opts.metrics =
        ["makespan", "job_latency:S", "utilization:PE0", "energy", "power", "event_pair:arrival:S->start:S:b"]
            .iter()
            .map(|s| s.parse::<MetricSpec>().unwrap())
            .collect();
    opts.bins = 10;
    let c = run_campaign_with(&m, &opts).unwrap();
    for (spec, report) in c.metrics.iter().zip(&c.reports) {
        match report.summary() {
            Some(s) => println!(
                "{:<34} n={:<5} mean {:>9.4} std {:>8.4} median {:>9.4} p95 {:>9.4} [{:.4}, {:.4}]",
                spec.to_string(),
                s.count,
                s.mean,
                s.std,
                s.median,
                s.p95,
                s.min,
                s.max
            ),
            None => println!("{:<34} no values", spec.to_string()),
        }
    }

    let mut hist = Vec::new();
    write_histogram_csv(&mut hist, c.report("makespan").unwrap()).unwrap();
    println!("\nmakespan histogram\n{}", String::from_utf8(hist).unwrap());

    let runs: Vec<(u32, Vec<Vec<f64>>)> = c.runs.iter().take(3).map(|r| (r.run, r.values.clone())).collect();
    let mut samples = Vec::new();
    write_samples_csv(&mut samples, &c.metrics, &runs).unwrap();
    println!("first runs\n{}", String::from_utf8(samples).unwrap());
}
