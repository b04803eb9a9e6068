//! Simulates the online count of a small-world network and compares its
//! pooled histogram with the stationary binomial law.
//!
//! cargo run --release --example size_distribution -- 1000 0.01 0.005

use noh::experiment::{pooled_size_histogram, ExperimentConfig};
use noh::generators::GeneratorSpec;
use noh::stats::kl_divergence;
use noh::theory::{expected_size, stationary_pmf, variance_size, TheoryParams};
use noh::NohParams;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let n: usize = arg(0, "1000").parse().expect("vertex count");
    let lambda: f64 = arg(1, "0.01").parse().expect("lambda");
    let mu: f64 = arg(2, "0.005").parse().expect("mu");

    let config = ExperimentConfig { generator: GeneratorSpec::small_world(n, 10, 0.3, 1), ..ExperimentConfig::default() };
    let graph = config.generator.build().expect("valid generator");
    let params = NohParams::new(lambda, mu).expect("positive rates");
    let hist = pooled_size_histogram(&graph, params, &config).expect("valid config");

    let theory = TheoryParams::new(n as u64, lambda, mu).expect("positive rates");
    let pmf = stationary_pmf(&theory);
    println!("E[N] = {:.2}, D[N] = {:.2}", expected_size(&theory), variance_size(&theory));
    println!("simulated mean = {:.2}, mode = {}", hist.mean().unwrap(), hist.mode().unwrap());
    println!("KL(theory || simulated) = {:.4}", kl_divergence(pmf.probs(), &hist).unwrap());
}
