#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use risk_core::data::{save_csv, ReturnSeries};
use risk_core::garch::GarchParams;
use risk_core::montecarlo::simulate_garch;

pub fn riskctl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_riskctl"))
}

pub fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = riskctl();
    cmd.args(args).env_remove("RISK_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn riskctl")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn garch_returns(n: usize, seed: u64) -> Vec<f64> {
    let params = GarchParams::new(2e-6, 0.10, 0.85).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_garch(&params, n, &mut rng, |r| StandardNormal.sample(r))
}

pub fn write_returns(dir: &Path, name: &str, returns: &[f64]) -> PathBuf {
    let series = ReturnSeries::from_returns(returns.to_vec(), "return").unwrap();
    let path = dir.join(name);
    save_csv(&series, &path, "date").unwrap();
    path
}

/// Data rows of a CSV file, header dropped.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn csv_header(path: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_string).collect()
}
