//! Generates an instance, writes it, reads it back, clears it and writes the
//! solution files into a directory (default `example_out`).

use std::path::PathBuf;

use pcr_clearing::core_model::{MarketRules, ObjectiveKind};
use pcr_clearing::engine::{clear, ClearingRequest};
use pcr_clearing::instance_io::{generate, parse, prices_path, write_instance, write_solution, GeneratorConfig};
use pcr_clearing::verifier::{verify_equilibrium, Tolerances};

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    let instance_path = dir.join("instance.toml");
    write_instance(&generate(&GeneratorConfig::small_random(11)), &instance_path).expect("write instance");

    let market = parse(&instance_path).expect("read instance back");
    let sol = clear(&market, &ClearingRequest::new(ObjectiveKind::Welfare, MarketRules::Pcr))
        .expect("market clears");
    let report = verify_equilibrium(&market, &sol, &Tolerances::default());
    let solution_path = dir.join("solution.toml");
    write_solution(&market, &sol, Some(&report), &solution_path).expect("write solution");

    println!("wrote {}", instance_path.display());
    println!("wrote {}", solution_path.display());
    println!("wrote {}", prices_path(&solution_path).display());
    println!("welfare {:.3}, verification passed: {}", sol.welfare, report.passed);
}
