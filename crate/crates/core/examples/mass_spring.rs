//! Three-method comparison on the ten-mass chain with at least two
//! actuators and two sensors.

use saasel_core::bench::{mass_spring, run_experiment, MassSpringSpec, Method, MethodConfig};
use saasel_core::model::LogisticConstraint;

fn main() {
    env_logger::init();
    let n = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let net = mass_spring(&MassSpringSpec::uniform(n)).expect("valid chain");
    let lc = LogisticConstraint::at_least(n, 2, 2);
    let report = run_experiment(&net, &lc, &Method::ALL, &MethodConfig::default());
    print!("{}", report.table_csv());
    for r in &report.rows {
        if let Some(m) = &r.message {
            eprintln!("{}: {m}", r.method);
        }
    }
}
