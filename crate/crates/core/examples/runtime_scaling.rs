// INOR wall time against array size, with a linear fit.

use teg_reconfig::charger::ChargerParams;
use teg_reconfig::reconfig::{Objective, Plant, ReconfigParams};
use teg_reconfig::sim::{self, Algorithm};
use teg_reconfig::teg::TegParams;

pub fn run() -> teg_reconfig::Result<()> {
    let teg_p = TegParams::default();
    let charger = ChargerParams::default();
    let plant = Plant::new(&teg_p, &charger, Objective::BatterySide);
    let params = ReconfigParams::new(5, 30)?;
    let report =
        sim::measure_runtime(Algorithm::Inor, &[100, 1000, 10000], 21, &plant, &params, 7)?;
    print!("{}", report.table());
    let small = sim::measure_runtime(Algorithm::BruteForce, &[10, 12, 14], 3, &plant, &params, 7)?;
    println!("exhaustive search for comparison:");
    print!("{}", small.table());
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
