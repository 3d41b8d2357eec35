// DNOR over a synthetic drive: which invocations actually switched, and
// why the others held the old configuration.

use teg_reconfig::sim::{self, SchemeSpec, SimSetup};
use teg_reconfig::thermal::{self, SynthSpec};

pub fn run() -> teg_reconfig::Result<()> {
    let spec = SynthSpec {
        duration_s: 240,
        drift_c_per_s: -0.05,
        seed: 11,
        ..SynthSpec::default()
    };
    let trace = thermal::synth_trace(&spec)?;
    let setup = SimSetup::with_defaults(100, spec.inlet_c, spec.ambient_c)?;
    let report = sim::run(&trace, &setup, &SchemeSpec::Dnor { horizon: 2 })?;
    println!(
        "groups {}..={}, {} invocations, {} switches",
        setup.reconfig.n_min, setup.reconfig.n_max, report.invocations, report.switch_count
    );
    for d in report.decisions.iter().filter(|d| d.switched) {
        println!(
            "t={:>5.0}  e_old {:>8.2} J  e_new {:>8.2} J  overhead {:.4} J  -> {}",
            d.time, d.e_old, d.e_new, d.e_overhead, d.candidate
        );
    }
    let held = report.decisions.iter().filter(|d| !d.switched).count();
    println!("{held} invocations kept the held configuration");
    println!(
        "energy {:.1} J gross, {:.3} J overhead, {:.1} % of ideal",
        report.gross_energy,
        report.switch_overhead,
        100.0 * report.energy_output() / report.ideal_energy()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
