// DNOR, periodic INOR and the fixed 10x10 array on one trace.

use teg_reconfig::sim::{self, PeriodicCharge, SchemeSpec, SimSetup};
use teg_reconfig::thermal::{self, SynthKind, SynthSpec};

pub fn run() -> teg_reconfig::Result<()> {
    let spec = SynthSpec {
        kind: SynthKind::Sinusoid,
        duration_s: 600,
        amplitude_c: 8.0,
        period_s: 200.0,
        ..SynthSpec::default()
    };
    let trace = thermal::synth_trace(&spec)?;
    let setup = SimSetup::with_defaults(100, spec.inlet_c, spec.ambient_c)?;
    let schemes = [
        SchemeSpec::Dnor { horizon: 2 },
        SchemeSpec::InorPeriodic {
            period_s: 1.0,
            charge: PeriodicCharge::EveryPeriod,
        },
        SchemeSpec::baseline(100)?,
    ];
    let reports = sim::compare(&trace, &setup, &schemes)?;
    print!("{}", sim::comparison_table(&reports));
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
