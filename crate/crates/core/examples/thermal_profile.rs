// Hot-side temperature of each module along the radiator path.

use teg_reconfig::thermal::{self, ThermalParams, TraceSample};

pub fn run() -> teg_reconfig::Result<()> {
    let params = ThermalParams::default();
    let sample = TraceSample {
        time: 0.0,
        coolant_inlet_temp: 90.0,
        ambient_temp: 25.0,
    };
    let field = thermal::field_from_sample(&params, &sample, 10)?;
    println!(
        "inlet {:.1} C, air {:.1} C, k/cc {}",
        90.0, 25.0, params.k_over_cc
    );
    println!("{:>6} {:>8} {:>8}", "module", "T_hot", "dT");
    for (i, (t, dt)) in field
        .hot_side_temps
        .iter()
        .zip(field.delta_ts())
        .enumerate()
    {
        println!("{:>6} {:>8.3} {:>8.3}", i + 1, t, dt);
    }
    let outlet = thermal::temperature_at(&params, 90.0, 25.0, params.radiator_length)?;
    println!("outlet {outlet:.3} C");
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
