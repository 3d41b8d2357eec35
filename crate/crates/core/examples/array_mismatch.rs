// Mismatch loss of a fixed 10x10 array: on a uniform field every module
// sits at its MPP, on the graded radiator field the groups drag each other.

use teg_reconfig::array::{self, Configuration};
use teg_reconfig::teg::{self, TegParams};
use teg_reconfig::thermal::{self, TemperatureField, ThermalParams, TraceSample};

fn report(name: &str, field: &TemperatureField, config: &Configuration, teg_p: &TegParams) {
    let emfs: Vec<f64> = field
        .delta_ts()
        .map(|dt| teg::emf(teg_p, dt).unwrap())
        .collect();
    let r = teg_p.internal_resistance;
    let point = array::configuration_mpp(config, &emfs, r).unwrap();
    let ideal: f64 = emfs.iter().map(|e| e * e / (4.0 * r)).sum();
    println!(
        "{name:>8}: array {:.3} W at {:.2} V, sum of module MPPs {:.3} W, loss {:.2} %",
        point.total_power,
        point.total_voltage,
        ideal,
        100.0 * (1.0 - point.total_power / ideal).max(0.0)
    );
}

pub fn run() -> teg_reconfig::Result<()> {
    let teg_p = TegParams::default();
    let config = Configuration::uniform(100, 10)?;
    let uniform = TemperatureField::uniform(0.0, 100, 85.0, 25.0)?;
    let sample = TraceSample {
        time: 0.0,
        coolant_inlet_temp: 95.0,
        ambient_temp: 25.0,
    };
    let graded = thermal::field_from_sample(&ThermalParams::default(), &sample, 100)?;
    report("uniform", &uniform, &config, &teg_p);
    report("graded", &graded, &config, &teg_p);
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
