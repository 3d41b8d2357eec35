// I-V and P-V curves of a single module at two temperature differences.

use teg_reconfig::teg::{self, TegParams};

pub fn run() -> teg_reconfig::Result<()> {
    let params = TegParams::default();
    for dt in [30.0, 60.0] {
        let mpp = teg::module_mpp(&params, dt)?;
        println!(
            "dT = {dt} K: EMF {:.4} V, MPP {:.4} V x {:.4} A = {:.4} W",
            teg::emf(&params, dt)?,
            mpp.voltage,
            mpp.current,
            mpp.power
        );
        for p in teg::iv_curve(&params, dt, 11)? {
            let bar = "#".repeat((p.power / mpp.power * 30.0).round() as usize);
            println!(
                "  {:>6.3} V {:>6.3} A {:>6.3} W {bar}",
                p.voltage, p.current, p.power
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
