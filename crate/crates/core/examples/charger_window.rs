// Charger efficiency over its input window, and the series group counts
// that keep a typical module voltage inside it.

use teg_reconfig::charger::{self, ChargerParams};
use teg_reconfig::teg::{self, TegParams};

pub fn run() -> teg_reconfig::Result<()> {
    let params = ChargerParams::default();
    for v in [4.0, 5.0, 8.0, 11.0, 13.8, 17.0, 24.0, 30.0, 32.0] {
        println!(
            "v_in {v:>5.1} V -> efficiency {:.3}",
            charger::efficiency(&params, v)
        );
    }
    let v_mpp = teg::module_mpp(&TegParams::default(), 50.0)?.voltage;
    let (lo, hi) = charger::derive_n_range(&params, v_mpp)?;
    println!("module MPP voltage {v_mpp:.3} V at dT 50 K -> {lo}..={hi} series groups");
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
