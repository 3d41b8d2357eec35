// Greedy INOR against exhaustive search on small random arrays.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use teg_reconfig::charger::ChargerParams;
use teg_reconfig::reconfig::{self, Objective, Plant, ReconfigParams};
use teg_reconfig::sim;
use teg_reconfig::teg::TegParams;

pub fn run() -> teg_reconfig::Result<()> {
    let teg_p = TegParams::default();
    let charger = ChargerParams::default();
    let plant = Plant::new(&teg_p, &charger, Objective::ArraySide);
    let params = ReconfigParams::new(2, 4)?.with_objective(Objective::ArraySide);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for k in 0..200 {
        let field = sim::random_field(&mut rng, 12);
        let emfs = plant.emfs(&field);
        let fast = reconfig::inor(&field, &plant, &params)?;
        let best = reconfig::brute_force_best(&field, &plant, &params)?;
        let ratio = plant.score(&fast, &emfs) / plant.score(&best, &emfs);
        worst = worst.min(ratio);
        if k < 3 {
            println!(
                "field {k}: inor {:?} oracle {:?} ratio {ratio:.5}",
                fast.boundaries(),
                best.boundaries()
            );
        }
    }
    println!("worst inor/oracle power ratio over 200 fields: {worst:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
