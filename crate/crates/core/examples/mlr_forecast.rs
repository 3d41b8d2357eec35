// Walk-forward MAPE of the regression forecaster on a synthetic drive,
// against simply repeating the last field. A pure random walk has no
// exploitable dynamics, so persistence is a strong baseline here.

use teg_reconfig::predictor::{self, Forecaster, Persistence, Pooling, PredictorConfig};
use teg_reconfig::thermal::{self, SynthSpec, ThermalParams};

pub fn run() -> teg_reconfig::Result<()> {
    let spec = SynthSpec {
        duration_s: 300,
        ..SynthSpec::default()
    };
    let trace = thermal::synth_trace(&spec)?;
    let params = ThermalParams::default();
    let fields = trace
        .samples()
        .iter()
        .map(|s| thermal::field_from_sample(&params, s, 20))
        .collect::<teg_reconfig::Result<Vec<_>>>()?;

    for pooling in [Pooling::Pooled, Pooling::PerModule] {
        for window in [2, 5, 8] {
            let cfg = PredictorConfig {
                window,
                pooling,
                ..PredictorConfig::default()
            };
            let r = predictor::backtest(&fields, &cfg)?;
            println!(
                "{pooling:?} w={window}: MAPE t+1 {:.4} %, t+2 {:.4} %, worst {:.4} % over {} pairs",
                r.per_horizon[0], r.per_horizon[1], r.worst, r.n
            );
        }
    }

    let mut naive = Persistence::default();
    let (mut actual, mut forecast) = (Vec::new(), Vec::new());
    for (t, f) in fields.iter().enumerate() {
        naive.observe(f)?;
        if let Some(next) = fields.get(t + 2) {
            actual.extend_from_slice(&next.hot_side_temps);
            forecast.extend_from_slice(&naive.forecast(f.time, 2)?[1].hot_side_temps);
        }
    }
    println!(
        "persistence t+2: {:.4} %",
        predictor::mape(&actual, &forecast)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> teg_reconfig::Result<()> {
    run()
}
