//! Array reconfiguration: the instantaneous greedy partitioner (INOR), the
//! prediction-gated switching controller built on it (DNOR), and an
//! exhaustive search used as an optimality oracle on small arrays.

use serde::{Deserialize, Serialize};

use crate::array::{self, Configuration, SWITCHES_PER_GAP};
use crate::charger::{self, ChargerParams};
use crate::error::{Error, Result};
use crate::predictor::Forecaster;
use crate::teg::{self, TegParams};
use crate::thermal::TemperatureField;

/// Which way to break a tie between two equally balanced group starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Prefer the smaller start, leaving more modules for later groups.
    #[default]
    SmallerStart,
    LargerStart,
}

/// Where candidate configurations are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Array MPP power after charger efficiency.
    #[default]
    BatterySide,
    /// Raw array MPP power.
    ArraySide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconfigParams {
    pub n_min: usize,
    pub n_max: usize,
    pub tie_break: TieBreak,
    pub objective: Objective,
}

impl ReconfigParams {
    pub fn new(n_min: usize, n_max: usize) -> Result<Self> {
        if n_min < 1 || n_min > n_max {
            return Err(Error::config(
                "reconfig",
                format!("need 1 <= n_min <= n_max, got n_min = {n_min}, n_max = {n_max}"),
            ));
        }
        Ok(ReconfigParams {
            n_min,
            n_max,
            tie_break: TieBreak::default(),
            objective: Objective::default(),
        })
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    fn check_size(&self, n_modules: usize) -> Result<()> {
        if n_modules < self.n_max {
            return Err(Error::domain(format!(
                "array of {n_modules} modules cannot form n_max = {} groups",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// The electrical side of the plant, shared by every scoring function.
#[derive(Debug, Clone, Copy)]
pub struct Plant<'a> {
    pub teg: &'a TegParams,
    pub charger: &'a ChargerParams,
    pub objective: Objective,
}

impl<'a> Plant<'a> {
    pub fn new(teg: &'a TegParams, charger: &'a ChargerParams, objective: Objective) -> Self {
        Plant {
            teg,
            charger,
            objective,
        }
    }

    pub fn emfs(&self, field: &TemperatureField) -> Vec<f64> {
        field
            .delta_ts()
            .map(|dt| teg::emf_unchecked(self.teg, dt))
            .collect()
    }

    /// Score of `config` at its MPP under the plant's objective.
    pub fn score(&self, config: &Configuration, emfs: &[f64]) -> f64 {
        let (p, v) = array::mpp_power(config, emfs, self.teg.internal_resistance);
        match self.objective {
            Objective::ArraySide => p,
            Objective::BatterySide => charger::battery_power_at(self.charger, v, p),
        }
    }

    pub fn score_field(&self, config: &Configuration, field: &TemperatureField) -> f64 {
        self.score(config, &self.emfs(field))
    }
}

/// Greedy contiguous split of per-module MPP currents into `n` groups.
///
/// Group starts are placed left to right. Each start is the one that brings
/// the previous group's current sum closest to `sum(I) / n`, restricted so
/// that every remaining group still gets at least one module. The last group
/// takes whatever is left.
pub fn balanced_partition(
    mpp_currents: &[f64],
    n: usize,
    tie_break: TieBreak,
) -> Result<Configuration> {
    let total_modules = mpp_currents.len();
    if n < 1 || n > total_modules {
        return Err(Error::domain(format!(
            "cannot split {total_modules} modules into {n} groups"
        )));
    }
    let mut prefix = Vec::with_capacity(total_modules + 1);
    prefix.push(0.0);
    for i in mpp_currents {
        prefix.push(prefix[prefix.len() - 1] + i);
    }
    let ideal = prefix[total_modules] / n as f64;

    let mut boundaries = Vec::with_capacity(n);
    boundaries.push(1);
    // 0-based index of the current group's first module
    let mut start = 0;
    for j in 2..=n {
        // 1-based candidate g: group j-1 covers modules start+1 ..= g-1
        let lo = start + 2;
        let hi = total_modules - (n - j);
        let deviation = |g: usize| (prefix[g - 1] - prefix[start] - ideal).abs();
        let mut best_g = lo;
        let mut best_dev = deviation(lo);
        for g in (lo + 1)..=hi {
            let dev = deviation(g);
            let better = match tie_break {
                TieBreak::SmallerStart => dev < best_dev,
                TieBreak::LargerStart => dev <= best_dev,
            };
            if better {
                best_g = g;
                best_dev = dev;
            } else if prefix[g - 1] - prefix[start] >= ideal {
                // sums only grow from here
                break;
            }
        }
        boundaries.push(best_g);
        start = best_g - 1;
    }
    Configuration::new(total_modules, boundaries)
}

/// Instantaneous near-optimal reconfiguration: one greedy partition per
/// group count in `[n_min, n_max]`, keeping the best-scoring one.
pub fn inor(
    field: &TemperatureField,
    plant: &Plant<'_>,
    params: &ReconfigParams,
) -> Result<Configuration> {
    params.check_size(field.len())?;
    let emfs = plant.emfs(field);
    let r = plant.teg.internal_resistance;
    let mpp_currents: Vec<f64> = emfs.iter().map(|e| e / (2.0 * r)).collect();
    let mut best: Option<(f64, Configuration)> = None;
    for n in params.n_min..=params.n_max {
        let candidate = balanced_partition(&mpp_currents, n, params.tie_break)?;
        let score = plant.score(&candidate, &emfs);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, candidate));
        }
    }
    Ok(best.expect("n range is nonempty").1)
}

/// Largest array the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Exhaustive search over every contiguous partition with a group count in
/// `[n_min, n_max]`. Near-ties (relative 1e-12) go to fewer groups, then to
/// the lexicographically smaller boundary list.
pub fn brute_force_best(
    field: &TemperatureField,
    plant: &Plant<'_>,
    params: &ReconfigParams,
) -> Result<Configuration> {
    let n_modules = field.len();
    if n_modules > BRUTE_FORCE_LIMIT {
        return Err(Error::domain(format!(
            "exhaustive search over {n_modules} modules is intractable; use at most {BRUTE_FORCE_LIMIT}"
        )));
    }
    params.check_size(n_modules)?;
    let emfs = plant.emfs(field);
    let mut best: Option<(f64, Configuration)> = None;
    for n in params.n_min..=params.n_max {
        for_each_composition(n_modules, n, |boundaries| {
            let config =
                Configuration::new(n_modules, boundaries.to_vec()).expect("valid composition");
            let score = plant.score(&config, &emfs);
            let wins = match &best {
                None => true,
                Some((s, _)) => score > *s + 1e-12 * s.abs().max(1e-300),
            };
            if wins {
                best = Some((score, config));
            }
        });
    }
    Ok(best.expect("n range is nonempty").1)
}

/// Calls `f` with every boundary list for `n` groups over `n_modules`
/// modules, in lexicographic order.
fn for_each_composition(n_modules: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut b: Vec<usize> = (1..=n).collect();
    loop {
        f(&b);
        // advance the rightmost start that still has room
        let mut j = n;
        loop {
            if j <= 1 {
                return;
            }
            j -= 1;
            if b[j] < n_modules - (n - 1 - j) {
                break;
            }
        }
        b[j] += 1;
        for k in (j + 1)..n {
            b[k] = b[k - 1] + 1;
        }
    }
}

/// Prices a reconfiguration.
pub trait OverheadModel {
    /// Energy (J) lost when `flips` switches toggle while the array was
    /// delivering `reference_power` (W).
    fn switch_energy(&self, flips: usize, reference_power: f64) -> f64;
}

/// Flip count charged when there is no previous configuration: every gap's
/// switch triple is actuated.
pub fn bootstrap_flips(n_modules: usize) -> usize {
    n_modules.saturating_sub(1) * SWITCHES_PER_GAP
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchDecision {
    pub chosen: Configuration,
    pub candidate: Configuration,
    pub switched: bool,
    pub flips: usize,
    pub e_old: f64,
    pub e_new: f64,
    pub e_overhead: f64,
}

/// Switch iff the old configuration's energy does not exceed the new one's
/// net of switching cost. Equality switches.
pub fn switch_condition(e_old: f64, e_new: f64, e_overhead: f64) -> bool {
    e_old <= e_new - e_overhead
}

/// Inputs of one DNOR invocation.
pub struct DnorInputs<'a> {
    pub now: f64,
    /// Field measured at `now`.
    pub field: &'a TemperatureField,
    /// Configuration held over the previous window; `None` on the first call.
    pub old: Option<&'a Configuration>,
    pub forecaster: &'a dyn Forecaster,
    /// Seconds of forecast, `t_p`.
    pub horizon: usize,
    /// Length of one step in seconds.
    pub step: f64,
}

/// One invocation of the durable controller. The INOR candidate replaces
/// the held configuration iff its energy over the current second plus the
/// forecast horizon beats the old one's by at least the switching cost.
pub fn dnor_step(
    inputs: &DnorInputs<'_>,
    overhead: &dyn OverheadModel,
    plant: &Plant<'_>,
    params: &ReconfigParams,
) -> Result<SwitchDecision> {
    let candidate = inor(inputs.field, plant, params)?;
    let forecast = inputs.forecaster.forecast(inputs.now, inputs.horizon)?;
    let window: Vec<Vec<f64>> = std::iter::once(inputs.field)
        .chain(forecast.iter())
        .map(|f| plant.emfs(f))
        .collect();
    let energy = |config: &Configuration| -> f64 {
        window.iter().map(|e| plant.score(config, e)).sum::<f64>() * inputs.step
    };
    let e_new = energy(&candidate);

    let Some(old) = inputs.old else {
        let flips = bootstrap_flips(candidate.n_modules());
        let reference = plant.score(&candidate, &window[0]);
        return Ok(SwitchDecision {
            chosen: candidate.clone(),
            candidate,
            switched: true,
            flips,
            e_old: 0.0,
            e_new,
            e_overhead: overhead.switch_energy(flips, reference),
        });
    };
    if old == &candidate {
        return Ok(SwitchDecision {
            chosen: old.clone(),
            candidate,
            switched: false,
            flips: 0,
            e_old: e_new,
            e_new,
            e_overhead: 0.0,
        });
    }
    let flips = array::switch_flip_count(old, &candidate)?;
    let e_old = energy(old);
    let e_overhead = overhead.switch_energy(flips, plant.score(old, &window[0]));
    let switched = switch_condition(e_old, e_new, e_overhead);
    Ok(SwitchDecision {
        chosen: if switched {
            candidate.clone()
        } else {
            old.clone()
        },
        candidate,
        switched,
        flips,
        e_old,
        e_new,
        e_overhead,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::Persistence;
    use approx::assert_relative_eq;

    struct Flat(f64);
    impl OverheadModel for Flat {
        fn switch_energy(&self, _flips: usize, _reference_power: f64) -> f64 {
            self.0
        }
    }

    fn plant<'a>(teg: &'a TegParams, charger: &'a ChargerParams) -> Plant<'a> {
        Plant::new(teg, charger, Objective::ArraySide)
    }

    #[test]
    fn balanced_uniform_split() {
        let c = balanced_partition(&[1.0; 4], 2, TieBreak::SmallerStart).unwrap();
        assert_eq!(c.boundaries(), &[1, 3]);
    }

    #[test]
    fn balanced_skewed_split() {
        let c = balanced_partition(&[3.0, 1.0, 1.0, 1.0], 2, TieBreak::SmallerStart).unwrap();
        assert_eq!(c.boundaries(), &[1, 2]);
    }

    #[test]
    fn tie_break_direction() {
        // ideal = 1.5: starts 2 and 3 leave the first group 0.5 off either way
        let currents = [1.0, 1.0, 1.0];
        let small = balanced_partition(&currents, 2, TieBreak::SmallerStart).unwrap();
        let large = balanced_partition(&currents, 2, TieBreak::LargerStart).unwrap();
        assert_eq!(small.boundaries(), &[1, 2]);
        assert_eq!(large.boundaries(), &[1, 3]);
    }

    #[test]
    fn feasibility_guard_under_spike() {
        // a huge first module would otherwise swallow everything
        let c =
            balanced_partition(&[100.0, 0.1, 0.1, 0.1, 0.1], 4, TieBreak::SmallerStart).unwrap();
        assert_eq!(c.n_groups(), 4);
        let c =
            balanced_partition(&[0.0, 0.0, 0.0, 0.0, 100.0], 3, TieBreak::SmallerStart).unwrap();
        assert_eq!(c.n_groups(), 3);
        assert_eq!(c.boundaries(), &[1, 2, 3]);
    }

    #[test]
    fn composition_enumeration_counts() {
        let mut count = 0;
        let mut last: Vec<usize> = Vec::new();
        for_each_composition(6, 3, |b| {
            count += 1;
            assert!(last.is_empty() || b > last.as_slice());
            last = b.to_vec();
        });
        assert_eq!(count, 10); // C(5, 2)
        let mut one = 0;
        for_each_composition(4, 1, |b| {
            assert_eq!(b, &[1]);
            one += 1;
        });
        assert_eq!(one, 1);
    }

    #[test]
    fn inor_rejects_small_arrays() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let field = TemperatureField::uniform(0.0, 3, 80.0, 25.0).unwrap();
        let params = ReconfigParams::new(2, 4).unwrap();
        assert!(inor(&field, &plant(&teg, &charger), &params).is_err());
    }

    #[test]
    fn oracle_single_module() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let field = TemperatureField::uniform(0.0, 1, 80.0, 25.0).unwrap();
        let params = ReconfigParams::new(1, 1).unwrap();
        let best = brute_force_best(&field, &plant(&teg, &charger), &params).unwrap();
        assert_eq!(best.boundaries(), &[1]);
    }

    #[test]
    fn oracle_three_module_hand_case() {
        // E = 2 V per module, R = 1: [1] gives 3 W, [1,2] and [1,3] give 8/3 W
        let teg = TegParams::new(0.001, 200, 1.0).unwrap();
        let charger = ChargerParams::default();
        let field = TemperatureField::uniform(0.0, 3, 35.0, 25.0).unwrap();
        let params = ReconfigParams::new(1, 2).unwrap();
        let p = plant(&teg, &charger);
        let best = brute_force_best(&field, &p, &params).unwrap();
        assert_eq!(best.boundaries(), &[1]);
        assert_relative_eq!(p.score_field(&best, &field), 3.0, max_relative = 1e-12);
        let two = ReconfigParams::new(2, 2).unwrap();
        let split = brute_force_best(&field, &p, &two).unwrap();
        assert_eq!(split.boundaries(), &[1, 2]);
        assert_relative_eq!(
            p.score_field(&split, &field),
            8.0 / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn oracle_refuses_large_arrays() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let field = TemperatureField::uniform(0.0, 21, 80.0, 25.0).unwrap();
        let params = ReconfigParams::new(1, 2).unwrap();
        assert!(brute_force_best(&field, &plant(&teg, &charger), &params).is_err());
    }

    #[test]
    fn uniform_field_inor_matches_oracle_and_ideal() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let p = plant(&teg, &charger);
        let field = TemperatureField::uniform(0.0, 12, 85.0, 25.0).unwrap();
        let params = ReconfigParams::new(2, 4).unwrap();
        let ideal: f64 = field
            .delta_ts()
            .map(|dt| teg::module_mpp(&teg, dt).unwrap().power)
            .sum();
        let a = inor(&field, &p, &params).unwrap();
        let b = brute_force_best(&field, &p, &params).unwrap();
        assert_relative_eq!(p.score_field(&a, &field), ideal, max_relative = 1e-9);
        assert_relative_eq!(p.score_field(&b, &field), ideal, max_relative = 1e-9);
        assert_eq!(b.boundaries(), &[1, 7]);
    }

    #[test]
    fn dnor_bootstrap_adopts_candidate() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let p = Plant::new(&teg, &charger, Objective::BatterySide);
        let field = TemperatureField::uniform(0.0, 20, 85.0, 25.0).unwrap();
        let mut fc = Persistence::default();
        fc.observe(&field).unwrap();
        let inputs = DnorInputs {
            now: 0.0,
            field: &field,
            old: None,
            forecaster: &fc,
            horizon: 2,
            step: 1.0,
        };
        let params = ReconfigParams::new(4, 12).unwrap();
        let d = dnor_step(&inputs, &Flat(1.0), &p, &params).unwrap();
        assert!(d.switched);
        assert_eq!(d.chosen, d.candidate);
        assert_eq!(d.flips, 19 * 3);
    }

    #[test]
    fn dnor_identical_candidate_keeps_old() {
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let p = Plant::new(&teg, &charger, Objective::BatterySide);
        let field = TemperatureField::uniform(0.0, 20, 85.0, 25.0).unwrap();
        let mut fc = Persistence::default();
        fc.observe(&field).unwrap();
        let params = ReconfigParams::new(4, 12).unwrap();
        let old = inor(&field, &p, &params).unwrap();
        let inputs = DnorInputs {
            now: 0.0,
            field: &field,
            old: Some(&old),
            forecaster: &fc,
            horizon: 2,
            step: 1.0,
        };
        let d = dnor_step(&inputs, &Flat(0.0), &p, &params).unwrap();
        assert!(!d.switched);
        assert_eq!(d.flips, 0);
        assert_eq!(d.e_old, d.e_new);
        assert_eq!(d.chosen, old);
    }

    #[test]
    fn dnor_branch_respects_overhead() {
        // Old configuration is the 10x2 array, far from the 13.8 V sweet spot.
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let p = Plant::new(&teg, &charger, Objective::BatterySide);
        let field = TemperatureField::uniform(0.0, 20, 85.0, 25.0).unwrap();
        let mut fc = Persistence::default();
        fc.observe(&field).unwrap();
        let params = ReconfigParams::new(4, 12).unwrap();
        let old = Configuration::uniform(20, 2).unwrap();
        let inputs = DnorInputs {
            now: 0.0,
            field: &field,
            old: Some(&old),
            forecaster: &fc,
            horizon: 2,
            step: 1.0,
        };
        let cheap = dnor_step(&inputs, &Flat(0.0), &p, &params).unwrap();
        assert!(cheap.switched);
        assert!(cheap.e_new > cheap.e_old);
        let gain = cheap.e_new - cheap.e_old;
        let costly = dnor_step(&inputs, &Flat(gain * 1.01), &p, &params).unwrap();
        assert!(!costly.switched);
        assert_eq!(costly.chosen, old);
    }

    #[test]
    fn switch_condition_cases() {
        assert!(!switch_condition(100.0, 103.0, 5.0));
        assert!(switch_condition(100.0, 103.0, 3.0));
        assert!(switch_condition(100.0, 105.0, 2.0));
    }
}
