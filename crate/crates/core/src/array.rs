//! Reconfigurable module array.
//!
//! The `N` modules sit in a physical chain. A [`Configuration`] splits the
//! chain into `n` contiguous groups: modules inside a group are wired in
//! parallel, and the groups are wired in series. Between every pair of
//! neighbours there is one series switch and two parallel switches, and
//! exactly one of those two patterns is closed at a time.
//!
//! For a group `j` with `m_j` members whose EMFs sum to `S_j`, all members
//! share the group voltage and their currents add up to the array current
//! `I`, which gives `V_j = (S_j - I*R) / m_j`. Summing over groups,
//!
//! ```text
//! V(I) = A - I*B,  A = sum_j S_j/m_j,  B = R * sum_j 1/m_j
//! P(I) = I*(A - I*B),  maximised at I* = A/(2B) with P* = A^2/(4B).
//! ```

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Contiguous partition of `n_modules` into groups, stored as the 1-indexed
/// first module of each group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n_modules: usize,
    boundaries: Vec<usize>,
}

impl Configuration {
    pub fn new(n_modules: usize, boundaries: Vec<usize>) -> Result<Self> {
        if n_modules == 0 {
            return Err(Error::domain("configuration needs at least one module"));
        }
        if boundaries.first() != Some(&1) {
            return Err(Error::domain("first group must start at module 1"));
        }
        if boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(format!(
                "group starts must be strictly increasing: {boundaries:?}"
            )));
        }
        if *boundaries.last().unwrap() > n_modules {
            return Err(Error::domain(format!(
                "group start {} exceeds module count {n_modules}",
                boundaries.last().unwrap()
            )));
        }
        Ok(Configuration {
            n_modules,
            boundaries,
        })
    }

    /// Every module in one parallel group.
    pub fn all_parallel(n_modules: usize) -> Result<Self> {
        Self::new(n_modules, vec![1])
    }

    /// Every module in its own group.
    pub fn all_series(n_modules: usize) -> Result<Self> {
        Self::new(n_modules, (1..=n_modules).collect())
    }

    /// `n_groups` groups whose sizes differ by at most one, larger groups
    /// first. For 100 modules and 10 groups this is the 10x10 array.
    pub fn uniform(n_modules: usize, n_groups: usize) -> Result<Self> {
        if n_groups == 0 || n_groups > n_modules {
            return Err(Error::domain(format!(
                "cannot split {n_modules} modules into {n_groups} nonempty groups"
            )));
        }
        let base = n_modules / n_groups;
        let extra = n_modules % n_groups;
        let mut start = 1;
        let boundaries = (0..n_groups)
            .map(|j| {
                let g = start;
                start += base + usize::from(j < extra);
                g
            })
            .collect();
        Self::new(n_modules, boundaries)
    }

    pub fn n_modules(&self) -> usize {
        self.n_modules
    }

    pub fn n_groups(&self) -> usize {
        self.boundaries.len()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Zero-indexed module ranges, one per group.
    pub fn groups(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let n = self.n_modules;
        self.boundaries.iter().enumerate().map(move |(j, &g)| {
            let end = self.boundaries.get(j + 1).map_or(n, |next| next - 1);
            (g - 1)..end
        })
    }

    /// Rebuilds a configuration from the state of the `N - 1` gaps.
    pub fn from_switch_states(states: &[GapState]) -> Self {
        let boundaries = std::iter::once(1)
            .chain(
                states
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s == GapState::Series)
                    .map(|(i, _)| i + 2),
            )
            .collect();
        Configuration {
            n_modules: states.len() + 1,
            boundaries,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, g) in self.boundaries.iter().enumerate() {
            if j > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Parses the comma-separated boundary list form, e.g. `1,3,7`. The module
/// count is not part of the text, so it has to be supplied separately.
pub fn parse_boundaries(n_modules: usize, text: &str) -> Result<Configuration> {
    let boundaries = text
        .split(',')
        .map(|s| {
            usize::from_str(s.trim())
                .map_err(|e| Error::domain(format!("bad group start `{s}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Configuration::new(n_modules, boundaries)
}

/// State of the switch triple between two neighbouring modules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GapState {
    /// Series switch closed, both parallel switches open.
    Series,
    /// Series switch open, both parallel switches closed.
    Parallel,
}

/// Individual switch positions for one gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwitchTriple {
    pub series: bool,
    pub parallel_top: bool,
    pub parallel_bottom: bool,
}

impl GapState {
    pub fn switches(self) -> SwitchTriple {
        let series = self == GapState::Series;
        SwitchTriple {
            series,
            parallel_top: !series,
            parallel_bottom: !series,
        }
    }
}

/// Number of physical switches per gap.
pub const SWITCHES_PER_GAP: usize = 3;

pub fn switch_states(config: &Configuration) -> Vec<GapState> {
    let mut states = vec![GapState::Parallel; config.n_modules - 1];
    for &g in &config.boundaries[1..] {
        // gap index g - 2 sits between modules g - 1 and g
        states[g - 2] = GapState::Series;
    }
    states
}

/// Switches toggled when moving from `old` to `new`.
pub fn switch_flip_count(old: &Configuration, new: &Configuration) -> Result<usize> {
    if old.n_modules != new.n_modules {
        return Err(Error::domain(format!(
            "configurations cover {} and {} modules",
            old.n_modules, new.n_modules
        )));
    }
    let changed = switch_states(old)
        .iter()
        .zip(switch_states(new))
        .filter(|(a, b)| **a != *b)
        .count();
    Ok(changed * SWITCHES_PER_GAP)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArrayOperatingPoint {
    pub current: f64,
    pub group_voltages: Vec<f64>,
    pub total_voltage: f64,
    pub total_power: f64,
    /// Per-module currents; a cold module in a hot group can go negative.
    pub module_currents: Vec<f64>,
}

fn check_emfs(config: &Configuration, emfs: &[f64]) -> Result<()> {
    if emfs.len() != config.n_modules {
        return Err(Error::domain(format!(
            "{} EMFs supplied for {} modules",
            emfs.len(),
            config.n_modules
        )));
    }
    Ok(())
}

/// Electrical state of the array when the load draws `current`.
pub fn solve_at_current(
    config: &Configuration,
    emfs: &[f64],
    r_teg: f64,
    current: f64,
) -> Result<ArrayOperatingPoint> {
    check_emfs(config, emfs)?;
    if !(current >= 0.0) {
        return Err(Error::domain(format!(
            "array current must be >= 0, got {current}"
        )));
    }
    Ok(solve_unchecked(config, emfs, r_teg, current))
}

fn solve_unchecked(
    config: &Configuration,
    emfs: &[f64],
    r_teg: f64,
    current: f64,
) -> ArrayOperatingPoint {
    let mut group_voltages = Vec::with_capacity(config.n_groups());
    let mut module_currents = Vec::with_capacity(emfs.len());
    for range in config.groups() {
        let members = &emfs[range];
        let sum: f64 = members.iter().sum();
        let v = (sum - current * r_teg) / members.len() as f64;
        module_currents.extend(members.iter().map(|e| (e - v) / r_teg));
        group_voltages.push(v);
    }
    let total_voltage: f64 = group_voltages.iter().sum();
    ArrayOperatingPoint {
        current,
        total_power: current * total_voltage,
        group_voltages,
        total_voltage,
        module_currents,
    }
}

/// Coefficients `(A, B)` of the array's linear V(I) = A - I*B.
fn thevenin(config: &Configuration, emfs: &[f64], r_teg: f64) -> (f64, f64) {
    config.groups().fold((0.0, 0.0), |(a, b), range| {
        let m = range.len() as f64;
        let sum: f64 = emfs[range].iter().sum();
        (a + sum / m, b + r_teg / m)
    })
}

/// Maximum output power of the array under `config`, in closed form.
pub fn configuration_mpp(
    config: &Configuration,
    emfs: &[f64],
    r_teg: f64,
) -> Result<ArrayOperatingPoint> {
    check_emfs(config, emfs)?;
    Ok(mpp_unchecked(config, emfs, r_teg))
}

pub(crate) fn mpp_unchecked(
    config: &Configuration,
    emfs: &[f64],
    r_teg: f64,
) -> ArrayOperatingPoint {
    let (a, b) = thevenin(config, emfs, r_teg);
    solve_unchecked(config, emfs, r_teg, (a / (2.0 * b)).max(0.0))
}

/// MPP power only, without building the per-module vectors.
pub(crate) fn mpp_power(config: &Configuration, emfs: &[f64], r_teg: f64) -> (f64, f64) {
    let (a, b) = thevenin(config, emfs, r_teg);
    // (power, voltage at MPP)
    (a * a / (4.0 * b), a / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpptOutcome {
    pub point: ArrayOperatingPoint,
    pub converged: bool,
    pub iterations: usize,
}

/// Perturb-and-observe on the array current, starting from open circuit.
///
/// Each iteration probes `I + step` and `I - step` (never below zero) and
/// moves to the better one; it stops when neither improves on the current
/// power. `P(I)` is a downward parabola, so the stopping point lies within
/// half a step of the optimum.
pub fn numeric_mppt(
    config: &Configuration,
    emfs: &[f64],
    r_teg: f64,
    step: f64,
    max_iters: usize,
) -> Result<MpptOutcome> {
    check_emfs(config, emfs)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain(format!(
            "MPPT step must be finite and > 0, got {step}"
        )));
    }
    // observes terminal power from the circuit, as a hardware tracker would
    let power = |i: f64| solve_unchecked(config, emfs, r_teg, i).total_power;
    let mut current = 0.0;
    let mut best = power(current);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let up = current + step;
        let down = current - step;
        let p_up = power(up);
        let p_down = if down >= 0.0 {
            power(down)
        } else {
            f64::NEG_INFINITY
        };
        if p_up > best && p_up >= p_down {
            current = up;
            best = p_up;
        } else if p_down > best {
            current = down;
            best = p_down;
        } else {
            converged = true;
            break;
        }
    }
    Ok(MpptOutcome {
        point: solve_unchecked(config, emfs, r_teg, current),
        converged,
        iterations,
    })
}

/// Largest power shortfall P&O may end with: `P(I*) - P(I* + step)`.
pub fn one_step_bound(config: &Configuration, emfs: &[f64], r_teg: f64, step: f64) -> f64 {
    let (_, b) = thevenin(config, emfs, r_teg);
    b * step * step
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: usize, b: &[usize]) -> Configuration {
        Configuration::new(n, b.to_vec()).unwrap()
    }

    #[test]
    fn rejects_invalid_boundaries() {
        assert!(Configuration::new(4, vec![2]).is_err());
        assert!(Configuration::new(4, vec![1, 3, 3]).is_err());
        assert!(Configuration::new(4, vec![1, 5]).is_err());
        assert!(Configuration::new(4, vec![]).is_err());
        assert!(Configuration::new(0, vec![1]).is_err());
    }

    #[test]
    fn groups_cover_chain() {
        let c = cfg(7, &[1, 3, 4]);
        assert_eq!(c.groups().collect::<Vec<_>>(), vec![0..2, 2..3, 3..7]);
    }

    #[test]
    fn uniform_split() {
        let c = Configuration::uniform(100, 10).unwrap();
        assert_eq!(c.boundaries(), &[1, 11, 21, 31, 41, 51, 61, 71, 81, 91]);
        let c = Configuration::uniform(7, 3).unwrap();
        assert_eq!(
            c.groups().map(|r| r.len()).collect::<Vec<_>>(),
            vec![3, 2, 2]
        );
        assert!(Configuration::uniform(3, 4).is_err());
    }

    #[test]
    fn display_and_parse() {
        let c = cfg(9, &[1, 3, 7]);
        assert_eq!(c.to_string(), "1,3,7");
        assert_eq!(parse_boundaries(9, "1, 3,7").unwrap(), c);
        assert!(parse_boundaries(9, "1,x").is_err());
    }

    #[test]
    fn switch_state_examples() {
        use GapState::*;
        assert_eq!(
            switch_states(&cfg(4, &[1])),
            vec![Parallel, Parallel, Parallel]
        );
        assert_eq!(
            switch_states(&cfg(4, &[1, 2, 3, 4])),
            vec![Series, Series, Series]
        );
        assert_eq!(
            switch_states(&cfg(4, &[1, 3])),
            vec![Parallel, Series, Parallel]
        );
        assert_eq!(switch_states(&cfg(1, &[1])), vec![]);
    }

    #[test]
    fn gap_switch_patterns_are_exclusive() {
        let s = GapState::Series.switches();
        assert!(s.series && !s.parallel_top && !s.parallel_bottom);
        let p = GapState::Parallel.switches();
        assert!(!p.series && p.parallel_top && p.parallel_bottom);
    }

    #[test]
    fn flip_counts() {
        let a = cfg(4, &[1]);
        let b = cfg(4, &[1, 2, 3, 4]);
        assert_eq!(switch_flip_count(&a, &a).unwrap(), 0);
        assert_eq!(switch_flip_count(&a, &b).unwrap(), 9);
        assert_eq!(switch_flip_count(&b, &a).unwrap(), 9);
        assert!(switch_flip_count(&a, &cfg(5, &[1])).is_err());
    }

    #[test]
    fn open_circuit_solve() {
        let c = cfg(3, &[1, 2]);
        let op = solve_at_current(&c, &[2.0, 2.0, 4.0], 1.0, 0.0).unwrap();
        assert_eq!(op.group_voltages, vec![2.0, 3.0]);
        assert_eq!(op.total_power, 0.0);
        // circulating current inside the mixed group
        assert_relative_eq!(op.module_currents[1], -1.0);
        assert_relative_eq!(op.module_currents[2], 1.0);
    }

    #[test]
    fn single_module_matched() {
        let op = solve_at_current(&cfg(1, &[1]), &[2.0], 1.0, 1.0).unwrap();
        assert_relative_eq!(op.total_voltage, 1.0);
        assert_relative_eq!(op.total_power, 1.0);
    }

    #[test]
    fn two_group_hand_solve() {
        let c = cfg(3, &[1, 2]);
        let op = solve_at_current(&c, &[2.0; 3], 1.0, 4.0 / 3.0).unwrap();
        assert_relative_eq!(op.group_voltages[0], 2.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(op.group_voltages[1], 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(op.total_power, 8.0 / 3.0, max_relative = 1e-12);
        assert!(solve_at_current(&c, &[2.0; 3], 1.0, -0.1).is_err());
        assert!(solve_at_current(&c, &[2.0; 2], 1.0, 0.1).is_err());
    }

    #[test]
    fn balanced_identical_modules_lose_nothing() {
        let mpp = configuration_mpp(&cfg(4, &[1, 3]), &[2.0; 4], 1.0).unwrap();
        assert_relative_eq!(mpp.total_power, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn mismatched_groups_lose_power() {
        let mpp = configuration_mpp(&cfg(3, &[1, 2]), &[2.0; 3], 1.0).unwrap();
        assert_relative_eq!(mpp.current, 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(mpp.total_power, 8.0 / 3.0, max_relative = 1e-12);
        assert!(mpp.total_power < 3.0);
    }

    #[test]
    fn degenerate_array_is_module_mpp() {
        let p = crate::teg::TegParams::default();
        let e = crate::teg::emf(&p, 50.0).unwrap();
        let mpp = configuration_mpp(&cfg(1, &[1]), &[e], p.internal_resistance).unwrap();
        let module = crate::teg::module_mpp(&p, 50.0).unwrap();
        assert_relative_eq!(mpp.total_power, module.power, max_relative = 1e-12);
        assert_relative_eq!(mpp.total_voltage, module.voltage, max_relative = 1e-12);
    }

    #[test]
    fn mppt_large_step_terminates() {
        let c = cfg(3, &[1, 2]);
        let out = numeric_mppt(&c, &[2.0; 3], 1.0, 10.0, 100).unwrap();
        assert!(out.converged);
        assert!(out.point.total_power >= 0.0);
        assert!(numeric_mppt(&c, &[2.0; 3], 1.0, 0.0, 100).is_err());
    }

    #[test]
    fn mppt_reports_non_convergence() {
        let c = cfg(3, &[1, 2]);
        let out = numeric_mppt(&c, &[2.0; 3], 1.0, 1e-6, 10).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 10);
        assert!(out.point.total_power > 0.0);
    }

    #[test]
    fn mppt_converges_near_analytic() {
        let c = cfg(3, &[1, 2]);
        let step = 0.01;
        let out = numeric_mppt(&c, &[2.0; 3], 1.0, step, 10_000).unwrap();
        let exact = configuration_mpp(&c, &[2.0; 3], 1.0).unwrap();
        assert!(out.converged);
        assert!(
            exact.total_power - out.point.total_power
                <= one_step_bound(&c, &[2.0; 3], 1.0, step) + 1e-12
        );
    }
}
