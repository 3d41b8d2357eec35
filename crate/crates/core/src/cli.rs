//! Config-driven command layer behind the `tegsim` binary.
//!
//! Every command takes a validated [`RunConfig`], writes its files under the
//! output directory and returns the text it would print. Wall-clock fields
//! are kept out of the deterministic files: they go to `timing.csv` or to
//! keys prefixed `timing.`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::array::{self, Configuration};
use crate::charger::{ChargerParams, EfficiencyTable};
use crate::error::{Error, Result};
use crate::predictor::{self, PredictorConfig};
use crate::reconfig::{self, Objective, Plant, ReconfigParams, TieBreak};
use crate::sim::{
    self, Algorithm, MpptMode, OverheadParams, PeriodicCharge, SchemeSpec, SimSetup,
    SimulationReport,
};
use crate::teg::{self, TegParams};
use crate::thermal::{self, SynthSpec, ThermalParams, Trace, TraceSample};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives the synthetic trace and every random study. Overrides `synth.seed`.
    pub seed: u64,
    pub n_modules: usize,
    pub step_s: f64,
    pub out: PathBuf,
    /// Trace CSV; when absent the `synth` block generates one.
    pub trace_file: Option<PathBuf>,
    /// `v_in,efficiency` CSV replacing the parametric charger curve.
    pub efficiency_table: Option<PathBuf>,
    pub schemes: Vec<String>,
    pub thermal: ThermalParams,
    pub teg: TegParams,
    pub charger: ChargerParams,
    pub overhead: OverheadParams,
    pub reconfig: ReconfigBlock,
    pub predictor: PredictorConfig,
    pub mppt: MpptMode,
    pub synth: SynthSpec,
    pub scheme: SchemeBlock,
    pub curves: CurvesBlock,
    pub validate: ValidateBlock,
    pub scaling: ScalingBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            n_modules: 100,
            step_s: 1.0,
            out: PathBuf::from("out"),
            trace_file: None,
            efficiency_table: None,
            schemes: vec!["dnor".into(), "inor".into(), "fixed".into()],
            thermal: ThermalParams::default(),
            teg: TegParams::default(),
            charger: ChargerParams::default(),
            overhead: OverheadParams::default(),
            reconfig: ReconfigBlock::default(),
            predictor: PredictorConfig::default(),
            mppt: MpptMode::default(),
            synth: SynthSpec::default(),
            scheme: SchemeBlock::default(),
            curves: CurvesBlock::default(),
            validate: ValidateBlock::default(),
            scaling: ScalingBlock::default(),
        }
    }
}

/// Group-count band; either bound left out is derived from the charger
/// window at the first trace sample.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconfigBlock {
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub tie_break: TieBreak,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeBlock {
    pub inor_period_s: f64,
    pub inor_charge: PeriodicCharge,
    /// Series group count of the fixed baseline.
    pub fixed_groups: usize,
    /// Explicit 1-based group starts for the fixed baseline; wins over
    /// `fixed_groups`.
    pub fixed_boundaries: Option<Vec<usize>>,
}

impl Default for SchemeBlock {
    fn default() -> Self {
        SchemeBlock {
            inor_period_s: 1.0,
            inor_charge: PeriodicCharge::EveryPeriod,
            fixed_groups: 10,
            fixed_boundaries: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvesBlock {
    pub delta_ts: Vec<f64>,
    pub n_points: usize,
}

impl Default for CurvesBlock {
    fn default() -> Self {
        CurvesBlock {
            delta_ts: vec![30.0, 60.0],
            n_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateBlock {
    pub instances: usize,
    pub n_modules: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub objective: Objective,
    /// Cases per invariant check.
    pub cases: usize,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        ValidateBlock {
            instances: 500,
            n_modules: 12,
            n_min: 2,
            n_max: 4,
            objective: Objective::ArraySide,
            cases: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingBlock {
    pub sizes: Vec<usize>,
    pub calls: usize,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for ScalingBlock {
    fn default() -> Self {
        ScalingBlock {
            sizes: vec![100, 1000, 10000],
            calls: 101,
            n_min: 5,
            n_max: 30,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        // relative file references are resolved against the config's folder
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.trace_file, &mut cfg.efficiency_table]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let row = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                source_name: source_name.to_string(),
                row,
                message: e.message().to_string(),
            }
        })
    }

    /// Checks every block before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.n_modules == 0 {
            return Err(Error::config("n_modules", "must be >= 1"));
        }
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(Error::config("step_s", "must be finite and > 0"));
        }
        self.thermal.validate("thermal")?;
        self.teg.validate("teg")?;
        self.charger.validate("charger")?;
        self.overhead.validate("overhead")?;
        self.predictor.validate("predictor")?;
        if self.trace_file.is_none() {
            self.synth.validate("synth")?;
        }
        if let (Some(lo), Some(hi)) = (self.reconfig.n_min, self.reconfig.n_max) {
            if lo < 1 || lo > hi {
                return Err(Error::config(
                    "reconfig.n_min",
                    format!("need 1 <= n_min <= n_max, got {lo} > {hi}"),
                ));
            }
        }
        if let Some(hi) = self.reconfig.n_max {
            if hi > self.n_modules {
                return Err(Error::config(
                    "reconfig.n_max",
                    format!("{hi} exceeds n_modules = {}", self.n_modules),
                ));
            }
        }
        if let MpptMode::PerturbObserve { step, max_iters } = self.mppt {
            if !(step > 0.0 && step.is_finite()) || max_iters == 0 {
                return Err(Error::config("mppt", "step must be > 0 and max_iters >= 1"));
            }
        }
        if !(self.scheme.inor_period_s > 0.0 && self.scheme.inor_period_s.is_finite()) {
            return Err(Error::config(
                "scheme.inor_period_s",
                "must be finite and > 0",
            ));
        }
        self.schemes()?;
        if self.curves.n_points < 2 {
            return Err(Error::config("curves.n_points", "must be >= 2"));
        }
        if let Some(dt) = self
            .curves
            .delta_ts
            .iter()
            .find(|d| !(d.is_finite() && **d >= 0.0))
        {
            return Err(Error::config(
                "curves.delta_ts",
                format!("{dt} is not a finite value >= 0"),
            ));
        }
        let v = &self.validate;
        if v.n_modules == 0 || v.n_modules > reconfig::BRUTE_FORCE_LIMIT {
            return Err(Error::config(
                "validate.n_modules",
                format!("must be in [1, {}]", reconfig::BRUTE_FORCE_LIMIT),
            ));
        }
        if v.n_min < 1 || v.n_min > v.n_max || v.n_max > v.n_modules {
            return Err(Error::config(
                "validate.n_min",
                format!("need 1 <= n_min <= n_max <= {}", v.n_modules),
            ));
        }
        if v.instances == 0 {
            return Err(Error::config("validate.instances", "must be >= 1"));
        }
        let s = &self.scaling;
        if s.calls == 0 {
            return Err(Error::config("scaling.calls", "must be >= 1"));
        }
        if s.n_min < 1 || s.n_min > s.n_max {
            return Err(Error::config("scaling.n_min", "need 1 <= n_min <= n_max"));
        }
        Ok(())
    }

    /// The configured trace, loaded or synthesised.
    pub fn trace(&self) -> Result<Trace> {
        match &self.trace_file {
            Some(path) => thermal::load_trace(path),
            None => {
                let spec = SynthSpec {
                    seed: self.seed,
                    ..self.synth.clone()
                };
                thermal::synth_trace(&spec)
            }
        }
    }

    fn charger_with_table(&self) -> Result<ChargerParams> {
        let mut charger = self.charger.clone();
        if let Some(path) = &self.efficiency_table {
            charger.table = Some(EfficiencyTable::load(path)?);
        }
        Ok(charger)
    }

    /// Simulation setup for `trace`; a missing group-count bound comes from
    /// the charger window at the trace's first sample.
    pub fn setup(&self, trace: &Trace) -> Result<SimSetup> {
        let charger = self.charger_with_table()?;
        let (n_min, n_max) = match (self.reconfig.n_min, self.reconfig.n_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            (lo, hi) => {
                let first =
                    thermal::field_from_sample(&self.thermal, &trace.samples()[0], self.n_modules)?;
                let (auto_lo, auto_hi) = sim::auto_n_range(&first, &self.teg, &charger)?;
                let lo = lo.unwrap_or(auto_lo);
                (lo, hi.unwrap_or(auto_hi).max(lo))
            }
        };
        let reconfig = ReconfigParams::new(n_min, n_max)
            .map_err(|e| Error::config("reconfig", e.to_string()))?
            .with_tie_break(self.reconfig.tie_break)
            .with_objective(self.reconfig.objective);
        let setup = SimSetup {
            n_modules: self.n_modules,
            thermal: self.thermal.clone(),
            teg: self.teg,
            charger,
            overhead: self.overhead,
            reconfig,
            predictor: self.predictor.clone(),
            mppt: self.mppt,
            step_s: self.step_s,
        };
        setup.validate()?;
        Ok(setup)
    }

    /// Scheme list resolved against the scheme parameters.
    pub fn schemes(&self) -> Result<Vec<SchemeSpec>> {
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        let mut out = Vec::with_capacity(self.schemes.len());
        for (i, name) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(name) {
                return Err(Error::config("schemes", format!("`{name}` listed twice")));
            }
            out.push(match name.to_ascii_lowercase().as_str() {
                "dnor" => SchemeSpec::Dnor {
                    horizon: self.predictor.horizon,
                },
                "inor" => SchemeSpec::InorPeriodic {
                    period_s: self.scheme.inor_period_s,
                    charge: self.scheme.inor_charge,
                },
                "fixed" => SchemeSpec::Fixed {
                    config: self.fixed_configuration()?,
                },
                other => {
                    return Err(Error::config(
                        "schemes",
                        format!("unknown scheme `{other}` (expected dnor, inor or fixed)"),
                    ))
                }
            });
        }
        Ok(out)
    }

    fn fixed_configuration(&self) -> Result<Configuration> {
        let field = |e: Error| Error::config("scheme.fixed_boundaries", e.to_string());
        match &self.scheme.fixed_boundaries {
            Some(b) => Configuration::new(self.n_modules, b.clone()).map_err(field),
            None => {
                let groups = self.scheme.fixed_groups;
                if groups == 0 || groups > self.n_modules {
                    return Err(Error::config(
                        "scheme.fixed_groups",
                        format!("must be in [1, {}]", self.n_modules),
                    ));
                }
                Configuration::uniform(self.n_modules, groups)
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e.to_string()))
}

/// File name for one curve; `30` gives `iv_dT30.csv`, `12.5` gives `iv_dT12.5.csv`.
pub fn curve_file_name(delta_t: f64) -> String {
    format!("iv_dT{delta_t}.csv")
}

/// One I-V/P-V CSV per temperature difference plus `mpp_points.csv`.
pub fn cmd_curves(cfg: &RunConfig, delta_ts: &[f64], out: &Path) -> Result<Vec<PathBuf>> {
    if delta_ts.is_empty() {
        return Err(Error::config(
            "curves.delta_ts",
            "at least one value is required",
        ));
    }
    create_dir(out)?;
    let mut files = Vec::with_capacity(delta_ts.len() + 1);
    let mpp_path = out.join("mpp_points.csv");
    let mut mpp = csv::Writer::from_writer(create_file(&mpp_path)?);
    mpp.write_record(["delta_T_K", "voltage_V", "current_A", "power_W"])
        .map_err(csv_err(&mpp_path))?;
    for &dt in delta_ts {
        let curve = teg::iv_curve(&cfg.teg, dt, cfg.curves.n_points)?;
        let path = out.join(curve_file_name(dt));
        let mut w = csv::Writer::from_writer(create_file(&path)?);
        w.write_record(["voltage_V", "current_A", "power_W"])
            .map_err(csv_err(&path))?;
        for p in &curve {
            w.write_record([
                format!("{:.6}", p.voltage),
                format!("{:.6}", p.current),
                format!("{:.6}", p.power),
            ])
            .map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let m = teg::module_mpp(&cfg.teg, dt)?;
        mpp.write_record([
            format!("{dt}"),
            format!("{:.6}", m.voltage),
            format!("{:.6}", m.current),
            format!("{:.6}", m.power),
        ])
        .map_err(csv_err(&mpp_path))?;
        files.push(path);
    }
    mpp.flush().map_err(|e| Error::io(&mpp_path, e))?;
    files.push(mpp_path);
    Ok(files)
}

fn write_report(report: &SimulationReport, out: &Path) -> Result<()> {
    let name = &report.scheme;
    let path = out.join(format!("{name}_records.csv"));
    sim::write_records_csv(report, create_file(&path)?).map_err(csv_err(&path))?;
    write_text(
        &out.join(format!("{name}_summary.txt")),
        &sim::summary_kv(report),
    )?;
    if !report.decisions.is_empty() {
        let path = out.join(format!("{name}_decisions.csv"));
        sim::write_decisions_csv(report, create_file(&path)?).map_err(csv_err(&path))?;
    }
    Ok(())
}

/// Runs each configured scheme and writes its records and summary.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<String> {
    cfg.validate()?;
    let trace = cfg.trace()?;
    let setup = cfg.setup(&trace)?;
    let schemes = cfg.schemes()?;
    create_dir(out)?;
    let mut text = String::new();
    for scheme in &schemes {
        let report = sim::run(&trace, &setup, scheme)?;
        write_report(&report, out)?;
        text.push_str(&sim::summary_kv(&report));
        text.push('\n');
    }
    Ok(text)
}

/// Runs two or more schemes over one trace and writes the side-by-side
/// table. `comparison.csv` is deterministic; `timing.csv` holds wall time.
pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<String> {
    cfg.validate()?;
    let schemes = cfg.schemes()?;
    if schemes.len() < 2 {
        return Err(Error::config(
            "schemes",
            "compare needs at least two schemes",
        ));
    }
    let trace = cfg.trace()?;
    let setup = cfg.setup(&trace)?;
    let reports = sim::compare(&trace, &setup, &schemes)?;
    create_dir(out)?;
    for r in &reports {
        write_report(r, out)?;
    }

    let path = out.join("comparison.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record([
        "scheme",
        "energy_output_net_J",
        "energy_output_gross_J",
        "switch_overhead_J",
        "switch_count",
        "invocations",
        "ideal_energy_J",
    ])
    .map_err(csv_err(&path))?;
    for r in &reports {
        w.write_record([
            r.scheme.clone(),
            format!("{:.4}", r.energy_output()),
            format!("{:.4}", r.gross_energy),
            format!("{:.4}", r.switch_overhead),
            r.switch_count.to_string(),
            r.invocations.to_string(),
            format!("{:.4}", r.ideal_energy()),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = out.join("timing.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["scheme", "timing.average_runtime_ms"])
        .map_err(csv_err(&path))?;
    for r in &reports {
        w.write_record([r.scheme.clone(), format!("{:.6}", r.average_runtime_ms())])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let table = sim::comparison_table(&reports);
    write_text(&out.join("comparison.txt"), &table)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStats {
    /// `1 - P_inor / P_oracle` per instance.
    pub gaps: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub p99: f64,
    pub max: f64,
}

impl GapStats {
    pub fn from_gaps(gaps: Vec<f64>) -> Self {
        let mut sorted = gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let pick = |q: f64| {
            if n == 0 {
                0.0
            } else {
                sorted[((q * n as f64).ceil() as usize).clamp(1, n) - 1]
            }
        };
        GapStats {
            mean: if n == 0 {
                0.0
            } else {
                gaps.iter().sum::<f64>() / n as f64
            },
            median: pick(0.5),
            p99: pick(0.99),
            max: sorted.last().copied().unwrap_or(0.0),
            gaps,
        }
    }
}

/// INOR against the exhaustive optimum over seeded random fields.
pub fn oracle_gap_study(
    block: &ValidateBlock,
    teg: &TegParams,
    charger: &ChargerParams,
    tie_break: TieBreak,
    seed: u64,
) -> Result<GapStats> {
    let plant = Plant::new(teg, charger, block.objective);
    let params = ReconfigParams::new(block.n_min, block.n_max)?.with_tie_break(tie_break);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaps = Vec::with_capacity(block.instances);
    for _ in 0..block.instances {
        let field = sim::random_field(&mut rng, block.n_modules);
        let emfs = plant.emfs(&field);
        let fast = plant.score(&reconfig::inor(&field, &plant, &params)?, &emfs);
        let best = plant.score(&reconfig::brute_force_best(&field, &plant, &params)?, &emfs);
        gaps.push(if best > 0.0 { 1.0 - fast / best } else { 0.0 });
    }
    Ok(GapStats::from_gaps(gaps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateReport {
    pub gap: GapStats,
    pub checks: Vec<InvariantCheck>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(InvariantCheck::passed)
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let g = &self.gap;
        let _ = writeln!(
            s,
            "oracle gap over {} fields (1 - P_inor/P_oracle)",
            g.gaps.len()
        );
        let _ = writeln!(s, "  mean   = {:.6}", g.mean);
        let _ = writeln!(s, "  median = {:.6}", g.median);
        let _ = writeln!(s, "  p99    = {:.6}", g.p99);
        let _ = writeln!(s, "  max    = {:.6}", g.max);
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{verdict} {} ({} cases, {} failures)",
                c.name, c.cases, c.failures
            );
        }
        s
    }
}

/// Oracle gap study plus quick randomized invariant checks. Writes
/// `gaps.csv` and `validate.txt`.
pub fn cmd_validate(cfg: &RunConfig, out: &Path) -> Result<ValidateReport> {
    cfg.validate()?;
    let charger = cfg.charger_with_table()?;
    let gap = oracle_gap_study(
        &cfg.validate,
        &cfg.teg,
        &charger,
        cfg.reconfig.tie_break,
        cfg.seed,
    )?;
    let checks = invariant_checks(cfg, &charger)?;
    let report = ValidateReport { gap, checks };

    create_dir(out)?;
    let path = out.join("gaps.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["instance", "gap"])
        .map_err(csv_err(&path))?;
    for (i, g) in report.gap.gaps.iter().enumerate() {
        w.write_record([i.to_string(), format!("{g:.9}")])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_text(&out.join("validate.txt"), &report.text())?;
    Ok(report)
}

fn invariant_checks(cfg: &RunConfig, charger: &ChargerParams) -> Result<Vec<InvariantCheck>> {
    use rand::Rng;

    let cases = cfg.validate.cases.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let teg = &cfg.teg;
    let r = teg.internal_resistance;
    let mut checks = Vec::new();

    let mut fails = 0;
    for _ in 0..cases {
        let thermal = ThermalParams::new(rng.random_range(0.01..3.0), rng.random_range(0.1..2.0))?;
        let ambient = rng.random_range(-10.0..40.0);
        let inlet = ambient + rng.random_range(0.0..80.0);
        let sample = TraceSample {
            time: 0.0,
            coolant_inlet_temp: inlet,
            ambient_temp: ambient,
        };
        let f = thermal::field_from_sample(&thermal, &sample, rng.random_range(1..40))?;
        let bounded = f
            .hot_side_temps
            .iter()
            .all(|t| *t >= ambient && *t <= inlet);
        if !(bounded && f.is_non_increasing()) {
            fails += 1;
        }
    }
    checks.push(InvariantCheck {
        name: "thermal monotonicity and bounds",
        cases,
        failures: fails,
    });

    let mut fails = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..60);
        let c = random_configuration(&mut rng, n);
        let back = Configuration::from_switch_states(&array::switch_states(&c));
        if back != c || back.n_modules() != c.n_modules() {
            fails += 1;
        }
    }
    checks.push(InvariantCheck {
        name: "switch-state bijection",
        cases,
        failures: fails,
    });

    let mut fails = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..30);
        let c = random_configuration(&mut rng, n);
        let emfs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let current = rng.random_range(0.0..5.0);
        let p = array::solve_at_current(&c, &emfs, r, current)?;
        let ok = c.groups().all(|g| {
            let sum: f64 = p.module_currents[g.clone()].iter().sum();
            (sum - current).abs() <= 1e-9 * current.max(1.0)
        });
        if !ok {
            fails += 1;
        }
    }
    checks.push(InvariantCheck {
        name: "group current conservation",
        cases,
        failures: fails,
    });

    let mut fails = 0;
    for _ in 0..cases {
        let len = rng.random_range(1..20);
        let actual: Vec<f64> = (0..len).map(|_| rng.random_range(1.0..100.0)).collect();
        let fc: Vec<f64> = actual
            .iter()
            .map(|a| a * rng.random_range(0.5..1.5))
            .collect();
        let k = rng.random_range(0.01..100.0);
        let scaled_a: Vec<f64> = actual.iter().map(|a| a * k).collect();
        let scaled_f: Vec<f64> = fc.iter().map(|f| f * k).collect();
        let m0 = predictor::mape(&actual, &fc)?;
        let m1 = predictor::mape(&scaled_a, &scaled_f)?;
        if (m0 - m1).abs() > 1e-9 * m0.max(1.0) {
            fails += 1;
        }
    }
    checks.push(InvariantCheck {
        name: "MAPE scale invariance",
        cases,
        failures: fails,
    });

    let mut fails = 0;
    for _ in 0..cases {
        let n = rng.random_range(2..16);
        let field = sim::random_field(&mut rng, n);
        let plant = Plant::new(teg, charger, Objective::ArraySide);
        let params = ReconfigParams::new(1, n)?;
        let cfg_a = reconfig::inor(&field, &plant, &params)?;
        let emfs = plant.emfs(&field);
        let (analytic, _) = array::mpp_power(&cfg_a, &emfs, r);
        let step = rng.random_range(1e-3..5e-2);
        let numeric = array::numeric_mppt(&cfg_a, &emfs, r, step, 1_000_000)?;
        let bound = array::one_step_bound(&cfg_a, &emfs, r, step);
        if (analytic - numeric.point.total_power).abs() > bound + 1e-9 {
            fails += 1;
        }
    }
    checks.push(InvariantCheck {
        name: "perturb-and-observe within one step",
        cases,
        failures: fails,
    });

    let dnor_cases = (cases / 20).max(2);
    let mut fails = 0;
    for _ in 0..dnor_cases {
        let spec = SynthSpec {
            duration_s: 120,
            seed: rng.random(),
            step_sigma_c: 0.5,
            ..SynthSpec::default()
        };
        let trace = thermal::synth_trace(&spec)?;
        let mut setup = SimSetup::with_defaults(24, spec.inlet_c, spec.ambient_c)?;
        let mut last = usize::MAX;
        for energy in [0.0, 0.01, 0.1, 1.0] {
            setup.overhead.per_switch_energy = energy;
            let count = sim::run(&trace, &setup, &SchemeSpec::Dnor { horizon: 2 })?.switch_count;
            if count > last {
                fails += 1;
                break;
            }
            last = count;
        }
    }
    checks.push(InvariantCheck {
        name: "DNOR switch count vs overhead",
        cases: dnor_cases,
        failures: fails,
    });
    Ok(checks)
}

fn random_configuration(rng: &mut impl rand::Rng, n_modules: usize) -> Configuration {
    let mut boundaries = vec![1];
    boundaries.extend((2..=n_modules).filter(|_| rng.random_bool(0.4)));
    Configuration::new(n_modules, boundaries).expect("starts are increasing and in range")
}

/// INOR wall-time versus array size. Writes `scaling.csv`.
pub fn cmd_scaling(cfg: &RunConfig, sizes: &[usize], out: &Path) -> Result<sim::ScalingReport> {
    cfg.validate()?;
    let charger = cfg.charger_with_table()?;
    let plant = Plant::new(&cfg.teg, &charger, cfg.reconfig.objective);
    let params = ReconfigParams::new(cfg.scaling.n_min, cfg.scaling.n_max)?
        .with_tie_break(cfg.reconfig.tie_break);
    let report = sim::measure_runtime(
        Algorithm::Inor,
        sizes,
        cfg.scaling.calls,
        &plant,
        &params,
        cfg.seed,
    )?;
    create_dir(out)?;
    let path = out.join("scaling.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["n_modules", "calls", "timing.median_s"])
        .map_err(csv_err(&path))?;
    for row in &report.rows {
        w.write_record([
            row.n_modules.to_string(),
            row.calls.to_string(),
            format!("{:.9}", row.median_s),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Writes the configured synthetic trace to `out/trace.csv`.
pub fn cmd_synth_trace(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let spec = SynthSpec {
        seed: cfg.seed,
        ..cfg.synth.clone()
    };
    spec.validate("synth")?;
    let trace = thermal::synth_trace(&spec)?;
    create_dir(out)?;
    let path = out.join("trace.csv");
    trace
        .write_csv(create_file(&path)?)
        .map_err(csv_err(&path))?;
    Ok(path)
}
