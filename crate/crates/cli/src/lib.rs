//! Batch experiment runner: declarative configs (TOML or JSON in), JSON
//! reports and CSV data out, deterministic under a mandatory seed.

use anyhow::{anyhow, bail, Context, Result};
use cubelab_core::cubespace::{is_cube, nrp_classes, sample_cube};
use cubelab_core::model::{
    continuity_probe, epsilon_net_report, q_uniqueness_check, TestFamily,
};
use cubelab_core::nilcycle::{extract_nilcycle, verify_nilcycle, Nilcycle};
use cubelab_core::seminorms::{
    gowers_empirical, gowers_naive, gowers_recursive, kronecker_limit_rotation,
    nonconventional_average, Observable,
};
use cubelab_core::systems::{
    coboundary_twist, cyclic_rotation, torus_rotation, weyl_tower, Cocycle, Point,
    SkewExtension, StepMap, StructureGroup, System, GOLDEN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Cyclic {
        n: u64,
        #[serde(default = "default_step")]
        a: u64,
    },
    Torus {
        #[serde(default = "default_alpha_vec")]
        alpha: Vec<f64>,
    },
    SkewTorus {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    Weyl {
        d: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

fn default_step() -> u64 {
    1
}

fn default_alpha() -> f64 {
    GOLDEN
}

fn default_alpha_vec() -> Vec<f64> {
    vec![GOLDEN]
}

impl SystemSpec {
    /// The point system named by this spec (a skew torus is the depth-2
    /// tower).
    pub fn system(&self) -> Result<System> {
        Ok(match self {
            SystemSpec::Cyclic { n, a } => cyclic_rotation(*n, *a),
            SystemSpec::Torus { alpha } => torus_rotation(alpha.clone())?,
            SystemSpec::SkewTorus { alpha } => weyl_tower(2, *alpha)?,
            SystemSpec::Weyl { d, alpha } => weyl_tower(*d, *alpha)?,
        })
    }

    /// The extension named by this spec: a skew torus is the base-phase
    /// cocycle over the rotation, a plain system is its product extension
    /// with circle fiber. An optional twist wraps the cocycle.
    pub fn extension(
        &self,
        twist: Option<&TwistSpec>,
        rng: &mut ChaCha8Rng,
    ) -> Result<SkewExtension> {
        let beta = match self {
            SystemSpec::SkewTorus { alpha } => {
                Cocycle::base_phase(torus_rotation(vec![*alpha])?)?
            }
            SystemSpec::Weyl { d, alpha } => Cocycle::base_phase(weyl_tower(*d, *alpha)?)?,
            SystemSpec::Torus { alpha } => {
                Cocycle::zero(torus_rotation(alpha.clone())?, StructureGroup::circle())
            }
            SystemSpec::Cyclic { n, a } => {
                Cocycle::zero(cyclic_rotation(*n, *a), StructureGroup::circle())
            }
        };
        let beta = match twist {
            Some(t) => coboundary_twist(&beta, t.step_map())?,
            None => beta,
        };
        Ok(cubelab_core::systems::skew_extension(beta, rng)?)
    }
}

/// Named group configs; elements serialize as integer arrays. Used by the
/// cube-group sampling helpers and anywhere a config needs to name a group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic { n: u64 },
    Zd { d: usize },
    FiniteAbelian { moduli: Vec<u64> },
    HeisenbergZ,
}

impl GroupSpec {
    /// Sample a cube-group word over the named group and return the
    /// configuration as JSON (elements as integer arrays).
    pub fn sample_hk_word(
        &self,
        k: usize,
        word_length: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<serde_json::Value> {
        use cubelab_core::groups::{hk_sample, Cyclic, FiniteAbelian, HeisenbergZ, Zd};
        Ok(match self {
            GroupSpec::Cyclic { n } => {
                serde_json::to_value(hk_sample(&Cyclic::new(*n), k, word_length, rng)?)?
            }
            GroupSpec::Zd { d } => {
                serde_json::to_value(hk_sample(&Zd::new(*d), k, word_length, rng)?)?
            }
            GroupSpec::FiniteAbelian { moduli } => serde_json::to_value(hk_sample(
                &FiniteAbelian::new(moduli.clone()),
                k,
                word_length,
                rng,
            )?)?,
            GroupSpec::HeisenbergZ => {
                serde_json::to_value(hk_sample(&HeisenbergZ, k, word_length, rng)?)?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "h", rename_all = "snake_case", deny_unknown_fields)]
pub enum TwistSpec {
    Step { jump: f64, at: f64 },
}

impl TwistSpec {
    pub fn step_map(&self) -> StepMap {
        match self {
            TwistSpec::Step { jump, at } => StepMap { jump: *jump, at: *at },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoSpec {
    Zero,
    /// Closed-form alternating step sum; defaults to the twist's step map.
    Coboundary {
        #[serde(skip_serializing_if = "Option::is_none")]
        jump: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        at: Option<f64>,
    },
    /// Theta-of-lift extraction bound to the extension.
    Extracted {
        #[serde(default = "default_cubes")]
        cubes: usize,
        #[serde(default = "default_fiber")]
        fiber: usize,
    },
}

fn default_cubes() -> usize {
    400
}

fn default_fiber() -> usize {
    3
}

/// Observable spec: the core closed forms plus seeded random sign tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "f", rename_all = "snake_case", deny_unknown_fields)]
pub enum FSpec {
    Char { xi: i64 },
    Quad { a: i64 },
    Arc { lo: f64, hi: f64 },
    Table { values: Vec<f64> },
    Trig { coeffs: Vec<(i64, f64, f64)> },
    RandomSign,
}

impl FSpec {
    pub fn observable(&self, n: Option<u64>, rng: &mut ChaCha8Rng) -> Result<Observable> {
        Ok(match self {
            FSpec::Char { xi } => Observable::Char { xi: *xi },
            FSpec::Quad { a } => Observable::Quad { a: *a },
            FSpec::Arc { lo, hi } => Observable::Arc { lo: *lo, hi: *hi },
            FSpec::Table { values } => Observable::Table { values: values.clone() },
            FSpec::Trig { coeffs } => Observable::Trig { coeffs: coeffs.clone() },
            FSpec::RandomSign => {
                let n = n
                    .ok_or_else(|| anyhow!("field `f`: random_sign needs a finite system"))?;
                Observable::Table {
                    values: (0..n)
                        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                        .collect(),
                }
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twist: Option<TwistSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<RhoSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<FSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fs: Option<Vec<FSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_classes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        parse_config(&text)
    }
}

/// TOML in, with JSON accepted too.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).context("parsing JSON config")
    } else {
        toml::from_str(text).context("parsing TOML config")
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub checks: Vec<CheckResult>,
    pub data: serde_json::Value,
    pub wall_ms: u64,
    pub timestamp: u64,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Report bytes with the volatile fields removed; byte-identical across
    /// reruns of the same config and seed.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_ms");
            obj.remove("timestamp");
        }
        Ok(serde_json::to_vec_pretty(&v)?)
    }
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult { name: name.to_string(), value, tolerance, pass: value <= tolerance }
}

fn check_eq(name: &str, ok: bool) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        value: if ok { 0.0 } else { 1.0 },
        tolerance: 0.0,
        pass: ok,
    }
}

struct CsvSink {
    rows: Vec<String>,
}

impl CsvSink {
    fn new(header: &str) -> CsvSink {
        CsvSink { rows: vec![header.to_string()] }
    }

    fn push(&mut self, row: String) {
        self.rows.push(row);
    }

    fn write(&self, path: Option<&Path>) -> Result<()> {
        if let Some(path) = path {
            std::fs::write(path, self.rows.join("\n") + "\n")
                .with_context(|| format!("writing CSV {}", path.display()))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

fn require<'a, T>(field: Option<&'a T>, name: &str, experiment: &str) -> Result<&'a T> {
    field.ok_or_else(|| anyhow!("config error: `{name}` is required for `{experiment}`"))
}

/// Run one experiment; config errors become `Err`, check failures land in
/// the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = Vec::new();
    let mut data = serde_json::Value::Null;

    match config.experiment.as_str() {
        "gowers" => run_gowers(config, &mut rng, &mut checks, &mut data)?,
        "avg" => run_avg(config, &mut rng, &mut checks, &mut data)?,
        "cubes" => run_cubes(config, &mut rng, &mut checks, &mut data)?,
        "nrp" => run_nrp(config, &mut checks, &mut data)?,
        "nilcycle-extract" => run_extract(config, &mut rng, &mut checks, &mut data)?,
        "nilcycle-verify" => run_verify(config, &mut rng, &mut checks, &mut data)?,
        "model-probe" => run_probe(config, &mut rng, &mut checks, &mut data)?,
        "q-check" => run_qcheck(config, &mut rng, &mut checks, &mut data)?,
        other => bail!("config error: unknown experiment `{other}`"),
    }

    let report = RunReport {
        version: VERSION.to_string(),
        experiment: config.experiment.clone(),
        seed: config.seed,
        config: serde_json::to_value(config)?,
        checks,
        data,
        wall_ms: t0.elapsed().as_millis() as u64,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs(),
    };
    if let Some(out) = &config.out {
        std::fs::write(out, serde_json::to_vec_pretty(&report)?)
            .with_context(|| format!("writing report {}", out.display()))?;
    }
    Ok(report)
}

fn run_gowers(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let spec = require(config.system.as_ref(), "system", "gowers")?;
    let SystemSpec::Cyclic { n, .. } = spec else {
        bail!("config error: `system` must be cyclic for `gowers`");
    };
    let n = *n;
    let k = *require(config.k.as_ref(), "k", "gowers")?;
    let fspec = require(config.f.as_ref(), "f", "gowers")?;
    let observable = fspec.observable(Some(n), rng)?;
    let table = observable.table_zn(n)?;

    let mut csv = CsvSink::new("method,k,N,value,stderr,samples,seed");
    let mut values = serde_json::Map::new();

    let naive = match gowers_naive(&table, k) {
        Ok(rep) => {
            csv.push(format!("naive,{k},{n},{:.15e},,,{}", rep.value, config.seed));
            values.insert("naive".into(), rep.value.into());
            Some(rep.value)
        }
        Err(cubelab_core::Error::SizeCap(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let recursive = match gowers_recursive(&table, k) {
        Ok(rep) => {
            csv.push(format!("recursive,{k},{n},{:.15e},,,{}", rep.value, config.seed));
            values.insert("recursive".into(), rep.value.into());
            Some(rep.value)
        }
        Err(cubelab_core::Error::SizeCap(_)) => None,
        Err(e) => return Err(e.into()),
    };
    if naive.is_none() && recursive.is_none() {
        bail!("config error: `k`/`N` exceed both evaluation caps");
    }
    if let (Some(a), Some(b)) = (naive, recursive) {
        checks.push(check("naive_vs_recursive", (a - b).abs(), config.tol.unwrap_or(1e-10)));
    }
    if let Some(samples) = config.samples {
        let sys = spec.system()?;
        let rep = gowers_empirical(&sys, &observable, k, samples, rng)?;
        csv.push(format!(
            "empirical,{k},{n},{:.15e},{:.6e},{samples},{}",
            rep.value,
            rep.stderr.unwrap_or(0.0),
            config.seed
        ));
        values.insert("empirical".into(), rep.value.into());
        if let Some(exact) = recursive.or(naive) {
            let gap = (rep.value.powi(1 << k) - exact.powi(1 << k)).abs();
            checks.push(check(
                "empirical_vs_exact",
                gap,
                3.0 * rep.stderr.unwrap_or(0.0) + 1e-12,
            ));
        }
    }
    if let Some(expect) = config.expect {
        let got = recursive.or(naive).unwrap();
        checks.push(check(
            "expected_value",
            (got - expect).abs(),
            config.expect_tol.unwrap_or(1e-9),
        ));
    }
    csv.write(config.csv.as_deref())?;
    *data = serde_json::json!({ "values": values, "rows": csv.rows });
    Ok(())
}

fn run_avg(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let spec = require(config.system.as_ref(), "system", "avg")?;
    let sys = spec.system()?;
    let fspecs = require(config.fs.as_ref(), "fs", "avg")?;
    let n_max = config.n.unwrap_or(100_000);
    let fs: Vec<Observable> = fspecs
        .iter()
        .map(|f| f.observable(sys.point_count(), rng))
        .collect::<Result<_>>()?;
    let x0 = match (&sys, config.x0) {
        (System::Cyclic { n, .. }, Some(x)) => Point::Cyclic((x as u64) % n),
        (System::Torus { alpha }, Some(x)) if alpha.len() == 1 => Point::Torus(vec![x]),
        _ => sys.sample(rng),
    };
    let marks = config
        .checkpoints
        .clone()
        .unwrap_or_else(|| (1..=10).map(|i| i * n_max / 10).collect());
    let out = nonconventional_average(&sys, &x0, &fs, n_max, &marks)?;

    let predicted = match (&sys, &x0) {
        (System::Torus { .. }, Point::Torus(v)) => {
            kronecker_limit_rotation(&fs).ok().map(|limit| limit.eval(v[0]))
        }
        _ => None,
    };

    let mut csv = CsvSink::new("N,re,im,pred_re,pred_im");
    for (n, a) in &out {
        match predicted {
            Some(p) => csv.push(format!(
                "{n},{:.15e},{:.15e},{:.15e},{:.15e}",
                a.re, a.im, p.re, p.im
            )),
            None => csv.push(format!("{n},{:.15e},{:.15e},,", a.re, a.im)),
        }
    }
    csv.write(config.csv.as_deref())?;
    if let Some(p) = predicted {
        let (_, last) = out.last().unwrap();
        checks.push(check("average_vs_limit", (last - p).norm(), config.tol.unwrap_or(0.02)));
    }
    *data = serde_json::json!({ "rows": csv.rows });
    Ok(())
}

fn run_cubes(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let spec = require(config.system.as_ref(), "system", "cubes")?;
    let sys = spec.system()?;
    let k = *require(config.k.as_ref(), "k", "cubes")?;
    let samples = config.samples.unwrap_or(1000);
    let tol = config.tol.unwrap_or(1e-9);
    let mut cubes = Vec::new();
    let mut failures = 0usize;
    let mut supported = true;
    for _ in 0..samples {
        let c = sample_cube(&sys, k, rng)?;
        match is_cube(&sys, &c, tol) {
            Ok(ok) => {
                if !ok {
                    failures += 1;
                }
            }
            Err(cubelab_core::Error::UnsupportedSystem(_)) => supported = false,
            Err(e) => return Err(e.into()),
        }
        if cubes.len() < 32 {
            cubes.push(c);
        }
    }
    if supported {
        checks.push(check_eq("membership_all_samples", failures == 0));
    }
    *data = serde_json::json!({
        "samples": samples,
        "membership_supported": supported,
        "failures": failures,
        "cubes": cubes,
    });
    Ok(())
}

fn run_nrp(
    config: &ExperimentConfig,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let spec = require(config.system.as_ref(), "system", "nrp")?;
    let sys = spec.system()?;
    let k = *require(config.k.as_ref(), "k", "nrp")?;
    let report = nrp_classes(&sys, k)?;
    checks.push(check_eq("classes_action_invariant", report.action_invariant));
    if let Some(expect) = config.expect_classes {
        checks.push(check_eq(
            "expected_class_count",
            report.classes.len() as u64 == expect,
        ));
    }
    *data = serde_json::json!({
        "k": report.k,
        "classes": report.classes,
        "refines_previous": report.refines_previous,
    });
    Ok(())
}

fn build_extension(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<SkewExtension> {
    let spec = require(config.system.as_ref(), "system", &config.experiment)?;
    spec.extension(config.twist.as_ref(), rng)
}

fn build_rho(
    config: &ExperimentConfig,
    ext: &SkewExtension,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Nilcycle> {
    let spec = require(config.rho.as_ref(), "rho", &config.experiment)?;
    Ok(match spec {
        RhoSpec::Zero => Nilcycle::zero(ext.clone(), k),
        RhoSpec::Coboundary { jump, at } => {
            let h = match (&config.twist, jump, at) {
                (_, Some(j), Some(a)) => StepMap { jump: *j, at: *a },
                (Some(t), _, _) => t.step_map(),
                _ => bail!(
                    "config error: `rho.jump`/`rho.at` or a `twist` is required for a coboundary"
                ),
            };
            Nilcycle::coboundary(ext.clone(), k, h)
        }
        RhoSpec::Extracted { cubes, fiber } => {
            let (rho, _) = extract_nilcycle(ext, k, *cubes, *fiber, rng)?;
            rho
        }
    })
}

fn run_extract(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let ext = build_extension(config, rng)?;
    let k = *require(config.k.as_ref(), "k", "nilcycle-extract")?;
    let n_cubes = config.cubes.unwrap_or(1000);
    let n_fiber = config.fiber.unwrap_or(4);
    let tol = config.tol.unwrap_or(1e-6);
    match extract_nilcycle(&ext, k, n_cubes, n_fiber, rng) {
        Ok((_, rep)) => {
            checks.push(check("fiber_constancy", rep.fiber_dev, tol));
            checks.push(check("section_consistency", rep.section_dev, tol));
            let flagged = rep.flagged_bins as f64 / rep.bins.len().max(1) as f64;
            checks.push(check("flagged_bin_fraction", flagged, 0.02));
            let mut csv = CsvSink::new("bin,count,value,max_dev,flagged");
            for b in &rep.bins {
                let key: Vec<String> = b.key.iter().map(|x| x.to_string()).collect();
                csv.push(format!(
                    "{},{},{},{:.3e},{}",
                    key.join(";"),
                    b.count,
                    serde_json::to_string(&b.value)?,
                    b.max_dev,
                    b.flagged
                ));
            }
            csv.write(config.csv.as_deref())?;
            *data = serde_json::json!({
                "degree": rep.degree,
                "n_cubes": rep.n_cubes,
                "n_fiber": rep.n_fiber,
                "fiber_dev": rep.fiber_dev,
                "section_dev": rep.section_dev,
                "sup_value": rep.sup_value,
                "bins": rep.bins.len(),
                "flagged_bins": rep.flagged_bins,
            });
        }
        Err(cubelab_core::Error::FiberNotConstant(dev)) => {
            checks.push(check("fiber_constancy", dev, tol));
            *data = serde_json::json!({ "fiber_dev": dev });
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn run_verify(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let ext = build_extension(config, rng)?;
    let k = *require(config.k.as_ref(), "k", "nilcycle-verify")?;
    let rho = build_rho(config, &ext, k, rng)?;
    let samples = config.samples.unwrap_or(10_000);
    let tol = config.tol.unwrap_or(1e-6);
    let rep = verify_nilcycle(&rho, &ext, samples, tol, rng)?;
    for c in &rep.checks {
        checks.push(check(&c.identity, c.max_dev, tol));
    }
    *data = serde_json::json!({
        "degree": rep.degree,
        "tolerance": rep.tolerance,
        "identities": rep.checks.iter().map(|c| serde_json::json!({
            "identity": c.identity,
            "max_dev": c.max_dev,
            "n": c.n,
            "seed": config.seed,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
    });
    Ok(())
}

fn run_probe(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let ext = build_extension(config, rng)?;
    let k = *require(config.k.as_ref(), "k", "model-probe")?;
    let rho = build_rho(config, &ext, k, rng)?;
    let family = TestFamily::default_for(ext.fiber(), k + 1);
    let deltas = config.deltas.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.02, 0.01]);
    let candidates = config.candidates.unwrap_or(4000);
    let samples = config.samples.unwrap_or(256);
    let table = continuity_probe(&rho, &ext, &family, &deltas, candidates, samples, rng)?;
    checks.push(check_eq("bundle_modulus_shrinks", table.bundle_shrinks()));
    if let Some(floor) = config.naive_floor {
        checks.push(check_eq("naive_modulus_floor", table.naive_stays_above(floor)));
    }

    let epsilons = config.epsilons.clone().unwrap_or_else(|| vec![1.0, 0.5, 0.25]);
    let net = epsilon_net_report(&rho, &ext, &family, &epsilons, 150, samples, rng)?;
    let mut csv = CsvSink::new("eps,net_size");
    for (eps, size) in &net {
        csv.push(format!("{eps},{size}"));
    }
    csv.write(config.csv.as_deref())?;

    *data = serde_json::json!({
        "delta_grid": table.deltas,
        "modulus": { "bundle": table.bundle, "naive": table.naive },
        "pairs": { "bundle": table.bundle_pairs, "naive": table.naive_pairs },
        "seed": config.seed,
        "epsilon_net": net,
    });
    Ok(())
}

fn run_qcheck(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    checks: &mut Vec<CheckResult>,
    data: &mut serde_json::Value,
) -> Result<()> {
    let ext = build_extension(config, rng)?;
    let k = *require(config.k.as_ref(), "k", "q-check")?;
    let rho = build_rho(config, &ext, k, rng)?;
    let samples = config.samples.unwrap_or(1000);
    let tol = config.tol.unwrap_or(1e-6);
    let dev = q_uniqueness_check(&rho, &ext, samples, rng)?;
    checks.push(check("q_uniqueness", dev, tol));
    *data = serde_json::json!({ "max_dev": dev, "samples": samples });
    Ok(())
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    pub runs: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub runs: Vec<SuiteEntry>,
    pub all_pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub config: PathBuf,
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Worker cap from `CUBELAB_THREADS`, default 1.
pub fn worker_count() -> usize {
    std::env::var("CUBELAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

pub fn run_suite(manifest_path: &Path) -> Result<SuiteReport> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let manifest: SuiteManifest = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).context("parsing JSON manifest")?
    } else {
        toml::from_str(&text).context("parsing TOML manifest")?
    };
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let paths: Vec<PathBuf> = manifest
        .runs
        .iter()
        .map(|p| if p.is_absolute() { p.clone() } else { base.join(p) })
        .collect();

    let workers = worker_count().min(paths.len().max(1));
    let mut entries: Vec<Option<SuiteEntry>> = Vec::new();
    entries.resize_with(paths.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let entries_mutex = std::sync::Mutex::new(&mut entries);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let path = &paths[i];
                let entry = match ExperimentConfig::load(path).and_then(|cfg| {
                    let report = run(&cfg)?;
                    Ok((cfg, report))
                }) {
                    Ok((cfg, report)) => SuiteEntry {
                        config: path.clone(),
                        experiment: cfg.experiment,
                        pass: report.all_pass(),
                        checks: report.checks,
                        error: None,
                    },
                    Err(e) => SuiteEntry {
                        config: path.clone(),
                        experiment: String::new(),
                        pass: false,
                        checks: Vec::new(),
                        error: Some(format!("{e:#}")),
                    },
                };
                entries_mutex.lock().unwrap()[i] = Some(entry);
            });
        }
    });
    let runs: Vec<SuiteEntry> = entries.into_iter().map(|e| e.unwrap()).collect();
    let all_pass = runs.iter().all(|r| r.pass);
    Ok(SuiteReport { version: VERSION.to_string(), runs, all_pass })
}

/// Summary CSV of a suite report.
pub fn suite_csv(report: &SuiteReport) -> String {
    let mut rows = vec!["config,experiment,check,value,tolerance,pass".to_string()];
    for run in &report.runs {
        if run.checks.is_empty() {
            rows.push(format!("{},{},-,,,{}", run.config.display(), run.experiment, run.pass));
        }
        for c in &run.checks {
            rows.push(format!(
                "{},{},{},{:.6e},{:.6e},{}",
                run.config.display(),
                run.experiment,
                c.name,
                c.value,
                c.tolerance,
                c.pass
            ));
        }
    }
    rows.join("\n") + "\n"
}

/// The identities and gates the runner can test, printed by `--list-checks`.
pub fn list_checks() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "gowers/naive_vs_recursive",
            "box-norm averages agree across the two evaluation orders",
        ),
        ("gowers/expected_value", "seminorm value against a closed-form prediction"),
        (
            "gowers/empirical_vs_exact",
            "Monte-Carlo cube integral against the exact value (3 sigma)",
        ),
        (
            "avg/average_vs_limit",
            "A_N = (1/N) Σ_n Π_i f_i(T^{in}x) against the rotation resonance sum E_t Π_i f_i(x+it)",
        ),
        (
            "cubes/membership_all_samples",
            "sampled orbit cubes satisfy the affine/quadratic membership solve",
        ),
        ("nrp/classes_action_invariant", "x ~_k y classes map onto classes under the action"),
        (
            "nrp/expected_class_count",
            "partition size of the relation (x,...,x,y) in C^{k+1}",
        ),
        (
            "nilcycle-extract/fiber_constancy",
            "theta of independent lifts over one cube is constant",
        ),
        (
            "nilcycle-extract/section_consistency",
            "theta of dynamical lifts equals the pointwise twist-section sum",
        ),
        (
            "nilcycle-extract/flagged_bin_fraction",
            "parameter bins with unstable fiber statistics stay under 2%",
        ),
        ("nilcycle-verify/cube_invariance", "rho(sigma c) = sgn(sigma)·rho(c)"),
        ("nilcycle-verify/glueing", "rho(b || c) = rho(b) + rho(c) on glueable pairs"),
        (
            "nilcycle-verify/equivariance",
            "rho(g c) = rho(c) + Σ_v (-1)^{|v|} beta(g_v, c_v)",
        ),
        (
            "nilcycle-verify/tricube_sum",
            "Σ_v (-1)^{|v|} rho(psi_v(t)) = rho(omega(t))",
        ),
        (
            "model-probe/bundle_modulus_shrinks",
            "image distances shrink with delta under the test-functional pseudometric",
        ),
        (
            "model-probe/naive_modulus_floor",
            "the product-metric modulus stays above the floor (discontinuity witness)",
        ),
        (
            "q-check/q_uniqueness",
            "the base-vertex fiber value is determined by Σ_v (-1)^{|v|} a_v = rho(c)",
        ),
    ]
}
