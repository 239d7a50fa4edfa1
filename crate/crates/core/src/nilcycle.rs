//! Nilcycles: maps `ρ` from `(k+1)`-cubes of the base system into the
//! structure group of an extension, satisfying cube invariance with sign,
//! glueing additivity, and a theta-compatible measure decomposition.
//!
//! Extraction realizes `ρ(c) = θ(a_c)` where `a_c` is the fiber configuration
//! of any lifted cube over `c`: lifts are produced in closed form from the
//! extension's cocycle along orbit words, jittered by the polynomial fiber
//! degrees of freedom of the cube closure, and `θ` of the result must be
//! constant over the fiber. The residual discontinuous part of `θ` comes
//! entirely from the coboundary twist layers of the cocycle, which is what
//! the extracted evaluator computes pointwise; extraction cross-validates the
//! two routes on every sampled cube.

use crate::cube::{act_iso, glue, theta, CubeConfig, CubeIsomorphism, Face, Vertex};
use crate::cubespace::{
    glueable_pair_sample, sample_cube, tricube_sample, PointCubeConfig, ZWord,
};
use crate::error::{Error, Result};
use crate::groups::{edge_decompose, edge_sum, Group};
use crate::systems::{CocycleKind, FiberValue, Point, SkewExtension, StepMap, StructureGroup, System};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default gate for closed-form identity checks.
pub const TAU_AXIOM: f64 = 1e-6;

/// How a nilcycle evaluates on cubes.
#[derive(Clone, Debug)]
pub enum Evaluator {
    /// `ρ ≡ 0`.
    Zero,
    /// `ρ(c) = Σ_v (-1)^{|v|} h(c_v)` for an explicit step map; the closed
    /// form of the obstruction carried by a coboundary twist.
    CoboundarySum(StepMap),
    /// Theta of a lifted fiber over `c`, bound to the extension: the sum of
    /// the coboundary-sum contributions of all twist layers in the cocycle.
    SectionTheta,
    /// Lookup table over a finite cube set.
    Table(HashMap<Vec<u64>, FiberValue>),
    /// A deliberately broken evaluator for mutation tests: adds
    /// `scale · x_0` (first coordinate of the base vertex) to the inner
    /// value, which violates glueing additivity.
    BasePerturbation { inner: Box<Evaluator>, scale: f64 },
}

/// A degree-`k` nilcycle attached to a skew extension, evaluated on
/// `(k+1)`-dimensional cubes of the base system.
#[derive(Clone, Debug)]
pub struct Nilcycle {
    degree: usize,
    extension: SkewExtension,
    evaluator: Evaluator,
}

impl Nilcycle {
    pub fn new(degree: usize, extension: SkewExtension, evaluator: Evaluator) -> Nilcycle {
        Nilcycle { degree, extension, evaluator }
    }

    pub fn zero(extension: SkewExtension, degree: usize) -> Nilcycle {
        Nilcycle::new(degree, extension, Evaluator::Zero)
    }

    pub fn coboundary(extension: SkewExtension, degree: usize, h: StepMap) -> Nilcycle {
        Nilcycle::new(degree, extension, Evaluator::CoboundarySum(h))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Cube dimension the evaluator expects.
    pub fn cube_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn extension(&self) -> &SkewExtension {
        &self.extension
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn fiber(&self) -> &StructureGroup {
        self.extension.fiber()
    }

    pub fn base(&self) -> &System {
        self.extension.base()
    }

    pub fn eval(&self, c: &PointCubeConfig) -> Result<FiberValue> {
        if c.dim() != self.cube_dim() {
            return Err(Error::DimensionMismatch { expected: self.cube_dim(), got: c.dim() });
        }
        self.eval_with(&self.evaluator, c)
    }

    fn eval_with(&self, ev: &Evaluator, c: &PointCubeConfig) -> Result<FiberValue> {
        let a = self.fiber();
        match ev {
            Evaluator::Zero => Ok(a.identity()),
            Evaluator::CoboundarySum(h) => Ok(self.alternating_h_sum(h, c)),
            Evaluator::SectionTheta => {
                let mut acc = a.identity();
                for h in twist_layers(self.extension.cocycle().kind()) {
                    acc = a.op(&acc, &self.alternating_h_sum(h, c));
                }
                Ok(acc)
            }
            Evaluator::Table(map) => {
                let key: Vec<u64> = c.values().iter().map(|p| p.as_cyclic()).collect();
                map.get(&key).cloned().ok_or(Error::TableMiss)
            }
            Evaluator::BasePerturbation { inner, scale } => {
                let base_val = self.eval_with(inner, c)?;
                let x0 = match c.value(Vertex::zero(c.dim())?) {
                    Point::Torus(v) => v[0],
                    Point::Cyclic(u) => {
                        *u as f64 / self.base().point_count().unwrap_or(1) as f64
                    }
                };
                Ok(a.op(&base_val, &FiberValue::circle(scale * x0)))
            }
        }
    }

    fn alternating_h_sum(&self, h: &StepMap, c: &PointCubeConfig) -> FiberValue {
        let a = self.fiber();
        let base = self.base();
        let mut acc = a.identity();
        for (v, p) in c.iter() {
            let val = FiberValue::circle(h.eval(base, p));
            acc = if v.sign() > 0 { a.op(&acc, &val) } else { a.op(&acc, &a.inv(&val)) };
        }
        acc
    }
}

/// The step maps of all coboundary-twist layers in a cocycle.
fn twist_layers(kind: &CocycleKind) -> Vec<&StepMap> {
    let mut out = Vec::new();
    let mut cur = kind;
    while let CocycleKind::Twisted { inner, h } = cur {
        out.push(h);
        cur = inner;
    }
    out
}

/// Polynomial degree of the fiber freedom in the cube closure of the
/// extension. A base-phase cocycle raises the tower depth of the base by
/// one; rotations count as depth 1.
fn fiber_poly_degree(ext: &SkewExtension) -> Result<usize> {
    fn base_depth(sys: &System) -> usize {
        match sys {
            System::Cyclic { .. } | System::Torus { .. } => 1,
            System::Weyl { d, .. } => *d,
        }
    }
    fn kind_degree(base: &System, kind: &CocycleKind) -> Result<usize> {
        match kind {
            CocycleKind::Zero => Ok(0),
            CocycleKind::Constant(_) => Ok(1),
            CocycleKind::BasePhase => Ok(base_depth(base) + 1),
            CocycleKind::Twisted { inner, .. } => kind_degree(base, inner),
            CocycleKind::Broken => Err(Error::InvalidInput(
                "a broken cocycle defines no extension to extract from".into(),
            )),
        }
    }
    kind_degree(ext.base(), ext.cocycle().kind())
}

/// A lifted fiber configuration over the word-realized base cube:
/// `u_0 + β(n_v, x)` plus a random polynomial fiber element of the closure's
/// admissible degree.
pub fn sample_lift(
    ext: &SkewExtension,
    word: &ZWord,
    base_point: &Point,
    rng: &mut impl Rng,
) -> Result<CubeConfig<FiberValue>> {
    let a = ext.fiber();
    let beta = ext.cocycle();
    let dim = word.dim();
    let u0 = a.haar(rng);
    let mut lift = CubeConfig::from_fn(dim, |v| {
        a.op(&u0, &beta.eval(word.value(v), base_point))
    })?;

    let degree = fiber_poly_degree(ext)?;
    if degree >= 1 {
        // Coefficients for each monomial Π_{j in S} v_j with 1 <= |S| <= degree.
        for mask in 1u32..(1 << dim) {
            if mask.count_ones() as usize > degree {
                continue;
            }
            let c = match beta.kind() {
                CocycleKind::Constant(lambda) => {
                    let m = rng.gen_range(-50..=50i64);
                    a.scale(m, lambda)
                }
                _ => a.haar(rng),
            };
            lift = CubeConfig::from_fn(dim, |v| {
                if v.index() as u32 & mask == mask {
                    a.op(lift.value(v), &c)
                } else {
                    lift.value(v).clone()
                }
            })?;
        }
    }
    Ok(lift)
}

/// Statistics of one parameter bin of the extraction grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinStat {
    pub key: Vec<u16>,
    pub count: usize,
    /// Representative extracted value (circle coordinates for torus fibers).
    pub value: FiberValue,
    /// Max deviation of extracted values within the bin.
    pub max_dev: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractionReport {
    pub degree: usize,
    pub n_cubes: usize,
    pub n_fiber: usize,
    /// Max theta deviation between lifts over the same cube.
    pub fiber_dev: f64,
    /// Max deviation between the dynamical route (theta of a word lift) and
    /// the pointwise section evaluator.
    pub section_dev: f64,
    pub bins: Vec<BinStat>,
    pub flagged_bins: usize,
    /// Sup of the extracted values over all sampled cubes (distance to 0).
    pub sup_value: f64,
}

const EXTRACTION_GRID: f64 = 256.0;

fn bin_key(sys: &System, c: &PointCubeConfig) -> Vec<u16> {
    let mut key = Vec::new();
    for p in c.values() {
        match p {
            Point::Cyclic(u) => {
                let n = sys.point_count().unwrap_or(1);
                key.push(((*u as f64 / n as f64) * EXTRACTION_GRID) as u16);
            }
            Point::Torus(v) => {
                for x in v {
                    key.push(((x * EXTRACTION_GRID) as u16).min(EXTRACTION_GRID as u16 - 1));
                }
            }
        }
    }
    key
}

/// Extract the nilcycle of an extension by sampling `θ` of lifted cubes.
///
/// Base cubes are drawn as orbit words so exact lifts exist; every cube gets
/// `n_fiber` independent lifts whose `θ` values must agree, and cubes are
/// pooled on a grid of mesh 1/256 in their vertex coordinates. Fails when
/// the fiber statistic is not constant, which is precisely the case where
/// the extension carries no nilcycle at this degree.
pub fn extract_nilcycle(
    ext: &SkewExtension,
    k: usize,
    n_cubes: usize,
    n_fiber: usize,
    rng: &mut impl Rng,
) -> Result<(Nilcycle, ExtractionReport)> {
    if k > 3 {
        return Err(Error::DimensionOutOfRange { dim: k, max: 3 });
    }
    if !matches!(
        ext.base(),
        System::Cyclic { .. } | System::Torus { .. } | System::Weyl { d: 2, .. }
    ) {
        return Err(Error::UnsupportedSystem(
            "extraction needs a rotation or depth-2 tower base".into(),
        ));
    }
    let dim = k + 1;
    let a = ext.fiber();
    let candidate = Nilcycle::new(k, ext.clone(), Evaluator::SectionTheta);

    let mut fiber_dev: f64 = 0.0;
    let mut section_dev: f64 = 0.0;
    let mut sup_value: f64 = 0.0;
    let mut bins: HashMap<Vec<u16>, (FiberValue, usize, f64)> = HashMap::new();

    for _ in 0..n_cubes.max(1) {
        let x = ext.base().sample(rng);
        let word = ZWord::sample(dim, 20, rng);
        let cube = CubeConfig::from_fn(dim, |v| ext.base().act(word.value(v), &x))?;

        let mut first: Option<FiberValue> = None;
        for _ in 0..n_fiber.max(1) {
            let lift = sample_lift(ext, &word, &x, rng)?;
            let t = theta(a, &lift)?;
            match &first {
                None => first = Some(t),
                Some(f) => fiber_dev = fiber_dev.max(a.dist(f, &t)),
            }
        }
        let value = first.expect("at least one lift");
        // Cross-validate against the pointwise section evaluator.
        let section = candidate.eval(&cube)?;
        section_dev = section_dev.max(a.dist(&value, &section));
        sup_value = sup_value.max(a.dist(&value, &a.identity()));

        let key = bin_key(ext.base(), &cube);
        match bins.get_mut(&key) {
            None => {
                bins.insert(key, (value, 1, 0.0));
            }
            Some((rep, count, dev)) => {
                *dev = dev.max(a.dist(rep, &value));
                *count += 1;
            }
        }
    }

    let mut bin_stats: Vec<BinStat> = bins
        .into_iter()
        .map(|(key, (value, count, max_dev))| BinStat {
            key,
            count,
            value,
            max_dev,
            flagged: max_dev > TAU_AXIOM,
        })
        .collect();
    bin_stats.sort_by(|a, b| a.key.cmp(&b.key));
    let flagged_bins = bin_stats.iter().filter(|b| b.flagged).count();

    let report = ExtractionReport {
        degree: k,
        n_cubes,
        n_fiber,
        fiber_dev,
        section_dev,
        bins: bin_stats,
        flagged_bins,
        sup_value,
    };
    if fiber_dev > TAU_AXIOM || section_dev > TAU_AXIOM {
        return Err(Error::FiberNotConstant(fiber_dev.max(section_dev)));
    }
    Ok((candidate, report))
}

/// One verified identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub max_dev: f64,
    pub n: usize,
    pub pass: bool,
}

/// Deviations of the four checkable nilcycle identities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NilcycleReport {
    pub degree: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
}

impl NilcycleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.identity == name)
    }
}

fn signed(a: &StructureGroup, sign: i32, v: &FiberValue) -> FiberValue {
    if sign > 0 {
        v.clone()
    } else {
        a.inv(v)
    }
}

/// Check the four identities of a nilcycle against an extension:
///
/// 1. cube invariance `ρ(σc) = sgn(σ)·ρ(c)`,
/// 2. glueing `ρ(b ∥ c) = ρ(b) + ρ(c)`,
/// 3. equivariance `ρ(g c) = ρ(c) + Σ_v (-1)^{|v|} β(g_v, c_v)`,
/// 4. the tricube alternating sum `Σ_v (-1)^{|v|} ρ(ψ_v(t)) = ρ(ω(t))`.
pub fn verify_nilcycle(
    rho: &Nilcycle,
    ext: &SkewExtension,
    n_samples: usize,
    tolerance: f64,
    rng: &mut impl Rng,
) -> Result<NilcycleReport> {
    let dim = rho.cube_dim();
    let a = rho.fiber();
    let base = rho.base();
    let isos = CubeIsomorphism::all(dim)?;

    let mut dev_iso: f64 = 0.0;
    let mut dev_glue: f64 = 0.0;
    let mut dev_equiv: f64 = 0.0;
    let mut dev_tri: f64 = 0.0;

    for _ in 0..n_samples {
        // (1) Cube invariance under a random isomorphism.
        let c = sample_cube(base, dim, rng)?;
        let sigma = &isos[rng.gen_range(0..isos.len())];
        let lhs = rho.eval(&act_iso(&c, sigma)?)?;
        let rhs = signed(a, sigma.sgn(), &rho.eval(&c)?);
        dev_iso = dev_iso.max(a.dist(&lhs, &rhs));

        // (2) Glueing additivity on a glueable pair.
        let (b, c2) = glueable_pair_sample(base, rho.degree(), rng)?;
        let glued = glue(&b, &c2, |p, q| base.dist(p, q), 1e-9)?;
        let lhs = rho.eval(&glued)?;
        let rhs = a.op(&rho.eval(&b)?, &rho.eval(&c2)?);
        dev_glue = dev_glue.max(a.dist(&lhs, &rhs));

        // (3) Equivariance along a cube-group word.
        let c = sample_cube(base, dim, rng)?;
        let g = ZWord::sample(dim, 20, rng);
        let moved = g.act(base, &c)?;
        let mut beta_sum = a.identity();
        for (v, p) in c.iter() {
            let b = ext.cocycle().eval(g.value(v), p);
            beta_sum = a.op(&beta_sum, &signed(a, v.sign(), &b));
        }
        let lhs = rho.eval(&moved)?;
        let rhs = a.op(&rho.eval(&c)?, &beta_sum);
        dev_equiv = dev_equiv.max(a.dist(&lhs, &rhs));

        // (4) Tricube alternating sum.
        let t = tricube_sample(base, dim, rng)?;
        let mut acc = a.identity();
        for v in crate::cube::vertices(dim)? {
            let val = rho.eval(&t.psi(v)?)?;
            acc = a.op(&acc, &signed(a, v.sign(), &val));
        }
        let rhs = rho.eval(&t.omega()?)?;
        dev_tri = dev_tri.max(a.dist(&acc, &rhs));
    }

    let mk = |name: &str, dev: f64| IdentityCheck {
        identity: name.to_string(),
        max_dev: dev,
        n: n_samples,
        pass: dev <= tolerance,
    };
    Ok(NilcycleReport {
        degree: rho.degree(),
        tolerance,
        checks: vec![
            mk("cube_invariance", dev_iso),
            mk("glueing", dev_glue),
            mk("equivariance", dev_equiv),
            mk("tricube_sum", dev_tri),
        ],
    })
}

/// Split a fiber configuration as `a = d + u` with `d` carrying `θ(a)` at
/// the top vertex (signed so `θ(d) = θ(a)`) and `u` in the kernel of `θ`,
/// returned through its edge decomposition.
pub fn kernel_project(
    a: &StructureGroup,
    cfg: &CubeConfig<FiberValue>,
) -> Result<(FiberValue, Vec<(FiberValue, Face)>)> {
    let t = theta(a, cfg)?;
    let dim = cfg.dim();
    let top = Vertex::top(dim)?;
    let d_top = signed(a, top.sign(), &t);
    let mut u = cfg.clone();
    u.set(top, a.sub(cfg.value(top), &d_top));
    let edges = edge_decompose(a, &u)?;
    Ok((t, edges))
}

/// Reassemble the output of [`kernel_project`].
pub fn kernel_unproject(
    a: &StructureGroup,
    dim: usize,
    t: &FiberValue,
    edges: &[(FiberValue, Face)],
) -> Result<CubeConfig<FiberValue>> {
    let top = Vertex::top(dim)?;
    let d_top = signed(a, top.sign(), t);
    let mut out = edge_sum(a, dim, edges)?;
    out.set(top, a.op(out.value(top), &d_top));
    Ok(out)
}

/// Convenience: sample an orbit cube of the extension itself (a lifted cube
/// through the dynamics, no closure jitter).
pub fn orbit_lift_sample(
    ext: &SkewExtension,
    dim: usize,
    range: i64,
    rng: &mut impl Rng,
) -> (PointCubeConfig, CubeConfig<FiberValue>) {
    let x = ext.base().sample(rng);
    let u0 = ext.fiber().haar(rng);
    let w = ZWord::sample(dim, range, rng);
    let base = CubeConfig::from_fn(dim, |v| ext.base().act(w.value(v), &x))
        .expect("dimension bounded by caller");
    let fiber = CubeConfig::from_fn(dim, |v| {
        ext.fiber().op(&u0, &ext.cocycle().eval(w.value(v), &x))
    })
    .expect("dimension bounded by caller");
    (base, fiber)
}

/// Max distance between two nilcycles on sampled cubes (diagnostic).
pub fn nilcycle_distance(
    p: &Nilcycle,
    q: &Nilcycle,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if p.cube_dim() != q.cube_dim() {
        return Err(Error::DimensionMismatch { expected: p.cube_dim(), got: q.cube_dim() });
    }
    let a = p.fiber();
    let mut dev: f64 = 0.0;
    for _ in 0..n_samples {
        let c = sample_cube(p.base(), p.cube_dim(), rng)?;
        dev = dev.max(a.dist(&p.eval(&c)?, &q.eval(&c)?));
    }
    Ok(dev)
}

/// The orbit-sampling route used by tests: theta of a dynamical lift, with
/// no jitter.
pub fn orbit_theta(ext: &SkewExtension, dim: usize, range: i64, rng: &mut impl Rng) -> Result<(PointCubeConfig, FiberValue)> {
    let (base, fiber) = orbit_lift_sample(ext, dim, range, rng);
    let t = theta(ext.fiber(), &fiber)?;
    Ok((base, t))
}

/// Theta of an independent random lift over a word-realized base cube; the
/// sampling route for evaluating the extracted value of a specific cube.
pub fn theta_of_lift(
    ext: &SkewExtension,
    word: &ZWord,
    base_point: &Point,
    rng: &mut impl Rng,
) -> Result<FiberValue> {
    let lift = sample_lift(ext, word, base_point, rng)?;
    theta(ext.fiber(), &lift)
}
