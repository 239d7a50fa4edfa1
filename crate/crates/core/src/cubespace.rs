//! Dynamical cubes for the concrete systems: sampling, membership, corner
//! completion, tricubes, glueable pairs, conditional samplers, and the
//! nilpotent regionally proximal relation on finite systems.
//!
//! The cube set `C^k(X)` is the closure of the orbit of diagonal points under
//! the Host-Kra cube group of the acting `Z`. It is never represented
//! symbolically; instead it appears as
//!
//! - exact BFS sets for finite systems,
//! - a closed-form affine parameterization `c_v = x + Σ_j t_j v_j` for
//!   rotations (with `t_j` ranging over the closure of the generator),
//! - the orbit-word sampler for everything else.

use crate::cube::{
    omega_embed, psi_embed, q_embed, tri_len, tri_vertices, Corner, CubeConfig,
    DiscreteCubeMorphism, MorphismRule, Vertex,
};
use crate::error::{Error, Result};
use crate::systems::{frac, Point, System};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};

/// A configuration of system points on `{0,1}^k`.
pub type PointCubeConfig = CubeConfig<Point>;

/// Sup-distance of two point configurations in the system metric.
pub fn cube_dist(sys: &System, a: &PointCubeConfig, b: &PointCubeConfig) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(p, q)| sys.dist(p, q))
        .fold(0.0, f64::max))
}

/// An affine element of the Host-Kra cube group of `Z`:
/// `n_v = base + Σ_j steps_j v_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZWord {
    pub base: i64,
    pub steps: Vec<i64>,
}

impl ZWord {
    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    pub fn value(&self, v: Vertex) -> i64 {
        let mut n = self.base;
        for (j, s) in self.steps.iter().enumerate() {
            if v.coord(j) {
                n += s;
            }
        }
        n
    }

    pub fn sample(k: usize, range: i64, rng: &mut impl Rng) -> ZWord {
        ZWord {
            base: rng.gen_range(-range..=range),
            steps: (0..k).map(|_| rng.gen_range(-range..=range)).collect(),
        }
    }

    pub fn to_config(&self) -> Result<CubeConfig<i64>> {
        CubeConfig::from_fn(self.dim(), |v| self.value(v))
    }

    /// Apply the word to a cube vertex-wise: `(g c)_v = T^{n_v} c_v`.
    pub fn act(&self, sys: &System, c: &PointCubeConfig) -> Result<PointCubeConfig> {
        if c.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: c.dim() });
        }
        CubeConfig::from_fn(c.dim(), |v| sys.act(self.value(v), c.value(v)))
    }
}

/// The affine parameters of a rotation cube: `c_v = base + Σ_j steps_j v_j`,
/// addition in the point group of the rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeParams {
    pub base: Point,
    pub steps: Vec<Point>,
}

fn point_add(sys: &System, a: &Point, b: &Point) -> Point {
    match (sys, a, b) {
        (System::Cyclic { n, .. }, Point::Cyclic(x), Point::Cyclic(y)) => {
            Point::Cyclic((x + y) % n)
        }
        (_, Point::Torus(x), Point::Torus(y)) => {
            Point::Torus(x.iter().zip(y).map(|(u, v)| frac(u + v)).collect())
        }
        _ => panic!("point types do not match the system"),
    }
}

fn point_sub(sys: &System, a: &Point, b: &Point) -> Point {
    match (sys, a, b) {
        (System::Cyclic { n, .. }, Point::Cyclic(x), Point::Cyclic(y)) => {
            Point::Cyclic((x + n - y % n) % n)
        }
        (_, Point::Torus(x), Point::Torus(y)) => {
            Point::Torus(x.iter().zip(y).map(|(u, v)| frac(u - v)).collect())
        }
        _ => panic!("point types do not match the system"),
    }
}

/// The subgroup of `Z/N` reachable by the rotation generator: multiples of
/// `gcd(a, N)`.
fn step_gcd(n: u64, a: u64) -> u64 {
    let mut x = n;
    let mut y = a % n;
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
    }
    x
}

/// The affine cube `c_v = x + Σ_j t_j v_j` for a rotation system.
pub fn affine_cube(sys: &System, params: &CubeParams) -> Result<PointCubeConfig> {
    if !sys.is_rotation() {
        return Err(Error::UnsupportedSystem("affine cubes exist for rotations only".into()));
    }
    let k = params.steps.len();
    CubeConfig::from_fn(k, |v| {
        let mut p = params.base.clone();
        for (j, t) in params.steps.iter().enumerate() {
            if v.coord(j) {
                p = point_add(sys, &p, t);
            }
        }
        p
    })
}

/// Draw a cube from the invariant cube measure of a rotation: the base point
/// from the invariant measure and each displacement uniform over the closure
/// of the generator's orbit.
pub fn affine_cube_sample(
    sys: &System,
    k: usize,
    rng: &mut impl Rng,
) -> Result<PointCubeConfig> {
    let params = affine_params_sample(sys, k, rng)?;
    affine_cube(sys, &params)
}

/// Sample just the parameters of an affine rotation cube.
pub fn affine_params_sample(sys: &System, k: usize, rng: &mut impl Rng) -> Result<CubeParams> {
    if !sys.is_rotation() {
        return Err(Error::UnsupportedSystem("affine cubes exist for rotations only".into()));
    }
    let base = sys.sample(rng);
    let steps = (0..k)
        .map(|_| match sys {
            System::Cyclic { n, a } => {
                let g = step_gcd(*n, *a);
                Point::Cyclic(rng.gen_range(0..n / g) * g)
            }
            System::Torus { alpha } => {
                Point::Torus((0..alpha.len()).map(|_| rng.gen::<f64>()).collect())
            }
            _ => unreachable!("checked rotation"),
        })
        .collect();
    Ok(CubeParams { base, steps })
}

/// Apply a random Host-Kra word to a diagonal point drawn from the invariant
/// measure. Sound for every system: the result is in the cube set by
/// construction.
pub fn orbit_cube_sample(
    sys: &System,
    k: usize,
    word_range: i64,
    rng: &mut impl Rng,
) -> PointCubeConfig {
    let x = sys.sample(rng);
    let w = ZWord::sample(k, word_range, rng);
    CubeConfig::from_fn(k, |v| sys.act(w.value(v), &x)).expect("dimension checked by caller")
}

/// Default cube sampler: the affine closure parameterization for rotations,
/// the orbit-word sampler otherwise.
pub fn sample_cube(sys: &System, k: usize, rng: &mut impl Rng) -> Result<PointCubeConfig> {
    if k > 8 {
        return Err(Error::DimensionOutOfRange { dim: k, max: 8 });
    }
    if sys.is_rotation() {
        affine_cube_sample(sys, k, rng)
    } else {
        Ok(orbit_cube_sample(sys, k, 50, rng))
    }
}

/// Solve for the affine parameters of a rotation cube; `None` when the
/// configuration is not a cube at tolerance `tol`.
pub fn affine_params(
    sys: &System,
    c: &PointCubeConfig,
    tol: f64,
) -> Result<Option<CubeParams>> {
    if !sys.is_rotation() {
        return Err(Error::UnsupportedSystem(
            "affine parameters exist for rotations only".into(),
        ));
    }
    let k = c.dim();
    let base = c.value(Vertex::zero(k)?).clone();
    let steps: Vec<Point> = (0..k)
        .map(|j| point_sub(sys, c.value(Vertex::zero(k).unwrap().with_coord(j, true)), &base))
        .collect();

    // Displacements must lie in the closure of the generator orbit.
    if let System::Cyclic { n, a } = sys {
        let g = step_gcd(*n, *a);
        for t in &steps {
            if t.as_cyclic() % g != 0 {
                return Ok(None);
            }
        }
    }

    let params = CubeParams { base, steps };
    let expect = affine_cube(sys, &params)?;
    let dev = cube_dist(sys, c, &expect)?;
    Ok(if dev <= tol { Some(params) } else { None })
}

/// Membership in the cube set. Rotations solve the affine form, depth-2 Weyl
/// towers solve the affine-plus-quadratic form, and other systems are
/// unsupported.
pub fn is_cube(sys: &System, c: &PointCubeConfig, tol: f64) -> Result<bool> {
    match sys {
        System::Cyclic { .. } | System::Torus { .. } => {
            Ok(affine_params(sys, c, tol)?.is_some())
        }
        System::Weyl { d: 2, .. } => is_cube_weyl2(c, tol),
        _ => Err(Error::UnsupportedSystem(
            "cube membership is decided for rotations, depth-2 towers and finite systems"
                .into(),
        )),
    }
}

/// Degree-2 solve for the skew torus: first coordinates affine, second
/// coordinates a polynomial of degree at most 2 in the vertex.
fn is_cube_weyl2(c: &PointCubeConfig, tol: f64) -> Result<bool> {
    let k = c.dim();
    let x = |v: Vertex| -> &[f64] { c.value(v).as_torus() };
    let zero = Vertex::zero(k)?;
    let (x0, y0) = (x(zero)[0], x(zero)[1]);
    let e = |j: usize| zero.with_coord(j, true);
    let t: Vec<f64> = (0..k).map(|j| frac(x(e(j))[0] - x0)).collect();
    let u: Vec<f64> = (0..k).map(|j| frac(x(e(j))[1] - y0)).collect();
    let mut w = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let vij = e(i).with_coord(j, true);
            w[i][j] = frac(x(vij)[1] - y0 - u[i] - u[j]);
        }
    }
    for (v, p) in c.iter() {
        let p = p.as_torus();
        let mut fx = x0;
        let mut fy = y0;
        for i in 0..k {
            if v.coord(i) {
                fx += t[i];
                fy += u[i];
                for j in (i + 1)..k {
                    if v.coord(j) {
                        fy += w[i][j];
                    }
                }
            }
        }
        if crate::systems::circle_dist(p[0], fx) > tol
            || crate::systems::circle_dist(p[1], fy) > tol
        {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Exact cube sets for finite systems
// ---------------------------------------------------------------------------

const FINITE_CUBE_CAP: f64 = 2.0e7;

/// The exact cube set of a finite system, as the BFS closure of the Host-Kra
/// orbit of all diagonal configurations.
#[derive(Clone, Debug)]
pub struct FiniteCubeSet {
    dim: usize,
    members: HashSet<Vec<u64>>,
}

impl FiniteCubeSet {
    pub fn build(sys: &System, dim: usize) -> Result<FiniteCubeSet> {
        let System::Cyclic { n, a } = sys else {
            return Err(Error::UnsupportedSystem("BFS cube sets need a finite system".into()));
        };
        let total = (*n as f64).powi(1 << dim);
        if total > FINITE_CUBE_CAP {
            return Err(Error::SizeCap(format!(
                "N^(2^dim) = {total:.3e} exceeds the BFS cap {FINITE_CUBE_CAP:.1e}"
            )));
        }
        // Moves: add the generator along an upper face or the diagonal, or
        // subtract it.
        let mut move_masks: Vec<Vec<u64>> = Vec::new();
        let verts = crate::cube::vertices(dim)?;
        for j in 0..=dim {
            let mask: Vec<bool> = verts
                .iter()
                .map(|v| if j < dim { v.coord(j) } else { true })
                .collect();
            for sign in [1i64, -1] {
                let delta: Vec<u64> = mask
                    .iter()
                    .map(|&m| {
                        if m {
                            (sign * *a as i64).rem_euclid(*n as i64) as u64
                        } else {
                            0
                        }
                    })
                    .collect();
                move_masks.push(delta);
            }
        }
        let mut members: HashSet<Vec<u64>> = HashSet::new();
        let mut queue: VecDeque<Vec<u64>> = VecDeque::new();
        for x in 0..*n {
            let diag = vec![x; 1 << dim];
            if members.insert(diag.clone()) {
                queue.push_back(diag);
            }
        }
        while let Some(cur) = queue.pop_front() {
            for mv in &move_masks {
                let next: Vec<u64> =
                    cur.iter().zip(mv).map(|(x, d)| (x + d) % n).collect();
                if members.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        Ok(FiniteCubeSet { dim, members })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, c: &PointCubeConfig) -> bool {
        if c.dim() != self.dim {
            return false;
        }
        let key: Vec<u64> = c.values().iter().map(|p| p.as_cyclic()).collect();
        self.members.contains(&key)
    }

    pub fn members(&self) -> &HashSet<Vec<u64>> {
        &self.members
    }
}

// ---------------------------------------------------------------------------
// Corner completion
// ---------------------------------------------------------------------------

/// Complete a corner to a full cube. Rotations have a unique completion
/// `base + Σ_j t_j`; for finite systems a failed verification signals a
/// fibrancy violation.
pub fn corner_complete(sys: &System, corner: &Corner<Point>) -> Result<Point> {
    let l = corner.dim();
    for i in 0..l {
        let face = corner.face(i)?;
        if l >= 2 && !is_cube(sys, &face, 1e-9)? {
            return Err(Error::CornerFaceNotCube { index: i });
        }
    }
    if !sys.is_rotation() {
        return Err(Error::UnsupportedSystem(
            "corner completion is implemented for rotation systems".into(),
        ));
    }
    let zero = Vertex::zero(l)?;
    let base = corner.value(zero).clone();
    let mut top = base.clone();
    for j in 0..l {
        let t = point_sub(sys, corner.value(zero.with_coord(j, true)), &base);
        top = point_add(sys, &top, &t);
    }
    let full = corner.complete(top.clone());
    if !is_cube(sys, &full, 1e-9)? {
        return Err(Error::NoCompletion);
    }
    Ok(top)
}

// ---------------------------------------------------------------------------
// Tricubes
// ---------------------------------------------------------------------------

/// A labeling of `{-1,0,1}^n` by system points whose `2^n` unit subcubes and
/// outer cube are all cubes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tricube {
    n: usize,
    values: Vec<Point>,
}

impl Tricube {
    pub fn new(n: usize, values: Vec<Point>) -> Result<Tricube> {
        if values.len() != tri_len(n) {
            return Err(Error::BadConfigLength {
                dim: n,
                expected: tri_len(n),
                got: values.len(),
            });
        }
        Ok(Tricube { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, w: &[i8]) -> &Point {
        &self.values[crate::cube::tri_index(w)]
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    /// The unit subcube `ψ_v(t) = (t_{Ψ_v(ε)})_ε`.
    pub fn psi(&self, v: Vertex) -> Result<PointCubeConfig> {
        CubeConfig::from_fn(self.n, |eps| {
            self.value(&psi_embed(v, eps).expect("dims match")).clone()
        })
    }

    /// The outer cube `ω(t) = (t_{Ω(ε)})_ε`.
    pub fn omega(&self) -> Result<PointCubeConfig> {
        CubeConfig::from_fn(self.n, |eps| {
            self.value(&omega_embed(eps).expect("dims checked")).clone()
        })
    }
}

/// Draw a tricube by sampling a `2n`-cube and restricting along the
/// coordinatewise embedding `q`: the restriction of a cube along a cube
/// morphism is a cube, so all `ψ_v` and `ω` extractions are cubes.
pub fn tricube_sample(sys: &System, n: usize, rng: &mut impl Rng) -> Result<Tricube> {
    if n > 4 {
        return Err(Error::DimensionOutOfRange { dim: n, max: 4 });
    }
    let big = sample_cube(sys, 2 * n, rng)?;
    let values = tri_vertices(n)?
        .iter()
        .map(|w| big.value(q_embed(w).expect("dims checked")).clone())
        .collect();
    Tricube::new(n, values)
}

// ---------------------------------------------------------------------------
// Glueable pairs
// ---------------------------------------------------------------------------

/// The two morphisms that cut a `(k+2)`-cube into a glueable pair of
/// `(k+1)`-cubes: the face `v_{k+2} = 0` traversed with `v_{k+1}` reversed,
/// and the face `v_{k+1} = 0`.
fn glue_pair_morphisms(k: usize) -> Result<(DiscreteCubeMorphism, DiscreteCubeMorphism)> {
    let mut r1: Vec<MorphismRule> = (0..k).map(MorphismRule::Coord).collect();
    r1.push(MorphismRule::NegCoord(k));
    r1.push(MorphismRule::Const0);
    let mut r2: Vec<MorphismRule> = (0..k).map(MorphismRule::Coord).collect();
    r2.push(MorphismRule::Const0);
    r2.push(MorphismRule::Coord(k));
    Ok((
        DiscreteCubeMorphism::new(k + 1, r1)?,
        DiscreteCubeMorphism::new(k + 1, r2)?,
    ))
}

/// Draw a glueable pair of `(k+1)`-cubes by projecting a `(k+2)`-cube onto
/// its two distinguished faces. The pair shares the glueing face by
/// construction.
pub fn glueable_pair_sample(
    sys: &System,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(PointCubeConfig, PointCubeConfig)> {
    if k + 2 > 8 {
        return Err(Error::DimensionOutOfRange { dim: k + 2, max: 8 });
    }
    let c = sample_cube(sys, k + 2, rng)?;
    let (m1, m2) = glue_pair_morphisms(k)?;
    Ok((
        crate::cube::apply_morphism(&c, &m1)?,
        crate::cube::apply_morphism(&c, &m2)?,
    ))
}

// ---------------------------------------------------------------------------
// Conditional cube samplers
// ---------------------------------------------------------------------------

/// Samples cubes conditioned on the base vertex: every draw satisfies
/// `c_0⃗ = x` exactly.
#[derive(Clone, Debug)]
pub struct ConditionalCubeSampler {
    sys: System,
    k: usize,
    base: Point,
}

impl ConditionalCubeSampler {
    pub fn new(sys: &System, k: usize, base: Point) -> Result<ConditionalCubeSampler> {
        if !sys.is_rotation() {
            return Err(Error::UnsupportedSystem(
                "conditional cube samplers are implemented for rotation systems".into(),
            ));
        }
        Ok(ConditionalCubeSampler { sys: sys.clone(), k, base })
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn sample(&self, rng: &mut impl Rng) -> PointCubeConfig {
        self.sample_with_params(rng).1
    }

    /// Sample together with the displacement parameters.
    pub fn sample_with_params(&self, rng: &mut impl Rng) -> (CubeParams, PointCubeConfig) {
        let mut params =
            affine_params_sample(&self.sys, self.k, rng).expect("rotation checked");
        params.base = self.base.clone();
        let cube = affine_cube(&self.sys, &params).expect("rotation checked");
        (params, cube)
    }
}

// ---------------------------------------------------------------------------
// The nilpotent regionally proximal relation on finite systems
// ---------------------------------------------------------------------------

/// The partition of a finite system induced by `x ~_k y` iff the
/// configuration `(x, ..., x, y)` (with `y` at the top vertex) is a
/// `(k+1)`-cube.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NrpReport {
    pub k: usize,
    /// Point classes, each sorted, ordered by smallest member.
    pub classes: Vec<Vec<u64>>,
    /// Whether the generator maps classes onto classes.
    pub action_invariant: bool,
    /// Whether every class at level `k` is contained in a class at level
    /// `k-1`. Reported, not asserted.
    pub refines_previous: Option<bool>,
}

pub fn nrp_classes(sys: &System, k: usize) -> Result<NrpReport> {
    let classes = nrp_partition(sys, k)?;
    let System::Cyclic { n, a } = sys else { unreachable!("nrp_partition checked") };

    // Action invariance: the generator image of every class is a class.
    let family: HashSet<Vec<u64>> = classes.iter().cloned().collect();
    let action_invariant = classes.iter().all(|class| {
        let mut image: Vec<u64> = class.iter().map(|x| (x + a) % n).collect();
        image.sort_unstable();
        family.contains(&image)
    });

    let refines_previous = if k >= 1 {
        match nrp_partition(sys, k - 1) {
            Ok(prev) => {
                let mut class_of = vec![usize::MAX; *n as usize];
                for (i, c) in prev.iter().enumerate() {
                    for &x in c {
                        class_of[x as usize] = i;
                    }
                }
                Some(classes.iter().all(|c| {
                    let first = class_of[c[0] as usize];
                    c.iter().all(|&x| class_of[x as usize] == first)
                }))
            }
            Err(_) => None,
        }
    } else {
        None
    };

    Ok(NrpReport { k, classes, action_invariant, refines_previous })
}

fn nrp_partition(sys: &System, k: usize) -> Result<Vec<Vec<u64>>> {
    let System::Cyclic { n, .. } = sys else {
        return Err(Error::UnsupportedSystem(
            "the regionally proximal partition is computed for finite systems".into(),
        ));
    };
    let cubes = FiniteCubeSet::build(sys, k + 1)?;
    let n = *n;
    let dim = k + 1;
    let mut parent: Vec<usize> = (0..n as usize).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let mut vals = vec![Point::Cyclic(x); 1 << dim];
            let top = (1usize << dim) - 1;
            vals[top] = Point::Cyclic(y);
            let cfg = CubeConfig::new(dim, vals)?;
            if cubes.contains(&cfg) {
                let (rx, ry) = (find(&mut parent, x as usize), find(&mut parent, y as usize));
                if rx != ry {
                    parent[rx] = ry;
                }
            }
        }
    }
    let mut buckets: std::collections::BTreeMap<usize, Vec<u64>> = Default::default();
    for x in 0..n as usize {
        let root = find(&mut parent, x);
        buckets.entry(root).or_default().push(x as u64);
    }
    let mut classes: Vec<Vec<u64>> = buckets.into_values().collect();
    for c in &mut classes {
        c.sort_unstable();
    }
    classes.sort();
    Ok(classes)
}
