//! Finitely generated groups with explicit arithmetic, Host-Kra cube groups
//! over them, the kernel of the alternating sum with its constructive edge
//! decomposition, and Haar measures on coset spaces of finite abelian groups.
//!
//! The Host-Kra cube group `𝓗𝓚^k(G)` is the subgroup of `G^{2^k}` generated
//! by the upper-face elements `g^{ᾱ_j}` and the diagonals `g^{[k]}`. For
//! abelian `G` its members are exactly the affine configurations
//! `c_v = a + Σ_j b_j v_j`, which is what [`hk_member_abelian`] decides.
//! Non-abelian membership is not decided in general: sampling is sound but
//! not complete, and small finite quotients have the exact BFS oracle
//! [`hk_generate_finite`].

use crate::cube::{theta, CubeConfig, Face, Vertex};
use crate::error::{Error, Result};
use rand::Rng;
use std::collections::{HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

/// A group given by explicit element arithmetic.
pub trait Group {
    type Elem: Clone + PartialEq + Debug;

    fn identity(&self) -> Self::Elem;
    fn op(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn is_abelian(&self) -> bool;

    /// Generating set (may be empty for non-discrete groups).
    fn generators(&self) -> Vec<Self::Elem> {
        Vec::new()
    }

    /// Membership in the lower central series subgroup `G_n`, where
    /// `G_1 = G` and `G_n = [G_{n-1}, G]`.
    fn in_lower_central(&self, g: &Self::Elem, n: u32) -> bool {
        if n <= 1 {
            return true;
        }
        // Default for abelian groups: everything past G_1 is trivial.
        *g == self.identity()
    }

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.op(a, &self.inv(b))
    }

    fn commutator(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.op(&self.op(&self.inv(a), &self.inv(b)), &self.op(a, b))
    }
}

/// A group whose elements can be enumerated.
pub trait FiniteGroup: Group {
    fn order(&self) -> u64;
    fn elements(&self) -> Vec<Self::Elem>;
}

/// Integer vectors `Z^d` under addition.
#[derive(Clone, Debug, PartialEq)]
pub struct Zd {
    d: usize,
}

impl Zd {
    pub fn new(d: usize) -> Self {
        Zd { d }
    }

    pub fn rank(&self) -> usize {
        self.d
    }
}

impl Group for Zd {
    type Elem = Vec<i64>;

    fn identity(&self) -> Vec<i64> {
        vec![0; self.d]
    }

    fn op(&self, a: &Vec<i64>, b: &Vec<i64>) -> Vec<i64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    fn inv(&self, a: &Vec<i64>) -> Vec<i64> {
        a.iter().map(|x| -x).collect()
    }

    fn is_abelian(&self) -> bool {
        true
    }

    fn generators(&self) -> Vec<Vec<i64>> {
        (0..self.d)
            .map(|i| {
                let mut e = vec![0; self.d];
                e[i] = 1;
                e
            })
            .collect()
    }
}

/// The cyclic group `Z/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cyclic {
    n: u64,
}

impl Cyclic {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1, "cyclic group needs modulus >= 1");
        Cyclic { n }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.n as i64) as u64
    }
}

impl Group for Cyclic {
    type Elem = u64;

    fn identity(&self) -> u64 {
        0
    }

    fn op(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.n
    }

    fn inv(&self, a: &u64) -> u64 {
        (self.n - a % self.n) % self.n
    }

    fn is_abelian(&self) -> bool {
        true
    }

    fn generators(&self) -> Vec<u64> {
        if self.n == 1 {
            vec![]
        } else {
            vec![1]
        }
    }
}

impl FiniteGroup for Cyclic {
    fn order(&self) -> u64 {
        self.n
    }

    fn elements(&self) -> Vec<u64> {
        (0..self.n).collect()
    }
}

/// A product of cyclic groups `Z/n_1 × ... × Z/n_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteAbelian {
    moduli: Vec<u64>,
}

impl FiniteAbelian {
    pub fn new(moduli: Vec<u64>) -> Self {
        assert!(moduli.iter().all(|&n| n >= 1), "moduli must be >= 1");
        FiniteAbelian { moduli }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn contains(&self, x: &[u64]) -> bool {
        x.len() == self.moduli.len() && x.iter().zip(&self.moduli).all(|(a, n)| a < n)
    }

    pub fn uniform(&self, rng: &mut impl Rng) -> Vec<u64> {
        self.moduli.iter().map(|&n| rng.gen_range(0..n)).collect()
    }
}

impl Group for FiniteAbelian {
    type Elem = Vec<u64>;

    fn identity(&self) -> Vec<u64> {
        vec![0; self.moduli.len()]
    }

    fn op(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.moduli)
            .map(|((x, y), n)| (x + y) % n)
            .collect()
    }

    fn inv(&self, a: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(&self.moduli).map(|(x, n)| (n - x % n) % n).collect()
    }

    fn is_abelian(&self) -> bool {
        true
    }

    fn generators(&self) -> Vec<Vec<u64>> {
        (0..self.moduli.len())
            .filter(|&i| self.moduli[i] > 1)
            .map(|i| {
                let mut e = vec![0; self.moduli.len()];
                e[i] = 1;
                e
            })
            .collect()
    }
}

impl FiniteGroup for FiniteAbelian {
    fn order(&self) -> u64 {
        self.moduli.iter().product()
    }

    fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![self.identity()];
        for (i, &n) in self.moduli.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * n as usize);
            for e in &out {
                for r in 0..n {
                    let mut e = e.clone();
                    e[i] = r;
                    next.push(e);
                }
            }
            out = next;
        }
        out
    }
}

/// The discrete Heisenberg group: integer triples with
/// `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')`. Two-step nilpotent.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergZ;

impl Group for HeisenbergZ {
    type Elem = [i64; 3];

    fn identity(&self) -> [i64; 3] {
        [0, 0, 0]
    }

    fn op(&self, a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]]
    }

    fn inv(&self, a: &[i64; 3]) -> [i64; 3] {
        [-a[0], -a[1], -a[2] + a[0] * a[1]]
    }

    fn is_abelian(&self) -> bool {
        false
    }

    fn generators(&self) -> Vec<[i64; 3]> {
        vec![[1, 0, 0], [0, 1, 0]]
    }

    fn in_lower_central(&self, g: &[i64; 3], n: u32) -> bool {
        match n {
            0 | 1 => true,
            2 => g[0] == 0 && g[1] == 0,
            _ => *g == self.identity(),
        }
    }
}

/// The Heisenberg group with entries reduced mod `p`; a finite quotient used
/// as a BFS oracle for cube-group sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergMod {
    p: u64,
}

impl HeisenbergMod {
    pub fn new(p: u64) -> Self {
        assert!(p >= 1);
        HeisenbergMod { p }
    }

    pub fn reduce(&self, g: &[i64; 3]) -> [u64; 3] {
        let p = self.p as i64;
        [
            g[0].rem_euclid(p) as u64,
            g[1].rem_euclid(p) as u64,
            g[2].rem_euclid(p) as u64,
        ]
    }
}

impl Group for HeisenbergMod {
    type Elem = [u64; 3];

    fn identity(&self) -> [u64; 3] {
        [0, 0, 0]
    }

    fn op(&self, a: &[u64; 3], b: &[u64; 3]) -> [u64; 3] {
        let p = self.p;
        [
            (a[0] + b[0]) % p,
            (a[1] + b[1]) % p,
            (a[2] + b[2] + a[0] * b[1]) % p,
        ]
    }

    fn inv(&self, a: &[u64; 3]) -> [u64; 3] {
        let p = self.p;
        [
            (p - a[0] % p) % p,
            (p - a[1] % p) % p,
            ((p - a[2] % p) % p + a[0] * a[1]) % p,
        ]
    }

    fn is_abelian(&self) -> bool {
        self.p <= 1
    }

    fn generators(&self) -> Vec<[u64; 3]> {
        vec![[1 % self.p, 0, 0], [0, 1 % self.p, 0]]
    }

    fn in_lower_central(&self, g: &[u64; 3], n: u32) -> bool {
        match n {
            0 | 1 => true,
            2 => g[0] == 0 && g[1] == 0,
            _ => *g == self.identity(),
        }
    }
}

impl FiniteGroup for HeisenbergMod {
    fn order(&self) -> u64 {
        self.p.pow(3)
    }

    fn elements(&self) -> Vec<[u64; 3]> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for a in 0..self.p {
            for b in 0..self.p {
                for c in 0..self.p {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Host-Kra cube groups
// ---------------------------------------------------------------------------

/// The configuration `g^F`: `g` on the vertices of the face, identity
/// elsewhere.
pub fn face_element<G: Group>(
    group: &G,
    g: &G::Elem,
    face: &Face,
    k: usize,
) -> Result<CubeConfig<G::Elem>> {
    if face.dim() != k {
        return Err(Error::DimensionMismatch { expected: k, got: face.dim() });
    }
    CubeConfig::from_fn(k, |v| {
        if face.contains(v) {
            g.clone()
        } else {
            group.identity()
        }
    })
}

/// The diagonal `g^{[k]} = (g, ..., g)`.
pub fn diagonal_element<G: Group>(group: &G, g: &G::Elem, k: usize) -> Result<CubeConfig<G::Elem>> {
    face_element(group, g, &Face::full(k)?, k)
}

/// Vertex-wise product of two group configurations.
pub fn config_op<G: Group>(
    group: &G,
    a: &CubeConfig<G::Elem>,
    b: &CubeConfig<G::Elem>,
) -> Result<CubeConfig<G::Elem>> {
    a.zip_with(b, |x, y| group.op(x, y))
}

/// Build the word `∏ g_s^{F_s}` as one configuration (left-to-right order).
pub fn hk_word<G: Group>(
    group: &G,
    k: usize,
    factors: &[(G::Elem, Face)],
) -> Result<CubeConfig<G::Elem>> {
    let mut acc = CubeConfig::constant(k, group.identity())?;
    for (g, face) in factors {
        acc = config_op(group, &acc, &face_element(group, g, face, k)?)?;
    }
    Ok(acc)
}

/// The generating faces of `𝓗𝓚^k(G)`: the upper faces and the full cube.
pub fn hk_generating_faces(k: usize) -> Result<Vec<Face>> {
    let mut faces = Vec::with_capacity(k + 1);
    for j in 0..k {
        faces.push(Face::upper(k, j)?);
    }
    faces.push(Face::full(k)?);
    Ok(faces)
}

/// A random word of `word_length` generator face/diagonal elements (and
/// inverses). Always a member of `𝓗𝓚^k(G)` by construction.
pub fn hk_sample<G: Group>(
    group: &G,
    k: usize,
    word_length: usize,
    rng: &mut impl Rng,
) -> Result<CubeConfig<G::Elem>> {
    if word_length == 0 {
        return Err(Error::InvalidInput("word_length must be >= 1".into()));
    }
    let gens = group.generators();
    if gens.is_empty() {
        return Err(Error::InvalidInput("group has no generators to sample from".into()));
    }
    let faces = hk_generating_faces(k)?;
    let mut factors = Vec::with_capacity(word_length);
    for _ in 0..word_length {
        let g = gens[rng.gen_range(0..gens.len())].clone();
        let g = if rng.gen_bool(0.5) { group.inv(&g) } else { g };
        let face = faces[rng.gen_range(0..faces.len())].clone();
        factors.push((g, face));
    }
    hk_word(group, k, &factors)
}

/// Witness for abelian cube-group membership: `c_v = base + Σ_j steps_j v_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineWitness<E> {
    pub base: E,
    pub steps: Vec<E>,
}

/// Decide membership of a configuration in `𝓗𝓚^k(G)` for abelian `G`:
/// solve `base = c_0⃗`, `steps_j = c_{e_j} - base`, then verify all vertices.
pub fn hk_member_abelian<G: Group>(
    group: &G,
    c: &CubeConfig<G::Elem>,
) -> Result<Option<AffineWitness<G::Elem>>> {
    if !group.is_abelian() {
        return Err(Error::NonAbelian);
    }
    let k = c.dim();
    let base = c.value(Vertex::zero(k)?).clone();
    let steps: Vec<G::Elem> = (0..k)
        .map(|j| {
            let ej = Vertex::zero(k).unwrap().with_coord(j, true);
            group.sub(c.value(ej), &base)
        })
        .collect();
    for (v, x) in c.iter() {
        let mut expect = base.clone();
        for (j, step) in steps.iter().enumerate() {
            if v.coord(j) {
                expect = group.op(&expect, step);
            }
        }
        if expect != *x {
            return Ok(None);
        }
    }
    Ok(Some(AffineWitness { base, steps }))
}

/// Membership in `𝓗𝓚_{+1}^k(G)` for abelian `G`, where the group collapses
/// to the diagonal.
pub fn hk_plus_member_abelian<G: Group>(group: &G, c: &CubeConfig<G::Elem>) -> Result<bool> {
    if !group.is_abelian() {
        return Err(Error::NonAbelian);
    }
    let first = c.at(0);
    Ok(c.values().iter().all(|x| x == first))
}

const HK_BFS_CAP: f64 = 1.7e7;

/// Exact BFS closure of the cube-group generators inside `G^{2^k}`; the
/// oracle member set for small finite groups.
pub fn hk_generate_finite<G>(group: &G, k: usize) -> Result<HashSet<Vec<G::Elem>>>
where
    G: FiniteGroup,
    G::Elem: Hash + Eq,
{
    let total = (group.order() as f64).powi(1 << k);
    if total > HK_BFS_CAP {
        return Err(Error::SizeCap(format!(
            "|G|^(2^k) = {total:.3e} exceeds the BFS cap {HK_BFS_CAP:.1e}"
        )));
    }
    let faces = hk_generating_faces(k)?;
    let mut moves: Vec<CubeConfig<G::Elem>> = Vec::new();
    for g in group.generators() {
        for face in &faces {
            moves.push(face_element(group, &g, face, k)?);
            moves.push(face_element(group, &group.inv(&g), face, k)?);
        }
    }
    let identity = CubeConfig::constant(k, group.identity())?;
    let mut seen: HashSet<Vec<G::Elem>> = HashSet::new();
    seen.insert(identity.values().to_vec());
    let mut queue: VecDeque<CubeConfig<G::Elem>> = VecDeque::new();
    queue.push_back(identity);
    while let Some(cur) = queue.pop_front() {
        for mv in &moves {
            let next = config_op(group, &cur, mv)?;
            if seen.insert(next.values().to_vec()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

// ---------------------------------------------------------------------------
// Theta kernel and the edge decomposition
// ---------------------------------------------------------------------------

/// The kernel of `θ` on `A^{2^n}` for an abelian group `A`: membership,
/// projection, and vertex-wise addition.
#[derive(Clone, Debug)]
pub struct ThetaKernel<G> {
    group: G,
    dim: usize,
}

impl<G: Group> ThetaKernel<G> {
    pub fn new(group: G, dim: usize) -> Result<Self> {
        if !group.is_abelian() {
            return Err(Error::NonAbelian);
        }
        Ok(ThetaKernel { group, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn contains(&self, c: &CubeConfig<G::Elem>) -> Result<bool> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: c.dim() });
        }
        Ok(theta(&self.group, c)? == self.group.identity())
    }

    /// Adjust the top vertex so the alternating sum vanishes.
    pub fn project(&self, c: &CubeConfig<G::Elem>) -> Result<CubeConfig<G::Elem>> {
        if c.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: c.dim() });
        }
        let t = theta(&self.group, c)?;
        let top = Vertex::top(self.dim)?;
        let mut out = c.clone();
        let adjusted = if top.sign() > 0 {
            self.group.sub(c.value(top), &t)
        } else {
            self.group.op(c.value(top), &t)
        };
        out.set(top, adjusted);
        Ok(out)
    }

    pub fn add(
        &self,
        a: &CubeConfig<G::Elem>,
        b: &CubeConfig<G::Elem>,
    ) -> Result<CubeConfig<G::Elem>> {
        config_op(&self.group, a, b)
    }
}

/// Write a `θ`-kernel element as a sum of edge elements `Σ_s g_s^{α_s}`,
/// following the constructive induction: the planar base case uses the three
/// edges `{(0,0),(0,1)}`, `{(0,1),(1,1)}`, `{(1,1),(1,0)}`; higher dimensions
/// peel the edge `{(0⃗,0),(0⃗,1)}` with the alternating sum of the lower face
/// and recurse on both faces.
pub fn edge_decompose<G: Group>(
    group: &G,
    u: &CubeConfig<G::Elem>,
) -> Result<Vec<(G::Elem, Face)>> {
    if !group.is_abelian() {
        return Err(Error::NonAbelian);
    }
    if theta(group, u)? != group.identity() {
        return Err(Error::ThetaNonzero);
    }
    let mut out = decompose_rec(group, u)?;
    out.retain(|(g, _)| *g != group.identity());
    Ok(out)
}

fn decompose_rec<G: Group>(
    group: &G,
    u: &CubeConfig<G::Elem>,
) -> Result<Vec<(G::Elem, Face)>> {
    let n = u.dim();
    match n {
        0 => Ok(Vec::new()),
        1 => {
            // ker θ_1 is the diagonal: a single edge element.
            let g = u.at(0).clone();
            Ok(vec![(g, Face::edge(1, 0, Vertex::zero(1)?)?)])
        }
        2 => {
            let at = |i: usize| u.at(i).clone();
            // Vertices in canonical order: 0=(0,0), 1=(1,0), 2=(0,1), 3=(1,1).
            let g1 = at(0);
            let g2 = group.sub(&at(2), &g1);
            let g3 = group.sub(&at(3), &g2);
            let a1 = Face::edge(2, 1, Vertex::from_index(2, 0)?)?; // {(0,0),(0,1)}
            let a2 = Face::edge(2, 0, Vertex::from_index(2, 2)?)?; // {(0,1),(1,1)}
            let a3 = Face::edge(2, 1, Vertex::from_index(2, 1)?)?; // {(1,1),(1,0)}
            Ok(vec![(g1, a1), (g2, a2), (g3, a3)])
        }
        _ => {
            let lower = u.lower_face()?;
            let upper = u.upper_face()?;
            // Alternating sum of the lower face.
            let g0 = theta(group, &lower)?;
            // Peel g0 on the edge {(0⃗,0),(0⃗,1)}.
            let alpha0 = Face::edge(n, n - 1, Vertex::zero(n)?)?;
            let mut lower = lower;
            let mut upper = upper;
            let z = Vertex::zero(n - 1)?;
            lower.set(z, group.sub(lower.value(z), &g0));
            upper.set(z, group.sub(upper.value(z), &g0));
            let mut out = vec![(g0, alpha0)];
            for (face_cfg, bit) in [(lower, false), (upper, true)] {
                for (g, f) in decompose_rec(group, &face_cfg)? {
                    out.push((g, f.lift_last(bit)?));
                }
            }
            Ok(out)
        }
    }
}

/// Reassemble `Σ_s g_s^{α_s}` as a configuration.
pub fn edge_sum<G: Group>(
    group: &G,
    n: usize,
    edges: &[(G::Elem, Face)],
) -> Result<CubeConfig<G::Elem>> {
    hk_word(group, n, edges)
}

// ---------------------------------------------------------------------------
// Haar measures on cosets
// ---------------------------------------------------------------------------

/// The uniform distribution on a coset `H + a` of a finite abelian group,
/// with sampling and exact probability queries.
#[derive(Clone, Debug)]
pub struct CosetMeasure {
    elements: Vec<Vec<u64>>,
    lookup: HashSet<Vec<u64>>,
}

impl CosetMeasure {
    pub fn support(&self) -> &[Vec<u64>] {
        &self.elements
    }

    pub fn prob(&self, x: &[u64]) -> f64 {
        if self.lookup.contains(x) {
            1.0 / self.elements.len() as f64
        } else {
            0.0
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<u64> {
        self.elements[rng.gen_range(0..self.elements.len())].clone()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Uniform measure on the coset `H + a`, where `H` is the subgroup generated
/// by `h_gens` inside the finite abelian group `ambient`.
pub fn haar_coset_measure(
    ambient: &FiniteAbelian,
    h_gens: &[Vec<u64>],
    a: &[u64],
) -> Result<CosetMeasure> {
    if !ambient.contains(a) {
        return Err(Error::NotAMember);
    }
    for g in h_gens {
        if !ambient.contains(g) {
            return Err(Error::NotAMember);
        }
    }
    // BFS closure of the subgroup generated by h_gens.
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(ambient.identity());
    queue.push_back(ambient.identity());
    while let Some(cur) = queue.pop_front() {
        for g in h_gens {
            let next = ambient.op(&cur, g);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut elements: Vec<Vec<u64>> =
        seen.into_iter().map(|h| ambient.op(&h, &a.to_vec())).collect();
    elements.sort();
    let lookup = elements.iter().cloned().collect();
    Ok(CosetMeasure { elements, lookup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn group_axioms_on_random_triples() {
        let h = HeisenbergZ;
        let mut r = rng(1);
        for _ in 0..200 {
            let g = |r: &mut ChaCha8Rng| {
                [r.gen_range(-5..=5i64), r.gen_range(-5..=5), r.gen_range(-5..=5)]
            };
            let (a, b, c) = (g(&mut r), g(&mut r), g(&mut r));
            assert_eq!(h.op(&h.op(&a, &b), &c), h.op(&a, &h.op(&b, &c)));
            assert_eq!(h.op(&a, &h.identity()), a);
            assert_eq!(h.op(&a, &h.inv(&a)), h.identity());
        }
    }

    #[test]
    fn heisenberg_lower_central_series() {
        let h = HeisenbergZ;
        // [x, y] lands in the center.
        let c = h.commutator(&[1, 0, 0], &[0, 1, 0]);
        assert!(h.in_lower_central(&c, 2));
        assert!(!h.in_lower_central(&[1, 0, 0], 2));
        assert!(h.in_lower_central(&[0, 0, 7], 2));
        assert!(!h.in_lower_central(&[0, 0, 7], 3));
        assert!(h.in_lower_central(&h.identity(), 3));
    }

    #[test]
    fn generators_generate_finite_instances() {
        let g = FiniteAbelian::new(vec![2, 3]);
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([g.identity()]);
        seen.insert(g.identity());
        while let Some(cur) = queue.pop_front() {
            for gen in g.generators() {
                let next = g.op(&cur, &gen);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        assert_eq!(seen.len() as u64, g.order());

        let h = HeisenbergMod::new(3);
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([h.identity()]);
        seen.insert(h.identity());
        while let Some(cur) = queue.pop_front() {
            for gen in h.generators() {
                let next = h.op(&cur, &gen);
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        assert_eq!(seen.len() as u64, h.order());
    }

    #[test]
    fn face_elements() {
        let z = Zd::new(1);
        let k = 2;
        // Identity everywhere.
        let e = face_element(&z, &z.identity(), &Face::upper(k, 0).unwrap(), k).unwrap();
        assert!(e.values().iter().all(|x| x == &vec![0]));

        // Upper face of coordinate 0 puts g at (1,0) and (1,1).
        let t = face_element(&z, &vec![7], &Face::upper(k, 0).unwrap(), k).unwrap();
        assert_eq!(
            t.values(),
            &[vec![0], vec![7], vec![0], vec![7]]
        );

        // Diagonal in dimension 1.
        let d = diagonal_element(&z, &vec![3], 1).unwrap();
        assert_eq!(d.values(), &[vec![3], vec![3]]);
    }

    #[test]
    fn hk_word_example_over_z() {
        // g^{a1} · h^{a2} · m^{[2]} = (m, g+m, h+m, g+h+m).
        let z = Zd::new(1);
        let factors = vec![
            (vec![10i64], Face::upper(2, 0).unwrap()),
            (vec![200], Face::upper(2, 1).unwrap()),
            (vec![3], Face::full(2).unwrap()),
        ];
        let c = hk_word(&z, 2, &factors).unwrap();
        assert_eq!(c.values(), &[vec![3], vec![13], vec![203], vec![213]]);
        let w = hk_member_abelian(&z, &c).unwrap().unwrap();
        assert_eq!(w.base, vec![3]);
        assert_eq!(w.steps, vec![vec![10], vec![200]]);

        // A word of identity factors is the identity configuration.
        let idw = hk_word(
            &z,
            2,
            &[(z.identity(), Face::upper(2, 0).unwrap()), (z.identity(), Face::full(2).unwrap())],
        )
        .unwrap();
        assert!(idw.values().iter().all(|x| *x == z.identity()));
    }

    #[test]
    fn hk_membership_examples() {
        let z5 = Cyclic::new(5);
        let c = CubeConfig::new(2, vec![1u64, 3, 2, 4]).unwrap();
        let w = hk_member_abelian(&z5, &c).unwrap().unwrap();
        assert_eq!(w.base, 1);
        assert_eq!(w.steps, vec![2, 1]);

        let bad = CubeConfig::new(2, vec![0u64, 0, 0, 1]).unwrap();
        assert!(hk_member_abelian(&z5, &bad).unwrap().is_none());

        // Constant config has zero steps.
        let c = CubeConfig::constant(3, 4u64).unwrap();
        let w = hk_member_abelian(&z5, &c).unwrap().unwrap();
        assert!(w.steps.iter().all(|s| *s == 0));
    }

    #[test]
    fn hk_samples_stay_affine_over_z() {
        let z = Zd::new(1);
        let mut r = rng(7);
        for k in 1..=4usize {
            for _ in 0..2500 {
                let c = hk_sample(&z, k, r.gen_range(1..=6), &mut r).unwrap();
                assert!(hk_member_abelian(&z, &c).unwrap().is_some());
            }
        }
    }

    #[test]
    fn bfs_oracle_matches_affine_characterization() {
        // Z/2, k=1: the whole square.
        let z2 = Cyclic::new(2);
        assert_eq!(hk_generate_finite(&z2, 1).unwrap().len(), 4);

        // Z/5, k=2: exactly the 125 affine configs.
        let z5 = Cyclic::new(5);
        let set = hk_generate_finite(&z5, 2).unwrap();
        assert_eq!(set.len(), 125);
        for vals in &set {
            let c = CubeConfig::new(2, vals.clone()).unwrap();
            assert!(hk_member_abelian(&z5, &c).unwrap().is_some());
        }

        // Z/3, k=3: 81 = 3^4 affine configs.
        let z3 = Cyclic::new(3);
        assert_eq!(hk_generate_finite(&z3, 3).unwrap().len(), 81);
    }

    #[test]
    fn heisenberg_samples_lie_in_finite_quotient_oracle() {
        let h = HeisenbergZ;
        let hp = HeisenbergMod::new(3);
        let oracle = hk_generate_finite(&hp, 2).unwrap();
        let mut r = rng(21);
        for _ in 0..300 {
            let c = hk_sample(&h, 2, r.gen_range(1..=5), &mut r).unwrap();
            let reduced: Vec<[u64; 3]> = c.values().iter().map(|g| hp.reduce(g)).collect();
            assert!(oracle.contains(&reduced));
        }
    }

    #[test]
    fn hk_plus_abelian_is_the_diagonal() {
        let z5 = Cyclic::new(5);
        let diag = diagonal_element(&z5, &3, 2).unwrap();
        assert!(hk_plus_member_abelian(&z5, &diag).unwrap());
        let face = face_element(&z5, &2, &Face::upper(2, 0).unwrap(), 2).unwrap();
        assert!(!hk_plus_member_abelian(&z5, &face).unwrap());
        let sum = config_op(&z5, &diag, &face).unwrap();
        assert!(!hk_plus_member_abelian(&z5, &sum).unwrap());
    }

    #[test]
    fn edge_decomposition_base_case() {
        let z = Zd::new(1);
        // u = (2,5,3,6) in canonical order; theta = 2-5-3+6 = 0.
        let u = CubeConfig::new(2, vec![vec![2i64], vec![5], vec![3], vec![6]]).unwrap();
        assert_eq!(theta(&z, &u).unwrap(), vec![0]);
        let edges = edge_decompose(&z, &u).unwrap();
        let back = edge_sum(&z, 2, &edges).unwrap();
        assert_eq!(back, u);

        // Zero decomposes to nothing.
        let zero = CubeConfig::constant(2, vec![0i64]).unwrap();
        assert!(edge_decompose(&z, &zero).unwrap().is_empty());

        // Nonzero theta is rejected.
        let bad = CubeConfig::new(2, vec![vec![1i64], vec![0], vec![0], vec![0]]).unwrap();
        assert!(matches!(edge_decompose(&z, &bad), Err(Error::ThetaNonzero)));
    }

    #[test]
    fn edge_decomposition_random_and_exhaustive() {
        // 100 random kernel elements over Z/7 in dimensions 2..=4.
        let z7 = Cyclic::new(7);
        let mut r = rng(3);
        for n in 2..=4usize {
            let kernel = ThetaKernel::new(z7.clone(), n).unwrap();
            for _ in 0..100 {
                let c = CubeConfig::from_fn(n, |_| r.gen_range(0..7u64)).unwrap();
                let u = kernel.project(&c).unwrap();
                assert!(kernel.contains(&u).unwrap());
                let edges = edge_decompose(&z7, &u).unwrap();
                assert_eq!(edge_sum(&z7, n, &edges).unwrap(), u);
            }
        }

        // Exhaustive over Z/2 for n <= 3; also: the subgroup generated by
        // edge elements is exactly ker theta.
        let z2 = Cyclic::new(2);
        for n in 1..=3usize {
            let mut kernel_count = 0usize;
            for mask in 0..(1u64 << (1 << n)) {
                let c =
                    CubeConfig::from_fn(n, |v| (mask >> v.index()) & 1).unwrap();
                if theta(&z2, &c).unwrap() != 0 {
                    continue;
                }
                kernel_count += 1;
                let edges = edge_decompose(&z2, &c).unwrap();
                assert_eq!(edge_sum(&z2, n, &edges).unwrap(), c);
            }
            // Every edge element is in the kernel, and edge elements span it:
            // the decomposition above witnesses one inclusion; the count
            // matches |A|^(2^n - 1) for the kernel of a surjective character.
            assert_eq!(kernel_count, 1 << ((1 << n) - 1));
        }
    }

    #[test]
    fn coset_measures() {
        let a = FiniteAbelian::new(vec![6]);
        // H = A: uniform on everything.
        let m = haar_coset_measure(&a, &[vec![1]], &[0]).unwrap();
        assert_eq!(m.len(), 6);
        assert!((m.prob(&[4]) - 1.0 / 6.0).abs() < 1e-15);

        // H = {0}: point mass.
        let m = haar_coset_measure(&a, &[], &[2]).unwrap();
        assert_eq!(m.support(), &[vec![2]]);
        assert_eq!(m.prob(&[2]), 1.0);
        assert_eq!(m.prob(&[3]), 0.0);

        // A = Z/6, H = <2>, a = 1: uniform on {1,3,5}.
        let m = haar_coset_measure(&a, &[vec![2]], &[1]).unwrap();
        assert_eq!(m.support(), &[vec![1], vec![3], vec![5]]);
        assert!((m.prob(&[3]) - 1.0 / 3.0).abs() < 1e-15);
        let mut r = rng(5);
        for _ in 0..50 {
            let x = m.sample(&mut r);
            assert!(m.prob(&x) > 0.0);
        }

        // Generators outside the ambient group are rejected.
        assert!(matches!(
            haar_coset_measure(&a, &[vec![7]], &[0]),
            Err(Error::NotAMember)
        ));
    }
}
