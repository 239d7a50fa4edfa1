//! Combinatorics of discrete cubes `{0,1}^k`.
//!
//! Vertices are enumerated in little-endian lexicographic order: coordinate 1
//! is the least significant bit of the vertex index. This order is the single
//! canonical serialization order used everywhere in the crate — a
//! [`CubeConfig`] is stored as a flat array in this order and serializes as
//! `{"dim": k, "values": [...]}`.
//!
//! The module houses cube morphisms (coordinate rules), isomorphisms with
//! their sign `sgn(σ) = (-1)^{|I₁|}`, faces, corners, downward-closed sets,
//! glueing along the last coordinate, the alternating sum `θ`, and the index
//! maps of the tricube `{-1,0,1}^n`.

use crate::error::{Error, Result};
use crate::groups::Group;
use serde::{Deserialize, Serialize};

/// Maximum cube dimension handled by the combinatorics.
pub const MAX_DIM: usize = 16;

/// Maximum tricube dimension (`3^n` vertices).
pub const MAX_TRI_DIM: usize = 8;

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DIM {
        return Err(Error::DimensionOutOfRange { dim, max: MAX_DIM });
    }
    Ok(())
}

/// A vertex of the discrete cube `{0,1}^k`, stored as a bit pattern.
///
/// Coordinate `j` (0-based) is bit `j` of `bits`; the vertex index in the
/// canonical enumeration equals `bits` itself.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Vertex {
    dim: usize,
    bits: u32,
}

impl Vertex {
    pub fn new(dim: usize, bits: u32) -> Result<Self> {
        check_dim(dim)?;
        if dim < 32 && bits >= (1 << dim) {
            return Err(Error::InvalidInput(format!(
                "vertex bits {bits} out of range for dimension {dim}"
            )));
        }
        Ok(Vertex { dim, bits })
    }

    pub fn from_index(dim: usize, index: usize) -> Result<Self> {
        Vertex::new(dim, index as u32)
    }

    pub fn from_coords(coords: &[bool]) -> Result<Self> {
        check_dim(coords.len())?;
        let mut bits = 0u32;
        for (j, &b) in coords.iter().enumerate() {
            if b {
                bits |= 1 << j;
            }
        }
        Ok(Vertex { dim: coords.len(), bits })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Canonical index of this vertex (equals the bit pattern).
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// Coordinate `j`, 0-based.
    pub fn coord(&self, j: usize) -> bool {
        debug_assert!(j < self.dim);
        (self.bits >> j) & 1 == 1
    }

    pub fn coords(&self) -> Vec<bool> {
        (0..self.dim).map(|j| self.coord(j)).collect()
    }

    /// Number of coordinates equal to one.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Sign `(-1)^{|v|}` attached to this vertex in alternating sums.
    pub fn sign(&self) -> i32 {
        if self.weight().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Coordinate-wise partial order: `self ⊆ other`.
    pub fn subset_of(&self, other: &Vertex) -> bool {
        self.dim == other.dim && (self.bits & !other.bits) == 0
    }

    pub fn with_coord(&self, j: usize, value: bool) -> Vertex {
        let mut bits = self.bits;
        if value {
            bits |= 1 << j;
        } else {
            bits &= !(1 << j);
        }
        Vertex { dim: self.dim, bits }
    }

    /// The all-ones vertex of the given dimension.
    pub fn top(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Vertex { dim, bits: if dim == 32 { u32::MAX } else { (1u32 << dim) - 1 } })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Vertex { dim, bits: 0 })
    }

    pub fn is_top(&self) -> bool {
        self.weight() as usize == self.dim
    }
}

/// All `2^k` vertices of `{0,1}^k` in canonical order.
pub fn vertices(dim: usize) -> Result<Vec<Vertex>> {
    check_dim(dim)?;
    Ok((0..1usize << dim)
        .map(|i| Vertex { dim, bits: i as u32 })
        .collect())
}

/// A total labeling of `{0,1}^k` by values in `T`, in canonical vertex order.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct CubeConfig<T> {
    dim: usize,
    values: Vec<T>,
}

impl<T> CubeConfig<T> {
    pub fn new(dim: usize, values: Vec<T>) -> Result<Self> {
        check_dim(dim)?;
        let expected = 1usize << dim;
        if values.len() != expected {
            return Err(Error::BadConfigLength { dim, expected, got: values.len() });
        }
        Ok(CubeConfig { dim, values })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(Vertex) -> T) -> Result<Self> {
        let values = vertices(dim)?.into_iter().map(f).collect();
        Ok(CubeConfig { dim, values })
    }

    pub fn constant(dim: usize, value: T) -> Result<Self>
    where
        T: Clone,
    {
        check_dim(dim)?;
        Ok(CubeConfig { dim, values: vec![value; 1usize << dim] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, v: Vertex) -> &T {
        debug_assert_eq!(v.dim, self.dim);
        &self.values[v.index()]
    }

    pub fn at(&self, index: usize) -> &T {
        &self.values[index]
    }

    pub fn set(&mut self, v: Vertex, value: T) {
        debug_assert_eq!(v.dim, self.dim);
        self.values[v.index()] = value;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, &T)> {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, t)| (Vertex { dim: self.dim, bits: i as u32 }, t))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> CubeConfig<U> {
        CubeConfig { dim: self.dim, values: self.values.iter().map(f).collect() }
    }

    /// Zip two configs of the same dimension vertex-wise.
    pub fn zip_with<U, V>(
        &self,
        other: &CubeConfig<U>,
        mut f: impl FnMut(&T, &U) -> V,
    ) -> Result<CubeConfig<V>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(CubeConfig { dim: self.dim, values })
    }

    /// Restriction to a face, reindexed by the face's free coordinates.
    pub fn restrict(&self, face: &Face) -> Result<CubeConfig<T>>
    where
        T: Clone,
    {
        if face.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: face.dim });
        }
        apply_morphism(self, &face.inclusion_morphism())
    }

    /// Lower face `v_k = 0` as a `(k-1)`-cube.
    pub fn lower_face(&self) -> Result<CubeConfig<T>>
    where
        T: Clone,
    {
        self.restrict(&Face::coordinate_face(self.dim, self.dim - 1, false)?)
    }

    /// Upper face `v_k = 1` as a `(k-1)`-cube.
    pub fn upper_face(&self) -> Result<CubeConfig<T>>
    where
        T: Clone,
    {
        self.restrict(&Face::coordinate_face(self.dim, self.dim - 1, true)?)
    }
}

/// One output-coordinate rule of a discrete-cube morphism.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum MorphismRule {
    Const0,
    Const1,
    /// Copies input coordinate `i` (0-based).
    Coord(usize),
    /// Copies the negation `1 - ω_i` of input coordinate `i` (0-based).
    NegCoord(usize),
}

impl MorphismRule {
    fn eval(&self, input: Vertex) -> bool {
        match *self {
            MorphismRule::Const0 => false,
            MorphismRule::Const1 => true,
            MorphismRule::Coord(i) => input.coord(i),
            MorphismRule::NegCoord(i) => !input.coord(i),
        }
    }

    fn negate(&self) -> MorphismRule {
        match *self {
            MorphismRule::Const0 => MorphismRule::Const1,
            MorphismRule::Const1 => MorphismRule::Const0,
            MorphismRule::Coord(i) => MorphismRule::NegCoord(i),
            MorphismRule::NegCoord(i) => MorphismRule::Coord(i),
        }
    }
}

/// A morphism of discrete cubes `{0,1}^k → {0,1}^ℓ`: every output coordinate
/// is constant, an input coordinate, or a negated input coordinate.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct DiscreteCubeMorphism {
    arity: usize,
    rules: Vec<MorphismRule>,
}

impl DiscreteCubeMorphism {
    pub fn new(arity: usize, rules: Vec<MorphismRule>) -> Result<Self> {
        check_dim(arity)?;
        check_dim(rules.len())?;
        for rule in &rules {
            if let MorphismRule::Coord(i) | MorphismRule::NegCoord(i) = rule {
                if *i >= arity {
                    return Err(Error::CoordinateOutOfRange { index: *i, arity });
                }
            }
        }
        Ok(DiscreteCubeMorphism { arity, rules })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        DiscreteCubeMorphism::new(dim, (0..dim).map(MorphismRule::Coord).collect())
    }

    /// Input dimension `k`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Output dimension `ℓ`.
    pub fn target_dim(&self) -> usize {
        self.rules.len()
    }

    pub fn rules(&self) -> &[MorphismRule] {
        &self.rules
    }

    pub fn apply(&self, v: Vertex) -> Result<Vertex> {
        if v.dim() != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: v.dim() });
        }
        let mut bits = 0u32;
        for (j, rule) in self.rules.iter().enumerate() {
            if rule.eval(v) {
                bits |= 1 << j;
            }
        }
        Ok(Vertex { dim: self.rules.len(), bits })
    }

    /// `self ∘ other`: first `other: {0,1}^m → {0,1}^k`, then `self`.
    pub fn compose(&self, other: &DiscreteCubeMorphism) -> Result<DiscreteCubeMorphism> {
        if other.target_dim() != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: other.target_dim() });
        }
        let rules = self
            .rules
            .iter()
            .map(|rule| match *rule {
                MorphismRule::Const0 => MorphismRule::Const0,
                MorphismRule::Const1 => MorphismRule::Const1,
                MorphismRule::Coord(i) => other.rules[i],
                MorphismRule::NegCoord(i) => other.rules[i].negate(),
            })
            .collect();
        DiscreteCubeMorphism::new(other.arity, rules)
    }
}

/// Pull a configuration back along a morphism: the result at `w` is `c` at
/// `p(w)`. This is the cubespace axiom `c ↦ c∘p`.
pub fn apply_morphism<T: Clone>(
    c: &CubeConfig<T>,
    p: &DiscreteCubeMorphism,
) -> Result<CubeConfig<T>> {
    if p.target_dim() != c.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: p.target_dim() });
    }
    CubeConfig::from_fn(p.arity(), |w| c.value(p.apply(w).expect("arity checked")).clone())
}

/// A bijective morphism `{0,1}^k → {0,1}^k`, written with a coordinate
/// permutation `δ` and a flip set `I₁`:
/// `σ(v)_j = v_{δ(j)}` for `j ∉ I₁` and `1 - v_{δ(j)}` for `j ∈ I₁`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CubeIsomorphism {
    dim: usize,
    /// `perm[j] = δ(j)`, 0-based.
    perm: Vec<usize>,
    /// Bit `j` set iff `j ∈ I₁`.
    flips: u32,
}

impl CubeIsomorphism {
    pub fn new(dim: usize, perm: Vec<usize>, flip_set: &[usize]) -> Result<Self> {
        check_dim(dim)?;
        if perm.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: perm.len() });
        }
        let mut seen = vec![false; dim];
        for &p in &perm {
            if p >= dim || seen[p] {
                return Err(Error::InvalidInput(format!("perm is not a bijection: {perm:?}")));
            }
            seen[p] = true;
        }
        let mut flips = 0u32;
        for &j in flip_set {
            if j >= dim {
                return Err(Error::CoordinateOutOfRange { index: j, arity: dim });
            }
            flips |= 1 << j;
        }
        Ok(CubeIsomorphism { dim, perm, flips })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        CubeIsomorphism::new(dim, (0..dim).collect(), &[])
    }

    /// Reflect a single coordinate (`I₁ = {coord}`, `δ = id`).
    pub fn reflect(dim: usize, coord: usize) -> Result<Self> {
        CubeIsomorphism::new(dim, (0..dim).collect(), &[coord])
    }

    /// Swap two coordinates (`I₁ = ∅`).
    pub fn swap(dim: usize, a: usize, b: usize) -> Result<Self> {
        let mut perm: Vec<usize> = (0..dim).collect();
        perm.swap(a, b);
        CubeIsomorphism::new(dim, perm, &[])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `sgn(σ) = (-1)^{|I₁|}`.
    pub fn sgn(&self) -> i32 {
        if self.flips.count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        debug_assert_eq!(v.dim, self.dim);
        let mut bits = 0u32;
        for j in 0..self.dim {
            let mut b = v.coord(self.perm[j]);
            if (self.flips >> j) & 1 == 1 {
                b = !b;
            }
            if b {
                bits |= 1 << j;
            }
        }
        Vertex { dim: self.dim, bits }
    }

    pub fn inverse(&self) -> CubeIsomorphism {
        let mut perm = vec![0usize; self.dim];
        let mut flips = 0u32;
        for j in 0..self.dim {
            perm[self.perm[j]] = j;
            if (self.flips >> j) & 1 == 1 {
                flips |= 1 << self.perm[j];
            }
        }
        CubeIsomorphism { dim: self.dim, perm, flips }
    }

    /// `self ∘ other` as vertex maps.
    pub fn compose(&self, other: &CubeIsomorphism) -> Result<CubeIsomorphism> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        // (self∘other)(v)_j = other-output coord δ_self(j), possibly flipped.
        let mut perm = vec![0usize; self.dim];
        let mut flips = 0u32;
        for j in 0..self.dim {
            let mid = self.perm[j];
            perm[j] = other.perm[mid];
            let f = ((self.flips >> j) & 1) ^ ((other.flips >> mid) & 1);
            flips |= f << j;
        }
        Ok(CubeIsomorphism { dim: self.dim, perm, flips })
    }

    pub fn as_morphism(&self) -> DiscreteCubeMorphism {
        let rules = (0..self.dim)
            .map(|j| {
                if (self.flips >> j) & 1 == 1 {
                    MorphismRule::NegCoord(self.perm[j])
                } else {
                    MorphismRule::Coord(self.perm[j])
                }
            })
            .collect();
        DiscreteCubeMorphism { arity: self.dim, rules }
    }

    /// Enumerate all isomorphisms of `{0,1}^k` (there are `k!·2^k`).
    pub fn all(dim: usize) -> Result<Vec<CubeIsomorphism>> {
        check_dim(dim)?;
        if dim > 6 {
            return Err(Error::SizeCap(format!("enumerating isomorphisms of dimension {dim}")));
        }
        let mut perms: Vec<Vec<usize>> = Vec::new();
        let mut current: Vec<usize> = (0..dim).collect();
        permutations(&mut current, 0, &mut perms);
        let mut out = Vec::new();
        for perm in perms {
            for flips in 0..(1u32 << dim) {
                out.push(CubeIsomorphism { dim, perm: perm.clone(), flips });
            }
        }
        Ok(out)
    }
}

fn permutations(current: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == current.len() {
        out.push(current.clone());
        return;
    }
    for i in start..current.len() {
        current.swap(start, i);
        permutations(current, start + 1, out);
        current.swap(start, i);
    }
}

/// Act by an isomorphism on a configuration: `(σc)_v = c_{σ(v)}`.
pub fn act_iso<T: Clone>(c: &CubeConfig<T>, sigma: &CubeIsomorphism) -> Result<CubeConfig<T>> {
    if c.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: sigma.dim() });
    }
    CubeConfig::from_fn(c.dim(), |v| c.value(sigma.apply(v)).clone())
}

/// A face of `{0,1}^k`: a subcube obtained by fixing a subset of coordinates.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Face {
    dim: usize,
    /// Bit `j` set iff coordinate `j` is fixed.
    fixed_mask: u32,
    /// Values of the fixed coordinates (bits outside `fixed_mask` are zero).
    fixed_bits: u32,
}

impl Face {
    pub fn new(dim: usize, fixed: &[(usize, bool)]) -> Result<Self> {
        check_dim(dim)?;
        let mut fixed_mask = 0u32;
        let mut fixed_bits = 0u32;
        for &(j, b) in fixed {
            if j >= dim {
                return Err(Error::CoordinateOutOfRange { index: j, arity: dim });
            }
            fixed_mask |= 1 << j;
            if b {
                fixed_bits |= 1 << j;
            }
        }
        Ok(Face { dim, fixed_mask, fixed_bits })
    }

    /// The whole cube as a face (nothing fixed).
    pub fn full(dim: usize) -> Result<Self> {
        Face::new(dim, &[])
    }

    /// The `j`-th upper face `{v : v_j = 1}` (0-based `j`).
    pub fn upper(dim: usize, j: usize) -> Result<Self> {
        Face::new(dim, &[(j, true)])
    }

    /// Fix a single coordinate to the given value.
    pub fn coordinate_face(dim: usize, j: usize, value: bool) -> Result<Self> {
        Face::new(dim, &[(j, value)])
    }

    /// An edge: all coordinates fixed except `free_coord`. The fixed bits are
    /// read from `base` (its `free_coord` bit is ignored).
    pub fn edge(dim: usize, free_coord: usize, base: Vertex) -> Result<Self> {
        if free_coord >= dim {
            return Err(Error::CoordinateOutOfRange { index: free_coord, arity: dim });
        }
        let fixed_mask = (((1u64 << dim) - 1) as u32) & !(1 << free_coord);
        let fixed_bits = base.bits & fixed_mask;
        Ok(Face { dim, fixed_mask, fixed_bits })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn codim(&self) -> usize {
        self.fixed_mask.count_ones() as usize
    }

    /// Dimension of the subcube itself.
    pub fn face_dim(&self) -> usize {
        self.dim - self.codim()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        debug_assert_eq!(v.dim, self.dim);
        v.bits & self.fixed_mask == self.fixed_bits
    }

    /// Free coordinates in increasing order.
    pub fn free_coords(&self) -> Vec<usize> {
        (0..self.dim).filter(|j| (self.fixed_mask >> j) & 1 == 0).collect()
    }

    /// Fixed coordinates with their values, in increasing order.
    pub fn fixed_coords(&self) -> Vec<(usize, bool)> {
        (0..self.dim)
            .filter(|j| (self.fixed_mask >> j) & 1 == 1)
            .map(|j| (j, (self.fixed_bits >> j) & 1 == 1))
            .collect()
    }

    /// Embed this face into a cube one dimension higher, fixing the new last
    /// coordinate to `value`.
    pub fn lift_last(&self, value: bool) -> Result<Face> {
        let mut fixed = self.fixed_coords();
        fixed.push((self.dim, value));
        Face::new(self.dim + 1, &fixed)
    }

    /// The vertices of the face, in the canonical order of the ambient cube.
    pub fn vertex_set(&self) -> Vec<Vertex> {
        let free = self.free_coords();
        let mut out = Vec::with_capacity(1 << free.len());
        for pattern in 0..(1u32 << free.len()) {
            let mut bits = self.fixed_bits;
            for (t, &j) in free.iter().enumerate() {
                if (pattern >> t) & 1 == 1 {
                    bits |= 1 << j;
                }
            }
            out.push(Vertex { dim: self.dim, bits });
        }
        out.sort();
        out
    }

    /// Inclusion of the face as a morphism `{0,1}^m → {0,1}^k`, `m` the face
    /// dimension; free coordinates are enumerated in increasing order.
    pub fn inclusion_morphism(&self) -> DiscreteCubeMorphism {
        let free = self.free_coords();
        let rules = (0..self.dim)
            .map(|j| {
                if (self.fixed_mask >> j) & 1 == 1 {
                    if (self.fixed_bits >> j) & 1 == 1 {
                        MorphismRule::Const1
                    } else {
                        MorphismRule::Const0
                    }
                } else {
                    MorphismRule::Coord(free.iter().position(|&f| f == j).unwrap())
                }
            })
            .collect();
        DiscreteCubeMorphism { arity: free.len(), rules }
    }
}

/// A downward-closed subset of `{0,1}^d`.
#[derive(Clone, Debug)]
pub struct DownwardClosedSet {
    dim: usize,
    members: Vec<bool>,
}

impl DownwardClosedSet {
    pub fn new(dim: usize, vertices: &[Vertex]) -> Result<Self> {
        check_dim(dim)?;
        let mut members = vec![false; 1 << dim];
        for v in vertices {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
            }
            members[v.index()] = true;
        }
        let set = DownwardClosedSet { dim, members };
        if !set.is_downward_closed() {
            return Err(Error::NotDownwardClosed);
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.members[v.index()]
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_downward_closed(&self) -> bool {
        for (i, &m) in self.members.iter().enumerate() {
            if !m {
                continue;
            }
            let bits = i as u32;
            for j in 0..self.dim {
                if (bits >> j) & 1 == 1 && !self.members[(bits & !(1 << j)) as usize] {
                    return false;
                }
            }
        }
        true
    }
}

/// The missing vertices of a downward-closed set in non-decreasing weight
/// order (ties broken by canonical index). Appending vertices in this order
/// keeps every prefix downward-closed, which is the induction order used by
/// all corner-completion routines.
pub fn extension_order(set: &DownwardClosedSet) -> Vec<Vertex> {
    let mut missing: Vec<Vertex> = vertices(set.dim())
        .expect("dim checked at construction")
        .into_iter()
        .filter(|v| !set.contains(*v))
        .collect();
    missing.sort_by_key(|v| (v.weight(), v.index()));
    missing
}

/// A labeling of `{0,1}^ℓ ∖ {1⃗}`: 2^ℓ - 1 values, canonical order with the
/// top vertex absent.
#[derive(Clone, PartialEq, Debug)]
pub struct Corner<T> {
    dim: usize,
    values: Vec<T>,
}

impl<T> Corner<T> {
    pub fn new(dim: usize, values: Vec<T>) -> Result<Self> {
        check_dim(dim)?;
        if dim == 0 {
            return Err(Error::InvalidInput("a corner needs dimension >= 1".into()));
        }
        let expected = (1usize << dim) - 1;
        if values.len() != expected {
            return Err(Error::BadConfigLength { dim, expected, got: values.len() });
        }
        Ok(Corner { dim, values })
    }

    /// Drop the top vertex of a full configuration.
    pub fn from_config(c: &CubeConfig<T>) -> Result<Self>
    where
        T: Clone,
    {
        let mut values = c.values().to_vec();
        values.pop();
        Corner::new(c.dim(), values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, v: Vertex) -> &T {
        debug_assert!(!v.is_top());
        &self.values[v.index()]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// The face `λ|_{ω_i = 0}` as an `(ℓ-1)`-cube; every vertex avoids the top.
    pub fn face(&self, i: usize) -> Result<CubeConfig<T>>
    where
        T: Clone,
    {
        if i >= self.dim {
            return Err(Error::CoordinateOutOfRange { index: i, arity: self.dim });
        }
        let incl = Face::coordinate_face(self.dim, i, false)?.inclusion_morphism();
        CubeConfig::from_fn(self.dim - 1, |w| {
            self.value(incl.apply(w).expect("dims match")).clone()
        })
    }

    /// Complete the corner with a top value.
    pub fn complete(&self, top: T) -> CubeConfig<T>
    where
        T: Clone,
    {
        let mut values = self.values.clone();
        values.push(top);
        CubeConfig { dim: self.dim, values }
    }
}

/// Glue two `k`-cubes along the last coordinate. Requires the upper face of
/// `c1` to match the lower face of `c2` within `tol` under `dist`; the result
/// keeps the lower face of `c1` and the upper face of `c2`.
pub fn glue<T: Clone>(
    c1: &CubeConfig<T>,
    c2: &CubeConfig<T>,
    dist: impl Fn(&T, &T) -> f64,
    tol: f64,
) -> Result<CubeConfig<T>> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch { expected: c1.dim(), got: c2.dim() });
    }
    let k = c1.dim();
    if k == 0 {
        return Err(Error::InvalidInput("glueing needs dimension >= 1".into()));
    }
    let last = k - 1;
    let mut max_dev: f64 = 0.0;
    for v in vertices(k - 1)? {
        let upper1 = Vertex { dim: k, bits: v.bits | (1 << last) };
        let lower2 = Vertex { dim: k, bits: v.bits };
        max_dev = max_dev.max(dist(c1.value(upper1), c2.value(lower2)));
    }
    if max_dev > tol {
        return Err(Error::NotGlueable { max_dev, tol });
    }
    CubeConfig::from_fn(k, |v| {
        if v.coord(last) {
            c2.value(v).clone()
        } else {
            c1.value(v).clone()
        }
    })
}

/// Glue for exactly comparable labels (discrete tolerance).
pub fn glue_exact<T: Clone + PartialEq>(
    c1: &CubeConfig<T>,
    c2: &CubeConfig<T>,
) -> Result<CubeConfig<T>> {
    glue(c1, c2, |a, b| if a == b { 0.0 } else { 1.0 }, 0.0)
}

/// The alternating sum `θ(a) = Σ_v (-1)^{|v|} a_v` over an abelian group.
pub fn theta<G: Group>(group: &G, a: &CubeConfig<G::Elem>) -> Result<G::Elem> {
    if !group.is_abelian() {
        return Err(Error::NonAbelian);
    }
    let mut acc = group.identity();
    for (v, x) in a.iter() {
        if v.sign() > 0 {
            acc = group.op(&acc, x);
        } else {
            acc = group.op(&acc, &group.inv(x));
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Tricube index maps
// ---------------------------------------------------------------------------

/// Number of vertices of the tricube `{-1,0,1}^n`.
pub fn tri_len(n: usize) -> usize {
    3usize.pow(n as u32)
}

fn check_tri_dim(n: usize) -> Result<()> {
    if n > MAX_TRI_DIM {
        return Err(Error::DimensionOutOfRange { dim: n, max: MAX_TRI_DIM });
    }
    Ok(())
}

/// Canonical index of a tricube vertex: digit `w_j + 1` in base 3, coordinate
/// 0 least significant.
pub fn tri_index(w: &[i8]) -> usize {
    let mut idx = 0usize;
    for &d in w.iter().rev() {
        debug_assert!((-1..=1).contains(&d));
        idx = idx * 3 + (d + 1) as usize;
    }
    idx
}

/// Inverse of [`tri_index`].
pub fn tri_vertex(n: usize, mut index: usize) -> Vec<i8> {
    let mut w = Vec::with_capacity(n);
    for _ in 0..n {
        w.push((index % 3) as i8 - 1);
        index /= 3;
    }
    w
}

/// All tricube vertices in canonical order.
pub fn tri_vertices(n: usize) -> Result<Vec<Vec<i8>>> {
    check_tri_dim(n)?;
    Ok((0..tri_len(n)).map(|i| tri_vertex(n, i)).collect())
}

/// The unit-subcube embedding `Ψ_v(ε)_j = (1 - 2 v_j)(1 - ε_j)`.
pub fn psi_embed(v: Vertex, eps: Vertex) -> Result<Vec<i8>> {
    if v.dim() != eps.dim() {
        return Err(Error::DimensionMismatch { expected: v.dim(), got: eps.dim() });
    }
    check_tri_dim(v.dim())?;
    Ok((0..v.dim())
        .map(|j| {
            let a = if v.coord(j) { -1i8 } else { 1i8 };
            let b = if eps.coord(j) { 0i8 } else { 1i8 };
            a * b
        })
        .collect())
}

/// The outer-vertex embedding `Ω(v) = Ψ_v(0⃗)`, landing in `{-1,1}^n`.
pub fn omega_embed(v: Vertex) -> Result<Vec<i8>> {
    psi_embed(v, Vertex::zero(v.dim())?)
}

/// The coordinatewise embedding `{-1,0,1}^n → {0,1}^{2n}` with
/// `1 ↦ (0,0)`, `0 ↦ (1,0)` and `-1 ↦ (0,1)`.
pub fn q_embed(w: &[i8]) -> Result<Vertex> {
    check_tri_dim(w.len())?;
    let mut bits = 0u32;
    for (j, &d) in w.iter().enumerate() {
        match d {
            1 => {}
            0 => bits |= 1 << (2 * j),
            -1 => bits |= 1 << (2 * j + 1),
            _ => return Err(Error::InvalidInput(format!("tricube digit {d} out of range"))),
        }
    }
    Vertex::new(2 * w.len(), bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Cyclic, Zd};

    #[test]
    fn vertex_enumeration_orders() {
        let vs = vertices(0).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].weight(), 0);

        let vs = vertices(2).unwrap();
        let coords: Vec<Vec<bool>> = vs.iter().map(|v| v.coords()).collect();
        assert_eq!(
            coords,
            vec![
                vec![false, false],
                vec![true, false],
                vec![false, true],
                vec![true, true]
            ]
        );

        let ws: Vec<u32> = vertices(3).unwrap().iter().map(|v| v.weight()).collect();
        assert_eq!(ws, vec![0, 1, 1, 2, 1, 2, 2, 3]);

        assert!(vertices(17).is_err());
    }

    #[test]
    fn morphism_application() {
        // c on {0,1}^2 with values a,b,d,e in canonical order.
        let c = CubeConfig::new(2, vec!["a", "b", "d", "e"]).unwrap();

        let id = DiscreteCubeMorphism::identity(2).unwrap();
        assert_eq!(apply_morphism(&c, &id).unwrap(), c);

        // Diagonal ω ↦ (ω, ω).
        let diag =
            DiscreteCubeMorphism::new(1, vec![MorphismRule::Coord(0), MorphismRule::Coord(0)])
                .unwrap();
        let r = apply_morphism(&c, &diag).unwrap();
        assert_eq!(r.values(), &["a", "e"]);

        // Anti-diagonal ω ↦ (ω, 1-ω): brute-force vertex loop agrees.
        let anti =
            DiscreteCubeMorphism::new(1, vec![MorphismRule::Coord(0), MorphismRule::NegCoord(0)])
                .unwrap();
        let r = apply_morphism(&c, &anti).unwrap();
        assert_eq!(r.values(), &["d", "b"]);
        for w in vertices(1).unwrap() {
            assert_eq!(r.value(w), c.value(anti.apply(w).unwrap()));
        }
    }

    #[test]
    fn morphism_composition_respected() {
        let c = CubeConfig::new(3, (0..8).collect()).unwrap();
        let p = DiscreteCubeMorphism::new(
            2,
            vec![MorphismRule::Coord(1), MorphismRule::NegCoord(0), MorphismRule::Const1],
        )
        .unwrap();
        let q =
            DiscreteCubeMorphism::new(1, vec![MorphismRule::NegCoord(0), MorphismRule::Coord(0)])
                .unwrap();
        let lhs = apply_morphism(&apply_morphism(&c, &p).unwrap(), &q).unwrap();
        let rhs = apply_morphism(&c, &p.compose(&q).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn sgn_and_iso_action() {
        let id = CubeIsomorphism::identity(2).unwrap();
        assert_eq!(id.sgn(), 1);

        let refl = CubeIsomorphism::reflect(2, 0).unwrap();
        assert_eq!(refl.sgn(), -1);

        let sw = CubeIsomorphism::swap(2, 0, 1).unwrap();
        assert_eq!(sw.sgn(), 1);
        let c = CubeConfig::new(2, vec![0, 1, 2, 3]).unwrap();
        let t = act_iso(&c, &sw).unwrap();
        // Transpose of the 2x2 labeling.
        assert_eq!(t.values(), &[0, 2, 1, 3]);

        // Round trip through the inverse.
        let sigma = CubeIsomorphism::new(3, vec![2, 0, 1], &[1]).unwrap();
        let back = act_iso(&act_iso(&c3(), &sigma).unwrap(), &sigma.inverse()).unwrap();
        assert_eq!(back, c3());
    }

    fn c3() -> CubeConfig<i32> {
        CubeConfig::new(3, (0..8).collect()).unwrap()
    }

    #[test]
    fn sgn_multiplicative_and_compose_consistent() {
        for dim in 1..=3usize {
            let all = CubeIsomorphism::all(dim).unwrap();
            assert_eq!(all.len(), (1..=dim).product::<usize>() * (1 << dim));
            let c = CubeConfig::from_fn(dim, |v| v.index() as i32).unwrap();
            for a in all.iter().step_by(3) {
                for b in all.iter().step_by(5) {
                    let ab = a.compose(b).unwrap();
                    assert_eq!(ab.sgn(), a.sgn() * b.sgn());
                    // Action composes contravariantly with vertex maps:
                    // (σ∘τ)(c) = τ-then-σ on vertices, i.e. act(act(c,a),b) at v is
                    // c at a(b(v)).
                    let lhs = act_iso(&act_iso(&c, a).unwrap(), b).unwrap();
                    let rhs = act_iso(&c, &a.compose(b).unwrap()).unwrap();
                    for v in vertices(dim).unwrap() {
                        assert_eq!(rhs.value(v), c.value(a.apply(b.apply(v))));
                        assert_eq!(lhs.value(v), rhs.value(v));
                    }
                }
            }
        }
    }

    #[test]
    fn glue_paths_and_failures() {
        // Constant cubes glue to themselves.
        let c = CubeConfig::constant(2, 7u64).unwrap();
        assert_eq!(glue_exact(&c, &c).unwrap(), c);

        // Path composition in dimension 1.
        let c1 = CubeConfig::new(1, vec![1, 2]).unwrap();
        let c2 = CubeConfig::new(1, vec![2, 5]).unwrap();
        assert_eq!(glue_exact(&c1, &c2).unwrap().values(), &[1, 5]);

        let c3 = CubeConfig::new(1, vec![3, 5]).unwrap();
        assert!(matches!(glue_exact(&c1, &c3), Err(Error::NotGlueable { .. })));
    }

    #[test]
    fn glue_affine_over_z7() {
        // Affine configs over Z/7: c_v = a + b1 v1 + b2 v2.
        let z7 = Cyclic::new(7);
        let affine = |a: u64, b1: u64, b2: u64| {
            CubeConfig::from_fn(2, |v| {
                (a + b1 * v.coord(0) as u64 + b2 * v.coord(1) as u64) % 7
            })
            .unwrap()
        };
        let c1 = affine(1, 2, 3);
        let c2 = affine(1 + 3, 2, 4);
        let glued = glue_exact(&c1, &c2).unwrap();
        // Brute-force assembly vertex by vertex.
        for v in vertices(2).unwrap() {
            let expect = if v.coord(1) { c2.value(v) } else { c1.value(v) };
            assert_eq!(glued.value(v), expect);
        }
        let _ = z7;
    }

    #[test]
    fn theta_vanishing_cases() {
        let z = Zd::new(1);
        // Constant config.
        let c = CubeConfig::constant(3, vec![5i64]).unwrap();
        assert_eq!(theta(&z, &c).unwrap(), vec![0]);

        // Edge element: g on the two vertices of an edge, zero elsewhere.
        for n in 1..=3usize {
            for free in 0..n {
                let base = Vertex::from_index(n, (1 << n) - 1).unwrap();
                let edge = Face::edge(n, free, base).unwrap();
                let c = CubeConfig::from_fn(n, |v| {
                    if edge.contains(v) {
                        vec![9i64]
                    } else {
                        vec![0]
                    }
                })
                .unwrap();
                assert_eq!(theta(&z, &c).unwrap(), vec![0]);
            }
        }

        // Affine config a + b1 v1 + b2 v2 over Z, brute-force over 4 vertices.
        let affine = CubeConfig::from_fn(2, |v| {
            vec![4 + 2 * v.coord(0) as i64 + 5 * v.coord(1) as i64]
        })
        .unwrap();
        let brute: i64 = affine
            .iter()
            .map(|(v, x)| v.sign() as i64 * x[0])
            .sum();
        assert_eq!(brute, 0);
        assert_eq!(theta(&z, &affine).unwrap(), vec![0]);
    }

    #[test]
    fn extension_order_cases() {
        let full = DownwardClosedSet::new(2, &vertices(2).unwrap()).unwrap();
        assert!(extension_order(&full).is_empty());

        let missing_top =
            DownwardClosedSet::new(2, &vertices(2).unwrap()[..3]).unwrap();
        let order = extension_order(&missing_top);
        assert_eq!(order.len(), 1);
        assert!(order[0].is_top());

        let low: Vec<Vertex> = vertices(3)
            .unwrap()
            .into_iter()
            .filter(|v| v.weight() <= 1)
            .collect();
        let set = DownwardClosedSet::new(3, &low).unwrap();
        let ws: Vec<u32> = extension_order(&set).iter().map(|v| v.weight()).collect();
        assert_eq!(ws, vec![2, 2, 2, 3]);

        // Prefixes stay downward-closed.
        let mut have = low;
        for v in extension_order(&set) {
            have.push(v);
            assert!(DownwardClosedSet::new(3, &have).is_ok());
        }

        // Not downward-closed is rejected.
        let bad = vec![Vertex::from_index(2, 3).unwrap()];
        assert!(matches!(DownwardClosedSet::new(2, &bad), Err(Error::NotDownwardClosed)));
    }

    #[test]
    fn tricube_maps_match_definitions() {
        // n = 1: Ψ_0 = (0↦1, 1↦0), Ψ_1 = (0↦-1, 1↦0); Ω = (0↦1, 1↦-1).
        let v0 = Vertex::from_index(1, 0).unwrap();
        let v1 = Vertex::from_index(1, 1).unwrap();
        assert_eq!(psi_embed(v0, v0).unwrap(), vec![1]);
        assert_eq!(psi_embed(v0, v1).unwrap(), vec![0]);
        assert_eq!(psi_embed(v1, v0).unwrap(), vec![-1]);
        assert_eq!(psi_embed(v1, v1).unwrap(), vec![0]);
        assert_eq!(omega_embed(v0).unwrap(), vec![1]);
        assert_eq!(omega_embed(v1).unwrap(), vec![-1]);

        // q per coordinate: 1↦(0,0), 0↦(1,0), -1↦(0,1).
        assert_eq!(q_embed(&[1]).unwrap().coords(), vec![false, false]);
        assert_eq!(q_embed(&[0]).unwrap().coords(), vec![true, false]);
        assert_eq!(q_embed(&[-1]).unwrap().coords(), vec![false, true]);

        // n = 2: the image of Ω is the four outer corners.
        let mut outer: Vec<Vec<i8>> = vertices(2)
            .unwrap()
            .into_iter()
            .map(|v| omega_embed(v).unwrap())
            .collect();
        outer.sort();
        assert_eq!(
            outer,
            vec![vec![-1, -1], vec![-1, 1], vec![1, -1], vec![1, 1]]
        );

        // Ψ_v is injective on {0,1}^n.
        for v in vertices(2).unwrap() {
            let mut seen = std::collections::HashSet::new();
            for eps in vertices(2).unwrap() {
                assert!(seen.insert(psi_embed(v, eps).unwrap()));
            }
        }

        // q is injective.
        let mut seen = std::collections::HashSet::new();
        for w in tri_vertices(2).unwrap() {
            assert!(seen.insert(q_embed(&w).unwrap()));
        }
    }

    #[test]
    fn q_composed_with_psi_is_a_cube_morphism() {
        // q∘Ψ_v per coordinate j is (Coord(j), Const0) when v_j = 0 and
        // (Coord(j), NegCoord(j)) when v_j = 1; spot-check against values.
        for n in 1..=3usize {
            for v in vertices(n).unwrap() {
                let rules: Vec<MorphismRule> = (0..n)
                    .flat_map(|j| {
                        if v.coord(j) {
                            vec![MorphismRule::Coord(j), MorphismRule::NegCoord(j)]
                        } else {
                            vec![MorphismRule::Coord(j), MorphismRule::Const0]
                        }
                    })
                    .collect();
                let m = DiscreteCubeMorphism::new(n, rules).unwrap();
                for eps in vertices(n).unwrap() {
                    let via_maps = q_embed(&psi_embed(v, eps).unwrap()).unwrap();
                    assert_eq!(via_maps, m.apply(eps).unwrap());
                }
            }
        }
    }

    #[test]
    fn face_machinery() {
        // k=2 upper face of coordinate 0: vertices (1,0) and (1,1).
        let f = Face::upper(2, 0).unwrap();
        let vs: Vec<usize> = f.vertex_set().iter().map(|v| v.index()).collect();
        assert_eq!(vs, vec![1, 3]);
        assert_eq!(f.codim(), 1);

        let full = Face::full(3).unwrap();
        assert_eq!(full.vertex_set().len(), 8);
        assert_eq!(full.face_dim(), 3);

        // Restriction via the inclusion morphism.
        let c = CubeConfig::new(2, vec![10, 11, 12, 13]).unwrap();
        let r = c.restrict(&f).unwrap();
        assert_eq!(r.values(), &[11, 13]);
        assert_eq!(c.lower_face().unwrap().values(), &[10, 11]);
        assert_eq!(c.upper_face().unwrap().values(), &[12, 13]);
    }

    #[test]
    fn corner_faces() {
        let corner = Corner::new(2, vec![1, 2, 3]).unwrap();
        assert_eq!(corner.face(0).unwrap().values(), &[1, 3]);
        assert_eq!(corner.face(1).unwrap().values(), &[1, 2]);
        let full = corner.complete(9);
        assert_eq!(full.values(), &[1, 2, 3, 9]);
    }
}
