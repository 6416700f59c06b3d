//! Computational manifolds: flat quotients, embedded hypersurfaces and
//! products of the two, with on-demand reduction modulo the deck group.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::scalar::Real;

/// A point in ambient coordinates.
pub type Point<T> = DVector<T>;

type ScalarFn<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;
type VectorFn<T> = Arc<dyn Fn(&Point<T>) -> DVector<T> + Send + Sync>;
type MatrixFn<T> = Arc<dyn Fn(&Point<T>) -> DMatrix<T> + Send + Sync>;

/// Default deck-word length for breadth-first identification.
pub const DEFAULT_MAX_WORD_LEN: usize = 6;
/// Word length of the neighbour set used around the fundamental box.
const NEIGHBOUR_WORD_LEN: usize = 2;
/// Tolerance for `reduce_point` identifications.
const IDENTIFY_TOL: f64 = 1e-6;
/// Constraint residual above which a point counts as off the manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ManifoldKind {
    FlatQuotient,
    Embedded,
    ProductQuotient,
}

/// Level-set constraint `c(p) = 0` cutting the manifold out of ambient space.
#[derive(Clone)]
pub struct Constraint<T: Real> {
    value: ScalarFn<T>,
    gradient: Option<VectorFn<T>>,
    hessian: Option<MatrixFn<T>>,
}

impl<T: Real> Constraint<T> {
    /// Constraint given by its value only; derivatives use central differences.
    pub fn new(value: impl Fn(&Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    /// `sum_{i in indices} p_i^2 - radius^2`, with exact derivatives.
    pub fn sphere(indices: &[usize], radius: T) -> Self {
        let idx: Arc<[usize]> = indices.into();
        let (i0, i1, i2) = (idx.clone(), idx.clone(), idx);
        Self {
            value: Arc::new(move |p: &Point<T>| {
                i0.iter().fold(-radius * radius, |acc, &i| acc + p[i] * p[i])
            }),
            gradient: Some(Arc::new(move |p: &Point<T>| {
                let mut g = DVector::zeros(p.len());
                for &i in i1.iter() {
                    g[i] = p[i] + p[i];
                }
                g
            })),
            hessian: Some(Arc::new(move |p: &Point<T>| {
                let mut h = DMatrix::zeros(p.len(), p.len());
                for &i in i2.iter() {
                    h[(i, i)] = T::lit(2.0);
                }
                h
            })),
        }
    }

    pub fn value(&self, p: &Point<T>) -> T {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &Point<T>) -> DVector<T> {
        if let Some(g) = &self.gradient {
            return g(p);
        }
        let h = T::fd_step();
        let two_h = h + h;
        DVector::from_fn(p.len(), |i, _| {
            let mut a = p.clone();
            let mut b = p.clone();
            a[i] += h;
            b[i] -= h;
            (self.value(&a) - self.value(&b)) / two_h
        })
    }

    pub fn hessian(&self, p: &Point<T>) -> DMatrix<T> {
        if let Some(hf) = &self.hessian {
            return hf(p);
        }
        let h = T::fd_step2();
        let n = p.len();
        let four_h2 = T::lit(4.0) * h * h;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let eval = |si: T, sj: T| {
                    let mut q = p.clone();
                    q[i] += si * h;
                    q[j] += sj * h;
                    self.value(&q)
                };
                let one = T::one();
                let v = (eval(one, one) - eval(one, -one) - eval(-one, one) + eval(-one, -one))
                    / four_h2;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}

/// Affine map `p -> A p + b` on ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct DeckMap<T: Real> {
    pub linear: DMatrix<T>,
    pub offset: DVector<T>,
}

impl<T: Real> DeckMap<T> {
    pub fn new(linear: DMatrix<T>, offset: DVector<T>) -> Self {
        assert_eq!(linear.nrows(), offset.len());
        assert_eq!(linear.ncols(), offset.len());
        Self { linear, offset }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim))
    }

    pub fn translation(offset: DVector<T>) -> Self {
        let n = offset.len();
        Self::new(DMatrix::identity(n, n), offset)
    }

    pub fn apply(&self, p: &Point<T>) -> Point<T> {
        &self.linear * p + &self.offset
    }

    /// Differential of the map, acting on tangent vectors.
    pub fn push_vector(&self, v: &DVector<T>) -> DVector<T> {
        &self.linear * v
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &DeckMap<T>) -> DeckMap<T> {
        DeckMap::new(
            &next.linear * &self.linear,
            &next.linear * &self.offset + &next.offset,
        )
    }

    pub fn inverse(&self) -> Option<DeckMap<T>> {
        let inv = self.linear.clone().try_inverse()?;
        let off = -(&inv * &self.offset);
        Some(DeckMap::new(inv, off))
    }

    fn key(&self) -> Vec<i64> {
        let q = |x: T| (x.as_f64() * 1e8).round() as i64;
        self.linear
            .iter()
            .chain(self.offset.iter())
            .map(|&x| q(x))
            .collect()
    }
}

/// One generator (or its inverse) in a deck-group word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    fn inverted(self) -> Self {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }
}

/// A word in the deck generators, applied left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Free reduction of `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            match out.last() {
                Some(&last) if last == l.inverted() => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverted()).collect())
    }

    /// Renders the word with generator names, e.g. `["b", "a^-1"]`.
    pub fn render(&self, names: &[String]) -> Vec<String> {
        self.0
            .iter()
            .map(|l| {
                let base = names
                    .get(l.generator)
                    .cloned()
                    .unwrap_or_else(|| format!("g{}", l.generator));
                if l.inverse {
                    format!("{base}^-1")
                } else {
                    base
                }
            })
            .collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| {
                if l.inverse {
                    format!("g{}^-1", l.generator)
                } else {
                    format!("g{}", l.generator)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Deck-group element: a word together with the affine map it evaluates to.
#[derive(Clone, Debug)]
pub struct DeckElement<T: Real> {
    pub word: Word,
    pub map: DeckMap<T>,
}

impl<T: Real> DeckElement<T> {
    pub fn identity(dim: usize) -> Self {
        Self {
            word: Word::identity(),
            map: DeckMap::identity(dim),
        }
    }

    /// Apply `self` first, then `next`.
    pub fn then(&self, next: &DeckElement<T>) -> DeckElement<T> {
        DeckElement {
            word: self.word.concat(&next.word),
            map: self.map.then(&next.map),
        }
    }

    pub fn apply(&self, p: &Point<T>) -> Point<T> {
        self.map.apply(p)
    }
}

#[derive(Clone, Debug)]
struct Generator<T: Real> {
    name: String,
    forward: DeckMap<T>,
    backward: DeckMap<T>,
}

/// A manifold realised in ambient coordinates: optionally cut out by a
/// constraint, optionally divided by a group of affine deck maps.
#[derive(Clone)]
pub struct ManifoldModel<T: Real> {
    name: String,
    kind: ManifoldKind,
    ambient_dim: usize,
    intrinsic_dim: usize,
    constraint: Option<Constraint<T>>,
    generators: Vec<Generator<T>>,
    fundamental_box: Vec<Option<(T, T)>>,
    neighbours: Vec<DeckElement<T>>,
}

impl<T: Real> fmt::Debug for ManifoldModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("ambient_dim", &self.ambient_dim)
            .field("intrinsic_dim", &self.intrinsic_dim)
            .field("generators", &self.generator_names())
            .finish()
    }
}

impl<T: Real> ManifoldModel<T> {
    /// `R^n` modulo the group generated by `generators`. With no generators
    /// this is a plain coordinate chart.
    pub fn flat_quotient(
        name: impl Into<String>,
        dim: usize,
        generators: Vec<(String, DeckMap<T>)>,
        fundamental_box: Vec<Option<(T, T)>>,
    ) -> Result<Self> {
        Self::build(
            name.into(),
            ManifoldKind::FlatQuotient,
            dim,
            dim,
            None,
            generators,
            fundamental_box,
        )
    }

    /// Hypersurface `{c = 0}` of `R^ambient_dim`.
    pub fn embedded(
        name: impl Into<String>,
        ambient_dim: usize,
        constraint: Constraint<T>,
    ) -> Result<Self> {
        let ambient_dim_box = vec![None; ambient_dim];
        Self::build(
            name.into(),
            ManifoldKind::Embedded,
            ambient_dim,
            ambient_dim.saturating_sub(1),
            Some(constraint),
            Vec::new(),
            ambient_dim_box,
        )
    }

    /// Hypersurface `{c = 0}` modulo a deck group.
    pub fn product_quotient(
        name: impl Into<String>,
        ambient_dim: usize,
        constraint: Constraint<T>,
        generators: Vec<(String, DeckMap<T>)>,
        fundamental_box: Vec<Option<(T, T)>>,
    ) -> Result<Self> {
        Self::build(
            name.into(),
            ManifoldKind::ProductQuotient,
            ambient_dim,
            ambient_dim.saturating_sub(1),
            Some(constraint),
            generators,
            fundamental_box,
        )
    }

    fn build(
        name: String,
        kind: ManifoldKind,
        ambient_dim: usize,
        intrinsic_dim: usize,
        constraint: Option<Constraint<T>>,
        generators: Vec<(String, DeckMap<T>)>,
        fundamental_box: Vec<Option<(T, T)>>,
    ) -> Result<Self> {
        if intrinsic_dim < 2 {
            return Err(GeoError::Argument(format!(
                "manifold dimension must be at least 2, got {intrinsic_dim}"
            )));
        }
        if fundamental_box.len() != ambient_dim {
            return Err(GeoError::Argument(
                "fundamental box must have one entry per ambient coordinate".into(),
            ));
        }
        let mut gens = Vec::with_capacity(generators.len());
        for (gname, map) in generators {
            if map.offset.len() != ambient_dim {
                return Err(GeoError::Argument(format!(
                    "deck generator {gname} has wrong dimension"
                )));
            }
            let backward = map.inverse().ok_or_else(|| {
                GeoError::Argument(format!("deck generator {gname} is not invertible"))
            })?;
            gens.push(Generator {
                name: gname,
                forward: map,
                backward,
            });
        }
        let mut model = Self {
            name,
            kind,
            ambient_dim,
            intrinsic_dim,
            constraint,
            generators: gens,
            fundamental_box,
            neighbours: Vec::new(),
        };
        model.neighbours = model.enumerate_elements(NEIGHBOUR_WORD_LEN);
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn constraint(&self) -> Option<&Constraint<T>> {
        self.constraint.as_ref()
    }

    pub fn fundamental_box(&self) -> &[Option<(T, T)>] {
        &self.fundamental_box
    }

    pub fn generator_names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn generator_maps(&self) -> Vec<DeckMap<T>> {
        self.generators.iter().map(|g| g.forward.clone()).collect()
    }

    pub fn has_deck_group(&self) -> bool {
        !self.generators.is_empty()
    }

    fn letter_map(&self, l: Letter) -> &DeckMap<T> {
        let g = &self.generators[l.generator];
        if l.inverse {
            &g.backward
        } else {
            &g.forward
        }
    }

    fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.generators.len()).flat_map(|g| {
            [false, true].into_iter().map(move |inverse| Letter {
                generator: g,
                inverse,
            })
        })
    }

    /// Evaluates a word to its affine map.
    pub fn word_map(&self, word: &Word) -> DeckMap<T> {
        word.0
            .iter()
            .fold(DeckMap::identity(self.ambient_dim), |acc, &l| {
                acc.then(self.letter_map(l))
            })
    }

    pub fn constraint_residual(&self, p: &Point<T>) -> T {
        self.constraint
            .as_ref()
            .map_or(T::zero(), |c| c.value(p).abs())
    }

    pub fn check_on_manifold(&self, p: &Point<T>) -> Result<()> {
        if p.len() != self.ambient_dim {
            return Err(GeoError::Argument(format!(
                "point has {} coordinates, expected {}",
                p.len(),
                self.ambient_dim
            )));
        }
        let r = self.constraint_residual(p);
        if !(r <= T::lit(ON_MANIFOLD_TOL)) {
            return Err(GeoError::OffManifold {
                residual: r.as_f64(),
            });
        }
        Ok(())
    }

    /// Newton projection onto the constraint set along the constraint gradient.
    pub fn project_point(&self, p: &Point<T>) -> Result<Point<T>> {
        let Some(c) = &self.constraint else {
            return Ok(p.clone());
        };
        let tiny = T::default_epsilon() * T::lit(8.0);
        let mut q = p.clone();
        for _ in 0..60 {
            let v = c.value(&q);
            if v.abs() <= tiny {
                return Ok(q);
            }
            let g = c.gradient(&q);
            let gg = g.dot(&g);
            if gg <= T::default_epsilon() {
                break;
            }
            let next = &q - g * (v / gg);
            if c.value(&next).abs() >= v.abs() {
                break;
            }
            q = next;
        }
        let r = c.value(&q).abs();
        if r <= T::lit(1e-12).max(tiny * T::lit(8.0)) {
            Ok(q)
        } else {
            Err(GeoError::ProjectionFailed {
                residual: r.as_f64(),
            })
        }
    }

    /// Euclidean unit normal of the constraint set, if any.
    pub fn normal(&self, p: &Point<T>) -> Option<DVector<T>> {
        self.constraint.as_ref().map(|c| c.gradient(p))
    }

    /// Euclidean orthogonal projection of an ambient vector onto `T_pM`.
    pub fn project_tangent(&self, p: &Point<T>, v: &DVector<T>) -> DVector<T> {
        match self.normal(p) {
            Some(n) => {
                let nn = n.dot(&n);
                if nn <= T::zero() {
                    v.clone()
                } else {
                    v - &n * (n.dot(v) / nn)
                }
            }
            None => v.clone(),
        }
    }

    /// Euclidean-orthonormal basis of `T_pM`, built by pivoted Gram-Schmidt on
    /// the projected ambient coordinate directions.
    pub fn tangent_basis(&self, p: &Point<T>) -> Vec<DVector<T>> {
        let n = self.ambient_dim;
        let mut candidates: Vec<DVector<T>> = (0..n)
            .map(|i| {
                let mut e = DVector::zeros(n);
                e[i] = T::one();
                self.project_tangent(p, &e)
            })
            .collect();
        let mut basis: Vec<DVector<T>> = Vec::with_capacity(self.intrinsic_dim);
        while basis.len() < self.intrinsic_dim && !candidates.is_empty() {
            let (best, _) = candidates
                .iter()
                .enumerate()
                .fold((0usize, -T::one()), |(bi, bn), (i, c)| {
                    let cn = c.norm();
                    if cn > bn {
                        (i, cn)
                    } else {
                        (bi, bn)
                    }
                });
            let chosen = candidates.swap_remove(best);
            let norm = chosen.norm();
            if norm <= T::lit(1e-10) {
                break;
            }
            let u = chosen / norm;
            for c in candidates.iter_mut() {
                let d = u.dot(c);
                *c -= &u * d;
            }
            basis.push(u);
        }
        basis
    }

    /// Random point: uniform on bounded box coordinates, Gaussian on the
    /// unbounded ones, then projected onto the constraint set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<T> {
        loop {
            let raw = DVector::from_fn(self.ambient_dim, |i, _| match self.fundamental_box[i] {
                Some((lo, hi)) => {
                    let u: f64 = rng.random();
                    lo + (hi - lo) * T::lit(u)
                }
                None => {
                    let z: f64 = StandardNormal.sample(rng);
                    T::lit(z)
                }
            });
            if self.constraint.is_some() {
                let g = self.normal(&raw).map(|n| n.norm()).unwrap_or_else(T::one);
                if g <= T::lit(1e-6) {
                    continue;
                }
            }
            if let Ok(p) = self.project_point(&raw) {
                return p;
            }
        }
    }

    /// `count` samples from a ChaCha stream seeded with `seed`.
    pub fn sample_many(&self, count: usize, seed: u64) -> Vec<Point<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }

    fn box_violation(&self, p: &Point<T>) -> T {
        self.fundamental_box
            .iter()
            .zip(p.iter())
            .fold(T::zero(), |acc, (b, &x)| match b {
                Some((lo, hi)) => {
                    acc + (*lo - x).max(T::zero()) + (x - *hi).max(T::zero())
                }
                None => acc,
            })
    }

    /// Greedy reduction towards the fundamental box, starting from `start`.
    /// Returns the element that carries `p` (approximately) into the box.
    pub fn reduce_to_box_from(&self, p: &Point<T>, start: &DeckElement<T>) -> DeckElement<T> {
        let mut elem = start.clone();
        if self.generators.is_empty() {
            return elem;
        }
        let mut q = elem.apply(p);
        let mut viol = self.box_violation(&q);
        let eps = T::lit(1e-12);
        for _ in 0..100_000 {
            if viol <= T::zero() {
                break;
            }
            let mut best: Option<(Letter, Point<T>, T)> = None;
            for l in self.letters() {
                let cand = self.letter_map(l).apply(&q);
                let v = self.box_violation(&cand);
                if best.as_ref().is_none_or(|b| v < b.2) {
                    best = Some((l, cand, v));
                }
            }
            match best {
                Some((l, cand, v)) if v < viol - eps => {
                    elem = elem.then(&DeckElement {
                        word: Word(vec![l]),
                        map: self.letter_map(l).clone(),
                    });
                    q = cand;
                    viol = v;
                }
                _ => break,
            }
        }
        elem
    }

    pub fn reduce_to_box(&self, p: &Point<T>) -> DeckElement<T> {
        self.reduce_to_box_from(p, &DeckElement::identity(self.ambient_dim))
    }

    /// Distinct deck elements of word length at most `max_len`, in
    /// breadth-first order.
    pub fn enumerate_elements(&self, max_len: usize) -> Vec<DeckElement<T>> {
        let mut out = vec![DeckElement::identity(self.ambient_dim)];
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        seen.insert(out[0].map.key());
        let mut frontier = 0..1;
        for _ in 0..max_len {
            let start = out.len();
            for idx in frontier.clone() {
                for l in self.letters() {
                    let e = out[idx].then(&DeckElement {
                        word: Word(vec![l]),
                        map: self.letter_map(l).clone(),
                    });
                    if seen.insert(e.map.key()) {
                        out.push(e);
                    }
                }
            }
            frontier = start..out.len();
            if frontier.is_empty() {
                break;
            }
        }
        out
    }

    /// Shortest deck word `γ` (length ≤ `max_len`) with `γ·p = q` up to 1e-6.
    pub fn reduce_point(&self, p: &Point<T>, q: &Point<T>, max_len: usize) -> Option<Word> {
        let tol = T::lit(IDENTIFY_TOL);
        if (p - q).norm() <= tol {
            return Some(Word::identity());
        }
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        let mut layer = vec![DeckElement::identity(self.ambient_dim)];
        seen.insert(layer[0].map.key());
        for _ in 0..max_len {
            let mut next = Vec::new();
            for e in &layer {
                for l in self.letters() {
                    let cand = e.then(&DeckElement {
                        word: Word(vec![l]),
                        map: self.letter_map(l).clone(),
                    });
                    if !seen.insert(cand.map.key()) {
                        continue;
                    }
                    if (cand.apply(p) - q).norm() <= tol {
                        return Some(cand.word);
                    }
                    next.push(cand);
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        None
    }

    /// Deck element `γ` minimising `|γ·from − to|`, and that distance.
    pub fn nearest_image(&self, from: &Point<T>, to: &Point<T>) -> (DeckElement<T>, T) {
        let mut tracker = ImageTracker::new(self, to.clone());
        let (idx, d) = tracker.nearest(from);
        (tracker.element(idx), d)
    }

    /// Deck elements of word length at most two, used as candidate
    /// corrections after box reduction.
    pub fn neighbour_elements(&self) -> &[DeckElement<T>] {
        &self.neighbours
    }

    /// Distance between the classes of `p` and `q`.
    pub fn quotient_distance(&self, p: &Point<T>, q: &Point<T>) -> T {
        self.nearest_image(p, q).1
    }

    /// Largest constraint residual of `γ·p` over generators, for points `p` on
    /// the manifold. Zero for deck groups that preserve the constraint.
    pub fn deck_constraint_defect(&self, p: &Point<T>) -> T {
        self.generators
            .iter()
            .map(|g| self.constraint_residual(&g.forward.apply(p)))
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Repeated nearest-image queries against a fixed target point, reusing the
/// previous box reduction as a starting hint.
pub struct ImageTracker<'a, T: Real> {
    manifold: &'a ManifoldModel<T>,
    target: Point<T>,
    target_back: DeckElement<T>,
    hint: DeckElement<T>,
}

impl<'a, T: Real> ImageTracker<'a, T> {
    pub fn new(manifold: &'a ManifoldModel<T>, target: Point<T>) -> Self {
        let to_box = manifold.reduce_to_box(&target);
        let back_map = to_box
            .map
            .inverse()
            .expect("deck elements are invertible");
        let target_back = DeckElement {
            word: to_box.word.inverse(),
            map: back_map,
        };
        Self {
            manifold,
            target,
            target_back,
            hint: DeckElement::identity(manifold.ambient_dim),
        }
    }

    pub fn target(&self) -> &Point<T> {
        &self.target
    }

    /// Index into the neighbour set of the best candidate, and its distance.
    pub fn nearest(&mut self, x: &Point<T>) -> (usize, T) {
        if self.manifold.generators.is_empty() {
            return (0, (x - &self.target).norm());
        }
        self.hint = self.manifold.reduce_to_box_from(x, &self.hint);
        let y = self.hint.apply(x);
        let mut best = (0usize, T::max_value().unwrap_or_else(|| T::lit(f64::MAX)));
        for (i, n) in self.manifold.neighbours.iter().enumerate() {
            let z = self.target_back.apply(&n.apply(&y));
            let d = (z - &self.target).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// The deck element for a result of the most recent [`Self::nearest`] call.
    pub fn element(&self, idx: usize) -> DeckElement<T> {
        if self.manifold.generators.is_empty() {
            return DeckElement::identity(self.manifold.ambient_dim);
        }
        self.hint
            .then(&self.manifold.neighbours[idx])
            .then(&self.target_back)
    }
}
