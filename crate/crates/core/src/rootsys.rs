//! Root systems, their reflection groups, and orbit geometry.
//!
//! Conventions used throughout the crate:
//!
//! * every root has squared norm 2, so the reflection in the hyperplane
//!   orthogonal to a root `a` is `x -> x - <x, a> a`;
//! * roots come in `±` pairs and no other multiples; the first half of the
//!   root list is a positive subsystem (separated from its negatives by a
//!   hyperplane), the second half holds the corresponding negatives;
//! * each root carries a multiplicity `k(a) > 0`, constant on group orbits.
//!
//! Two families are constructible: products of rank-one factors on the
//! coordinate axes (group `{±1}^N`), and planar dihedral systems with `2m`
//! roots (group of order `2m`).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Matching tolerance for "these two group elements are equal" and the
/// defensive cap on group closure.
pub const MATCH_TOL: f64 = 1e-9;
pub const GROUP_CAP: usize = 10_000;

/// Scale-relative tolerance for chamber-membership decisions: a point whose
/// wall distance is below `CHAMBER_TOL * (1 + scale)` is treated as on the
/// wall and flagged, not resolved.
pub const CHAMBER_TOL: f64 = 1e-9;

/// Declarative description of a root system; the serialization format used
/// by sweep configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SystemConfig {
    /// `N` orthogonal rank-one factors; `k[i]` is the multiplicity on axis `i`.
    ProductA1 { k: Vec<f64> },
    /// Dihedral system with `2m` roots; multiplicities alternate with root
    /// parity (a single class when `m` is odd, two classes when `m` is even).
    Dihedral { m: usize, k_even: f64, k_odd: f64 },
}

impl SystemConfig {
    pub fn build(&self) -> Result<RootSystem> {
        match self {
            SystemConfig::ProductA1 { k } => RootSystem::product_a1(k),
            SystemConfig::Dihedral { m, k_even, k_odd } => {
                RootSystem::dihedral(*m, *k_even, *k_odd)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    ProductA1,
    Dihedral { m: usize },
}

/// A normalized root system with multiplicities.
#[derive(Clone, Debug)]
pub struct RootSystem {
    dim: usize,
    roots: Vec<Vec<f64>>,
    mult: Vec<f64>,
    n_positive: usize,
    family: Family,
}

/// Dense row-major square matrix; group elements are stored this way.
#[derive(Clone, Debug)]
pub struct Mat {
    dim: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn identity(dim: usize) -> Self {
        let mut a = vec![0.0; dim * dim];
        for i in 0..dim {
            a[i * dim + i] = 1.0;
        }
        Mat { dim, a }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.a[i * self.dim + j] * x[j]).sum())
            .collect()
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &Mat) -> Mat {
        let d = self.dim;
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for l in 0..d {
                let s = self.a[i * d + l];
                if s != 0.0 {
                    for j in 0..d {
                        a[i * d + j] += s * other.a[l * d + j];
                    }
                }
            }
        }
        Mat { dim: d, a }
    }

    pub fn transpose(&self) -> Mat {
        let d = self.dim;
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[j * d + i] = self.a[i * d + j];
            }
        }
        Mat { dim: d, a }
    }

    pub fn frob_dist(&self, other: &Mat) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    pub fn row_major(&self) -> &[f64] {
        &self.a
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl RootSystem {
    /// `N` orthogonal rank-one factors: roots `±sqrt(2) e_i`, multiplicity
    /// `k[i] > 0` on axis `i`.
    pub fn product_a1(k: &[f64]) -> Result<Self> {
        let n = k.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "product system needs at least one factor".into(),
            ));
        }
        for (i, &ki) in k.iter().enumerate() {
            if !(ki > 0.0) || !ki.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "multiplicity k[{i}] = {ki} must be positive and finite"
                )));
            }
        }
        let mut roots = Vec::with_capacity(2 * n);
        let sq2 = std::f64::consts::SQRT_2;
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = sq2;
            roots.push(r);
        }
        for i in 0..n {
            let mut r = vec![0.0; n];
            r[i] = -sq2;
            roots.push(r);
        }
        let mult: Vec<f64> = k.iter().chain(k.iter()).cloned().collect();
        let rs = RootSystem {
            dim: n,
            roots,
            mult,
            n_positive: n,
            family: Family::ProductA1,
        };
        rs.validate()?;
        Ok(rs)
    }

    /// Dihedral system in the plane: `2m` roots at angular spacing `pi/m`,
    /// walls along the lines `theta = j pi / m`. Requires `m >= 3`;
    /// multiplicities alternate between `k_even` (roots of even index) and
    /// `k_odd`. For odd `m` the two classes are conjugate, so they must agree.
    pub fn dihedral(m: usize, k_even: f64, k_odd: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidParameter(format!(
                "dihedral systems need m >= 3, got m = {m}"
            )));
        }
        for (name, k) in [("k_even", k_even), ("k_odd", k_odd)] {
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "multiplicity {name} = {k} must be positive and finite"
                )));
            }
        }
        if m % 2 == 1 && (k_even - k_odd).abs() > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "odd m = {m} has a single root class; k_even must equal k_odd"
            )));
        }
        let sq2 = std::f64::consts::SQRT_2;
        let mut roots = Vec::with_capacity(2 * m);
        let mut mult = Vec::with_capacity(2 * m);
        for j in 0..2 * m {
            let phi = std::f64::consts::PI * j as f64 / m as f64;
            roots.push(vec![sq2 * phi.sin(), sq2 * phi.cos()]);
            mult.push(if j % 2 == 0 { k_even } else { k_odd });
        }
        let rs = RootSystem {
            dim: 2,
            roots,
            mult,
            n_positive: m,
            family: Family::Dihedral { m },
        };
        rs.validate()?;
        Ok(rs)
    }

    /// Construction-time sanity: normalized roots, exact `±` pairing, no other
    /// parallel roots, invariance of the root set and multiplicities under
    /// every root reflection.
    fn validate(&self) -> Result<()> {
        let nr = self.roots.len();
        for (i, r) in self.roots.iter().enumerate() {
            let n2 = dot(r, r);
            if (n2 - 2.0).abs() > MATCH_TOL {
                return Err(Error::InvalidParameter(format!(
                    "root {i} has squared norm {n2}, expected 2"
                )));
            }
        }
        for i in 0..nr {
            let neg: Vec<f64> = self.roots[i].iter().map(|v| -v).collect();
            let mut found = false;
            for j in 0..nr {
                if dist(&self.roots[j], &neg) < MATCH_TOL {
                    if (self.mult[j] - self.mult[i]).abs() > MATCH_TOL {
                        return Err(Error::InvalidParameter(format!(
                            "roots {i} and {j} are opposite but carry different multiplicities"
                        )));
                    }
                    found = true;
                } else if i != j && dist(&self.roots[j], &self.roots[i]) < MATCH_TOL {
                    // equal norms make "parallel" mean "+/- copy"; the negative
                    // is expected, an equal copy is not
                    return Err(Error::InvalidParameter(format!(
                        "duplicate root {j} equals root {i}"
                    )));
                }
            }
            if !found {
                return Err(Error::InvalidParameter(format!(
                    "root {i} has no negative in the system"
                )));
            }
        }
        // Invariance of (roots, multiplicities) under each reflection; this
        // extends to the whole group, which the reflections generate.
        for i in 0..nr {
            for j in 0..nr {
                let image = self.reflect(i, &self.roots[j]);
                let hit = (0..nr).find(|&l| dist(&self.roots[l], &image) < MATCH_TOL);
                match hit {
                    Some(l) => {
                        if (self.mult[l] - self.mult[j]).abs() > MATCH_TOL {
                            return Err(Error::InvalidParameter(format!(
                                "multiplicity not reflection-invariant: root {j} -> {l}"
                            )));
                        }
                    }
                    None => {
                        return Err(Error::InvalidParameter(format!(
                            "root set not closed under reflection {i} (image of {j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// All roots (positive subsystem first, then the negatives).
    pub fn roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    /// Indices `0..n_positive()` enumerate the positive subsystem.
    pub fn n_positive(&self) -> usize {
        self.n_positive
    }

    pub fn mult(&self, root: usize) -> f64 {
        self.mult[root]
    }

    /// `gamma = sum of k(a) over all roots` — the weight's homogeneity degree.
    pub fn total_mult(&self) -> f64 {
        self.mult.iter().sum()
    }

    /// Homogeneous dimension `N + gamma`; governs volume scaling and the
    /// kernel's `t^{-hom/2}` prefactor.
    pub fn homogeneous_dim(&self) -> f64 {
        self.dim as f64 + self.total_mult()
    }

    /// Reflection in the wall of root `root`: `x - <x, a> a` (roots have
    /// squared norm 2).
    pub fn reflect(&self, root: usize, x: &[f64]) -> Vec<f64> {
        let a = &self.roots[root];
        let c = dot(x, a);
        x.iter().zip(a).map(|(xi, ai)| xi - c * ai).collect()
    }

    pub fn reflection_matrix(&self, root: usize) -> Mat {
        let d = self.dim;
        let a = &self.roots[root];
        let mut m = Mat::identity(d);
        for i in 0..d {
            for j in 0..d {
                m.a[i * d + j] -= a[i] * a[j];
            }
        }
        m
    }

    /// Invariant weight `w(x) = prod over roots |<x, a>|^{k(a)}`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.log_weight(x).exp()
    }

    /// `ln w(x)`; `-inf` on a wall.
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .zip(&self.mult)
            .map(|(a, &k)| k * dot(x, a).abs().ln())
            .sum()
    }

    /// Distance from `x` to the nearest reflection wall.
    pub fn wall_distance(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .map(|a| dot(x, a).abs() / dot(a, a).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// The finite group generated by the root reflections, with its Cayley
/// structure over root generators.
#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    dim: usize,
    elements: Vec<Mat>,
    /// `cayley[g][r]` is the index of `sigma_r * g` (reflect after `g`).
    cayley: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl ReflectionGroup {
    /// Breadth-first closure of the root reflections. Elements are deduped by
    /// Frobenius distance below [`MATCH_TOL`]; exceeding [`GROUP_CAP`]
    /// elements reports a non-finite group.
    pub fn generate(rs: &RootSystem) -> Result<Self> {
        let dim = rs.dim();
        let gens: Vec<Mat> = (0..rs.n_positive())
            .map(|r| rs.reflection_matrix(r))
            .collect();

        let find = |elems: &[Mat], m: &Mat| elems.iter().position(|e| e.frob_dist(m) < MATCH_TOL);

        let mut elements = vec![Mat::identity(dim)];
        let mut queue = VecDeque::from([0usize]);
        while let Some(gi) = queue.pop_front() {
            for gen in &gens {
                let prod = gen.compose(&elements[gi]);
                if find(&elements, &prod).is_none() {
                    if elements.len() >= GROUP_CAP {
                        return Err(Error::NonFiniteGroup { cap: GROUP_CAP });
                    }
                    elements.push(prod);
                    queue.push_back(elements.len() - 1);
                }
            }
        }

        // Cayley table over every root (negatives give the same reflection)
        // and inverses; their existence re-checks closure.
        let nr = rs.roots().len();
        let mut cayley = vec![vec![0usize; nr]; elements.len()];
        for (gi, g) in elements.iter().enumerate() {
            for r in 0..nr {
                let prod = rs.reflection_matrix(r).compose(g);
                cayley[gi][r] = find(&elements, &prod).ok_or_else(|| {
                    Error::InvalidParameter(
                        "reflection group is not closed under composition".into(),
                    )
                })?;
            }
        }
        let mut inverse = vec![0usize; elements.len()];
        for (gi, g) in elements.iter().enumerate() {
            let ident = Mat::identity(dim);
            let tr = g.transpose();
            if tr.compose(g).frob_dist(&ident) > MATCH_TOL {
                return Err(Error::InvalidParameter(format!(
                    "group element {gi} is not orthogonal"
                )));
            }
            inverse[gi] = find(&elements, &tr).ok_or_else(|| {
                Error::InvalidParameter("reflection group lacks an inverse element".into())
            })?;
        }

        Ok(ReflectionGroup {
            dim,
            elements,
            cayley,
            inverse,
        })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the identity element (always 0 by construction).
    pub fn identity(&self) -> usize {
        0
    }

    pub fn apply(&self, g: usize, x: &[f64]) -> Vec<f64> {
        self.elements[g].apply(x)
    }

    /// Index of `sigma_root * g`.
    pub fn left_reflect(&self, g: usize, root: usize) -> usize {
        self.cayley[g][root]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn element(&self, g: usize) -> &Mat {
        &self.elements[g]
    }

    /// Orbit of `y`: `orbit[g] = g(y)` indexed like the elements.
    pub fn orbit(&self, y: &[f64]) -> Vec<Vec<f64>> {
        self.elements.iter().map(|m| m.apply(y)).collect()
    }
}

/// Distance between the orbit of `y` and the point `x`, with the index of the
/// group element attaining it (lowest index on ties).
pub fn orbit_distance(group: &ReflectionGroup, x: &[f64], y: &[f64]) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0usize;
    for g in 0..group.order() {
        let d = dist(x, &group.apply(g, y));
        if d < best {
            best = d;
            arg = g;
        }
    }
    (best, arg)
}

/// Minimal number of reflections taking `y` into the closed chamber of `x`:
/// breadth-first search over the Cayley graph (one reflection per edge) with
/// the goal test `|x - g(y)| <= d(x, y) + tol`.
pub fn reflection_count(rs: &RootSystem, group: &ReflectionGroup, x: &[f64], y: &[f64]) -> usize {
    let orbit = group.orbit(y);
    let dists: Vec<f64> = orbit.iter().map(|p| dist(x, p)).collect();
    let d = dists.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = CHAMBER_TOL * (1.0 + norm(x) + norm(y));

    let mut depth = vec![usize::MAX; group.order()];
    depth[group.identity()] = 0;
    let mut queue = VecDeque::from([group.identity()]);
    while let Some(g) = queue.pop_front() {
        if dists[g] <= d + tol {
            return depth[g];
        }
        for r in 0..rs.n_positive() {
            let h = group.left_reflect(g, r);
            if depth[h] == usize::MAX {
                depth[h] = depth[g] + 1;
                queue.push_back(h);
            }
        }
    }
    unreachable!("orbit minimum is always reachable in the Cayley graph");
}

/// Summary of how the orbit of `y` sits relative to `x`.
#[derive(Clone, Debug)]
pub struct OrbitGeometry {
    /// `d(x, y)`: distance from `x` to the orbit of `y`.
    pub distance: f64,
    /// Element attaining it (lowest index on ties).
    pub argmin: usize,
    /// Minimal reflection count `n(x, y)`.
    pub reflections: usize,
    /// True when `x` or the minimizing orbit point is within tolerance of a
    /// wall; chamber membership is ambiguous there and downstream reports
    /// carry the flag instead of resolving the tie.
    pub wall_adjacent: bool,
}

pub fn analyze_orbit(
    rs: &RootSystem,
    group: &ReflectionGroup,
    x: &[f64],
    y: &[f64],
) -> OrbitGeometry {
    let (distance, argmin) = orbit_distance(group, x, y);
    let reflections = reflection_count(rs, group, x, y);
    let tol = CHAMBER_TOL * (1.0 + norm(x) + norm(y));
    let ymin = group.apply(argmin, y);
    let wall_adjacent = rs.wall_distance(x) <= tol || rs.wall_distance(&ymin) <= tol;
    OrbitGeometry {
        distance,
        argmin,
        reflections,
        wall_adjacent,
    }
}

/// Greedy shortening sequence: positive-root indices `r_1, .., r_l` such that
/// successively reflecting `y` strictly decreases the distance to `x` and
/// lands in the closed chamber of `x` (distance `d(x, y)`). At each step the
/// root with the greatest decrease is taken, ties broken by lowest index;
/// the sequence length is at most the group order.
pub fn shortening_sequence(
    rs: &RootSystem,
    group: &ReflectionGroup,
    x: &[f64],
    y: &[f64],
) -> Vec<usize> {
    let (d, _) = orbit_distance(group, x, y);
    let tol = CHAMBER_TOL * (1.0 + norm(x) + norm(y));
    let mut cur = y.to_vec();
    let mut cur_dist = dist(x, &cur);
    let mut seq = Vec::new();
    while cur_dist > d + tol && seq.len() < group.order() {
        let mut best_gain = 0.0;
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for r in 0..rs.n_positive() {
            let cand = rs.reflect(r, &cur);
            let nd = dist(x, &cand);
            let gain = cur_dist - nd;
            if gain > best_gain + tol {
                best_gain = gain;
                best = Some((r, cand, nd));
            }
        }
        match best {
            Some((r, cand, nd)) => {
                seq.push(r);
                cur = cand;
                cur_dist = nd;
            }
            // No strictly shortening reflection: numerically at the minimum.
            None => break,
        }
    }
    seq
}
