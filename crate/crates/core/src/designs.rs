//! (2,K,V)-Steiner systems, their resolutions, and the parameter arithmetic
//! that governs when they (and difference sets with matching parameters) can exist.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{hyperplane_kernel, prime_power, trace_one_element, FieldElement, FiniteField, GfError};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("invalid design parameters: {0}")]
    InvalidParameters(String),
    #[error("round-robin designs need an even number of points, got {0}")]
    OddPointCount(usize),
    #[error("(k={k}, v={v}) violates v = k mod k(k-1); no resolvable Steiner system exists")]
    NotResolvableParameters { k: u64, v: u64 },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed design file: {0}")]
    Parse(String),
}

/// A block design on points `0..v` with an optional resolution into parallel classes.
///
/// `resolution[r]` lists indices into `blocks`. Nothing here is checked on
/// construction; use [`SteinerSystem::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteinerSystem {
    pub v: usize,
    pub k: usize,
    pub blocks: Vec<Vec<usize>>,
    pub resolution: Option<Vec<Vec<usize>>>,
}

/// Derived counts of a (2,K,V)-Steiner system and the necessary conditions they satisfy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignParams {
    pub v: u64,
    pub k: u64,
    /// Replication `(v-1)/(k-1)`, when integral.
    pub r: Option<u64>,
    /// Block count `v(v-1)/(k(k-1))`, when integral.
    pub b: Option<u64>,
    /// Blocks per parallel class `v/k`, when integral.
    pub s: Option<u64>,
    /// `w` with `v = wk(k-1) + k`, when integral and positive.
    pub w: Option<u64>,
    pub flags: ParamFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamFlags {
    pub replication_integral: bool,
    pub block_count_integral: bool,
    pub fisher: bool,
    /// `v ≡ k (mod k(k-1))`, i.e. `k | v` on top of the Steiner divisibility.
    pub resolvable_congruence: bool,
    pub bose: bool,
}

impl ParamFlags {
    pub fn steiner_feasible(&self) -> bool {
        self.replication_integral && self.block_count_integral && self.fisher
    }

    pub fn resolvable_feasible(&self) -> bool {
        self.steiner_feasible() && self.resolvable_congruence && self.bose
    }
}

pub fn steiner_params(k: u64, v: u64) -> Result<DesignParams, DesignError> {
    if k < 2 || v <= k {
        return Err(DesignError::InvalidParameters(format!(
            "need v > k >= 2, got k={k}, v={v}"
        )));
    }
    let r = ((v - 1) % (k - 1) == 0).then(|| (v - 1) / (k - 1));
    let b = ((v * (v - 1)) % (k * (k - 1)) == 0).then(|| v * (v - 1) / (k * (k - 1)));
    let s = (v % k == 0).then(|| v / k);
    let congruence = v % (k * (k - 1)) == k % (k * (k - 1));
    let w = congruence.then(|| (v - k) / (k * (k - 1))).filter(|&w| w >= 1);
    let fisher = b.is_some_and(|b| b >= v);
    let bose = matches!((b, r), (Some(b), Some(r)) if b + 1 >= v + r);
    Ok(DesignParams {
        v,
        k,
        r,
        b,
        s,
        w,
        flags: ParamFlags {
            replication_integral: r.is_some(),
            block_count_integral: b.is_some(),
            fisher,
            resolvable_congruence: congruence,
            bose,
        },
    })
}

/// Difference-set arithmetic for the harmonic parameters a resolvable system would give.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub k: u64,
    pub v: u64,
    pub w: u64,
    /// Dimension `B` of the frame, i.e. the would-be difference set size.
    pub m: u64,
    /// Number of frame vectors `V(R+1)`, i.e. the would-be group order.
    pub n: u64,
    /// `M(M-1)/(N-1)` when integral.
    pub lambda_from_counts: Option<u64>,
    /// `W[W(K-1)+1]`.
    pub lambda: u64,
    /// `M - Λ`.
    pub degree: u64,
    /// `W(K-1)+1`, whose square is the degree.
    pub degree_root: u64,
    pub lambda_integral: bool,
    pub degree_is_square: bool,
}

pub fn harmonic_feasibility(k: u64, v: u64) -> Result<FeasibilityReport, DesignError> {
    let params = steiner_params(k, v)?;
    let (Some(w), Some(r), Some(b)) = (params.w, params.r, params.b) else {
        return Err(DesignError::NotResolvableParameters { k, v });
    };
    if !params.flags.resolvable_congruence {
        return Err(DesignError::NotResolvableParameters { k, v });
    }
    let m = b;
    let n = v * (r + 1);
    let num = m * (m - 1);
    let lambda_from_counts = (num % (n - 1) == 0).then(|| num / (n - 1));
    let degree_root = w * (k - 1) + 1;
    let lambda = w * degree_root;
    let degree = m - lambda;
    let root = (degree as f64).sqrt().round() as u64;
    Ok(FeasibilityReport {
        k,
        v,
        w,
        m,
        n,
        lambda_from_counts,
        lambda,
        degree,
        degree_root,
        lambda_integral: lambda_from_counts == Some(lambda),
        degree_is_square: root * root == degree,
    })
}

/// One named invariant check with the first counterexample found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
}

impl Check {
    fn new(name: &str, failure: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: failure.is_none(),
            counterexample: failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub v: usize,
    pub k: usize,
    pub b: usize,
    pub checks: Vec<Check>,
    /// `k | v`; when false no resolution can exist at all.
    pub resolvable_arithmetic: bool,
    pub passed: bool,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl SteinerSystem {
    pub fn new(v: usize, k: usize, blocks: Vec<Vec<usize>>, resolution: Option<Vec<Vec<usize>>>) -> Self {
        Self {
            v,
            k,
            blocks,
            resolution,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `(v-1)/(k-1)`, the number of blocks through each point.
    pub fn replication(&self) -> usize {
        (self.v - 1) / (self.k - 1)
    }

    pub fn is_resolved(&self) -> bool {
        self.resolution.is_some()
    }

    /// `B × V` incidence matrix, rows in block order.
    pub fn incidence_matrix(&self) -> Vec<Vec<u8>> {
        self.blocks
            .iter()
            .map(|block| {
                let mut row = vec![0u8; self.v];
                for &p in block {
                    if p < self.v {
                        row[p] = 1;
                    }
                }
                row
            })
            .collect()
    }

    /// Sorts points within blocks, orders classes by their smallest block and
    /// lists blocks class by class. Without a resolution, blocks are simply sorted.
    pub fn canonical(&self) -> SteinerSystem {
        let sorted_block = |b: &Vec<usize>| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        };
        match &self.resolution {
            None => {
                let mut blocks: Vec<Vec<usize>> = self.blocks.iter().map(sorted_block).collect();
                blocks.sort();
                SteinerSystem::new(self.v, self.k, blocks, None)
            }
            Some(classes) => {
                let mut classes: Vec<Vec<Vec<usize>>> = classes
                    .iter()
                    .map(|class| {
                        let mut c: Vec<Vec<usize>> =
                            class.iter().map(|&i| sorted_block(&self.blocks[i])).collect();
                        c.sort();
                        c
                    })
                    .collect();
                classes.sort_by(|a, b| a.first().cmp(&b.first()));
                let mut blocks = Vec::with_capacity(self.blocks.len());
                let mut resolution = Vec::with_capacity(classes.len());
                for class in classes {
                    let start = blocks.len();
                    resolution.push((start..start + class.len()).collect());
                    blocks.extend(class);
                }
                SteinerSystem::new(self.v, self.k, blocks, Some(resolution))
            }
        }
    }

    /// For each class `r` and point `v`, the position (within the class) of the block containing `v`.
    ///
    /// Returns `None` without a resolution or when a class fails to cover some point exactly once.
    pub fn class_positions(&self) -> Option<Vec<Vec<usize>>> {
        let classes = self.resolution.as_ref()?;
        classes
            .iter()
            .map(|class| {
                let mut pos = vec![usize::MAX; self.v];
                for (s, &bi) in class.iter().enumerate() {
                    for &p in self.blocks.get(bi)? {
                        if p >= self.v || pos[p] != usize::MAX {
                            return None;
                        }
                        pos[p] = s;
                    }
                }
                pos.iter().all(|&s| s != usize::MAX).then_some(pos)
            })
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let (v, k, b) = (self.v, self.k, self.blocks.len());

        let range_fail = self.blocks.iter().enumerate().find_map(|(i, blk)| {
            blk.iter()
                .find(|&&p| p >= v)
                .map(|p| format!("block {i} contains point {p} >= v = {v}"))
        });
        checks.push(Check::new("point_range", range_fail.clone()));

        let size_fail = self.blocks.iter().enumerate().find_map(|(i, blk)| {
            let distinct: BTreeSet<_> = blk.iter().collect();
            (blk.len() != k || distinct.len() != k)
                .then(|| format!("block {i} = {blk:?} does not have {k} distinct points"))
        });
        checks.push(Check::new("block_sizes", size_fail));

        let mut replication = vec![0usize; v];
        for blk in &self.blocks {
            for &p in blk.iter().filter(|&&p| p < v) {
                replication[p] += 1;
            }
        }
        let expected_r = (k > 1 && (v - 1) % (k - 1) == 0).then(|| (v - 1) / (k - 1));
        let rep_fail = match expected_r {
            None => Some(format!("(v-1)/(k-1) = {}/{} is not an integer", v.saturating_sub(1), k.saturating_sub(1))),
            Some(r) => replication
                .iter()
                .enumerate()
                .find(|&(_, &c)| c != r)
                .map(|(p, c)| format!("point {p} lies in {c} blocks, expected {r}")),
        };
        checks.push(Check::new("replication", rep_fail));

        let mut pair_count = vec![0u32; v * v];
        for blk in &self.blocks {
            for (i, &a) in blk.iter().enumerate() {
                for &c in &blk[i + 1..] {
                    if a < v && c < v && a != c {
                        let (lo, hi) = (a.min(c), a.max(c));
                        pair_count[lo * v + hi] += 1;
                    }
                }
            }
        }
        let pair_fail = (0..v)
            .flat_map(|a| (a + 1..v).map(move |c| (a, c)))
            .find(|&(a, c)| pair_count[a * v + c] != 1)
            .map(|(a, c)| format!("pair {{{a}, {c}}} lies in {} blocks", pair_count[a * v + c]));
        checks.push(Check::new("pair_coverage", pair_fail));

        let r = expected_r.unwrap_or(0);
        let ident_fail = if expected_r.is_none() {
            Some("replication is not integral".to_string())
        } else if b * k != v * r {
            Some(format!("BK = {} but VR = {}", b * k, v * r))
        } else {
            None
        };
        checks.push(Check::new("parameter_identities", ident_fail));

        checks.push(Check::new(
            "fisher",
            (b < v).then(|| format!("B = {b} < V = {v}")),
        ));

        let resolvable_arithmetic = k > 0 && v % k == 0;
        if let Some(classes) = &self.resolution {
            checks.push(Check::new(
                "bose",
                (b + 1 < v + r).then(|| format!("B = {b} < V + R - 1 = {}", v + r - 1)),
            ));
            checks.push(Check::new("resolution_partition", self.resolution_failure(classes)));
        }

        let passed = checks.iter().all(|c| c.passed);
        ValidationReport {
            v,
            k,
            b,
            checks,
            resolvable_arithmetic,
            passed,
        }
    }

    fn resolution_failure(&self, classes: &[Vec<usize>]) -> Option<String> {
        let mut seen = vec![false; self.blocks.len()];
        for (r, class) in classes.iter().enumerate() {
            let mut covered = vec![0u32; self.v];
            for &bi in class {
                let Some(blk) = self.blocks.get(bi) else {
                    return Some(format!("class {r} references missing block {bi}"));
                };
                if std::mem::replace(&mut seen[bi], true) {
                    return Some(format!("block {bi} appears in more than one class"));
                }
                for &p in blk.iter().filter(|&&p| p < self.v) {
                    covered[p] += 1;
                }
            }
            if let Some((p, c)) = covered.iter().enumerate().find(|&(_, &c)| c != 1) {
                return Some(format!("class {r} covers point {p} {c} times"));
            }
        }
        seen.iter()
            .position(|&s| !s)
            .map(|bi| format!("block {bi} belongs to no class"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("designs always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DesignError> {
        serde_json::from_str(text).map_err(|e| DesignError::Parse(e.to_string()))
    }
}

/// The affine geometry AG(j+1, q) realised inside GF(q^{j+1}), keeping the
/// `(r, s)` labels of its lines.
///
/// Line `(r, s)` is `{ s γ^{-r} δ^{-1} + t γ^{-r} : t ∈ GF(q) }` for `r < R`
/// and `s` in the trace-zero hyperplane `S`.
#[derive(Debug, Clone)]
pub struct AffineGeometry {
    pub q: u64,
    pub j: u32,
    pub field: FiniteField,
    /// Degree of GF(q) over the prime field.
    pub sub_degree: u32,
    /// The trace-zero hyperplane, canonical order.
    pub hyperplane: Vec<FieldElement>,
    /// First element with trace one.
    pub delta: FieldElement,
    /// GF(q) as a subfield, canonical order.
    pub scalars: Vec<FieldElement>,
}

impl AffineGeometry {
    pub fn new(q: u64, j: u32) -> Result<Self, DesignError> {
        if j < 1 {
            return Err(DesignError::InvalidParameters("affine geometries need j >= 1".into()));
        }
        let (p, d) = prime_power(q).ok_or(GfError::NotAPrimePower(q))?;
        let field = FiniteField::new(p, d * (j + 1))?;
        let hyperplane = hyperplane_kernel(&field, q)?;
        let delta = trace_one_element(&field, q)?;
        let scalars = field.subfield(d)?;
        Ok(Self {
            q,
            j,
            field,
            sub_degree: d,
            hyperplane,
            delta,
            scalars,
        })
    }

    /// Number of parallel classes `(q^{j+1}-1)/(q-1)`.
    pub fn num_classes(&self) -> usize {
        (self.field.order() - 1) / (self.q as usize - 1)
    }

    pub fn line(&self, r: usize, s: FieldElement) -> Vec<usize> {
        let f = &self.field;
        let dir = f.primitive_pow(-(r as i64));
        let delta_inv = f.inv(self.delta).expect("trace-one element is nonzero");
        let base = f.mul(f.mul(s, dir), delta_inv);
        let mut pts: Vec<usize> = self
            .scalars
            .iter()
            .map(|&t| f.add(base, f.mul(t, dir)).index())
            .collect();
        pts.sort_unstable();
        pts
    }

    /// The resolved design with blocks listed as `(r, s)` in r-major order,
    /// `s` running over the hyperplane in canonical order.
    pub fn labelled_design(&self) -> SteinerSystem {
        let big_s = self.hyperplane.len();
        let mut blocks = Vec::with_capacity(self.num_classes() * big_s);
        let mut resolution = Vec::with_capacity(self.num_classes());
        for r in 0..self.num_classes() {
            resolution.push((blocks.len()..blocks.len() + big_s).collect());
            for &s in &self.hyperplane {
                blocks.push(self.line(r, s));
            }
        }
        SteinerSystem::new(self.field.order(), self.q as usize, blocks, Some(resolution))
    }
}

/// Resolvable (2, q, q^{j+1}) design of affine lines, in canonical form.
pub fn affine_design(q: u64, j: u32) -> Result<SteinerSystem, DesignError> {
    Ok(AffineGeometry::new(q, j)?.labelled_design().canonical())
}

/// All pairs of `0..v`, resolved into `v-1` rounds by the circle method.
pub fn round_robin_design(v: usize) -> Result<SteinerSystem, DesignError> {
    if v % 2 == 1 {
        return Err(DesignError::OddPointCount(v));
    }
    if v < 4 {
        return Err(DesignError::InvalidParameters(format!(
            "round-robin designs need at least 4 points, got {v}"
        )));
    }
    let m = v - 1;
    let mut blocks = Vec::with_capacity(v * m / 2);
    let mut resolution = Vec::with_capacity(m);
    for r in 0..m {
        let start = blocks.len();
        blocks.push(vec![m, r]);
        for i in 1..v / 2 {
            blocks.push(vec![(r + i) % m, (r + m - i) % m]);
        }
        resolution.push((start..blocks.len()).collect());
    }
    Ok(SteinerSystem::new(v, 2, blocks, Some(resolution)).canonical())
}

const KIRKMAN_15: [[[usize; 3]; 5]; 7] = [
    [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9, 10, 11], [12, 13, 14]],
    [[0, 3, 6], [1, 4, 7], [2, 9, 12], [5, 10, 13], [8, 11, 14]],
    [[0, 4, 9], [1, 5, 11], [2, 7, 14], [3, 8, 13], [6, 10, 12]],
    [[0, 5, 14], [1, 3, 12], [2, 6, 11], [4, 8, 10], [7, 9, 13]],
    [[0, 7, 10], [1, 6, 13], [2, 5, 8], [3, 9, 14], [4, 11, 12]],
    [[0, 8, 12], [1, 10, 14], [2, 4, 13], [3, 7, 11], [5, 6, 9]],
    [[0, 11, 13], [1, 8, 9], [2, 3, 10], [4, 6, 14], [5, 7, 12]],
];

/// A fixed solution of Kirkman's schoolgirl problem: a resolvable (2,3,15) system.
pub fn kirkman15() -> SteinerSystem {
    let blocks: Vec<Vec<usize>> = KIRKMAN_15
        .iter()
        .flat_map(|day| day.iter().map(|t| t.to_vec()))
        .collect();
    let resolution = (0..7).map(|d| (5 * d..5 * d + 5).collect()).collect();
    SteinerSystem::new(15, 3, blocks, Some(resolution)).canonical()
}
