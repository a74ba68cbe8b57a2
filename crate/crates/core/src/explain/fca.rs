//! Formal contexts, derivation operators and concept enumeration.
//!
//! Attribute sets are ordered lectically over attribute positions: of two
//! distinct sets, the larger is the one containing the smallest element in
//! which they differ. Concepts are emitted in increasing lectic order of
//! their intents.

use std::cmp::Ordering;
use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use thiserror::Error;

/// Largest attribute count accepted by the exhaustive reference enumeration.
const BRUTE_FORCE_MAX_ATTRIBUTES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcaError {
    #[error("row {row} has {found} entries, expected {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{rows} incidence rows for {objects} objects")]
    RowCount { objects: usize, rows: usize },
    #[error("duplicate object `{0}`")]
    DuplicateObject(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("{0} attributes is too many for exhaustive enumeration")]
    TooManyAttributes(usize),
    #[error("concept set is empty")]
    NoConcepts,
    #[error("inconsistent concept set: {0}")]
    Inconsistent(String),
}

/// Which side of the context a set of ids lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Objects,
    Attributes,
}

/// Binary incidence between named objects and named attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalContext {
    objects: Vec<String>,
    attributes: Vec<String>,
    /// Attributes of each object.
    rows: Vec<FixedBitSet>,
    /// Objects having each attribute.
    columns: Vec<FixedBitSet>,
}

fn check_unique(names: &[String], err: fn(String) -> FcaError) -> Result<(), FcaError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(err(n.clone()));
        }
    }
    Ok(())
}

impl FormalContext {
    pub fn new(
        objects: Vec<String>,
        attributes: Vec<String>,
        incidence: &[Vec<bool>],
    ) -> Result<Self, FcaError> {
        if incidence.len() != objects.len() {
            return Err(FcaError::RowCount {
                objects: objects.len(),
                rows: incidence.len(),
            });
        }
        let m = attributes.len();
        let mut rows = Vec::with_capacity(objects.len());
        for (i, row) in incidence.iter().enumerate() {
            if row.len() != m {
                return Err(FcaError::RowLength {
                    row: i,
                    expected: m,
                    found: row.len(),
                });
            }
            let mut bits = FixedBitSet::with_capacity(m);
            for (j, &b) in row.iter().enumerate() {
                bits.set(j, b);
            }
            rows.push(bits);
        }
        Self::from_rows(objects, attributes, rows)
    }

    /// Builds a context from per-object attribute bitsets.
    pub fn from_rows(
        objects: Vec<String>,
        attributes: Vec<String>,
        rows: Vec<FixedBitSet>,
    ) -> Result<Self, FcaError> {
        check_unique(&objects, FcaError::DuplicateObject)?;
        check_unique(&attributes, FcaError::DuplicateAttribute)?;
        if rows.len() != objects.len() {
            return Err(FcaError::RowCount {
                objects: objects.len(),
                rows: rows.len(),
            });
        }
        let m = attributes.len();
        let mut columns = vec![FixedBitSet::with_capacity(objects.len()); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(FcaError::RowLength {
                    row: i,
                    expected: m,
                    found: row.len(),
                });
            }
            for j in row.ones() {
                columns[j].insert(i);
            }
        }
        Ok(Self {
            objects,
            attributes,
            rows,
            columns,
        })
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn incident(&self, object: usize, attribute: usize) -> bool {
        self.rows[object].contains(attribute)
    }

    /// Attributes of one object.
    pub fn row(&self, object: usize) -> &FixedBitSet {
        &self.rows[object]
    }

    /// Objects having one attribute.
    pub fn column(&self, attribute: usize) -> &FixedBitSet {
        &self.columns[attribute]
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == id)
    }

    pub fn attribute_index(&self, id: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == id)
    }

    pub fn empty_objects(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.object_count())
    }

    pub fn empty_attributes(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.attribute_count())
    }

    /// Attributes shared by every object in `objects`.
    pub fn up(&self, objects: &FixedBitSet) -> FixedBitSet {
        let mut out = self.empty_attributes();
        out.insert_range(..);
        for o in objects.ones() {
            out.intersect_with(&self.rows[o]);
        }
        out
    }

    /// Objects having every attribute in `attributes`.
    pub fn down(&self, attributes: &FixedBitSet) -> FixedBitSet {
        let mut out = self.empty_objects();
        out.insert_range(..);
        for a in attributes.ones() {
            out.intersect_with(&self.columns[a]);
        }
        out
    }

    pub fn close_attributes(&self, attributes: &FixedBitSet) -> FixedBitSet {
        self.up(&self.down(attributes))
    }

    pub fn close_objects(&self, objects: &FixedBitSet) -> FixedBitSet {
        self.down(&self.up(objects))
    }

    /// Derivation of a named set. `side` is the side `ids` belong to; the
    /// result lies on the other side, in context order.
    pub fn derive<S: AsRef<str>>(&self, side: Side, ids: &[S]) -> Result<Vec<String>, FcaError> {
        match side {
            Side::Objects => {
                let mut set = self.empty_objects();
                for id in ids {
                    let id = id.as_ref();
                    let i = self
                        .object_index(id)
                        .ok_or_else(|| FcaError::UnknownObject(id.to_owned()))?;
                    set.insert(i);
                }
                Ok(self.up(&set).ones().map(|a| self.attributes[a].clone()).collect())
            }
            Side::Attributes => {
                let mut set = self.empty_attributes();
                for id in ids {
                    let id = id.as_ref();
                    let j = self
                        .attribute_index(id)
                        .ok_or_else(|| FcaError::UnknownAttribute(id.to_owned()))?;
                    set.insert(j);
                }
                Ok(self.down(&set).ones().map(|o| self.objects[o].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormalConcept {
    pub extent: FixedBitSet,
    pub intent: FixedBitSet,
}

impl FormalConcept {
    pub fn is_concept_of(&self, ctx: &FormalContext) -> bool {
        ctx.up(&self.extent) == self.intent && ctx.down(&self.intent) == self.extent
    }
}

/// Lectic comparison of two attribute sets of equal capacity.
pub(crate) fn lectic_cmp(a: &FixedBitSet, b: &FixedBitSet) -> Ordering {
    match a.symmetric_difference(b).min() {
        None => Ordering::Equal,
        Some(i) if b.contains(i) => Ordering::Less,
        Some(_) => Ordering::Greater,
    }
}

/// True when `a` and `b` agree on all positions below `i`.
fn agree_below(a: &FixedBitSet, b: &FixedBitSet, i: usize) -> bool {
    a.symmetric_difference(b).min().is_none_or(|d| d >= i)
}

/// All concepts in lectic order of intents (Next-Closure).
pub fn enumerate_concepts(ctx: &FormalContext) -> Vec<FormalConcept> {
    let m = ctx.attribute_count();
    let mut out = Vec::new();
    let mut extent = ctx.down(&ctx.empty_attributes());
    let mut intent = ctx.up(&extent);
    loop {
        out.push(FormalConcept {
            extent: extent.clone(),
            intent: intent.clone(),
        });
        if intent.count_ones(..) == m {
            break;
        }
        let mut advanced = false;
        for i in (0..m).rev() {
            if intent.contains(i) {
                continue;
            }
            let mut seed = intent.clone();
            seed.remove_range(i..);
            seed.insert(i);
            let candidate_extent = ctx.down(&seed);
            let candidate = ctx.up(&candidate_extent);
            if agree_below(&candidate, &intent, i) {
                extent = candidate_extent;
                intent = candidate;
                advanced = true;
                break;
            }
        }
        // Only the full attribute set has no lectic successor.
        debug_assert!(advanced);
        if !advanced {
            break;
        }
    }
    out
}

fn close_by_one(
    ctx: &FormalContext,
    extent: &FixedBitSet,
    intent: &FixedBitSet,
    start: usize,
    out: &mut Vec<FormalConcept>,
) {
    for j in start..ctx.attribute_count() {
        if let Some((e, i)) = canonical_child(ctx, extent, intent, j) {
            out.push(FormalConcept {
                extent: e.clone(),
                intent: i.clone(),
            });
            close_by_one(ctx, &e, &i, j + 1, out);
        }
    }
}

fn canonical_child(
    ctx: &FormalContext,
    extent: &FixedBitSet,
    intent: &FixedBitSet,
    j: usize,
) -> Option<(FixedBitSet, FixedBitSet)> {
    if intent.contains(j) {
        return None;
    }
    let mut e = extent.clone();
    e.intersect_with(ctx.column(j));
    let i = ctx.up(&e);
    agree_below(&i, intent, j).then_some((e, i))
}

/// Same output as [`enumerate_concepts`], computed with Close-by-One over
/// the top-level branches in parallel and then sorted lectically.
pub fn enumerate_concepts_parallel(ctx: &FormalContext) -> Vec<FormalConcept> {
    let extent = ctx.down(&ctx.empty_attributes());
    let intent = ctx.up(&extent);
    let branches: Vec<Vec<FormalConcept>> = (0..ctx.attribute_count())
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            if let Some((e, i)) = canonical_child(ctx, &extent, &intent, j) {
                out.push(FormalConcept {
                    extent: e.clone(),
                    intent: i.clone(),
                });
                close_by_one(ctx, &e, &i, j + 1, &mut out);
            }
            out
        })
        .collect();
    let mut all = vec![FormalConcept { extent, intent }];
    all.extend(branches.into_iter().flatten());
    all.sort_by(|a, b| lectic_cmp(&a.intent, &b.intent));
    all
}

/// Closed attribute sets found by closing every subset of attributes, in
/// lectic order. Exponential; intended as a reference for small contexts.
pub fn brute_force_intents(ctx: &FormalContext) -> Result<Vec<FixedBitSet>, FcaError> {
    let m = ctx.attribute_count();
    if m > BRUTE_FORCE_MAX_ATTRIBUTES {
        return Err(FcaError::TooManyAttributes(m));
    }
    let mut seen = HashSet::new();
    for mask in 0u32..(1u32 << m) {
        let mut set = ctx.empty_attributes();
        for j in 0..m {
            if mask >> j & 1 == 1 {
                set.insert(j);
            }
        }
        seen.insert(ctx.close_attributes(&set));
    }
    let mut out: Vec<FixedBitSet> = seen.into_iter().collect();
    out.sort_by(lectic_cmp);
    Ok(out)
}

/// Number of objects having each attribute.
pub fn attribute_supports(ctx: &FormalContext) -> Vec<usize> {
    (0..ctx.attribute_count())
        .map(|j| ctx.column(j).count_ones(..))
        .collect()
}

/// `(i, j, count)` for every attribute pair `i < j`, counting objects having
/// both.
pub fn attribute_pair_supports(ctx: &FormalContext) -> Vec<(usize, usize, usize)> {
    let m = ctx.attribute_count();
    let mut out = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let n = ctx.column(i).intersection(ctx.column(j)).count();
            out.push((i, j, n));
        }
    }
    out
}
