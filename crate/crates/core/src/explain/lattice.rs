use fixedbitset::FixedBitSet;

use super::fca::{FcaError, FormalConcept};

/// Concepts ordered by extent inclusion, with the covering relation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptLattice {
    concepts: Vec<FormalConcept>,
    /// `(lower, upper)` index pairs where `upper` covers `lower`.
    edges: Vec<(usize, usize)>,
    top: usize,
    bottom: usize,
}

impl ConceptLattice {
    pub fn concepts(&self) -> &[FormalConcept] {
        &self.concepts
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Concept with the largest extent.
    pub fn top(&self) -> usize {
        self.top
    }

    /// Concept with the smallest extent.
    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn upper_covers(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == i).map(|e| e.1)
    }

    pub fn lower_covers(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == i).map(|e| e.0)
    }

    /// Attributes whose attribute concept is `i`: in its intent but in no
    /// upper cover's intent.
    pub fn introduced_attributes(&self, i: usize) -> Vec<usize> {
        let mut own = self.concepts[i].intent.clone();
        for u in self.upper_covers(i) {
            own.difference_with(&self.concepts[u].intent);
        }
        own.ones().collect()
    }

    /// Objects whose object concept is `i`.
    pub fn introduced_objects(&self, i: usize) -> Vec<usize> {
        let mut own = self.concepts[i].extent.clone();
        for l in self.lower_covers(i) {
            own.difference_with(&self.concepts[l].extent);
        }
        own.ones().collect()
    }
}

fn is_strict_subset(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    a.is_subset(b) && a != b
}

fn check_consistency(concepts: &[FormalConcept]) -> Result<(), FcaError> {
    let (n_obj, n_attr) = (concepts[0].extent.len(), concepts[0].intent.len());
    for (i, c) in concepts.iter().enumerate() {
        if c.extent.len() != n_obj || c.intent.len() != n_attr {
            return Err(FcaError::Inconsistent(format!(
                "concept {i} has a different universe size"
            )));
        }
    }
    for (i, a) in concepts.iter().enumerate() {
        for (j, b) in concepts.iter().enumerate().skip(i + 1) {
            if a.extent == b.extent || a.intent == b.intent {
                return Err(FcaError::Inconsistent(format!(
                    "concepts {i} and {j} share an extent or intent"
                )));
            }
            let ext = a.extent.is_subset(&b.extent);
            let int = b.intent.is_subset(&a.intent);
            let ext_rev = b.extent.is_subset(&a.extent);
            let int_rev = a.intent.is_subset(&b.intent);
            if ext != int || ext_rev != int_rev {
                return Err(FcaError::Inconsistent(format!(
                    "extent and intent order disagree for concepts {i} and {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the covering relation of a complete concept set. For each concept
/// the strictly larger extents are scanned by increasing size; a candidate is
/// an upper cover unless it contains a cover already found.
pub fn build_lattice(concepts: Vec<FormalConcept>) -> Result<ConceptLattice, FcaError> {
    if concepts.is_empty() {
        return Err(FcaError::NoConcepts);
    }
    check_consistency(&concepts)?;

    let sizes: Vec<usize> = concepts.iter().map(|c| c.extent.count_ones(..)).collect();
    let mut by_size: Vec<usize> = (0..concepts.len()).collect();
    by_size.sort_by_key(|&i| (sizes[i], i));

    let mut edges = Vec::new();
    for (i, c) in concepts.iter().enumerate() {
        let mut covers: Vec<usize> = Vec::new();
        for &j in &by_size {
            let d = &concepts[j];
            if sizes[j] <= sizes[i] || !is_strict_subset(&c.extent, &d.extent) {
                continue;
            }
            if covers
                .iter()
                .all(|&k| !concepts[k].extent.is_subset(&d.extent))
            {
                covers.push(j);
            }
        }
        covers.sort_unstable();
        edges.extend(covers.into_iter().map(|j| (i, j)));
    }

    let maxima: Vec<usize> = (0..concepts.len())
        .filter(|&i| edges.iter().all(|e| e.0 != i))
        .collect();
    let minima: Vec<usize> = (0..concepts.len())
        .filter(|&i| edges.iter().all(|e| e.1 != i))
        .collect();
    let (&[top], &[bottom]) = (maxima.as_slice(), minima.as_slice()) else {
        return Err(FcaError::Inconsistent(format!(
            "{} maximal and {} minimal concepts",
            maxima.len(),
            minima.len()
        )));
    };
    Ok(ConceptLattice {
        concepts,
        edges,
        top,
        bottom,
    })
}
