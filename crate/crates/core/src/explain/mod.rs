//! Explanations of the scored case space: probability categories, a Gini
//! decision tree over answer indicators, and formal concept lattices.

mod category;
mod fca;
mod lattice;
mod tree;

pub use category::{categorize, CategoryError, CategoryThresholds, ProbabilityCategory, CATEGORIES};
pub use fca::{
    attribute_pair_supports, attribute_supports, brute_force_intents, enumerate_concepts,
    enumerate_concepts_parallel, FcaError, FormalConcept, FormalContext, Side,
};
pub use lattice::{build_lattice, ConceptLattice};
pub use tree::{
    fit_decision_tree, gini, prune_tree, split_gains, DecisionTree, Split, TreeError, TreeNode,
    TreeParams,
};
