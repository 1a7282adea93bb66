//! Regions, sampled set predicates and the geometric condition on the
//! source, detector and scatterer sets.

mod condition;
mod predicates;
mod region;

pub use condition::{
    check_condition1, construct_y2_x2, Clause, ConditionWitness, Margins, SourceWitness, Status, WitnessPair,
};
pub use predicates::{find_equidistant_source, illuminated_from, segment_hits, EquidistanceSearch, Sampling};
pub use region::{BallSpec, Region};
