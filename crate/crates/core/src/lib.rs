//! Exact verification of Rogers–Ramanujan-type q-series identities.
//!
//! - [`series`]: truncated Laurent series in `t = q^(1/2)` over big integers.
//! - [`qfunctions`]: Pochhammer symbols, Gaussian binomials, triple products.
//! - [`multisum`]: the nested-sum evaluator shared by identities and Bailey checks.
//! - [`bailey`]: Bailey pairs, transforms, chains and lattice consequences.
//! - [`identities`]: the identity catalog and its verifier.
//! - [`motion`]: particle motion, the maps Λ and Γ, traces.
//! - [`sets`]: frequency-sequence families, enumerators and bijections.
//! - [`par`]: parallel/sequential execution switch.

pub mod bailey;
pub mod identities;
pub mod motion;
pub mod multisum;
pub mod par;
pub mod qfunctions;
pub mod series;
pub mod sets;

pub use qfunctions::SignedMonomial;
pub use series::{Comparison, QSeries};
