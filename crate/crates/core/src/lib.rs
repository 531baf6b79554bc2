//! Vector-valued integral and neural reproducing kernel Banach spaces over
//! finitely-atomic vector measures.
//!
//! The crate covers the finite-dimensional building blocks ([`dual_pair`]),
//! atomic measures and their pairings ([`measure`]), the scalar features and
//! kernels ([`feature`]), space-level operations and a kernel-ridge baseline
//! ([`rkbs`]), the total-variation regularized learning problem solved by
//! atom-inserting conditional gradient ([`solver`]), hypernetwork and
//! DeepONet models ([`operator_learning`]) and a property-suite harness
//! ([`certify`]).

pub mod certify;
pub mod dual_pair;
pub mod error;
pub mod feature;
pub mod measure;
pub mod numeric;
pub mod operator_learning;
pub mod rkbs;
pub mod solver;

pub use dual_pair::{DualPairSpec, Norm, TwinOperator};
pub use error::{Error, Result};
pub use feature::{Activation, Beta, BoxDomain, FeatureKind, FeatureMap, KernelValue, Table};
pub use measure::{product_pairing, Atom, AtomicVectorMeasure};
pub use rkbs::{RkbsFunction, RkhsModel, ScalarKernel};
