//! Syntactic causal identification on acyclic directed mixed graphs.
//!
//! Given an ADMG and a query "effect of do(A) on Y", this crate derives the
//! interventional signature purely syntactically, by rewriting the monoidal
//! signature generated by the graph along a fixing sequence, or reports that
//! the effect is not identifiable. Identified signatures can then be
//! interpreted in concrete semantics: finite discrete probability, the
//! min-plus (tropical) semifield, and deterministic functions.
//!
//! The pipeline, end to end:
//!
//! ```
//! use synid::{identify, Admg, CausalQuery};
//!
//! let g = Admg::from_edges(&["X", "Y", "Z"], &["X -> Z", "Z -> Y", "X <-> Y"])?;
//! let query = CausalQuery::of(&["Y"], &["X"])?;
//! let result = identify(&g, &query)?;
//! let id = result.identification().expect("the front-door effect is identifiable");
//! assert_eq!(id.signature().to_text(), "z: X -> Z\nq: Z -> Y");
//! # Ok::<(), synid::Error>(())
//! ```

pub mod admg;
pub mod error;
pub mod expr;
pub mod guide;
pub mod identify;
pub mod render;
pub mod rewrite;
pub mod semantics;
pub mod signature;
pub mod word;

pub use admg::{Admg, Cadmg, NodeSet, TopoOrder};
pub use error::{Error, Result};
pub use expr::{combine, exterior, ExteriorSignature, Interior, MorphismExpr};
pub use identify::{explain, identify, y_star, CausalQuery, Identification, IdentifyResult};
pub use rewrite::{
    apply_plan, control, delete_identities, fix, hide, plan_fixseq, simple, simplify_step,
    FixPlan, Step,
};
pub use semantics::{
    check_identification, evaluate, module_tables, observational_joint, oracle_interventional,
    parse_model, CheckReport, DiscreteModel, Distribution, Interpretation, ModelSpec, ModuleTable,
};
pub use signature::{chain_factored, signature_from_admg, MonoidalSignature, Morphism};
pub use word::ObjectWord;
