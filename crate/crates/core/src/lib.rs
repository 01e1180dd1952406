//! Cost-efficiency-based mobile data traffic management from the user's side.
//!
//! * [`longterm`]: bundle-plan cost and cost efficiency over a month.
//! * [`demand`]: benefit weights and consumption bounds from usage history.
//! * [`dayahead`]: day-ahead profile scheduling as a linear fractional
//!   program, solved with [`fracprog`], plus a profit-maximising baseline.
//! * [`realtime`]: slot-by-slot admission, reallocation and overage billing.
//! * [`workload`]: seeded synthetic access and traffic generator.
//! * [`cli`]: scenario configuration, batch pipelines and report files.

pub mod cli;
pub mod dayahead;
pub mod demand;
pub mod fracprog;
pub mod io;
pub mod longterm;
pub mod realtime;
pub mod workload;

pub use dayahead::{PriceCurve, ScheduledProfile, SchedulingProblem};
pub use demand::{AccessHistory, AppId, BenefitWeights, ConsumptionBounds, TrafficProfile};
pub use fracprog::{LfpProblem, LfpSolution, LpProblem};
pub use longterm::BundlePlan;
pub use realtime::{AdmissionParams, RequestEvent, RequestKind, SlotState};
