//! Certification menus: screening a single-crossing buyer with a menu of
//! (quality, price) pairs, approximately optimal menus by dynamic
//! programming, and the matching-market game whose equilibria reduce to the
//! pricing problem.

pub mod choice;
pub mod dist;
pub mod error;
pub mod fptas;
pub mod instance;
pub mod market;
pub mod menu;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod reduction;
pub mod settings;
pub mod validate;
pub mod welfare;

pub use choice::{best_response, indifference_type, lowest_buyer, segment_outcome, MarketOutcome, Segment};
pub use dist::TypeDistribution;
pub use error::{Error, ErrorKind, Result};
pub use instance::{gap_rich_menu, make_named_instance, zoo, zoo_economy, InstanceSpec, Params, ZOO_NAMES};
pub use menu::{normalize_menu, Menu, MenuItem};
pub use model::{CertificationEconomy, ConsumerValue, PricingInstance, ProducerCost, Valuation};
pub use reduction::{matched_consumer, reduce_to_pricing};
pub use settings::Settings;
pub use validate::{validate_economy, validate_single_crossing, ValidationReport, Violation, ViolationKind};
pub use fptas::{dp_solve, DpSolution, DpTables, Grids, ItemLimit};
pub use oracle::{brute_force_optimal, discretize_types, DiscreteInstance, Objective};
pub use welfare::{first_best_welfare, wel_minus_rev, welfare_dp, welfare_optimal_dense, WelfareSolution};
pub use market::{clearing_prices, full_game_outcome, producer_choices, verify_walrasian, GameOutcome, WalrasianReport};
