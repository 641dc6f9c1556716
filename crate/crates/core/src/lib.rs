//! Exact-rational engine for the budgeted single-buyer pricing game: one
//! buyer with a budget and a valuation over items, one vendor per item
//! naming a price.
//!
//! ```
//! use pricegame::{demand, fixtures, verify_pne, PriceVector};
//!
//! let game = fixtures::add_222();
//! let prices: PriceVector = "1/3,1/3,1/3".parse().unwrap();
//! assert_eq!(demand(&game, &prices).chosen, game.items());
//! assert!(verify_pne(&game, &prices).is_pne);
//! ```

pub mod demand;
pub mod equilibrium;
pub mod fixtures;
pub mod game;
pub mod items;
pub mod oracle;
pub mod rational;
pub mod repro;
pub mod valuation;
pub mod verifier;
pub mod welfare;

pub use demand::{buyer_utility, demand, vendor_utilities, BuyerUtility, DemandOutcome, PriceError, PriceVector};
pub use equilibrium::{
    base_set, bnl_prices, check_constraint, equal_utility_prices, is_market_clearing, BaseSet, ConstraintReport,
    EquilibriumError,
};
pub use game::{Game, GameError, GameFile, GameFileError};
pub use items::ItemSet;
pub use oracle::{generate, grid_enumerate, oracle_demand, GeneratorSpec, GridSpec};
pub use rational::Rational;
pub use valuation::{TableClass, Valuation, ValuationError, ValidationReport, DEFAULT_ITEM_CAP};
pub use verifier::{best_response, critical_prices, verify_pne, VerifyReport};
pub use welfare::{equilibrium_ratio, poa_family, social_welfare, RatioReport, WelfareReport};
