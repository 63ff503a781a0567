//! Decide whether `n` elements can be sorted with `C` comparisons.
//!
//! The search walks sets of knowledge posets forward from the total disorder,
//! pruning every comparison that leaves more linear extensions than the
//! remaining comparisons can distinguish, then walks backward keeping only
//! posets that are provably sortable in time. Linear extension counts, and
//! the counts for every possible next comparison, come from a dynamic program
//! over the downset lattice.

pub mod fja;
pub mod linext;
pub mod poset;
pub mod search;
pub mod store;

pub use linext::{count_all_pairs, count_linext, DownsetTable, PairTable};
pub use poset::{CanonicalCode, Poset, PosetError, MAX_ELEMENTS};
