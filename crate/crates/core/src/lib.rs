//! Landmark-based approximate distance oracles for time-dependent road
//! networks.
//!
//! The crate builds up from a small algebra of periodic piecewise-linear
//! travel-time functions ([`ttf`]) over a time-dependent graph ([`graph`])
//! with exact label-setting searches ([`search`]). On top of that sit
//! trapezoidal travel-time summaries ([`trap`]), landmark selection
//! ([`landmarks`]), a compressed summary store ([`codec`]), the flat and
//! hierarchical oracles ([`flat`], [`horn`]), live-traffic patching
//! ([`live`]), and benchmarking utilities ([`bench`], [`synth`]).

pub mod bench;
pub mod codec;
pub mod flat;
pub mod graph;
pub mod horn;
pub mod landmarks;
pub mod live;
pub mod search;
pub mod synth;
pub mod time;
pub mod trap;
pub mod ttf;
