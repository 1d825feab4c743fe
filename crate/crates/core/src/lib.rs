pub mod centralized;
pub mod channel;
pub mod distributed;
pub mod engine;
mod error;
pub mod model;
pub mod pairwise;
pub mod planner;
pub mod verify;

pub use engine::{run, sweep, Mode, ScenarioConfig, Simulation, SlotRecord, Summary};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/aging.md")]
    mod aging {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/centralized.md")]
    mod centralized {}
    #[doc = include_str!("../../../book/src/distributed.md")]
    mod distributed {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
