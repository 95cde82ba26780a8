//! Minimum sensor and actuator selection for static output feedback
//! stabilization of networked linear systems.

pub mod bench;
pub mod candidates;
pub mod exec;
pub mod misdp;
pub mod model;
pub mod numerics;
pub mod sdp;
pub mod search;
pub mod sofs;
