pub mod dense;
pub mod formulation;
pub mod ipm;
pub mod network;
pub mod report;
pub mod case;
pub mod sparse;
