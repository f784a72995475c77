pub mod arrangements;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod network;
pub mod solvers;
pub mod decomposition;
pub mod bounds;
pub mod report;
pub mod experiments;
pub mod verify;
