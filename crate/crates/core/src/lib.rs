pub mod acceptance;
pub mod causality;
pub mod distance;
pub mod exec;
pub mod fields;
pub mod geodesic;
pub mod harris;
pub mod horizon;
pub mod magnetic;
pub mod metrics;
pub mod numerics;
pub mod scenario;
