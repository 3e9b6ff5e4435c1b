//! Deterministic discrete-event simulator of a device-centric 6G joint
//! communication and sensing (JCAS) mobility network.
//!
//! Vehicles, drones, roadside units and edge compute nodes cooperate over
//! sidelink radio: they schedule transmissions around an interference
//! conflict graph, exchange typed sensing payloads with metadata sidecars,
//! fuse point clouds at a group leader, localize non-cooperative radio
//! emitters by time difference of arrival, and enforce privacy policy on
//! every data access. Every run is reproducible: the same scenario file and
//! seed yield a byte-identical event trace.

pub mod coordination;
pub mod dataflow;
pub mod fusion;
pub mod metrics;
pub mod noise;
pub mod presets;
pub mod privacy;
pub mod radio;
pub mod scenario;
pub mod sensing;
pub mod sim;
pub mod trace;
pub mod traceability;
pub mod world;

/// Propagation speed used for all time-of-flight computations, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
