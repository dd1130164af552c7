//! Airborne quantum key distribution performance evaluation with
//! aero-optical boundary-layer effects.
//!
//! The crate models a full downlink flight pass between a wing-mounted
//! photon source (Alice) and an optical ground station (Bob):
//!
//! - [`geometry`] — flight-pass geometry in the ENU frame (slant range,
//!   relative height, azimuth and zenith angles);
//! - [`flow`] — boundary-layer density fields and their conversion to
//!   refractive-index grids via the Gladstone-Dale relation, with file
//!   ingestion and a synthetic flat-plate generator;
//! - [`aero`] — gradient-index ray tracing, optical path length/difference,
//!   deflection angle, beam offset and Strehl ratio;
//! - [`link`] — Gaussian beam spreading through turbulence, pointing error,
//!   and end-to-end transmission efficiency;
//! - [`decoy`] — the vacuum + weak decoy BB84 secure key rate chain;
//! - [`driver`] — per-timestep orchestration of geometry, optics, link
//!   budget and key rate over a flight pass, phase segmentation, and the
//!   with/without-boundary-layer comparison.

pub mod aero;
pub mod decoy;
pub mod driver;
pub mod flow;
pub mod geometry;
pub mod link;

pub use aero::{AeroOpticsSummary, Ray, RayTraceResult, WavefrontSample};
pub use decoy::{DetectorModel, KeyRateSample, ProtocolParams};
pub use driver::{BoundaryLayerSource, ScenarioConfig, ScenarioSummary, TimeSeriesRecord};
pub use flow::{DensityGrid, GladstoneDaleConstant, RefractiveIndexGrid};
pub use geometry::{AircraftState, GeometrySample, Vec3};
pub use link::{AtmosphereParams, LinkSample, ReceiverParams, TransmitterParams};
