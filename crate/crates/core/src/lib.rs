//! Design and analysis toolkit for a single-cable, clock-spring-assisted wrist
//! abduction-adduction (Ab-Ad) exoskeleton joint.
//!
//! The pipeline has four stages, each in its own module:
//!
//! - [`biomech`]: a quasi-static rigid-link arm model giving the wrist Ab-Ad
//!   reaction moment over a motion cycle for a set of arm postures.
//! - [`spring_design`]: least-squares fit of the worst-case torque curve, the
//!   stiffness / pretension it implies, unit conversion and catalog matching.
//! - [`transmission`]: spring torque, lever arm, capstan friction, gearing and
//!   motor constant, composed into a motor-current estimate.
//! - [`trial`]: trial-log cleaning, range of motion, RMS torque, repeatability,
//!   Friedman statistics, Likert summaries and the aggregated study report.
//!
//! [`config`] holds the line-oriented configuration format and [`cli`] the
//! command-line front end built on top of everything else.
//!
//! Sign convention throughout: wrist abduction (radial deviation) is positive,
//! adduction (ulnar deviation) negative.

pub mod biomech;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod json;
pub mod spring_design;
pub mod transmission;
pub mod trial;

pub use error::{Error, Result};
