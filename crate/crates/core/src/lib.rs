//! A multirotor autonomy stack closed around a deterministic quadrotor
//! simulator: EKF state estimation, smoothstep waypoint trajectories, a
//! flatness-based trajectory follower and a cascaded PID controller.

pub mod app;
pub mod clock;
pub mod config;
pub mod controller;
pub mod estimator;
pub mod math;
pub mod messages;
pub mod mission;
pub mod navigation;
pub mod report;
pub mod runtime;
pub mod sim;
