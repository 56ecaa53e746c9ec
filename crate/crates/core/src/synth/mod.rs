//! Desk-scale analytic scene generator: randomized rigid-body scenes,
//! event-driven simulation, camera rigs and an exact ray-cast renderer.

pub mod camera;
pub mod render;
pub mod scene;
pub mod sim;

pub use camera::{CameraMode, CameraRig};
pub use render::{gt_points4d, render_flow, render_frame, render_motion, GtPointsOptions, RenderedFrame, RenderedMotion};
pub use scene::{randomize_scene, Complexity, Lighting, ObjectSpec, SceneSpec, Shape};
pub use sim::{simulate, SceneTrace};
