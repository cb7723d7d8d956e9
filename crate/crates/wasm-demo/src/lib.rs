//! Browser bindings for an interactive WGAN training demo.
//!
//! The page constructs a [`Demo`], steps it in small bursts from
//! `requestAnimationFrame`, and reads back flat coordinate arrays for
//! drawing: real and generated scatter points, a critic heatmap, the
//! sliced-W1 monitor history, and an exact transport plan between small
//! point sets. All state lives on the Rust side; the JS layer only
//! renders.
//!
//! The same logic compiles natively (the `demo` module is plain Rust),
//! which is how the test suite exercises it without a browser.

pub mod demo;

pub use demo::{demo_config, DemoState};

use wasm_bindgen::prelude::*;

fn to_js(e: gswgan::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Handle exported to JavaScript.
#[wasm_bindgen]
pub struct Demo {
    inner: DemoState,
}

#[wasm_bindgen]
impl Demo {
    /// Builds a fresh run for the given seed.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, JsValue> {
        DemoState::new(seed as u64)
            .map(|inner| Demo { inner })
            .map_err(to_js)
    }

    /// Advances training and appends one monitor point.
    pub fn step(&mut self, outer_iterations: u32) -> Result<(), JsValue> {
        self.inner.step(outer_iterations).map_err(to_js)
    }

    pub fn iteration(&self) -> f64 {
        self.inner.iteration() as f64
    }

    pub fn critic_loss(&self) -> f64 {
        self.inner.last_losses().0
    }

    pub fn generator_loss(&self) -> f64 {
        self.inner.last_losses().1
    }

    /// Held-out real points as [x0, y0, x1, y1, ...].
    pub fn real_points(&self) -> Vec<f64> {
        self.inner.real_points_flat()
    }

    /// Fresh generator samples as [x0, y0, x1, y1, ...].
    pub fn fake_points(&mut self, n: u32) -> Result<Vec<f64>, JsValue> {
        self.inner.fake_points_flat(n as usize).map_err(to_js)
    }

    /// Monitor history as [iter0, value0, iter1, value1, ...].
    pub fn history(&self) -> Vec<f64> {
        self.inner.history_flat()
    }

    /// Critic values on a grid, row-major with x fastest.
    pub fn critic_heatmap(
        &self,
        nx: u32,
        ny: u32,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    ) -> Result<Vec<f64>, JsValue> {
        self.inner
            .critic_heatmap(nx as usize, ny as usize, x0, y0, x1, y1)
            .map_err(to_js)
    }

    /// Exact W1 and its transport plan between small fresh point sets,
    /// as a JSON string.
    pub fn transport_plan(&mut self, n: u32) -> Result<String, JsValue> {
        self.inner.transport_json(n as usize).map_err(to_js)
    }
}
