//! WebAssembly bindings for the single-page demo in `www/`.

pub mod scene;

use wasm_bindgen::prelude::*;

use crate::scene::{Scene, View};

fn js(e: ctsdf::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct DemoScene {
    inner: Scene,
}

#[wasm_bindgen]
impl DemoScene {
    #[wasm_bindgen(constructor)]
    pub fn new(surface: &str, h: f64) -> Result<DemoScene, JsError> {
        Ok(DemoScene {
            inner: Scene::new(surface, h).map_err(js)?,
        })
    }

    pub fn size(&self) -> usize {
        self.inner.size()
    }

    /// `view` is `analytic`, `solved` or `error`.
    pub fn slice(&mut self, view: &str, k: usize) -> Result<Vec<f64>, JsError> {
        let view: View = view.parse().map_err(js)?;
        self.inner.slice(view, k).map_err(js)
    }

    /// `[px, py, pz, ex, ey, ez, iterations, converged]`; the exact point is
    /// NaN where it is not unique.
    pub fn probe(&self, x: f64, y: f64, z: f64) -> Result<Vec<f64>, JsError> {
        let p = self.inner.probe([x, y, z]).map_err(js)?;
        let e = p.exact.unwrap_or([f64::NAN; 3]);
        Ok(vec![
            p.point[0],
            p.point[1],
            p.point[2],
            e[0],
            e[1],
            e[2],
            p.iterations as f64,
            p.converged as u8 as f64,
        ])
    }

    /// Morphometry report as JSON.
    pub fn morphometry(&self) -> Result<String, JsError> {
        let m = self.inner.morphometry().map_err(js)?;
        serde_json::to_string(&m).map_err(|e| JsError::new(&e.to_string()))
    }
}
