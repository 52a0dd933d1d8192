//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Images cross the boundary as tightly packed RGBA8 buffers. Each export
//! has a plain Rust counterpart in [`ops`] so the logic is testable
//! without a browser.

use wasm_bindgen::prelude::*;

pub mod ops;

fn js(e: fourierisp::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Procedural test image, `width × height` RGBA8.
#[wasm_bindgen]
pub fn procedural(width: usize, height: usize, seed: u32) -> Vec<u8> {
    ops::procedural(width, height, u64::from(seed))
}

/// Exchanges amplitude spectra; returns both results back to back.
#[wasm_bindgen]
pub fn amplitude_swap(a: &[u8], b: &[u8], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    ops::amplitude_swap(a, b, width, height).map(|(x, y)| [x, y].concat()).map_err(js)
}

/// Log-amplitude view followed by the phase view.
#[wasm_bindgen]
pub fn spectrum_views(rgba: &[u8], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    ops::spectrum_views(rgba, width, height).map(|(x, y)| [x, y].concat()).map_err(js)
}

/// Colour-coded mosaic followed by its bilinear demosaic. `width` and
/// `height` must be even.
#[wasm_bindgen]
pub fn mosaic_demosaic(
    rgba: &[u8],
    width: usize,
    height: usize,
    cfa: &str,
    noise: f64,
    seed: u32,
) -> Result<Vec<u8>, JsError> {
    let cfa = cfa.parse().map_err(js)?;
    ops::mosaic_demosaic(rgba, width, height, cfa, noise, u64::from(seed))
        .map(|(x, y)| [x, y].concat())
        .map_err(js)
}
