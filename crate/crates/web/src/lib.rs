//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes a game file and prices as strings and returns a JSON
//! document. The `*_report` functions hold the logic and are plain Rust so
//! they can be tested natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use pricegame::verifier::deviation_profile;
use pricegame::{demand, fixtures, is_market_clearing, vendor_utilities, verify_pne, Game, PriceVector};

fn parse(game: &str, prices: &str) -> Result<(Game, PriceVector), String> {
    let game = Game::from_json(game).map_err(|e| e.to_string())?;
    let prices: PriceVector = prices.parse().map_err(|e: pricegame::PriceError| e.to_string())?;
    game.check_prices(&prices).map_err(|e| e.to_string())?;
    Ok((game, prices))
}

fn to_string(value: serde_json::Value) -> String {
    serde_json::to_string(&value).expect("JSON values serialize")
}

/// Bundled games as `{ name: game file }`.
pub fn presets_report() -> String {
    let map: serde_json::Map<_, _> = fixtures::GAME_FILES
        .iter()
        .map(|(name, text)| (name.to_string(), serde_json::from_str(text).expect("bundled games are JSON")))
        .collect();
    to_string(serde_json::Value::Object(map))
}

pub fn demand_report(game: &str, prices: &str) -> Result<String, String> {
    let (game, prices) = parse(game, prices)?;
    let outcome = demand(&game, &prices);
    let mut value = serde_json::to_value(&outcome).expect("outcome serializes");
    value["vendor_utilities"] = json!(vendor_utilities(&outcome, &prices));
    value["value"] = json!(game.value(outcome.chosen));
    Ok(to_string(value))
}

pub fn verify_report(game: &str, prices: &str) -> Result<String, String> {
    let (game, prices) = parse(game, prices)?;
    let report = verify_pne(&game, &prices);
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["market_clearing"] = json!(is_market_clearing(&game, &prices));
    Ok(to_string(value))
}

/// Where `vendor` is sold as its own price varies, with the others fixed.
/// Samples carry a decimal `x` for plotting next to the exact price.
pub fn profile_report(game: &str, prices: &str, vendor: usize) -> Result<String, String> {
    let (game, prices) = parse(game, prices)?;
    if vendor >= game.n() {
        return Err(format!("vendor {vendor} out of range for {} items", game.n()));
    }
    let profile = deviation_profile(&game, &prices, vendor);
    let samples: Vec<_> = profile
        .samples
        .iter()
        .map(|s| json!({ "price": s.price, "x": s.price.to_f64(), "breakpoint": s.is_breakpoint, "sold": s.sold }))
        .collect();
    Ok(to_string(json!({
        "vendor": vendor,
        "current": prices[vendor],
        "budget": game.budget(),
        "breakpoints": profile.breakpoints,
        "samples": samples,
    })))
}

#[wasm_bindgen]
pub fn presets() -> String {
    presets_report()
}

#[wasm_bindgen(js_name = demand)]
pub fn demand_js(game: &str, prices: &str) -> Result<String, JsError> {
    demand_report(game, prices).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify(game: &str, prices: &str) -> Result<String, JsError> {
    verify_report(game, prices).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = deviationProfile)]
pub fn deviation_profile_js(game: &str, prices: &str, vendor: usize) -> Result<String, JsError> {
    profile_report(game, prices, vendor).map_err(|e| JsError::new(&e))
}
