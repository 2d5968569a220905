//! Browser bindings: three small experiments on a generated CSBM graph, each
//! returning a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use spgcl::augment::drop_edges;
use spgcl::contrastive::{build_transformed_graph, embed, hop_pool, mine_positives, TrainConfig};
use spgcl::encoder::init_params;
use spgcl::graph::{edge_homophily, node_homophily};
use spgcl::rng::rng_from_seed;
use spgcl::spectral::{band_distances, LaplacianSource};
use spgcl::synth::{generate_csbm, CsbmParams};

const FEATURES: usize = 16;

fn csbm(n: usize, p: f64, s: f64, mu: f64, seed: u64) -> spgcl::Result<CsbmParams> {
    if n > 1500 {
        return Err(spgcl::Error::Config(format!("n = {n} is too large for the demo (max 1500)")));
    }
    Ok(CsbmParams::two_class(n, p, s, mu, FEATURES, seed))
}

/// Edge count and homophily of one CSBM draw.
pub fn graph_summary(n: usize, p: f64, s: f64, mu: f64, seed: u64) -> spgcl::Result<Value> {
    let (g, _, y) = generate_csbm(&csbm(n, p, s, mu, seed)?)?;
    Ok(json!({
        "nodes": g.num_nodes(),
        "edges": g.num_edges(),
        "mean_degree": g.mean_degree(),
        "edge_homophily": edge_homophily(&g, &y).ok(),
        "node_homophily": node_homophily(&g, &y).ok(),
    }))
}

/// Edge homophily of the graph built from positives mined with a freshly
/// initialised encoder, next to that of the input graph.
pub fn transformed_homophily(n: usize, p: f64, s: f64, mu: f64, k_pos: usize, seed: u64) -> spgcl::Result<Value> {
    let (g, x, y) = generate_csbm(&csbm(n, p, s, mu, seed)?)?;
    let cfg = TrainConfig {
        k_pos,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let params = init_params(cfg.encoder_shape(x.dim()), false, seed)?;
    let z = embed(&params, &g, &x)?.z;
    let seeds: Vec<usize> = (0..n).collect();
    let pool = hop_pool(&g, &seeds, cfg.hops);
    let pos = mine_positives(&z, &seeds, &pool, k_pos)?;
    let tg = build_transformed_graph(&pos, n)?;
    Ok(json!({
        "original": edge_homophily(&g, &y)?,
        "transformed": tg.edge_homophily(&y)?,
        "positive_pairs": pos.num_pairs(),
    }))
}

/// Per-band Laplacian distance after dropping a fraction of edges.
pub fn edge_drop_bands(n: usize, p: f64, s: f64, ratio: f64, bands: usize, seed: u64) -> spgcl::Result<Value> {
    if n > 400 {
        return Err(spgcl::Error::Config(format!("n = {n} is too large for the spectral demo (max 400)")));
    }
    let (g, _, _) = generate_csbm(&csbm(n, p, s, 1.0, seed)?)?;
    let h = drop_edges(&g, ratio, &mut rng_from_seed(seed.wrapping_add(1)))?;
    let d = band_distances(LaplacianSource::Graph(&g), LaplacianSource::Graph(&h), bands)?;
    Ok(json!({ "edges_before": g.num_edges(), "edges_after": h.num_edges(), "distances": d }))
}

fn to_js(r: spgcl::Result<Value>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = graphSummary)]
pub fn graph_summary_js(n: usize, p: f64, s: f64, mu: f64, seed: u32) -> Result<String, JsValue> {
    to_js(graph_summary(n, p, s, mu, seed.into()))
}

#[wasm_bindgen(js_name = transformedHomophily)]
pub fn transformed_homophily_js(n: usize, p: f64, s: f64, mu: f64, k_pos: usize, seed: u32) -> Result<String, JsValue> {
    to_js(transformed_homophily(n, p, s, mu, k_pos, seed.into()))
}

#[wasm_bindgen(js_name = edgeDropBands)]
pub fn edge_drop_bands_js(n: usize, p: f64, s: f64, ratio: f64, bands: usize, seed: u32) -> Result<String, JsValue> {
    to_js(edge_drop_bands(n, p, s, ratio, bands, seed.into()))
}
