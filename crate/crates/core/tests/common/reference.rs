//! Values computed with SciPy (`scipy.stats.kruskal`, `scipy.stats.chi2.sf`).

use serde::Deserialize;

#[derive(Deserialize)]
pub struct KwCase {
    pub groups: Vec<Vec<f64>>,
    pub h: f64,
    pub p: f64,
}

#[derive(Deserialize)]
pub struct SfCase {
    pub x: f64,
    pub df: u32,
    pub p: f64,
}

#[derive(Deserialize)]
pub struct Reference {
    pub kruskal: Vec<KwCase>,
    pub chi2_sf: Vec<SfCase>,
}

pub fn scipy() -> Reference {
    serde_json::from_str(include_str!("../fixtures/scipy_reference.json")).unwrap()
}
